//! Keyword co-occurrence and country co-authorship networks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::ingest::CitingRecord;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("cannot cluster an empty graph")]
    EmptyGraph,
    #[error("malformed graph file at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Keyword,
    Country,
}

/// Construction thresholds recorded with a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GraphParams {
    Keyword { min_occurrences: u64, max_nodes: Option<usize> },
    Country { min_pubs: u64, max_countries_per_paper: usize, drop_disconnected: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub label: String,
    pub weight: u64,
    /// mean publication year of the papers behind `weight`
    pub score: Option<f64>,
    pub cluster: Option<u32>,
}

/// Undirected edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiblioGraph {
    pub kind: GraphKind,
    /// absent for imported graphs
    pub params: Option<GraphParams>,
    /// sorted by label
    pub nodes: Vec<Node>,
    /// sorted by `(a, b)`
    pub edges: Vec<Edge>,
}

impl BiblioGraph {
    /// Sum of incident edge weights per node.
    pub fn link_strength(&self) -> Vec<u64> {
        let mut s = vec![0; self.nodes.len()];
        for e in &self.edges {
            s[e.a] += e.weight;
            s[e.b] += e.weight;
        }
        s
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    pub fn edge_weight(&self, a: usize, b: usize) -> u64 {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.a, e.b).cmp(&(a, b)))
            .map_or(0, |i| self.edges[i].weight)
    }

    /// Keeps the nodes at `keep` (ascending indices), remapping edges.
    fn restrict(&mut self, keep: &[usize]) {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        self.nodes = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        self.edges = self
            .edges
            .iter()
            .filter(|e| remap[e.a] != usize::MAX && remap[e.b] != usize::MAX)
            .map(|e| Edge { a: remap[e.a], b: remap[e.b], weight: e.weight })
            .collect();
    }
}

type PairCounts = HashMap<(usize, usize), u64>;

fn count_pairs<'a, F>(records: &'a [CitingRecord], items: F) -> Vec<Edge>
where
    F: Fn(&'a CitingRecord) -> Vec<usize> + Sync,
{
    let counts: PairCounts = records
        .par_iter()
        .fold(PairCounts::new, |mut acc, rec| {
            let ids = items(rec);
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    *acc.entry((a, b)).or_default() += 1;
                }
            }
            acc
        })
        .reduce(PairCounts::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let mut edges: Vec<Edge> = counts.into_iter().map(|((a, b), weight)| Edge { a, b, weight }).collect();
    edges.sort_unstable();
    edges
}

fn count_labels<'a, I, F>(records: &'a [CitingRecord], labels: F) -> BTreeMap<&'a str, u64>
where
    F: Fn(&'a CitingRecord) -> Option<I> + Sync,
    I: Iterator<Item = &'a String>,
{
    records
        .par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<&str, u64>, rec| {
            for l in labels(rec).into_iter().flatten() {
                *acc.entry(l.as_str()).or_default() += 1;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        })
}

/// Keyword-plus co-occurrence network.
///
/// A keyword becomes a node when at least `min_occurrences` records carry it;
/// edge weights count records carrying both endpoints. With `max_nodes`, only
/// that many nodes with the greatest total link strength are kept (ties
/// broken alphabetically).
pub fn keyword_cooccurrence(
    corpus: &Corpus,
    min_occurrences: u64,
    max_nodes: Option<usize>,
) -> Result<BiblioGraph, GraphError> {
    if min_occurrences < 1 {
        return Err(GraphError::InvalidParam("min_occurrences must be at least 1".into()));
    }
    let records = corpus.records();
    let occ = count_labels(records, |r| Some(r.keywords_plus.iter()));
    let nodes: Vec<Node> = occ
        .iter()
        .filter(|&(_, &n)| n >= min_occurrences)
        .map(|(&label, &weight)| Node { label: label.to_string(), weight, score: None, cluster: None })
        .collect();
    let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.label.as_str(), i)).collect();
    let edges = count_pairs(records, |r| {
        // keywords_plus is sorted and so is `nodes`, so ids come out ascending
        r.keywords_plus.iter().filter_map(|k| index.get(k.as_str()).copied()).collect()
    });
    let mut graph = BiblioGraph {
        kind: GraphKind::Keyword,
        params: Some(GraphParams::Keyword { min_occurrences, max_nodes }),
        nodes,
        edges,
    };
    if let Some(max) = max_nodes {
        if graph.nodes.len() > max {
            let strength = graph.link_strength();
            let mut order: Vec<usize> = (0..graph.nodes.len()).collect();
            order.sort_by(|&x, &y| strength[y].cmp(&strength[x]).then_with(|| graph.nodes[x].label.cmp(&graph.nodes[y].label)));
            let mut keep = order[..max].to_vec();
            keep.sort_unstable();
            graph.restrict(&keep);
        }
    }
    Ok(graph)
}

fn eligible(rec: &CitingRecord, max_countries: usize) -> bool {
    rec.countries.len() <= max_countries
}

/// Country co-authorship network (full counting).
///
/// Papers listing more than `max_countries_per_paper` countries are ignored.
/// A node's weight counts every remaining paper listing the country, but a
/// country is only kept when at least `min_pubs` of its papers list two or
/// more countries. With `drop_disconnected`, only the largest connected
/// component survives.
pub fn country_coauthorship(
    corpus: &Corpus,
    min_pubs: u64,
    max_countries_per_paper: usize,
    drop_disconnected: bool,
) -> Result<BiblioGraph, GraphError> {
    if min_pubs < 1 {
        return Err(GraphError::InvalidParam("min_pubs must be at least 1".into()));
    }
    if max_countries_per_paper < 2 {
        return Err(GraphError::InvalidParam("max_countries_per_paper must be at least 2".into()));
    }
    let records = corpus.records();
    let weight = count_labels(records, |r| eligible(r, max_countries_per_paper).then(|| r.countries.iter()));
    let copubs = count_labels(records, |r| {
        (eligible(r, max_countries_per_paper) && r.countries.len() >= 2).then(|| r.countries.iter())
    });
    let nodes: Vec<Node> = weight
        .iter()
        .filter(|(label, _)| copubs.get(*label).copied().unwrap_or(0) >= min_pubs)
        .map(|(&label, &weight)| Node { label: label.to_string(), weight, score: None, cluster: None })
        .collect();
    let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.label.as_str(), i)).collect();
    let edges = count_pairs(records, |r| {
        if !eligible(r, max_countries_per_paper) {
            return Vec::new();
        }
        r.countries.iter().filter_map(|c| index.get(c.as_str()).copied()).collect()
    });
    let mut graph = BiblioGraph {
        kind: GraphKind::Country,
        params: Some(GraphParams::Country { min_pubs, max_countries_per_paper, drop_disconnected }),
        nodes,
        edges,
    };
    if drop_disconnected && !graph.nodes.is_empty() {
        let n = graph.nodes.len();
        let mut uf = UnionFind::<usize>::new(n);
        for e in &graph.edges {
            uf.union(e.a, e.b);
        }
        let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            comps.entry(uf.find(i)).or_default().push(i);
        }
        // largest first; equal sizes fall back to the earliest label
        let keep = comps
            .into_values()
            .max_by(|x, y| x.len().cmp(&y.len()).then(y[0].cmp(&x[0])))
            .unwrap_or_default();
        graph.restrict(&keep);
    }
    Ok(graph)
}

/// Sets each node's score to the mean publication year of the papers counted
/// in its weight.
pub fn overlay_mean_year(graph: &BiblioGraph, corpus: &Corpus) -> BiblioGraph {
    let index: HashMap<&str, usize> = graph.nodes.iter().enumerate().map(|(i, n)| (n.label.as_str(), i)).collect();
    let max_countries = match graph.params {
        Some(GraphParams::Country { max_countries_per_paper, .. }) => max_countries_per_paper,
        _ => usize::MAX,
    };
    let mut sums = vec![(0i64, 0u64); graph.nodes.len()];
    for rec in corpus.records() {
        let labels: Box<dyn Iterator<Item = &String>> = match graph.kind {
            GraphKind::Keyword => Box::new(rec.keywords_plus.iter()),
            GraphKind::Country if eligible(rec, max_countries) => Box::new(rec.countries.iter()),
            GraphKind::Country => Box::new(std::iter::empty()),
        };
        for l in labels {
            if let Some(&i) = index.get(l.as_str()) {
                sums[i].0 += rec.pub_year as i64;
                sums[i].1 += 1;
            }
        }
    }
    let mut out = graph.clone();
    for (node, (sum, n)) in out.nodes.iter_mut().zip(sums) {
        node.score = (n > 0).then(|| sum as f64 / n as f64);
    }
    out
}

/// Newman modularity of a partition with resolution `gamma`:
/// `sum over clusters of L_c / m - gamma * (D_c / 2m)^2`.
/// Zero for a graph without edges.
pub fn modularity(graph: &BiblioGraph, membership: &[usize], gamma: f64) -> f64 {
    let m: f64 = graph.edges.iter().map(|e| e.weight as f64).sum();
    if m == 0.0 {
        return 0.0;
    }
    let mut internal: HashMap<usize, f64> = HashMap::new();
    let mut degree: HashMap<usize, f64> = HashMap::new();
    for e in &graph.edges {
        let w = e.weight as f64;
        if membership[e.a] == membership[e.b] {
            *internal.entry(membership[e.a]).or_default() += w;
        }
        *degree.entry(membership[e.a]).or_default() += w;
        *degree.entry(membership[e.b]).or_default() += w;
    }
    let mut clusters: Vec<usize> = degree.keys().copied().collect();
    clusters.sort_unstable();
    clusters
        .iter()
        .map(|c| internal.get(c).copied().unwrap_or(0.0) / m - gamma * (degree[c] / (2.0 * m)).powi(2))
        .sum()
}

const GAIN_EPS: f64 = 1e-12;

/// gain, merged pair, tie-break ranks
type Candidate = (f64, (usize, usize), (usize, usize));

/// Greedy agglomerative modularity maximization (Clauset, Newman and Moore)
/// with a resolution parameter.
///
/// Starting from singletons, the pair of adjacent clusters with the largest
/// gain is merged while the gain is positive. Ties between equal gains are
/// broken by a permutation drawn from `seed`. If the single-cluster partition
/// scores higher than the greedy result, it is returned instead. Cluster ids
/// run from 1 by descending size.
pub fn cluster_graph(graph: &BiblioGraph, resolution: f64, seed: u64) -> Result<BiblioGraph, GraphError> {
    if graph.nodes.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(GraphError::InvalidParam(format!("resolution must be positive, got {resolution}")));
    }
    let n = graph.nodes.len();
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let m: f64 = graph.edges.iter().map(|e| e.weight as f64).sum();
    let mut membership: Vec<usize> = (0..n).collect();
    if m > 0.0 {
        let mut degree = vec![0.0; n];
        let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for e in &graph.edges {
            let w = e.weight as f64;
            degree[e.a] += w;
            degree[e.b] += w;
            *links[e.a].entry(e.b).or_default() += w;
            *links[e.b].entry(e.a).or_default() += w;
        }
        let mut alive: BTreeSet<usize> = (0..n).collect();
        loop {
            let mut best: Option<Candidate> = None;
            for &i in &alive {
                for (&j, &w) in links[i].range(i + 1..) {
                    let gain = w / m - 2.0 * resolution * (degree[i] / (2.0 * m)) * (degree[j] / (2.0 * m));
                    let tie = (rank[i].min(rank[j]), rank[i].max(rank[j]));
                    let better = match best {
                        None => true,
                        Some((g, _, t)) => gain > g + GAIN_EPS || ((gain - g).abs() <= GAIN_EPS && tie < t),
                    };
                    if better {
                        best = Some((gain, (i, j), tie));
                    }
                }
            }
            let Some((gain, (keep, gone), _)) = best else { break };
            if gain <= GAIN_EPS {
                break;
            }
            // fold `gone` into `keep`
            let moved = std::mem::take(&mut links[gone]);
            for (k, w) in moved {
                links[k].remove(&gone);
                if k != keep {
                    *links[keep].entry(k).or_default() += w;
                    *links[k].entry(keep).or_default() += w;
                }
            }
            links[keep].remove(&gone);
            degree[keep] += degree[gone];
            alive.remove(&gone);
            rank[keep] = rank[keep].min(rank[gone]);
            for c in membership.iter_mut() {
                if *c == gone {
                    *c = keep;
                }
            }
        }
        let one = vec![0; n];
        if modularity(graph, &one, resolution) > modularity(graph, &membership, resolution) + GAIN_EPS {
            membership = one;
        }
    }

    let mut sizes: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (node, &c) in membership.iter().enumerate() {
        let entry = sizes.entry(c).or_insert((0, node));
        entry.0 += 1;
    }
    let mut order: Vec<(usize, (usize, usize))> = sizes.into_iter().collect();
    order.sort_by(|x, y| y.1 .0.cmp(&x.1 .0).then(x.1 .1.cmp(&y.1 .1)));
    let ids: HashMap<usize, u32> = order.iter().enumerate().map(|(i, (c, _))| (*c, i as u32 + 1)).collect();
    let mut out = graph.clone();
    for (node, c) in out.nodes.iter_mut().zip(&membership) {
        node.cluster = Some(ids[c]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphFormat {
    GraphJson,
    Pajek,
}

impl std::str::FromStr for GraphFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" | "graph_json" | "graph-json" => Ok(GraphFormat::GraphJson),
            "pajek" | "net" => Ok(GraphFormat::Pajek),
            _ => Err(GraphError::InvalidParam(format!("unknown graph format {s:?}"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonItem {
    id: usize,
    label: String,
    weight: u64,
    score: Option<f64>,
    cluster: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonLink {
    source_id: usize,
    target_id: usize,
    strength: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonGraph {
    items: Vec<JsonItem>,
    links: Vec<JsonLink>,
}

/// `{items: [{id, label, weight, score, cluster}], links: [{source_id,
/// target_id, strength}]}` with 1-based ids.
pub fn to_graph_json(graph: &BiblioGraph) -> serde_json::Value {
    let doc = JsonGraph {
        items: graph
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| JsonItem { id: i + 1, label: n.label.clone(), weight: n.weight, score: n.score, cluster: n.cluster })
            .collect(),
        links: graph
            .edges
            .iter()
            .map(|e| JsonLink { source_id: e.a + 1, target_id: e.b + 1, strength: e.weight })
            .collect(),
    };
    serde_json::to_value(doc).expect("graph serializes")
}

pub fn to_pajek(graph: &BiblioGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "*Vertices {}", graph.nodes.len());
    for (i, n) in graph.nodes.iter().enumerate() {
        let _ = writeln!(out, "{} \"{}\"", i + 1, n.label);
    }
    let _ = writeln!(out, "*Edges");
    for e in &graph.edges {
        let _ = writeln!(out, "{} {} {}", e.a + 1, e.b + 1, e.weight);
    }
    out
}

pub fn export_graph(graph: &BiblioGraph, format: GraphFormat) -> String {
    match format {
        GraphFormat::GraphJson => {
            serde_json::to_string_pretty(&to_graph_json(graph)).expect("graph serializes") + "\n"
        }
        GraphFormat::Pajek => to_pajek(graph),
    }
}

fn canonical_edges(n: usize, raw: impl IntoIterator<Item = (usize, usize, u64)>, line: usize) -> Result<Vec<Edge>, GraphError> {
    let mut edges = BTreeMap::new();
    for (s, t, w) in raw {
        if s == 0 || t == 0 || s > n || t > n || s == t {
            return Err(GraphError::Format { line, message: format!("bad edge {s}-{t}") });
        }
        let (a, b) = if s < t { (s - 1, t - 1) } else { (t - 1, s - 1) };
        *edges.entry((a, b)).or_insert(0) += w;
    }
    Ok(edges.into_iter().map(|((a, b), weight)| Edge { a, b, weight }).collect())
}

pub fn import_graph(text: &str, format: GraphFormat, kind: GraphKind) -> Result<BiblioGraph, GraphError> {
    match format {
        GraphFormat::GraphJson => {
            let doc: JsonGraph = serde_json::from_str(text)?;
            let mut items = doc.items;
            items.sort_by_key(|i| i.id);
            if items.iter().enumerate().any(|(k, i)| i.id != k + 1) {
                return Err(GraphError::Format { line: 0, message: "item ids must be 1..n".into() });
            }
            let edges = canonical_edges(items.len(), doc.links.iter().map(|l| (l.source_id, l.target_id, l.strength)), 0)?;
            let nodes = items
                .into_iter()
                .map(|i| Node { label: i.label, weight: i.weight, score: i.score, cluster: i.cluster })
                .collect();
            Ok(BiblioGraph { kind, params: None, nodes, edges })
        }
        GraphFormat::Pajek => parse_pajek(text, kind),
    }
}

fn parse_pajek(text: &str, kind: GraphKind) -> Result<BiblioGraph, GraphError> {
    enum Section {
        None,
        Vertices,
        Edges,
    }
    let mut section = Section::None;
    let mut labels: BTreeMap<usize, String> = BTreeMap::new();
    let mut raw_edges = Vec::new();
    let mut declared = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let bad = |message: &str| GraphError::Format { line: line_no, message: message.to_string() };
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let lower = t.to_ascii_lowercase();
        if lower.starts_with("*vertices") {
            declared = t[9..].trim().parse().map_err(|_| bad("bad vertex count"))?;
            section = Section::Vertices;
            continue;
        }
        if lower.starts_with("*edges") {
            section = Section::Edges;
            continue;
        }
        match section {
            Section::None => return Err(bad("expected *Vertices")),
            Section::Vertices => {
                let (id, rest) = t.split_once(char::is_whitespace).ok_or_else(|| bad("missing label"))?;
                let id: usize = id.parse().map_err(|_| bad("bad vertex id"))?;
                let rest = rest.trim();
                let label = match (rest.find('"'), rest.rfind('"')) {
                    (Some(open), Some(close)) if close > open => &rest[open + 1..close],
                    _ => rest,
                };
                labels.insert(id, label.to_string());
            }
            Section::Edges => {
                let parts: Vec<&str> = t.split_whitespace().collect();
                let num = |s: &str| s.parse::<u64>().map_err(|_| bad("bad edge field"));
                match parts.as_slice() {
                    [s, d] => raw_edges.push((num(s)? as usize, num(d)? as usize, 1)),
                    [s, d, w, ..] => raw_edges.push((num(s)? as usize, num(d)? as usize, num(w)?)),
                    _ => return Err(bad("edge needs two endpoints")),
                }
            }
        }
    }
    if labels.len() != declared || labels.keys().enumerate().any(|(k, &id)| id != k + 1) {
        return Err(GraphError::Format { line: 0, message: "vertex ids must be 1..n".into() });
    }
    let edges = canonical_edges(declared, raw_edges, 0)?;
    let nodes = labels.into_values().map(|label| Node { label, weight: 0, score: None, cluster: None }).collect();
    Ok(BiblioGraph { kind, params: None, nodes, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kw(id: &str, year: i32, kws: &[&str]) -> CitingRecord {
        let mut r = CitingRecord::new(id, year);
        r.keywords_plus = kws.iter().map(|s| s.to_string()).collect();
        r
    }

    fn co(id: &str, year: i32, countries: &[&str]) -> CitingRecord {
        let mut r = CitingRecord::new(id, year);
        r.countries = countries.iter().map(|s| s.to_string()).collect();
        r
    }

    #[test]
    fn two_records_two_keywords() {
        let c = Corpus::new(vec![kw("1", 2010, &["a", "b"]), kw("2", 2020, &["a", "b"])]).unwrap();
        let g = keyword_cooccurrence(&c, 1, None).unwrap();
        assert_eq!(g.nodes.iter().map(|n| n.weight).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!(g.edges, vec![Edge { a: 0, b: 1, weight: 2 }]);
        let g = overlay_mean_year(&g, &c);
        assert_eq!(g.nodes[0].score, Some(2015.0));
    }

    #[test]
    fn keyword_threshold_and_cap() {
        let mut recs = Vec::new();
        for i in 0..10 {
            let mut kws = vec!["ten"];
            if i < 9 {
                kws.push("nine");
            }
            if i < 3 {
                kws.push("three");
            }
            recs.push(kw(&i.to_string(), 2000, &kws));
        }
        let c = Corpus::new(recs).unwrap();
        let g = keyword_cooccurrence(&c, 10, None).unwrap();
        assert_eq!(g.nodes.iter().map(|n| n.label.as_str()).collect::<Vec<_>>(), vec!["ten"]);
        let g = keyword_cooccurrence(&c, 1, Some(2)).unwrap();
        assert_eq!(g.nodes.iter().map(|n| n.label.as_str()).collect::<Vec<_>>(), vec!["nine", "ten"]);
        assert_eq!(g.edges, vec![Edge { a: 0, b: 1, weight: 9 }]);
        assert!(keyword_cooccurrence(&c, 0, None).is_err());
    }

    #[test]
    fn countries_full_counting() {
        let mut recs: Vec<_> = (0..5).map(|i| co(&format!("p{i}"), 2010 + i, &["X", "Y"])).collect();
        recs.push(co("solo", 2000, &["X"]));
        recs.push(co("arm", 2000, &["ARMENIA", "Z"]));
        let big: Vec<String> = (0..30).map(|i| format!("C{i:02}")).collect();
        let mut r = CitingRecord::new("big", 2019);
        r.countries = big.into_iter().chain(["X".to_string(), "Y".to_string()]).collect();
        recs.push(r);
        let c = Corpus::new(recs).unwrap();

        let g = country_coauthorship(&c, 5, 25, false).unwrap();
        assert_eq!(g.nodes.iter().map(|n| (n.label.as_str(), n.weight)).collect::<Vec<_>>(), vec![("X", 6), ("Y", 5)]);
        assert_eq!(g.edges, vec![Edge { a: 0, b: 1, weight: 5 }]);
        let g = overlay_mean_year(&g, &c);
        assert_eq!(g.nodes[1].score, Some(2012.0));

        let g = country_coauthorship(&c, 1, 25, true).unwrap();
        assert_eq!(g.nodes.len(), 2);
        let g = country_coauthorship(&c, 1, 25, false).unwrap();
        assert_eq!(g.nodes.len(), 4);

        let solo = Corpus::new(vec![co("a", 2000, &["X"]), co("b", 2001, &["X"])]).unwrap();
        let g = country_coauthorship(&solo, 1, 25, true).unwrap();
        assert!(g.edges.is_empty() && g.nodes.len() <= 1);
        assert!(country_coauthorship(&c, 1, 1, true).is_err());
    }

    fn graph(n: usize, edges: &[(usize, usize, u64)]) -> BiblioGraph {
        BiblioGraph {
            kind: GraphKind::Keyword,
            params: None,
            nodes: (0..n).map(|i| Node { label: format!("n{i}"), weight: 1, score: None, cluster: None }).collect(),
            edges: canonical_edges(n, edges.iter().map(|&(a, b, w)| (a + 1, b + 1, w)), 0).unwrap(),
        }
    }

    #[test]
    fn disjoint_cliques_split() {
        let mut e = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    e.push((base + i, base + j, 1));
                }
            }
        }
        let g = cluster_graph(&graph(8, &e), 1.0, 7).unwrap();
        let ids: Vec<_> = g.nodes.iter().map(|n| n.cluster.unwrap()).collect();
        assert_eq!(ids, vec![1, 1, 1, 1, 2, 2, 2, 2]);
    }

    #[test]
    fn no_edges_gives_singletons() {
        let g = cluster_graph(&graph(3, &[]), 1.0, 0).unwrap();
        let ids: BTreeSet<_> = g.nodes.iter().map(|n| n.cluster.unwrap()).collect();
        assert_eq!(ids.len(), 3);
        assert!(matches!(cluster_graph(&graph(0, &[]), 1.0, 0), Err(GraphError::EmptyGraph)));
        assert!(cluster_graph(&graph(2, &[]), 0.0, 0).is_err());
    }

    #[test]
    fn pajek_round_trip() {
        let g = graph(3, &[(0, 1, 2), (1, 2, 5)]);
        let back = import_graph(&export_graph(&g, GraphFormat::Pajek), GraphFormat::Pajek, GraphKind::Keyword).unwrap();
        assert_eq!(back.edges, g.edges);
        assert_eq!(back.nodes.iter().map(|n| &n.label).collect::<Vec<_>>(), g.nodes.iter().map(|n| &n.label).collect::<Vec<_>>());
        let json = import_graph(&export_graph(&g, GraphFormat::GraphJson), GraphFormat::GraphJson, GraphKind::Keyword).unwrap();
        assert_eq!(json, g);
        let empty = graph(0, &[]);
        assert_eq!(export_graph(&empty, GraphFormat::Pajek), "*Vertices 0\n*Edges\n");
        assert_eq!(import_graph(&export_graph(&empty, GraphFormat::GraphJson), GraphFormat::GraphJson, GraphKind::Country).unwrap().nodes.len(), 0);
        assert!(import_graph("*Vertices 2\n1 \"a\"\n*Edges\n1 2\n", GraphFormat::Pajek, GraphKind::Keyword).is_err());
    }
}
