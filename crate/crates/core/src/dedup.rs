//! Cited-reference variant clustering and curator-controlled merging.
//!
//! Suggestions never change anything by themselves. Only decisions recorded in
//! a [`MergeMap`] affect downstream counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::ingest::{parse_cited_ref, CitedRefFields};

pub const DEFAULT_THRESHOLD: f64 = 0.75;

#[derive(Debug, Error)]
pub enum DedupError {
    #[error("similarity threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("merge chain: {variant:?} maps to {canonical:?}, which maps to {next:?}")]
    Chain { variant: String, canonical: String, next: String },
    #[error("{0:?} is mapped to itself")]
    SelfMapping(String),
    #[error("canonical {0:?} is not a member of the cluster")]
    NotAMember(String),
    #[error("an edit decision needs a canonical string")]
    MissingCanonical,
    #[error("malformed merge map: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One reference variant with the number of citing records listing it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariantCount {
    pub fields: CitedRefFields,
    pub count: u64,
}

impl VariantCount {
    pub fn new(raw: &str, count: u64) -> Self {
        VariantCount { fields: parse_cited_ref(raw), count }
    }

    pub fn raw(&self) -> &str {
        &self.fields.raw
    }
}

/// Unique reference variants of a corpus, sorted by raw string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefTable {
    pub rows: Vec<VariantCount>,
}

impl RefTable {
    /// Counts, for every distinct raw reference string, the records citing it.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for rec in corpus.records() {
            let distinct: BTreeSet<&str> = rec.cited_refs.iter().map(String::as_str).collect();
            for raw in distinct {
                *counts.entry(raw).or_default() += 1;
            }
        }
        RefTable { rows: counts.into_iter().map(|(raw, n)| VariantCount::new(raw, n)).collect() }
    }

    /// Builds a table from `(raw, count)` pairs; duplicate raws are summed.
    pub fn from_counts<'a, I: IntoIterator<Item = (&'a str, u64)>>(pairs: I) -> Self {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for (raw, n) in pairs {
            *counts.entry(raw).or_default() += n;
        }
        RefTable { rows: counts.into_iter().map(|(raw, n)| VariantCount::new(raw, n)).collect() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn get(&self, raw: &str) -> Option<&VariantCount> {
        self.rows
            .binary_search_by(|r| r.raw().cmp(raw))
            .ok()
            .map(|i| &self.rows[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterStatus {
    Pending,
    Accepted,
    Rejected,
    Edited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefCluster {
    pub cluster_id: u32,
    pub rpy: Option<i32>,
    /// sorted by raw string
    pub members: Vec<VariantCount>,
    /// index into `members`
    pub suggested_canonical: usize,
    pub status: ClusterStatus,
}

impl RefCluster {
    pub fn suggested(&self) -> &str {
        self.members[self.suggested_canonical].raw()
    }

    pub fn contains(&self, raw: &str) -> bool {
        self.members.iter().any(|m| m.raw() == raw)
    }
}

/// Comparison key: first author and source, case-folded, punctuation removed.
pub fn match_key(fields: &CitedRefFields) -> String {
    let joined = format!(
        "{} {}",
        fields.first_author.as_deref().unwrap_or(""),
        fields.source.as_deref().unwrap_or("")
    );
    let cleaned: String = joined
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Similarity of two variants' match keys (1 minus normalized edit distance).
pub fn similarity(a: &CitedRefFields, b: &CitedRefFields) -> f64 {
    strsim::normalized_levenshtein(&match_key(a), &match_key(b))
}

fn compatible(a: &Option<String>, b: &Option<String>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x.eq_ignore_ascii_case(y),
        _ => true,
    }
}

/// Whether two variants are directly linked under the clustering rule.
pub fn linked(a: &CitedRefFields, b: &CitedRefFields, threshold: f64, use_volume_page: bool) -> bool {
    if a.rpy != b.rpy {
        return false;
    }
    if use_volume_page {
        if let (Some(ka), Some(kb)) = (locator_key(a), locator_key(b)) {
            if ka == kb {
                return true;
            }
        }
        if !compatible(&a.volume, &b.volume) || !compatible(&a.page, &b.page) {
            return false;
        }
    }
    similarity(a, b) >= threshold
}

/// `(volume, page, doi-or-source)`; present only when all three are known.
fn locator_key(f: &CitedRefFields) -> Option<(String, String, String)> {
    let ident = match (&f.doi, &f.source) {
        (Some(doi), _) => format!("doi:{}", doi.to_lowercase()),
        (None, Some(src)) => format!("src:{}", match_key(&CitedRefFields { source: Some(src.clone()), ..Default::default() })),
        (None, None) => return None,
    };
    Some((f.volume.as_ref()?.to_uppercase(), f.page.as_ref()?.to_uppercase(), ident))
}

fn components(group: &[&VariantCount], threshold: f64, use_volume_page: bool) -> Vec<Vec<usize>> {
    let n = group.len();
    let keys: Vec<Vec<char>> = group.iter().map(|v| match_key(&v.fields).chars().collect()).collect();
    let mut uf = UnionFind::<usize>::new(n);

    if use_volume_page {
        let mut by_locator: HashMap<(String, String, String), usize> = HashMap::new();
        for (i, v) in group.iter().enumerate() {
            if let Some(k) = locator_key(&v.fields) {
                let first = *by_locator.entry(k).or_insert(i);
                uf.union(first, i);
            }
        }
    }

    // Edit distance is at least the length difference, so similarity is
    // bounded by shorter/longer and pairs past that bound can be skipped.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (keys[i].len(), i));
    for (oi, &i) in order.iter().enumerate() {
        for &j in &order[oi + 1..] {
            let (li, lj) = (keys[i].len(), keys[j].len());
            if lj > 0 && (li as f64) < threshold * lj as f64 - 1e-12 {
                break;
            }
            let (a, b) = (&group[i].fields, &group[j].fields);
            if use_volume_page && (!compatible(&a.volume, &b.volume) || !compatible(&a.page, &b.page)) {
                continue;
            }
            if uf.equiv(i, j) {
                continue;
            }
            let sim = strsim::generic_levenshtein(&keys[i], &keys[j]);
            let max = li.max(lj);
            let s = if max == 0 { 1.0 } else { 1.0 - sim as f64 / max as f64 };
            if s >= threshold {
                uf.union(i, j);
            }
        }
    }

    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        comps.entry(uf.find(i)).or_default().push(i);
    }
    comps.into_values().filter(|c| c.len() >= 2).collect()
}

/// Groups variants into clusters of two or more linked members.
///
/// Variants are linked when they share a publication year and their match keys
/// reach `threshold` similarity. With `use_volume_page`, known volumes and
/// pages must also agree, and variants with identical volume, page and
/// DOI (or source) are linked whatever their author spelling. Clusters are the
/// connected components of these links, numbered from 1 in order of their
/// smallest member.
pub fn suggest_clusters(
    refs: &[VariantCount],
    threshold: f64,
    use_volume_page: bool,
) -> Result<Vec<RefCluster>, DedupError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(DedupError::Threshold(threshold));
    }
    let mut sorted: Vec<&VariantCount> = refs.iter().collect();
    sorted.sort_by(|a, b| a.raw().cmp(b.raw()).then(b.count.cmp(&a.count)));
    let mut groups: BTreeMap<Option<i32>, Vec<&VariantCount>> = BTreeMap::new();
    for v in sorted {
        groups.entry(v.fields.rpy).or_default().push(v);
    }
    let groups: Vec<(Option<i32>, Vec<&VariantCount>)> = groups.into_iter().collect();

    let mut clusters: Vec<RefCluster> = groups
        .par_iter()
        .flat_map_iter(|(rpy, group)| {
            components(group, threshold, use_volume_page).into_iter().map(move |comp| {
                let members: Vec<VariantCount> = comp.iter().map(|&i| group[i].clone()).collect();
                let mut best = 0;
                for (i, m) in members.iter().enumerate() {
                    if m.count > members[best].count {
                        best = i;
                    }
                }
                RefCluster { cluster_id: 0, rpy: *rpy, members, suggested_canonical: best, status: ClusterStatus::Pending }
            })
        })
        .collect();
    clusters.sort_by(|a, b| a.members[0].raw().cmp(b.members[0].raw()));
    for (i, c) in clusters.iter_mut().enumerate() {
        c.cluster_id = i as u32 + 1;
    }
    Ok(clusters)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
    Edit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub variant: String,
    pub canonical: String,
    pub decision: Decision,
    /// RFC 3339, UTC
    pub timestamp: String,
}

/// Curator decisions and the variant-to-canonical mapping they produce.
///
/// The mapping never contains chains or self-entries: canonical strings are
/// implicit fixed points.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeMap {
    mapping: BTreeMap<String, String>,
    audit: Vec<AuditEntry>,
}

pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl MergeMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps a raw mapping without checking it. Use [`MergeMap::validate`]
    /// before relying on it.
    pub fn from_mapping(mapping: BTreeMap<String, String>) -> Self {
        MergeMap { mapping, audit: Vec::new() }
    }

    /// Rebuilds a map by replaying an audit log in order.
    pub fn from_decisions(entries: Vec<AuditEntry>) -> Self {
        let mut map = MergeMap::new();
        for e in entries {
            map.record(&e.variant, &e.canonical, e.decision, e.timestamp);
        }
        map
    }

    pub fn mapping(&self) -> &BTreeMap<String, String> {
        &self.mapping
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn canonical<'a>(&'a self, raw: &'a str) -> &'a str {
        self.mapping.get(raw).map_or(raw, String::as_str)
    }

    /// Records one decision about `variant`.
    ///
    /// Accept and edit point `variant` at `canonical`, re-pointing anything
    /// that previously pointed at `variant`. Reject removes a mapping from
    /// `variant` to `canonical` if there is one.
    pub fn record(&mut self, variant: &str, canonical: &str, decision: Decision, timestamp: String) {
        match decision {
            Decision::Accept | Decision::Edit => {
                if variant == canonical {
                    self.mapping.remove(variant);
                } else {
                    let mut target = self.canonical(canonical).to_string();
                    if target == variant {
                        self.mapping.remove(canonical);
                        target = canonical.to_string();
                    }
                    for v in self.mapping.values_mut() {
                        if v == variant {
                            *v = target.clone();
                        }
                    }
                    self.mapping.insert(variant.to_string(), target);
                }
            }
            Decision::Reject => {
                if self.mapping.get(variant).is_some_and(|c| c == canonical) {
                    self.mapping.remove(variant);
                }
            }
        }
        self.audit.push(AuditEntry {
            variant: variant.to_string(),
            canonical: canonical.to_string(),
            decision,
            timestamp,
        });
    }

    /// Applies a curator decision to every member of a cluster.
    ///
    /// `accept` merges onto `canonical` (which must be a member) or the
    /// suggested member; `edit` merges onto an arbitrary `canonical`; `reject`
    /// undoes merges onto the suggested member. Returns the resulting status.
    pub fn decide(
        &mut self,
        cluster: &RefCluster,
        decision: Decision,
        canonical: Option<&str>,
        timestamp: &str,
    ) -> Result<ClusterStatus, DedupError> {
        let target = match (decision, canonical) {
            (Decision::Edit, None) => return Err(DedupError::MissingCanonical),
            (Decision::Accept, Some(c)) if !cluster.contains(c) => return Err(DedupError::NotAMember(c.to_string())),
            (_, Some(c)) => c.to_string(),
            (_, None) => cluster.suggested().to_string(),
        };
        for m in &cluster.members {
            if m.raw() != target || decision == Decision::Reject {
                self.record(m.raw(), &target, decision, timestamp.to_string());
            }
        }
        if decision == Decision::Edit && !cluster.contains(&target) {
            // the edited string is its own canonical
            self.mapping.remove(&target);
        }
        Ok(match decision {
            Decision::Accept => ClusterStatus::Accepted,
            Decision::Reject => ClusterStatus::Rejected,
            Decision::Edit => ClusterStatus::Edited,
        })
    }

    pub fn validate(&self) -> Result<(), DedupError> {
        for (variant, canonical) in &self.mapping {
            if variant == canonical {
                return Err(DedupError::SelfMapping(variant.clone()));
            }
            if let Some(next) = self.mapping.get(canonical) {
                return Err(DedupError::Chain {
                    variant: variant.clone(),
                    canonical: canonical.clone(),
                    next: next.clone(),
                });
            }
        }
        Ok(())
    }

    /// Short content hash of the mapping; identifies the merge state in
    /// table provenance.
    pub fn version(&self) -> String {
        let mut h = Sha256::new();
        for (v, c) in &self.mapping {
            h.update(v.as_bytes());
            h.update([0]);
            h.update(c.as_bytes());
            h.update([1]);
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.audit).expect("audit entries serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, DedupError> {
        Ok(Self::from_decisions(serde_json::from_str(text)?))
    }

    pub fn load(path: &Path) -> Result<Self, DedupError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DedupError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Sums merged variants onto their canonical rows.
///
/// Total count is conserved and applying the same map twice equals applying
/// it once. A canonical absent from the table gets a new row.
pub fn apply_merges(table: &RefTable, merges: &MergeMap) -> Result<RefTable, DedupError> {
    merges.validate()?;
    let mut out: BTreeMap<&str, VariantCount> = BTreeMap::new();
    for row in &table.rows {
        let canonical = merges.canonical(row.raw());
        out.entry(canonical)
            .or_insert_with(|| match table.get(canonical) {
                Some(existing) => VariantCount { fields: existing.fields.clone(), count: 0 },
                None => VariantCount::new(canonical, 0),
            })
            .count += row.count;
    }
    Ok(RefTable { rows: out.into_values().collect() })
}
