//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use biblioscope_core::corpus::Corpus;
use biblioscope_core::dedup::{apply_merges, Decision, MergeMap, RefTable};
use biblioscope_core::graph::keyword_cooccurrence;
use biblioscope_core::ingest::{parse_cited_ref, CitingRecord};
use biblioscope_core::query::{parse_script, run_script, SetTable};
use biblioscope_core::rpys::{
    build_cr_table, default_bands, n_top10, select_key_refs, spectrum, spectrum_from_totals, CrProvenance, CrRow,
    CrTable,
};
use biblioscope_core::synth::{reference_pool, synth_records, SynthConfig};
use biblioscope_core::trend::{country_table, Tenths};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// name, check, time budget
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

const WORDS: &[&str] = &[
    "heat", "wave", "waves", "heatwave", "hot", "spell", "climate", "warming", "mortality", "urban", "drought",
    "temperature", "extreme", "summer", "health", "greenhouse", "weather", "global",
];

fn set_algebra_identity() -> Outcome {
    let mut nontrivial = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = synth_records(seed, &SynthConfig { records: 400, max_refs: 0, ..Default::default() });
        let corpus = Corpus::new(records).map_err(|e| e.to_string())?;
        let w: Vec<&str> = WORDS.choose_multiple(&mut rng, 6).copied().collect();
        let script = format!(
            "#1 := TS=({} OR \"{} {}\" OR {}*)\n\
             #2 := #1 REFINED BY EXCLUDING WC=(PHYSICS APPLIED OR MECHANICS)\n\
             #3 := #1 NOT #2\n\
             #4 := #3 AND TS=({}* OR {})\n\
             #5 := #2 OR #4\n",
            w[0], w[1], w[2], &w[3][..3], &w[4][..2], w[5]
        );
        let statements = parse_script(&script).map_err(|e| e.to_string())?;
        let mut sets = SetTable::new();
        run_script(&statements, &corpus, &mut sets).map_err(|e| e.to_string())?;
        let ids = |n: &str| sets[n].member_ids.clone();
        let (s1, s2, s3, s4, s5) = (ids("#1"), ids("#2"), ids("#3"), ids("#4"), ids("#5"));
        ensure(s3 == s1.difference(&s2).cloned().collect(), || format!("seed {seed}: S3 != S1 NOT S2"))?;
        ensure(s4.is_subset(&s3), || format!("seed {seed}: S4 not within S3"))?;
        ensure(s5.len() == s2.len() + s4.len(), || {
            format!("seed {seed}: |S2 OR S4| = {} but |S2| + |S4| = {}", s5.len(), s2.len() + s4.len())
        })?;
        if !s4.is_empty() && !s2.is_empty() {
            nontrivial += 1;
        }
    }
    ensure(nontrivial >= 50, || format!("only {nontrivial} corpora had both S2 and S4 non-empty"))?;
    Ok(format!("100 corpora, {nontrivial} with both sides non-empty"))
}

fn rpys_oracle() -> Outcome {
    let mut rows_checked = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let cfg = SynthConfig {
            records: rng.random_range(50..400),
            ref_pool: rng.random_range(50..=2000),
            max_refs: rng.random_range(1..40),
            ..Default::default()
        };
        let records = synth_records(seed, &cfg);
        let corpus = Corpus::new(records.clone()).map_err(|e| e.to_string())?;

        // merge a random tenth of the distinct references onto a same-year one
        let all: Vec<String> = records.iter().flat_map(|r| r.cited_refs.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
        let mut merges = MergeMap::new();
        for (i, raw) in all.iter().enumerate() {
            if rng.random_bool(0.1) {
                let year = oracle::ref_year(raw);
                if let Some(t) = all[..i].iter().rev().find(|t| oracle::ref_year(t) == year && merges.canonical(t) == t.as_str()) {
                    merges.record(raw, t, Decision::Accept, "2021-01-01T00:00:00Z".into());
                }
            }
        }
        let canon = |r: &str| merges.canonical(r).to_string();
        let min_count = rng.random_range(1..4);
        let table = build_cr_table(&corpus, &merges, 1900, min_count).map_err(|e| e.to_string())?;
        let want = oracle::cr_rows(&records, &canon, 1900, min_count);
        let got: Vec<(String, i32, u64)> = table.rows.iter().map(|r| (r.canonical_ref.raw.clone(), r.rpy, r.n_cr)).collect();
        ensure(got == want, || format!("seed {seed}: CR table differs from brute-force counts"))?;
        let spec: Vec<(i32, u64, i64, i64)> =
            spectrum(&table).iter().map(|p| (p.rpy, p.n_cr_total, p.median5.twice(), p.deviation.twice())).collect();
        ensure(spec == oracle::spectrum(&want), || format!("seed {seed}: spectrum differs from direct medians"))?;
        let top = n_top10(&table, &corpus, &merges);
        let want_top = oracle::n_top10(&records, &canon, &want);
        for r in &top.rows {
            ensure(r.n_top10 == want_top[&r.canonical_ref.raw], || format!("seed {seed}: N_TOP10 of {}", r.canonical_ref.raw))?;
        }
        rows_checked += table.rows.len();
    }
    Ok(format!("50 corpora, {rows_checked} rows"))
}

fn five_year_median() -> Outcome {
    let s = spectrum_from_totals(2000, &[10, 12, 368, 40, 20]);
    let center = s[2].deviation;
    ensure(center.twice() == 2 * 348, || format!("center deviation {center}"))?;
    ensure(oracle::twice_median(&[10, 12, 368, 40, 20]) == 40, || "oracle median".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let (start, step, len) = (rng.random_range(0..5000u64), rng.random_range(0..200u64), rng.random_range(5..60usize));
        let up: Vec<u64> = (0..len as u64).map(|i| start + i * step).collect();
        let down: Vec<u64> = up.iter().rev().copied().collect();
        for series in [up, down] {
            let s = spectrum_from_totals(1950, &series);
            ensure(s[2..len - 2].iter().all(|p| p.deviation.twice() == 0), || format!("progression {series:?}"))?;
        }
    }
    Ok(format!("center deviation {center}, 1000 progressions flat"))
}

fn row(raw: String, rpy: i32, n_cr: u64) -> CrRow {
    CrRow { canonical_ref: parse_cited_ref(&raw), rpy, n_cr, n_top10: 0, selected: false }
}

fn band_selection() -> Outcome {
    let text = std::fs::read_to_string(data("key_references.csv")).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut embedded = BTreeSet::new();
    for (i, line) in text.lines().skip(1).enumerate() {
        let (rpy, n) = line.split_once(',').ok_or("bad key-reference line")?;
        let (rpy, n): (i32, u64) = (rpy.parse().map_err(|_| "bad rpy")?, n.parse().map_err(|_| "bad count")?);
        let raw = format!("KEY REF{i:03}, {rpy}, J KEY, V1, P{i}");
        embedded.insert(raw.clone());
        rows.push(row(raw, rpy, n));
    }
    // decoys just below each threshold and outside the bands
    let decoys = [(1950, 49), (1999, 49), (2000, 149), (2014, 149), (2015, 99), (2020, 99), (1949, 500), (2021, 500)];
    for (i, &(rpy, n)) in decoys.iter().enumerate() {
        rows.push(row(format!("DECOY{i}, {rpy}, J OTHER, V2, P{i}"), rpy, n));
    }
    rows.sort_by(|a, b| a.rpy.cmp(&b.rpy).then(b.n_cr.cmp(&a.n_cr)).then(a.canonical_ref.raw.cmp(&b.canonical_ref.raw)));
    let table = CrTable {
        rows,
        provenance: CrProvenance { min_rpy: 1900, min_count: 1, merge_map_version: String::new() },
    };
    let selected: BTreeSet<String> = select_key_refs(&table, &default_bands())
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|r| r.canonical_ref.raw)
        .collect();
    let stray: Vec<&String> = selected.difference(&embedded).collect();
    let missed: Vec<String> = table
        .rows
        .iter()
        .filter(|r| embedded.contains(&r.canonical_ref.raw) && !selected.contains(&r.canonical_ref.raw))
        .map(|r| format!("{}/{}", r.rpy, r.n_cr))
        .collect();
    ensure(embedded.len() == 104, || format!("fixture embeds {} rows", embedded.len()))?;
    ensure(stray.is_empty(), || format!("decoys selected: {stray:?}"))?;
    ensure(selected == embedded, || {
        format!("selected {} of {} embedded rows; not selected: {}", selected.len(), embedded.len(), missed.join(", "))
    })?;
    Ok("104 of 104 embedded rows, no decoys".into())
}

fn dedup_maps() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..1000 {
        let n = rng.random_range(1..60);
        let refs = reference_pool(&mut rng, n, 2020);
        let table = RefTable::from_counts(refs.iter().map(|r| (r.as_str(), rng.random_range(1..100u64))).collect::<Vec<_>>());
        let mut names = refs.clone();
        names.push("CURATED A, 2000, J".into());
        let mut map = MergeMap::new();
        for _ in 0..rng.random_range(0..80) {
            let (v, c) = (names.choose(&mut rng).unwrap(), names.choose(&mut rng).unwrap());
            let d = *[Decision::Accept, Decision::Accept, Decision::Edit, Decision::Reject].choose(&mut rng).unwrap();
            map.record(v, c, d, "2021-01-01T00:00:00Z".into());
        }
        ensure(map.validate().is_ok(), || format!("map {i}: recorded decisions produced a chain"))?;
        for (v, c) in map.mapping() {
            ensure(!map.mapping().contains_key(c), || format!("map {i}: {v} -> {c} is a chain"))?;
        }
        let once = apply_merges(&table, &map).map_err(|e| e.to_string())?;
        ensure(once.total() == table.total(), || format!("map {i}: total {} != {}", once.total(), table.total()))?;
        let twice = apply_merges(&once, &map).map_err(|e| e.to_string())?;
        ensure(twice == once, || format!("map {i}: second application changed the table"))?;

        // a hand-made chain must be refused
        let (a, b, c) = (&refs[0], "CHAIN MID, 2000, J", "CHAIN END, 2000, J");
        let chained = MergeMap::from_mapping(BTreeMap::from([(a.clone(), b.to_string()), (b.to_string(), c.to_string())]));
        ensure(chained.validate().is_err() && apply_merges(&table, &chained).is_err(), || format!("map {i}: chain accepted"))?;
    }
    Ok("1000 maps conserved and idempotent, chains refused".into())
}

fn percentage_rounding() -> Outcome {
    let a = Tenths::percent(2081, 8011).ok_or("zero denominator")?;
    let b = Tenths::percent(1026, 8011).ok_or("zero denominator")?;
    ensure(a.to_string() == "26.0" && b.to_string() == "12.8", || format!("got {a} and {b}"))?;

    // same numbers through the country table
    let records: Vec<CitingRecord> = (0..8011)
        .map(|i| {
            let mut r = CitingRecord::new(format!("R{i}"), 2000);
            if i < 2081 {
                r.countries.insert("USA".into());
            }
            if i >= 8011 - 1026 {
                r.countries.insert("GERMANY".into());
            }
            r
        })
        .collect();
    let corpus = Corpus::new(records).map_err(|e| e.to_string())?;
    let rows = country_table(&corpus, None, 0);
    let pct = |c: &str| rows.iter().find(|r| r.country == c).map(|r| r.pct_of_corpus.to_string());
    ensure(pct("USA").as_deref() == Some("26.0") && pct("GERMANY").as_deref() == Some("12.8"), || format!("{rows:?}"))?;
    Ok(format!("{a} and {b}"))
}

fn graph_oracle() -> Outcome {
    let mut edges = 0;
    for seed in 0..50u64 {
        let cfg = SynthConfig { records: 300, vocabulary: 50, max_keywords: 8, max_refs: 0, ..Default::default() };
        let records = synth_records(seed, &cfg);
        let corpus = Corpus::new(records.clone()).map_err(|e| e.to_string())?;
        let (occ, pairs) = oracle::keyword_pairs(&records);
        let g = keyword_cooccurrence(&corpus, 1, None).map_err(|e| e.to_string())?;
        let mut got = BTreeMap::new();
        for e in &g.edges {
            got.insert((g.nodes[e.a].label.clone(), g.nodes[e.b].label.clone()), e.weight);
        }
        ensure(got == pairs, || format!("seed {seed}: edge weights differ from all-pairs count"))?;
        edges += got.len();

        let g10 = keyword_cooccurrence(&corpus, 10, None).map_err(|e| e.to_string())?;
        let kept: BTreeSet<&String> = g10.nodes.iter().map(|n| &n.label).collect();
        let want: BTreeSet<&String> = occ.iter().filter(|(_, &n)| n >= 10).map(|(k, _)| k).collect();
        ensure(kept == want, || format!("seed {seed}: threshold 10 kept {} nodes, expected {}", kept.len(), want.len()))?;
    }

    // keywords with exactly 9 and 10 occurrences
    let records: Vec<CitingRecord> = (0..10)
        .map(|i| {
            let mut r = CitingRecord::new(format!("K{i}"), 2000);
            r.keywords_plus.insert("ten".into());
            if i < 9 {
                r.keywords_plus.insert("nine".into());
            }
            r
        })
        .collect();
    let g = keyword_cooccurrence(&Corpus::new(records).map_err(|e| e.to_string())?, 10, None).map_err(|e| e.to_string())?;
    let labels: Vec<&str> = g.nodes.iter().map(|n| n.label.as_str()).collect();
    ensure(labels == ["ten"], || format!("threshold 10 kept {labels:?}"))?;
    Ok(format!("50 corpora, {edges} edges"))
}

fn run_cli(threads: &str, corpus: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_biblioscope"))
        .args(["--threads", threads, "--corpus"])
        .arg(corpus)
        .args(args)
        .env_remove("BIBLIOSCOPE_CORPUS")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Runs every command on a fresh corpus directory and collects all outputs.
fn cli_outputs(threads: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let p = |name: &str| d.join(name).to_string_lossy().into_owned();
    let fixture = data("fixture200.txt");
    let script = data("heatwave_search.qry");
    let mut out = Vec::new();
    let mut step = |label: &str, args: &[&str]| -> Result<Vec<u8>, String> {
        let bytes = run_cli(threads, d, args)?;
        out.push((label.to_string(), bytes.clone()));
        Ok(bytes)
    };
    step("ingest", &["ingest", fixture.to_str().unwrap()])?;
    step("query", &["query", "--script", script.to_str().unwrap()])?;
    let suggested = step("dedup suggest", &["dedup", "suggest", "--threshold", "0.7"])?;
    step("dedup suggest vp", &["dedup", "suggest", "--volume-page"])?;
    step("rpys before", &["rpys", "--spectrum-csv", &p("spectrum0.csv")])?;

    // accept every suggested cluster
    let clusters: serde_json::Value = serde_json::from_slice(&suggested).map_err(|e| e.to_string())?;
    let mut decisions = Vec::new();
    for c in clusters.as_array().ok_or("clusters")? {
        let members = c["members"].as_array().ok_or("members")?;
        let canonical = &members[c["suggested_canonical"].as_u64().ok_or("index")? as usize]["fields"]["raw"];
        for m in members.iter().filter(|m| &m["fields"]["raw"] != canonical) {
            decisions.push(serde_json::json!({
                "variant": m["fields"]["raw"], "canonical": canonical,
                "decision": "accept", "timestamp": "2021-01-01T00:00:00Z",
            }));
        }
    }
    std::fs::write(p("decisions.json"), serde_json::to_vec(&decisions).unwrap()).map_err(|e| e.to_string())?;
    step("dedup apply", &["dedup", "apply", "--merges", &p("decisions.json")])?;
    step("rpys after", &["rpys", "--min-count", "2", "--spectrum-csv", &p("spectrum1.csv")])?;
    step("rpys selected", &["rpys", "--selected-only", "--bands", "1900-2020:3"])?;
    step("graph keywords json", &["graph", "keywords", "--min-occ", "3"])?;
    step("graph keywords pajek", &["graph", "keywords", "--min-occ", "3", "--format", "pajek", "--seed", "9"])?;
    step("graph countries", &["graph", "countries", "--min-pubs", "1", "--keep-disconnected"])?;
    step("trend counts", &["trend", "counts"])?;
    step("trend counts set", &["trend", "counts", "--set", "#11"])?;
    step("trend share", &["trend", "share", "--num", "#11", "--den", "#6"])?;
    step("trend pooled", &["trend", "share", "--num", "#11", "--window", "1990-2020"])?;
    step("trend countries", &["trend", "countries", "--min-papers", "2"])?;
    for f in ["spectrum0.csv", "spectrum1.csv", "corpus.json", "merges.json"] {
        if let Ok(bytes) = std::fs::read(d.join(f)) {
            out.push((f.to_string(), bytes));
        }
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let reference = cli_outputs("1")?;
    for threads in ["1", "4", "4"] {
        let other = cli_outputs(threads)?;
        ensure(other.len() == reference.len(), || format!("--threads {threads}: different output count"))?;
        for ((label, a), (_, b)) in reference.iter().zip(&other) {
            ensure(a == b, || format!("--threads {threads}: `{label}` output differs"))?;
        }
    }
    ensure(reference.iter().all(|(_, b)| !b.is_empty()), || "an output was empty".into())?;
    Ok(format!("{} outputs byte-identical across 4 runs with 1 and 4 threads", reference.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("set-algebra identity", set_algebra_identity, Some(Duration::from_secs(10))),
        ("rpys oracle equivalence", rpys_oracle, Some(Duration::from_secs(30))),
        ("five-year median", five_year_median, Some(Duration::from_secs(1))),
        ("band selection", band_selection, Some(Duration::from_secs(1))),
        ("dedup conservation", dedup_maps, Some(Duration::from_secs(10))),
        ("percentage rounding", percentage_rounding, Some(Duration::from_secs(1))),
        ("graph oracle equivalence", graph_oracle, Some(Duration::from_secs(20))),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match (result, budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} ({elapsed:.2?})");
            }
        }
    }
    println!("{} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
