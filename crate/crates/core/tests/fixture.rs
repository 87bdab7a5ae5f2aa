//! End-to-end checks against the bundled 200-record export and the ground
//! truth produced for it by `tools/golden.py`.

use std::path::PathBuf;

use biblioscope_core::corpus::{load_corpus, load_sets, save_corpus, save_set, Corpus};
use biblioscope_core::dedup::MergeMap;
use biblioscope_core::graph::{keyword_cooccurrence, overlay_mean_year, to_graph_json};
use biblioscope_core::ingest::{parse_export, ExportFormat};
use biblioscope_core::query::{parse_script, replay, run_script, SetTable};
use biblioscope_core::rpys::{build_cr_table, default_bands, mark_selected, n_top10, spectrum, write_cr_table_csv, write_spectrum_csv};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap()
}

fn load(name: &str, format: ExportFormat) -> Corpus {
    let file = std::fs::File::open(data(name)).unwrap();
    let parsed = parse_export(file, format).unwrap();
    Corpus::new(parsed.records).unwrap()
}

fn tagged() -> Corpus {
    load("fixture200.txt", ExportFormat::TaggedText)
}

#[test]
fn tagged_export_matches_golden_records() {
    let corpus = tagged();
    let golden: Value = serde_json::from_str(&read("fixture200.golden.json")).unwrap();
    let ours = serde_json::to_value(corpus.records()).unwrap();
    let (g, o) = (golden.as_array().unwrap(), ours.as_array().unwrap());
    assert_eq!(o.len(), g.len());
    for (a, b) in o.iter().zip(g) {
        assert_eq!(a, b, "record {}", b["record_id"]);
    }
}

#[test]
fn tab_delimited_export_matches_tagged() {
    let tsv = load("fixture200.tsv", ExportFormat::TabDelimited);
    assert_eq!(tsv, tagged());
    assert_eq!(tsv.fingerprint(), tagged().fingerprint());
}

#[test]
fn search_script_matches_truth() {
    let corpus = tagged();
    let truth: Value = serde_json::from_str(&read("fixture200.truth.json")).unwrap();
    let statements = parse_script(&read("heatwave_search.qry")).unwrap();
    assert_eq!(statements.len(), 15);
    let mut sets = SetTable::new();
    let outcomes = run_script(&statements, &corpus, &mut sets).unwrap();
    for out in &outcomes {
        let expected = &truth[&out.name];
        assert_eq!(out.count as u64, expected["count"].as_u64().unwrap(), "{}", out.name);
        let members: Vec<&str> = expected["members"].as_array().unwrap().iter().map(|m| m.as_str().unwrap()).collect();
        let ours: Vec<&str> = sets[&out.name].member_ids.iter().map(String::as_str).collect();
        assert_eq!(ours, members, "{}", out.name);
    }
    // S3 = S1 NOT S2 and S4 within S3, so S2 and S4 are disjoint
    assert_eq!(sets["#5"].len(), sets["#2"].len() + sets["#4"].len());
    for set in sets.values() {
        assert!(replay(set, &corpus, &sets).unwrap(), "{} does not replay", set.name);
    }
}

#[test]
fn corpus_and_sets_survive_disk() {
    let corpus = tagged();
    let dir = tempfile::tempdir().unwrap();
    save_corpus(&corpus, dir.path()).unwrap();
    let back = load_corpus(dir.path()).unwrap();
    assert_eq!(back, corpus);
    assert_eq!(back.index(), corpus.index());

    let mut sets = SetTable::new();
    run_script(&parse_script(&read("heatwave_search.qry")).unwrap(), &corpus, &mut sets).unwrap();
    for set in sets.values() {
        save_set(dir.path(), set).unwrap();
    }
    assert_eq!(load_sets(dir.path()).unwrap(), sets);
}

#[test]
fn cr_table_and_spectrum_match_golden_csv() {
    let corpus = tagged();
    let merges = MergeMap::new();
    let table = build_cr_table(&corpus, &merges, 1900, 10).unwrap();
    let mut table = n_top10(&table, &corpus, &merges);
    mark_selected(&mut table, &default_bands()).unwrap();

    let mut buf = Vec::new();
    write_cr_table_csv(&table, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), read("fixture200.crtable.csv"));

    let mut buf = Vec::new();
    write_spectrum_csv(&spectrum(&table), &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), read("fixture200.spectrum.csv"));
}

#[test]
fn keyword_graph_matches_golden() {
    let corpus = tagged();
    let graph = overlay_mean_year(&keyword_cooccurrence(&corpus, 5, None).unwrap(), &corpus);
    let golden: Value = serde_json::from_str(&read("fixture200.keywords.json")).unwrap();
    // compare what is written, parsed by the same reader as the golden file
    let written: Value = serde_json::from_str(&serde_json::to_string(&to_graph_json(&graph)).unwrap()).unwrap();
    assert_eq!(written, golden);
}

#[test]
fn planted_thirty_country_paper_is_ignored() {
    let corpus = tagged();
    let big: Vec<_> = corpus.records().iter().filter(|r| r.countries.len() > 25).collect();
    assert_eq!(big.len(), 1);
    let graph = biblioscope_core::graph::country_coauthorship(&corpus, 1, 25, false).unwrap();
    // recount without the oversized paper
    for node in &graph.nodes {
        let n = corpus
            .records()
            .iter()
            .filter(|r| r.countries.len() <= 25 && r.countries.contains(&node.label))
            .count() as u64;
        assert_eq!(node.weight, n, "{}", node.label);
    }
    for e in &graph.edges {
        let (a, b) = (&graph.nodes[e.a].label, &graph.nodes[e.b].label);
        let n = corpus
            .records()
            .iter()
            .filter(|r| r.countries.len() <= 25 && r.countries.contains(a) && r.countries.contains(b))
            .count() as u64;
        assert_eq!(e.weight, n);
    }
}
