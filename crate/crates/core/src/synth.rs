//! Seeded synthetic corpora.
//!
//! Everything here is a pure function of the seed and the configuration, so
//! tests and demos can regenerate identical data anywhere.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dedup::VariantCount;
use crate::ingest::CitingRecord;

const WORDS: &[&str] = &[
    "heat", "wave", "waves", "heatwave", "heatwaves", "hot", "spell", "climate", "change", "warming",
    "mortality", "urban", "drought", "temperature", "extreme", "summer", "health", "risk", "model",
    "greenhouse", "weather", "marine", "coral", "ozone", "soil", "moisture", "global", "regional",
];

const COUNTRIES: &[&str] = &[
    "USA", "AUSTRALIA", "PEOPLES R CHINA", "ENGLAND", "GERMANY", "ITALY", "SPAIN", "FRANCE",
    "CANADA", "JAPAN", "INDIA", "BRAZIL",
];

const CATEGORIES: &[&str] = &[
    "Meteorology & Atmospheric Sciences",
    "Environmental Sciences",
    "Public, Environmental & Occupational Health",
    "Ecology",
    "Physics, Applied",
    "Mechanics",
];

const DOC_TYPES: &[&str] = &["Article", "Article", "Article", "Review", "Proceedings Paper", "Letter", "Meeting Abstract"];

const JOURNALS: &[&str] = &[
    "NATURE", "SCIENCE", "J CLIMATE", "LANCET", "CLIM DYNAM", "GEOPHYS RES LETT", "INT J CLIMATOL",
    "ENVIRON HEALTH PERSP", "NEW ENGL J MED", "AM J EPIDEMIOL",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub records: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// distinct keyword-plus terms
    pub vocabulary: usize,
    pub max_keywords: usize,
    /// distinct cited references
    pub ref_pool: usize,
    pub max_refs: usize,
    pub max_countries: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            records: 300,
            first_year: 1990,
            last_year: 2020,
            vocabulary: 60,
            max_keywords: 6,
            ref_pool: 400,
            max_refs: 25,
            max_countries: 4,
        }
    }
}

fn syllable_name(rng: &mut ChaCha8Rng) -> String {
    const PARTS: &[&str] = &["ka", "lo", "mer", "sch", "ar", "tin", "bo", "vel", "du", "rin", "ha", "po", "zel", "fi", "gro"];
    let n = rng.random_range(2..=4);
    let mut s: String = (0..n).map(|_| *PARTS.choose(rng).unwrap()).collect();
    s.make_ascii_uppercase();
    s
}

/// Reference strings in export style, e.g. `KALOMER A, 1996, NATURE, V12, P345`.
/// A few have no year and a few predate 1900.
pub fn reference_pool(rng: &mut ChaCha8Rng, n: usize, last_year: i32) -> Vec<String> {
    let mut out = BTreeSet::new();
    while out.len() < n {
        let author = format!("{} {}", syllable_name(rng), (b'A' + rng.random_range(0..26)) as char);
        let journal = JOURNALS.choose(rng).unwrap();
        let r = rng.random_range(0..100);
        let s = if r < 3 {
            format!("{author}, {journal}")
        } else {
            let year = if r < 8 { rng.random_range(1850..1900) } else { rng.random_range(1900..=last_year) };
            format!("{author}, {year}, {journal}, V{}, P{}", rng.random_range(1..500), rng.random_range(1..3000))
        };
        out.insert(s);
    }
    let mut v: Vec<String> = out.into_iter().collect();
    v.shuffle(rng);
    v
}

/// Skewed index in `0..n`: low indices are drawn far more often.
fn skewed(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let u: f64 = rng.random();
    ((u * u * n as f64) as usize).min(n - 1)
}

/// A random corpus. Record ids are `S<seed>-<ordinal>`.
pub fn synth_records(seed: u64, cfg: &SynthConfig) -> Vec<CitingRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let refs = reference_pool(&mut rng, cfg.ref_pool.max(1), cfg.last_year);
    (0..cfg.records)
        .map(|i| {
            let year = rng.random_range(cfg.first_year..=cfg.last_year);
            let mut r = CitingRecord::new(format!("S{seed}-{i:05}"), year);
            let title_len = rng.random_range(3..9);
            r.title = (0..title_len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ");
            let abstract_len = rng.random_range(0..20);
            r.abstract_text = (0..abstract_len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ");
            if cfg.vocabulary > 0 {
                for _ in 0..rng.random_range(0..=cfg.max_keywords) {
                    r.keywords_plus.insert(format!("kw{:03}", skewed(&mut rng, cfg.vocabulary)));
                }
            }
            for _ in 0..rng.random_range(0..=3) {
                r.keywords_author.insert(WORDS.choose(&mut rng).unwrap().to_string());
            }
            for _ in 0..rng.random_range(0..=cfg.max_countries) {
                r.countries.insert(COUNTRIES[skewed(&mut rng, COUNTRIES.len())].to_string());
            }
            for _ in 0..rng.random_range(1..=2) {
                r.subject_categories.insert(CATEGORIES.choose(&mut rng).unwrap().to_string());
            }
            r.doc_types.insert(DOC_TYPES.choose(&mut rng).unwrap().to_string());
            let n_refs = rng.random_range(0..=cfg.max_refs);
            let cited: BTreeSet<usize> = (0..n_refs).map(|_| skewed(&mut rng, refs.len())).collect();
            r.cited_refs = cited.into_iter().map(|k| refs[k].clone()).collect();
            r
        })
        .collect()
}

/// Reference variants with `planted` single-letter author misspellings.
///
/// Returns `n` variants (including the misspelled copies) and the planted
/// `(original, misspelled)` pairs. Base references get random-letter authors
/// and sources so unrelated variants stay far apart.
pub fn planted_variants(seed: u64, n: usize, planted: usize) -> (Vec<VariantCount>, Vec<(String, String)>) {
    assert!(planted * 2 <= n, "need at least two variants per planted pair");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters = |rng: &mut ChaCha8Rng, len: usize| -> String {
        (0..len).map(|_| (b'A' + rng.random_range(0..26)) as char).collect()
    };
    let mut seen = BTreeSet::new();
    let mut bases = Vec::new();
    while bases.len() < n - planted {
        let author = letters(&mut rng, 8);
        let initial = letters(&mut rng, 1);
        let source = letters(&mut rng, 10);
        let year = rng.random_range(1990..2000);
        let raw = format!("{author} {initial}, {year}, {source}, V{}, P{}", rng.random_range(1..99), rng.random_range(1..999));
        if seen.insert(raw.clone()) {
            bases.push((author, raw));
        }
    }
    let mut pairs = Vec::new();
    for (author, raw) in bases.iter().take(planted) {
        let pos = rng.random_range(0..author.len());
        let old = author.as_bytes()[pos];
        let mut new = old;
        while new == old {
            new = b'A' + rng.random_range(0..26);
        }
        let mut bent = author.clone().into_bytes();
        bent[pos] = new;
        let bent = String::from_utf8(bent).unwrap();
        pairs.push((raw.clone(), raw.replacen(author.as_str(), &bent, 1)));
    }
    let mut variants: Vec<VariantCount> = Vec::with_capacity(n);
    for (_, raw) in &bases {
        variants.push(VariantCount::new(raw, rng.random_range(1..50)));
    }
    for (_, bent) in &pairs {
        variants.push(VariantCount::new(bent, rng.random_range(1..5)));
    }
    variants.shuffle(&mut rng);
    (variants, pairs)
}
