//! Reference publication year spectroscopy.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::dedup::{DedupError, MergeMap};
use crate::ingest::{parse_cited_ref, CitedRefFields};

/// Period bands used for key-reference selection unless overridden.
pub const DEFAULT_BANDS: &str = "1950-1999:50,2000-2014:150,2015-2020:100";

#[derive(Debug, Error)]
pub enum RpysError {
    #[error("min_rpy must be at least 1000, got {0}")]
    MinRpy(i32),
    #[error("min_count must be at least 1")]
    MinCount,
    #[error("invalid band {0:?}, expected LO-HI:MIN")]
    BandSpec(String),
    #[error("bands {0} and {1} overlap")]
    OverlappingBands(Band, Band),
    #[error(transparent)]
    Merge(#[from] DedupError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrRow {
    pub canonical_ref: CitedRefFields,
    pub rpy: i32,
    /// citing papers referencing this work
    pub n_cr: u64,
    pub n_top10: u32,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrProvenance {
    pub min_rpy: i32,
    pub min_count: u64,
    pub merge_map_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrTable {
    /// sorted by rpy, then n_cr descending, then raw string
    pub rows: Vec<CrRow>,
    pub provenance: CrProvenance,
}

fn row_order(a: &CrRow, b: &CrRow) -> std::cmp::Ordering {
    a.rpy
        .cmp(&b.rpy)
        .then(b.n_cr.cmp(&a.n_cr))
        .then_with(|| a.canonical_ref.raw.cmp(&b.canonical_ref.raw))
}

/// Canonical references of one record, each listed once.
fn canonical_refs<'a>(refs: &'a [String], merges: &'a MergeMap) -> BTreeSet<&'a str> {
    refs.iter().map(|r| merges.canonical(r)).collect()
}

/// Counts citing papers per canonical reference and applies the filters.
///
/// A paper listing two variants that merge into one canonical reference
/// counts once for it. References without a parseable year are dropped.
pub fn build_cr_table(corpus: &Corpus, merges: &MergeMap, min_rpy: i32, min_count: u64) -> Result<CrTable, RpysError> {
    if min_rpy < 1000 {
        return Err(RpysError::MinRpy(min_rpy));
    }
    if min_count < 1 {
        return Err(RpysError::MinCount);
    }
    merges.validate()?;
    let counts: HashMap<&str, u64> = corpus
        .records()
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<&str, u64>, rec| {
            for r in canonical_refs(&rec.cited_refs, merges) {
                *acc.entry(r).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let mut rows: Vec<CrRow> = counts
        .into_par_iter()
        .filter(|&(_, n)| n >= min_count)
        .filter_map(|(raw, n_cr)| {
            let fields = parse_cited_ref(raw);
            let rpy = fields.rpy.filter(|&y| y >= min_rpy)?;
            Some(CrRow { canonical_ref: fields, rpy, n_cr, n_top10: 0, selected: false })
        })
        .collect();
    rows.sort_by(row_order);
    Ok(CrTable {
        rows,
        provenance: CrProvenance { min_rpy, min_count, merge_map_version: merges.version() },
    })
}

/// An exact multiple of one half, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub fn from_int(v: i64) -> Self {
        HalfInt(2 * v)
    }

    pub fn from_twice(twice: i64) -> Self {
        HalfInt(twice)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        if a.is_multiple_of(2) {
            write!(f, "{sign}{}", a / 2)
        } else {
            write!(f, "{sign}{}.5", a / 2)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        let twice = v * 2.0;
        if twice.fract() != 0.0 {
            return Err(serde::de::Error::custom(format!("{v} is not a multiple of 0.5")));
        }
        Ok(HalfInt(twice as i64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub rpy: i32,
    pub n_cr_total: u64,
    pub median5: HalfInt,
    pub deviation: HalfInt,
}

/// Median of the window `t-2..=t+2`, clipped to the series bounds.
fn median_twice(window: &[u64]) -> i64 {
    let mut w = window.to_vec();
    w.sort_unstable();
    let n = w.len();
    if n % 2 == 1 {
        2 * w[n / 2] as i64
    } else {
        w[n / 2 - 1] as i64 + w[n / 2] as i64
    }
}

/// Spectrum over a contiguous series of yearly totals starting at `first_rpy`.
pub fn spectrum_from_totals(first_rpy: i32, totals: &[u64]) -> Vec<SpectrumPoint> {
    (0..totals.len())
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(totals.len() - 1);
            let median = median_twice(&totals[lo..=hi]);
            SpectrumPoint {
                rpy: first_rpy + i as i32,
                n_cr_total: totals[i],
                median5: HalfInt(median),
                deviation: HalfInt(2 * totals[i] as i64 - median),
            }
        })
        .collect()
}

/// One point per year between the smallest and largest RPY of the table,
/// zero-filled. An empty table gives an empty spectrum.
pub fn spectrum(table: &CrTable) -> Vec<SpectrumPoint> {
    let (Some(first), Some(last)) = (table.rows.iter().map(|r| r.rpy).min(), table.rows.iter().map(|r| r.rpy).max())
    else {
        return Vec::new();
    };
    let mut totals = vec![0u64; (last - first + 1) as usize];
    for r in &table.rows {
        totals[(r.rpy - first) as usize] += r.n_cr;
    }
    spectrum_from_totals(first, &totals)
}

/// Selection rule for one period: rows with `lo <= rpy <= hi` need
/// `n_cr >= min_n_cr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Band {
    pub rpy_lo: i32,
    pub rpy_hi: i32,
    pub min_n_cr: u64,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}:{}", self.rpy_lo, self.rpy_hi, self.min_n_cr)
    }
}

impl FromStr for Band {
    type Err = RpysError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RpysError::BandSpec(s.to_string());
        let (range, min) = s.trim().split_once(':').ok_or_else(bad)?;
        let (lo, hi) = range.split_once('-').ok_or_else(bad)?;
        let band = Band {
            rpy_lo: lo.trim().parse().map_err(|_| bad())?,
            rpy_hi: hi.trim().parse().map_err(|_| bad())?,
            min_n_cr: min.trim().parse().map_err(|_| bad())?,
        };
        if band.rpy_lo > band.rpy_hi {
            return Err(bad());
        }
        Ok(band)
    }
}

impl Band {
    pub fn contains(&self, rpy: i32) -> bool {
        (self.rpy_lo..=self.rpy_hi).contains(&rpy)
    }
}

/// Parses a comma-separated band list such as [`DEFAULT_BANDS`].
pub fn parse_bands(spec: &str) -> Result<Vec<Band>, RpysError> {
    let bands = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Band>, _>>()?;
    check_bands(&bands)?;
    Ok(bands)
}

pub fn default_bands() -> Vec<Band> {
    parse_bands(DEFAULT_BANDS).expect("default bands are well formed")
}

fn check_bands(bands: &[Band]) -> Result<(), RpysError> {
    let mut sorted = bands.to_vec();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[1].rpy_lo <= w[0].rpy_hi {
            return Err(RpysError::OverlappingBands(w[0], w[1]));
        }
    }
    Ok(())
}

fn band_selects(bands: &[Band], row: &CrRow) -> bool {
    bands.iter().any(|b| b.contains(row.rpy) && row.n_cr >= b.min_n_cr)
}

/// Rows passing their period band, sorted by rpy then n_cr descending.
pub fn select_key_refs(table: &CrTable, bands: &[Band]) -> Result<Vec<CrRow>, RpysError> {
    check_bands(bands)?;
    let mut out: Vec<CrRow> = table
        .rows
        .iter()
        .filter(|r| band_selects(bands, r))
        .cloned()
        .map(|mut r| {
            r.selected = true;
            r
        })
        .collect();
    out.sort_by(row_order);
    Ok(out)
}

/// Sets the `selected` flag of every row from `bands`.
pub fn mark_selected(table: &mut CrTable, bands: &[Band]) -> Result<(), RpysError> {
    check_bands(bands)?;
    for r in &mut table.rows {
        r.selected = band_selects(bands, r);
    }
    Ok(())
}

/// Fills `n_top10`: the number of citing years in which a reference is in the
/// top decile of the references sharing its RPY.
///
/// For citing year `t` and a given RPY, the slice holds the table's
/// references of that RPY cited at least once in `t`, ranked by their number
/// of citing papers from `t`. With `n` references in the slice, the threshold
/// is the `ceil(n / 10)`-th largest count, and every reference at or above it
/// scores `t`.
pub fn n_top10(table: &CrTable, corpus: &Corpus, merges: &MergeMap) -> CrTable {
    let index: HashMap<&str, usize> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.canonical_ref.raw.as_str(), i))
        .collect();

    // (citing year, rpy) -> row -> count
    let mut slices: BTreeMap<(i32, i32), BTreeMap<usize, u64>> = BTreeMap::new();
    for rec in corpus.records() {
        for r in canonical_refs(&rec.cited_refs, merges) {
            if let Some(&i) = index.get(r) {
                *slices
                    .entry((rec.pub_year, table.rows[i].rpy))
                    .or_default()
                    .entry(i)
                    .or_default() += 1;
            }
        }
    }

    let scored: Vec<Vec<usize>> = slices
        .par_iter()
        .map(|(_, slice)| {
            let mut counts: Vec<u64> = slice.values().copied().collect();
            counts.sort_unstable_by(|a, b| b.cmp(a));
            let k = counts.len().div_ceil(10);
            let threshold = counts[k - 1];
            slice.iter().filter(|&(_, &c)| c >= threshold).map(|(&i, _)| i).collect()
        })
        .collect();

    let mut out = table.clone();
    for r in &mut out.rows {
        r.n_top10 = 0;
    }
    for i in scored.into_iter().flatten() {
        out.rows[i].n_top10 += 1;
    }
    out
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_cr_table_csv<W: Write>(table: &CrTable, w: W) -> Result<(), RpysError> {
    let mut out = csv_writer(w);
    out.write_record(["CR", "RPY", "N_CR", "N_TOP10", "SELECTED", "DOI"])?;
    for r in &table.rows {
        out.write_record([
            r.canonical_ref.raw.as_str(),
            &r.rpy.to_string(),
            &r.n_cr.to_string(),
            &r.n_top10.to_string(),
            if r.selected { "true" } else { "false" },
            r.canonical_ref.doi.as_deref().unwrap_or(""),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(points: &[SpectrumPoint], w: W) -> Result<(), RpysError> {
    let mut out = csv_writer(w);
    out.write_record(["RPY", "N_CR_TOTAL", "MEDIAN_5", "DEVIATION"])?;
    for p in points {
        out.write_record([
            p.rpy.to_string(),
            p.n_cr_total.to_string(),
            p.median5.to_string(),
            p.deviation.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dedup::Decision;
    use crate::ingest::CitingRecord;

    fn rec(id: &str, year: i32, refs: &[&str]) -> CitingRecord {
        let mut r = CitingRecord::new(id, year);
        r.cited_refs = refs.iter().map(|s| s.to_string()).collect();
        r
    }

    #[test]
    fn half_int_display() {
        assert_eq!(HalfInt::from_int(348).to_string(), "348");
        assert_eq!(HalfInt::from_twice(41).to_string(), "20.5");
        assert_eq!(HalfInt::from_twice(-3).to_string(), "-1.5");
        assert_eq!(HalfInt::from_twice(-1).to_string(), "-0.5");
        let json = serde_json::to_string(&HalfInt::from_twice(41)).unwrap();
        assert_eq!(json, "20.5");
        assert_eq!(serde_json::from_str::<HalfInt>(&json).unwrap(), HalfInt::from_twice(41));
        assert!(serde_json::from_str::<HalfInt>("0.25").is_err());
    }

    #[test]
    fn peak_over_clipped_median() {
        let s = spectrum_from_totals(1994, &[10, 12, 368, 40, 20]);
        assert_eq!(s[2].median5, HalfInt::from_int(20));
        assert_eq!(s[2].deviation, HalfInt::from_int(348));
        // first year uses 10, 12, 368
        assert_eq!(s[0].median5, HalfInt::from_int(12));
        // second year uses 10, 12, 368, 40
        assert_eq!(s[1].median5, HalfInt::from_int(26));
        assert_eq!(spectrum_from_totals(2000, &[7])[0].deviation, HalfInt::default());
    }

    #[test]
    fn paper_counts_once_per_canonical() {
        let a = "SCHAR C, 2004, NATURE, V427, P332";
        let b = "SCHAER C, 2004, NATURE, V427, P332";
        let corpus = Corpus::new(vec![
            rec("1", 2010, &[a, b]),
            rec("2", 2011, &[b]),
            rec("3", 2011, &["OLD A, 1850, J, V1, P1", "NOYEAR X, NATURE"]),
        ])
        .unwrap();
        let plain = build_cr_table(&corpus, &MergeMap::new(), 1900, 1).unwrap();
        assert_eq!(plain.rows.len(), 2);
        let mut merges = MergeMap::new();
        merges.record(b, a, Decision::Accept, "t".into());
        let merged = build_cr_table(&corpus, &merges, 1900, 1).unwrap();
        assert_eq!(merged.rows.len(), 1);
        assert_eq!(merged.rows[0].n_cr, 2);
        assert_eq!(merged.provenance.merge_map_version, merges.version());
        assert!(build_cr_table(&corpus, &merges, 1900, 3).unwrap().rows.is_empty());
        assert!(matches!(build_cr_table(&corpus, &merges, 999, 1), Err(RpysError::MinRpy(999))));
        assert!(matches!(build_cr_table(&corpus, &merges, 1900, 0), Err(RpysError::MinCount)));
        assert!(spectrum(&build_cr_table(&Corpus::empty(), &merges, 1900, 1).unwrap()).is_empty());
    }

    #[test]
    fn band_boundaries() {
        let bands = default_bands();
        let row = |rpy, n_cr| CrRow { canonical_ref: CitedRefFields::default(), rpy, n_cr, n_top10: 0, selected: false };
        assert!(band_selects(&bands, &row(1996, 368)));
        assert!(!band_selects(&bands, &row(2014, 149)));
        assert!(band_selects(&bands, &row(2014, 150)));
        assert!(band_selects(&bands, &row(2015, 100)));
        assert!(!band_selects(&bands, &row(1945, 1000)));
        assert!(matches!(parse_bands("1950-2000:5,2000-2010:3"), Err(RpysError::OverlappingBands(..))));
        assert!(parse_bands("1950:5").is_err());
        assert!(parse_bands("2000-1990:5").is_err());
        assert_eq!(bands.iter().map(Band::to_string).collect::<Vec<_>>().join(","), DEFAULT_BANDS);
    }

    #[test]
    fn top_decile_slices() {
        let lone = "LONE A, 1990, J, V1, P1";
        let corpus = Corpus::new(vec![rec("1", 2000, &[lone]), rec("2", 2003, &[lone])]).unwrap();
        let t = build_cr_table(&corpus, &MergeMap::new(), 1900, 1).unwrap();
        assert_eq!(n_top10(&t, &corpus, &MergeMap::new()).rows[0].n_top10, 2);
    }

    #[test]
    fn csv_layout() {
        let corpus = Corpus::new(vec![rec("1", 2000, &["A B, 1990, J, V1, P1, DOI 10.1/x", "C, 1992, \"Q\", V2"])]).unwrap();
        let t = build_cr_table(&corpus, &MergeMap::new(), 1900, 1).unwrap();
        let mut buf = Vec::new();
        write_cr_table_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "CR,RPY,N_CR,N_TOP10,SELECTED,DOI\n\"A B, 1990, J, V1, P1, DOI 10.1/x\",1990,1,0,false,10.1/x\n\"C, 1992, \"\"Q\"\", V2\",1992,1,0,false,\n"
        );
    }
}
