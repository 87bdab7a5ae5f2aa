//! Annual publication series, growth, shares and country tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::corpus::{Corpus, RecordSet, StoreError};

#[derive(Debug, Error)]
pub enum TrendError {
    #[error("growth is undefined: no publications in base year {0}")]
    ZeroBase(i32),
    #[error("no growth between {from} ({a}) and {to} ({b})")]
    NoGrowth { from: i32, to: i32, a: u64, b: u64 },
    #[error("year {0} is outside the series")]
    YearOutOfRange(i32),
    #[error("invalid window {0}-{1}")]
    Window(i32, i32),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Counts per year over a contiguous, zero-filled range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnualSeries {
    pub label: String,
    pub first_year: i32,
    pub counts: Vec<u64>,
}

impl AnnualSeries {
    pub fn from_map(label: impl Into<String>, counts: &BTreeMap<i32, u64>) -> Self {
        let label = label.into();
        let (Some((&first, _)), Some((&last, _))) = (counts.first_key_value(), counts.last_key_value()) else {
            return AnnualSeries { label, first_year: 0, counts: Vec::new() };
        };
        let counts = (first..=last).map(|y| counts.get(&y).copied().unwrap_or(0)).collect();
        AnnualSeries { label, first_year: first, counts }
    }

    pub fn get(&self, year: i32) -> Option<u64> {
        let i = usize::try_from(year.checked_sub(self.first_year)?).ok()?;
        self.counts.get(i).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| (self.first_year + i as i32, c))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn at(&self, year: i32) -> Result<u64, TrendError> {
        self.get(year).ok_or(TrendError::YearOutOfRange(year))
    }
}

/// Members per publication year, zero-filled across the corpus year range.
pub fn annual_counts(set: &RecordSet, corpus: &Corpus) -> Result<AnnualSeries, TrendError> {
    let Some((lo, hi)) = corpus.year_range() else {
        return Ok(AnnualSeries { label: set.name.clone(), first_year: 0, counts: Vec::new() });
    };
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for rec in corpus.members(set)? {
        counts[(rec.pub_year - lo) as usize] += 1;
    }
    Ok(AnnualSeries { label: set.name.clone(), first_year: lo, counts })
}

/// `series[y1] / series[y0]`.
pub fn growth_factor(series: &AnnualSeries, y0: i32, y1: i32) -> Result<f64, TrendError> {
    let base = series.at(y0)?;
    let end = series.at(y1)?;
    if base == 0 {
        return Err(TrendError::ZeroBase(y0));
    }
    Ok(end as f64 / base as f64)
}

/// Doubling time implied by exponential growth through the two endpoints:
/// `(yb - ya) * ln 2 / ln(series[yb] / series[ya])`.
pub fn doubling_time(series: &AnnualSeries, ya: i32, yb: i32) -> Result<f64, TrendError> {
    if yb <= ya {
        return Err(TrendError::Window(ya, yb));
    }
    let a = series.at(ya)?;
    let b = series.at(yb)?;
    if a == 0 {
        return Err(TrendError::ZeroBase(ya));
    }
    if b <= a {
        return Err(TrendError::NoGrowth { from: ya, to: yb, a, b });
    }
    Ok(f64::from(yb - ya) * std::f64::consts::LN_2 / (b as f64 / a as f64).ln())
}

/// A percentage rounded half-up to one decimal, stored in tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tenths(pub u64);

impl Tenths {
    /// `100 * num / den` rounded half-up to one decimal, in integer arithmetic.
    pub fn percent(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let (num, den) = (u128::from(num), u128::from(den));
        Some(Tenths(((2000 * num + den) / (2 * den)) as u64))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl fmt::Display for Tenths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

impl Serialize for Tenths {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareRow {
    pub year: i32,
    pub numerator: u64,
    pub denominator: u64,
    /// `None` when the denominator is zero
    pub percent: Option<f64>,
}

/// Per-year `100 * |num in year| / |den in year|` over the corpus year range.
pub fn share_series(num: &RecordSet, den: &RecordSet, corpus: &Corpus) -> Result<Vec<ShareRow>, TrendError> {
    let n = annual_counts(num, corpus)?;
    let d = annual_counts(den, corpus)?;
    Ok(n.iter()
        .zip(d.counts.iter())
        .map(|((year, a), &b)| ShareRow {
            year,
            numerator: a,
            denominator: b,
            percent: (b > 0).then(|| 100.0 * a as f64 / b as f64),
        })
        .collect())
}

/// Share over a window computed on pooled counts; `None` when the window
/// holds no denominator records.
pub fn pooled_share(num: &RecordSet, den: &RecordSet, corpus: &Corpus, y0: i32, y1: i32) -> Result<Option<f64>, TrendError> {
    if y1 < y0 {
        return Err(TrendError::Window(y0, y1));
    }
    let in_window = |set: &RecordSet| -> Result<u64, TrendError> {
        Ok(corpus.members(set)?.iter().filter(|r| (y0..=y1).contains(&r.pub_year)).count() as u64)
    };
    let (a, b) = (in_window(num)?, in_window(den)?);
    Ok((b > 0).then(|| 100.0 * a as f64 / b as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryRow {
    pub country: String,
    pub n_papers: u64,
    pub pct_of_corpus: Tenths,
    pub pct_of_reference: Option<Tenths>,
    /// corpus share over reference share, unrounded
    pub ratio: Option<f64>,
}

fn country_counts(corpus: &Corpus) -> BTreeMap<&str, u64> {
    let mut out = BTreeMap::new();
    for rec in corpus.records() {
        for c in &rec.countries {
            *out.entry(c.as_str()).or_default() += 1;
        }
    }
    out
}

/// Papers per country (full counting) with percentages of the corpus and,
/// optionally, of a reference corpus. Sorted by paper count, then name.
pub fn country_table(corpus: &Corpus, reference: Option<&Corpus>, min_papers: u64) -> Vec<CountryRow> {
    let total = corpus.len() as u64;
    let ref_counts = reference.map(|r| (country_counts(r), r.len() as u64));
    let mut rows: Vec<CountryRow> = country_counts(corpus)
        .into_iter()
        .filter(|&(_, n)| n >= min_papers)
        .map(|(country, n)| {
            let (pct_of_reference, ratio) = match &ref_counts {
                Some((counts, rtotal)) => {
                    let r = counts.get(country).copied().unwrap_or(0);
                    let ratio = (r > 0).then(|| (n as f64 / total as f64) / (r as f64 / *rtotal as f64));
                    (Tenths::percent(r, *rtotal), ratio)
                }
                None => (None, None),
            };
            CountryRow {
                country: country.to_string(),
                n_papers: n,
                pct_of_corpus: Tenths::percent(n, total).expect("non-empty corpus"),
                pct_of_reference,
                ratio,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.n_papers.cmp(&a.n_papers).then_with(|| a.country.cmp(&b.country)));
    rows
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_series_csv<W: Write>(series: &AnnualSeries, w: W) -> Result<(), TrendError> {
    let mut out = csv_writer(w);
    out.write_record(["year", "count"])?;
    for (y, c) in series.iter() {
        out.write_record([y.to_string(), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Long format `series,year,value` for plotting several series together.
pub fn write_long_csv<W: Write>(series: &[AnnualSeries], w: W) -> Result<(), TrendError> {
    let mut out = csv_writer(w);
    out.write_record(["series", "year", "value"])?;
    for s in series {
        for (y, c) in s.iter() {
            out.write_record([s.label.clone(), y.to_string(), c.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_share_csv<W: Write>(rows: &[ShareRow], w: W) -> Result<(), TrendError> {
    let mut out = csv_writer(w);
    out.write_record(["year", "numerator", "denominator", "percent"])?;
    for r in rows {
        out.write_record([
            r.year.to_string(),
            r.numerator.to_string(),
            r.denominator.to_string(),
            r.percent.map_or_else(|| "undefined".to_string(), |p| format!("{p:.1}")),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_country_csv<W: Write>(rows: &[CountryRow], w: W) -> Result<(), TrendError> {
    let mut out = csv_writer(w);
    out.write_record(["country", "n_papers", "pct_corpus", "pct_reference", "ratio"])?;
    for r in rows {
        out.write_record([
            r.country.clone(),
            r.n_papers.to_string(),
            r.pct_of_corpus.to_string(),
            r.pct_of_reference.map(|p| p.to_string()).unwrap_or_default(),
            r.ratio.map(|x| format!("{x:.2}")).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
