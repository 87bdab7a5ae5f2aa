//! Brute-force reference implementations used by the property tests and the
//! acceptance suite. They favour obviousness over speed and share no code with
//! the library beyond its plain data types.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use biblioscope_core::ingest::CitingRecord;

/// Publication year of a reference string: the first comma-separated field
/// made of exactly four digits.
pub fn ref_year(raw: &str) -> Option<i32> {
    raw.split(',')
        .map(str::trim)
        .find(|s| s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|s| s.parse().ok())
}

/// Citing papers per canonical reference, each paper counted once.
pub fn citing_counts(records: &[CitingRecord], canon: &dyn Fn(&str) -> String) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for r in records {
        let refs: BTreeSet<String> = r.cited_refs.iter().map(|x| canon(x)).collect();
        for x in refs {
            *out.entry(x).or_insert(0) += 1;
        }
    }
    out
}

/// `(raw, rpy, n_cr)` rows surviving the filters, sorted by rpy, count
/// descending, raw.
pub fn cr_rows(
    records: &[CitingRecord],
    canon: &dyn Fn(&str) -> String,
    min_rpy: i32,
    min_count: u64,
) -> Vec<(String, i32, u64)> {
    let mut rows: Vec<(String, i32, u64)> = citing_counts(records, canon)
        .into_iter()
        .filter_map(|(raw, n)| {
            let y = ref_year(&raw)?;
            (y >= min_rpy && n >= min_count).then_some((raw, y, n))
        })
        .collect();
    rows.sort_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
    rows
}

/// Twice the median of the values in `window`.
pub fn twice_median(window: &[u64]) -> i64 {
    let mut w = window.to_vec();
    w.sort();
    let n = w.len();
    if n % 2 == 1 {
        2 * w[n / 2] as i64
    } else {
        (w[n / 2 - 1] + w[n / 2]) as i64
    }
}

/// `(rpy, total, 2*median, 2*deviation)` for every year between the first
/// and last RPY.
pub fn spectrum(rows: &[(String, i32, u64)]) -> Vec<(i32, u64, i64, i64)> {
    if rows.is_empty() {
        return Vec::new();
    }
    let lo = rows.iter().map(|r| r.1).min().unwrap();
    let hi = rows.iter().map(|r| r.1).max().unwrap();
    let total = |y: i32| rows.iter().filter(|r| r.1 == y).map(|r| r.2).sum::<u64>();
    (lo..=hi)
        .map(|y| {
            let window: Vec<u64> = (y - 2..=y + 2).filter(|t| (lo..=hi).contains(t)).map(total).collect();
            let m = twice_median(&window);
            (y, total(y), m, 2 * total(y) as i64 - m)
        })
        .collect()
}

/// Citing years in which each reference reaches the top decile of its RPY.
pub fn n_top10(
    records: &[CitingRecord],
    canon: &dyn Fn(&str) -> String,
    rows: &[(String, i32, u64)],
) -> BTreeMap<String, u32> {
    let rpy: BTreeMap<&str, i32> = rows.iter().map(|r| (r.0.as_str(), r.1)).collect();
    let years: BTreeSet<i32> = records.iter().map(|r| r.pub_year).collect();
    let mut out: BTreeMap<String, u32> = rows.iter().map(|r| (r.0.clone(), 0)).collect();
    for &t in &years {
        let in_year: Vec<CitingRecord> = records.iter().filter(|r| r.pub_year == t).cloned().collect();
        let counts = citing_counts(&in_year, canon);
        for &y in rpy.values().collect::<BTreeSet<_>>() {
            let slice: Vec<(&str, u64)> = rows
                .iter()
                .filter(|r| r.1 == y)
                .map(|r| (r.0.as_str(), counts.get(&r.0).copied().unwrap_or(0)))
                .filter(|&(_, c)| c > 0)
                .collect();
            if slice.is_empty() {
                continue;
            }
            let mut sorted: Vec<u64> = slice.iter().map(|s| s.1).collect();
            sorted.sort_by(|a, b| b.cmp(a));
            let k = sorted.len().div_ceil(10);
            let threshold = sorted[k - 1];
            for (raw, c) in slice {
                if c >= threshold {
                    *out.get_mut(raw).unwrap() += 1;
                }
            }
        }
    }
    out
}

/// Records per keyword-plus term, and records per unordered pair of terms.
pub fn keyword_pairs(records: &[CitingRecord]) -> (BTreeMap<String, u64>, BTreeMap<(String, String), u64>) {
    let mut occ = BTreeMap::new();
    let mut pairs = BTreeMap::new();
    for r in records {
        let kws: Vec<&String> = r.keywords_plus.iter().collect();
        for a in &kws {
            *occ.entry((*a).clone()).or_insert(0) += 1;
        }
        for a in &kws {
            for b in &kws {
                if a < b {
                    *pairs.entry(((*a).clone(), (*b).clone())).or_insert(0) += 1;
                }
            }
        }
    }
    (occ, pairs)
}

/// Every partition of `0..n` as a membership vector.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for c in 0..=next {
            prefix.push(c);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

/// Modularity straight from the definition:
/// `1/2m * sum_ij (A_ij - gamma k_i k_j / 2m) [c_i == c_j]`.
pub fn modularity(n: usize, edges: &[(usize, usize, u64)], membership: &[usize], gamma: f64) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(x, y, w) in edges {
        a[x][y] += w as f64;
        a[y][x] += w as f64;
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if membership[i] == membership[j] {
                q += a[i][j] - gamma * k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}
