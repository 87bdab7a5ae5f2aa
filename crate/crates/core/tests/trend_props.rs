use std::collections::BTreeMap;

use biblioscope_core::corpus::Corpus;
use biblioscope_core::synth::{synth_records, SynthConfig};
use biblioscope_core::trend::{
    annual_counts, country_table, doubling_time, growth_factor, pooled_share, share_series, AnnualSeries, Tenths,
};
use proptest::prelude::*;

fn corpus(seed: u64) -> Corpus {
    Corpus::new(synth_records(seed, &SynthConfig { records: 150, max_refs: 0, ..Default::default() })).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn annual_counts_are_a_histogram(seed in 0u64..10_000, keep in prop::collection::vec(any::<bool>(), 150)) {
        let c = corpus(seed);
        let set = c.set_from_positions((0..150u32).filter(|&i| keep[i as usize]), String::new());
        let s = annual_counts(&set, &c).unwrap();
        prop_assert_eq!(s.total(), set.len() as u64);
        let mut hist: BTreeMap<i32, u64> = BTreeMap::new();
        for r in c.members(&set).unwrap() {
            *hist.entry(r.pub_year).or_default() += 1;
        }
        for (y, n) in s.iter() {
            prop_assert_eq!(n, hist.get(&y).copied().unwrap_or(0));
        }
        let (lo, hi) = c.year_range().unwrap();
        prop_assert_eq!((s.first_year, s.counts.len()), (lo, (hi - lo + 1) as usize));

        let all = c.all("all");
        for row in share_series(&set, &all, &c).unwrap() {
            match row.percent {
                Some(p) => prop_assert!((0.0..=100.0).contains(&p)),
                None => prop_assert_eq!(row.denominator, 0),
            }
        }
        let pooled = pooled_share(&set, &all, &c, lo, hi).unwrap().unwrap();
        prop_assert!((pooled - 100.0 * set.len() as f64 / c.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn growth_identities(a in 1u64..1000, b in 1u64..1000, k in 1u64..50, span in 1i32..30) {
        let s = AnnualSeries::from_map("s", &BTreeMap::from([(2000, a), (2000 + span, b)]));
        prop_assert_eq!(growth_factor(&s, 2000, 2000).unwrap(), 1.0);
        prop_assert_eq!(growth_factor(&s, 2000, 2000 + span).unwrap(), b as f64 / a as f64);
        let scaled = AnnualSeries::from_map("s", &BTreeMap::from([(2000, a * k), (2000 + span, b * k)]));
        match doubling_time(&s, 2000, 2000 + span) {
            Ok(t) => {
                prop_assert!(b > a);
                prop_assert!((t - doubling_time(&scaled, 2000, 2000 + span).unwrap()).abs() < 1e-9 * t.max(1.0));
            }
            Err(_) => prop_assert!(b <= a),
        }
    }

    #[test]
    fn tenths_round_half_up(num in 0u64..100_000, den in 1u64..100_000) {
        let t = Tenths::percent(num, den).unwrap();
        // exact: t is the integer nearest 1000*num/den, halves going up
        let scaled = 1000 * num as u128;
        let (q, r) = (scaled / den as u128, scaled % den as u128);
        let want = if 2 * r >= den as u128 { q + 1 } else { q };
        prop_assert_eq!(t.0 as u128, want);
    }

    #[test]
    fn country_percentages(seed in 0u64..10_000) {
        let c = corpus(seed);
        let rows = country_table(&c, None, 0);
        for w in rows.windows(2) {
            prop_assert!(w[0].n_papers >= w[1].n_papers);
        }
        for r in &rows {
            prop_assert!(r.pct_of_corpus.0 <= 1000);
            let n = c.records().iter().filter(|x| x.countries.contains(&r.country)).count() as u64;
            prop_assert_eq!(r.n_papers, n);
        }
    }
}
