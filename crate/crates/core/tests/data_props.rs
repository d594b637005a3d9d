use proptest::prelude::*;
use xprop_core::data::{
    estimate_priors, imbalance_stats, parse_xmlc_str, write_xmlc, LabelPriors, SparseDataset,
};

fn sorted_subset(max: usize, len: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::btree_set(0..max, 0..=len.min(max)).prop_map(|s| s.into_iter().collect())
}

fn dataset() -> impl Strategy<Value = SparseDataset> {
    (1usize..8, 1usize..8, 1usize..12).prop_flat_map(|(d, m, n)| {
        let row = sorted_subset(d, d).prop_flat_map(|idx| {
            let k = idx.len();
            (Just(idx), proptest::collection::vec(-1e3f64..1e3, k))
                .prop_map(|(idx, vals)| idx.into_iter().zip(vals).collect::<Vec<_>>())
        });
        (
            proptest::collection::vec(row, n),
            proptest::collection::vec(sorted_subset(m, m), n),
        )
            .prop_map(move |(f, l)| SparseDataset::new(d, m, f, l).unwrap())
    })
}

/// Pos-80% by trying every prefix size of the sorted counts.
fn pos80_scan(counts: &[usize]) -> f64 {
    let mut s = counts.to_vec();
    s.sort_unstable_by(|a, b| b.cmp(a));
    let total: usize = s.iter().sum();
    let k = (1..=s.len())
        .find(|&k| s[..k].iter().sum::<usize>() as f64 >= 0.8 * total as f64 - 1e-9)
        .unwrap();
    k as f64 / s.len() as f64
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(ds in dataset()) {
        prop_assert_eq!(parse_xmlc_str(&write_xmlc(&ds)).unwrap(), ds);
    }

    #[test]
    fn unsmoothed_priors_are_frequencies(ds in dataset()) {
        let p = estimate_priors(&ds, 0.0).unwrap();
        let counts = ds.label_counts();
        for j in 0..ds.m() {
            prop_assert_eq!(p.priors[j], counts[j] as f64 / ds.n() as f64);
        }
    }

    #[test]
    fn smoothing_moves_priors_monotonically(ds in dataset(), a in 0.0f64..5.0, da in 0.01f64..5.0) {
        let lo = estimate_priors(&ds, a).unwrap();
        let hi = estimate_priors(&ds, a + da).unwrap();
        for j in 0..ds.m() {
            // (c + α)/(n + α) increases in α towards 1 since c ≤ n
            prop_assert!(hi.priors[j] >= lo.priors[j] - 1e-15);
            prop_assert!(hi.priors[j] <= 1.0);
        }
    }

    #[test]
    fn pos80_matches_prefix_scan(counts in proptest::collection::vec(1usize..1000, 1..50)) {
        let n = *counts.iter().max().unwrap();
        let p = LabelPriors::from_counts(n, counts.clone(), 0.0).unwrap();
        let s = imbalance_stats(&p).unwrap();
        prop_assert_eq!(s.pos80, pos80_scan(&counts));
    }
}

#[test]
fn pos80_ties_take_smallest_prefix() {
    // exactly 80% after 4 of 5 equal labels
    let p = LabelPriors::from_counts(10, vec![2, 2, 2, 2, 2], 0.0).unwrap();
    assert_eq!(imbalance_stats(&p).unwrap().pos80, 0.8);
}

#[test]
fn parser_rejects_out_of_range_indices() {
    assert!(parse_xmlc_str("1 2 2\n5 0:1\n").is_err());
    assert!(parse_xmlc_str("1 2 2\n0 7:1\n").is_err());
    assert!(parse_xmlc_str("2 2 2\n0 0:1\n").is_err());
}
