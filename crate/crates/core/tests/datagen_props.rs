use proptest::prelude::*;
use xprop_core::data::{estimate_priors, imbalance_stats, SparseDataset};
use xprop_core::datagen::{
    generate_hyperball, inject_missing, ratings_to_multilabel, resplit_benchmark, split_indices,
    HyperBallConfig, Rating,
};
use xprop_core::propensity::PropensityAssignment;
use xprop_core::rng;

fn small(seed: u64) -> HyperBallConfig {
    HyperBallConfig {
        m: 30,
        seed,
        n_train: 600,
        n_val: 100,
        n_test: 200,
        ..HyperBallConfig::default()
    }
}

fn random_dataset(n: usize, m: usize, seed: u64) -> SparseDataset {
    use rand::Rng;
    let mut r = rng::stream(seed, "test/data", 0);
    let labels = (0..n)
        .map(|_| (0..m).filter(|_| r.random::<f64>() < 0.3).collect())
        .collect();
    SparseDataset::new(1, m, vec![vec![(0, 1.0)]; n], labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn injection_never_adds_labels(seed in any::<u64>(), p in proptest::collection::vec(0.0f64..=1.0, 8)) {
        let clean = random_dataset(40, 8, seed);
        let p = PropensityAssignment::from_values(p, "test").unwrap();
        let (biased, trace) = inject_missing(&clean, &p, seed).unwrap();
        for i in 0..clean.n() {
            let c = clean.instance_labels(i);
            prop_assert!(biased.instance_labels(i).iter().all(|j| c.contains(j)));
        }
        prop_assert_eq!(trace.kept + trace.removed, clean.num_positives());
        prop_assert_eq!(biased.features(), clean.features());
    }

    #[test]
    fn unit_propensities_keep_everything(seed in any::<u64>()) {
        let clean = random_dataset(30, 5, seed);
        let one = PropensityAssignment::constant(5, 1.0).unwrap();
        prop_assert_eq!(inject_missing(&clean, &one, seed).unwrap().0, clean);
    }

    #[test]
    fn split_indices_partition(n in 1usize..200, a in 0.0f64..1.0, seed in any::<u64>()) {
        let fr = [a * 0.5, a * 0.5, 1.0 - a];
        let parts = split_indices(n, &fr, &mut rng::stream(seed, "test/split", 0)).unwrap();
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn resplit_partitions_and_keeps_frequent_labels(seed in any::<u64>(), s in 1usize..15) {
        let full = random_dataset(60, 10, seed);
        let Ok(r) = resplit_benchmark(&full, s, &[0.6, 0.2, 0.2], seed) else {
            prop_assert!(full.label_counts().iter().all(|&c| c < s));
            return Ok(());
        };
        let n: usize = r.parts.iter().map(SparseDataset::n).sum();
        prop_assert_eq!(n, full.n());
        let mut merged = vec![0usize; r.label_map.len()];
        for part in &r.parts {
            for (j, c) in part.label_counts().into_iter().enumerate() {
                merged[j] += c;
            }
        }
        prop_assert!(merged.iter().all(|&c| c >= s));
        let counts = full.label_counts();
        for (new, &old) in r.label_map.iter().enumerate() {
            prop_assert_eq!(merged[new], counts[old]);
        }
        prop_assert_eq!(r.dropped_labels, counts.iter().filter(|&&c| c < s).count());
    }
}

#[test]
fn generator_is_bit_reproducible() {
    let a = generate_hyperball(&small(11)).unwrap();
    let b = generate_hyperball(&small(11)).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
    assert_eq!(a.balls, b.balls);
    assert_ne!(generate_hyperball(&small(12)).unwrap().train, a.train);
}

#[test]
fn generator_labels_match_ball_membership() {
    let hb = generate_hyperball(&small(3)).unwrap();
    assert_eq!(hb.train.d(), 5);
    for i in 0..hb.train.n() {
        let f = hb.train.instance_features(i);
        let x: Vec<f64> = f.iter().filter(|&&(k, _)| k < 4).map(|&(_, v)| v).collect();
        if x.len() != 4 {
            continue;
        }
        let sq = f.iter().find(|&&(k, _)| k == 4).map_or(0.0, |&(_, v)| v);
        assert!((sq - x.iter().map(|v| v * v).sum::<f64>()).abs() < 1e-12);
        let expect: Vec<usize> = (0..hb.balls.len()).filter(|&j| hb.balls[j].contains(&x)).collect();
        assert_eq!(hb.train.instance_labels(i), expect.as_slice());
    }
}

#[test]
fn hyperball_priors_are_long_tailed() {
    let seeds = 40;
    let ok = (0..seeds)
        .filter(|&s| {
            let hb = generate_hyperball(&HyperBallConfig {
                seed: s,
                n_val: 10,
                n_test: 10,
                ..HyperBallConfig::default()
            })
            .unwrap();
            let p = estimate_priors(&hb.train, 1.0).unwrap();
            imbalance_stats(&p).unwrap().ilir >= 10.0
        })
        .count();
    assert!(ok as f64 >= 0.95 * seeds as f64, "{ok}/{seeds}");
}

#[test]
fn ratings_split_gives_features_the_extra_item() {
    let r = |user, item, rating| Rating { user, item, rating };
    let train = vec![r(1, 0, 5), r(1, 1, 4), r(1, 2, 5), r(2, 3, 5), r(2, 0, 1)];
    let probe = vec![r(1, 3, 5), r(1, 4, 2)];
    let out = ratings_to_multilabel(&train, &probe, 5, 4, 1, 7).unwrap();
    assert_eq!(out.train.n(), 1);
    assert_eq!(out.train.instance_features(0).len(), 2);
    assert_eq!(out.train.instance_labels(0).len(), 1);
    assert_eq!(out.skipped_users, 1);
    assert_eq!(out.test.n(), 1);
    assert_eq!(out.test.instance_labels(0), &[3]);
    assert_eq!(out.test.instance_features(0).len(), 3);
    assert!((out.p_controlled - 0.2).abs() < 1e-15);
}
