use proptest::prelude::*;
use xprop_core::data::estimate_priors;
use xprop_core::datagen::{generate_hyperball, inject_missing, HyperBallConfig};
use xprop_core::metrics::{mean_se, precision_at_k};
use xprop_core::propensity::{assign, PropensityAssignment, PropensityModel};
use xprop_core::trainer::{
    loss_pejl_mask, loss_pejl_plug, loss_unbiased, loss_vanilla, predict, train_ova, Adam, AdamConfig,
    LossKind, TrainConfig,
};

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-6 * x.abs().max(1e-3);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-6 * analytic.abs().max(numeric.abs()).max(1.0)
}

proptest! {
    #[test]
    fn loss_gradients_match_differences(y in 0u8..2, p in 0.05f64..1.0, f in 0.02f64..0.98, eta in 0.05f64..1.0) {
        let y = y as f64;
        prop_assert!(close(loss_vanilla(y, f).1, central(|x| loss_vanilla(y, x).0, f)));
        prop_assert!(close(loss_unbiased(y, p, f).1, central(|x| loss_unbiased(y, p, x).0, f)));
        let (_, df, dp) = loss_pejl_plug(y, p, f);
        prop_assert!(close(df, central(|x| loss_pejl_plug(y, p, x).0, f)));
        prop_assert!(close(dp, central(|x| loss_pejl_plug(y, x, f).0, p)));
        prop_assert!(close(loss_pejl_mask(y, eta, f).1, central(|x| loss_pejl_mask(y, eta, x).0, f)));
    }

    #[test]
    fn unbiased_loss_matches_clean_loss_in_expectation(p in 0.05f64..=1.0, f in 0.01f64..0.99) {
        // a positive is observed with probability p, a negative never
        let pos = p * loss_unbiased(1.0, p, f).0 + (1.0 - p) * loss_unbiased(0.0, p, f).0;
        let scale = loss_unbiased(1.0, p, f).0.abs().max(1.0);
        prop_assert!((pos - loss_vanilla(1.0, f).0).abs() <= 1e-13 * scale);
        prop_assert_eq!(loss_unbiased(0.0, p, f).0, loss_vanilla(0.0, f).0);
    }

    #[test]
    fn adam_with_zero_rate_is_identity(x in proptest::collection::vec(-10.0f64..10.0, 1..20), g in -5.0f64..5.0) {
        let mut params = x.clone();
        let mut opt = Adam::new(x.len(), 0.0, 0.0, AdamConfig::default());
        for _ in 0..5 {
            opt.step(&mut params, &vec![g; x.len()]);
        }
        prop_assert_eq!(params, x);
    }
}

fn tiny(seed: u64) -> HyperBallConfig {
    HyperBallConfig {
        m: 20,
        seed,
        n_train: 2000,
        n_val: 10,
        n_test: 1000,
        ..HyperBallConfig::default()
    }
}

fn quick(loss: LossKind, seed: u64, p: Option<PropensityAssignment>) -> TrainConfig {
    TrainConfig {
        loss,
        propensities: p,
        lr_grid: vec![0.05],
        wd_grid: vec![0.0],
        epochs: 30,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_bit_reproducible() {
    let hb = generate_hyperball(&tiny(5)).unwrap();
    for loss in [LossKind::Vanilla, LossKind::PejlPlug, LossKind::PejlMask] {
        let mut cfg = quick(loss, 3, None);
        cfg.lr_grid = vec![0.01, 0.05];
        let a = train_ova(&hb.train, &cfg).unwrap();
        let b = train_ova(&hb.train, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.tuning_log, b.tuning_log);
    }
}

#[test]
fn unbiased_training_needs_propensities() {
    let hb = generate_hyperball(&tiny(1)).unwrap();
    assert!(train_ova(&hb.train, &quick(LossKind::Unbiased, 0, None)).is_err());
}

#[test]
fn true_propensities_do_not_hurt_clean_precision() {
    let seeds = 20;
    let mut diffs = Vec::new();
    for seed in 0..seeds {
        let hb = generate_hyperball(&tiny(seed)).unwrap();
        let priors = estimate_priors(&hb.train, 1.0).unwrap();
        let p_star = assign(&PropensityModel::jpv_default(hb.train.n() as u64), &priors).unwrap();
        let (biased, _) = inject_missing(&hb.train, &p_star, seed).unwrap();
        let p1 = |p: &PropensityAssignment| {
            let model = train_ova(&biased, &quick(LossKind::Unbiased, seed, Some(p.clone()))).unwrap().model;
            precision_at_k(hb.test.labels(), &predict(&model, &hb.test).unwrap(), 1).unwrap().value
        };
        let ones = PropensityAssignment::constant(hb.train.m(), 1.0).unwrap();
        diffs.push(p1(&p_star) - p1(&ones));
    }
    let (mean, se) = mean_se(&diffs);
    assert!(mean >= 0.0, "mean P@1 gain {mean} ± {se}");
}
