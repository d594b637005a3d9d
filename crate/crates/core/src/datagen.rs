//! Synthetic data and noise injection.

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{SparseDataset, SparseRow};
use crate::error::{Error, Result};
use crate::propensity::PropensityAssignment;
use crate::rng::{self, Rng};

/// Settings of the hyper-ball generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperBallConfig {
    pub m: usize,
    pub dim: usize,
    /// Radii are drawn log-uniformly from this range.
    pub radius_range: (f64, f64),
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Appends `‖x‖²` as feature `dim`, which makes every label ball
    /// linearly separable.
    pub squared_norm_feature: bool,
}

impl Default for HyperBallConfig {
    fn default() -> Self {
        Self {
            m: 100,
            dim: 4,
            radius_range: (0.05, 0.5),
            seed: 0,
            n_train: 10_000,
            n_val: 2_000,
            n_test: 5_000,
            squared_norm_feature: true,
        }
    }
}

impl HyperBallConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.radius_range;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "radius range ({lo}, {hi}) must satisfy 0 < r_min ≤ r_max < 1"
            )));
        }
        if self.dim < 2 {
            return Err(Error::InvalidArgument(format!("dim={} must be ≥ 2", self.dim)));
        }
        if self.m == 0 {
            return Err(Error::InvalidArgument("m must be ≥ 1".into()));
        }
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::InvalidArgument("every split needs at least one instance".into()));
        }
        Ok(())
    }

    /// Feature count of the generated datasets.
    pub fn d(&self) -> usize {
        self.dim + usize::from(self.squared_norm_feature)
    }
}

/// One label region `{x : ‖x − center‖ ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl LabelBall {
    pub fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        d2 <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperBall {
    pub train: SparseDataset,
    pub val: SparseDataset,
    pub test: SparseDataset,
    pub balls: Vec<LabelBall>,
    /// `vol(S_j) / vol(S) = r_j^dim`.
    pub true_priors: Vec<f64>,
}

/// Uniform point in the unit ball of `R^dim`.
pub fn sample_unit_ball(rng: &mut Rng, dim: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let u: f64 = rng.random();
            let scale = u.powf(1.0 / dim as f64) / norm;
            return g.into_iter().map(|v| v * scale).collect();
        }
    }
}

fn sample_ball(seed: u64, j: usize, cfg: &HyperBallConfig) -> LabelBall {
    let mut rng = rng::stream(seed, "hyperball/label", j as u64);
    let (lo, hi) = cfg.radius_range;
    let radius = if lo == hi {
        lo
    } else {
        rng.random_range(lo.ln()..hi.ln()).exp()
    };
    let center = sample_unit_ball(&mut rng, cfg.dim)
        .into_iter()
        .map(|v| v * (1.0 - radius))
        .collect();
    LabelBall { center, radius }
}

/// Features and labels of one point.
pub fn featurize(x: &[f64], balls: &[LabelBall], squared_norm: bool) -> (SparseRow, Vec<usize>) {
    let mut row: SparseRow = x
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(f, &v)| (f, v))
        .collect();
    if squared_norm {
        let s: f64 = x.iter().map(|v| v * v).sum();
        if s != 0.0 {
            row.push((x.len(), s));
        }
    }
    let labels = balls
        .iter()
        .enumerate()
        .filter(|(_, b)| b.contains(x))
        .map(|(j, _)| j)
        .collect();
    (row, labels)
}

/// Generates the three splits of a hyper-ball problem.
///
/// Instances are drawn i.i.d. from the unit ball, instance `i` from its own
/// stream, and then cut into train, validation and test in that order.
pub fn generate_hyperball(cfg: &HyperBallConfig) -> Result<HyperBall> {
    cfg.validate()?;
    let balls: Vec<LabelBall> = (0..cfg.m).map(|j| sample_ball(cfg.seed, j, cfg)).collect();
    let total = cfg.n_train + cfg.n_val + cfg.n_test;
    let rows: Vec<(SparseRow, Vec<usize>)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, "hyperball/instance", i as u64);
            let x = sample_unit_ball(&mut rng, cfg.dim);
            featurize(&x, &balls, cfg.squared_norm_feature)
        })
        .collect();
    let mut rows = rows.into_iter();
    let mut take = |n: usize| -> Result<SparseDataset> {
        let (f, l): (Vec<_>, Vec<_>) = rows.by_ref().take(n).unzip();
        SparseDataset::new(cfg.d(), cfg.m, f, l)
    };
    let train = take(cfg.n_train)?;
    let val = take(cfg.n_val)?;
    let test = take(cfg.n_test)?;
    let true_priors = balls.iter().map(|b| b.radius.powi(cfg.dim as i32)).collect();
    Ok(HyperBall {
        train,
        val,
        test,
        balls,
        true_priors,
    })
}

/// Record of one noise injection.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrace {
    pub seed: u64,
    pub model: PropensityAssignment,
    pub removed: usize,
    pub kept: usize,
}

/// Deletes each positive `(i, j)` independently with probability `1 − p_j`.
pub fn inject_missing(
    clean: &SparseDataset,
    p: &PropensityAssignment,
    seed: u64,
) -> Result<(SparseDataset, NoiseTrace)> {
    if p.m() != clean.m() {
        return Err(Error::DimensionMismatch(format!(
            "{} propensities for {} labels",
            p.m(),
            clean.m()
        )));
    }
    let labels: Vec<Vec<usize>> = (0..clean.n())
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, "inject", i as u64);
            clean
                .instance_labels(i)
                .iter()
                .copied()
                .filter(|&j| rng.random::<f64>() < p.p[j])
                .collect()
        })
        .collect();
    let kept: usize = labels.iter().map(Vec::len).sum();
    let removed = clean.num_positives() - kept;
    let biased = clean.with_labels(labels)?;
    Ok((
        biased,
        NoiseTrace {
            seed,
            model: p.clone(),
            removed,
            kept,
        },
    ))
}

/// Shuffles `0..n` and cuts it into consecutive parts of the given fractions.
///
/// Part boundaries are `round(n · cumulative fraction)`.
pub fn split_indices(n: usize, fractions: &[f64], rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() || fractions.iter().any(|&f| !(f >= 0.0)) {
        return Err(Error::InvalidArgument("fractions must be non-negative".into()));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("fractions sum to {sum}, not 1")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut parts = Vec::with_capacity(fractions.len());
    let mut cum = 0.0;
    let mut start = 0;
    for (q, &f) in fractions.iter().enumerate() {
        cum += f;
        let end = if q + 1 == fractions.len() {
            n
        } else {
            ((cum * n as f64).round() as usize).min(n)
        };
        parts.push(idx[start..end].to_vec());
        start = end;
    }
    Ok(parts)
}

/// Output of [`resplit_benchmark`].
#[derive(Debug, Clone, PartialEq)]
pub struct Resplit {
    /// One dataset per requested fraction, in order.
    pub parts: Vec<SparseDataset>,
    /// `label_map[new] = old`.
    pub label_map: Vec<usize>,
    pub dropped_labels: usize,
}

/// Keeps labels with at least `s` positives, re-indexes them densely and
/// splits the shuffled instances by `fractions`.
pub fn resplit_benchmark(
    full: &SparseDataset,
    s: usize,
    fractions: &[f64],
    seed: u64,
) -> Result<Resplit> {
    if s == 0 {
        return Err(Error::InvalidArgument("s must be ≥ 1".into()));
    }
    let counts = full.label_counts();
    let label_map: Vec<usize> = (0..full.m()).filter(|&j| counts[j] >= s).collect();
    if label_map.is_empty() {
        return Err(Error::InvalidDataset(format!("no label has at least {s} positives")));
    }
    let mut new_index = vec![usize::MAX; full.m()];
    for (new, &old) in label_map.iter().enumerate() {
        new_index[old] = new;
    }
    let labels: Vec<Vec<usize>> = full
        .labels()
        .iter()
        .map(|ls| {
            ls.iter()
                .filter(|&&j| new_index[j] != usize::MAX)
                .map(|&j| new_index[j])
                .collect()
        })
        .collect();
    let relabelled = SparseDataset::new(full.d(), label_map.len(), full.features().to_vec(), labels)?;
    let mut rng = rng::stream(seed, "resplit", 0);
    let parts = split_indices(full.n(), fractions, &mut rng)?
        .iter()
        .map(|idx| relabelled.subset(idx))
        .collect::<Result<Vec<_>>>()?;
    Ok(Resplit {
        parts,
        dropped_labels: full.m() - label_map.len(),
        label_map,
    })
}

/// One explicit-feedback rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rating {
    pub user: u64,
    pub item: usize,
    pub rating: u8,
}

/// Parses `user<TAB>item<TAB>rating` lines; blank lines are ignored.
pub fn parse_ratings<R: BufRead>(reader: R) -> Result<Vec<Rating>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(k + 1, format!("expected 3 tab-separated columns, got {}", cols.len())));
        }
        let field = |c: usize, what: &str| Error::parse(k + 1, format!("bad {what} {:?}", cols[c]));
        let user = cols[0].trim().parse().map_err(|_| field(0, "user"))?;
        let item = cols[1].trim().parse().map_err(|_| field(1, "item"))?;
        let rating: u8 = cols[2].trim().parse().map_err(|_| field(2, "rating"))?;
        if !(1..=5).contains(&rating) {
            return Err(Error::parse(k + 1, format!("rating {rating} outside 1..=5")));
        }
        out.push(Rating { user, item, rating });
    }
    Ok(out)
}

/// Multi-label view of a ratings dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMultilabel {
    pub train: SparseDataset,
    pub test: SparseDataset,
    /// Propensity of the bias-controlled test side, `r / m`.
    pub p_controlled: f64,
    /// Users left out because they had too few positives.
    pub skipped_users: usize,
}

fn positives_by_user(ratings: &[Rating], m: usize, threshold: u8) -> Result<BTreeMap<u64, Vec<usize>>> {
    let mut by_user: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for r in ratings {
        if r.item >= m {
            return Err(Error::InvalidArgument(format!("item {} ≥ m={m}", r.item)));
        }
        let entry = by_user.entry(r.user).or_default();
        if r.rating >= threshold {
            entry.push(r.item);
        }
    }
    for items in by_user.values_mut() {
        items.sort_unstable();
        items.dedup();
    }
    Ok(by_user)
}

fn binary_row(items: &[usize]) -> SparseRow {
    items.iter().map(|&j| (j, 1.0)).collect()
}

/// Splits a user's positives into (features, labels); the feature half gets
/// the extra item when the count is odd.
pub fn split_user_positives(items: &[usize], seed: u64, user: u64) -> (Vec<usize>, Vec<usize>) {
    let mut shuffled = items.to_vec();
    shuffled.shuffle(&mut rng::stream(seed, "ratings/user", user));
    let cut = items.len().div_ceil(2);
    let mut feats = shuffled[..cut].to_vec();
    let mut labels = shuffled[cut..].to_vec();
    feats.sort_unstable();
    labels.sort_unstable();
    (feats, labels)
}

/// Turns ratings into item-indexed multi-label data.
///
/// Training users (ratings in `train`) with at least two positives have their
/// positives split in halves, features and labels. Every user with probe
/// ratings becomes a test instance whose features are all training-side
/// positives and whose labels are the probe positives; such users need at
/// least one training-side positive. `probe_items` is the number of items each
/// probe user rated uniformly at random, giving `p_controlled = probe_items / m`.
pub fn ratings_to_multilabel(
    train: &[Rating],
    probe: &[Rating],
    m: usize,
    threshold: u8,
    probe_items: usize,
    seed: u64,
) -> Result<RatingsMultilabel> {
    if m == 0 || probe_items == 0 || probe_items > m {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ probe_items={probe_items} ≤ m={m}"
        )));
    }
    let train_pos = positives_by_user(train, m, threshold)?;
    let probe_pos = positives_by_user(probe, m, threshold)?;
    let mut skipped = 0;
    let (mut tr_f, mut tr_l) = (Vec::new(), Vec::new());
    for (&user, items) in &train_pos {
        if items.len() < 2 {
            skipped += 1;
            continue;
        }
        let (f, l) = split_user_positives(items, seed, user);
        tr_f.push(binary_row(&f));
        tr_l.push(l);
    }
    let (mut te_f, mut te_l) = (Vec::new(), Vec::new());
    for (user, labels) in &probe_pos {
        match train_pos.get(user) {
            Some(items) if !items.is_empty() => {
                te_f.push(binary_row(items));
                te_l.push(labels.clone());
            }
            _ => skipped += 1,
        }
    }
    Ok(RatingsMultilabel {
        train: SparseDataset::new(m, m, tr_f, tr_l)?,
        test: SparseDataset::new(m, m, te_f, te_l)?,
        p_controlled: probe_items as f64 / m as f64,
        skipped_users: skipped,
    })
}
