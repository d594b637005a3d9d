//! One-vs-all linear probabilistic classifiers.
//!
//! Each label `j` has a logistic model `f_j(x) = σ(w_j·x + b_j)`. The four
//! losses differ in how observed labels are treated: plainly, reweighted by
//! known propensities, or jointly with per-label propensities `σ(p'_j)` that
//! are learned alongside the classifier.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{SparseDataset, SparseRow};
use crate::datagen::split_indices;
use crate::error::{Error, Result};
use crate::metrics::PredictionMatrix;
use crate::propensity::PropensityAssignment;
use crate::rng;

/// Probability clamp applied before every logarithm.
pub const PROB_EPS: f64 = 1e-12;

fn clamp_prob(x: f64) -> f64 {
    x.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Logistic loss and its derivative in `f`.
pub fn loss_vanilla(y: f64, f: f64) -> (f64, f64) {
    let f = clamp_prob(f);
    (
        -y * f.ln() - (1.0 - y) * (1.0 - f).ln(),
        -y / f + (1.0 - y) / (1.0 - f),
    )
}

/// Propensity-reweighted logistic loss and its derivative in `f`.
///
/// For an observed positive with `p < 1` the second coefficient is negative.
pub fn loss_unbiased(y: f64, p: f64, f: f64) -> (f64, f64) {
    let f = clamp_prob(f);
    let w = y / p;
    (
        -w * f.ln() - (1.0 - w) * (1.0 - f).ln(),
        -w / f + (1.0 - w) / (1.0 - f),
    )
}

/// Likelihood of `ỹ` under `P[ỹ = 1] = p·f`, with derivatives in `f` and `p`.
pub fn loss_pejl_plug(y: f64, p: f64, f: f64) -> (f64, f64, f64) {
    let q = clamp_prob(p * f);
    let dq = -y / q + (1.0 - y) / (1.0 - q);
    (-y * q.ln() - (1.0 - y) * (1.0 - q).ln(), dq * p, dq * f)
}

/// Mask-model loss for propensity `φ` given a clean-probability estimate
/// `η̂`, with its derivative in `φ`.
pub fn loss_pejl_mask(y: f64, eta: f64, phi: f64) -> (f64, f64) {
    let eta = eta.clamp(PROB_EPS, 1.0);
    let phi = clamp_prob(phi);
    let w = y / eta;
    (
        -w * phi.ln() - (1.0 - w) * (1.0 - phi).ln(),
        -w / phi + (1.0 - w) / (1.0 - phi),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Vanilla,
    Unbiased,
    PejlPlug,
    PejlMask,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Vanilla => "vanilla",
            LossKind::Unbiased => "unbiased",
            LossKind::PejlPlug => "pejl_plug",
            LossKind::PejlMask => "pejl_mask",
        }
    }

    pub fn is_joint(self) -> bool {
        matches!(self, LossKind::PejlPlug | LossKind::PejlMask)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            LossKind::Vanilla,
            LossKind::Unbiased,
            LossKind::PejlPlug,
            LossKind::PejlMask,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown loss {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with L2 weight decay added to the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    cfg: AdamConfig,
    lr: f64,
    wd: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(size: usize, lr: f64, wd: f64, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            lr,
            wd,
            m: vec![0.0; size],
            v: vec![0.0; size],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        self.t += 1;
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (k, (x, &g)) in params.iter_mut().zip(grad).enumerate() {
            let g = g + self.wd * *x;
            self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * g;
            self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * g * g;
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            *x -= self.lr * mh / (vh.sqrt() + eps);
        }
    }
}

/// Linear one-vs-all model; `w` is `m × d` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOvaModel {
    pub m: usize,
    pub d: usize,
    pub w: Vec<f64>,
    pub bias: Vec<f64>,
    pub prop_logits: Option<Vec<f64>>,
}

impl LinearOvaModel {
    pub fn zeros(m: usize, d: usize) -> Self {
        Self {
            m,
            d,
            w: vec![0.0; m * d],
            bias: vec![0.0; m],
            prop_logits: None,
        }
    }

    /// Weights `U(−√(1/d), √(1/d))`, zero bias, and for joint losses
    /// propensity logits `U(−e, e)`.
    pub fn init(m: usize, d: usize, joint: bool, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "trainer/init", 0);
        let bound = (1.0 / d as f64).sqrt();
        let w = (0..m * d).map(|_| rng.random_range(-bound..bound)).collect();
        let e = std::f64::consts::E;
        let prop_logits = joint.then(|| (0..m).map(|_| rng.random_range(-e..e)).collect());
        Self {
            m,
            d,
            w,
            bias: vec![0.0; m],
            prop_logits,
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.w[j * self.d..(j + 1) * self.d]
    }

    /// Logits `w_j·x + b_j` of every label.
    pub fn logits_into(&self, x: &[(usize, f64)], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (j, z) in out.iter_mut().enumerate() {
            let row = &self.w[j * self.d..(j + 1) * self.d];
            for &(f, v) in x {
                *z += row[f] * v;
            }
        }
    }

    /// `σ(p'_j)` for joint models.
    pub fn propensities(&self) -> Option<Vec<f64>> {
        self.prop_logits
            .as_ref()
            .map(|l| l.iter().map(|&v| sigmoid(v)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.bias).all(|v| v.is_finite())
            && self
                .prop_logits
                .as_ref()
                .is_none_or(|l| l.iter().all(|v| v.is_finite()))
    }
}

/// Scores `f_j(x)` of every instance and label.
pub fn predict(model: &LinearOvaModel, ds: &SparseDataset) -> Result<PredictionMatrix> {
    if model.d != ds.d() {
        return Err(Error::DimensionMismatch(format!(
            "model has d={}, dataset has d={}",
            model.d,
            ds.d()
        )));
    }
    let scores: Vec<f64> = ds
        .features()
        .par_iter()
        .flat_map_iter(|x| {
            let mut z = vec![0.0; model.m];
            model.logits_into(x, &mut z);
            z.into_iter().map(sigmoid)
        })
        .collect();
    PredictionMatrix::new(ds.n(), model.m, scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: LossKind,
    /// Known propensities for the unbiased loss.
    #[serde(skip)]
    pub propensities: Option<PropensityAssignment>,
    pub lr_grid: Vec<f64>,
    pub wd_grid: Vec<f64>,
    pub adam: AdamConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Vanilla,
            propensities: None,
            lr_grid: vec![0.005, 0.01, 0.05, 0.1],
            wd_grid: vec![0.0, 1e-8, 1e-7, 1e-6],
            adam: AdamConfig::default(),
            epochs: 100,
            batch_size: 128,
            patience: 5,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.lr_grid.is_empty() || self.wd_grid.is_empty() {
            return Err(Error::InvalidArgument("hyperparameter grids must be non-empty".into()));
        }
        if self.lr_grid.iter().chain(&self.wd_grid).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("grid values must be finite and ≥ 0".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "val_fraction={} must lie in (0, 0.5)",
                self.val_fraction
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch_size must be ≥ 1".into()));
        }
        match (&self.propensities, self.loss) {
            (None, LossKind::Unbiased) => Err(Error::InvalidArgument(
                "the unbiased loss needs propensities".into(),
            )),
            (Some(p), _) if p.m() != m => Err(Error::DimensionMismatch(format!(
                "{} propensities for {m} labels",
                p.m()
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::Ok => f.write_str("ok"),
            CellStatus::Failed(why) => write!(f, "failed: {why}"),
        }
    }
}

/// One grid cell of the hyperparameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningEntry {
    pub lr: f64,
    pub wd: f64,
    pub val_objective: f64,
    pub epochs_ran: usize,
    pub status: CellStatus,
}

pub const TUNING_TSV_HEADER: &str = "lr\twd\tval_objective\tepochs_ran\tstatus";

impl TuningEntry {
    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{:.6}\t{}\t{}",
            self.lr, self.wd, self.val_objective, self.epochs_ran, self.status
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearOvaModel,
    pub tuning_log: Vec<TuningEntry>,
    /// Index of the selected cell in `tuning_log`.
    pub best: usize,
}

/// Which parameter group an epoch updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Classifier and, for the plug loss, propensity logits.
    Joint,
    /// Classifier only, propensities frozen.
    Classifier,
    /// Propensity logits only, classifier frozen.
    Propensity,
}

struct Trainer<'a> {
    features: &'a [SparseRow],
    labels: &'a [Vec<usize>],
    kind: LossKind,
    /// Fixed propensities, all ones unless the loss is unbiased.
    p: Vec<f64>,
    batch_size: usize,
}

/// Visits every label of instance `i` with its observed value.
fn for_each_label(labels: &[usize], m: usize, mut f: impl FnMut(usize, f64)) {
    let mut next = labels.iter().peekable();
    for j in 0..m {
        let y = if next.peek() == Some(&&j) {
            next.next();
            1.0
        } else {
            0.0
        };
        f(j, y);
    }
}

impl Trainer<'_> {
    /// Mean over instances of the summed per-label loss. Both joint losses
    /// are scored with the plug likelihood.
    fn objective(&self, model: &LinearOvaModel, idx: &[usize]) -> f64 {
        let m = model.m;
        let props = model.propensities();
        let mut z = vec![0.0; m];
        let mut total = Vec::with_capacity(idx.len());
        for &i in idx {
            model.logits_into(&self.features[i], &mut z);
            let mut s = 0.0;
            for_each_label(&self.labels[i], m, |j, y| {
                let f = sigmoid(z[j]);
                s += match (self.kind, &props) {
                    (LossKind::Vanilla, _) => loss_vanilla(y, f).0,
                    (LossKind::Unbiased, _) => loss_unbiased(y, self.p[j], f).0,
                    (_, Some(p)) => loss_pejl_plug(y, p[j], f).0,
                    (_, None) => f64::NAN,
                };
            });
            total.push(s);
        }
        crate::metrics::pairwise_sum(&total) / idx.len().max(1) as f64
    }

    #[allow(clippy::too_many_arguments)]
    fn epoch(
        &self,
        model: &mut LinearOvaModel,
        order: &[usize],
        phase: Phase,
        opt_w: &mut Adam,
        opt_p: &mut Adam,
    ) {
        let (m, d) = (model.m, model.d);
        let mut gw = vec![0.0; m * d + m];
        let mut gp = vec![0.0; m];
        let mut z = vec![0.0; m];
        let mut params = Vec::with_capacity(m * d + m);
        for batch in order.chunks(self.batch_size) {
            gw.iter_mut().for_each(|g| *g = 0.0);
            gp.iter_mut().for_each(|g| *g = 0.0);
            let props = model.propensities();
            for &i in batch {
                let x = &self.features[i];
                model.logits_into(x, &mut z);
                for_each_label(&self.labels[i], m, |j, y| {
                    let f = sigmoid(z[j]);
                    let (dz, dl) = self.logit_grads(y, f, j, props.as_deref(), phase);
                    if dz != 0.0 {
                        let row = &mut gw[j * d..(j + 1) * d];
                        for &(k, v) in x {
                            row[k] += dz * v;
                        }
                        gw[m * d + j] += dz;
                    }
                    gp[j] += dl;
                });
            }
            let scale = 1.0 / batch.len() as f64;
            if phase != Phase::Propensity {
                gw.iter_mut().for_each(|g| *g *= scale);
                params.clear();
                params.extend_from_slice(&model.w);
                params.extend_from_slice(&model.bias);
                opt_w.step(&mut params, &gw);
                model.w.copy_from_slice(&params[..m * d]);
                model.bias.copy_from_slice(&params[m * d..]);
            }
            if phase != Phase::Classifier {
                if let Some(logits) = model.prop_logits.as_mut() {
                    gp.iter_mut().for_each(|g| *g *= scale);
                    opt_p.step(logits, &gp);
                }
            }
        }
    }

    /// Derivatives of one label's loss with respect to its logit and its
    /// propensity logit.
    fn logit_grads(&self, y: f64, f: f64, j: usize, props: Option<&[f64]>, phase: Phase) -> (f64, f64) {
        match (self.kind, phase) {
            (LossKind::Vanilla, _) => (f - y, 0.0),
            (LossKind::Unbiased, _) => (f - y / self.p[j], 0.0),
            (LossKind::PejlMask, Phase::Propensity) => {
                let phi = props.map_or(1.0, |p| p[j]);
                (0.0, phi - y / f.clamp(PROB_EPS, 1.0))
            }
            (_, _) => {
                let p = props.map_or(1.0, |p| p[j]);
                let q = clamp_prob(p * f);
                let dz = -y * (1.0 - f) + (1.0 - y) * p * f * (1.0 - f) / (1.0 - q);
                let dl = -y * (1.0 - p) + (1.0 - y) * f * p * (1.0 - p) / (1.0 - q);
                (dz, if phase == Phase::Joint { dl } else { 0.0 })
            }
        }
    }
}

struct CellResult {
    model: LinearOvaModel,
    entry: TuningEntry,
}

fn train_cell(
    trainer: &Trainer<'_>,
    fit_idx: &[usize],
    halves: &[Vec<usize>],
    val_idx: &[usize],
    lr: f64,
    wd: f64,
    cfg: &TrainConfig,
    m: usize,
    d: usize,
) -> CellResult {
    let mut model = LinearOvaModel::init(m, d, cfg.loss.is_joint(), cfg.seed);
    let mut opt_w = Adam::new(m * d + m, lr, wd, cfg.adam);
    let mut opt_p = Adam::new(m, lr, wd, cfg.adam);
    let mut best = (f64::INFINITY, model.clone());
    let mut since_best = 0;
    let mut epochs_ran = 0;
    for epoch in 0..cfg.epochs {
        let (phase, base): (Phase, &[usize]) = match cfg.loss {
            LossKind::PejlMask if epoch % 2 == 0 => (Phase::Classifier, &halves[0]),
            LossKind::PejlMask => (Phase::Propensity, &halves[1]),
            _ => (Phase::Joint, fit_idx),
        };
        let mut order = base.to_vec();
        order.shuffle(&mut rng::stream(cfg.seed, "trainer/epoch", epoch as u64));
        trainer.epoch(&mut model, &order, phase, &mut opt_w, &mut opt_p);
        epochs_ran = epoch + 1;
        let obj = trainer.objective(&model, val_idx);
        if !obj.is_finite() || !model.is_finite() {
            return CellResult {
                model: best.1,
                entry: TuningEntry {
                    lr,
                    wd,
                    val_objective: f64::NAN,
                    epochs_ran,
                    status: CellStatus::Failed(format!("non-finite objective at epoch {epochs_ran}")),
                },
            };
        }
        if obj < best.0 {
            best = (obj, model.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    CellResult {
        model: best.1,
        entry: TuningEntry {
            lr,
            wd,
            val_objective: best.0,
            epochs_ran,
            status: CellStatus::Ok,
        },
    }
}

/// Trains on the biased training set with grid search over learning rate
/// and weight decay.
///
/// A `val_fraction` share of `train` is held out and scored with the
/// training objective; each cell stops early after `patience` epochs without
/// improvement and keeps its best snapshot. Cells run in parallel and each
/// is deterministic, so the result does not depend on the thread count.
pub fn train_ova(train: &SparseDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    let (m, d) = (train.m(), train.d());
    config.validate(m)?;
    if train.n() < 2 {
        return Err(Error::InvalidArgument("training needs at least two instances".into()));
    }
    let mut split_rng = rng::stream(config.seed, "trainer/split", 0);
    let parts = split_indices(
        train.n(),
        &[1.0 - config.val_fraction, config.val_fraction],
        &mut split_rng,
    )?;
    let (mut fit_idx, mut val_idx) = (parts[0].clone(), parts[1].clone());
    if val_idx.is_empty() {
        val_idx.push(fit_idx.pop().expect("n ≥ 2"));
    }
    fit_idx.sort_unstable();
    val_idx.sort_unstable();
    let half = fit_idx.len().div_ceil(2);
    let halves = vec![fit_idx[..half].to_vec(), fit_idx[half..].to_vec()];
    if config.loss == LossKind::PejlMask && halves[1].is_empty() {
        return Err(Error::InvalidArgument("too few instances for two training halves".into()));
    }
    let p = match (&config.propensities, config.loss) {
        (Some(a), LossKind::Unbiased) => a.p.clone(),
        _ => vec![1.0; m],
    };
    let trainer = Trainer {
        features: train.features(),
        labels: train.labels(),
        kind: config.loss,
        p,
        batch_size: config.batch_size,
    };
    let grid: Vec<(f64, f64)> = config
        .lr_grid
        .iter()
        .flat_map(|&lr| config.wd_grid.iter().map(move |&wd| (lr, wd)))
        .collect();
    let cells: Vec<CellResult> = grid
        .par_iter()
        .map(|&(lr, wd)| train_cell(&trainer, &fit_idx, &halves, &val_idx, lr, wd, config, m, d))
        .collect();
    let best = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.entry.status == CellStatus::Ok)
        .min_by(|(a, x), (b, y)| {
            x.entry
                .val_objective
                .total_cmp(&y.entry.val_objective)
                .then(a.cmp(b))
        })
        .map(|(k, _)| k)
        .ok_or_else(|| Error::Training("every grid cell diverged".into()))?;
    let tuning_log = cells.iter().map(|c| c.entry.clone()).collect();
    let model = cells.into_iter().nth(best).expect("index from enumerate").model;
    Ok(TrainOutcome {
        model,
        tuning_log,
        best,
    })
}

const CHECKPOINT_MAGIC: &str = "xprop-model v1";

/// Text checkpoint; floats are written in shortest round-trip form.
pub fn write_checkpoint(model: &LinearOvaModel, config_hash: &str) -> String {
    let join = |xs: &[f64]| xs.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ");
    let mut out = format!(
        "{CHECKPOINT_MAGIC}\nm {} d {} config_hash {config_hash}\nbias {}\n",
        model.m,
        model.d,
        join(&model.bias)
    );
    if let Some(l) = &model.prop_logits {
        out.push_str(&format!("prop {}\n", join(l)));
    }
    for j in 0..model.m {
        out.push_str(&format!("w {}\n", join(model.row(j))));
    }
    out
}

/// Inverse of [`write_checkpoint`]; returns the model and the config hash.
pub fn read_checkpoint(text: &str) -> Result<(LinearOvaModel, String)> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let bad = |line: usize, msg: &str| Error::parse(line, msg);
    match lines.next() {
        Some((_, l)) if l == CHECKPOINT_MAGIC => {}
        _ => return Err(bad(1, "not a model checkpoint")),
    }
    let (ln, header) = lines.next().ok_or_else(|| bad(2, "missing header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (m, d, hash) = match h.as_slice() {
        ["m", m, "d", d, "config_hash", hash] => (
            m.parse::<usize>().map_err(|_| bad(ln, "bad m"))?,
            d.parse::<usize>().map_err(|_| bad(ln, "bad d"))?,
            hash.to_string(),
        ),
        _ => return Err(bad(ln, "malformed header")),
    };
    let floats = |ln: usize, tag: &str, line: &str, len: usize| -> Result<Vec<f64>> {
        let mut it = line.split_whitespace();
        if it.next() != Some(tag) {
            return Err(bad(ln, &format!("expected {tag:?} line")));
        }
        let v = it
            .map(|t| t.parse::<f64>().map_err(|_| bad(ln, &format!("bad number {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != len {
            return Err(bad(ln, &format!("expected {len} values, got {}", v.len())));
        }
        Ok(v)
    };
    let (ln, l) = lines.next().ok_or_else(|| bad(3, "missing bias"))?;
    let bias = floats(ln, "bias", l, m)?;
    let rest: Vec<(usize, &str)> = lines.filter(|(_, l)| !l.trim().is_empty()).collect();
    let (prop_logits, rows) = match rest.first() {
        Some((ln, l)) if l.starts_with("prop") => (Some(floats(*ln, "prop", l, m)?), &rest[1..]),
        _ => (None, &rest[..]),
    };
    if rows.len() != m {
        return Err(bad(ln, &format!("expected {m} weight rows, got {}", rows.len())));
    }
    let mut w = Vec::with_capacity(m * d);
    for (ln, l) in rows {
        w.extend(floats(*ln, "w", l, d)?);
    }
    Ok((
        LinearOvaModel {
            m,
            d,
            w,
            bias,
            prop_logits,
        },
        hash,
    ))
}
