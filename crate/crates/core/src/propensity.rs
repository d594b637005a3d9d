//! Label-wise propensity models.
//!
//! A propensity `p_j` is the probability that a truly relevant label `j` is
//! observed. All models here are functions of the observed label prior only,
//! with the exception of the JPV model which also depends on the number of
//! training instances.
//!
//! Every evaluated propensity is clamped into `[P_MIN, 1]` so that inverse
//! propensities stay finite; evaluations that had to be clamped are flagged.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::LabelPriors;
use crate::error::{Error, Result};

/// Smallest propensity any model may produce.
pub const P_MIN: f64 = 1e-6;

/// Parameters reported for the Wikipedia-based dataset.
pub const JPV_WIKIPEDIA: (f64, f64) = (0.5, 0.4);
/// Parameters reported for the Amazon dataset.
pub const JPV_AMAZON: (f64, f64) = (0.6, 2.6);
/// Average of the two, the customary default for other datasets.
pub const JPV_DEFAULT: (f64, f64) = (0.55, 1.5);

/// A propensity value together with a flag telling whether the raw model
/// output fell outside `(P_MIN, 1]` (or the model was evaluated in a regime
/// where it is known to leave its codomain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped {
    pub value: f64,
    pub degenerate: bool,
}

fn clamp(raw: f64) -> Clamped {
    if raw.is_nan() || raw < P_MIN {
        Clamped {
            value: P_MIN,
            degenerate: true,
        }
    } else if raw > 1.0 {
        Clamped {
            value: 1.0,
            degenerate: true,
        }
    } else {
        Clamped {
            value: raw,
            degenerate: false,
        }
    }
}

fn check_prior(prior: f64) -> Result<()> {
    if prior > 0.0 && prior < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("label prior {prior} outside (0, 1)")))
    }
}

/// JPV propensity `1 / (1 + (ln n − 1)(b+1)^a (n·π + b)^(−a))`.
///
/// For `n < 3` the factor `ln n − 1` is not positive and the raw value leaves
/// `(0, 1]`; the result is clamped and marked degenerate.
pub fn eval_jpv(prior: f64, n: u64, a: f64, b: f64) -> Result<Clamped> {
    check_prior(prior)?;
    if n < 1 {
        return Err(Error::Domain("JPV requires n ≥ 1".into()));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("non-finite JPV parameters a={a}, b={b}")));
    }
    let nf = n as f64;
    let base = nf * prior + b;
    if !(base > 0.0) {
        return Err(Error::Domain(format!(
            "n·π + b = {base} must be positive"
        )));
    }
    let c = (nf.ln() - 1.0) * (b + 1.0).powf(a) * (-a * base.ln()).exp();
    let mut out = clamp(1.0 / (1.0 + c));
    if n < 3 {
        out.degenerate = true;
    }
    Ok(out)
}

/// Power-law propensity `(β·π)^γ`.
pub fn eval_power(prior: f64, beta: f64, gamma: f64) -> Result<Clamped> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("power-law β={beta} must be positive")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("power-law γ={gamma} must be ≥ 0")));
    }
    let base = beta * prior;
    if !(base > 0.0) {
        return Err(Error::Domain(format!("β·π = {base} must be positive")));
    }
    Ok(clamp(base.powf(gamma)))
}

/// Richards curve `c + (d − c) / (e + f·exp(−g·π))^(1/h)`.
pub fn eval_richards(prior: f64, params: &[f64; 6]) -> Result<Clamped> {
    let [c, d, e, f, g, h] = *params;
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite Richards parameters {params:?}")));
    }
    if h == 0.0 {
        return Err(Error::Domain("Richards h must be non-zero".into()));
    }
    let base = e + f * (-g * prior).exp();
    if !(base > 0.0) {
        return Err(Error::Domain(format!(
            "Richards base e + f·exp(−g·π) = {base} must be positive"
        )));
    }
    let raw = c + (d - c) / base.powf(1.0 / h);
    if !raw.is_finite() {
        return Err(Error::Domain(format!("Richards value {raw} is not finite")));
    }
    Ok(clamp(raw))
}

/// Family tag of a propensity model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Constant,
    Jpv,
    PowerLaw,
    Richards,
    DirectTable,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Constant => "constant",
            ModelFamily::Jpv => "jpv",
            ModelFamily::PowerLaw => "power_law",
            ModelFamily::Richards => "richards",
            ModelFamily::DirectTable => "direct",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "constant" => ModelFamily::Constant,
            "jpv" => ModelFamily::Jpv,
            "power_law" | "power" => ModelFamily::PowerLaw,
            "richards" => ModelFamily::Richards,
            "direct" | "direct_table" => ModelFamily::DirectTable,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown propensity family {other:?}"
                )))
            }
        })
    }
}

/// A parameterized propensity model.
///
/// Serializes as a flat key-value table, e.g. `family = "jpv"`, `a = 0.55`,
/// `b = 1.5`, `n = 10000`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PropensityModel {
    Constant { p: f64 },
    Jpv { a: f64, b: f64, n: u64 },
    PowerLaw { beta: f64, gamma: f64 },
    Richards { c: f64, d: f64, e: f64, f: f64, g: f64, h: f64 },
    #[serde(rename = "direct")]
    DirectTable { table: Vec<f64> },
}

impl PropensityModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            PropensityModel::Constant { .. } => ModelFamily::Constant,
            PropensityModel::Jpv { .. } => ModelFamily::Jpv,
            PropensityModel::PowerLaw { .. } => ModelFamily::PowerLaw,
            PropensityModel::Richards { .. } => ModelFamily::Richards,
            PropensityModel::DirectTable { .. } => ModelFamily::DirectTable,
        }
    }

    /// The JPV model with the default `(a, b)` for `n` training instances.
    pub fn jpv_default(n: u64) -> Self {
        PropensityModel::Jpv {
            a: JPV_DEFAULT.0,
            b: JPV_DEFAULT.1,
            n,
        }
    }

    /// Flat parameter vector; the table of a direct model is not a parameter
    /// vector and yields an empty one.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            PropensityModel::Constant { p } => vec![p],
            PropensityModel::Jpv { a, b, n } => vec![a, b, n as f64],
            PropensityModel::PowerLaw { beta, gamma } => vec![beta, gamma],
            PropensityModel::Richards { c, d, e, f, g, h } => vec![c, d, e, f, g, h],
            PropensityModel::DirectTable { .. } => Vec::new(),
        }
    }

    pub fn param_names(family: ModelFamily) -> &'static [&'static str] {
        match family {
            ModelFamily::Constant => &["p"],
            ModelFamily::Jpv => &["a", "b", "n"],
            ModelFamily::PowerLaw => &["beta", "gamma"],
            ModelFamily::Richards => &["c", "d", "e", "f", "g", "h"],
            ModelFamily::DirectTable => &[],
        }
    }

    /// Rebuilds a model of `family` from its flat parameter vector.
    pub fn from_params(family: ModelFamily, params: &[f64]) -> Result<Self> {
        let want = Self::param_names(family).len();
        if params.len() != want || family == ModelFamily::DirectTable {
            return Err(Error::InvalidArgument(format!(
                "{family} expects {want} parameters, got {}",
                params.len()
            )));
        }
        let model = match family {
            ModelFamily::Constant => PropensityModel::Constant { p: params[0] },
            ModelFamily::Jpv => {
                let n = params[2];
                if !(n >= 1.0 && n.fract() == 0.0 && n < u64::MAX as f64) {
                    return Err(Error::Domain(format!("JPV n={n} must be a count ≥ 1")));
                }
                PropensityModel::Jpv {
                    a: params[0],
                    b: params[1],
                    n: n as u64,
                }
            }
            ModelFamily::PowerLaw => PropensityModel::PowerLaw {
                beta: params[0],
                gamma: params[1],
            },
            ModelFamily::Richards => PropensityModel::Richards {
                c: params[0],
                d: params[1],
                e: params[2],
                f: params[3],
                g: params[4],
                h: params[5],
            },
            ModelFamily::DirectTable => unreachable!(),
        };
        Ok(model)
    }

    /// Checks parameter constraints that do not depend on the prior.
    pub fn validate(&self) -> Result<()> {
        match *self {
            PropensityModel::Constant { p } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::Domain(format!("constant propensity {p} outside (0, 1]")));
                }
            }
            PropensityModel::Jpv { a, b, n } => {
                if n < 1 || !a.is_finite() || !b.is_finite() {
                    return Err(Error::Domain(format!("invalid JPV parameters a={a}, b={b}, n={n}")));
                }
            }
            PropensityModel::PowerLaw { beta, gamma } => {
                if !(beta > 0.0 && beta.is_finite() && gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::Domain(format!(
                        "invalid power-law parameters β={beta}, γ={gamma}"
                    )));
                }
            }
            PropensityModel::Richards { h, .. } => {
                if h == 0.0 || self.params().iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("invalid Richards parameters".into()));
                }
            }
            PropensityModel::DirectTable { ref table } => {
                if let Some((j, &p)) = table.iter().enumerate().find(|(_, &p)| !(p > 0.0 && p <= 1.0)) {
                    return Err(Error::at_label(
                        j,
                        Error::Domain(format!("table propensity {p} outside (0, 1]")),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the model for one label with observed prior `prior`.
    ///
    /// `label` is only used by the direct table.
    pub fn eval(&self, label: usize, prior: f64) -> Result<Clamped> {
        match *self {
            PropensityModel::Constant { p } => {
                self.validate()?;
                Ok(clamp(p))
            }
            PropensityModel::Jpv { a, b, n } => eval_jpv(prior, n, a, b),
            PropensityModel::PowerLaw { beta, gamma } => eval_power(prior, beta, gamma),
            PropensityModel::Richards { c, d, e, f, g, h } => {
                eval_richards(prior, &[c, d, e, f, g, h])
            }
            PropensityModel::DirectTable { ref table } => {
                let p = *table.get(label).ok_or_else(|| {
                    Error::DimensionMismatch(format!(
                        "direct table has {} labels, label {label} requested",
                        table.len()
                    ))
                })?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::Domain(format!("table propensity {p} outside (0, 1]")));
                }
                Ok(clamp(p))
            }
        }
    }

    /// Same model evaluated as if the dataset had `n` instances. Only the JPV
    /// family depends on `n`.
    pub fn with_sample_size(&self, n: u64) -> Self {
        match *self {
            PropensityModel::Jpv { a, b, .. } => PropensityModel::Jpv { a, b, n },
            _ => self.clone(),
        }
    }
}

impl fmt::Display for PropensityModel {
    /// Compact form `family:key=value,...`, accepted back by `FromStr`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = self.family();
        write!(f, "{family}")?;
        if let PropensityModel::DirectTable { table } = self {
            return write!(f, ":<{} labels>", table.len());
        }
        let names = Self::param_names(family);
        for (i, (name, v)) in names.iter().zip(self.params()).enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{name}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for PropensityModel {
    type Err = Error;

    /// Parses `family:key=value,...`, e.g. `jpv:a=0.55,b=1.5,n=10000`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let family: ModelFamily = family.trim().parse()?;
        if family == ModelFamily::DirectTable {
            return Err(Error::InvalidArgument(
                "direct tables cannot be given inline".into(),
            ));
        }
        let names = Self::param_names(family);
        let mut values: Vec<Option<f64>> = vec![None; names.len()];
        for kv in rest.split(',').filter(|kv| !kv.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("malformed parameter {kv:?}")))?;
            let pos = names.iter().position(|n| *n == k.trim()).ok_or_else(|| {
                Error::InvalidArgument(format!("{family} has no parameter {k:?}"))
            })?;
            values[pos] = Some(v.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("non-numeric value for {k}: {v:?}"))
            })?);
        }
        let params = values
            .iter()
            .zip(names)
            .map(|(v, n)| v.ok_or_else(|| Error::InvalidArgument(format!("{family}: missing {n}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_params(family, &params)
    }
}

/// Per-label propensities.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityAssignment {
    pub p: Vec<f64>,
    /// Labels whose value was clamped into `[P_MIN, 1]`.
    pub clamped: Vec<bool>,
    /// Provenance, e.g. the model's compact form or `"direct"`.
    pub source: String,
}

impl PropensityAssignment {
    pub fn m(&self) -> usize {
        self.p.len()
    }

    /// Uniform assignment, `p_j = p` for every label.
    pub fn constant(m: usize, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("constant propensity {p} outside (0, 1]")));
        }
        Ok(Self {
            p: vec![p; m],
            clamped: vec![false; m],
            source: format!("constant:p={p}"),
        })
    }

    /// Wraps an explicit table; values must lie in `(0, 1]`.
    pub fn from_values(p: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if let Some((j, &v)) = p.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::at_label(
                j,
                Error::Domain(format!("propensity {v} outside (0, 1]")),
            ));
        }
        let m = p.len();
        Ok(Self {
            p,
            clamped: vec![false; m],
            source: source.into(),
        })
    }

    pub fn inverse(&self) -> Vec<f64> {
        self.p.iter().map(|p| 1.0 / p).collect()
    }

    pub fn any_clamped(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }
}

/// Evaluates `model` for every label prior.
pub fn assign(model: &PropensityModel, priors: &LabelPriors) -> Result<PropensityAssignment> {
    if let PropensityModel::DirectTable { table } = model {
        if table.len() != priors.m() {
            return Err(Error::DimensionMismatch(format!(
                "direct table has {} labels, priors have {}",
                table.len(),
                priors.m()
            )));
        }
    }
    let mut p = Vec::with_capacity(priors.m());
    let mut clamped = Vec::with_capacity(priors.m());
    for (j, &prior) in priors.priors.iter().enumerate() {
        let v = model.eval(j, prior).map_err(|e| Error::at_label(j, e))?;
        p.push(v.value);
        clamped.push(v.degenerate);
    }
    Ok(PropensityAssignment {
        p,
        clamped,
        source: model.to_string(),
    })
}

/// Training-set propensities estimated from a bias-controlled validation set:
/// `p_j = π_j^train · p_j^c / π_j^val`.
pub fn direct_estimate(
    train: &LabelPriors,
    val: &LabelPriors,
    p_controlled: &[f64],
) -> Result<PropensityAssignment> {
    let m = train.m();
    if val.m() != m || p_controlled.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "train priors {m}, validation priors {}, controlled propensities {}",
            val.m(),
            p_controlled.len()
        )));
    }
    let mut p = Vec::with_capacity(m);
    let mut clamped = Vec::with_capacity(m);
    for j in 0..m {
        let (pt, pv, pc) = (train.priors[j], val.priors[j], p_controlled[j]);
        if !(pv > 0.0) {
            return Err(Error::at_label(
                j,
                Error::Domain("validation prior must be positive".into()),
            ));
        }
        if !(pc > 0.0 && pc <= 1.0) {
            return Err(Error::at_label(
                j,
                Error::Domain(format!("controlled propensity {pc} outside (0, 1]")),
            ));
        }
        let v = clamp(pt * pc / pv);
        p.push(v.value);
        clamped.push(v.degenerate);
    }
    Ok(PropensityAssignment {
        p,
        clamped,
        source: "direct".into(),
    })
}

/// Ground-truth conditional probability recovered from the observed one,
/// `min(η̃ / p, 1)`.
pub fn adjust_probability(observed: f64, p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 1.0);
    (observed / p).min(1.0)
}

/// Propensity of a fixed label prior evaluated along a grid of dataset sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingDiagnostic {
    pub points: Vec<(u64, f64)>,
    /// First grid index from which the sequence is strictly increasing up to
    /// the end, if such a tail of at least two points exists.
    pub increasing_from: Option<usize>,
    pub terminal: f64,
}

impl ScalingDiagnostic {
    pub fn eventually_increasing(&self) -> bool {
        self.increasing_from.is_some()
    }

    /// Whether every value equals the first one.
    pub fn is_constant(&self) -> bool {
        self.points.iter().all(|&(_, p)| p == self.points[0].1)
    }
}

/// Evaluates `model` at `prior` for each dataset size in `n_grid`.
pub fn scaling_profile(
    model: &PropensityModel,
    prior: f64,
    n_grid: &[u64],
) -> Result<ScalingDiagnostic> {
    if n_grid.is_empty() {
        return Err(Error::InvalidArgument("empty n grid".into()));
    }
    if n_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("n grid must be sorted ascending".into()));
    }
    let points = n_grid
        .iter()
        .map(|&n| Ok((n, model.with_sample_size(n).eval(0, prior)?.value)))
        .collect::<Result<Vec<_>>>()?;
    let mut start = points.len() - 1;
    while start > 0 && points[start - 1].1 < points[start].1 {
        start -= 1;
    }
    let increasing_from = (start + 1 < points.len()).then_some(start);
    let terminal = points[points.len() - 1].1;
    Ok(ScalingDiagnostic {
        points,
        increasing_from,
        terminal,
    })
}

/// JPV propensity of a label with fixed prior as the dataset grows.
pub fn scaling_diagnostic(a: f64, b: f64, prior: f64, n_grid: &[u64]) -> Result<ScalingDiagnostic> {
    if let Some(&n) = n_grid.iter().find(|&&n| n < 3) {
        return Err(Error::InvalidArgument(format!("grid value {n} < 3")));
    }
    scaling_profile(&PropensityModel::Jpv { a, b, n: 3 }, prior, n_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jpv_default_value() {
        // frozen from a 50-digit mpmath evaluation of the same expression
        let v = eval_jpv(1e-4, 1_000_000, 0.55, 1.5).unwrap();
        assert!(!v.degenerate);
        assert!((v.value - 0.374_353_784_311_220_8).abs() < 1e-12, "{}", v.value);
    }

    #[test]
    fn jpv_small_n_is_degenerate() {
        for n in [1, 2] {
            let v = eval_jpv(0.3, n, 0.55, 1.5).unwrap();
            assert!(v.degenerate);
            assert!(v.value >= P_MIN && v.value <= 1.0);
        }
        assert!(!eval_jpv(0.3, 3, 0.55, 1.5).unwrap().degenerate);
    }

    #[test]
    fn jpv_domain_errors() {
        assert!(eval_jpv(0.0, 100, 0.5, 0.4).is_err());
        assert!(eval_jpv(0.01, 0, 0.5, 0.4).is_err());
        assert!(eval_jpv(0.01, 10, 0.5, -5.0).is_err());
    }

    #[test]
    fn power_law_examples() {
        assert_eq!(eval_power(0.3, 1.0, 1.0).unwrap().value, 0.3);
        assert_eq!(eval_power(0.3, 7.0, 0.0).unwrap().value, 1.0);
        assert!((eval_power(0.01, 25.0, 0.5).unwrap().value - 0.5).abs() < 1e-15);
        assert!(eval_power(0.01, 0.0, 0.5).is_err());
    }

    #[test]
    fn richards_examples() {
        let plateau = [0.7, 0.7, 1.0, 3.0, 2.0, 0.5];
        assert!((eval_richards(0.2, &plateau).unwrap().value - 0.7).abs() < 1e-15);
        assert_eq!(eval_richards(0.2, &[0.0, 1.0, 1.0, 0.0, 5.0, 1.0]).unwrap().value, 1.0);
        assert_eq!(eval_richards(0.2, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0]).unwrap().value, 0.5);
        assert!(eval_richards(0.2, &[0.0, 1.0, -2.0, 1.0, 0.0, 0.5]).is_err());
        assert!(eval_richards(0.2, &[0.0, 1.0, 1.0, 1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn direct_estimate_examples() {
        let tr = LabelPriors { n: 1000, counts: vec![5], priors: vec![0.005], alpha: 0.0 };
        let val = LabelPriors { n: 5000, counts: vec![1], priors: vec![0.0002], alpha: 0.0 };
        let p = direct_estimate(&tr, &val, &[10.0 / 1000.0]).unwrap();
        assert!((p.p[0] - 0.25).abs() < 1e-12);
        let p = direct_estimate(&tr, &tr, &[1.0]).unwrap();
        assert_eq!(p.p[0], 1.0);
        assert!(!p.clamped[0]);
        let short = LabelPriors { n: 1, counts: vec![], priors: vec![], alpha: 0.0 };
        assert!(matches!(direct_estimate(&tr, &short, &[1.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn direct_estimate_flags_clamping() {
        let tr = LabelPriors { n: 10, counts: vec![5], priors: vec![0.5], alpha: 0.0 };
        let val = LabelPriors { n: 10, counts: vec![1], priors: vec![0.1], alpha: 0.0 };
        let p = direct_estimate(&tr, &val, &[1.0]).unwrap();
        assert_eq!(p.p[0], 1.0);
        assert!(p.clamped[0]);
    }

    #[test]
    fn assign_families() {
        let priors = LabelPriors::from_counts(1000, vec![1, 10, 100, 400], 1.0).unwrap();
        let ones = assign(&PropensityModel::Constant { p: 1.0 }, &priors).unwrap();
        assert!(ones.p.iter().all(|&p| p == 1.0));

        let jpv = PropensityModel::jpv_default(1000);
        let a = assign(&jpv, &priors).unwrap();
        for (j, &prior) in priors.priors.iter().enumerate() {
            assert_eq!(a.p[j], eval_jpv(prior, 1000, 0.55, 1.5).unwrap().value);
        }

        let beta = 1.0 / priors.max_prior();
        let pl = assign(&PropensityModel::PowerLaw { beta, gamma: 0.4 }, &priors).unwrap();
        assert!((pl.p[3] - 1.0).abs() < 1e-15);

        let bad = PropensityModel::Richards { c: 0.0, d: 1.0, e: -1.0, f: 0.0, g: 0.0, h: 0.5 };
        match assign(&bad, &priors) {
            Err(Error::AtLabel { label: 0, .. }) => {}
            other => panic!("expected label-tagged error, got {other:?}"),
        }
        let table = PropensityModel::DirectTable { table: vec![0.5; 3] };
        assert!(assign(&table, &priors).is_err());
    }

    #[test]
    fn adjust_examples() {
        assert!((adjust_probability(0.2, 0.5) - 0.4).abs() < 1e-15);
        assert_eq!(adjust_probability(0.37, 1.0), 0.37);
        assert_eq!(adjust_probability(0.8, 0.5), 1.0);
    }

    #[test]
    fn scaling_examples() {
        let grid: Vec<u64> = (3..=9).map(|e| 10u64.pow(e)).collect();
        let d = scaling_diagnostic(0.55, 1.5, 0.01, &grid).unwrap();
        assert!(d.eventually_increasing());
        assert_eq!(d.increasing_from, Some(0));
        // mpmath: 0.995409630604 at n = 1e9; the limit of 1 is approached slowly
        assert!((d.terminal - 0.995_409_630_604).abs() < 1e-11, "{}", d.terminal);
        let far = scaling_diagnostic(0.55, 1.5, 0.01, &[1_000_000_000_000_000]).unwrap();
        assert!((far.terminal - 0.999_996_069_819_36).abs() < 1e-12);

        let pl = PropensityModel::PowerLaw { beta: 3.0, gamma: 0.7 };
        assert!(scaling_profile(&pl, 0.01, &grid).unwrap().is_constant());

        // a = 0 reduces to 1 / ln n
        let d = scaling_diagnostic(0.0, 1.5, 0.01, &grid).unwrap();
        for &(n, p) in &d.points {
            assert!((p - 1.0 / (n as f64).ln()).abs() < 1e-14);
        }
        assert!(scaling_diagnostic(0.5, 0.4, 0.01, &[2, 10]).is_err());
    }

    #[test]
    fn compact_form_round_trips() {
        for m in [
            PropensityModel::Constant { p: 0.5 },
            PropensityModel::Jpv { a: 0.55, b: 1.5, n: 12345 },
            PropensityModel::PowerLaw { beta: 2.5, gamma: 0.3 },
            PropensityModel::Richards { c: 0.1, d: 0.9, e: 1.0, f: 2.0, g: 30.0, h: 1.5 },
        ] {
            let back: PropensityModel = m.to_string().parse().unwrap();
            assert_eq!(back, m);
        }
        assert!("jpv:a=1".parse::<PropensityModel>().is_err());
        assert!("nope:a=1".parse::<PropensityModel>().is_err());
    }

    #[test]
    fn key_value_block_round_trips() {
        let m = PropensityModel::Jpv { a: 0.6, b: 2.6, n: 500 };
        let text = toml::to_string(&m).unwrap();
        assert!(text.contains("family = \"jpv\""));
        let back: PropensityModel = toml::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn jpv_in_codomain(prior in 1e-7f64..0.999, n in 3u64..10_000_000, a in 0.0f64..2.0, b in 0.0f64..10.0) {
            let v = eval_jpv(prior, n, a, b).unwrap();
            prop_assert!(v.value >= P_MIN && v.value <= 1.0);
        }

        #[test]
        fn power_identity_equals_prior(prior in 2e-6f64..0.999) {
            prop_assert_eq!(eval_power(prior, 1.0, 1.0).unwrap().value, prior);
        }

        #[test]
        fn adjust_inverts_observation(eta in 0.0f64..=1.0, p in 1e-6f64..=1.0) {
            let back = adjust_probability(eta * p, p);
            prop_assert!((back - eta).abs() <= 1e-15 * eta.max(1.0) * 4.0);
        }

        #[test]
        fn jpv_grows_with_n(prior in 1e-3f64..0.5, ab in prop::sample::select(vec![JPV_WIKIPEDIA, JPV_DEFAULT, JPV_AMAZON])) {
            let (a, b) = ab;
            let p3 = eval_jpv(prior, 1_000, a, b).unwrap().value;
            let p6 = eval_jpv(prior, 1_000_000, a, b).unwrap().value;
            let p9 = eval_jpv(prior, 1_000_000_000, a, b).unwrap().value;
            prop_assert!(p3 < p6 && p6 < p9);
        }
    }
}
