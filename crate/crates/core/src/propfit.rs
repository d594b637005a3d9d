//! Fitting parametric propensity models to direct propensity estimates.
//!
//! The objective is the weighted squared error on inverse propensities,
//! `Σ_j w_j (1/p̂_j − 1/φ(π_j))²`, minimized with Levenberg–Marquardt using a
//! central finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::data::LabelPriors;
use crate::error::{Error, Result};
use crate::propensity::{ModelFamily, PropensityAssignment, PropensityModel, P_MIN};

/// A least-squares problem over label priors and target propensities.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub priors: Vec<f64>,
    pub targets: Vec<f64>,
    pub family: ModelFamily,
    /// `free[k]` marks parameter `k` of the family as optimized.
    pub free: Vec<bool>,
    pub weights: Vec<f64>,
}

impl FitProblem {
    /// Unit-weighted problem with every parameter free except the JPV sample
    /// size.
    pub fn new(priors: Vec<f64>, targets: Vec<f64>, family: ModelFamily) -> Result<Self> {
        let m = targets.len();
        Self::with_weights(priors, targets, family, vec![1.0; m])
    }

    pub fn with_weights(
        priors: Vec<f64>,
        targets: Vec<f64>,
        family: ModelFamily,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if family == ModelFamily::DirectTable {
            return Err(Error::InvalidArgument("direct tables have no parameters to fit".into()));
        }
        if priors.len() != targets.len() || weights.len() != targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} priors, {} targets, {} weights",
                priors.len(),
                targets.len(),
                weights.len()
            )));
        }
        if targets.is_empty() {
            return Err(Error::InvalidArgument("no labels to fit".into()));
        }
        if let Some((j, &t)) = targets.iter().enumerate().find(|(_, &t)| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::at_label(j, Error::Domain(format!("target {t} outside (0, 1]"))));
        }
        if let Some((j, &p)) = priors.iter().enumerate().find(|(_, &p)| !(p > 0.0 && p < 1.0)) {
            return Err(Error::at_label(j, Error::Domain(format!("prior {p} outside (0, 1)"))));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("weights must be finite and ≥ 0".into()));
        }
        let mut free = vec![true; PropensityModel::param_names(family).len()];
        if family == ModelFamily::Jpv {
            free[2] = false;
        }
        Ok(Self {
            priors,
            targets,
            family,
            free,
            weights,
        })
    }

    /// Problem against direct estimates; labels whose estimate was clamped to
    /// the codomain boundary get weight 0.
    pub fn from_assignment(
        priors: &LabelPriors,
        targets: &PropensityAssignment,
        family: ModelFamily,
    ) -> Result<Self> {
        let weights = targets
            .clamped
            .iter()
            .map(|&c| if c { 0.0 } else { 1.0 })
            .collect();
        Self::with_weights(priors.priors.clone(), targets.p.clone(), family, weights)
    }

    pub fn m(&self) -> usize {
        self.targets.len()
    }

    /// Model evaluations for the given parameters, or `None` if any label
    /// falls outside the family's domain.
    fn predictions(&self, params: &[f64]) -> Option<Vec<f64>> {
        let model = PropensityModel::from_params(self.family, params).ok()?;
        model.validate().ok()?;
        self.priors
            .iter()
            .enumerate()
            .map(|(j, &pi)| model.eval(j, pi).ok().map(|c| c.value))
            .collect()
    }

    /// Weighted residuals `√w_j (1/p̂_j − 1/φ_j)`.
    fn residuals(&self, params: &[f64]) -> Option<DVector<f64>> {
        let pred = self.predictions(params)?;
        let r = DVector::from_iterator(
            self.m(),
            pred.iter()
                .zip(&self.targets)
                .zip(&self.weights)
                .map(|((p, t), w)| w.sqrt() * (1.0 / t - 1.0 / p)),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn cost(&self, params: &[f64]) -> f64 {
        self.residuals(params).map_or(f64::INFINITY, |r| r.norm_squared())
    }

    /// Weighted mean squared error on inverse propensities.
    pub fn weighted_mse(&self, params: &[f64]) -> f64 {
        let total: f64 = self.weights.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        self.cost(params) / total
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iter: usize,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub tol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            tol: 1e-10,
        }
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Weighted mean squared error on inverse propensities at `params`.
    pub mse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after the initial point and every accepted step.
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn model(&self, family: ModelFamily) -> Result<PropensityModel> {
        PropensityModel::from_params(family, &self.params)
    }
}

const LAMBDA_MAX: f64 = 1e16;
const FD_STEP: f64 = 1e-6;

/// Levenberg–Marquardt minimization of the inverse-propensity objective.
///
/// Steps that increase the objective or leave the family's domain are
/// rejected and the damping is raised; accepted steps lower it.
pub fn lm_fit(problem: &FitProblem, init: &[f64], config: &LmConfig) -> Result<FitResult> {
    if config.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be ≥ 1".into()));
    }
    if init.len() != problem.free.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} family has {} parameters, init has {}",
            problem.family,
            problem.free.len(),
            init.len()
        )));
    }
    let mut x = init.to_vec();
    let mut cost = problem.cost(&x);
    if !cost.is_finite() {
        return Err(Error::Domain(format!(
            "initial parameters {init:?} outside the {} family's domain",
            problem.family
        )));
    }
    let free: Vec<usize> = (0..x.len()).filter(|&k| problem.free[k]).collect();
    let mut history = vec![cost];
    let mut lambda = config.lambda0;
    let mut converged = cost == 0.0 || free.is_empty();
    let mut iterations = 0;

    while !converged && iterations < config.max_iter {
        iterations += 1;
        let r = problem.residuals(&x).expect("current point is feasible");
        let jac = jacobian(problem, &x, &free);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        if grad.amax() < config.tol {
            converged = true;
            break;
        }

        let mut accepted = false;
        loop {
            let mut a = jtj.clone();
            for k in 0..free.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let step = match a.lu().solve(&(-&grad)) {
                Some(s) if s.iter().all(|v| v.is_finite()) => Some(s),
                _ => None,
            };
            if let Some(step) = step {
                let mut trial = x.clone();
                for (k, &idx) in free.iter().enumerate() {
                    trial[idx] += step[k];
                }
                let trial_cost = problem.cost(&trial);
                if trial_cost < cost {
                    let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                    x = trial;
                    cost = trial_cost;
                    history.push(cost);
                    lambda = (lambda * config.lambda_down).max(1e-16);
                    accepted = true;
                    if rel < config.tol || cost == 0.0 {
                        converged = true;
                    }
                    break;
                }
                let step_norm = step.amax();
                let scale = free.iter().map(|&i| x[i].abs()).fold(1.0, f64::max);
                if step_norm < config.tol * scale {
                    // no representable improvement left
                    converged = true;
                    break;
                }
            }
            lambda *= config.lambda_up;
            if lambda > LAMBDA_MAX {
                break;
            }
        }
        if !accepted && !converged {
            break;
        }
    }

    Ok(FitResult {
        mse: problem.weighted_mse(&x),
        params: x,
        iterations,
        converged,
        history,
    })
}

/// Central-difference Jacobian of the weighted residuals; falls back to a
/// one-sided difference at the domain boundary.
fn jacobian(problem: &FitProblem, x: &[f64], free: &[usize]) -> DMatrix<f64> {
    let m = problem.m();
    let r0 = problem.residuals(x).expect("current point is feasible");
    let mut jac = DMatrix::zeros(m, free.len());
    for (col, &k) in free.iter().enumerate() {
        let h = FD_STEP * x[k].abs().max(1e-3);
        let mut xp = x.to_vec();
        xp[k] += h;
        let mut xm = x.to_vec();
        xm[k] -= h;
        let column = match (problem.residuals(&xp), problem.residuals(&xm)) {
            (Some(rp), Some(rm)) => (rp - rm) / (2.0 * h),
            (Some(rp), None) => (rp - &r0) / h,
            (None, Some(rm)) => (&r0 - rm) / h,
            (None, None) => DVector::zeros(m),
        };
        jac.set_column(col, &column);
    }
    jac
}

/// Mean over labels of `(1/p_j − 1/t_j)²`.
pub fn fit_mse(assignment: &PropensityAssignment, targets: &[f64]) -> Result<f64> {
    if assignment.m() != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} propensities, {} targets",
            assignment.m(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no labels".into()));
    }
    if let Some((j, &t)) = targets.iter().enumerate().find(|(_, &t)| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::at_label(j, Error::Domain(format!("target {t} outside (0, 1]"))));
    }
    let sum: f64 = assignment
        .p
        .iter()
        .zip(targets)
        .map(|(p, t)| (1.0 / p - 1.0 / t).powi(2))
        .sum();
    Ok(sum / targets.len() as f64)
}

/// The fixed five-point grid of starting values used for each family.
///
/// `n` is the JPV sample size; `max_prior` scales the power-law β.
pub fn init_grid(family: ModelFamily, n: u64, max_prior: f64) -> Vec<Vec<f64>> {
    let nf = n as f64;
    match family {
        ModelFamily::Constant => [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&p| vec![p]).collect(),
        ModelFamily::Jpv => [(0.55, 1.5), (0.5, 0.4), (0.6, 2.6), (1.0, 1.0), (0.3, 5.0)]
            .iter()
            .map(|&(a, b)| vec![a, b, nf])
            .collect(),
        ModelFamily::PowerLaw => {
            let top = 1.0 / max_prior.max(P_MIN);
            [(1.0, 1.0), (1.0, 0.5), (top, 0.5), (top, 0.2), (10.0, 0.3)]
                .iter()
                .map(|&(b, g)| vec![b, g])
                .collect()
        }
        ModelFamily::Richards => {
            let s = 1.0 / max_prior.max(P_MIN);
            [
                [0.0, 1.0, 1.0, 10.0, 5.0 * s, 1.0],
                [0.0, 1.0, 1.0, 50.0, 20.0 * s, 1.0],
                [0.01, 1.0, 1.0, 5.0, 2.0 * s, 1.0],
                [0.0, 0.5, 1.0, 1.0, s, 1.0],
                [0.0, 1.0, 1.0, 100.0, 50.0 * s, 2.0],
            ]
            .iter()
            .map(|v| v.to_vec())
            .collect()
        }
        ModelFamily::DirectTable => Vec::new(),
    }
}

/// Runs [`lm_fit`] from every point of [`init_grid`] and keeps the lowest
/// objective. Starting points outside the domain are skipped.
pub fn fit_family(problem: &FitProblem, n: u64, config: &LmConfig) -> Result<FitResult> {
    let max_prior = problem.priors.iter().copied().fold(0.0, f64::max);
    let mut best: Option<FitResult> = None;
    for init in init_grid(problem.family, n, max_prior) {
        let Ok(res) = lm_fit(problem, &init, config) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => res.mse < b.mse,
        };
        if better {
            best = Some(res);
        }
    }
    best.ok_or_else(|| {
        Error::Domain(format!(
            "no starting point of the {} grid lies in the family's domain",
            problem.family
        ))
    })
}
