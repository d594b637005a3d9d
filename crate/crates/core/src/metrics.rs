//! Evaluation metrics for multi-label predictions.
//!
//! Precision, recall and nDCG at `k` come in a vanilla form and in a
//! propensity-scored form where every hit on label `j` counts `1/p_j`. The
//! long-tail metrics (macro F-measure, abandonment, coverage) and a small
//! solver deciding whether an unbiased estimator of a loss exists under a
//! given missing-label process live here as well.
//!
//! Dataset-level values are means of per-instance terms, summed pairwise.
//! Top-k selection breaks ties by ascending label index.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propensity::PropensityAssignment;

/// Dense `n × m` score matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    n: usize,
    m: usize,
    scores: Vec<f64>,
}

impl PredictionMatrix {
    pub fn new(n: usize, m: usize, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != n * m {
            return Err(Error::DimensionMismatch(format!(
                "{} scores for a {n}×{m} matrix",
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("scores must be finite".into()));
        }
        Ok(Self { n, m, scores })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged score rows".into()));
        }
        Self::new(n, m, rows.into_iter().flatten().collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.m..(i + 1) * self.m]
    }

    /// Top-k indices of every row.
    pub fn top_k(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        check_k(k, self.m)?;
        Ok((0..self.n).into_par_iter().map(|i| top_k(self.row(i), k)).collect())
    }
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("k={k} must be in 1..={m}")));
    }
    Ok(())
}

fn rank_order(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Indices of the `k` largest scores in descending order; ties go to the
/// lower index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(scores.len());
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_order(scores, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| rank_order(scores, a, b));
    idx
}

/// Sum with pairwise recursion, bounded rounding drift for long inputs.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn contains(labels: &[usize], j: usize) -> bool {
    labels.binary_search(&j).is_ok()
}

/// `k⁻¹ Σ_{j ∈ top} w_j y_j` for one instance.
pub fn weighted_precision_instance(labels: &[usize], top: &[usize], k: usize, w: &[f64]) -> f64 {
    top.iter().filter(|&&j| contains(labels, j)).map(|&j| w[j]).sum::<f64>() / k as f64
}

/// `Σ_{j ∈ top} w_j y_j / ‖y‖₁`, or `None` for an instance without labels.
pub fn weighted_recall_instance(labels: &[usize], top: &[usize], w: &[f64]) -> Option<f64> {
    if labels.is_empty() {
        return None;
    }
    let hit: f64 = top.iter().filter(|&&j| contains(labels, j)).map(|&j| w[j]).sum();
    Some(hit / labels.len() as f64)
}

/// Discount of the item at 1-based rank `r`.
fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).ln()
}

/// `Σ_{r=1..k} 1 / ln(r + 1)`.
pub fn ndcg_normalizer(k: usize) -> f64 {
    (1..=k).map(discount).sum()
}

/// Weighted nDCG of one instance with the fixed normalizer of
/// [`ndcg_normalizer`].
pub fn weighted_ndcg_instance(labels: &[usize], top: &[usize], k: usize, w: &[f64]) -> f64 {
    let dcg: f64 = top
        .iter()
        .enumerate()
        .filter(|(_, &j)| contains(labels, j))
        .map(|(r, &j)| w[j] * discount(r + 1))
        .sum();
    dcg / ndcg_normalizer(k)
}

/// A dataset-level metric value.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub name: String,
    pub k: Option<usize>,
    pub value: f64,
    /// Instances that entered the mean.
    pub n_evaluated: usize,
    /// Instances excluded, e.g. without any label for recall.
    pub skipped: usize,
    pub per_instance: Vec<f64>,
}

impl MetricValue {
    fn from_terms(name: &str, k: Option<usize>, terms: Vec<Option<f64>>) -> Self {
        let skipped = terms.iter().filter(|t| t.is_none()).count();
        let per_instance: Vec<f64> = terms.into_iter().flatten().collect();
        let value = if per_instance.is_empty() {
            0.0
        } else {
            pairwise_sum(&per_instance) / per_instance.len() as f64
        };
        Self {
            name: name.to_string(),
            k,
            value,
            n_evaluated: per_instance.len(),
            skipped,
            per_instance,
        }
    }

    /// One TSV row: metric, k, value, n_evaluated, skipped.
    pub fn tsv_row(&self) -> String {
        let k = self.k.map_or_else(|| "-".to_string(), |k| k.to_string());
        format!(
            "{}\t{}\t{:.6}\t{}\t{}",
            self.name, k, self.value, self.n_evaluated, self.skipped
        )
    }
}

/// Header of [`MetricValue::tsv_row`].
pub const METRIC_TSV_HEADER: &str = "metric\tk\tvalue\tn_evaluated\tskipped";

fn check_shapes(labels: &[Vec<usize>], scores: &PredictionMatrix) -> Result<()> {
    if labels.len() != scores.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} label rows, {} score rows",
            labels.len(),
            scores.n()
        )));
    }
    if let Some(&j) = labels.iter().flatten().find(|&&j| j >= scores.m()) {
        return Err(Error::DimensionMismatch(format!(
            "label {j} outside {} score columns",
            scores.m()
        )));
    }
    Ok(())
}

fn check_weights(w: &[f64], m: usize) -> Result<()> {
    if w.len() != m {
        return Err(Error::DimensionMismatch(format!("{} weights for {m} labels", w.len())));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite".into()));
    }
    Ok(())
}

fn per_instance<F>(
    labels: &[Vec<usize>],
    scores: &PredictionMatrix,
    k: usize,
    f: F,
) -> Result<Vec<Option<f64>>>
where
    F: Fn(&[usize], &[usize]) -> Option<f64> + Sync,
{
    check_shapes(labels, scores)?;
    check_k(k, scores.m())?;
    Ok((0..scores.n())
        .into_par_iter()
        .map(|i| f(&labels[i], &top_k(scores.row(i), k)))
        .collect())
}

/// Weighted precision@k, `k⁻¹ Σ_{j ∈ top_k} w_j y_j` averaged over instances.
pub fn weighted_precision_at_k(
    labels: &[Vec<usize>],
    scores: &PredictionMatrix,
    k: usize,
    w: &[f64],
) -> Result<MetricValue> {
    check_weights(w, scores.m())?;
    let terms = per_instance(labels, scores, k, |y, top| {
        Some(weighted_precision_instance(y, top, k, w))
    })?;
    Ok(MetricValue::from_terms("wP", Some(k), terms))
}

pub fn precision_at_k(labels: &[Vec<usize>], scores: &PredictionMatrix, k: usize) -> Result<MetricValue> {
    let ones = vec![1.0; scores.m()];
    let mut v = weighted_precision_at_k(labels, scores, k, &ones)?;
    v.name = "P".into();
    Ok(v)
}

pub fn recall_at_k(labels: &[Vec<usize>], scores: &PredictionMatrix, k: usize) -> Result<MetricValue> {
    let ones = vec![1.0; scores.m()];
    let terms = per_instance(labels, scores, k, |y, top| weighted_recall_instance(y, top, &ones))?;
    Ok(MetricValue::from_terms("R", Some(k), terms))
}

pub fn ndcg_at_k(labels: &[Vec<usize>], scores: &PredictionMatrix, k: usize) -> Result<MetricValue> {
    let ones = vec![1.0; scores.m()];
    let terms = per_instance(labels, scores, k, |y, top| Some(weighted_ndcg_instance(y, top, k, &ones)))?;
    Ok(MetricValue::from_terms("nDCG", Some(k), terms))
}

fn inverse_propensities(p: &PropensityAssignment, m: usize) -> Result<Vec<f64>> {
    if p.m() != m {
        return Err(Error::DimensionMismatch(format!("{} propensities for {m} labels", p.m())));
    }
    Ok(p.inverse())
}

/// Propensity-scored precision@k on observed labels.
pub fn ps_precision_at_k(
    observed: &[Vec<usize>],
    scores: &PredictionMatrix,
    k: usize,
    p: &PropensityAssignment,
) -> Result<MetricValue> {
    let w = inverse_propensities(p, scores.m())?;
    let mut v = weighted_precision_at_k(observed, scores, k, &w)?;
    v.name = "PSP".into();
    Ok(v)
}

/// Propensity-scored recall@k. The denominator is the number of observed
/// labels; instances without any are skipped.
pub fn ps_recall_at_k(
    observed: &[Vec<usize>],
    scores: &PredictionMatrix,
    k: usize,
    p: &PropensityAssignment,
) -> Result<MetricValue> {
    let w = inverse_propensities(p, scores.m())?;
    let terms = per_instance(observed, scores, k, |y, top| weighted_recall_instance(y, top, &w))?;
    Ok(MetricValue::from_terms("PSR", Some(k), terms))
}

pub fn ps_ndcg_at_k(
    observed: &[Vec<usize>],
    scores: &PredictionMatrix,
    k: usize,
    p: &PropensityAssignment,
) -> Result<MetricValue> {
    let w = inverse_propensities(p, scores.m())?;
    let terms = per_instance(observed, scores, k, |y, top| Some(weighted_ndcg_instance(y, top, k, &w)))?;
    Ok(MetricValue::from_terms("PSnDCG", Some(k), terms))
}

/// Largest PSP@k any prediction could reach on one instance.
pub fn max_psp_instance(observed: &[usize], k: usize, inv_p: &[f64]) -> f64 {
    let mut w: Vec<f64> = observed.iter().map(|&j| inv_p[j]).collect();
    w.sort_unstable_by(|a, b| b.total_cmp(a));
    w.iter().take(k).sum::<f64>() / k as f64
}

/// PSP@k divided by the best PSP@k attainable on the same observed labels.
pub fn normalized_psp_at_k(
    observed: &[Vec<usize>],
    scores: &PredictionMatrix,
    k: usize,
    p: &PropensityAssignment,
) -> Result<MetricValue> {
    let w = inverse_propensities(p, scores.m())?;
    let terms = per_instance(observed, scores, k, |y, top| {
        Some(weighted_precision_instance(y, top, k, &w))
    })?;
    let num: Vec<f64> = terms.into_iter().flatten().collect();
    let den: Vec<f64> = observed.iter().map(|y| max_psp_instance(y, k, &w)).collect();
    let den_sum = pairwise_sum(&den);
    if den_sum <= 0.0 {
        return Err(Error::Undefined("normalizer is zero".into()));
    }
    let skipped = observed.iter().filter(|y| y.is_empty()).count();
    Ok(MetricValue {
        name: "nPSP".into(),
        k: Some(k),
        value: pairwise_sum(&num) / den_sum,
        n_evaluated: observed.len() - skipped,
        skipped,
        per_instance: Vec::new(),
    })
}

/// Binary predictions, one sorted label set per instance.
pub type BinaryPredictions = Vec<Vec<usize>>;

/// Top-k of every instance as a set.
pub fn binarize_top_k(scores: &PredictionMatrix, k: usize) -> Result<BinaryPredictions> {
    let mut sets = scores.top_k(k)?;
    for s in &mut sets {
        s.sort_unstable();
    }
    Ok(sets)
}

/// Macro-averaged F_β over labels; labels with a zero denominator count 0.
pub fn macro_f_beta(
    labels: &[Vec<usize>],
    predictions: &[Vec<usize>],
    m: usize,
    beta: f64,
) -> Result<MetricValue> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("β={beta} must be positive")));
    }
    if labels.len() != predictions.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} label rows, {} prediction rows",
            labels.len(),
            predictions.len()
        )));
    }
    let mut tp = vec![0usize; m];
    let mut pos = vec![0usize; m];
    let mut pred = vec![0usize; m];
    for (y, yhat) in labels.iter().zip(predictions) {
        for &j in y {
            *pos.get_mut(j).ok_or_else(|| Error::DimensionMismatch(format!("label {j} ≥ m={m}")))? += 1;
        }
        for &j in yhat {
            *pred.get_mut(j).ok_or_else(|| Error::DimensionMismatch(format!("label {j} ≥ m={m}")))? += 1;
            if contains(y, j) {
                tp[j] += 1;
            }
        }
    }
    let b2 = beta * beta;
    let per_label: Vec<f64> = (0..m)
        .map(|j| {
            let den = b2 * pos[j] as f64 + pred[j] as f64;
            if den == 0.0 {
                0.0
            } else {
                (1.0 + b2) * tp[j] as f64 / den
            }
        })
        .collect();
    Ok(MetricValue {
        name: format!("macroF{beta}"),
        k: None,
        value: pairwise_sum(&per_label) / m as f64,
        n_evaluated: labels.len(),
        skipped: 0,
        per_instance: per_label,
    })
}

/// Macro F_β with each instance predicting its top-k labels.
pub fn macro_f_beta_at_k(
    labels: &[Vec<usize>],
    scores: &PredictionMatrix,
    k: usize,
    beta: f64,
) -> Result<MetricValue> {
    check_shapes(labels, scores)?;
    let preds = binarize_top_k(scores, k)?;
    let mut v = macro_f_beta(labels, &preds, scores.m(), beta)?;
    v.k = Some(k);
    Ok(v)
}

/// Fraction of instances whose top-k holds no relevant label.
pub fn abandonment_at_k(labels: &[Vec<usize>], scores: &PredictionMatrix, k: usize) -> Result<MetricValue> {
    let terms = per_instance(labels, scores, k, |y, top| {
        Some(if top.iter().any(|&j| contains(y, j)) { 0.0 } else { 1.0 })
    })?;
    Ok(MetricValue::from_terms("Abandon", Some(k), terms))
}

/// Fraction of labels with at least one correct top-k prediction.
pub fn coverage_at_k(labels: &[Vec<usize>], scores: &PredictionMatrix, k: usize) -> Result<MetricValue> {
    check_shapes(labels, scores)?;
    let tops = scores.top_k(k)?;
    let mut covered = vec![false; scores.m()];
    for (y, top) in labels.iter().zip(&tops) {
        for &j in top {
            if contains(y, j) {
                covered[j] = true;
            }
        }
    }
    let c = covered.iter().filter(|&&c| c).count();
    Ok(MetricValue {
        name: "Cov".into(),
        k: Some(k),
        value: c as f64 / scores.m() as f64,
        n_evaluated: labels.len(),
        skipped: 0,
        per_instance: Vec::new(),
    })
}

/// Bootstrap standard error of the mean of `values`.
pub fn bootstrap_se(values: &[f64], resamples: usize, seed: u64) -> Result<f64> {
    use rand::Rng as _;
    if values.len() < 2 || resamples < 2 {
        return Err(Error::InvalidArgument("bootstrap needs ≥ 2 values and resamples".into()));
    }
    let n = values.len();
    let means: Vec<f64> = (0..resamples)
        .map(|b| {
            let mut rng = crate::rng::stream(seed, "bootstrap", b as u64);
            let draw: Vec<f64> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
            pairwise_sum(&draw) / n as f64
        })
        .collect();
    Ok(sample_std(&means))
}

/// Sample standard deviation with the `n − 1` denominator.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = pairwise_sum(values) / n as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (pairwise_sum(&sq) / (n - 1) as f64).sqrt()
}

/// Mean and standard error `s / √n`.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    (pairwise_sum(values) / n, sample_std(values) / n.sqrt())
}

/// A missing-label process over `m ≤ 3` labels: for every true label vector
/// `y` (a bitmask), the distribution of the observed vector `ỹ`.
///
/// `table[y][ỹ] = P[Ỹ = ỹ | Y = y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskProcess {
    m: usize,
    table: Vec<Vec<f64>>,
}

pub const MAX_FEASIBILITY_LABELS: usize = 3;

impl MaskProcess {
    pub fn new(m: usize, table: Vec<Vec<f64>>) -> Result<Self> {
        if m == 0 || m > MAX_FEASIBILITY_LABELS {
            return Err(Error::InvalidArgument(format!(
                "m={m} must be in 1..={MAX_FEASIBILITY_LABELS}"
            )));
        }
        let size = 1usize << m;
        if table.len() != size || table.iter().any(|r| r.len() != size) {
            return Err(Error::DimensionMismatch(format!("mask table must be {size}×{size}")));
        }
        for (y, row) in table.iter().enumerate() {
            for (obs, &mass) in row.iter().enumerate() {
                if !(mass >= 0.0 && mass.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "negative or non-finite mass {mass} at y={y:0m$b}, ỹ={obs:0m$b}"
                    )));
                }
                if mass > 0.0 && obs & !y != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "mass on ỹ={obs:0m$b} which is not ⪯ y={y:0m$b}"
                    )));
                }
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "distribution for y={y:0m$b} sums to {total}"
                )));
            }
        }
        Ok(Self { m, table })
    }

    /// Observed labels always equal the true ones.
    pub fn no_noise(m: usize) -> Result<Self> {
        let size = 1usize << m;
        let table = (0..size)
            .map(|y| (0..size).map(|o| if o == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(m, table)
    }

    /// Each relevant label `j` survives independently with probability `p[j]`.
    pub fn independent(p: &[f64]) -> Result<Self> {
        let m = p.len();
        if m == 0 || m > MAX_FEASIBILITY_LABELS {
            return Err(Error::InvalidArgument(format!("m={m} must be in 1..=3")));
        }
        let size = 1usize << m;
        let table = (0..size)
            .map(|y| {
                (0..size)
                    .map(|o| {
                        if o & !y != 0 {
                            return 0.0;
                        }
                        (0..m)
                            .filter(|&j| y >> j & 1 == 1)
                            .map(|j| if o >> j & 1 == 1 { p[j] } else { 1.0 - p[j] })
                            .product()
                    })
                    .collect()
            })
            .collect();
        Self::new(m, table)
    }

    /// Two labels that go missing together: a relevant pair is kept whole
    /// with probability `p` and dropped whole otherwise. Single relevant
    /// labels survive with probability `p`.
    pub fn vanish_together(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("p={p} outside [0, 1]")));
        }
        let q = 1.0 - p;
        Self::new(
            2,
            vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![q, p, 0.0, 0.0],
                vec![q, 0.0, p, 0.0],
                vec![q, 0.0, 0.0, p],
            ],
        )
    }

    /// Two labels that go missing complementarily: of a relevant pair exactly
    /// one survives, each with probability one half. Marginal propensities
    /// are 0.5, as for [`MaskProcess::vanish_together`] with `p = 0.5`.
    pub fn vanish_complementary() -> Result<Self> {
        Self::new(
            2,
            vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.5, 0.0, 0.0],
                vec![0.5, 0.0, 0.5, 0.0],
                vec![0.0, 0.5, 0.5, 0.0],
            ],
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn prob(&self, y: usize, observed: usize) -> f64 {
        self.table[y][observed]
    }

    /// Marginal propensity `P[Ỹ_j = 1 | Y = y]` for a `y` containing `j`.
    pub fn marginal(&self, y: usize, j: usize) -> f64 {
        (0..self.table.len())
            .filter(|o| o >> j & 1 == 1)
            .map(|o| self.table[y][o])
            .sum()
    }
}

/// `ℓ(y, ŷ)` of the subset 0/1 loss for every true bitmask `y`.
pub fn subset_zero_one_table(m: usize, prediction: usize) -> Vec<f64> {
    (0..1usize << m).map(|y| if y == prediction { 0.0 } else { 1.0 }).collect()
}

/// `ℓ(y, ŷ)` of the Hamming loss for every true bitmask `y`.
pub fn hamming_table(m: usize, prediction: usize) -> Vec<f64> {
    (0..1usize << m).map(|y| f64::from((y ^ prediction).count_ones())).collect()
}

/// Result of [`check_unbiased_estimator_exists`].
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Least-squares values `v_ỹ` of the candidate estimator, indexed by the
    /// observed-vector bitmask.
    pub solution: Vec<f64>,
    /// Euclidean norm of the least-squares residual.
    pub residual: f64,
}

/// Residual at or below which a system counts as solvable.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Decides whether some estimator `ℓ̃(ỹ)` satisfies `E[ℓ̃(Ỹ) | Y = y] = ℓ(y)`
/// for every true label vector `y` under every one of the given processes.
///
/// `target_loss[y]` is the loss of the fixed prediction at true vector `y`.
pub fn check_unbiased_estimator_exists(
    processes: &[MaskProcess],
    target_loss: &[f64],
) -> Result<Feasibility> {
    let first = processes
        .first()
        .ok_or_else(|| Error::InvalidArgument("no missing-label process given".into()))?;
    let m = first.m();
    if processes.iter().any(|p| p.m() != m) {
        return Err(Error::DimensionMismatch("processes over different label counts".into()));
    }
    let size = 1usize << m;
    if target_loss.len() != size {
        return Err(Error::DimensionMismatch(format!(
            "target loss needs {size} entries, got {}",
            target_loss.len()
        )));
    }
    let rows = processes.len() * size;
    let a = DMatrix::from_fn(rows, size, |r, c| processes[r / size].prob(r % size, c));
    let b = DVector::from_fn(rows, |r, _| target_loss[r % size]);
    let svd = a.clone().svd(true, true);
    let v = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::Domain(format!("least-squares solve failed: {e}")))?;
    let residual = (&a * &v - &b).norm();
    Ok(Feasibility {
        feasible: residual <= FEASIBILITY_TOL,
        solution: v.iter().copied().collect(),
        residual,
    })
}
