//! Sparse multi-label datasets, the XMLC repository text format, label priors
//! and imbalance statistics.
//!
//! The text format is the one used by the Extreme Classification Repository:
//!
//! ```text
//! n d m
//! 0,4 0:1.5 17:0.25
//!  3:1.0
//! ```
//!
//! The header gives the number of instances, feature dimensions and labels.
//! Each instance line starts with a comma-separated list of label indices
//! (possibly empty, in which case the line begins with a space) followed by
//! `feature:value` pairs. Indices are 0-based.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Sparse feature vector of one instance, sorted by feature index.
pub type SparseRow = Vec<(usize, f64)>;

/// A multi-label dataset with sparse features and sparse label sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    d: usize,
    m: usize,
    features: Vec<SparseRow>,
    labels: Vec<Vec<usize>>,
}

impl SparseDataset {
    /// Builds a dataset, validating every index against `d` and `m`.
    ///
    /// Index lists must be strictly increasing.
    pub fn new(
        d: usize,
        m: usize,
        features: Vec<SparseRow>,
        labels: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::InvalidDataset(format!(
                "feature and label counts must be positive (d={d}, m={m})"
            )));
        }
        if features.is_empty() {
            return Err(Error::InvalidDataset("dataset has no instances".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} label rows",
                features.len(),
                labels.len()
            )));
        }
        for (i, (row, ls)) in features.iter().zip(&labels).enumerate() {
            check_increasing(row.iter().map(|&(f, _)| f), d, "feature", i)?;
            check_increasing(ls.iter().copied(), m, "label", i)?;
            if let Some(&(f, v)) = row.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "instance {i}: non-finite value {v} for feature {f}"
                )));
            }
        }
        Ok(Self {
            d,
            m,
            features,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn features(&self) -> &[SparseRow] {
        &self.features
    }

    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    pub fn instance_features(&self, i: usize) -> &[(usize, f64)] {
        &self.features[i]
    }

    pub fn instance_labels(&self, i: usize) -> &[usize] {
        &self.labels[i]
    }

    /// Total number of positive (instance, label) assignments.
    pub fn num_positives(&self) -> usize {
        self.labels.iter().map(Vec::len).sum()
    }

    /// Per-label positive counts.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.m];
        for ls in &self.labels {
            for &j in ls {
                counts[j] += 1;
            }
        }
        counts
    }

    /// Same instances with a different label assignment.
    pub fn with_labels(&self, labels: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(self.d, self.m, self.features.clone(), labels)
    }

    /// Dataset made of the given instances, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let features = indices.iter().map(|&i| self.features[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        Self::new(self.d, self.m, features, labels)
    }

    pub fn into_parts(self) -> (usize, usize, Vec<SparseRow>, Vec<Vec<usize>>) {
        (self.d, self.m, self.features, self.labels)
    }
}

fn check_increasing(
    it: impl Iterator<Item = usize>,
    bound: usize,
    what: &str,
    instance: usize,
) -> Result<()> {
    let mut prev: Option<usize> = None;
    for idx in it {
        if idx >= bound {
            return Err(Error::InvalidDataset(format!(
                "instance {instance}: {what} index {idx} out of range (< {bound})"
            )));
        }
        if let Some(p) = prev {
            if idx <= p {
                return Err(Error::InvalidDataset(format!(
                    "instance {instance}: {what} indices not strictly increasing ({p}, {idx})"
                )));
            }
        }
        prev = Some(idx);
    }
    Ok(())
}

/// Parses a dataset in the XMLC repository text format.
///
/// Errors carry the 1-based line number of the offending line.
pub fn parse_xmlc<R: BufRead>(reader: R) -> Result<SparseDataset> {
    let mut lines = reader.lines().enumerate();

    let (n, d, m) = match lines.next() {
        Some((_, line)) => {
            let line = line?;
            let parts: Vec<&str> = line.trim_end_matches('\r').split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::parse(1, format!("malformed header {line:?}")));
            }
            let mut nums = [0usize; 3];
            for (slot, p) in nums.iter_mut().zip(&parts) {
                *slot = p
                    .parse()
                    .map_err(|_| Error::parse(1, format!("malformed header value {p:?}")))?;
            }
            (nums[0], nums[1], nums[2])
        }
        None => return Err(Error::parse(1, "missing header")),
    };
    if n == 0 || d == 0 || m == 0 {
        return Err(Error::parse(1, format!("empty dataset (n={n}, d={d}, m={m})")));
    }

    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let Some((idx, line)) = lines.next() else {
            return Err(Error::parse(
                features.len() + 2,
                format!("expected {n} instances, found {}", features.len()),
            ));
        };
        let line = line?;
        let (ls, fs) = parse_instance_line(line.trim_end_matches('\r'), idx + 1, d, m)?;
        labels.push(ls);
        features.push(fs);
    }
    for (idx, line) in lines {
        if !line?.trim().is_empty() {
            return Err(Error::parse(idx + 1, format!("more than {n} instances")));
        }
    }

    SparseDataset::new(d, m, features, labels)
}

fn parse_instance_line(
    line: &str,
    lineno: usize,
    d: usize,
    m: usize,
) -> Result<(Vec<usize>, SparseRow)> {
    let (label_part, feature_part) = match line.find(|c: char| c.is_ascii_whitespace()) {
        Some(pos) => (&line[..pos], &line[pos..]),
        None => (line, ""),
    };
    // A label-less line may also consist of bare features when the leading
    // space was lost; a token with ':' cannot be a label list.
    let (label_part, feature_part) = if label_part.contains(':') {
        ("", line)
    } else {
        (label_part, feature_part)
    };

    let mut labels = Vec::new();
    if !label_part.is_empty() {
        for tok in label_part.split(',') {
            let j: usize = tok
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric label {tok:?}")))?;
            if j >= m {
                return Err(Error::parse(lineno, format!("label index {j} ≥ m={m}")));
            }
            labels.push(j);
        }
    }
    labels.sort_unstable();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::parse(lineno, format!("duplicate label index {}", w[0])));
    }

    let mut feats = Vec::new();
    for tok in feature_part.split_whitespace() {
        let (f, v) = tok
            .split_once(':')
            .ok_or_else(|| Error::parse(lineno, format!("malformed feature {tok:?}")))?;
        let f: usize = f
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-numeric feature index {f:?}")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-numeric feature value {v:?}")))?;
        if f >= d {
            return Err(Error::parse(lineno, format!("feature index {f} ≥ d={d}")));
        }
        if !v.is_finite() {
            return Err(Error::parse(lineno, format!("non-finite feature value {v}")));
        }
        feats.push((f, v));
    }
    feats.sort_unstable_by_key(|&(f, _)| f);
    if let Some(w) = feats.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::parse(
            lineno,
            format!("duplicate feature index {}", w[0].0),
        ));
    }
    Ok((labels, feats))
}

/// Parses a dataset from a string.
pub fn parse_xmlc_str(text: &str) -> Result<SparseDataset> {
    parse_xmlc(text.as_bytes())
}

/// Serializes a dataset to the XMLC repository text format.
///
/// Values use the shortest representation that round-trips `f64`.
pub fn write_xmlc(ds: &SparseDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", ds.n(), ds.d(), ds.m());
    for (ls, fs) in ds.labels.iter().zip(&ds.features) {
        for (k, j) in ls.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{j}");
        }
        for (f, v) in fs {
            let _ = write!(out, " {f}:{v:?}");
        }
        out.push('\n');
    }
    out
}

/// Label priors estimated from a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPriors {
    /// Instances in the source dataset.
    pub n: usize,
    /// Positive count per label.
    pub counts: Vec<usize>,
    /// Smoothed prior per label, `(count + alpha) / (n + alpha)`.
    pub priors: Vec<f64>,
    pub alpha: f64,
}

impl LabelPriors {
    pub fn m(&self) -> usize {
        self.priors.len()
    }

    /// Builds priors directly from counts.
    pub fn from_counts(n: usize, counts: Vec<usize>, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "smoothing alpha must be finite and ≥ 0, got {alpha}"
            )));
        }
        if n == 0 && alpha == 0.0 {
            return Err(Error::InvalidArgument("priors of an empty dataset".into()));
        }
        if let Some((j, &c)) = counts.iter().enumerate().find(|(_, &c)| c > n) {
            return Err(Error::InvalidArgument(format!(
                "label {j}: count {c} exceeds n={n}"
            )));
        }
        let denom = n as f64 + alpha;
        let priors = counts.iter().map(|&c| (c as f64 + alpha) / denom).collect();
        Ok(Self {
            n,
            counts,
            priors,
            alpha,
        })
    }

    pub fn max_prior(&self) -> f64 {
        self.priors.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Estimates `(ñ_j + α) / (n + α)` for every label.
pub fn estimate_priors(ds: &SparseDataset, alpha: f64) -> Result<LabelPriors> {
    LabelPriors::from_counts(ds.n(), ds.label_counts(), alpha)
}

/// Imbalance characteristics of a label distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImbalanceStats {
    /// Binary imbalance ratio `(1 - π) / π` of the most frequent label.
    pub min_ir: f64,
    /// Inter-label imbalance ratio, max prior over min prior.
    pub ilir: f64,
    /// Smallest fraction of labels that holds 80% of all positives.
    pub pos80: f64,
}

pub fn imbalance_stats(priors: &LabelPriors) -> Result<ImbalanceStats> {
    let m = priors.m();
    if m == 0 {
        return Err(Error::InvalidArgument("no labels".into()));
    }
    let max = priors.max_prior();
    let min = priors.priors.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::Undefined(
            "ILIR undefined: minimum label prior is zero".into(),
        ));
    }
    let total: usize = priors.counts.iter().sum();
    if total == 0 {
        return Err(Error::Undefined(
            "Pos-80% undefined: no positive labels".into(),
        ));
    }
    Ok(ImbalanceStats {
        min_ir: (1.0 - max) / max,
        ilir: max / min,
        pos80: pos80_count(&priors.counts) as f64 / m as f64,
    })
}

/// Smallest number of most-frequent labels whose counts reach 80% of the total.
fn pos80_count(counts: &[usize]) -> usize {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let total: usize = sorted.iter().sum();
    let mut cum = 0usize;
    for (c, &x) in sorted.iter().enumerate() {
        cum += x;
        // cum / total >= 0.8, in exact integer arithmetic
        if 5 * cum >= 4 * total {
            return c + 1;
        }
    }
    sorted.len()
}

/// `(rank, count)` pairs with labels sorted by descending positive count.
///
/// Ranks are 1-based; equal counts keep ascending label order.
pub fn label_frequency(ds: &SparseDataset) -> Vec<(usize, usize)> {
    let mut counts = ds.label_counts();
    counts.sort_by(|a, b| b.cmp(a));
    counts.into_iter().enumerate().map(|(r, c)| (r + 1, c)).collect()
}
