//! Config-driven experiments and their reports.
//!
//! Every experiment reads an [`ExperimentConfig`] and returns an
//! [`ExperimentReport`]: a TSV table whose rows all carry the seed and the
//! config hash. Identical configs give byte-identical reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    estimate_priors, imbalance_stats, label_frequency, parse_xmlc, write_xmlc, LabelPriors,
    SparseDataset,
};
use crate::datagen::{generate_hyperball, inject_missing, HyperBallConfig};
use crate::error::{Error, Result};
use crate::metrics::{self, MaskProcess, MetricValue, PredictionMatrix};
use crate::propensity::{assign, direct_estimate, ModelFamily, PropensityAssignment, PropensityModel};
use crate::propfit::{fit_family, FitProblem, LmConfig};
use crate::rng::derive_seed;
use crate::trainer::{predict, read_checkpoint, train_ova, write_checkpoint, LossKind, TrainConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Gen,
    Inject,
    Fit,
    Train,
    Eval,
    Mismatch,
    Recovery,
    #[default]
    Feasibility,
    Stats,
    PlotData,
    Pipeline,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Gen,
        Experiment::Inject,
        Experiment::Fit,
        Experiment::Train,
        Experiment::Eval,
        Experiment::Mismatch,
        Experiment::Recovery,
        Experiment::Feasibility,
        Experiment::Stats,
        Experiment::PlotData,
        Experiment::Pipeline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Gen => "gen",
            Experiment::Inject => "inject",
            Experiment::Fit => "fit",
            Experiment::Train => "train",
            Experiment::Eval => "eval",
            Experiment::Mismatch => "mismatch",
            Experiment::Recovery => "recovery",
            Experiment::Feasibility => "feasibility",
            Experiment::Stats => "stats",
            Experiment::PlotData => "plot_data",
            Experiment::Pipeline => "pipeline",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Input files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Model checkpoint to evaluate.
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropensityConfig {
    /// Compact model spec, see [`resolve_spec`].
    pub model: String,
    /// Prior smoothing `(count + α) / (n + α)`.
    pub alpha: f64,
    /// Known propensity of the bias-controlled validation set.
    pub p_controlled: f64,
}

impl Default for PropensityConfig {
    fn default() -> Self {
        Self {
            model: "jpv:a=0.55,b=1.5".into(),
            alpha: 1.0,
            p_controlled: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub metrics: Vec<String>,
    pub ks: Vec<usize>,
    /// β of the macro F-measure.
    pub beta: f64,
}

pub const METRIC_NAMES: [&str; 10] = [
    "P", "R", "nDCG", "PSP", "PSR", "PSnDCG", "nPSP", "macroF", "abandon", "coverage",
];

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            metrics: METRIC_NAMES.iter().map(|s| s.to_string()).collect(),
            ks: vec![1, 3, 5],
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MismatchConfig {
    /// Propensity specs used both as noise processes and as training
    /// propensities.
    pub specs: Vec<String>,
    pub ks: Vec<usize>,
}

impl Default for MismatchConfig {
    fn default() -> Self {
        Self {
            specs: vec!["jpv:a=0.55,b=1.5".into(), "power_law:gamma=1".into()],
            ks: vec![1, 3, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    pub families: Vec<String>,
    /// Labels with fewer validation positives get weight 0 in the fit.
    pub min_val_positives: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            families: vec!["jpv".into(), "power_law".into(), "richards".into()],
            min_val_positives: 5,
        }
    }
}

/// Where experiments write their artifacts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for generated splits.
    pub dir: Option<PathBuf>,
    /// Biased dataset written by `inject`.
    pub dataset: Option<PathBuf>,
    /// Checkpoint written by `train`.
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    /// `label_frequency` or `propensity_scatter`.
    pub which: String,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            which: "label_frequency".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    pub data: DataConfig,
    pub hyperball: HyperBallConfig,
    pub propensity: PropensityConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub mismatch: MismatchConfig,
    pub recovery: RecoveryConfig,
    pub output: OutputConfig,
    pub plot: PlotConfig,
    /// First 16 hex digits of the SHA-256 of the canonical config text.
    #[serde(skip)]
    pub config_hash: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::default(),
            seeds: vec![0],
            data: DataConfig::default(),
            hyperball: HyperBallConfig::default(),
            propensity: PropensityConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            mismatch: MismatchConfig::default(),
            recovery: RecoveryConfig::default(),
            output: OutputConfig::default(),
            plot: PlotConfig::default(),
            config_hash: String::new(),
        }
    }
}

/// SHA-256 of `text`, first 16 hex digits.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

impl ExperimentConfig {
    /// Builds a config from a parsed TOML table. The hash covers the
    /// canonical rendering of the fully defaulted config.
    pub fn from_value(value: toml::Value) -> Result<Self> {
        let mut cfg: Self = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.seeds.sort_unstable();
        cfg.seeds.dedup();
        cfg.validate()?;
        let canonical = toml::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?;
        cfg.config_hash = config_hash(&canonical);
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(value)
    }

    /// Defaults for one experiment, hashed.
    pub fn for_experiment(experiment: Experiment) -> Result<Self> {
        let cfg = Self {
            experiment,
            ..Self::default()
        };
        let value = toml::Value::try_from(&cfg).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        if self.eval.ks.contains(&0) || self.mismatch.ks.contains(&0) {
            return Err(Error::Config("k values must be ≥ 1".into()));
        }
        for name in &self.eval.metrics {
            if !METRIC_NAMES.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown metric {name:?}")));
            }
        }
        for f in &self.recovery.families {
            f.parse::<ModelFamily>().map_err(|e| Error::Config(e.to_string()))?;
        }
        if !matches!(self.plot.which.as_str(), "label_frequency" | "propensity_scatter") {
            return Err(Error::Config(format!("unknown plot series {:?}", self.plot.which)));
        }
        if self.experiment == Experiment::Mismatch && self.mismatch.specs.len() < 2 {
            return Err(Error::Config("mismatch needs at least two propensity specs".into()));
        }
        Ok(())
    }

    /// Errors if a configured input file does not exist.
    pub fn check_inputs(&self) -> Result<()> {
        let d = &self.data;
        for (key, path) in [("train", &d.train), ("val", &d.val), ("test", &d.test), ("model", &d.model)] {
            if let Some(p) = path.as_ref().filter(|p| !p.exists()) {
                return Err(Error::Config(format!("data.{key}: {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    fn single_seed(&self) -> Result<u64> {
        match self.seeds.as_slice() {
            [s] => Ok(*s),
            _ => Err(Error::Config(format!(
                "{} takes exactly one seed, got {}",
                self.experiment.name(),
                self.seeds.len()
            ))),
        }
    }
}

/// One table row; `seed` is `all` for rows aggregated over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub seed: String,
    pub cells: Vec<String>,
}

/// Plot-ready data.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    /// Warnings and summaries printed after the table.
    pub notes: Vec<String>,
    pub series: BTreeMap<String, Series>,
}

impl ExperimentReport {
    fn new(cfg: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            experiment: cfg.experiment.name().into(),
            config_hash: cfg.config_hash.clone(),
            seeds: cfg.seeds.clone(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
            series: BTreeMap::new(),
        }
    }

    fn push(&mut self, seed: impl ToString, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(ReportRow {
            seed: seed.to_string(),
            cells,
        });
    }

    fn header(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        format!(
            "# experiment\t{}\n# version\t{VERSION}\n# config_hash\t{}\n# seeds\t{}\n",
            self.experiment,
            self.config_hash,
            seeds.join(",")
        )
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header();
        out.push_str("seed\tconfig_hash");
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.seed);
            out.push('\t');
            out.push_str(&self.config_hash);
            for c in &r.cells {
                out.push('\t');
                out.push_str(c);
            }
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str("# note\t");
            out.push_str(n);
            out.push('\n');
        }
        out
    }

    /// Cell of `column` in every row, in row order.
    pub fn column(&self, column: &str) -> Option<Vec<&str>> {
        let k = self.columns.iter().position(|c| c == column)?;
        Some(self.rows.iter().map(|r| r.cells[k].as_str()).collect())
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

/// Renders one series of `report` as TSV with the report's provenance.
pub fn emit_plot_data(report: &ExperimentReport, which: &str) -> Result<String> {
    let series = report
        .series
        .get(which)
        .ok_or_else(|| Error::InvalidArgument(format!("report has no {which:?} series")))?;
    if series.rows.is_empty() {
        return Err(Error::InvalidArgument(format!("series {which:?} is empty")));
    }
    let mut out = report.header();
    out.push_str(&format!("# series\t{which}\n"));
    out.push_str(&series.columns.join("\t"));
    out.push('\n');
    for r in &series.rows {
        out.push_str(&r.join("\t"));
        out.push('\n');
    }
    Ok(out)
}

/// `(rank, count)` series of a dataset; errors if it has no positives.
pub fn label_frequency_series(ds: &SparseDataset) -> Result<Series> {
    if ds.num_positives() == 0 {
        return Err(Error::InvalidDataset("dataset has no positive labels".into()));
    }
    Ok(Series {
        columns: vec!["rank".into(), "count".into()],
        rows: label_frequency(ds)
            .into_iter()
            .map(|(r, c)| vec![r.to_string(), c.to_string()])
            .collect(),
    })
}

/// Parses a propensity spec, filling in data-dependent parameters.
///
/// Specs use the compact `family:key=value,...` form. A JPV spec without
/// `n` takes the dataset size of `priors`; a power-law spec without `beta`
/// takes `1 / max_j π_j`, which maps the most frequent label to 1.
pub fn resolve_spec(spec: &str, priors: &LabelPriors) -> Result<PropensityModel> {
    let (family, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let family: ModelFamily = family.trim().parse()?;
    let has = |key: &str| {
        rest.split(',')
            .any(|kv| kv.split_once('=').is_some_and(|(k, _)| k.trim() == key))
    };
    let mut full = spec.trim().to_string();
    let mut add = |kv: String| {
        full.push(if full.contains(':') { ',' } else { ':' });
        full.push_str(&kv);
    };
    match family {
        ModelFamily::Jpv if !has("n") => add(format!("n={}", priors.n)),
        ModelFamily::PowerLaw if !has("beta") => add(format!("beta={:?}", 1.0 / priors.max_prior())),
        _ => {}
    }
    full.parse()
}

/// Propensities of `spec` on the priors of `ds`.
pub fn assignment_for(spec: &str, ds: &SparseDataset, alpha: f64) -> Result<PropensityAssignment> {
    let priors = estimate_priors(ds, alpha)?;
    assign(&resolve_spec(spec, &priors)?, &priors)
}

pub fn load_dataset(path: &Path) -> Result<SparseDataset> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_xmlc(BufReader::new(file))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("{key} is required for this experiment")))
}

/// Every requested metric at every `k`.
pub fn compute_metrics(
    labels: &[Vec<usize>],
    scores: &PredictionMatrix,
    p: &PropensityAssignment,
    cfg: &EvalConfig,
) -> Result<Vec<MetricValue>> {
    let mut out = Vec::new();
    for name in &cfg.metrics {
        for &k in &cfg.ks {
            let k = k.min(scores.m());
            let v = match name.as_str() {
                "P" => metrics::precision_at_k(labels, scores, k),
                "R" => metrics::recall_at_k(labels, scores, k),
                "nDCG" => metrics::ndcg_at_k(labels, scores, k),
                "PSP" => metrics::ps_precision_at_k(labels, scores, k, p),
                "PSR" => metrics::ps_recall_at_k(labels, scores, k, p),
                "PSnDCG" => metrics::ps_ndcg_at_k(labels, scores, k, p),
                "nPSP" => metrics::normalized_psp_at_k(labels, scores, k, p),
                "macroF" => metrics::macro_f_beta_at_k(labels, scores, k, cfg.beta),
                "abandon" => metrics::abandonment_at_k(labels, scores, k),
                "coverage" => metrics::coverage_at_k(labels, scores, k),
                other => Err(Error::Config(format!("unknown metric {other:?}"))),
            };
            match v {
                Ok(v) => out.push(v),
                Err(Error::Undefined(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

fn metric_cells(v: &MetricValue) -> Vec<String> {
    vec![
        v.name.clone(),
        v.k.map_or("-".into(), |k| k.to_string()),
        f6(v.value),
        v.n_evaluated.to_string(),
        v.skipped.to_string(),
    ]
}

const METRIC_COLUMNS: [&str; 5] = ["metric", "k", "value", "n_evaluated", "skipped"];

fn clamp_note(p: &PropensityAssignment) -> Option<String> {
    let k = p.clamped.iter().filter(|&&c| c).count();
    (k > 0).then(|| format!("degenerate: {k} of {} propensities of {} were clamped", p.m(), p.source))
}

/// Runs the experiment named in the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        Experiment::Gen => run_gen(cfg),
        Experiment::Inject => run_inject(cfg),
        Experiment::Fit => run_fit(cfg),
        Experiment::Train => run_train(cfg),
        Experiment::Eval => run_eval(cfg),
        Experiment::Mismatch => run_mismatch_experiment(cfg),
        Experiment::Recovery => run_propensity_recovery(cfg),
        Experiment::Feasibility => run_feasibility_demo(cfg),
        Experiment::Stats => run_stats(cfg),
        Experiment::PlotData => run_plot_data(cfg),
        Experiment::Pipeline => run_pipeline(cfg),
    }
}

fn hyperball_for(cfg: &ExperimentConfig, seed: u64) -> HyperBallConfig {
    HyperBallConfig {
        seed,
        ..cfg.hyperball.clone()
    }
}

/// Generates one hyper-ball problem and writes its splits to `output.dir`.
pub fn run_gen(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seed = cfg.single_seed()?;
    let hb = generate_hyperball(&hyperball_for(cfg, seed))?;
    let mut report = ExperimentReport::new(cfg, &["split", "n", "d", "m", "positives"]);
    for (name, ds) in [("train", &hb.train), ("val", &hb.val), ("test", &hb.test)] {
        report.push(
            seed,
            vec![
                name.into(),
                ds.n().to_string(),
                ds.d().to_string(),
                ds.m().to_string(),
                ds.num_positives().to_string(),
            ],
        );
        if let Some(dir) = &cfg.output.dir {
            write_file(&dir.join(format!("{name}.txt")), &write_xmlc(ds))?;
        }
    }
    if let Some(dir) = &cfg.output.dir {
        let mut balls = String::from("label\tradius\ttrue_prior\n");
        for (j, (b, p)) in hb.balls.iter().zip(&hb.true_priors).enumerate() {
            let _ = writeln!(balls, "{j}\t{:?}\t{:?}", b.radius, p);
        }
        write_file(&dir.join("labels.tsv"), &balls)?;
    }
    report
        .series
        .insert("label_frequency".into(), label_frequency_series(&hb.train)?);
    Ok(report)
}

/// Removes labels from `data.train` with the configured propensity model.
pub fn run_inject(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seed = cfg.single_seed()?;
    let clean = load_dataset(required(&cfg.data.train, "data.train")?)?;
    let p = assignment_for(&cfg.propensity.model, &clean, cfg.propensity.alpha)?;
    let (biased, trace) = inject_missing(&clean, &p, seed)?;
    if let Some(path) = &cfg.output.dataset {
        write_file(path, &write_xmlc(&biased))?;
    }
    let mut report =
        ExperimentReport::new(cfg, &["model", "n", "positives", "kept", "removed", "mean_propensity"]);
    report.push(
        seed,
        vec![
            p.source.clone(),
            clean.n().to_string(),
            clean.num_positives().to_string(),
            trace.kept.to_string(),
            trace.removed.to_string(),
            f6(metrics::pairwise_sum(&p.p) / p.m() as f64),
        ],
    );
    report.notes.extend(clamp_note(&p));
    report
        .series
        .insert("label_frequency".into(), label_frequency_series(&biased)?);
    Ok(report)
}

/// Dataset characteristics of every configured split.
pub fn run_stats(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seed = cfg.single_seed()?;
    let mut report = ExperimentReport::new(
        cfg,
        &["split", "n", "d", "m", "positives", "avg_labels", "min_ir", "ilir", "pos80"],
    );
    let splits = [("train", &cfg.data.train), ("val", &cfg.data.val), ("test", &cfg.data.test)];
    let mut first = None;
    for (name, path) in splits {
        let Some(path) = path else { continue };
        let ds = load_dataset(path)?;
        let priors = estimate_priors(&ds, 0.0)?;
        let (min_ir, ilir, pos80) = match imbalance_stats(&priors) {
            Ok(s) => (f6(s.min_ir), f6(s.ilir), f6(s.pos80)),
            Err(Error::Undefined(why)) => {
                report.notes.push(format!("{name}: {why}"));
                let max = priors.max_prior();
                let min_ir = if max > 0.0 { f6((1.0 - max) / max) } else { "undefined".into() };
                (min_ir, "undefined".into(), "undefined".into())
            }
            Err(e) => return Err(e),
        };
        report.push(
            seed,
            vec![
                name.into(),
                ds.n().to_string(),
                ds.d().to_string(),
                ds.m().to_string(),
                ds.num_positives().to_string(),
                f6(ds.num_positives() as f64 / ds.n() as f64),
                min_ir,
                ilir,
                pos80,
            ],
        );
        first.get_or_insert(ds);
    }
    let ds = first.ok_or_else(|| Error::Config("stats needs at least one of data.train, data.val, data.test".into()))?;
    report
        .series
        .insert("label_frequency".into(), label_frequency_series(&ds)?);
    Ok(report)
}

/// Result of fitting every family to direct estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyFit {
    /// Family name, or `jpv_default` for the unfitted default.
    pub name: String,
    pub model: PropensityModel,
    pub mse: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutcome {
    pub priors: LabelPriors,
    pub direct: PropensityAssignment,
    pub weights: Vec<f64>,
    /// Sorted by MSE, ascending.
    pub fits: Vec<FamilyFit>,
}

/// Direct estimates from a biased training set and a bias-controlled
/// validation set, and a least-squares fit of every family to them.
pub fn fit_propensity_families(
    train: &SparseDataset,
    val: &SparseDataset,
    p_controlled: f64,
    alpha: f64,
    families: &[ModelFamily],
    min_val_positives: usize,
) -> Result<RecoveryOutcome> {
    if train.m() != val.m() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} labels, validation {}",
            train.m(),
            val.m()
        )));
    }
    let tp = estimate_priors(train, alpha)?;
    let vp = estimate_priors(val, alpha)?;
    let direct = direct_estimate(&tp, &vp, &vec![p_controlled; train.m()])?;
    let weights: Vec<f64> = direct
        .clamped
        .iter()
        .zip(&vp.counts)
        .map(|(&c, &n)| if c || n < min_val_positives { 0.0 } else { 1.0 })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidDataset(format!(
            "no label has {min_val_positives} validation positives and an unclamped estimate"
        )));
    }
    let n = train.n() as u64;
    let problem = |family| {
        FitProblem::with_weights(tp.priors.clone(), direct.p.clone(), family, weights.clone())
    };
    let mut fits = families
        .par_iter()
        .map(|&family| {
            let res = fit_family(&problem(family)?, n, &LmConfig::default())?;
            Ok(FamilyFit {
                name: family.name().into(),
                model: res.model(family)?,
                mse: res.mse,
                converged: res.converged,
                iterations: res.iterations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let default = PropensityModel::jpv_default(n);
    fits.push(FamilyFit {
        name: "jpv_default".into(),
        mse: problem(ModelFamily::Jpv)?.weighted_mse(&default.params()),
        model: default,
        converged: true,
        iterations: 0,
    });
    fits.sort_by(|a, b| a.mse.total_cmp(&b.mse).then_with(|| a.name.cmp(&b.name)));
    Ok(RecoveryOutcome {
        priors: tp,
        direct,
        weights,
        fits,
    })
}

fn recovery_families(cfg: &ExperimentConfig) -> Result<Vec<ModelFamily>> {
    cfg.recovery.families.iter().map(|f| f.parse()).collect()
}

const FIT_COLUMNS: [&str; 6] = ["family", "model", "mse", "converged", "iterations", "labels_fitted"];

fn push_fit_rows(report: &mut ExperimentReport, seed: u64, out: &RecoveryOutcome) {
    let fitted = out.weights.iter().filter(|&&w| w > 0.0).count().to_string();
    for f in &out.fits {
        report.push(
            seed,
            vec![
                f.name.clone(),
                f.model.to_string(),
                f6(f.mse),
                f.converged.to_string(),
                f.iterations.to_string(),
                fitted.clone(),
            ],
        );
    }
}

fn scatter_series(out: &RecoveryOutcome, truth: Option<&[f64]>) -> Series {
    let mut columns: Vec<String> = ["label", "prior", "direct", "weight"].map(String::from).to_vec();
    if truth.is_some() {
        columns.push("true".into());
    }
    columns.extend(out.fits.iter().map(|f| f.name.clone()));
    let rows = (0..out.direct.m())
        .map(|j| {
            let prior = out.priors.priors[j];
            let mut row = vec![j.to_string(), f6(prior), f6(out.direct.p[j]), f6(out.weights[j])];
            if let Some(t) = truth {
                row.push(f6(t[j]));
            }
            for f in &out.fits {
                row.push(f.model.eval(j, prior).map_or("nan".into(), |c| f6(c.value)));
            }
            row
        })
        .collect();
    Series { columns, rows }
}

/// Fits propensity families on `data.train` (biased) and `data.val`
/// (bias-controlled with `propensity.p_controlled`).
pub fn run_fit(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seed = cfg.single_seed()?;
    let train = load_dataset(required(&cfg.data.train, "data.train")?)?;
    let val = load_dataset(required(&cfg.data.val, "data.val")?)?;
    let out = fit_propensity_families(
        &train,
        &val,
        cfg.propensity.p_controlled,
        cfg.propensity.alpha,
        &recovery_families(cfg)?,
        cfg.recovery.min_val_positives,
    )?;
    let mut report = ExperimentReport::new(cfg, &FIT_COLUMNS);
    push_fit_rows(&mut report, seed, &out);
    report.notes.extend(clamp_note(&out.direct));
    report
        .series
        .insert("propensity_scatter".into(), scatter_series(&out, None));
    Ok(report)
}

/// Per-seed data of [`run_propensity_recovery`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecoverySeed {
    pub seed: u64,
    pub truth: PropensityAssignment,
    pub outcome: RecoveryOutcome,
}

/// Hyper-ball data biased with `propensity.model`, direct estimates from a
/// validation split kept with probability `p_controlled`, and family fits.
pub fn propensity_recovery_seeds(cfg: &ExperimentConfig) -> Result<Vec<RecoverySeed>> {
    let families = recovery_families(cfg)?;
    cfg.seeds
        .par_iter()
        .map(|&seed| {
            let hb = generate_hyperball(&hyperball_for(cfg, seed))?;
            let truth = assignment_for(&cfg.propensity.model, &hb.train, cfg.propensity.alpha)?;
            let (train, _) = inject_missing(&hb.train, &truth, derive_seed(seed, "recovery/train", 0))?;
            let pc = PropensityAssignment::constant(hb.val.m(), cfg.propensity.p_controlled)?;
            let (val, _) = inject_missing(&hb.val, &pc, derive_seed(seed, "recovery/val", 0))?;
            let outcome = fit_propensity_families(
                &train,
                &val,
                cfg.propensity.p_controlled,
                cfg.propensity.alpha,
                &families,
                cfg.recovery.min_val_positives,
            )?;
            Ok(RecoverySeed {
                seed,
                truth,
                outcome,
            })
        })
        .collect()
}

pub fn run_propensity_recovery(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seeds = propensity_recovery_seeds(cfg)?;
    let mut report = ExperimentReport::new(cfg, &FIT_COLUMNS);
    for s in &seeds {
        push_fit_rows(&mut report, s.seed, &s.outcome);
        let w = &s.outcome.weights;
        let sq: Vec<f64> = (0..w.len())
            .filter(|&j| w[j] > 0.0)
            .map(|j| (1.0 / s.outcome.direct.p[j] - 1.0 / s.truth.p[j]).powi(2))
            .collect();
        report.notes.push(format!(
            "seed {}: direct vs true inverse-propensity MSE {}",
            s.seed,
            f6(metrics::pairwise_sum(&sq) / sq.len().max(1) as f64)
        ));
    }
    if let Some(first) = seeds.first() {
        report.series.insert(
            "propensity_scatter".into(),
            scatter_series(&first.outcome, Some(&first.truth.p)),
        );
    }
    Ok(report)
}

fn train_config(cfg: &ExperimentConfig, seed: u64, p: Option<PropensityAssignment>) -> TrainConfig {
    TrainConfig {
        seed,
        propensities: p,
        ..cfg.train.clone()
    }
}

/// Trains on `data.train` and writes the checkpoint to `output.model`.
pub fn run_train(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seed = cfg.single_seed()?;
    let train = load_dataset(required(&cfg.data.train, "data.train")?)?;
    let p = match cfg.train.loss {
        LossKind::Unbiased => Some(assignment_for(&cfg.propensity.model, &train, cfg.propensity.alpha)?),
        _ => None,
    };
    let mut report = ExperimentReport::new(
        cfg,
        &["loss", "lr", "wd", "val_objective", "epochs_ran", "status", "selected"],
    );
    if let Some(p) = &p {
        report.notes.extend(clamp_note(p));
    }
    let out = train_ova(&train, &train_config(cfg, seed, p))?;
    for (k, e) in out.tuning_log.iter().enumerate() {
        report.push(
            seed,
            vec![
                cfg.train.loss.to_string(),
                e.lr.to_string(),
                e.wd.to_string(),
                f6(e.val_objective),
                e.epochs_ran.to_string(),
                e.status.to_string(),
                (k == out.best).to_string(),
            ],
        );
    }
    if let Some(path) = &cfg.output.model {
        write_file(path, &write_checkpoint(&out.model, &cfg.config_hash))?;
    }
    Ok(report)
}

/// Evaluates the checkpoint `data.model` on `data.test`. Propensities come
/// from the priors of `data.train` when given, otherwise of the test set.
pub fn run_eval(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seed = cfg.single_seed()?;
    let path = required(&cfg.data.model, "data.model")?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (model, _) = read_checkpoint(&text)?;
    let test = load_dataset(required(&cfg.data.test, "data.test")?)?;
    let prior_source = match &cfg.data.train {
        Some(p) => load_dataset(p)?,
        None => test.clone(),
    };
    let p = assignment_for(&cfg.propensity.model, &prior_source, cfg.propensity.alpha)?;
    let scores = predict(&model, &test)?;
    let mut report = ExperimentReport::new(cfg, &METRIC_COLUMNS);
    for v in compute_metrics(test.labels(), &scores, &p, &cfg.eval)? {
        report.push(seed, metric_cells(&v));
    }
    report.notes.extend(clamp_note(&p));
    if cfg.eval.metrics.iter().any(|m| m == "PSR") {
        report
            .notes
            .push("PSR divides by the observed label count, a stand-in for the unknown true count".into());
    }
    Ok(report)
}

/// One (seed, noise process, training propensities) cell of the mismatch
/// experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchCell {
    pub seed: u64,
    pub noise: usize,
    pub train: usize,
    /// Clean-test precision at every configured `k`.
    pub precision: Vec<f64>,
    /// PSP@1 on the biased test set under every spec.
    pub psp1: Vec<f64>,
}

/// Loads `data.train`/`data.test` as clean data if both are given, otherwise
/// generates a hyper-ball problem for `seed`.
fn clean_splits(cfg: &ExperimentConfig, seed: u64) -> Result<(SparseDataset, SparseDataset)> {
    match (&cfg.data.train, &cfg.data.test) {
        (Some(tr), Some(te)) => Ok((load_dataset(tr)?, load_dataset(te)?)),
        _ => {
            let hb = generate_hyperball(&hyperball_for(cfg, seed))?;
            Ok((hb.train, hb.test))
        }
    }
}

pub fn mismatch_cells(cfg: &ExperimentConfig) -> Result<Vec<MismatchCell>> {
    let specs = &cfg.mismatch.specs;
    let per_seed = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<MismatchCell>> {
            let (train, test) = clean_splits(cfg, seed)?;
            let asg = specs
                .iter()
                .map(|s| assignment_for(s, &train, cfg.propensity.alpha))
                .collect::<Result<Vec<_>>>()?;
            let mut cells = Vec::new();
            for noise in 0..specs.len() {
                let (btrain, _) = inject_missing(&train, &asg[noise], derive_seed(seed, "mismatch/train", noise as u64))?;
                let (btest, _) = inject_missing(&test, &asg[noise], derive_seed(seed, "mismatch/test", noise as u64))?;
                for (t, p) in asg.iter().enumerate() {
                    let tc = TrainConfig {
                        loss: LossKind::Unbiased,
                        ..train_config(cfg, seed, Some(p.clone()))
                    };
                    let model = train_ova(&btrain, &tc)?.model;
                    let scores = predict(&model, &test)?;
                    let precision = cfg
                        .mismatch
                        .ks
                        .iter()
                        .map(|&k| Ok(metrics::precision_at_k(test.labels(), &scores, k.min(test.m()))?.value))
                        .collect::<Result<Vec<_>>>()?;
                    let psp1 = asg
                        .iter()
                        .map(|q| Ok(metrics::ps_precision_at_k(btest.labels(), &scores, 1, q)?.value))
                        .collect::<Result<Vec<_>>>()?;
                    cells.push(MismatchCell {
                        seed,
                        noise,
                        train: t,
                        precision,
                        psp1,
                    });
                }
            }
            Ok(cells)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

/// How often the matched training propensities win.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchSummary {
    /// (wins, trials) over (seed, noise) pairs: the matched model has the
    /// strictly best clean P@k at the first configured `k`.
    pub precision_matched_best: (usize, usize),
    /// Per spec `v`, over seeds, on data biased with `v`: PSP@1 under `v`
    /// ranks the model trained with `v` strictly best.
    pub psp_matched_best: Vec<(usize, usize)>,
}

pub fn summarize_mismatch(cells: &[MismatchCell], n_specs: usize) -> MismatchSummary {
    let mut groups: BTreeMap<(u64, usize), Vec<&MismatchCell>> = BTreeMap::new();
    for c in cells {
        groups.entry((c.seed, c.noise)).or_default().push(c);
    }
    let mut prec = (0, 0);
    let mut psp = vec![(0, 0); n_specs];
    for ((_, noise), group) in &groups {
        let Some(matched) = group.iter().find(|c| c.train == *noise) else {
            continue;
        };
        let others = || group.iter().filter(|c| c.train != *noise);
        prec.1 += 1;
        if others().all(|c| matched.precision[0] > c.precision[0]) {
            prec.0 += 1;
        }
        psp[*noise].1 += 1;
        if others().all(|c| matched.psp1[*noise] > c.psp1[*noise]) {
            psp[*noise].0 += 1;
        }
    }
    MismatchSummary {
        precision_matched_best: prec,
        psp_matched_best: psp,
    }
}

/// Trains with each spec on data biased by each spec and reports clean
/// precision and biased PSP@1 under every spec, per seed and averaged with
/// standard errors over seeds.
pub fn run_mismatch_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let specs = &cfg.mismatch.specs;
    let cells = mismatch_cells(cfg)?;
    let mut columns = vec!["stat".to_string(), "noise".into(), "train_model".into()];
    columns.extend(cfg.mismatch.ks.iter().map(|k| format!("P@{k}")));
    columns.extend(specs.iter().map(|s| format!("PSP@1[{s}]")));
    columns.extend(specs.iter().map(|s| format!("eval[{s}]")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut report = ExperimentReport::new(cfg, &cols);
    let row = |stat: &str, c: &MismatchCell, prec: Vec<String>, psp: Vec<String>| {
        let mut cells = vec![stat.to_string(), specs[c.noise].clone(), specs[c.train].clone()];
        cells.extend(prec);
        cells.extend(psp);
        cells.extend((0..specs.len()).map(|v| {
            if v == c.noise { "compatible" } else { "incompatible" }.to_string()
        }));
        cells
    };
    for c in &cells {
        let r = row(
            "value",
            c,
            c.precision.iter().map(|&v| f6(v)).collect(),
            c.psp1.iter().map(|&v| f6(v)).collect(),
        );
        report.push(c.seed, r);
    }
    for noise in 0..specs.len() {
        for t in 0..specs.len() {
            let group: Vec<&MismatchCell> =
                cells.iter().filter(|c| c.noise == noise && c.train == t).collect();
            let Some(first) = group.first() else { continue };
            let stat = |f: &dyn Fn(&MismatchCell) -> f64| {
                metrics::mean_se(&group.iter().map(|c| f(c)).collect::<Vec<_>>())
            };
            let nk = cfg.mismatch.ks.len();
            let prec: Vec<(f64, f64)> = (0..nk).map(|k| stat(&|c| c.precision[k])).collect();
            let psp: Vec<(f64, f64)> = (0..specs.len()).map(|v| stat(&|c| c.psp1[v])).collect();
            for (name, pick) in [("mean", 0), ("se", 1)] {
                let get = |x: &(f64, f64)| f6(if pick == 0 { x.0 } else { x.1 });
                let r = row(name, first, prec.iter().map(get).collect(), psp.iter().map(get).collect());
                report.push("all", r);
            }
        }
    }
    let s = summarize_mismatch(&cells, specs.len());
    let k0 = cfg.mismatch.ks.first().copied().unwrap_or(1);
    report.notes.push(format!(
        "matched training propensities give the best clean P@{k0} in {}/{} (seed, noise) pairs",
        s.precision_matched_best.0, s.precision_matched_best.1
    ));
    for (v, (w, n)) in s.psp_matched_best.iter().enumerate() {
        report.notes.push(format!(
            "PSP@1[{}] on data biased by it ranks the matched model best in {w}/{n} seeds",
            specs[v]
        ));
    }
    Ok(report)
}

/// Solvability of the unbiasedness equations for a few missing-label
/// processes over two labels.
pub fn run_feasibility_demo(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let together = MaskProcess::vanish_together(0.5)?;
    let complementary = MaskProcess::vanish_complementary()?;
    let independent = MaskProcess::independent(&[0.5, 0.5])?;
    let subset = metrics::subset_zero_one_table(2, 0b11);
    let hamming = metrics::hamming_table(2, 0b11);
    let cases: [(&str, Vec<MaskProcess>, &str, &[f64]); 5] = [
        ("correlated", vec![together.clone(), complementary.clone()], "subset_0_1", &subset),
        ("correlated", vec![together, complementary], "hamming", &hamming),
        ("independent", vec![independent.clone()], "subset_0_1", &subset),
        ("independent", vec![independent], "hamming", &hamming),
        ("no_noise", vec![MaskProcess::no_noise(2)?], "subset_0_1", &subset),
    ];
    let mut report = ExperimentReport::new(cfg, &["process", "loss", "residual", "feasible", "solution"]);
    for (name, procs, loss, table) in cases {
        let f = metrics::check_unbiased_estimator_exists(&procs, table)?;
        let sol: Vec<String> = f.solution.iter().map(|v| f6(*v)).collect();
        report.push(
            seed,
            vec![
                name.into(),
                loss.into(),
                format!("{:.3e}", f.residual),
                f.feasible.to_string(),
                sol.join(","),
            ],
        );
    }
    report.notes.push(
        "correlated stacks two processes with marginal propensities 0.5 that drop labels together or complementarily".into(),
    );
    Ok(report)
}

/// Builds the report that carries the requested plot series.
pub fn run_plot_data(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.plot.which.as_str() {
        "label_frequency" => {
            let seed = cfg.single_seed()?;
            let ds = load_dataset(required(&cfg.data.train, "data.train")?)?;
            let mut report = ExperimentReport::new(cfg, &["labels", "positives"]);
            report.push(seed, vec![ds.m().to_string(), ds.num_positives().to_string()]);
            report
                .series
                .insert("label_frequency".into(), label_frequency_series(&ds)?);
            Ok(report)
        }
        _ if cfg.data.train.is_some() => run_fit(cfg),
        _ => run_propensity_recovery(cfg),
    }
}

/// Generation, noise injection, training and evaluation for every seed.
///
/// Noise uses `propensity.model` on the clean training priors; the unbiased
/// loss, if configured, uses the same propensities. Precision-type metrics
/// are computed on the clean test set and propensity-scored ones on the
/// test set biased with the same process.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let per_seed = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<(Vec<Vec<String>>, Vec<String>)> {
            let hb = generate_hyperball(&hyperball_for(cfg, seed))?;
            let p = assignment_for(&cfg.propensity.model, &hb.train, cfg.propensity.alpha)?;
            let (btrain, trace) = inject_missing(&hb.train, &p, derive_seed(seed, "pipeline/train", 0))?;
            let (btest, _) = inject_missing(&hb.test, &p, derive_seed(seed, "pipeline/test", 0))?;
            let tp = (cfg.train.loss == LossKind::Unbiased).then(|| p.clone());
            let out = train_ova(&btrain, &train_config(cfg, seed, tp))?;
            let checkpoint = write_checkpoint(&out.model, &cfg.config_hash);
            let scores = predict(&out.model, &hb.test)?;
            let mut rows = Vec::new();
            let best = &out.tuning_log[out.best];
            rows.push(vec![
                "train".into(),
                "selected".into(),
                "-".into(),
                format!("lr={} wd={} epochs={}", best.lr, best.wd, best.epochs_ran),
            ]);
            rows.push(vec![
                "train".into(),
                "checkpoint_sha256".into(),
                "-".into(),
                config_hash(&checkpoint),
            ]);
            rows.push(vec!["noise".into(), "kept".into(), "-".into(), trace.kept.to_string()]);
            rows.push(vec!["noise".into(), "removed".into(), "-".into(), trace.removed.to_string()]);
            let ps = ["PSP", "PSR", "PSnDCG", "nPSP"];
            for v in compute_metrics(hb.test.labels(), &scores, &p, &cfg.eval)? {
                if !ps.contains(&v.name.as_str()) {
                    rows.push(vec!["clean".into(), v.name.clone(), v.k.map_or("-".into(), |k| k.to_string()), f6(v.value)]);
                }
            }
            for v in compute_metrics(btest.labels(), &scores, &p, &cfg.eval)? {
                if ps.contains(&v.name.as_str()) {
                    rows.push(vec!["biased".into(), v.name.clone(), v.k.map_or("-".into(), |k| k.to_string()), f6(v.value)]);
                }
            }
            Ok((rows, clamp_note(&p).into_iter().collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::new(cfg, &["stage", "metric", "k", "value"]);
    for (&seed, (rows, notes)) in cfg.seeds.iter().zip(per_seed) {
        for r in rows {
            report.push(seed, r);
        }
        report.notes.extend(notes.into_iter().map(|n| format!("seed {seed}: {n}")));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        assert_eq!(config_hash("abc").len(), 16);
        assert_eq!(config_hash("abc"), config_hash("abc"));
        assert_ne!(config_hash("abc"), config_hash("abd"));
        let a = ExperimentConfig::from_toml_str("seeds = [2, 1]").unwrap();
        let b = ExperimentConfig::from_toml_str("seeds = [1, 2]\n[eval]\nks = [1, 3, 5]").unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        let c = ExperimentConfig::from_toml_str("seeds = [1, 3]").unwrap();
        assert_ne!(a.config_hash, c.config_hash);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ExperimentConfig::from_toml_str("seeds = []"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml_str("bogus = 1"), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml_str("[eval]\nmetrics = [\"XYZ\"]").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"mismatch\"\n[mismatch]\nspecs = [\"jpv\"]").is_err());
        assert_eq!("plot-data".parse::<Experiment>().unwrap(), Experiment::PlotData);
    }

    #[test]
    fn spec_resolution() {
        let priors = LabelPriors::from_counts(1000, vec![10, 250], 0.0).unwrap();
        assert_eq!(
            resolve_spec("jpv:a=0.55,b=1.5", &priors).unwrap(),
            PropensityModel::Jpv { a: 0.55, b: 1.5, n: 1000 }
        );
        assert_eq!(
            resolve_spec("power_law:gamma=1", &priors).unwrap(),
            PropensityModel::PowerLaw { beta: 4.0, gamma: 1.0 }
        );
        assert_eq!(
            resolve_spec("jpv:a=1,b=2,n=5", &priors).unwrap(),
            PropensityModel::Jpv { a: 1.0, b: 2.0, n: 5 }
        );
        assert_eq!(resolve_spec("constant:p=0.3", &priors).unwrap(), PropensityModel::Constant { p: 0.3 });
    }

    #[test]
    fn frequency_series_sorted() {
        let ds = SparseDataset::new(
            1,
            3,
            vec![vec![]; 5],
            vec![vec![0, 1, 2], vec![0, 2], vec![0, 2], vec![0], vec![0]],
        )
        .unwrap();
        let s = label_frequency_series(&ds).unwrap();
        assert_eq!(s.rows, vec![vec!["1", "5"], vec!["2", "3"], vec!["3", "1"]]);
        let empty = SparseDataset::new(1, 2, vec![vec![]], vec![vec![]]).unwrap();
        assert!(label_frequency_series(&empty).is_err());
    }

    #[test]
    fn feasibility_report() {
        let cfg = ExperimentConfig::for_experiment(Experiment::Feasibility).unwrap();
        let r = run_feasibility_demo(&cfg).unwrap();
        assert_eq!(r.column("feasible").unwrap(), vec!["false", "true", "true", "true", "true"]);
        assert_eq!(r.to_tsv(), run_feasibility_demo(&cfg).unwrap().to_tsv());
        assert!(r.to_tsv().lines().filter(|l| !l.starts_with('#')).skip(1).all(|l| l.contains(&cfg.config_hash)));
        assert!(emit_plot_data(&r, "label_frequency").is_err());
    }

    #[test]
    fn mismatch_summary_counts() {
        let cell = |seed, noise, train, p: f64, psp: [f64; 2]| MismatchCell {
            seed,
            noise,
            train,
            precision: vec![p],
            psp1: psp.to_vec(),
        };
        let cells = vec![
            cell(0, 0, 0, 0.5, [0.6, 0.1]),
            cell(0, 0, 1, 0.4, [0.5, 0.9]),
            cell(0, 1, 0, 0.5, [0.1, 0.3]),
            cell(0, 1, 1, 0.5, [0.1, 0.4]),
        ];
        let s = summarize_mismatch(&cells, 2);
        assert_eq!(s.precision_matched_best, (1, 2));
        assert_eq!(s.psp_matched_best, vec![(1, 1), (1, 1)]);
    }
}
