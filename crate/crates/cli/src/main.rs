//! `xprop-lab`: runs experiments from a TOML config.
//!
//! Any config key can be overridden on the command line with
//! `--section.key value`, or `--key value` when the key name is unique.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xprop_core::experiments::{emit_plot_data, run_experiment, Experiment, ExperimentConfig};
use xprop_core::Error;

#[derive(Debug, Parser)]
#[command(name = "xprop-lab", version, about = "Propensity-model experiments for extreme multi-label classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed; repeat for several.
    #[arg(long = "seed", global = true)]
    seeds: Vec<u64>,
    /// Output path. Artifact commands write their artifact here, the
    /// others their report.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Generate hyper-ball splits.
    Gen,
    /// Remove labels with a propensity model.
    Inject,
    /// Fit propensity families to direct estimates.
    Fit,
    /// Train a one-vs-all linear model.
    Train,
    /// Evaluate a checkpoint.
    Eval,
    /// Propensity-mismatch experiment.
    Mismatch,
    /// Propensity recovery on generated data.
    Recovery,
    /// Unbiased-estimator feasibility demo.
    Feasibility,
    /// Dataset statistics.
    Stats,
    /// Plot-ready series as TSV.
    PlotData,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Gen => Experiment::Gen,
            Command::Inject => Experiment::Inject,
            Command::Fit => Experiment::Fit,
            Command::Train => Experiment::Train,
            Command::Eval => Experiment::Eval,
            Command::Mismatch => Experiment::Mismatch,
            Command::Recovery => Experiment::Recovery,
            Command::Feasibility => Experiment::Feasibility,
            Command::Stats => Experiment::Stats,
            Command::PlotData => Experiment::PlotData,
        }
    }
}

const OWN_FLAGS: [&str; 4] = ["--config", "--seed", "--out", "--threads"];

type Overrides = Vec<(String, String)>;

/// Splits argv into the arguments clap parses and `(key, value)` overrides.
fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides), Error> {
    let mut own = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    own.extend(it.next());
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            own.push(arg);
            continue;
        };
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (body.to_string(), None),
        };
        let flag = format!("--{key}");
        if key.is_empty() || OWN_FLAGS.contains(&flag.as_str()) || matches!(key.as_str(), "help" | "version") {
            own.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .ok_or_else(|| Error::Config(format!("--{key} needs a value")))?,
        };
        overrides.push((key, value));
    }
    Ok((own, overrides))
}

/// Leaf paths of the config and whether each holds a string.
fn known_keys() -> Vec<(Vec<String>, bool)> {
    let mut cfg = ExperimentConfig::default();
    let p = PathBuf::from("x");
    cfg.data.train = Some(p.clone());
    cfg.data.val = Some(p.clone());
    cfg.data.test = Some(p.clone());
    cfg.data.model = Some(p.clone());
    cfg.output.dir = Some(p.clone());
    cfg.output.dataset = Some(p.clone());
    cfg.output.model = Some(p);
    let value = toml::Value::try_from(&cfg).expect("config serializes");
    let mut out = Vec::new();
    collect_leaves(&value, &mut Vec::new(), &mut out);
    out
}

fn collect_leaves(v: &toml::Value, path: &mut Vec<String>, out: &mut Vec<(Vec<String>, bool)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                path.push(k.clone());
                collect_leaves(v, path, out);
                path.pop();
            }
        }
        other => out.push((path.clone(), other.is_str())),
    }
}

fn resolve_key(key: &str, keys: &[(Vec<String>, bool)]) -> Result<(Vec<String>, bool), Error> {
    let norm = key.replace('-', "_");
    let dotted: Vec<String> = norm.split('.').map(String::from).collect();
    if let Some(k) = keys.iter().find(|(p, _)| *p == dotted) {
        return Ok(k.clone());
    }
    let matches: Vec<_> = keys.iter().filter(|(p, _)| p.ends_with(&dotted)).collect();
    match matches.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(Error::Config(format!("unknown option --{key}"))),
        many => {
            let names: Vec<String> = many.iter().map(|(p, _)| p.join(".")).collect();
            Err(Error::Config(format!("--{key} is ambiguous: {}", names.join(", "))))
        }
    }
}

fn parse_value(raw: &str, is_str: bool) -> toml::Value {
    if is_str {
        return toml::Value::String(raw.to_string());
    }
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(root: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), Error> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut table = root;
    for p in parents {
        let entry = table
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{p} is not a section")))?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

fn build_config(cli: &Cli, overrides: &[(String, String)]) -> Result<ExperimentConfig, Error> {
    let mut root: toml::Table = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    let experiment = cli.command.experiment();
    root.insert("experiment".into(), toml::Value::String(experiment.name().into()));
    let keys = known_keys();
    for (key, raw) in overrides {
        let (path, is_str) = resolve_key(key, &keys)?;
        set_path(&mut root, &path, parse_value(raw, is_str))?;
    }
    if !cli.seeds.is_empty() {
        let seeds = cli.seeds.iter().map(|&s| toml::Value::Integer(s as i64)).collect();
        root.insert("seeds".into(), toml::Value::Array(seeds));
    }
    if let Some(out) = &cli.out {
        let target = match experiment {
            Experiment::Gen => Some(["output", "dir"]),
            Experiment::Inject => Some(["output", "dataset"]),
            Experiment::Train => Some(["output", "model"]),
            _ => None,
        };
        if let Some(path) = target {
            let path: Vec<String> = path.iter().map(|s| s.to_string()).collect();
            set_path(&mut root, &path, toml::Value::String(out.display().to_string()))?;
        }
    }
    ExperimentConfig::from_value(toml::Value::Table(root))
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), Error> {
    cfg.check_inputs()?;
    let report = run_experiment(cfg)?;
    let text = match cfg.experiment {
        Experiment::PlotData => emit_plot_data(&report, &cfg.plot.which)?,
        _ => report.to_tsv(),
    };
    let artifact = matches!(cfg.experiment, Experiment::Gen | Experiment::Inject | Experiment::Train);
    match &cli.out {
        Some(path) if !artifact => {
            std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let (own, overrides) = match split_overrides(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(own) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let cfg = match build_config(&cli, &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
