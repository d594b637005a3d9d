use xprop_core::experiments::{
    emit_plot_data, mismatch_cells, propensity_recovery_seeds, run_experiment, Experiment, ExperimentConfig,
};
use xprop_core::Error;

fn config(experiment: Experiment, extra: &str) -> ExperimentConfig {
    let text = format!(
        "experiment = \"{}\"\n{extra}\n[hyperball]\nm = 20\nn_train = 1500\nn_val = 1500\nn_test = 500\n\
         [train]\nlr_grid = [0.05]\nwd_grid = [0.0]\nepochs = 15\n",
        experiment.name()
    );
    ExperimentConfig::from_toml_str(&text).unwrap()
}

fn provenance_ok(tsv: &str, hash: &str) -> bool {
    tsv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .all(|l| l.split('\t').nth(1) == Some(hash) && !l.split('\t').next().unwrap().is_empty())
}

#[test]
fn pipeline_report_is_byte_identical() {
    let cfg = config(Experiment::Pipeline, "seeds = [1, 2]");
    let a = run_experiment(&cfg).unwrap().to_tsv();
    let b = run_experiment(&cfg).unwrap().to_tsv();
    assert_eq!(a, b);
    assert!(provenance_ok(&a, &cfg.config_hash));
    assert!(a.contains("\tclean\tP\t1\t"));
    assert!(a.contains("\tbiased\tPSP\t1\t"));
}

#[test]
fn seed_order_does_not_change_the_report() {
    let a = config(Experiment::Pipeline, "seeds = [2, 1]");
    let b = config(Experiment::Pipeline, "seeds = [1, 2]");
    assert_eq!(run_experiment(&a).unwrap().to_tsv(), run_experiment(&b).unwrap().to_tsv());
}

#[test]
fn recovery_orders_families_and_beats_defaults() {
    let cfg = config(
        Experiment::Recovery,
        "seeds = [0, 1]\n[propensity]\nmodel = \"power_law:gamma=0.5\"\n",
    );
    for s in propensity_recovery_seeds(&cfg).unwrap() {
        let fits = &s.outcome.fits;
        assert!(fits.windows(2).all(|w| w[0].mse <= w[1].mse));
        let mse = |name: &str| fits.iter().find(|f| f.name == name).unwrap().mse;
        assert!(mse("jpv") <= mse("jpv_default"));
        assert!(mse("power_law") < mse("jpv_default"));
    }
    let report = run_experiment(&cfg).unwrap();
    assert!(provenance_ok(&report.to_tsv(), &cfg.config_hash));
    let scatter = emit_plot_data(&report, "propensity_scatter").unwrap();
    assert!(scatter.contains("label\tprior\tdirect\tweight\ttrue\t"));
}

#[test]
fn identical_unit_specs_make_all_cells_coincide() {
    let cfg = config(
        Experiment::Mismatch,
        "seeds = [3]\n[mismatch]\nspecs = [\"constant:p=1\", \"constant:p=1\"]\nks = [1, 3]\n",
    );
    let cells = mismatch_cells(&cfg).unwrap();
    assert_eq!(cells.len(), 4);
    for c in &cells[1..] {
        assert_eq!(c.precision, cells[0].precision);
        assert_eq!(c.psp1, cells[0].psp1);
    }
    let tsv = run_experiment(&cfg).unwrap().to_tsv();
    assert!(tsv.contains("\tcompatible\tincompatible"));
    assert!(tsv.contains("\nall\t"));
}

#[test]
fn artifact_experiments_need_one_seed() {
    let cfg = config(Experiment::Gen, "seeds = [1, 2]");
    assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
}

#[test]
fn files_round_trip_through_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let gen = config(Experiment::Gen, &format!("seeds = [4]\n[output]\ndir = \"{d}/data\"\n"));
    let report = run_experiment(&gen).unwrap();
    let freq = emit_plot_data(&report, "label_frequency").unwrap();
    let counts: Vec<usize> = freq
        .lines()
        .skip_while(|l| !l.starts_with("rank"))
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));

    let stats = config(
        Experiment::Stats,
        &format!("[data]\ntrain = \"{d}/data/train.txt\"\ntest = \"{d}/data/test.txt\"\n"),
    );
    let r = run_experiment(&stats).unwrap();
    assert_eq!(r.column("split").unwrap(), vec!["train", "test"]);

    let fit = config(
        Experiment::Fit,
        &format!("[data]\ntrain = \"{d}/data/train.txt\"\nval = \"{d}/data/val.txt\"\n"),
    );
    let r = run_experiment(&fit).unwrap();
    assert!(r.column("family").unwrap().contains(&"jpv_default"));
}
