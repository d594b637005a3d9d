use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xprop-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: [&str; 8] = ["--m", "15", "--n_train", "400", "--n_val", "100", "--n_test", "200"];

#[test]
fn feasibility_exits_zero_and_is_reproducible() {
    let a = lab(&["feasibility"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&lab(&["feasibility"])));
    let text = stdout(&a);
    assert!(text.starts_with("# experiment\tfeasibility\n"));
    assert!(text.contains("correlated\tsubset_0_1"));
}

#[test]
fn config_errors_exit_one() {
    assert_eq!(lab(&["feasibility", "--no_such_knob", "3"]).status.code(), Some(1));
    assert_eq!(lab(&["eval", "--test", "/definitely/missing.txt"]).status.code(), Some(1));
    assert_eq!(lab(&["gen", "--seed", "1", "--seed", "2"]).status.code(), Some(1));
    assert_eq!(lab(&["feasibility", "--config", "/definitely/missing.toml"]).status.code(), Some(1));
    assert_eq!(lab(&["bogus"]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 2 3\nnot a row\n").unwrap();
    assert_eq!(lab(&["stats", "--data.train", p(&bad)]).status.code(), Some(2));
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "seeds = [4]\n[hyperball]\nm = 12\nn_train = 300\nn_val = 50\nn_test = 50\n").unwrap();
    let out = dir.path().join("data");
    let o = lab(&["gen", "--config", p(&cfg), "--out", p(&out), "--hyperball.m", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# seeds\t4\n"));
    assert!(text.contains("\ttrain\t300\t5\t9\t"));
    assert!(out.join("train.txt").exists() && out.join("labels.tsv").exists());
}

#[test]
fn pipeline_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    let mut gen = vec!["gen", "--seed", "2", "--out", p(&data)];
    gen.extend(SMALL);
    assert_eq!(lab(&gen).status.code(), Some(0));
    let train = data.join("train.txt");
    let test = data.join("test.txt");
    let biased = d.join("biased.txt");
    let model = d.join("model.txt");
    let o = lab(&["inject", "--seed", "2", "--data.train", p(&train), "--out", p(&biased)]);
    assert_eq!(o.status.code(), Some(0));
    let o = lab(&[
        "train", "--seed", "2", "--data.train", p(&biased), "--loss", "unbiased", "--lr_grid", "[0.1]",
        "--wd_grid", "[0.0]", "--epochs", "10", "--out", p(&model),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&model).unwrap().starts_with("xprop-model v1"));
    let eval = |out: &Path| {
        lab(&[
            "eval", "--data.train", p(&biased), "--data.test", p(&test), "--data.model", p(&model), "--out",
            p(out),
        ])
    };
    let (r1, r2) = (d.join("r1.tsv"), d.join("r2.tsv"));
    assert_eq!(eval(&r1).status.code(), Some(0));
    assert_eq!(eval(&r2).status.code(), Some(0));
    let a = std::fs::read(&r1).unwrap();
    assert_eq!(a, std::fs::read(&r2).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("\tPSP\t1\t"));

    let o = lab(&["plot-data", "--data.train", p(&train)]);
    assert_eq!(o.status.code(), Some(0));
    let counts: Vec<u64> = stdout(&o)
        .lines()
        .skip_while(|l| !l.starts_with("rank"))
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!counts.is_empty());
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn ambiguous_override_is_a_config_error() {
    let o = lab(&["feasibility", "--model", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ambiguous"));
}
