use std::path::Path;
use std::process::{Command, Output};

fn genf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genf")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn model_workflow_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&genf(&["prepare-data", "--synthetic", "ar1:phi=0.8", "--units", "8", "--length", "60", "--out", "data.json"], d));
    ok(&genf(&["mi-score", "--dataset", "data.json", "--out", "scores.csv"], d));
    let scores = std::fs::read_to_string(d.join("scores.csv")).unwrap();
    assert!(scores.starts_with("unit_id,score,group,assignment"));
    assert_eq!(scores.lines().count(), 9);
    assert_eq!(scores.matches(",generator").count(), 4);

    ok(&genf(&["train-generator", "--data", "data.json", "--window", "6", "--epochs", "2", "--out", "gen.json"], d));
    ok(&genf(&["generate", "--gen-bundle", "gen.json", "--data", "data.json", "--steps", "3", "--out", "synthetic.csv"], d));
    assert_eq!(lines(&d.join("synthetic.csv")), 1 + 8 * 3);

    let train = [
        "train-predictor", "--data", "data.json", "--horizon", "3", "--strategy", "genf", "--gen-bundle", "gen.json",
        "--L", "2", "--epochs", "2", "--out", "pred.json",
    ];
    ok(&genf(&train, d));
    let eval = genf(&["evaluate", "--pred-bundle", "pred.json", "--data", "data.json", "--gen-bundle", "gen.json", "--out", "m.csv"], d);
    ok(&eval);
    let metrics = std::fs::read_to_string(d.join("m.csv")).unwrap();
    for m in ["mse", "mae", "smape"] {
        assert!(metrics.contains(m), "{metrics}");
    }
    // the GenF predictor cannot be scored without its generator
    let out = genf(&["evaluate", "--pred-bundle", "pred.json", "--data", "data.json", "--out", "m2.csv"], d);
    assert_eq!(out.status.code(), Some(1));

    ok(&genf(&["train-predictor", "--data", "data.json", "--horizon", "3", "--window", "6", "--epochs", "2", "--out", "df.json"], d));
    ok(&genf(&["evaluate", "--pred-bundle", "df.json", "--data", "data.json", "--out", "m3.csv"], d));
}

const EXPERIMENT: &str = r#"
[dataset]
kind = "synthetic"
lags = [[[0.7]]]
units = 10
length = 40

[experiment]
window_len = 6
horizons = [2]
synthetic_lens = [0]
strategies = ["persistence"]
seeds = [0, 1, 2]
"#;

#[test]
fn run_experiment_writes_reports_next_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("exp.toml"), EXPERIMENT).unwrap();
    ok(&genf(&["run-experiment", "--config", "exp.toml", "--out", "out/summary.json"], d));
    assert!(d.join("out/summary.json").exists());
    assert_eq!(lines(&d.join("out/report.csv")), 4);
    assert!(d.join("out/long.csv").exists());
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("exp.toml"), EXPERIMENT).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_genf"))
        .args(["run-experiment", "--config", "exp.toml"])
        .current_dir(d)
        .env("GENF_OUTPUT_ROOT", d.join("root"))
        .output()
        .unwrap();
    ok(&out);
    let runs: Vec<_> = std::fs::read_dir(d.join("root")).unwrap().collect();
    assert_eq!(runs.len(), 1);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bad = EXPERIMENT
        .replace("synthetic_lens = [0]", "synthetic_lens = [2]")
        .replace(r#"strategies = ["persistence"]"#, r#"strategies = ["persistence", "genf"]"#);
    std::fs::write(d.join("bad.toml"), bad).unwrap();
    assert_eq!(genf(&["run-experiment", "--config", "bad.toml", "--check"], d).status.code(), Some(1));
    assert_eq!(genf(&["mi-score", "--dataset", "missing.json", "--out", "s.csv"], d).status.code(), Some(2));

    // every replicate of the only cell fails: the horizon outruns the units
    let short = EXPERIMENT.replace("horizons = [2]", "horizons = [50]");
    std::fs::write(d.join("short.toml"), short).unwrap();
    assert_eq!(genf(&["run-experiment", "--config", "short.toml", "--out", "o/r.json"], d).status.code(), Some(3));
}

#[test]
fn theory_bounds_scans_every_l() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let params = "l1 = 1.2\nl2 = 0.5\nalpha = 0.3\nsigma_i = 0.2\nsigma_d = 0.4\nbeta0 = 0.1\nbeta1 = 0.5\nbeta2 = 0.2\nN = 6\n";
    std::fs::write(d.join("p.toml"), params).unwrap();
    let out = genf(&["theory-bounds", "--params", "p.toml", "--scan-L", "--out", "b.csv"], d);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("condition_holds="));
    let text = std::fs::read_to_string(d.join("b.csv")).unwrap();
    assert_eq!(text.matches("genf,").count(), 5);
}

#[test]
fn bias_variance_writes_one_row_per_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["bias-variance", "--process", "ar1:phi=0.9", "--R", "3", "--horizons", "1,4", "--test-points", "500", "--out", "bv.csv"];
    ok(&genf(&args, d));
    assert_eq!(lines(&d.join("bv.csv")), 3);
}
