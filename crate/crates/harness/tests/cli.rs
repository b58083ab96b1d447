use std::process::{Command, Output};

use mobsense::plot::read_points;
use mobsense::{run, ExperimentConfig};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mobsense")).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn list_names_every_recipe() {
    let out = cli(&["list"]);
    assert!(out.status.success());
    let s = text(&out.stdout);
    for (name, _, _) in mobsense::RECIPES {
        assert!(s.lines().any(|l| l.starts_with(name)), "{name} missing from\n{s}");
    }
}

#[test]
fn validate_reports_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, "experiment = \"prop1\"\n\n[noise]\nratios = [3.0, 5.0]\n").unwrap();
    assert!(cli(&["validate", "--config", good.to_str().unwrap()]).status.success());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "experiment = \"prop1\"\n\n[field]\nrhoo = 3.0\n").unwrap();
    let out = cli(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("rhoo"), "{}", text(&out.stderr));
}

#[test]
fn unknown_experiment_is_an_error() {
    let out = cli(&["run", "no-such-thing"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("prop1"));
}

#[test]
fn config_for_another_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "experiment = \"prop1\"\n").unwrap();
    let out = cli(&["run", "exact-recon", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unmatched_tolerance_override_is_an_error() {
    let mut cfg = ExperimentConfig::new("exact-recon");
    cfg.tolerance.insert("exact.nothing".into(), 1.0);
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&cfg, None, Some(dir.path())).is_err());
}

#[test]
fn run_writes_report_echo_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&ExperimentConfig::new("exact-recon"), Some(11), Some(dir.path())).unwrap();
    assert!(report.passed());
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "# seed=11"), "{csv}");
    assert!(csv.lines().any(|l| l.starts_with("metric,value,reference")));
    let echo = std::fs::read_to_string(dir.path().join("config.echo")).unwrap();
    assert!(mobsense::parse_config(&echo).unwrap().seed == Some(11));
    assert!(dir.path().join("exact_grid.csv").exists());
    assert!(dir.path().join("run.meta").exists());
}

#[test]
fn oversampling_plot_carries_the_unit_slope() {
    let mut cfg = ExperimentConfig::new("oversampling");
    cfg.trials = Some(200);
    let dir = tempfile::tempdir().unwrap();
    run(&cfg, None, Some(dir.path())).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("variance_vs_k.svg")).unwrap();
    let pts = read_points(&svg);
    assert_eq!(pts.len(), 4);
    let (x0, y0) = pts[0];
    let (x1, y1) = pts[pts.len() - 1];
    let slope = (y1 / y0).ln() / (x1 / x0).ln();
    assert!((slope + 1.0).abs() < 0.1, "{slope}");
}

#[test]
fn plots_can_be_disabled() {
    let mut cfg = ExperimentConfig::new("oversampling");
    cfg.trials = Some(20);
    cfg.plots = Some(false);
    let dir = tempfile::tempdir().unwrap();
    run(&cfg, None, Some(dir.path())).unwrap();
    assert!(!dir.path().join("variance_vs_k.svg").exists());
}
