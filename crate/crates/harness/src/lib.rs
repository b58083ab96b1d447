//! Experiment harness for the mobsense simulator: config parsing, named
//! recipes, deterministic seeding, CSV reports and SVG plots.

pub mod config;
pub mod error;
pub mod plot;
pub mod recipes;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use config::{parse_config, ExperimentConfig};
pub use error::HarnessError;
pub use recipes::{RecipeOutput, RECIPES};
pub use report::{ExperimentReport, Metric, Tolerance};

use recipes::{lookup, Context, DEFAULT_SEED};

/// Runs a recipe without touching the file system. Config threshold
/// overrides are applied; an override naming no metric is an error.
pub fn evaluate(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<(ExperimentConfig, RecipeOutput), HarnessError> {
    cfg.validate()?;
    let runner = lookup(&cfg.experiment)?;
    let mut resolved = cfg.clone();
    resolved.seed = Some(seed.or(cfg.seed).unwrap_or(DEFAULT_SEED));
    let ctx = Context { cfg: &resolved, seed: resolved.seed.unwrap() };
    let mut out = runner(&ctx)?;
    for (name, t) in &resolved.tolerance {
        let m = out.metrics.iter_mut().find(|m| &m.name == name).ok_or_else(|| HarnessError::Config {
            path: format!("tolerance.{name}"),
            message: format!("`{}` reports no metric with this name", resolved.experiment),
        })?;
        m.override_threshold(*t);
    }
    Ok((resolved, out))
}

/// Runs a recipe and writes `report.csv`, `config.echo`, data tables, plots
/// and a `run.meta` sidecar (the only file holding timestamps) to the output
/// directory.
pub fn run(cfg: &ExperimentConfig, seed: Option<u64>, out_dir: Option<&Path>) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let (resolved, out) = evaluate(cfg, seed)?;
    let dir: PathBuf = match (out_dir, &resolved.output) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => PathBuf::from("out").join(&resolved.experiment),
    };
    fs::create_dir_all(&dir)?;
    let echo = resolved.echo();
    fs::write(dir.join("config.echo"), &echo)?;
    let mut artifacts = vec!["config.echo".to_string()];
    for t in &out.tables {
        let name = format!("{}.csv", t.name);
        let mut buf = Vec::new();
        t.write(&mut buf)?;
        fs::write(dir.join(&name), buf)?;
        artifacts.push(name);
    }
    for (name, bytes) in &out.files {
        fs::write(dir.join(name), bytes)?;
        artifacts.push(name.clone());
    }
    if resolved.plots.unwrap_or(true) {
        for (name, p) in &out.plots {
            let name = format!("{name}.svg");
            plot::emit_plot(p, &dir.join(&name))?;
            artifacts.push(name);
        }
    }
    let report = ExperimentReport {
        experiment: resolved.experiment.clone(),
        metrics: out.metrics,
        config_hash: report::config_hash(&resolved),
        seed: resolved.seed.unwrap(),
        artifacts,
    };
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    fs::write(dir.join("report.csv"), buf)?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    fs::write(
        dir.join("run.meta"),
        format!("finished_unix={stamp}\nelapsed_seconds={:.3}\n", started.elapsed().as_secs_f64()),
    )?;
    Ok(report)
}
