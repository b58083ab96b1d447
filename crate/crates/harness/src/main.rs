use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mobsense::{parse_config, run, ExperimentConfig, HarnessError, RECIPES};

/// Static vs mobile sensing experiments.
#[derive(Parser)]
#[command(name = "mobsense", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment. Exit status 1 means a tolerance failed.
    Run {
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available experiments.
    List,
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            for (name, about, _) in RECIPES {
                println!("{name:<14} {about}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Validate { config } => load(&config).map(|c| {
            println!("{}: valid config for `{}`", config.display(), c.experiment);
            true
        }),
        Command::Run { experiment, config, seed, out } => (|| {
            let cfg = match &config {
                Some(p) => load(p)?,
                None => ExperimentConfig::new(&experiment),
            };
            if cfg.experiment != experiment {
                return Err(HarnessError::Config {
                    path: "experiment".into(),
                    message: format!("config is for `{}`, not `{experiment}`", cfg.experiment),
                });
            }
            let report = run(&cfg, seed, out.as_deref())?;
            for m in &report.metrics {
                let status = match m.pass {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "info",
                };
                println!("{status:>4}  {:<48} {}", m.name, m.value);
            }
            Ok(report.passed())
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
