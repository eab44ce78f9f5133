use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};
use laelab::{suites, ExperimentConfig};

#[derive(Parser)]
#[command(name = "laelab", version, about = "Convergence and structure test suites for the averaged Euler solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of a config and write manifest.json, results.csv and timing.json.
    Run {
        /// Experiment config (TOML); LAELAB_* environment variables override its keys.
        #[arg(long)]
        config: PathBuf,
        /// Suite name or `all`; overrides the config.
        #[arg(long)]
        suite: Option<String>,
        /// Comma-separated square grid sizes; overrides the config.
        #[arg(long, value_delimiter = ',')]
        grid_ladder: Option<Vec<usize>>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the tests of each suite concurrently.
        #[arg(long)]
        parallel: bool,
    },
}

fn run(config: PathBuf, suite: Option<String>, grid_ladder: Option<Vec<usize>>, out: Option<PathBuf>, parallel: bool) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&config, std::env::vars())?;
    if let Some(s) = suite {
        cfg.suite = s;
    }
    if let Some(l) = grid_ladder {
        cfg.grid_ladder = Some(l);
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.parallel |= parallel;
    cfg.validate()?;
    let (manifest, timing) = suites::run(&cfg)?;
    manifest.write(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n").context("writing timing.json")?;
    for t in &manifest.tests {
        let status = if t.pass { "PASS" } else { "FAIL" };
        let detail = match (&t.error, t.order, t.value) {
            (Some(e), _, _) => format!("error: {e}"),
            (None, Some(p), _) => format!("order {p:.3}"),
            (None, None, Some(v)) => format!("value {v:.3e}"),
            (None, None, None) => String::new(),
        };
        println!("{status} {}/{} {detail}", t.suite, t.name);
    }
    Ok(manifest.all_passed())
}

fn main() -> ExitCode {
    let Command::Run { config, suite, grid_ladder, out, parallel } = Cli::parse().command;
    match run(config, suite, grid_ladder, out, parallel) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("laelab: {e:#}");
            ExitCode::from(2)
        }
    }
}
