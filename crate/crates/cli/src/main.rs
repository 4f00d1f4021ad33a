//! `boundkit` command-line front-end.
//!
//! Exit codes: 0 success, 1 configuration, validation or `--check` failure,
//! 2 I/O failure.

mod commands;
mod config;
mod registry;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{GlobalFlags, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Check(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<boundkit::Error> for CliError {
    fn from(e: boundkit::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "boundkit",
    version,
    about = "Decision-boundary instability analyses"
)]
struct Cli {
    /// Key=value config file with [section] headers.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for every random stream (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads: a positive count or `auto`.
    #[arg(long, global = true)]
    threads: Option<String>,
    /// Verify the documented monotonicity properties; exit 1 on violation.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Label map, instability map and box-counting record of a 2-D classifier.
    Raster(Overrides),
    /// Log orbit-volume bound curve, or `mitigation` for the resolution curve.
    Bound(Overrides),
    /// Monte Carlo unstable fraction with a Wilson interval.
    Stability(Overrides),
    /// Usefulness and robust usefulness of features on a labelled dataset.
    Usefulness(Overrides),
    /// Invariance violations under grid translations and point operations.
    Symmetry(Overrides),
    /// Query-budgeted boundary attack sweep and trace.
    Attack(Overrides),
}

#[derive(Debug, clap::Args)]
struct Overrides {
    /// Parameter overrides as key=value.
    params: Vec<String>,
}

impl Command {
    fn split(self) -> (&'static str, Vec<String>) {
        match self {
            Command::Raster(o) => ("raster", o.params),
            Command::Bound(o) => ("bound", o.params),
            Command::Stability(o) => ("stability", o.params),
            Command::Usefulness(o) => ("usefulness", o.params),
            Command::Symmetry(o) => ("symmetry", o.params),
            Command::Attack(o) => ("attack", o.params),
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (name, overrides) = cli.command.split();
    let flags = GlobalFlags {
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out,
        check: cli.check,
    };
    let cfg = RunConfig::resolve(name, flags, cli.config.as_deref(), &overrides)?;
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cfg.out.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.pool_size())
        .build()
        .map_err(|e| CliError::config(format!("invalid value for 'threads': {e}")))?;
    let outcome = pool.install(|| commands::run(&cfg))?;

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = json!({
        "command": cfg.command,
        "config": {
            "seed": cfg.seed,
            "threads": cfg.threads.to_string(),
            "out": cfg.out.display().to_string(),
            "check": cfg.check,
            "params": cfg.params(),
        },
        "outputs": outcome.outputs,
        "results": outcome.results,
        "failed_checks": outcome.failed_checks,
        "timestamp": timestamp,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = cfg.out.join("manifest.json");
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;

    if cfg.check && !outcome.failed_checks.is_empty() {
        return Err(CliError::Check(outcome.failed_checks.join(", ")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("boundkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
