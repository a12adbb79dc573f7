//! `specmhd`: simulations, estimate probes, the counterexample scan and the
//! cutoff convergence experiment.
//!
//! Exit codes: 0 success, 1 configuration error or failed check, 2 run
//! stopped by the blow-up monitor.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "specmhd", version, about = "Fourier-Galerkin MHD laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "specmhd-out")]
    pub out: PathBuf,
    /// Seed for randomized inputs (overrides the config's; default 7).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suite for `verify`.
    #[arg(long, global = true, value_enum)]
    pub suite: Option<Suite>,
    /// Only report errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Run the truncated MHD system or the reduced Stokes model.
    Simulate,
    /// Run one randomized verification suite.
    Verify,
    /// Scan the continuum counterexample over truncation radii.
    Counterexample,
    /// Compare runs at increasing cutoffs.
    Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Suite {
    Commutator,
    KatoPonce,
    GradientEstimate,
    Lemmas,
    Mollifier,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Commutator => "commutator",
            Suite::KatoPonce => "kato_ponce",
            Suite::GradientEstimate => "gradient_estimate",
            Suite::Lemmas => "lemmas",
            Suite::Mollifier => "mollifier",
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SPECMHD_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("SPECMHD_THREADS={v:?} is not a count"))?;
        if n == 0 {
            anyhow::bail!("SPECMHD_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Simulate => commands::simulate(&cli),
        Command::Verify => commands::verify(&cli),
        Command::Counterexample => commands::counterexample(&cli),
        Command::Convergence => commands::convergence(&cli),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
