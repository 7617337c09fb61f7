// SPDX-License-Identifier: Apache-2.0

//! `ouqsd`: quasi-stationary laws of the killed Ornstein-Uhlenbeck process.
//!
//! Every subcommand accepts `--config FILE` (flat JSON with the long flag
//! names, `-` replaced by `_`) and writes CSV tables. Exit status is 0 on
//! success, 1 on a failed verification or numerical failure, 2 on a usage
//! or configuration error. `OUQSD_THREADS` caps the worker count; results
//! do not depend on it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod csv;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::DecaySource;
use config::{CommonArgs, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ouqsd_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use ouqsd_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::Config(_) | E::Domain(_) | E::Range { .. }) => {
                2
            }
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ouqsd",
    version,
    about = "Quasi-stationary laws of the OU process killed at zero"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the density and CDF of the QSD with rate lambda.
    Qsd {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid step in y
        #[arg(long, default_value_t = 0.01)]
        du: f64,
        /// Output CSV [default: <out-dir>/qsd.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo survival curve against the quadrature oracle.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Output CSV [default: <out-dir>/survival.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conditioned laws per checkpoint: ECDF, oracle density, QSD density.
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid step in y
        #[arg(long, default_value_t = 0.05)]
        du: f64,
        /// Output CSV [default: <out-dir>/conditional.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fitted exponential decay rate of the survival probability.
    Decay {
        #[command(flatten)]
        common: CommonArgs,
        /// Survival curve to fit
        #[arg(long, value_enum, default_value_t = DecaySource::Oracle)]
        source: DecaySource,
        /// Output CSV [default: <out-dir>/decay.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite; exit 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Relative tolerance of the eigen-relation check
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("OUQSD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "OUQSD_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Qsd { common, du, out } => {
            let cfg = RunConfig::resolve(&common)?;
            commands::qsd(&cfg, du, &cfg.output(out.as_deref(), "qsd.csv"))?;
        }
        Command::Simulate { common, out } => {
            let cfg = RunConfig::resolve(&common)?;
            commands::simulate(&cfg, &cfg.output(out.as_deref(), "survival.csv"))?;
        }
        Command::Converge { common, du, out } => {
            let cfg = RunConfig::resolve(&common)?;
            commands::converge(&cfg, du, &cfg.output(out.as_deref(), "conditional.csv"))?;
        }
        Command::Decay {
            common,
            source,
            out,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            commands::decay(&cfg, source, &cfg.output(out.as_deref(), "decay.csv"))?;
        }
        Command::Verify { common, tol } => {
            let cfg = RunConfig::resolve(&common)?;
            if !(tol > 0.0) {
                return Err(CliError::Config(format!("tol must be positive, got {tol}")));
            }
            let checks = verify::run_all(tol, cfg.quad_tol)?;
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
