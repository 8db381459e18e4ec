//! `grm`: reproducible generalized-Rabi experiments written as CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::Overrides;
use output::Manifest;

#[derive(Debug, Parser)]
#[command(name = "grm", version, about = "Generalized Rabi model: multiphoton resonances and junction dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Common {
    /// TOML file with run keys (overridden by flags).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    keys: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Perturbative vs numerical resonance along one coupling axis.
    ScanResonance(Common),
    /// Percentage errors of the closed forms over a (lambda, kappa) grid.
    ErrorGrid(Common),
    /// Three-site junction trajectory from |g,n0+n>|g,0>|g,0>.
    EvolveJunction(Common),
    /// Third-order path sums against the closed-form couplings.
    PathSum(Common),
    /// Single-site spectrum and bare-pair weights along omega_c.
    Spectrum(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ScanResonance(_) => "scan-resonance",
            Command::ErrorGrid(_) => "error-grid",
            Command::EvolveJunction(_) => "evolve-junction",
            Command::PathSum(_) => "path-sum",
            Command::Spectrum(_) => "spectrum",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::ScanResonance(c)
            | Command::ErrorGrid(c)
            | Command::EvolveJunction(c)
            | Command::PathSum(c)
            | Command::Spectrum(c) => c,
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let name = cli.command.name();
    let common = cli.command.common();
    let keys = Overrides::resolve(name, common.config.as_deref(), &common.keys)?;
    let report = match cli.command {
        Command::ScanResonance(_) => commands::scan_resonance(&keys)?,
        Command::ErrorGrid(_) => commands::error_grid_cmd(&keys)?,
        Command::EvolveJunction(_) => commands::evolve_junction(&keys)?,
        Command::PathSum(_) => commands::path_sum(&keys)?,
        Command::Spectrum(_) => commands::spectrum(&keys)?,
    };
    let manifest = Manifest::new(name, &report.config, &report.derived);
    match &keys.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.table.write(&mut w, &manifest)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            report.table.write(&mut w, &manifest)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Stable error category for the machine-readable failure line.
fn error_kind(err: &anyhow::Error) -> &'static str {
    if err.downcast_ref::<grm_core::Error>().is_some() {
        "computation"
    } else if err.downcast_ref::<io::Error>().is_some() {
        "io"
    } else {
        "config"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let line = serde_json::json!({
                "error": error_kind(&err),
                "command": cli.command.name(),
                "message": format!("{err:#}"),
            });
            eprintln!("{line}");
            ExitCode::from(2)
        }
    }
}
