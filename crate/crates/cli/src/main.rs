//! Command-line front end: `detect`, `repair`, `stress` and `timeseries`.
//!
//! Exit codes: 0 clean or success, 1 operational error, 2 arbitrage found
//! (`detect` only).

mod commands;
mod snapshot;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use arbrepair::constraints::DEFAULT_DETECT_TOL;
use arbrepair::repair::Objective;
use arbrepair::stress::{BandPolicy, NoiseSpec};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::commands::{RepairArgs, StressArgs};

#[derive(Parser)]
#[command(
    name = "arbrepair",
    version,
    about = "Detect and repair static arbitrage in call option quotes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    L1,
    L1ba,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::L1 => Objective::L1,
            ObjectiveArg::L1ba => Objective::L1ba,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BandsArg {
    Keep,
    ScaleWithNoise,
}

impl From<BandsArg> for BandPolicy {
    fn from(b: BandsArg) -> Self {
        match b {
            BandsArg::Keep => BandPolicy::Keep,
            BandsArg::ScaleWithNoise => BandPolicy::ScaleWithNoise,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Count violated no-arbitrage constraints in a snapshot.
    Detect {
        snapshot: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DETECT_TOL)]
        tol: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Repair a snapshot and write the repaired CSV.
    Repair {
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value = "l1ba")]
        objective: ObjectiveArg,
        #[arg(long)]
        out: PathBuf,
        /// Write the JSON summary here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Accept missing bid/ask with l1ba by using the minimal spread.
        #[arg(long)]
        allow_spread_floor: bool,
    },
    /// Pollute an arbitrage-free snapshot with noise and measure recovery.
    Stress {
        snapshot: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "l1")]
        objective: ObjectiveArg,
        #[arg(long, value_enum, default_value = "keep")]
        bands: BandsArg,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        allow_spread_floor: bool,
    },
    /// Repair every snapshot in a directory and tabulate perturbation counts.
    Timeseries {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "l1ba")]
        objective: ObjectiveArg,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        allow_spread_floor: bool,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Detect {
            snapshot,
            tol,
            report,
        } => {
            let r = commands::detect(&snapshot, tol)?;
            emit_json(&r, report.as_deref())?;
            Ok(if r.total == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Repair {
            snapshot,
            objective,
            out,
            report,
            allow_spread_floor,
        } => {
            let summary = commands::repair_snapshot(&RepairArgs {
                snapshot: &snapshot,
                out: &out,
                objective: objective.into(),
                allow_spread_floor,
            })?;
            emit_json(&summary, report.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stress {
            snapshot,
            lambda,
            sigma,
            trials,
            seed,
            objective,
            bands,
            report,
            allow_spread_floor,
        } => {
            let out = commands::stress(&StressArgs {
                snapshot: &snapshot,
                spec: NoiseSpec {
                    lambda,
                    sigma,
                    seed,
                    trials,
                },
                objective: objective.into(),
                bands: bands.into(),
                allow_spread_floor,
            })?;
            emit_json(&out, report.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Timeseries {
            dir,
            objective,
            out,
            jobs,
            allow_spread_floor,
        } => {
            let rows = commands::timeseries(&dir, objective.into(), allow_spread_floor, jobs)?;
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            w.write_record([
                "snapshot",
                "n_perturbed",
                "n_effective",
                "portfolios",
                "error",
            ])?;
            let num = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_default();
            for r in rows {
                w.write_record([
                    r.snapshot,
                    num(r.n_perturbed),
                    num(r.n_effective),
                    num(r.portfolios),
                    r.error.unwrap_or_default(),
                ])?;
            }
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_valid() {
        Cli::command().debug_assert();
    }
}
