//! Command-line experiments around the `ttcross` library.

pub mod commands;
pub mod config;
pub mod record;
pub mod report;

use clap::{Parser, Subcommand};

use crate::config::{ExperimentArgs, ExperimentConfig, ExperimentKind};

#[derive(Debug, Parser)]
#[command(name = "ttcross", version, about = "Tensor-train cross interpolation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interpolate one oracle and report ranks, errors and cost.
    Interpolate(ExperimentArgs),
    /// Repeat noisy-TT trials and summarize the quasioptimality ratio.
    Quasiopt(ExperimentArgs),
    /// Interpolate every (d, n, r) of a grid.
    Table(ExperimentArgs),
    /// Recover a random exact TT and check it.
    Recover(ExperimentArgs),
}

impl Command {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Command::Interpolate(_) => ExperimentKind::Interpolate,
            Command::Quasiopt(_) => ExperimentKind::Quasiopt,
            Command::Table(_) => ExperimentKind::Table,
            Command::Recover(_) => ExperimentKind::Recover,
        }
    }

    pub fn args(&self) -> &ExperimentArgs {
        match self {
            Command::Interpolate(a) | Command::Quasiopt(a) | Command::Table(a) | Command::Recover(a) => a,
        }
    }
}

/// Whether every run of the experiment succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub success: bool,
}

/// Resolves the configuration, runs the experiment and writes its output.
pub fn run(command: &Command) -> anyhow::Result<Outcome> {
    let cfg = ExperimentConfig::resolve(command.kind(), command.args())?;
    let success = match cfg.kind {
        ExperimentKind::Interpolate | ExperimentKind::Recover => {
            let run = if cfg.kind == ExperimentKind::Recover {
                commands::cmd_recover(&cfg)?
            } else {
                commands::cmd_interpolate(&cfg)?
            };
            report::emit(&cfg, &report::render_runs(&cfg, std::slice::from_ref(&run.record))?)?;
            run.record.success
        }
        ExperimentKind::Table => {
            let records = commands::cmd_table(&cfg);
            report::emit(&cfg, &report::render_runs(&cfg, &records)?)?;
            records.iter().all(|r| r.success)
        }
        ExperimentKind::Quasiopt => {
            let rep = commands::cmd_quasiopt(&cfg)?;
            report::emit(&cfg, &report::render_quasiopt(&cfg, &rep)?)?;
            rep.summary.bound_violations == 0
        }
    };
    Ok(Outcome { success })
}
