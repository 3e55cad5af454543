//! Orchestration for the `attraction` command: probe layers, score stimuli,
//! analyze records, export tables and draw figures.
//!
//! Exit codes: 0 success, 1 item failures or skipped analyses, 2 usage or
//! configuration error.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod analyze;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod probe;
pub mod score;

pub use config::{LayerChoice, RunArgs, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "attraction", version, about = "Agreement-attraction measures from language models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select the attention layer that best tracks subject-verb pairs.
    Probe(RunArgs),
    /// Compute surprisal and attention entropy for every stimulus.
    Score(RunArgs),
    /// Cell means, contrasts and bootstrap sign probabilities.
    Analyze(RecordArgs),
    /// Bar charts of cell means with SE bars (SVG and PNG).
    Plot(RecordArgs),
    /// Long-format tables for external mixed-model fitting.
    Export(RecordArgs),
}

#[derive(Debug, clap::Args)]
pub struct RecordArgs {
    /// Records CSV [default: <out>/records.csv].
    pub records: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Whether every item and analysis succeeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Partial,
}

impl Outcome {
    pub const fn exit_code(self) -> i32 {
        match self {
            Self::Complete => 0,
            Self::Partial => 1,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Probe(args) => {
            let config = RunConfig::resolve(args)?;
            let (report, path) = probe::cmd_probe(&config)?;
            let r = &report.result;
            println!(
                "{}: selected layer {} ({:.1}% of {} pairs, k={}); report {}",
                r.model_id,
                r.selected_layer,
                100.0 * r.accuracies[r.selected_layer],
                r.n_pairs,
                r.k,
                path.display()
            );
            Ok(Outcome::Complete)
        }
        Command::Score(args) => {
            let config = RunConfig::resolve(args)?;
            let outcome = score::cmd_score(&config)?;
            println!(
                "{} records, {} failures; written to {}",
                outcome.records.len(),
                outcome.failures.len(),
                outcome.path.display()
            );
            Ok(if outcome.failures.is_empty() { Outcome::Complete } else { Outcome::Partial })
        }
        Command::Analyze(args) => {
            let config = RunConfig::resolve(&args.run)?;
            let (summary, path) = analyze::cmd_analyze(&config, args.records.as_deref())?;
            println!("{} groups analyzed; summary {}", summary.groups.len(), path.display());
            Ok(if summary.has_skips() { Outcome::Partial } else { Outcome::Complete })
        }
        Command::Plot(args) => {
            let config = RunConfig::resolve(&args.run)?;
            for p in plot::cmd_plot(&config, args.records.as_deref())? {
                println!("{}", p.svg_path.display());
                println!("{}", p.png_path.display());
            }
            Ok(Outcome::Complete)
        }
        Command::Export(args) => {
            let config = RunConfig::resolve(&args.run)?;
            for p in analyze::cmd_export(&config, args.records.as_deref())? {
                println!("{}", p.display());
            }
            Ok(Outcome::Complete)
        }
    }
}
