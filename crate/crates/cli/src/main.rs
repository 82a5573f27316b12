//! `trustsense` — command-line front end for the trust-sensor pipeline.
//!
//! Subcommands cover the whole flow: `synth` writes a labeled feature
//! dataset, `train` fits a network and saves it with its scaler,
//! `select` ranks features two ways and emits combination lists,
//! `evaluate` reports cross-validated or holdout metrics, `explain`
//! interprets a single prediction, and `pipeline` chains all of the
//! above into one output directory.
//!
//! Exit codes: 0 success, 2 usage error (bad flags or values), 1
//! runtime or data error. Every run is deterministic given `--seed`.

mod commands;
mod common;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use common::UsageError;

#[derive(Parser)]
#[command(name = "trustsense", version, about = "Trust-sensor pipeline: synthesize, train, select, evaluate, explain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled feature dataset as CSV.
    Synth(commands::synth::SynthArgs),
    /// Train a network and save it, with its scaler, as a model bundle.
    Train(commands::train::TrainArgs),
    /// Report cross-validated (or holdout) metrics.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Rank features by elimination and aggregated explanations.
    Select(commands::select::SelectArgs),
    /// Explain one record's prediction with a local surrogate.
    Explain(commands::explain::ExplainArgs),
    /// Run synth → train → select → evaluate → explain into a directory.
    Pipeline(commands::pipeline::PipelineArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => commands::synth::run(&args),
        Command::Train(args) => commands::train::run(&args),
        Command::Evaluate(args) => commands::evaluate::run(&args),
        Command::Select(args) => commands::select::run(&args),
        Command::Explain(args) => commands::explain::run(&args),
        Command::Pipeline(args) => commands::pipeline::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            if error.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
