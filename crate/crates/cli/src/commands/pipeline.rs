//! `trustsense pipeline` — the whole flow in one invocation.
//!
//! Synthesizes a dataset, splits it by subject, trains a network,
//! ranks features, evaluates (k-fold on everything, holdout on the
//! largest merged feature list) and explains one held-out record.
//! Every stage seed derives from `--seed`, so two runs into two
//! directories produce byte-identical artifacts.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use trustsense_core::dataset::write_csv;
use trustsense_core::eval::{ReportFormat, ScalingMode};
use trustsense_core::seeding::derive_seed;

use super::evaluate::{split_tables, EvaluateArgs, ReportModeArg};
use super::explain::ExplainArgs;
use super::select::SelectArgs;
use super::synth::SynthArgs;
use super::train::TrainArgs;
use super::{evaluate, explain, select, synth, train};
use crate::common::{load_table, usage_error, ModelArgs};

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Directory that receives every artifact (created if missing).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Synthetic records per class.
    #[arg(long, default_value_t = 150, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_per_class: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Features the elimination keeps.
    #[arg(long, default_value_t = 12)]
    pub n_features: usize,
    /// Features dropped per elimination round.
    #[arg(long, default_value_t = 4)]
    pub step: usize,
    /// Combination sizes to emit.
    #[arg(long, value_delimiter = ',', default_values_t = vec![4, 10, 12])]
    pub sizes: Vec<usize>,
    /// Records sampled for the influence ranking.
    #[arg(long, default_value_t = 25)]
    pub lime_records: usize,
    /// Perturbations per explained record.
    #[arg(long, default_value_t = 500)]
    pub lime_samples: usize,
    /// Features kept per explanation.
    #[arg(long, default_value_t = 10)]
    pub lime_k: usize,
    /// Fraction of subjects used for training.
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
}

pub fn run(args: &PipelineArgs) -> Result<()> {
    let out = &args.output;
    fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let largest = args
        .sizes
        .iter()
        .max()
        .copied()
        .ok_or_else(|| usage_error("--sizes must name at least one combination size"))?;

    let dataset_csv = out.join("dataset.csv");
    println!("[1/6] synthesize -> {}", dataset_csv.display());
    synth::run(&SynthArgs {
        output: dataset_csv.clone(),
        n_per_class: args.n_per_class,
        seed: args.seed,
        config: None,
    })?;

    let train_csv = out.join("train.csv");
    let validation_csv = out.join("validation.csv");
    println!(
        "[2/6] split by subject -> {}, {}",
        train_csv.display(),
        validation_csv.display()
    );
    let table = load_table(&dataset_csv)?;
    let (train_table, validation_table) =
        split_tables(&table, args.train_fraction, derive_seed(args.seed, 1))?;
    write_csv(&train_table, &train_csv).context("writing training split")?;
    write_csv(&validation_table, &validation_csv).context("writing validation split")?;
    println!(
        "  {} training records, {} validation records",
        train_table.n_rows(),
        validation_table.n_rows()
    );

    let model_json = out.join("model.json");
    println!("[3/6] train -> {}", model_json.display());
    train::run(&TrainArgs {
        input: train_csv.clone(),
        output: model_json.clone(),
        seed: derive_seed(args.seed, 2),
        model: args.model.clone(),
        features_file: None,
        balance: true,
    })?;

    let select_dir = out.join("select");
    println!("[4/6] select -> {}", select_dir.display());
    select::run(&SelectArgs {
        input: train_csv.clone(),
        output: select_dir.clone(),
        seed: derive_seed(args.seed, 3),
        n_features: args.n_features,
        step: args.step,
        sweep: None,
        sizes: args.sizes.clone(),
        model: args.model.clone(),
        lime_records: args.lime_records,
        lime_samples: args.lime_samples,
        lime_k: args.lime_k,
        k: args.k,
        balance: false,
    })?;

    println!("[5/6] evaluate");
    for (format, name) in [(ReportFormat::Text, "report.txt"), (ReportFormat::Json, "report.json")]
    {
        evaluate::run(&EvaluateArgs {
            input: dataset_csv.clone(),
            output: Some(out.join(name)),
            seed: derive_seed(args.seed, 4),
            model: args.model.clone(),
            k: args.k,
            format: ReportModeArg(format),
            features_file: None,
            scaling: ScalingMode::PerFold,
            balance: false,
            holdout: false,
            train_fraction: args.train_fraction,
        })?;
    }
    let holdout_list = select_dir.join(format!("combination_{largest}.txt"));
    evaluate::run(&EvaluateArgs {
        input: dataset_csv.clone(),
        output: Some(out.join("holdout_report.txt")),
        seed: derive_seed(args.seed, 5),
        model: args.model.clone(),
        k: args.k,
        format: ReportModeArg(ReportFormat::Text),
        features_file: Some(holdout_list),
        scaling: ScalingMode::PerFold,
        balance: false,
        holdout: true,
        train_fraction: args.train_fraction,
    })?;

    println!("[6/6] explain");
    for (format, name) in [
        (ReportFormat::Text, "explanation.txt"),
        (ReportFormat::Json, "explanation.json"),
    ] {
        explain::run(&ExplainArgs {
            input: validation_csv.clone(),
            model_file: Some(model_json.clone()),
            output: Some(out.join(name)),
            seed: derive_seed(args.seed, 6),
            model: args.model.clone(),
            record_index: None,
            lime_k: args.lime_k,
            lime_samples: args.lime_samples,
            kernel_width: None,
            format: ReportModeArg(format),
            features_file: None,
            train_fraction: args.train_fraction,
        })?;
    }
    println!("pipeline complete: artifacts in {}", out.display());
    Ok(())
}
