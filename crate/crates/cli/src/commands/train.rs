//! `trustsense train` — fit a network on a CSV and save the bundle.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use trustsense_core::dataset::{balance_downsample, standardize_apply, standardize_fit};
use trustsense_core::mlp::MlpModel;

use crate::common::{load_table, read_features_file, ModelArgs, ModelBundle};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Destination for the model bundle (JSON).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Restrict training to the features listed in this file.
    #[arg(long)]
    pub features_file: Option<PathBuf>,
    /// Downsample the majority class before training.
    #[arg(long)]
    pub balance: bool,
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let mut table = load_table(&args.input)?;
    if args.balance {
        table = balance_downsample(&table, args.seed).context("balancing classes")?;
    }
    if let Some(path) = &args.features_file {
        let names = read_features_file(path)?;
        table = table
            .select_features(&names)
            .with_context(|| format!("applying feature list {}", path.display()))?;
    }
    let scaler = standardize_fit(&table);
    let scaled = standardize_apply(&scaler, &table).context("standardizing features")?;

    let spec = args.model.spec(scaled.n_features(), args.seed)?;
    let mut model = MlpModel::build(spec).context("building network")?;
    let report = model
        .train(scaled.data.view(), &scaled.labels)
        .context("training network")?;
    println!(
        "trained on {} records x {} features: {} epochs, final loss {:.6}, \
         training accuracy {:.2}% ({:.1}s)",
        scaled.n_rows(),
        scaled.n_features(),
        report.epoch_losses.len(),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN),
        report.final_accuracy * 100.0,
        report.wall_time_s,
    );

    let bundle = ModelBundle {
        feature_names: scaled.column_names.clone(),
        scaler,
        model,
        train_subjects: scaled.unique_subjects(),
    };
    bundle.save(&args.output)?;
    println!("saved model bundle to {}", args.output.display());
    Ok(())
}
