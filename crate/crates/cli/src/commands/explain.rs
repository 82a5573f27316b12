//! `trustsense explain` — local explanation for one record.
//!
//! With `--model-file` the saved bundle supplies the network, its
//! feature subset and its scaler, and the record comes from subjects
//! the bundle never trained on. Without it, the command splits the
//! input by subject, trains a fresh network on the training side, and
//! explains a validation record. Model flags only matter in the second
//! case.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use trustsense_core::dataset::{standardize_apply, standardize_fit, FeatureTable, ScalerParams};
use trustsense_core::lime::{default_kernel_width, LimeExplainer, MIN_N_SAMPLES};
use trustsense_core::mlp::MlpModel;
use trustsense_core::seeding::derive_seed;

use super::evaluate::{parse_format, split_tables, ReportModeArg};
use crate::common::{load_table, read_features_file, usage_error, ModelArgs, ModelBundle};
use trustsense_core::eval::ReportFormat;

/// Seed stream for picking a record when none is requested.
const RECORD_PICK_STREAM: u64 = 97;

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Dataset CSV holding the records to explain.
    #[arg(long)]
    pub input: PathBuf,
    /// Saved model bundle; omit to train on the spot.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Optional file that also receives the rendered explanation.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Record to explain, indexed into the explanation pool; defaults
    /// to a seeded pick.
    #[arg(long)]
    pub record_index: Option<usize>,
    /// Features kept in the explanation.
    #[arg(long, default_value_t = 10)]
    pub lime_k: usize,
    /// Perturbations drawn around the record.
    #[arg(long, default_value_t = 5000)]
    pub lime_samples: usize,
    /// Locality kernel width; defaults to 0.75 * sqrt(n_features).
    #[arg(long)]
    pub kernel_width: Option<f64>,
    /// text or json.
    #[arg(long, default_value = "text", value_parser = parse_format)]
    pub format: ReportModeArg,
    /// Without a bundle: train on only the features listed here.
    #[arg(long)]
    pub features_file: Option<PathBuf>,
    /// Without a bundle: fraction of subjects used for training.
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
}

pub fn run(args: &ExplainArgs) -> Result<()> {
    if let Some(width) = args.kernel_width {
        if !(width > 0.0) {
            return Err(usage_error(format!(
                "--kernel-width must be positive, got {width}"
            )));
        }
    }
    if args.lime_samples < MIN_N_SAMPLES {
        return Err(usage_error(format!(
            "--lime-samples must be at least {MIN_N_SAMPLES}, got {}",
            args.lime_samples
        )));
    }
    let table = load_table(&args.input)?;
    let (model, stats, pool) = match &args.model_file {
        Some(path) => prepare_from_bundle(args, &table, path)?,
        None => prepare_by_training(args, &table)?,
    };
    if args.lime_k > pool.n_features() {
        return Err(usage_error(format!(
            "--lime-k {} exceeds the {} available features",
            args.lime_k,
            pool.n_features()
        )));
    }

    let index = match args.record_index {
        Some(i) if i < pool.n_rows() => i,
        Some(i) => {
            return Err(usage_error(format!(
                "--record-index {i} out of range: the explanation pool has {} records",
                pool.n_rows()
            )))
        }
        None => (derive_seed(args.seed, RECORD_PICK_STREAM) as usize) % pool.n_rows(),
    };
    println!(
        "explaining record {index} of {} (subject {}, label {})",
        pool.n_rows(),
        pool.subjects[index],
        pool.labels[index]
    );

    let width = args
        .kernel_width
        .unwrap_or_else(|| default_kernel_width(pool.n_features()));
    let explainer = LimeExplainer::new(
        pool.column_names.clone(),
        stats,
        width,
        args.lime_samples,
    )
    .context("configuring the explainer")?;
    let x: Vec<f64> = pool.data.row(index).to_vec();
    let explanation = explainer
        .explain(&model, &x, args.lime_k, derive_seed(args.seed, index as u64))
        .context("explaining the record")?;

    let report = match args.format.0 {
        ReportFormat::Text => explanation.render_text(),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&explanation).expect("serializes");
            s.push('\n');
            s
        }
    };
    print!("{report}");
    if let Some(path) = &args.output {
        fs::write(path, &report)
            .with_context(|| format!("writing explanation {}", path.display()))?;
        println!("wrote explanation to {}", path.display());
    }
    Ok(())
}

/// Score records against a saved bundle. The pool prefers subjects the
/// bundle never saw; when every subject was trained on, it falls back
/// to the whole table with a note.
fn prepare_from_bundle(
    args: &ExplainArgs,
    table: &FeatureTable,
    path: &PathBuf,
) -> Result<(MlpModel, ScalerParams, FeatureTable)> {
    if args.features_file.is_some() {
        return Err(usage_error(
            "--features-file conflicts with --model-file: the bundle already fixes its features",
        ));
    }
    let bundle = ModelBundle::load(path)?;
    let subset = table
        .select_features(&bundle.feature_names)
        .context("matching the bundle's features")?;
    let scaled = standardize_apply(&bundle.scaler, &subset)
        .context("standardizing with the bundle's scaler")?;
    let trained: std::collections::BTreeSet<i64> =
        bundle.train_subjects.iter().copied().collect();
    let unseen: Vec<usize> = (0..scaled.n_rows())
        .filter(|&r| !trained.contains(&scaled.subjects[r]))
        .collect();
    let pool = if unseen.is_empty() {
        eprintln!(
            "note: every subject in {} was trained on; explaining a training record",
            args.input.display()
        );
        scaled
    } else {
        scaled.subset_rows(&unseen).context("extracting unseen records")?
    };
    Ok((bundle.model, bundle.scaler, pool))
}

/// No bundle: split by subject, train on one side, explain the other.
fn prepare_by_training(
    args: &ExplainArgs,
    table: &FeatureTable,
) -> Result<(MlpModel, ScalerParams, FeatureTable)> {
    let (mut train, mut validation) = split_tables(table, args.train_fraction, args.seed)?;
    if let Some(path) = &args.features_file {
        let names = read_features_file(path)?;
        train = train
            .select_features(&names)
            .with_context(|| format!("applying feature list {}", path.display()))?;
        validation = validation
            .select_features(&names)
            .with_context(|| format!("applying feature list {}", path.display()))?;
    }
    let params = standardize_fit(&train);
    let train_scaled = standardize_apply(&params, &train).context("standardizing features")?;
    let validation_scaled =
        standardize_apply(&params, &validation).context("standardizing features")?;
    let spec = args.model.spec(train_scaled.n_features(), args.seed)?;
    let mut model = MlpModel::build(spec).context("building network")?;
    model
        .train(train_scaled.data.view(), &train_scaled.labels)
        .context("training network")?;
    Ok((model, params, validation_scaled))
}
