//! `trustsense evaluate` — k-fold or holdout scoring of a network.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use trustsense_core::dataset::{balance_downsample, subject_split, FeatureTable};
use trustsense_core::eval::{
    holdout_evaluate, kfold_evaluate, render_report, HoldoutOutcome, ReportFormat, ScalingMode,
};

use crate::common::{load_table, read_features_file, usage_error, ModelArgs};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Optional file that also receives the rendered report.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// text or json.
    #[arg(long, default_value = "text", value_parser = parse_format)]
    pub format: ReportModeArg,
    /// Evaluate only the features listed in this file.
    #[arg(long)]
    pub features_file: Option<PathBuf>,
    /// per-fold (refit the scaler inside each fold) or global.
    #[arg(long, default_value = "per-fold", value_parser = parse_scaling)]
    pub scaling: ScalingMode,
    /// Downsample the majority class first.
    #[arg(long)]
    pub balance: bool,
    /// Single subject-disjoint train/validation split instead of k-fold.
    #[arg(long)]
    pub holdout: bool,
    /// Fraction of subjects assigned to training under --holdout.
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
}

/// Wrapper so clap can carry the core report format as a flag value.
#[derive(Debug, Clone, Copy)]
pub struct ReportModeArg(pub ReportFormat);

pub(crate) fn parse_format(s: &str) -> std::result::Result<ReportModeArg, String> {
    s.parse().map(ReportModeArg).map_err(|e| format!("{e}"))
}

fn parse_scaling(s: &str) -> std::result::Result<ScalingMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    let mut table = load_table(&args.input)?;
    if args.balance {
        table = balance_downsample(&table, args.seed).context("balancing classes")?;
    }
    let subset = match &args.features_file {
        Some(path) => Some(read_features_file(path)?),
        None => None,
    };
    let spec_width = match &subset {
        Some(names) => names.len(),
        None => table.n_features(),
    };
    let spec = args.model.spec(spec_width, args.seed)?;

    let report = if args.holdout {
        let (train, validation) = split_tables(&table, args.train_fraction, args.seed)?;
        let outcome = holdout_evaluate(&train, &validation, &spec, subset.as_deref(), args.seed)
            .context("holdout evaluation")?;
        render_holdout(&outcome, args.format.0)
    } else {
        if args.k < 2 {
            return Err(usage_error(format!("--k must be at least 2, got {}", args.k)));
        }
        let summary = kfold_evaluate(
            &table,
            &spec,
            subset.as_deref(),
            args.k,
            args.seed,
            args.scaling,
        )
        .context("k-fold evaluation")?;
        render_report(&summary, args.format.0)
    };

    print!("{report}");
    if let Some(path) = &args.output {
        fs::write(path, &report).with_context(|| format!("writing report {}", path.display()))?;
        println!("wrote report to {}", path.display());
    }
    Ok(())
}

/// Split a table into subject-disjoint train and validation tables.
pub fn split_tables(
    table: &FeatureTable,
    train_fraction: f64,
    seed: u64,
) -> Result<(FeatureTable, FeatureTable)> {
    let plan = subject_split(table, train_fraction, seed).context("splitting by subject")?;
    let train = rows_for(table, &plan.train_subjects)?;
    let validation = rows_for(table, &plan.validation_subjects)?;
    Ok((train, validation))
}

fn rows_for(table: &FeatureTable, subjects: &BTreeSet<i64>) -> Result<FeatureTable> {
    let rows = table.rows_with_subjects(subjects);
    table.subset_rows(&rows).context("extracting split rows")
}

fn render_holdout(outcome: &HoldoutOutcome, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(outcome).expect("outcome serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let c = &outcome.confusion;
            let m = &outcome.metrics;
            format!(
                "validation records: {}\n\
                 confusion: tp={} fp={} fn={} tn={}\n\
                 accuracy {:.2}%  f1 {:.2}%  recall {:.2}%  precision {:.2}%\n",
                c.total(),
                c.true_positives,
                c.false_positives,
                c.false_negatives,
                c.true_negatives,
                m.accuracy * 100.0,
                m.f1 * 100.0,
                m.recall * 100.0,
                m.precision * 100.0,
            )
        }
    }
}
