//! `trustsense select` — rank features two ways and write merged lists.
//!
//! Produces, inside the output directory:
//!
//! - `rfe.json` — per-feature elimination rank and selection flag;
//! - `selected.txt` — the surviving features, one per line;
//! - `influence.json` — the aggregated local-explanation ranking;
//! - `combination_<size>.txt` — one merged list per requested size;
//! - `sweep.csv` — cross-validated accuracy per subset size (with `--sweep`).

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use trustsense_core::dataset::{balance_downsample, standardize_apply, standardize_fit};
use trustsense_core::eval::{kfold_evaluate, ScalingMode};
use trustsense_core::lime::{aggregate_influence, combine_lists};
use trustsense_core::mlp::MlpModel;
use trustsense_core::rfe::{rfe_select, rfe_sweep};

use crate::common::{load_table, sample_rows, usage_error, write_features_file, ModelArgs};

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory that receives the artifacts (created if missing).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Features the elimination keeps.
    #[arg(long, default_value_t = 12)]
    pub n_features: usize,
    /// Features dropped per elimination round.
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    /// Also score every subset size in an inclusive range, e.g. 4..24.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Combination sizes to emit.
    #[arg(long, value_delimiter = ',', default_values_t = vec![4, 10, 12])]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Records sampled for the influence ranking.
    #[arg(long, default_value_t = 100)]
    pub lime_records: usize,
    /// Perturbations per explained record.
    #[arg(long, default_value_t = 1000)]
    pub lime_samples: usize,
    /// Features kept per local explanation.
    #[arg(long, default_value_t = 10)]
    pub lime_k: usize,
    /// Folds used by the sweep's cross-validated scores.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Downsample the majority class first.
    #[arg(long)]
    pub balance: bool,
}

pub fn run(args: &SelectArgs) -> Result<()> {
    fs::create_dir_all(&args.output)
        .with_context(|| format!("creating output directory {}", args.output.display()))?;
    let mut table = load_table(&args.input)?;
    if args.balance {
        table = balance_downsample(&table, args.seed).context("balancing classes")?;
    }
    let scaler = standardize_fit(&table);
    let scaled = standardize_apply(&scaler, &table).context("standardizing features")?;
    // Validate the model flags up front so bad values exit as usage
    // errors before any long-running stage starts.
    let spec = args.model.spec(scaled.n_features(), args.seed)?;

    let rfe = rfe_select(&scaled, args.n_features, args.step, args.seed)
        .context("recursive feature elimination")?;
    let rfe_path = args.output.join("rfe.json");
    let rfe_json = serde_json::to_string_pretty(&rfe.to_json()).expect("ranking serializes");
    fs::write(&rfe_path, rfe_json)
        .with_context(|| format!("writing ranking {}", rfe_path.display()))?;
    let selected_path = args.output.join("selected.txt");
    write_features_file(&selected_path, &rfe.selected_features())?;
    println!(
        "elimination kept {} of {} features -> {}, {}",
        args.n_features,
        scaled.n_features(),
        rfe_path.display(),
        selected_path.display()
    );

    if let Some(range_text) = &args.sweep {
        let range = parse_sweep(range_text)?;
        let spec_template = args.model.clone();
        let (k, seed) = (args.k, args.seed);
        let scores = rfe_sweep(&scaled, range, args.step, args.seed, |subset| {
            let spec = spec_template
                .spec(subset.n_features(), seed)
                .map_err(|e| trustsense_core::Error::Parameter(format!("{e:#}")))?;
            let summary = kfold_evaluate(subset, &spec, None, k, seed, ScalingMode::PerFold)?;
            Ok(summary.aggregates.accuracy.mean)
        })
        .context("sweeping subset sizes")?;
        let mut csv = String::from("n_features,mean_accuracy\n");
        for (size, score) in &scores {
            csv.push_str(&format!("{size},{score:.2}\n"));
        }
        let sweep_path = args.output.join("sweep.csv");
        fs::write(&sweep_path, csv)
            .with_context(|| format!("writing sweep {}", sweep_path.display()))?;
        println!("swept {} subset sizes -> {}", scores.len(), sweep_path.display());
    }

    // The influence ranking needs a trained model to probe.
    let mut model = MlpModel::build(spec).context("building network")?;
    model
        .train(scaled.data.view(), &scaled.labels)
        .context("training network for explanations")?;
    let rows = sample_rows(scaled.n_rows(), args.lime_records, args.seed);
    let sampled = scaled.subset_rows(&rows).context("sampling records")?;
    let influence = aggregate_influence(&model, &sampled, args.lime_k, args.lime_samples, args.seed)
        .context("aggregating local explanations")?;
    let influence_path = args.output.join("influence.json");
    let influence_json = serde_json::to_string_pretty(&influence).expect("ranking serializes");
    fs::write(&influence_path, influence_json)
        .with_context(|| format!("writing influence ranking {}", influence_path.display()))?;
    println!(
        "explained {} records -> {}",
        influence.records_examined,
        influence_path.display()
    );

    let combinations =
        combine_lists(&influence, &rfe, &args.sizes).context("merging the two rankings")?;
    for combination in &combinations {
        let path = args
            .output
            .join(format!("combination_{}.txt", combination.size));
        write_features_file(&path, &combination.features)?;
        println!(
            "combination of {} features -> {}",
            combination.size,
            path.display()
        );
    }
    Ok(())
}

/// Parse an inclusive size range written `A..B` or `A..=B`.
fn parse_sweep(text: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let (start, end) = text
        .split_once("..")
        .ok_or_else(|| usage_error(format!("--sweep expects A..B, got {text:?}")))?;
    let end = end.strip_prefix('=').unwrap_or(end);
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| usage_error(format!("--sweep bound {s:?} is not a count")))
    };
    Ok(parse(start)?..=parse(end)?)
}
