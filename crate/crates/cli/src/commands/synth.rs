//! `trustsense synth` — write a balanced synthetic feature dataset.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use trustsense_core::dataset::{write_csv, FeatureTable};
use trustsense_core::signal::{synth_corpus, SynthSpec};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Destination CSV (feature columns, then label and subject).
    #[arg(long)]
    pub output: PathBuf,
    /// Records generated per class.
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_per_class: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Optional TOML file overriding generation parameters
    /// (sampling_rate, duration_s, subjects, class profiles).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let spec = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading generator config {}", path.display()))?;
            toml::from_str::<SynthSpec>(&text)
                .with_context(|| format!("parsing generator config {}", path.display()))?
        }
        None => SynthSpec::default(),
    };
    let vectors = synth_corpus(&spec, args.n_per_class as usize, args.seed)
        .context("generating synthetic recordings")?;
    let table = FeatureTable::from_vectors(&vectors).context("assembling feature table")?;
    write_csv(&table, &args.output)
        .with_context(|| format!("writing dataset {}", args.output.display()))?;
    let (zeros, ones) = table.class_counts();
    println!(
        "wrote {} records ({} distrust, {} trust, {} features, {} subjects) to {}",
        table.n_rows(),
        zeros,
        ones,
        table.n_features(),
        table.unique_subjects().len(),
        args.output.display()
    );
    Ok(())
}
