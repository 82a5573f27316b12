//! Shared plumbing for the subcommands: the saved model bundle,
//! feature-list files, seeded sampling, and flag-to-spec translation.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use trustsense_core::dataset::{FeatureTable, ScalerParams};
use trustsense_core::mlp::{MlpModel, ModelSpec, Optimizer};
use trustsense_core::seeding::derive_seed;

/// Flag or value problems that should exit with the usage code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage_error(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

/// A trained network plus everything needed to score raw rows: the
/// column subset it consumes, the standardization fit on its training
/// rows, and those rows' subject ids (so later explanation runs can
/// prefer unseen records).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBundle {
    pub feature_names: Vec<String>,
    pub scaler: ScalerParams,
    pub model: MlpModel,
    pub train_subjects: Vec<i64>,
}

impl ModelBundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("bundle serializes");
        fs::write(path, json).with_context(|| format!("writing model bundle {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<ModelBundle> {
        let json = fs::read_to_string(path)
            .with_context(|| format!("reading model bundle {}", path.display()))?;
        serde_json::from_str(&json)
            .with_context(|| format!("parsing model bundle {}", path.display()))
    }
}

/// Read a feature list: one name per line, blank lines and `#` comments
/// skipped.
pub fn read_features_file(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading feature list {}", path.display()))?;
    let names: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_string)
        .collect();
    if names.is_empty() {
        bail!("feature list {} is empty", path.display());
    }
    Ok(names)
}

pub fn write_features_file(path: &Path, names: &[String]) -> Result<()> {
    let mut text = names.join("\n");
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing feature list {}", path.display()))
}

pub fn load_table(path: &Path) -> Result<FeatureTable> {
    trustsense_core::dataset::load_csv(path)
        .with_context(|| format!("loading dataset {}", path.display()))
}

/// Architecture and hyperparameter flags shared by every command that
/// trains a network. Unset flags fall back to the stock defaults
/// (learning rate 0.01, dropout 0.2, batch 64, 130 epochs).
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Architecture: 1 = two hidden layers (rmsprop), 2 = four hidden
    /// layers with dropout (adam).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub model: u8,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Dropout rate for architectures that have dropout layers.
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// adam or rmsprop.
    #[arg(long, value_parser = parse_optimizer)]
    pub optimizer: Option<Optimizer>,
}

fn parse_optimizer(s: &str) -> std::result::Result<Optimizer, String> {
    s.parse().map_err(|e| format!("{e}"))
}

impl ModelArgs {
    /// Build the network spec for `input_width` columns, seeded by the
    /// run seed.
    pub fn spec(&self, input_width: usize, seed: u64) -> Result<ModelSpec> {
        let mut spec = match self.model {
            1 => ModelSpec::model1(input_width, seed),
            _ => ModelSpec::model2(input_width, seed),
        };
        if let Some(rate) = self.dropout {
            if !(0.0..1.0).contains(&rate) {
                return Err(usage_error(format!("--dropout must be in [0, 1), got {rate}")));
            }
            spec = spec.with_dropout_rate(rate);
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0) {
                return Err(usage_error(format!(
                    "--learning-rate must be positive, got {lr}"
                )));
            }
            spec.learning_rate = lr;
        }
        if let Some(batch) = self.batch_size {
            if batch == 0 {
                return Err(usage_error("--batch-size must be at least 1"));
            }
            spec.batch_size = batch;
        }
        if let Some(epochs) = self.epochs {
            if epochs == 0 {
                return Err(usage_error("--epochs must be at least 1"));
            }
            spec.epochs = epochs;
        }
        if let Some(optimizer) = self.optimizer {
            spec.optimizer = optimizer;
        }
        Ok(spec)
    }
}

/// Seeded sample of `count` distinct row indices: rows are ordered by a
/// per-index hash of the seed and the first `count` taken.
pub fn sample_rows(n_rows: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n_rows).collect();
    indices.sort_by_key(|&i| derive_seed(seed, i as u64));
    indices.truncate(count.min(n_rows));
    indices.sort_unstable(); // keep table order for the subset
    indices
}
