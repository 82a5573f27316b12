//! Confusion-matrix metrics, k-fold cross validation, and aggregate
//! reporting.
//!
//! Class 1 is the positive class throughout. Fold evaluation refits the
//! standardization scaler on each fold's training rows by default so no
//! validation statistics leak into training; a fit-once mode that
//! standardizes the whole table up front is available for comparison.
//! Reports render as a four-by-four text table (Max/Mean/Min/SD ×
//! accuracy, F1, recall, precision, in percent) or as JSON.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    kfold_partition, standardize_apply, standardize_fit, FeatureTable,
};
use crate::error::{Error, Result};
use crate::mlp::{MlpModel, ModelSpec};
use crate::seeding::derive_seed;

/// Counts of the four prediction outcomes, positive class = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl ConfusionMatrix {
    pub fn from_pairs(predictions: &[u8], labels: &[u8]) -> Result<ConfusionMatrix> {
        if predictions.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} predictions for {} labels",
                predictions.len(),
                labels.len()
            )));
        }
        if predictions.iter().chain(labels).any(|v| *v > 1) {
            return Err(Error::Label("classes must be 0 or 1".into()));
        }
        let mut cm = ConfusionMatrix {
            true_positives: 0,
            false_positives: 0,
            false_negatives: 0,
            true_negatives: 0,
        };
        for (p, y) in predictions.iter().zip(labels) {
            match (p, y) {
                (1, 1) => cm.true_positives += 1,
                (1, 0) => cm.false_positives += 1,
                (0, 1) => cm.false_negatives += 1,
                _ => cm.true_negatives += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

/// The four headline numbers, as fractions in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Accuracy, precision, recall, and F1 from a confusion matrix.
///
/// Zero-denominator conventions: precision is 0 when nothing was
/// predicted positive, recall is 0 when nothing was positive, and F1 is
/// 0 when precision + recall is 0.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Evaluation("empty confusion matrix".into()));
    }
    let tp = cm.true_positives as f64;
    let accuracy = (tp + cm.true_negatives as f64) / total as f64;
    let predicted_positive = cm.true_positives + cm.false_positives;
    let precision = if predicted_positive == 0 {
        0.0
    } else {
        tp / predicted_positive as f64
    };
    let actual_positive = cm.true_positives + cm.false_negatives;
    let recall = if actual_positive == 0 {
        0.0
    } else {
        tp / actual_positive as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * ((precision * recall) / (precision + recall))
    };
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
    })
}

/// Anything that can be fit on labeled rows and predict hard labels.
pub trait Classifier {
    fn fit(&mut self, x: ArrayView2<f64>, y: &[u8]) -> Result<()>;
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<u8>>;
}

/// The network classifier used by the evaluation entry points.
#[derive(Debug, Clone)]
pub struct MlpClassifier {
    spec: ModelSpec,
    model: Option<MlpModel>,
}

impl MlpClassifier {
    pub fn new(spec: ModelSpec) -> MlpClassifier {
        MlpClassifier { spec, model: None }
    }

    pub fn model(&self) -> Option<&MlpModel> {
        self.model.as_ref()
    }
}

impl Classifier for MlpClassifier {
    fn fit(&mut self, x: ArrayView2<f64>, y: &[u8]) -> Result<()> {
        if x.ncols() != self.spec.input_width {
            return Err(Error::Shape(format!(
                "classifier expects {} features, got {}",
                self.spec.input_width,
                x.ncols()
            )));
        }
        let mut model = MlpModel::build(self.spec.clone())?;
        model.train(x, y)?;
        self.model = Some(model);
        Ok(())
    }

    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<u8>> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| Error::Evaluation("classifier was never fit".into()))?;
        Ok(model
            .predict_proba_batch(x)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }
}

/// When the standardization scaler is fit during cross validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// Refit on each fold's training rows (no validation leakage).
    PerFold,
    /// Fit once on the whole table before splitting.
    Global,
}

impl FromStr for ScalingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<ScalingMode> {
        match s {
            "per-fold" => Ok(ScalingMode::PerFold),
            "global" => Ok(ScalingMode::Global),
            other => Err(Error::Parameter(format!(
                "unknown scaling mode {other:?} (per-fold|global)"
            ))),
        }
    }
}

impl fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingMode::PerFold => "per-fold",
            ScalingMode::Global => "global",
        })
    }
}

/// Max/mean/min/population-sd of one metric across folds, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub max: f64,
    pub mean: f64,
    pub min: f64,
    pub sd: f64,
}

impl Aggregate {
    /// Aggregate fold fractions into percent figures. Values are sorted
    /// first so the result is identical for any fold completion order.
    fn from_fractions(values: &[f64]) -> Aggregate {
        let mut percents: Vec<f64> = values.iter().map(|v| v * 100.0).collect();
        percents.sort_by(|a, b| b.total_cmp(a));
        let n = percents.len() as f64;
        let mean = percents.iter().sum::<f64>() / n;
        let variance = percents.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Aggregate {
            max: percents[0],
            mean,
            min: *percents.last().unwrap(),
            sd: variance.sqrt(),
        }
    }
}

/// One [`Aggregate`] per reported metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregates {
    pub accuracy: Aggregate,
    pub f1_score: Aggregate,
    pub recall: Aggregate,
    pub precision: Aggregate,
}

/// Cross-validation outcome: raw per-fold metrics plus their aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    /// Per-fold metrics as fractions, in fold order.
    pub fold_metrics: Vec<Metrics>,
    /// Percent aggregates across folds.
    pub aggregates: MetricAggregates,
    pub k: usize,
    /// Folds whose validation rows were all one class.
    pub single_class_folds: Vec<usize>,
}

impl MetricsSummary {
    pub fn from_folds(fold_metrics: Vec<Metrics>, single_class_folds: Vec<usize>) -> MetricsSummary {
        let collect = |f: fn(&Metrics) -> f64| -> Vec<f64> { fold_metrics.iter().map(f).collect() };
        let aggregates = MetricAggregates {
            accuracy: Aggregate::from_fractions(&collect(|m| m.accuracy)),
            f1_score: Aggregate::from_fractions(&collect(|m| m.f1)),
            recall: Aggregate::from_fractions(&collect(|m| m.recall)),
            precision: Aggregate::from_fractions(&collect(|m| m.precision)),
        };
        MetricsSummary {
            k: fold_metrics.len(),
            fold_metrics,
            aggregates,
            single_class_folds,
        }
    }
}

fn apply_subset(table: &FeatureTable, subset: Option<&[String]>) -> Result<FeatureTable> {
    match subset {
        Some(names) => table.select_features(names),
        None => Ok(table.clone()),
    }
}

/// Cross-validate a classifier factory: for each fold, fit a fresh
/// classifier on the other k−1 folds and score the held-out rows.
///
/// `make` receives the fold index so callers can vary seeds per fold.
pub fn kfold_evaluate_with<C, F>(
    table: &FeatureTable,
    mut make: F,
    subset: Option<&[String]>,
    k: usize,
    seed: u64,
    mode: ScalingMode,
) -> Result<MetricsSummary>
where
    C: Classifier,
    F: FnMut(usize) -> C,
{
    let mut working = apply_subset(table, subset)?;
    if mode == ScalingMode::Global {
        let params = standardize_fit(&working);
        working = standardize_apply(&params, &working)?;
    }
    let plan = kfold_partition(&working, k, seed)?;
    let mut fold_metrics = Vec::with_capacity(k);
    let mut single_class_folds = Vec::new();
    for fold in 0..k {
        let mut train = working.subset_rows(&plan.complement_rows(fold))?;
        let mut validation = working.subset_rows(&plan.fold_rows(fold))?;
        if mode == ScalingMode::PerFold {
            let params = standardize_fit(&train);
            train = standardize_apply(&params, &train)?;
            validation = standardize_apply(&params, &validation)?;
        }
        let mut classifier = make(fold);
        classifier.fit(train.data.view(), &train.labels)?;
        let predictions = classifier.predict(validation.data.view())?;
        let cm = ConfusionMatrix::from_pairs(&predictions, &validation.labels)?;
        fold_metrics.push(metrics(&cm)?);
        let (zeros, ones) = validation.class_counts();
        if zeros == 0 || ones == 0 {
            single_class_folds.push(fold);
        }
    }
    Ok(MetricsSummary::from_folds(fold_metrics, single_class_folds))
}

/// K-fold evaluation of the network described by `spec`.
///
/// `seed` drives the fold partition, and each fold's network trains
/// with seed `derive_seed(seed, fold + 1)` (the spec's own seed is
/// superseded), so the whole run is determined by the arguments.
pub fn kfold_evaluate(
    table: &FeatureTable,
    spec: &ModelSpec,
    subset: Option<&[String]>,
    k: usize,
    seed: u64,
    mode: ScalingMode,
) -> Result<MetricsSummary> {
    kfold_evaluate_with(
        table,
        |fold| {
            let mut fold_spec = spec.clone();
            fold_spec.seed = derive_seed(seed, fold as u64 + 1);
            MlpClassifier::new(fold_spec)
        },
        subset,
        k,
        seed,
        mode,
    )
}

/// Holdout outcome: raw counts plus the derived metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldoutOutcome {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

/// Fit on `train`, score on `validation`, with the scaler fit on the
/// training rows only. The tables must not share subjects.
pub fn holdout_evaluate_with<C: Classifier>(
    train: &FeatureTable,
    validation: &FeatureTable,
    classifier: &mut C,
    subset: Option<&[String]>,
) -> Result<HoldoutOutcome> {
    let shared: Vec<i64> = train
        .unique_subjects()
        .into_iter()
        .filter(|s| validation.unique_subjects().contains(s))
        .collect();
    if !shared.is_empty() {
        return Err(Error::Leakage(format!(
            "subjects {shared:?} appear in both training and validation"
        )));
    }
    let train_sub = apply_subset(train, subset)?;
    let validation_sub = apply_subset(validation, subset)?;
    let params = standardize_fit(&train_sub);
    let train_scaled = standardize_apply(&params, &train_sub)?;
    let validation_scaled = standardize_apply(&params, &validation_sub)?;
    classifier.fit(train_scaled.data.view(), &train_scaled.labels)?;
    let predictions = classifier.predict(validation_scaled.data.view())?;
    let confusion = ConfusionMatrix::from_pairs(&predictions, &validation_scaled.labels)?;
    Ok(HoldoutOutcome {
        confusion,
        metrics: metrics(&confusion)?,
    })
}

/// Holdout evaluation of the network described by `spec`; `seed`
/// supersedes the spec's own training seed.
pub fn holdout_evaluate(
    train: &FeatureTable,
    validation: &FeatureTable,
    spec: &ModelSpec,
    subset: Option<&[String]>,
    seed: u64,
) -> Result<HoldoutOutcome> {
    let mut run_spec = spec.clone();
    run_spec.seed = seed;
    let mut classifier = MlpClassifier::new(run_spec);
    holdout_evaluate_with(train, validation, &mut classifier, subset)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Parameter(format!(
                "unknown report format {other:?} (text|json)"
            ))),
        }
    }
}

/// Render the aggregate table (percent, two decimals) or the full
/// summary as JSON.
pub fn render_report(summary: &MetricsSummary, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(summary).expect("summary serializes")
        }
        ReportFormat::Text => {
            let a = &summary.aggregates;
            let mut out = String::new();
            out.push_str(&format!(
                "{:<6}{:>10}{:>10}{:>10}{:>11}\n",
                "", "Accuracy", "F1 Score", "Recall", "Precision"
            ));
            let rows: [(&str, fn(&Aggregate) -> f64); 4] = [
                ("Max", |g| g.max),
                ("Mean", |g| g.mean),
                ("Min", |g| g.min),
                ("SD", |g| g.sd),
            ];
            for (label, pick) in rows {
                out.push_str(&format!(
                    "{:<6}{:>10.2}{:>10.2}{:>10.2}{:>11.2}\n",
                    label,
                    pick(&a.accuracy),
                    pick(&a.f1_score),
                    pick(&a.recall),
                    pick(&a.precision),
                ));
            }
            out
        }
    }
}
