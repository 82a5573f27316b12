//! Local surrogate explanations for black-box probability models.
//!
//! One explanation perturbs a single record with per-feature unit
//! normals (the record lives in standardized space, so unit spread
//! matches the training distribution), weights each perturbation by an
//! exponential locality kernel, fits a sparse weighted ridge surrogate
//! to the model's class-1 probabilities, and reports the top-K signed
//! feature weights. Aggregating explanations over many records yields a
//! ranked influential-feature list that can be merged with an
//! elimination-based selection.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnStats, FeatureTable, ScalerParams};
use crate::error::{Error, Result};
use crate::linalg::{weighted_r2, weighted_ridge};
use crate::mlp::MlpModel;
use crate::rfe::{LogisticModel, RfeResult};
use crate::seeding::derive_seed;

/// Ridge penalty for the local surrogate fits.
pub const SURROGATE_RIDGE: f64 = 1e-3;

/// Perturbation count that keeps surrogate coefficients stable at full
/// feature width; tests use far fewer.
pub const DEFAULT_N_SAMPLES: usize = 5000;

/// Fewest perturbations accepted for a fit.
pub const MIN_N_SAMPLES: usize = 50;

/// Conventional locality width in standardized space.
pub fn default_kernel_width(n_features: usize) -> f64 {
    0.75 * (n_features as f64).sqrt()
}

/// Anything that can score a feature row with a class-1 probability.
pub trait ProbabilityModel {
    fn probability(&self, x: &[f64]) -> Result<f64>;
}

impl ProbabilityModel for MlpModel {
    fn probability(&self, x: &[f64]) -> Result<f64> {
        self.predict_proba(x)
    }
}

impl ProbabilityModel for LogisticModel {
    fn probability(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_proba(ndarray::ArrayView1::from(x)))
    }
}

/// Adapter for plain functions, mostly useful in tests and oracles.
pub struct FnModel<F: Fn(&[f64]) -> f64>(pub F);

impl<F: Fn(&[f64]) -> f64> ProbabilityModel for FnModel<F> {
    fn probability(&self, x: &[f64]) -> Result<f64> {
        Ok((self.0)(x))
    }
}

/// Draw `n_samples` rows around `x`: row 0 is `x` itself, the rest add
/// unit-normal noise per feature. Columns the scaler marks degenerate
/// had no training variance, so they stay fixed.
pub fn perturb(
    x: &[f64],
    n_samples: usize,
    names: &[String],
    train_stats: &ScalerParams,
    seed: u64,
) -> Result<Array2<f64>> {
    if n_samples < MIN_N_SAMPLES {
        return Err(Error::Parameter(format!(
            "n_samples must be at least {MIN_N_SAMPLES}, got {n_samples}"
        )));
    }
    if names.len() != x.len() {
        return Err(Error::Shape(format!(
            "{} feature names for a {}-wide instance",
            names.len(),
            x.len()
        )));
    }
    let mut spread = Vec::with_capacity(names.len());
    for name in names {
        let stats = train_stats.get(name).ok_or_else(|| {
            Error::Schema(format!("no training statistics for feature {name:?}"))
        })?;
        spread.push(if stats.degenerate { 0.0 } else { 1.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Array2::zeros((n_samples, x.len()));
    samples.row_mut(0).assign(&Array1::from(x.to_vec()));
    for i in 1..n_samples {
        for (j, &value) in x.iter().enumerate() {
            let noise: f64 = StandardNormal.sample(&mut rng);
            samples[[i, j]] = value + spread[j] * noise;
        }
    }
    Ok(samples)
}

/// Locality weight exp(−d²/w²) ∈ (0, 1]; expects `distance ≥ 0` and
/// `width > 0`.
pub fn kernel_weight(distance: f64, width: f64) -> f64 {
    (-(distance * distance) / (width * width)).exp()
}

/// Sparse local linear fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub intercept: f64,
    /// (column, coefficient), sorted by |coefficient| descending.
    pub coefficients: Vec<(usize, f64)>,
    /// Weighted R² of the sparse refit against the model probabilities.
    pub r2: f64,
}

/// Two-stage weighted ridge: rank all features by |coefficient| of a
/// full fit, keep the top `k`, refit on those alone.
pub fn fit_surrogate(
    samples: ArrayView2<f64>,
    probabilities: &[f64],
    weights: &[f64],
    k: usize,
) -> Result<Surrogate> {
    fit_surrogate_with(samples, probabilities, weights, k, SURROGATE_RIDGE)
}

/// [`fit_surrogate`] with an explicit ridge penalty.
pub fn fit_surrogate_with(
    samples: ArrayView2<f64>,
    probabilities: &[f64],
    weights: &[f64],
    k: usize,
    lambda: f64,
) -> Result<Surrogate> {
    let (n, d) = samples.dim();
    if probabilities.len() != n || weights.len() != n {
        return Err(Error::Shape(format!(
            "{n} samples but {} probabilities and {} weights",
            probabilities.len(),
            weights.len()
        )));
    }
    if k == 0 || k > d {
        return Err(Error::Parameter(format!(
            "surrogate size must be in 1..={d}, got {k}"
        )));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Parameter("kernel weights must be positive".into()));
    }
    let y = Array1::from(probabilities.to_vec());
    let (full, _) = weighted_ridge(samples, y.view(), weights, lambda)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|a, b| full[*b].abs().total_cmp(&full[*a].abs()));
    let mut kept: Vec<usize> = order[..k].to_vec();
    kept.sort_unstable(); // column order for the refit

    let sub = samples.select(Axis(1), &kept);
    let (sparse, intercept) = weighted_ridge(sub.view(), y.view(), weights, lambda)?;
    let predictions: Array1<f64> = sub
        .axis_iter(Axis(0))
        .map(|row| sparse.dot(&row) + intercept)
        .collect();
    let r2 = weighted_r2(y.view(), predictions.view(), weights);

    let mut coefficients: Vec<(usize, f64)> =
        kept.iter().zip(sparse.iter()).map(|(c, v)| (*c, *v)).collect();
    coefficients.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    Ok(Surrogate {
        intercept,
        coefficients,
        r2,
    })
}

/// One signed contribution in an explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeight {
    pub feature: String,
    pub weight: f64,
    /// 1 when the weight pushes toward class 1, else 0.
    pub class: u8,
}

/// Everything reported about one record's prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// (P(class 0), P(class 1)) from the model at the record.
    pub class_probabilities: (f64, f64),
    /// Top-K contributions, sorted by |weight| descending.
    pub feature_weights: Vec<FeatureWeight>,
    pub intercept: f64,
    /// The surrogate's own prediction at the record.
    pub local_probability: f64,
    pub surrogate_r2: f64,
    pub n_samples_used: usize,
    pub kernel_width: f64,
}

impl Explanation {
    /// Three-section report: prediction probabilities, then the
    /// features attributed to each class.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("Prediction probabilities\n");
        out.push_str(&format!("  Class 0  {:.4}\n", self.class_probabilities.0));
        out.push_str(&format!("  Class 1  {:.4}\n", self.class_probabilities.1));
        for (class, title) in [(1u8, "Class 1 features"), (0u8, "Class 0 features")] {
            out.push_str(&format!("\n{title}\n"));
            let mut any = false;
            for fw in self.feature_weights.iter().filter(|fw| fw.class == class) {
                out.push_str(&format!("  {}  {:+.4}\n", fw.feature, fw.weight));
                any = true;
            }
            if !any {
                out.push_str("  (none)\n");
            }
        }
        out.push_str(&format!(
            "\nSurrogate: local probability {:.4}, R² {:.4}, {} samples, kernel width {:.4}\n",
            self.local_probability, self.surrogate_r2, self.n_samples_used, self.kernel_width
        ));
        out
    }
}

/// Reusable explanation context: the feature space and sampling knobs.
#[derive(Debug, Clone)]
pub struct LimeExplainer {
    feature_names: Vec<String>,
    train_stats: ScalerParams,
    pub kernel_width: f64,
    pub n_samples: usize,
}

impl LimeExplainer {
    pub fn new(
        feature_names: Vec<String>,
        train_stats: ScalerParams,
        kernel_width: f64,
        n_samples: usize,
    ) -> Result<LimeExplainer> {
        if !(kernel_width > 0.0) {
            return Err(Error::Parameter(format!(
                "kernel width must be positive, got {kernel_width}"
            )));
        }
        if n_samples < MIN_N_SAMPLES {
            return Err(Error::Parameter(format!(
                "n_samples must be at least {MIN_N_SAMPLES}, got {n_samples}"
            )));
        }
        for name in &feature_names {
            if train_stats.get(name).is_none() {
                return Err(Error::Schema(format!(
                    "no training statistics for feature {name:?}"
                )));
            }
        }
        Ok(LimeExplainer {
            feature_names,
            train_stats,
            kernel_width,
            n_samples,
        })
    }

    /// Context from a standardized table, defaulting the kernel width to
    /// [`default_kernel_width`]. Tables without an attached scaler are
    /// assumed pre-standardized with no degenerate columns.
    pub fn from_table(table: &FeatureTable, n_samples: usize) -> Result<LimeExplainer> {
        let stats = table.scaler.clone().unwrap_or_else(|| {
            identity_stats(&table.column_names)
        });
        LimeExplainer::new(
            table.column_names.clone(),
            stats,
            default_kernel_width(table.n_features()),
            n_samples,
        )
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Explain one standardized record: perturb, score, weight, fit.
    pub fn explain(
        &self,
        model: &dyn ProbabilityModel,
        x: &[f64],
        k: usize,
        seed: u64,
    ) -> Result<Explanation> {
        if x.len() != self.feature_names.len() {
            return Err(Error::Shape(format!(
                "instance width {} but explainer covers {} features",
                x.len(),
                self.feature_names.len()
            )));
        }
        let samples = perturb(x, self.n_samples, &self.feature_names, &self.train_stats, seed)?;
        let mut probabilities = Vec::with_capacity(samples.nrows());
        for row in samples.axis_iter(Axis(0)) {
            let p = model.probability(row.as_slice().expect("row-major sample matrix"))?;
            if !p.is_finite() {
                return Err(Error::Numeric(format!("model produced probability {p}")));
            }
            probabilities.push(p);
        }
        let weights: Vec<f64> = samples
            .axis_iter(Axis(0))
            .map(|row| {
                let distance = row
                    .iter()
                    .zip(x)
                    .map(|(s, v)| (s - v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                kernel_weight(distance, self.kernel_width)
            })
            .collect();
        let surrogate = fit_surrogate(samples.view(), &probabilities, &weights, k)?;

        let p1 = probabilities[0]; // row 0 is the instance itself
        let local = surrogate.intercept
            + surrogate
                .coefficients
                .iter()
                .map(|(c, w)| w * x[*c])
                .sum::<f64>();
        let feature_weights = surrogate
            .coefficients
            .iter()
            .map(|(c, w)| FeatureWeight {
                feature: self.feature_names[*c].clone(),
                weight: *w,
                class: u8::from(*w > 0.0),
            })
            .collect();
        Ok(Explanation {
            class_probabilities: (1.0 - p1, p1),
            feature_weights,
            intercept: surrogate.intercept,
            local_probability: local,
            surrogate_r2: surrogate.r2,
            n_samples_used: self.n_samples,
            kernel_width: self.kernel_width,
        })
    }
}

fn identity_stats(names: &[String]) -> ScalerParams {
    let mut params = ScalerParams::default();
    for name in names {
        params.columns.insert(
            name.clone(),
            ColumnStats {
                mean: 0.0,
                sd: 1.0,
                degenerate: false,
            },
        );
    }
    params
}

/// One feature's aggregate standing across many explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEntry {
    pub feature: String,
    /// Mean |weight| over all records (zero when never selected).
    pub mean_abs_weight: f64,
    /// How many records ranked this feature in their top K.
    pub top_k_count: usize,
}

/// Influence ranking built from per-record explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInfluenceList {
    /// Sorted by mean |weight| descending.
    pub entries: Vec<InfluenceEntry>,
    pub records_examined: usize,
    pub k: usize,
}

impl FeatureInfluenceList {
    /// Names of features that made at least one record's top K, in
    /// influence order.
    pub fn ranked_features(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.top_k_count > 0)
            .map(|e| e.feature.clone())
            .collect()
    }
}

/// Explain every row of `records` and fold the results into one ranking.
/// Each row gets its own derived seed, so the aggregate is independent
/// of evaluation order.
pub fn aggregate_influence(
    model: &dyn ProbabilityModel,
    records: &FeatureTable,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<FeatureInfluenceList> {
    if records.n_rows() == 0 {
        return Err(Error::Shape("no records to explain".into()));
    }
    let explainer = LimeExplainer::from_table(records, n_samples)?;
    let d = records.n_features();
    let mut total_abs = vec![0.0f64; d];
    let mut counts = vec![0usize; d];
    for row in 0..records.n_rows() {
        let x: Vec<f64> = records.data.row(row).to_vec();
        let explanation = explainer.explain(model, &x, k, derive_seed(seed, row as u64))?;
        for fw in &explanation.feature_weights {
            let col = records
                .feature_index(&fw.feature)
                .expect("explanation names come from the table");
            total_abs[col] += fw.weight.abs();
            counts[col] += 1;
        }
    }
    let n = records.n_rows();
    let mut entries: Vec<InfluenceEntry> = (0..d)
        .map(|c| InfluenceEntry {
            feature: records.column_names[c].clone(),
            mean_abs_weight: total_abs[c] / n as f64,
            top_k_count: counts[c],
        })
        .collect();
    entries.sort_by(|a, b| b.mean_abs_weight.total_cmp(&a.mean_abs_weight));
    Ok(FeatureInfluenceList {
        entries,
        records_examined: n,
        k,
    })
}

/// Feature set of one requested size, merged from the two rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCombination {
    pub size: usize,
    pub features: Vec<String>,
}

/// Merge the influence ranking with an elimination result: features on
/// both lists come first (in influence order), then the two ranked
/// lists alternate — influence, elimination, influence, … — skipping
/// duplicates, until each requested size is filled.
pub fn combine_lists(
    lime_list: &FeatureInfluenceList,
    rfe: &RfeResult,
    sizes: &[usize],
) -> Result<Vec<FeatureCombination>> {
    let lime_ranked = lime_list.ranked_features();
    let rfe_ranked = &rfe.selected_order;
    let rfe_set: BTreeSet<&String> = rfe_ranked.iter().collect();
    let available: BTreeSet<&String> = lime_ranked.iter().chain(rfe_ranked.iter()).collect();

    let mut combinations = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if size == 0 || size > available.len() {
            return Err(Error::Parameter(format!(
                "combination size {size} outside 1..={} available features",
                available.len()
            )));
        }
        let mut chosen: Vec<String> = lime_ranked
            .iter()
            .filter(|name| rfe_set.contains(name))
            .take(size)
            .cloned()
            .collect();
        let mut lime_iter = lime_ranked.iter();
        let mut rfe_iter = rfe_ranked.iter();
        let mut take_lime = true;
        while chosen.len() < size {
            let next = if take_lime {
                lime_iter.next()
            } else {
                rfe_iter.next()
            };
            take_lime = !take_lime;
            match next {
                Some(name) if !chosen.contains(name) => chosen.push(name.clone()),
                Some(_) => {
                    // Duplicate: stay on the same list for its next entry.
                    take_lime = !take_lime;
                }
                None => {} // this list is exhausted; the other fills in
            }
        }
        combinations.push(FeatureCombination {
            size,
            features: chosen,
        });
    }
    Ok(combinations)
}
