//! Recursive feature elimination over a linear base estimator.
//!
//! Each round fits an L2-regularized logistic regression on the
//! surviving features, ranks them by absolute coefficient, and drops the
//! weakest `step` until the target count remains. The estimator is
//! deterministic (zero initialization, full-batch descent), so results
//! depend only on the table and parameters.
//!
//! Coefficient magnitudes are only comparable across columns of similar
//! scale: standardize the table before selecting.

use std::ops::RangeInclusive;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde_json::json;

use crate::dataset::FeatureTable;
use crate::error::{Error, Result};
use crate::mlp::stable_sigmoid;

/// Ridge penalty applied to the base estimator's coefficients.
pub const ESTIMATOR_L2: f64 = 1e-2;

const MAX_ITERATIONS: usize = 300;
/// Descent stops once no parameter moves by more than this in a step.
const CONVERGENCE_TOL: f64 = 1e-9;

/// L2-regularized logistic regression fit by full-batch gradient descent
/// with backtracking line search. Zero-initialized and deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    coefficients: Array1<f64>,
    intercept: f64,
    iterations: usize,
}

/// ln(1 + eᵗ) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t
    } else if t < -30.0 {
        t.exp()
    } else {
        t.exp().ln_1p()
    }
}

impl LogisticModel {
    /// Fit with the standard penalty [`ESTIMATOR_L2`].
    pub fn fit(x: ArrayView2<f64>, y: &[u8]) -> Result<LogisticModel> {
        LogisticModel::fit_with(x, y, ESTIMATOR_L2)
    }

    /// Minimize mean cross-entropy + (λ/2)‖w‖² (intercept unpenalized).
    pub fn fit_with(x: ArrayView2<f64>, y: &[u8], l2: f64) -> Result<LogisticModel> {
        let (n, d) = x.dim();
        if n == 0 || y.len() != n {
            return Err(Error::Shape(format!(
                "{n} rows but {} labels",
                y.len()
            )));
        }
        if y.iter().any(|l| *l > 1) {
            return Err(Error::Label("labels must be 0 or 1".into()));
        }
        if !y.contains(&0) || !y.contains(&1) {
            return Err(Error::Estimator(
                "training data contains a single class".into(),
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("features contain non-finite values".into()));
        }
        if !(l2 >= 0.0) {
            return Err(Error::Parameter(format!(
                "penalty must be non-negative, got {l2}"
            )));
        }

        let objective = |z: &Array1<f64>, w: &Array1<f64>| -> f64 {
            let mut loss = 0.0;
            for (zi, &label) in z.iter().zip(y) {
                loss += if label == 1 {
                    softplus(-zi)
                } else {
                    softplus(*zi)
                };
            }
            loss / n as f64 + 0.5 * l2 * w.dot(w)
        };

        let mut w = Array1::<f64>::zeros(d);
        let mut b = 0.0;
        let mut z = Array1::<f64>::zeros(n); // x·w + b, updated incrementally
        let mut obj = objective(&z, &w);
        let mut lr: f64 = 1.0;
        let mut iterations = 0;
        for _ in 0..MAX_ITERATIONS {
            let residual: Array1<f64> =
                z.iter().zip(y).map(|(zi, &label)| (stable_sigmoid(*zi) - f64::from(label)) / n as f64).collect();
            let g_w = x.t().dot(&residual) + &(l2 * &w);
            let g_b: f64 = residual.sum();
            let g_sq = g_w.dot(&g_w) + g_b * g_b;
            // x·g once per iteration; trial steps only rescale it.
            let xg = x.dot(&g_w);

            lr = (lr * 2.0).min(1e6);
            let (w_new, b_new, z_new, obj_new) = loop {
                let w_try = &w - &(lr * &g_w);
                let b_try = b - lr * g_b;
                let z_try = &z - &(lr * (&xg + g_b));
                let obj_try = objective(&z_try, &w_try);
                if obj_try <= obj - 0.25 * lr * g_sq || lr < 1e-18 {
                    break (w_try, b_try, z_try, obj_try);
                }
                lr *= 0.5;
            };
            if !obj_new.is_finite() {
                return Err(Error::Estimator(format!(
                    "objective became {obj_new} after {iterations} iterations"
                )));
            }
            let largest_step = g_w
                .iter()
                .fold(g_b.abs(), |acc, g| acc.max(g.abs()))
                * lr;
            w = w_new;
            b = b_new;
            z = z_new;
            obj = obj_new;
            iterations += 1;
            if largest_step < CONVERGENCE_TOL {
                break;
            }
        }
        Ok(LogisticModel {
            coefficients: w,
            intercept: b,
            iterations,
        })
    }

    pub fn coefficients(&self) -> ArrayView1<'_, f64> {
        self.coefficients.view()
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// P(class 1) for one row.
    pub fn predict_proba(&self, row: ArrayView1<f64>) -> f64 {
        stable_sigmoid(self.coefficients.dot(&row) + self.intercept)
    }

    /// Fraction of rows classified correctly at threshold 0.5.
    pub fn accuracy(&self, x: ArrayView2<f64>, y: &[u8]) -> f64 {
        let correct = x
            .axis_iter(Axis(0))
            .zip(y)
            .filter(|(row, &label)| u8::from(self.predict_proba(row.view()) >= 0.5) == label)
            .count();
        correct as f64 / y.len() as f64
    }
}

/// Outcome of one elimination run.
#[derive(Debug, Clone, PartialEq)]
pub struct RfeResult {
    /// Column names in table order.
    pub feature_names: Vec<String>,
    /// True for each surviving feature.
    pub support: Vec<bool>,
    /// 1 for selected features; eliminated features get one rank per
    /// elimination round, larger = eliminated earlier.
    pub ranking: Vec<usize>,
    pub n_features_target: usize,
    /// Eliminated feature names, first-eliminated first (weakest first
    /// within a round).
    pub elimination_order: Vec<String>,
    /// Selected features ordered by final-fit |coefficient|, strongest
    /// first.
    pub selected_order: Vec<String>,
}

impl RfeResult {
    /// Selected feature names in table column order.
    pub fn selected_features(&self) -> Vec<String> {
        self.feature_names
            .iter()
            .zip(&self.support)
            .filter(|(_, keep)| **keep)
            .map(|(name, _)| name.clone())
            .collect()
    }

    /// `{feature: {selected, rank}}` for artifacts on disk.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (i, name) in self.feature_names.iter().enumerate() {
            map.insert(
                name.clone(),
                json!({"selected": self.support[i], "rank": self.ranking[i]}),
            );
        }
        serde_json::Value::Object(map)
    }
}

fn fit_on_columns(table: &FeatureTable, columns: &[usize]) -> Result<LogisticModel> {
    let x = table.data.select(Axis(1), columns);
    LogisticModel::fit(x.view(), &table.labels)
}

/// Iteratively drop the weakest features until `n_features` remain.
///
/// The table should be standardized. The run is fully deterministic;
/// `seed` is accepted for interface stability but the base estimator
/// takes no randomness. Coefficient ties break toward earlier columns.
pub fn rfe_select(
    table: &FeatureTable,
    n_features: usize,
    step: usize,
    seed: u64,
) -> Result<RfeResult> {
    let _ = seed;
    let d = table.n_features();
    if n_features < 1 || n_features >= d {
        return Err(Error::Parameter(format!(
            "n_features must be in 1..{d}, got {n_features}"
        )));
    }
    if step == 0 {
        return Err(Error::Parameter("step must be at least 1".into()));
    }

    let mut survivors: Vec<usize> = (0..d).collect();
    let mut rounds: Vec<Vec<usize>> = Vec::new();
    while survivors.len() > n_features {
        let model = fit_on_columns(table, &survivors)?;
        let coefficients = model.coefficients();
        let k = step.min(survivors.len() - n_features);
        let mut positions: Vec<usize> = (0..survivors.len()).collect();
        positions.sort_by(|a, b| coefficients[*a].abs().total_cmp(&coefficients[*b].abs()));
        let mut removed: Vec<usize> = positions[..k].iter().map(|p| survivors[*p]).collect();
        let removed_set: Vec<usize> = removed.clone();
        survivors.retain(|c| !removed_set.contains(c));
        rounds.push(std::mem::take(&mut removed));
    }

    // One more fit on the survivors orders them by influence.
    let final_model = fit_on_columns(table, &survivors)?;
    let mut order: Vec<usize> = (0..survivors.len()).collect();
    order.sort_by(|a, b| {
        final_model.coefficients()[*b]
            .abs()
            .total_cmp(&final_model.coefficients()[*a].abs())
    });
    let selected_order: Vec<String> = order
        .iter()
        .map(|p| table.column_names[survivors[*p]].clone())
        .collect();

    let mut support = vec![false; d];
    for &c in &survivors {
        support[c] = true;
    }
    let mut ranking = vec![1usize; d];
    let n_rounds = rounds.len();
    for (j, round) in rounds.iter().enumerate() {
        for &c in round {
            ranking[c] = n_rounds - j + 1;
        }
    }
    let elimination_order = rounds
        .iter()
        .flatten()
        .map(|&c| table.column_names[c].clone())
        .collect();
    Ok(RfeResult {
        feature_names: table.column_names.clone(),
        support,
        ranking,
        n_features_target: n_features,
        elimination_order,
        selected_order,
    })
}

/// Run [`rfe_select`] at every size in `range` and score each selected
/// subset with `evaluate` (typically cross-validated downstream
/// accuracy). Results come back sorted by size ascending.
pub fn rfe_sweep<F>(
    table: &FeatureTable,
    range: RangeInclusive<usize>,
    step: usize,
    seed: u64,
    mut evaluate: F,
) -> Result<Vec<(usize, f64)>>
where
    F: FnMut(&FeatureTable) -> Result<f64>,
{
    if range.is_empty() {
        return Err(Error::Parameter("sweep range is empty".into()));
    }
    if *range.start() < 1 || *range.end() >= table.n_features() {
        return Err(Error::Parameter(format!(
            "sweep range {}..={} outside 1..{}",
            range.start(),
            range.end(),
            table.n_features()
        )));
    }
    let mut out = Vec::new();
    for n in range {
        let result = rfe_select(table, n, step, seed)?;
        let subset = table.select_features(&result.selected_features())?;
        out.push((n, evaluate(&subset)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{standardize_apply, standardize_fit};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// y = 1[3·x1 − 2·x2 + ε > 0] among `noise` standard-normal columns.
    fn planted_table(rows: usize, noise: usize, seed: u64) -> FeatureTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = noise + 2;
        let mut data = Array2::<f64>::zeros((rows, d));
        let mut labels = Vec::with_capacity(rows);
        for i in 0..rows {
            for j in 0..d {
                data[[i, j]] = StandardNormal.sample(&mut rng);
            }
            let eps: f64 = rng.random_range(-0.5..0.5);
            labels.push(u8::from(3.0 * data[[i, 0]] - 2.0 * data[[i, 1]] + eps > 0.0));
        }
        let mut names = vec!["x1".to_string(), "x2".to_string()];
        names.extend((1..=noise).map(|i| format!("noise{i}")));
        let subjects = (0..rows as i64).collect();
        let raw = FeatureTable::new(names, data, labels, subjects).unwrap();
        standardize_apply(&standardize_fit(&raw), &raw).unwrap()
    }

    #[test]
    fn estimator_separates_planted_signal() {
        let table = planted_table(600, 6, 1);
        let model = LogisticModel::fit(table.data.view(), &table.labels).unwrap();
        let c = model.coefficients();
        let weakest_signal = c[0].abs().min(c[1].abs());
        let strongest_noise = (2..8).map(|j| c[j].abs()).fold(0.0, f64::max);
        assert!(
            weakest_signal > 4.0 * strongest_noise,
            "signal {weakest_signal} vs noise {strongest_noise}"
        );
        // Signs follow the generating weights.
        assert!(c[0] > 0.0 && c[1] < 0.0);
        assert!(model.accuracy(table.data.view(), &table.labels) > 0.9);
    }

    #[test]
    fn estimator_rejects_single_class_data() {
        let x = Array2::zeros((10, 3));
        let y = vec![1u8; 10];
        assert!(matches!(
            LogisticModel::fit(x.view(), &y),
            Err(Error::Estimator(_))
        ));
    }

    #[test]
    fn single_elimination_matches_direct_fit() {
        let table = planted_table(400, 8, 3);
        let d = table.n_features();
        let direct = LogisticModel::fit(table.data.view(), &table.labels).unwrap();
        let weakest = (0..d)
            .min_by(|a, b| {
                direct.coefficients()[*a]
                    .abs()
                    .total_cmp(&direct.coefficients()[*b].abs())
            })
            .unwrap();
        let result = rfe_select(&table, d - 1, 1, 0).unwrap();
        assert_eq!(result.elimination_order, vec![table.column_names[weakest].clone()]);
        assert!(!result.support[weakest]);
        assert_eq!(result.ranking.iter().filter(|r| **r == 1).count(), d - 1);
        assert_eq!(result.ranking[weakest], 2);
    }

    #[test]
    fn planted_features_are_recovered_across_seeds() {
        let mut hits = 0;
        for seed in 0..5 {
            let table = planted_table(1000, 20, 100 + seed);
            let result = rfe_select(&table, 2, 1, seed).unwrap();
            let selected = result.selected_features();
            if selected.contains(&"x1".to_string()) && selected.contains(&"x2".to_string()) {
                hits += 1;
            }
        }
        assert!(hits >= 4, "recovered both features in only {hits}/5 runs");
    }

    #[test]
    fn support_and_ranking_invariants_hold() {
        let table = planted_table(300, 10, 7);
        let result = rfe_select(&table, 4, 1, 0).unwrap();
        assert_eq!(result.support.iter().filter(|s| **s).count(), 4);
        assert_eq!(result.n_features_target, 4);
        for (i, &selected) in result.support.iter().enumerate() {
            if selected {
                assert_eq!(result.ranking[i], 1);
            } else {
                assert!(result.ranking[i] > 1);
            }
        }
        // step=1: one rank per eliminated feature, contiguous from 2.
        let mut eliminated_ranks: Vec<usize> = result
            .ranking
            .iter()
            .copied()
            .filter(|r| *r > 1)
            .collect();
        eliminated_ranks.sort_unstable();
        assert_eq!(eliminated_ranks, (2..=9).collect::<Vec<_>>());
        assert_eq!(result.selected_order.len(), 4);
        assert_eq!(result.elimination_order.len(), 8);
    }

    #[test]
    fn ranking_replays_the_elimination() {
        let table = planted_table(300, 10, 11);
        let result = rfe_select(&table, 3, 2, 0).unwrap();
        // Eliminating by descending rank must leave exactly the support.
        let mut remaining: Vec<&String> = result.feature_names.iter().collect();
        let mut by_rank: Vec<(usize, &String)> = result
            .feature_names
            .iter()
            .enumerate()
            .filter(|(i, _)| !result.support[*i])
            .map(|(i, n)| (result.ranking[i], n))
            .collect();
        by_rank.sort_by(|a, b| b.0.cmp(&a.0));
        for (_, name) in by_rank {
            remaining.retain(|n| *n != name);
        }
        let survivors: Vec<&String> = result
            .feature_names
            .iter()
            .enumerate()
            .filter(|(i, _)| result.support[*i])
            .map(|(_, n)| n)
            .collect();
        assert_eq!(remaining, survivors);
        // The elimination order visits each dropped feature exactly once
        // and never a selected one.
        for name in &result.elimination_order {
            let idx = result.feature_names.iter().position(|n| n == name).unwrap();
            assert!(!result.support[idx]);
        }
        assert_eq!(
            result.elimination_order.len(),
            table.n_features() - 3
        );
    }

    #[test]
    fn selection_is_nested_across_targets() {
        let table = planted_table(300, 10, 13);
        let larger = rfe_select(&table, 6, 1, 0).unwrap();
        let smaller = rfe_select(&table, 2, 1, 0).unwrap();
        for name in smaller.selected_features() {
            assert!(
                larger.selected_features().contains(&name),
                "{name} selected at n=2 but not at n=6"
            );
        }
        // And the shared prefix of the elimination order is identical.
        assert_eq!(
            larger.elimination_order,
            smaller.elimination_order[..larger.elimination_order.len()]
        );
    }

    #[test]
    fn column_permutation_permutes_the_result() {
        let table = planted_table(300, 8, 17);
        let d = table.n_features();
        // A fixed scramble: reverse order.
        let permutation: Vec<usize> = (0..d).rev().collect();
        let permuted_names: Vec<String> = permutation
            .iter()
            .map(|&j| table.column_names[j].clone())
            .collect();
        let permuted = table.select_features(&permuted_names).unwrap();

        let base = rfe_select(&table, 3, 1, 0).unwrap();
        let result = rfe_select(&permuted, 3, 1, 0).unwrap();
        for (pos, &orig) in permutation.iter().enumerate() {
            assert_eq!(result.support[pos], base.support[orig]);
            assert_eq!(result.ranking[pos], base.ranking[orig]);
        }
        assert_eq!(result.elimination_order, base.elimination_order);
    }

    #[test]
    fn bounds_are_enforced() {
        let table = planted_table(100, 4, 19);
        let d = table.n_features();
        assert!(matches!(
            rfe_select(&table, 0, 1, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            rfe_select(&table, d, 1, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            rfe_select(&table, 2, 0, 0),
            Err(Error::Parameter(_))
        ));
        assert!(rfe_select(&table, d - 1, 1, 0).is_ok());
    }

    /// Holdout accuracy of a fresh estimator, for sweep scoring.
    fn holdout_accuracy(table: &FeatureTable) -> Result<f64> {
        let n = table.n_rows();
        let cut = (n * 7) / 10;
        let train = table.subset_rows(&(0..cut).collect::<Vec<_>>())?;
        let test = table.subset_rows(&(cut..n).collect::<Vec<_>>())?;
        let model = LogisticModel::fit(train.data.view(), &train.labels)?;
        Ok(model.accuracy(test.data.view(), &test.labels))
    }

    #[test]
    fn sweep_accuracy_plateaus_once_signal_is_covered() {
        let table = planted_table(1000, 20, 23);
        let points = rfe_sweep(&table, 1..=5, 1, 0, holdout_accuracy).unwrap();
        let sizes: Vec<usize> = points.iter().map(|(n, _)| *n).collect();
        assert_eq!(sizes, vec![1, 2, 3, 4, 5]);
        let acc: Vec<f64> = points.iter().map(|(_, a)| *a).collect();
        for later in &acc[1..] {
            assert!(
                *later > acc[0] + 0.05,
                "two-feature accuracy {later} did not improve on one-feature {}",
                acc[0]
            );
        }
        let plateau = acc[1..].iter().copied().fold(0.0, f64::max)
            - acc[1..].iter().copied().fold(1.0, f64::min);
        assert!(plateau < 0.05, "plateau spread {plateau}");
    }

    #[test]
    fn sweep_handles_degenerate_ranges() {
        let table = planted_table(200, 6, 29);
        let points = rfe_sweep(&table, 3..=3, 1, 0, holdout_accuracy).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].0, 3);
        assert!(matches!(
            rfe_sweep(&table, 3..=2, 1, 0, holdout_accuracy),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            rfe_sweep(&table, 1..=8, 1, 0, holdout_accuracy),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn json_artifact_has_per_feature_entries() {
        let table = planted_table(200, 4, 31);
        let result = rfe_select(&table, 2, 1, 0).unwrap();
        let value = result.to_json();
        let object = value.as_object().unwrap();
        assert_eq!(object.len(), 6);
        let entry = object.get("x1").unwrap();
        assert!(entry.get("selected").unwrap().is_boolean());
        assert!(entry.get("rank").unwrap().as_u64().unwrap() >= 1);
        let selected: usize = object
            .values()
            .filter(|e| e.get("selected").unwrap().as_bool().unwrap())
            .count();
        assert_eq!(selected, 2);
    }
}
