//! Small dense solvers for the surrogate fits: Cholesky factorization,
//! weighted ridge regression, and weighted R². Systems here are tiny
//! (features + intercept), so plain O(n³) routines are plenty.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Solve `a·x = b` for symmetric positive-definite `a` via Cholesky
/// (a = L·Lᵀ, then two triangular solves).
pub(crate) fn cholesky_solve(a: &Array2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::Shape(format!(
            "cannot solve {}x{} system with {} right-hand values",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::Numeric(format!(
                        "matrix is not positive definite (pivot {sum} at {i})"
                    )));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    // Forward solve L·z = b, then back solve Lᵀ·x = z.
    let mut z = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * z[k];
        }
        z[i] = sum / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = z[i];
        for k in i + 1..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    Ok(x)
}

/// Weighted ridge fit of `y ≈ x·β + β₀`.
///
/// Minimizes Σᵢ wᵢ(yᵢ − xᵢ·β − β₀)² + λ‖β‖²; the intercept is not
/// penalized. Returns `(coefficients, intercept)`.
pub(crate) fn weighted_ridge(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    weights: &[f64],
    lambda: f64,
) -> Result<(Array1<f64>, f64)> {
    let (n, d) = x.dim();
    if y.len() != n || weights.len() != n {
        return Err(Error::Shape(format!(
            "{n} rows but {} targets and {} weights",
            y.len(),
            weights.len()
        )));
    }
    if n == 0 {
        return Err(Error::Shape("cannot fit on an empty sample".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Parameter(format!(
            "ridge penalty must be non-negative, got {lambda}"
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Numeric("weights must be finite and non-negative".into()));
    }

    // Normal equations on the intercept-augmented design: the extra
    // leading column of ones carries β₀ and skips the penalty.
    let m = d + 1;
    let mut gram = Array2::<f64>::zeros((m, m));
    let mut rhs = Array1::<f64>::zeros(m);
    for i in 0..n {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        let row = x.row(i);
        gram[[0, 0]] += w;
        rhs[0] += w * y[i];
        for a in 0..d {
            let xa = row[a];
            gram[[0, a + 1]] += w * xa;
            rhs[a + 1] += w * xa * y[i];
            for b in a..d {
                gram[[a + 1, b + 1]] += w * xa * row[b];
            }
        }
    }
    for a in 1..m {
        gram[[a, a]] += lambda;
        for b in 0..a {
            gram[[a, b]] = gram[[b, a]];
        }
    }
    let beta = cholesky_solve(&gram, rhs.view())?;
    let intercept = beta[0];
    Ok((beta.slice(ndarray::s![1..]).to_owned(), intercept))
}

/// Weighted coefficient of determination, clamped to [0, 1].
///
/// A constant target counts as perfectly explained only when the
/// residuals are (numerically) zero too.
pub(crate) fn weighted_r2(y_true: ArrayView1<f64>, y_pred: ArrayView1<f64>, weights: &[f64]) -> f64 {
    let total_weight: f64 = weights.iter().sum();
    if total_weight <= 0.0 {
        return 0.0;
    }
    let mean: f64 = y_true
        .iter()
        .zip(weights)
        .map(|(y, w)| w * y)
        .sum::<f64>()
        / total_weight;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((t, p), w) in y_true.iter().zip(y_pred.iter()).zip(weights) {
        ss_res += w * (t - p).powi(2);
        ss_tot += w * (t - mean).powi(2);
    }
    if ss_tot == 0.0 {
        let scale = y_true.iter().map(|v| v.abs()).fold(1.0, f64::max);
        return if ss_res <= 1e-12 * scale { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Axis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_a_known_spd_system() {
        // a = [[4,2],[2,3]], b = [10, 9] → x = [1.5, 2]
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let x = cholesky_solve(&a, array![10.0, 9.0].view()).unwrap();
        assert!((x[0] - 1.5).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_matrices() {
        let a = array![[1.0, 2.0], [2.0, 1.0]]; // eigenvalues 3, −1
        assert!(matches!(
            cholesky_solve(&a, array![1.0, 1.0].view()),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn near_zero_penalty_recovers_an_exact_linear_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((40, 3), |_| rng.random_range(-1.0..1.0));
        let y: Array1<f64> = x
            .axis_iter(Axis(0))
            .map(|r| 2.0 * r[0] - 0.5 * r[1] + 3.0 * r[2] + 7.0)
            .collect();
        let w = vec![1.0; 40];
        let (beta, intercept) = weighted_ridge(x.view(), y.view(), &w, 1e-10).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-6);
        assert!((beta[1] + 0.5).abs() < 1e-6);
        assert!((beta[2] - 3.0).abs() < 1e-6);
        assert!((intercept - 7.0).abs() < 1e-6);
        let predictions: Array1<f64> = x
            .axis_iter(Axis(0))
            .map(|r| beta.dot(&r) + intercept)
            .collect();
        assert!(weighted_r2(y.view(), predictions.view(), &w) > 0.999_999);
    }

    #[test]
    fn integer_weights_match_duplicated_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((12, 2), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(12, |_| rng.random_range(-1.0..1.0));
        let weights: Vec<f64> = (0..12).map(|i| f64::from(1 + (i % 3) as u32)).collect();

        let mut x_dup = Vec::new();
        let mut y_dup = Vec::new();
        for i in 0..12 {
            for _ in 0..weights[i] as usize {
                x_dup.push([x[[i, 0]], x[[i, 1]]]);
                y_dup.push(y[i]);
            }
        }
        let n_dup = x_dup.len();
        let x_dup = Array2::from_shape_fn((n_dup, 2), |(i, j)| x_dup[i][j]);
        let y_dup = Array1::from_vec(y_dup);

        let (b_w, i_w) = weighted_ridge(x.view(), y.view(), &weights, 1e-3).unwrap();
        let (b_d, i_d) = weighted_ridge(x_dup.view(), y_dup.view(), &vec![1.0; n_dup], 1e-3).unwrap();
        assert!((b_w[0] - b_d[0]).abs() < 1e-10);
        assert!((b_w[1] - b_d[1]).abs() < 1e-10);
        assert!((i_w - i_d).abs() < 1e-10);
    }

    #[test]
    fn intercept_is_unpenalized() {
        // All-zero features with a huge penalty: β shrinks to 0 but the
        // intercept must still land on the weighted mean.
        let x = Array2::<f64>::zeros((4, 1));
        let y = array![10.0, 10.0, 30.0, 30.0];
        let w = [1.0, 1.0, 1.0, 3.0];
        let (beta, intercept) = weighted_ridge(x.view(), y.view(), &w, 1e6).unwrap();
        assert_eq!(beta[0], 0.0);
        let expected = (10.0 + 10.0 + 30.0 + 3.0 * 30.0) / 6.0;
        assert!((intercept - expected).abs() < 1e-9);
    }

    #[test]
    fn r2_conventions() {
        let y = array![1.0, 2.0, 3.0];
        let w = [1.0, 1.0, 1.0];
        assert_eq!(weighted_r2(y.view(), y.view(), &w), 1.0);
        // Wildly wrong predictions clamp at zero rather than going negative.
        let bad = array![100.0, -50.0, 7.0];
        assert_eq!(weighted_r2(y.view(), bad.view(), &w), 0.0);
        // Constant target: perfect only when matched.
        let flat = array![2.0, 2.0, 2.0];
        assert_eq!(weighted_r2(flat.view(), flat.view(), &w), 1.0);
        assert_eq!(weighted_r2(flat.view(), y.view(), &w), 0.0);
    }

    #[test]
    fn shape_errors_are_reported() {
        let x = Array2::<f64>::zeros((3, 2));
        let y = array![1.0, 2.0];
        assert!(matches!(
            weighted_ridge(x.view(), y.view(), &[1.0; 3], 0.1),
            Err(Error::Shape(_))
        ));
        let a = Array2::<f64>::eye(2);
        assert!(matches!(
            cholesky_solve(&a, array![1.0].view()),
            Err(Error::Shape(_))
        ));
    }
}
