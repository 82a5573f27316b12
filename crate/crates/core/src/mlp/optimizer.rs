//! Parameter-update rules: adam and rmsprop.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{DenseLayer, LayerGrads};

/// adam first-moment decay.
pub const ADAM_BETA1: f64 = 0.9;
/// adam second-moment decay.
pub const ADAM_BETA2: f64 = 0.999;
/// rmsprop mean-square decay.
pub const RMSPROP_RHO: f64 = 0.9;
/// Denominator fuzz shared by both rules.
pub const EPSILON: f64 = 1e-8;

/// Which update rule a model trains with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Rmsprop,
}

impl std::str::FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "adam" => Ok(Optimizer::Adam),
            "rmsprop" => Ok(Optimizer::Rmsprop),
            other => Err(format!("unknown optimizer {other:?} (adam|rmsprop)")),
        }
    }
}

impl std::fmt::Display for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Optimizer::Adam => "adam",
            Optimizer::Rmsprop => "rmsprop",
        })
    }
}

/// Moment accumulators for one dense layer.
#[derive(Debug, Clone)]
struct LayerState {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
}

/// Optimizer state across all dense layers of one model.
#[derive(Debug, Clone)]
pub(crate) struct OptimizerState {
    kind: Optimizer,
    learning_rate: f64,
    step: u64,
    layers: Vec<LayerState>,
}

impl OptimizerState {
    pub(crate) fn new(kind: Optimizer, learning_rate: f64, shapes: &[(usize, usize)]) -> Self {
        let layers = shapes
            .iter()
            .map(|&(rows, cols)| LayerState {
                m_w: Array2::zeros((rows, cols)),
                v_w: Array2::zeros((rows, cols)),
                m_b: Array1::zeros(cols),
                v_b: Array1::zeros(cols),
            })
            .collect();
        OptimizerState {
            kind,
            learning_rate,
            step: 0,
            layers,
        }
    }

    /// Apply one update step to all dense layers in place.
    pub(crate) fn apply(&mut self, layers: &mut [DenseLayer], grads: &[LayerGrads]) {
        self.step += 1;
        let lr = self.learning_rate;
        match self.kind {
            Optimizer::Adam => {
                let bc1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
                let bc2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
                for (i, g) in grads.iter().enumerate() {
                    let s = &mut self.layers[i];
                    let l = &mut layers[i];
                    adam_step(&mut s.m_w, &mut s.v_w, &mut l.weights, &g.weights, lr, bc1, bc2);
                    adam_step_1d(&mut s.m_b, &mut s.v_b, &mut l.biases, &g.biases, lr, bc1, bc2);
                }
            }
            Optimizer::Rmsprop => {
                for (i, g) in grads.iter().enumerate() {
                    let s = &mut self.layers[i];
                    let l = &mut layers[i];
                    rmsprop_step(&mut s.v_w, &mut l.weights, &g.weights, lr);
                    rmsprop_step_1d(&mut s.v_b, &mut l.biases, &g.biases, lr);
                }
            }
        }
    }
}

fn adam_step(
    m: &mut Array2<f64>,
    v: &mut Array2<f64>,
    w: &mut Array2<f64>,
    g: &Array2<f64>,
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    ndarray::Zip::from(m)
        .and(v)
        .and(w)
        .and(g)
        .for_each(|m, v, w, &g| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        });
}

fn adam_step_1d(
    m: &mut Array1<f64>,
    v: &mut Array1<f64>,
    b: &mut Array1<f64>,
    g: &Array1<f64>,
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    ndarray::Zip::from(m)
        .and(v)
        .and(b)
        .and(g)
        .for_each(|m, v, b, &g| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *b -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        });
}

fn rmsprop_step(v: &mut Array2<f64>, w: &mut Array2<f64>, g: &Array2<f64>, lr: f64) {
    ndarray::Zip::from(v).and(w).and(g).for_each(|v, w, &g| {
        *v = RMSPROP_RHO * *v + (1.0 - RMSPROP_RHO) * g * g;
        *w -= lr * g / (v.sqrt() + EPSILON);
    });
}

fn rmsprop_step_1d(v: &mut Array1<f64>, b: &mut Array1<f64>, g: &Array1<f64>, lr: f64) {
    ndarray::Zip::from(v).and(b).and(g).for_each(|v, b, &g| {
        *v = RMSPROP_RHO * *v + (1.0 - RMSPROP_RHO) * g * g;
        *b -= lr * g / (v.sqrt() + EPSILON);
    });
}
