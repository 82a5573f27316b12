//! From-scratch multilayer perceptron for binary classification.
//!
//! Networks are stacks of dense layers with optional dropout, trained by
//! mini-batch backpropagation on binary cross-entropy with adam or
//! rmsprop updates. Two ready-made architectures are provided:
//! [`ModelSpec::model1`] (two hidden layers, rmsprop) and
//! [`ModelSpec::model2`] (four hidden layers with mid-stack dropout,
//! adam). All randomness — initialization, batch shuffling, dropout
//! masks — flows from the spec's seed, so runs are reproducible
//! bit-for-bit.

mod optimizer;

pub use optimizer::{Optimizer, ADAM_BETA1, ADAM_BETA2, EPSILON, RMSPROP_RHO};

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use optimizer::OptimizerState;

/// Logits are clamped to ±this before the sigmoid; at 36 the result is
/// still strictly inside (0, 1) in f64.
pub const LOGIT_CLAMP: f64 = 36.0;

/// Probabilities are clamped to [ε, 1−ε] before logs in the loss.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

pub(crate) fn stable_sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

impl Activation {
    fn apply_in_place(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Sigmoid => z.mapv_inplace(stable_sigmoid),
            Activation::Linear => {}
        }
    }

    /// φ′(z) computed from the activation output a = φ(z).
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

/// One layer in an architecture description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Dense { units: usize, activation: Activation },
    Dropout { rate: f64 },
}

/// Full architecture plus training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_width: usize,
    pub layers: Vec<LayerSpec>,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

/// Training defaults shared by both stock architectures.
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_EPOCHS: usize = 130;
pub const DEFAULT_DROPOUT_RATE: f64 = 0.2;

impl ModelSpec {
    /// Two 100-unit relu hidden layers into a sigmoid output; rmsprop.
    pub fn model1(input_width: usize, seed: u64) -> ModelSpec {
        ModelSpec {
            input_width,
            layers: vec![
                LayerSpec::Dense {
                    units: 100,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 100,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Sigmoid,
                },
            ],
            optimizer: Optimizer::Rmsprop,
            learning_rate: DEFAULT_LEARNING_RATE,
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: DEFAULT_EPOCHS,
            seed,
        }
    }

    /// Four 100-unit relu hidden layers with dropout(0.2) mid-stack into
    /// a sigmoid output; adam.
    pub fn model2(input_width: usize, seed: u64) -> ModelSpec {
        ModelSpec {
            input_width,
            layers: vec![
                LayerSpec::Dense {
                    units: 100,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 100,
                    activation: Activation::Relu,
                },
                LayerSpec::Dropout {
                    rate: DEFAULT_DROPOUT_RATE,
                },
                LayerSpec::Dense {
                    units: 100,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 100,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Sigmoid,
                },
            ],
            optimizer: Optimizer::Adam,
            learning_rate: DEFAULT_LEARNING_RATE,
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: DEFAULT_EPOCHS,
            seed,
        }
    }

    /// Replace every dropout layer's rate.
    pub fn with_dropout_rate(mut self, rate: f64) -> ModelSpec {
        for layer in &mut self.layers {
            if let LayerSpec::Dropout { rate: r } = layer {
                *r = rate;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 {
            return Err(Error::Build("input width must be at least 1".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Build("at least one layer required".into()));
        }
        match self.layers.last() {
            Some(LayerSpec::Dense {
                units: 1,
                activation: Activation::Sigmoid,
            }) => {}
            other => {
                return Err(Error::Build(format!(
                    "final layer must be a single sigmoid unit, got {other:?}"
                )))
            }
        }
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                LayerSpec::Dense { units, .. } if *units == 0 => {
                    return Err(Error::Build(format!("layer {i} has zero units")));
                }
                LayerSpec::Dropout { rate } if !(*rate >= 0.0 && *rate < 1.0) => {
                    return Err(Error::Build(format!(
                        "dropout rate must be in [0, 1), got {rate}"
                    )));
                }
                _ => {}
            }
        }
        // A zero rate is a legal degenerate: training becomes a no-op.
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Build(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Build("batch size must be at least 1".into()));
        }
        Ok(())
    }

    /// Widths of the dense layers' weight matrices, in order.
    fn dense_shapes(&self) -> Vec<(usize, usize)> {
        let mut fan_in = self.input_width;
        let mut shapes = Vec::new();
        for layer in &self.layers {
            if let LayerSpec::Dense { units, .. } = layer {
                shapes.push((fan_in, *units));
                fan_in = *units;
            }
        }
        shapes
    }
}

/// Weights, biases, and activation of one dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// (fan_in, units).
    pub(crate) weights: Array2<f64>,
    pub(crate) biases: Array1<f64>,
    pub(crate) activation: Activation,
}

impl DenseLayer {
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }
}

/// Gradient of the mean loss for one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

/// Per-epoch loss trace and final fit quality of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per epoch; length equals the spec's epochs.
    pub epoch_losses: Vec<f64>,
    /// Fraction of training rows classified correctly after training.
    pub final_accuracy: f64,
    pub wall_time_s: f64,
}

/// A feed-forward binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    spec: ModelSpec,
    layers: Vec<DenseLayer>,
}

struct ForwardTrace {
    /// `activations[0]` is the input; `activations[i + 1]` is the output
    /// of spec layer `i`.
    activations: Vec<Array2<f64>>,
    /// Inverted-dropout masks aligned with spec layers; `None` outside
    /// dropout layers or in inference mode.
    masks: Vec<Option<Array2<f64>>>,
}

impl MlpModel {
    /// Initialize a network: He-uniform weights (±√(6/fan_in)) drawn from
    /// the seed, zero biases.
    pub fn build(spec: ModelSpec) -> Result<MlpModel> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut fan_in = spec.input_width;
        let mut layers = Vec::new();
        for layer in &spec.layers {
            if let LayerSpec::Dense { units, activation } = layer {
                let limit = (6.0 / fan_in as f64).sqrt();
                let weights =
                    Array2::from_shape_fn((fan_in, *units), |_| rng.random_range(-limit..limit));
                layers.push(DenseLayer {
                    weights,
                    biases: Array1::zeros(*units),
                    activation: *activation,
                });
                fan_in = *units;
            }
        }
        Ok(MlpModel { spec, layers })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn dense_layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Overwrite one dense layer's parameters (for hand-built networks).
    pub fn set_dense_layer(
        &mut self,
        index: usize,
        weights: Array2<f64>,
        biases: Array1<f64>,
    ) -> Result<()> {
        let layer = self.layers.get_mut(index).ok_or_else(|| {
            Error::Shape(format!("no dense layer {index}"))
        })?;
        if weights.dim() != layer.weights.dim() || biases.len() != layer.biases.len() {
            return Err(Error::Shape(format!(
                "layer {index} expects weights {:?} and biases {}, got {:?} and {}",
                layer.weights.dim(),
                layer.biases.len(),
                weights.dim(),
                biases.len()
            )));
        }
        layer.weights = weights;
        layer.biases = biases;
        Ok(())
    }

    fn check_input_width(&self, width: usize) -> Result<()> {
        if width != self.spec.input_width {
            return Err(Error::Shape(format!(
                "input width {width}, model expects {}",
                self.spec.input_width
            )));
        }
        Ok(())
    }

    /// Inference-mode forward pass: dense layers only, dropout skipped.
    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut a = x.to_owned();
        for layer in &self.layers {
            let mut z = a.dot(&layer.weights) + &layer.biases;
            layer.activation.apply_in_place(&mut z);
            a = z;
        }
        a
    }

    /// Training-mode forward pass recording per-layer activations and
    /// dropout masks. Without an rng, dropout layers pass through.
    fn forward_trace(&self, x: ArrayView2<f64>, mut rng: Option<&mut ChaCha8Rng>) -> ForwardTrace {
        let mut activations = Vec::with_capacity(self.spec.layers.len() + 1);
        let mut masks = vec![None; self.spec.layers.len()];
        activations.push(x.to_owned());
        let mut dense_idx = 0;
        for (li, layer) in self.spec.layers.iter().enumerate() {
            let prev = activations.last().unwrap();
            let next = match layer {
                LayerSpec::Dense { .. } => {
                    let dense = &self.layers[dense_idx];
                    dense_idx += 1;
                    let mut z = prev.dot(&dense.weights) + &dense.biases;
                    dense.activation.apply_in_place(&mut z);
                    z
                }
                LayerSpec::Dropout { rate } => match rng.as_deref_mut() {
                    Some(rng) if *rate > 0.0 => {
                        let keep = 1.0 - rate;
                        let mask = Array2::from_shape_fn(prev.dim(), |_| {
                            if rng.random::<f64>() < *rate {
                                0.0
                            } else {
                                1.0 / keep
                            }
                        });
                        masks[li] = Some(mask.clone());
                        prev * &mask
                    }
                    _ => prev.clone(),
                },
            };
            activations.push(next);
        }
        ForwardTrace { activations, masks }
    }

    /// Backpropagate the mean binary cross-entropy through a trace;
    /// returns per-dense-layer gradients and the batch loss.
    fn backward(&self, trace: &ForwardTrace, y: &[u8]) -> (Vec<LayerGrads>, f64) {
        let n = y.len() as f64;
        let output = trace.activations.last().unwrap();
        let loss = bce_loss(output, y);

        // Output layer: combined sigmoid + cross-entropy gradient
        // dL/dz = (p − y)/n.
        let mut delta = output.clone();
        for (row, &label) in delta.rows_mut().into_iter().zip(y) {
            // single output column
            for v in row {
                *v = (*v - f64::from(label)) / n;
            }
        }
        let mut delta_is_preactivation = true;

        let mut grads: Vec<Option<LayerGrads>> = (0..self.layers.len()).map(|_| None).collect();
        let mut dense_idx = self.layers.len();
        for li in (0..self.spec.layers.len()).rev() {
            match &self.spec.layers[li] {
                LayerSpec::Dense { .. } => {
                    dense_idx -= 1;
                    let layer = &self.layers[dense_idx];
                    if !delta_is_preactivation {
                        let a_out = &trace.activations[li + 1];
                        delta.zip_mut_with(a_out, |d, &a| {
                            *d *= layer.activation.derivative_from_output(a);
                        });
                    }
                    let a_prev = &trace.activations[li];
                    let d_weights = a_prev.t().dot(&delta);
                    let d_biases = delta.sum_axis(Axis(0));
                    delta = delta.dot(&layer.weights.t());
                    delta_is_preactivation = false;
                    grads[dense_idx] = Some(LayerGrads {
                        weights: d_weights,
                        biases: d_biases,
                    });
                }
                LayerSpec::Dropout { .. } => {
                    if let Some(mask) = &trace.masks[li] {
                        delta *= mask;
                    }
                }
            }
        }
        (grads.into_iter().map(|g| g.unwrap()).collect(), loss)
    }

    /// P(class 1) for one instance; strictly inside (0, 1).
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.check_input_width(x.len())?;
        let input = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Ok(self.forward(input)[[0, 0]])
    }

    /// P(class 1) for each row.
    pub fn predict_proba_batch(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.check_input_width(x.ncols())?;
        Ok(self.forward(x).column(0).to_vec())
    }

    /// Hard label at a threshold; ties go to class 1.
    pub fn classify(&self, x: &[f64], threshold: f64) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? >= threshold))
    }

    /// Analytic gradient of the mean loss on a batch, dropout disabled.
    pub fn gradients(&self, x: ArrayView2<f64>, y: &[u8]) -> Result<Vec<LayerGrads>> {
        self.validate_batch(x, y)?;
        let trace = self.forward_trace(x, None);
        Ok(self.backward(&trace, y).0)
    }

    /// Mean binary cross-entropy on a batch, dropout disabled.
    pub fn loss(&self, x: ArrayView2<f64>, y: &[u8]) -> Result<f64> {
        self.validate_batch(x, y)?;
        Ok(bce_loss(&self.forward(x), y))
    }

    fn validate_batch(&self, x: ArrayView2<f64>, y: &[u8]) -> Result<()> {
        self.check_input_width(x.ncols())?;
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        if y.iter().any(|l| *l > 1) {
            return Err(Error::Label("labels must be 0 or 1".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("batch contains non-finite values".into()));
        }
        Ok(())
    }

    /// Mini-batch training on binary cross-entropy.
    ///
    /// Rows are reshuffled every epoch and dropout masks redrawn, all
    /// from a stream derived from the spec seed, so identical inputs
    /// train identically.
    pub fn train(&mut self, x: ArrayView2<f64>, y: &[u8]) -> Result<TrainReport> {
        self.validate_batch(x, y)?;
        let started = Instant::now();
        let mut optimizer = OptimizerState::new(
            self.spec.optimizer,
            self.spec.learning_rate,
            &self.spec.dense_shapes(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.spec.seed, 1));
        let n = x.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        let mut epoch_losses = Vec::with_capacity(self.spec.epochs);
        for epoch in 0..self.spec.epochs {
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let mut weighted_loss = 0.0;
            for batch in order.chunks(self.spec.batch_size) {
                let xb = x.select(Axis(0), batch);
                let yb: Vec<u8> = batch.iter().map(|&i| y[i]).collect();
                let trace = self.forward_trace(xb.view(), Some(&mut rng));
                let (grads, loss) = self.backward(&trace, &yb);
                weighted_loss += loss * yb.len() as f64;
                optimizer.apply(&mut self.layers, &grads);
            }
            let epoch_loss = weighted_loss / n as f64;
            if !epoch_loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    message: format!("loss became {epoch_loss}"),
                });
            }
            epoch_losses.push(epoch_loss);
        }
        let probabilities = self.forward(x);
        let correct = probabilities
            .column(0)
            .iter()
            .zip(y)
            .filter(|(p, &label)| u8::from(**p >= 0.5) == label)
            .count();
        Ok(TrainReport {
            epoch_losses,
            final_accuracy: correct as f64 / n as f64,
            wall_time_s: started.elapsed().as_secs_f64(),
        })
    }
}

/// Mean binary cross-entropy −[y·ln p + (1−y)·ln(1−p)] with clamped
/// probabilities.
fn bce_loss(probabilities: &Array2<f64>, y: &[u8]) -> f64 {
    let mut total = 0.0;
    for (p, &label) in probabilities.column(0).iter().zip(y) {
        let p = p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
        total -= if label == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    total / y.len() as f64
}

/// Compare analytic gradients against central finite differences
/// (h = 1e−5) over every parameter; returns the maximum relative error.
///
/// Intended for small models; errors when the model has more than 500
/// parameters.
pub fn gradient_check(model: &mut MlpModel, x: ArrayView2<f64>, y: &[u8]) -> Result<f64> {
    const H: f64 = 1e-5;
    if model.param_count() > 500 {
        return Err(Error::Parameter(format!(
            "gradient check is for small models; {} parameters exceed 500",
            model.param_count()
        )));
    }
    let analytic = model.gradients(x, y)?;
    let mut max_rel: f64 = 0.0;
    for li in 0..model.layers.len() {
        let (rows, cols) = model.layers[li].weights.dim();
        for r in 0..rows {
            for c in 0..cols {
                let original = model.layers[li].weights[[r, c]];
                model.layers[li].weights[[r, c]] = original + H;
                let plus = model.loss(x, y)?;
                model.layers[li].weights[[r, c]] = original - H;
                let minus = model.loss(x, y)?;
                model.layers[li].weights[[r, c]] = original;
                let numeric = (plus - minus) / (2.0 * H);
                max_rel = max_rel.max(relative_error(analytic[li].weights[[r, c]], numeric));
            }
        }
        for b in 0..model.layers[li].biases.len() {
            let original = model.layers[li].biases[b];
            model.layers[li].biases[b] = original + H;
            let plus = model.loss(x, y)?;
            model.layers[li].biases[b] = original - H;
            let minus = model.loss(x, y)?;
            model.layers[li].biases[b] = original;
            let numeric = (plus - minus) / (2.0 * H);
            max_rel = max_rel.max(relative_error(analytic[li].biases[b], numeric));
        }
    }
    Ok(max_rel)
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny_spec(seed: u64) -> ModelSpec {
        ModelSpec {
            input_width: 4,
            layers: vec![
                LayerSpec::Dense {
                    units: 5,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 3,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Sigmoid,
                },
            ],
            optimizer: Optimizer::Adam,
            learning_rate: 0.01,
            batch_size: 8,
            epochs: 10,
            seed,
        }
    }

    fn seeded_batch(seed: u64, n: usize, width: usize) -> (Array2<f64>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, width), |_| rng.random_range(-2.0..2.0));
        let y = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        (x, y)
    }

    #[test]
    fn stock_model_has_expected_parameter_count() {
        let model = MlpModel::build(ModelSpec::model1(10, 0)).unwrap();
        // 10·100+100 + 100·100+100 + 100·1+1
        assert_eq!(model.param_count(), 11_301);
        assert_eq!(model.spec().optimizer, Optimizer::Rmsprop);
        assert_eq!(model.dense_layers().len(), 3);
    }

    #[test]
    fn deeper_model_layout() {
        let spec = ModelSpec::model2(12, 0);
        assert_eq!(spec.optimizer, Optimizer::Adam);
        let dense: Vec<usize> = spec
            .layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Dense { units, .. } => Some(*units),
                _ => None,
            })
            .collect();
        assert_eq!(dense, vec![100, 100, 100, 100, 1]);
        let dropouts: Vec<f64> = spec
            .layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Dropout { rate } => Some(*rate),
                _ => None,
            })
            .collect();
        assert_eq!(dropouts, vec![0.2]);
        assert!(MlpModel::build(spec).is_ok());
    }

    #[test]
    fn initialization_is_seed_deterministic() {
        let a = MlpModel::build(tiny_spec(9)).unwrap();
        let b = MlpModel::build(tiny_spec(9)).unwrap();
        let c = MlpModel::build(tiny_spec(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for layer in a.dense_layers() {
            assert!(layer.biases().iter().all(|b| *b == 0.0));
            let limit = (6.0 / layer.weights().nrows() as f64).sqrt();
            assert!(layer.weights().iter().all(|w| w.abs() <= limit));
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = tiny_spec(0);
        spec.layers.clear();
        assert!(matches!(MlpModel::build(spec), Err(Error::Build(_))));

        let mut spec = tiny_spec(0);
        spec.layers.push(LayerSpec::Dense {
            units: 2,
            activation: Activation::Sigmoid,
        });
        assert!(MlpModel::build(spec).is_err());

        let mut spec = tiny_spec(0);
        spec.layers.insert(0, LayerSpec::Dropout { rate: 1.0 });
        assert!(MlpModel::build(spec).is_err());

        let mut spec = tiny_spec(0);
        spec.learning_rate = -0.1;
        assert!(MlpModel::build(spec).is_err());

        let mut spec = tiny_spec(0);
        spec.batch_size = 0;
        assert!(MlpModel::build(spec).is_err());
    }

    #[test]
    fn zeroed_network_predicts_one_half() {
        let mut model = MlpModel::build(tiny_spec(1)).unwrap();
        for i in 0..3 {
            let dim = model.dense_layers()[i].weights().dim();
            let units = model.dense_layers()[i].biases().len();
            model
                .set_dense_layer(i, Array2::zeros(dim), Array1::zeros(units))
                .unwrap();
        }
        for x in [[0.0; 4], [1.0; 4], [-3.5; 4]] {
            assert_eq!(model.predict_proba(&x).unwrap(), 0.5);
        }
    }

    #[test]
    fn hand_built_unit_matches_closed_form() {
        let spec = ModelSpec {
            input_width: 1,
            layers: vec![
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Sigmoid,
                },
            ],
            optimizer: Optimizer::Adam,
            learning_rate: 0.01,
            batch_size: 1,
            epochs: 1,
            seed: 0,
        };
        let mut model = MlpModel::build(spec).unwrap();
        model
            .set_dense_layer(0, array![[1.0]], array![0.0])
            .unwrap();
        model
            .set_dense_layer(1, array![[1.0]], array![0.0])
            .unwrap();
        let p = model.predict_proba(&[2.0]).unwrap();
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((p - expected).abs() < 1e-12);
        assert!((p - 0.8808).abs() < 1e-4);
    }

    fn bias_only_model(bias: f64) -> MlpModel {
        let spec = ModelSpec {
            input_width: 1,
            layers: vec![LayerSpec::Dense {
                units: 1,
                activation: Activation::Sigmoid,
            }],
            optimizer: Optimizer::Adam,
            learning_rate: 0.01,
            batch_size: 1,
            epochs: 1,
            seed: 0,
        };
        let mut model = MlpModel::build(spec).unwrap();
        model
            .set_dense_layer(0, array![[0.0]], array![bias])
            .unwrap();
        model
    }

    #[test]
    fn classification_threshold_rules() {
        // p ≈ 0.91
        let model = bias_only_model((0.91f64 / 0.09).ln());
        assert!((model.predict_proba(&[0.0]).unwrap() - 0.91).abs() < 1e-9);
        assert_eq!(model.classify(&[0.0], 0.5).unwrap(), 1);
        // p ≈ 0.49
        let model = bias_only_model((0.49f64 / 0.51).ln());
        assert_eq!(model.classify(&[0.0], 0.5).unwrap(), 0);
        // p = 0.5 exactly: tie goes to class 1.
        let model = bias_only_model(0.0);
        assert_eq!(model.predict_proba(&[0.0]).unwrap(), 0.5);
        assert_eq!(model.classify(&[0.0], 0.5).unwrap(), 1);
    }

    #[test]
    fn width_mismatch_is_a_shape_error() {
        let model = MlpModel::build(tiny_spec(0)).unwrap();
        assert!(matches!(
            model.predict_proba(&[1.0, 2.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn probabilities_stay_strictly_inside_unit_interval() {
        let mut model = bias_only_model(0.0);
        model
            .set_dense_layer(0, array![[1e9]], array![0.0])
            .unwrap();
        let hi = model.predict_proba(&[1e9]).unwrap();
        let lo = model.predict_proba(&[-1e9]).unwrap();
        assert!(hi < 1.0 && hi > 0.99);
        assert!(lo > 0.0 && lo < 0.01);
    }

    #[test]
    fn logistic_gradient_matches_closed_form() {
        let spec = ModelSpec {
            input_width: 3,
            layers: vec![LayerSpec::Dense {
                units: 1,
                activation: Activation::Sigmoid,
            }],
            optimizer: Optimizer::Adam,
            learning_rate: 0.01,
            batch_size: 5,
            epochs: 1,
            seed: 3,
        };
        let model = MlpModel::build(spec).unwrap();
        let (x, y) = seeded_batch(17, 5, 3);
        let grads = model.gradients(x.view(), &y).unwrap();
        let probabilities = model.predict_proba_batch(x.view()).unwrap();
        let n = y.len() as f64;
        for j in 0..3 {
            let expected: f64 = probabilities
                .iter()
                .zip(&y)
                .enumerate()
                .map(|(i, (p, &label))| (p - f64::from(label)) * x[[i, j]])
                .sum::<f64>()
                / n;
            assert!((grads[0].weights[[j, 0]] - expected).abs() < 1e-12);
        }
        let expected_bias: f64 = probabilities
            .iter()
            .zip(&y)
            .map(|(p, &label)| p - f64::from(label))
            .sum::<f64>()
            / n;
        assert!((grads[0].biases[0] - expected_bias).abs() < 1e-12);
    }

    #[test]
    fn zero_batch_zero_weights_bias_gradient() {
        let model = {
            let mut m = bias_only_model(0.0);
            m.set_dense_layer(0, array![[0.0]], array![0.0]).unwrap();
            m
        };
        let x = Array2::zeros((4, 1));
        let y = vec![0, 1, 0, 0];
        let grads = model.gradients(x.view(), &y).unwrap();
        assert_eq!(grads[0].weights[[0, 0]], 0.0);
        let mean_y = 0.25;
        assert!((grads[0].biases[0] - (0.5 - mean_y)).abs() < 1e-15);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for seed in [11, 22, 33] {
            let mut model = MlpModel::build(tiny_spec(seed)).unwrap();
            let (x, y) = seeded_batch(seed ^ 0xABCD, 8, 4);
            let err = gradient_check(&mut model, x.view(), &y).unwrap();
            assert!(err < 1e-5, "seed {seed}: max relative error {err}");
        }
    }

    #[test]
    fn gradient_check_guards_model_size() {
        let mut model = MlpModel::build(ModelSpec::model1(10, 0)).unwrap();
        let (x, y) = seeded_batch(0, 4, 10);
        assert!(matches!(
            gradient_check(&mut model, x.view(), &y),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn xor_is_learned_exactly() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = vec![0u8, 1, 1, 0];
        let mut spec = ModelSpec::model1(2, 5);
        spec.epochs = 2000;
        let mut model = MlpModel::build(spec).unwrap();
        let report = model.train(x.view(), &y).unwrap();
        assert_eq!(report.epoch_losses.len(), 2000);
        assert_eq!(report.final_accuracy, 1.0);
    }

    fn blobs(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = u8::from(i % 2 == 1);
            let center = if label == 1 { 2.0 } else { -2.0 };
            x[[i, 0]] = center + rng.random_range(-0.5..0.5);
            x[[i, 1]] = center + rng.random_range(-0.5..0.5);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn separable_blobs_reach_high_accuracy_at_defaults() {
        let (x, y) = blobs(200, 42);
        let mut model = MlpModel::build(ModelSpec::model2(2, 7)).unwrap();
        let report = model.train(x.view(), &y).unwrap();
        assert_eq!(report.epoch_losses.len(), DEFAULT_EPOCHS);
        assert!(
            report.final_accuracy >= 0.99,
            "accuracy {}",
            report.final_accuracy
        );
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut spec = tiny_spec(4);
        spec.learning_rate = 0.0;
        spec.epochs = 5;
        let mut model = MlpModel::build(spec).unwrap();
        let before = model.clone();
        let (x, y) = seeded_batch(8, 16, 4);
        model.train(x.view(), &y).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn full_batch_loss_is_nonincreasing_early() {
        let (x, y) = blobs(64, 3);
        let mut spec = tiny_spec(6);
        spec.input_width = 2;
        spec.layers[0] = LayerSpec::Dense {
            units: 5,
            activation: Activation::Relu,
        };
        spec.batch_size = 64; // full batch
        spec.epochs = 10;
        spec.learning_rate = 1e-3;
        let mut model = MlpModel::build(spec).unwrap();
        let report = model.train(x.view(), &y).unwrap();
        for pair in report.epoch_losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn training_is_reproducible_bit_for_bit() {
        for optimizer in [Optimizer::Adam, Optimizer::Rmsprop] {
            let mut spec = ModelSpec::model2(4, 11);
            spec.optimizer = optimizer;
            spec.epochs = 8;
            spec.batch_size = 16;
            let (x, y) = seeded_batch(21, 48, 4);
            let mut a = MlpModel::build(spec.clone()).unwrap();
            let mut b = MlpModel::build(spec).unwrap();
            let ra = a.train(x.view(), &y).unwrap();
            let rb = b.train(x.view(), &y).unwrap();
            assert_eq!(a, b);
            assert_eq!(ra.epoch_losses, rb.epoch_losses);
        }
    }

    #[test]
    fn training_rejects_malformed_batches() {
        let mut model = MlpModel::build(tiny_spec(0)).unwrap();
        let (x, mut y) = seeded_batch(2, 8, 4);
        y[3] = 2;
        assert!(matches!(
            model.train(x.view(), &y),
            Err(Error::Label(_))
        ));
        let y = vec![0u8; 4];
        assert!(matches!(model.train(x.view(), &y), Err(Error::Shape(_))));
    }

    #[test]
    fn dropout_mask_preserves_expected_activation() {
        let spec = ModelSpec {
            input_width: 10,
            layers: vec![
                LayerSpec::Dropout { rate: 0.3 },
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Sigmoid,
                },
            ],
            optimizer: Optimizer::Adam,
            learning_rate: 0.01,
            batch_size: 1,
            epochs: 1,
            seed: 0,
        };
        let model = MlpModel::build(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x = Array2::from_elem((1, 10), 3.0);
        let mut total = 0.0;
        let passes = 10_000;
        for _ in 0..passes {
            let trace = model.forward_trace(x.view(), Some(&mut rng));
            // activations[1] is the dropout output.
            total += trace.activations[1].mean().unwrap();
        }
        let mean = total / passes as f64;
        assert!(
            (mean - 3.0).abs() < 0.02 * 3.0,
            "inverted dropout drifted: {mean}"
        );
    }

    #[test]
    fn inference_ignores_dropout() {
        let model = MlpModel::build(ModelSpec::model2(4, 13)).unwrap();
        let x = [0.3, -0.7, 1.1, 0.0];
        let first = model.predict_proba(&x).unwrap();
        for _ in 0..5 {
            assert_eq!(model.predict_proba(&x).unwrap(), first);
        }
    }

    #[test]
    fn serialized_model_reproduces_predictions() {
        let mut spec = tiny_spec(77);
        spec.epochs = 5;
        let (x, y) = seeded_batch(31, 32, 4);
        let mut model = MlpModel::build(spec).unwrap();
        model.train(x.view(), &y).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: MlpModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
        for row in x.rows() {
            let a = model.predict_proba(row.as_slice().unwrap()).unwrap();
            let b = back.predict_proba(row.as_slice().unwrap()).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}
