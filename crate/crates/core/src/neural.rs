//! Feedforward classifier: ReLU hidden layers, softmax output, mean
//! categorical cross-entropy, and plain mini-batch gradient descent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classic::{argmax, softmax_in_place};
use crate::error::ErrorCategory;
use crate::matrix::Matrix;
use crate::rng::{derive_seed_for, Xorshift64Star};

pub const DEFAULT_HIDDEN_LAYERS: usize = 6;
pub const DEFAULT_EPOCHS: usize = 100;
/// Shorter schedule kept as a named preset.
pub const SHORT_EPOCHS: usize = 25;
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("network config error: {0}")]
    Config(String),
    #[error("shape error: expected {expected}, found {found}")]
    Shape { expected: String, found: String },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
}

impl NeuralError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            NeuralError::Config(_) => ErrorCategory::Config,
            NeuralError::Shape { .. } => ErrorCategory::Data,
            NeuralError::Numerical(_) | NeuralError::Divergence { .. } => ErrorCategory::Numerical,
        }
    }
}

type Result<T> = std::result::Result<T, NeuralError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub output_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

/// `⌈(input + output) / 2⌉`.
pub fn default_hidden_width(input_dim: usize, output_dim: usize) -> usize {
    (input_dim + output_dim).div_ceil(2)
}

impl NetworkConfig {
    /// Six hidden layers of the default width and the default schedule.
    pub fn with_defaults(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden_layers: vec![default_hidden_width(input_dim, output_dim); DEFAULT_HIDDEN_LAYERS],
            output_dim,
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(NeuralError::Config(
                "input and output widths must be >= 1".into(),
            ));
        }
        if let Some(i) = self.hidden_layers.iter().position(|&w| w == 0) {
            return Err(NeuralError::Config(format!("hidden layer {i} has width 0")));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(NeuralError::Config(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(NeuralError::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_layers.len() + 2);
        w.push(self.input_dim);
        w.extend(&self.hidden_layers);
        w.push(self.output_dim);
        w
    }
}

/// One affine layer; `weights` is `(out × in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<Layer>,
}

impl NetworkParams {
    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.rows()
    }

    pub fn n_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    /// Flattened view over every parameter, layer by layer (weights then bias).
    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.as_mut_slice().iter_mut().chain(l.bias.iter_mut()))
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(l.bias.iter()))
    }
}

/// Uniform `±√(6 / fan_in)` weights from the seed's "init" stream, zero biases.
pub fn init_network(config: &NetworkConfig) -> Result<NetworkParams> {
    config.validate()?;
    let mut rng = Xorshift64Star::new(derive_seed_for(config.seed, "init"));
    let widths = config.widths();
    let layers = widths
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.uniform(-limit, limit))
                .collect();
            Layer {
                weights: Matrix::from_vec(fan_out, fan_in, data).unwrap(),
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(NetworkParams { layers })
}

/// Intermediate values kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input followed by each hidden layer's post-ReLU output.
    pub activations: Vec<Matrix>,
    /// Output-layer pre-softmax values.
    pub logits: Matrix,
}

fn affine(layer: &Layer, input: &Matrix) -> Matrix {
    let (n, out) = (input.rows(), layer.weights.rows());
    let mut z = Matrix::zeros(n, out);
    for i in 0..n {
        let a = input.row(i);
        let zi = z.row_mut(i);
        for (k, zk) in zi.iter_mut().enumerate() {
            let w = layer.weights.row(k);
            let mut s = layer.bias[k];
            for (wj, aj) in w.iter().zip(a) {
                s += wj * aj;
            }
            *zk = s;
        }
    }
    z
}

fn check_input(params: &NetworkParams, x: &Matrix) -> Result<()> {
    if x.cols() != params.input_dim() {
        return Err(NeuralError::Shape {
            expected: format!("{} input columns", params.input_dim()),
            found: format!("{}", x.cols()),
        });
    }
    Ok(())
}

/// Class probabilities per row plus the cached activations.
pub fn forward(params: &NetworkParams, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
    check_input(params, x)?;
    let (hidden, output) = params.layers.split_at(params.layers.len() - 1);
    let mut activations = Vec::with_capacity(params.layers.len());
    activations.push(x.clone());
    for layer in hidden {
        let mut z = affine(layer, activations.last().unwrap());
        z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
        activations.push(z);
    }
    let logits = affine(&output[0], activations.last().unwrap());
    if !logits.is_finite() {
        return Err(NeuralError::Numerical(
            "non-finite activation in forward pass".into(),
        ));
    }
    let mut probs = logits.clone();
    for i in 0..probs.rows() {
        softmax_in_place(probs.row_mut(i));
    }
    Ok((
        probs,
        ForwardCache {
            activations,
            logits,
        },
    ))
}

fn check_targets(params: &NetworkParams, x: &Matrix, y: &Matrix) -> Result<()> {
    check_input(params, x)?;
    if y.rows() != x.rows() || y.cols() != params.output_dim() {
        return Err(NeuralError::Shape {
            expected: format!("{}×{} one-hot targets", x.rows(), params.output_dim()),
            found: format!("{}×{}", y.rows(), y.cols()),
        });
    }
    for (i, r) in y.row_iter().enumerate() {
        let ones = r.iter().filter(|&&v| v == 1.0).count();
        if ones != 1 || r.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(NeuralError::Shape {
                expected: "one-hot target rows".into(),
                found: format!("row {i} = {r:?}"),
            });
        }
    }
    Ok(())
}

/// Mean cross-entropy from logits via log-sum-exp.
fn cross_entropy(logits: &Matrix, y: &Matrix) -> f64 {
    let mut total = 0.0;
    for (z, t) in logits.row_iter().zip(y.row_iter()) {
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += z.iter().zip(t).map(|(zi, ti)| ti * (lse - zi)).sum::<f64>();
    }
    total / logits.rows() as f64
}

/// Mean cross-entropy over the rows of `x` and its gradient with respect to
/// every parameter, by backpropagation.
pub fn loss_and_gradients(
    params: &NetworkParams,
    x: &Matrix,
    y_one_hot: &Matrix,
) -> Result<(f64, NetworkParams)> {
    check_targets(params, x, y_one_hot)?;
    backprop(params, x, y_one_hot)
}

fn backprop(params: &NetworkParams, x: &Matrix, y: &Matrix) -> Result<(f64, NetworkParams)> {
    let (probs, cache) = forward(params, x)?;
    let loss = cross_entropy(&cache.logits, y);
    let n = x.rows() as f64;
    let mut grads = params.zeros_like();
    // Output delta: (softmax − target) / n.
    let mut delta = probs;
    for (d, t) in delta.as_mut_slice().iter_mut().zip(y.as_slice()) {
        *d = (*d - t) / n;
    }
    for l in (0..params.layers.len()).rev() {
        let input = &cache.activations[l];
        let g = &mut grads.layers[l];
        for (d_row, a_row) in delta.row_iter().zip(input.row_iter()) {
            for (k, &dk) in d_row.iter().enumerate() {
                if dk == 0.0 {
                    continue;
                }
                g.bias[k] += dk;
                for (gw, &a) in g.weights.row_mut(k).iter_mut().zip(a_row) {
                    *gw += dk * a;
                }
            }
        }
        if l == 0 {
            break;
        }
        let w = &params.layers[l].weights;
        let mut next = Matrix::zeros(delta.rows(), w.cols());
        for i in 0..delta.rows() {
            let a_row = input.row(i);
            let d_row = delta.row(i);
            let out = next.row_mut(i);
            for (k, &dk) in d_row.iter().enumerate() {
                if dk == 0.0 {
                    continue;
                }
                for (o, &wkj) in out.iter_mut().zip(w.row(k)) {
                    *o += dk * wkj;
                }
            }
            // ReLU derivative: pass only where the unit was active.
            for (o, &a) in out.iter_mut().zip(a_row) {
                if a <= 0.0 {
                    *o = 0.0;
                }
            }
        }
        delta = next;
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Mean training loss of each epoch, weighted by batch size.
    pub losses: Vec<f64>,
}

/// Mini-batch gradient descent. Each epoch reshuffles the rows with the
/// seed's "batches" stream. The last batch of an epoch may be short; its
/// step is scaled by its share of a full batch.
pub fn train(
    params: NetworkParams,
    x: &Matrix,
    y_one_hot: &Matrix,
    config: &NetworkConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    check_targets(&params, x, y_one_hot)?;
    if x.rows() == 0 {
        return Err(NeuralError::Shape {
            expected: "at least one training row".into(),
            found: "0".into(),
        });
    }
    if !x.is_finite() {
        return Err(NeuralError::Numerical("non-finite training input".into()));
    }
    let mut params = params;
    let mut rng = Xorshift64Star::new(derive_seed_for(config.seed, "batches"));
    let n = x.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = x.select_rows(batch);
            let yb = y_one_hot.select_rows(batch);
            let (loss, grads) = match backprop(&params, &xb, &yb) {
                Ok(v) => v,
                Err(NeuralError::Numerical(_)) => return Err(NeuralError::Divergence { epoch }),
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(NeuralError::Divergence { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            let step = config.learning_rate * batch.len() as f64 / config.batch_size as f64;
            for (p, g) in params.values_mut().zip(grads.values()) {
                *p -= step * g;
            }
            if !params.is_finite() {
                return Err(NeuralError::Divergence { epoch });
            }
        }
        losses.push(epoch_loss / n as f64);
    }
    Ok(TrainOutcome { params, losses })
}

/// Largest relative disagreement between backprop gradients and central
/// finite differences, with denominator `max(|g|, |fd|, 1e-8)`.
pub fn gradient_check(
    params: &NetworkParams,
    x: &Matrix,
    y_one_hot: &Matrix,
    epsilon: f64,
) -> Result<f64> {
    let (_, grads) = loss_and_gradients(params, x, y_one_hot)?;
    let analytic: Vec<f64> = grads.values().copied().collect();
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for (idx, &g) in analytic.iter().enumerate() {
        let original = *probe.values_mut().nth(idx).unwrap();
        *probe.values_mut().nth(idx).unwrap() = original + epsilon;
        let plus = cross_entropy(&forward(&probe, x)?.1.logits, y_one_hot);
        *probe.values_mut().nth(idx).unwrap() = original - epsilon;
        let minus = cross_entropy(&forward(&probe, x)?.1.logits, y_one_hot);
        *probe.values_mut().nth(idx).unwrap() = original;
        let fd = (plus - minus) / (2.0 * epsilon);
        let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Argmax of the forward probabilities; ties go to the lower class index.
pub fn predict(params: &NetworkParams, x: &Matrix) -> Result<Vec<usize>> {
    let (probs, _) = forward(params, x)?;
    Ok(probs.row_iter().map(argmax).collect())
}

/// `labels.len() × n_classes` indicator matrix.
pub fn one_hot(labels: &[usize], n_classes: usize) -> Matrix {
    let mut m = Matrix::zeros(labels.len(), n_classes);
    for (i, &c) in labels.iter().enumerate() {
        m[(i, c)] = 1.0;
    }
    m
}
