//! Minimal dense feed-forward engine.
//!
//! Models are immutable after construction; forward passes and gradients are
//! pure functions, so a shared model can be evaluated from many threads.
//! Weight edits go through explicit patched copies (see [`crate::repair`]).
//!
//! Layout convention: a layer's weight matrix has shape
//! `[in_dim x out_dim]`, row-major, so `w[i][j]` connects input unit `i` to
//! output unit `j` and the pre-activation is `z_j = b_j + sum_i x_i * w[i][j]`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Smallest probability fed to the log in the cross-entropy loss.
pub const LOSS_PROB_FLOOR: f64 = 1e-12;

/// Element-wise activation applied after the affine transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Softmax => "softmax",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "relu" => Activation::Relu,
            "sigmoid" => Activation::Sigmoid,
            "tanh" => Activation::Tanh,
            "softmax" => Activation::Softmax,
            "identity" => Activation::Identity,
            _ => return None,
        })
    }

    fn apply_scalar(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + math::exp(-z)),
            Activation::Tanh => math::tanh(z),
            Activation::Identity => z,
            Activation::Softmax => unreachable!("softmax is vector-wise"),
        }
    }

    /// Derivative with respect to the pre-activation, given both the
    /// pre-activation and the post-activation value.
    fn derivative(self, z: f64, post: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => post * (1.0 - post),
            Activation::Tanh => 1.0 - post * post,
            Activation::Identity => 1.0,
            Activation::Softmax => unreachable!("softmax gradients use the closed form"),
        }
    }
}

/// Loss used by the model. Only cross-entropy over softmax outputs is
/// supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LossKind {
    #[default]
    CrossEntropy,
}

/// Dense row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows_data: &[&[f64]]) -> Self {
        let rows = rows_data.len();
        let cols = rows_data.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows * cols);
        for row in rows_data {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            data.extend_from_slice(row);
        }
        Matrix { rows, cols, data }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute entry; 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(math::abs(*v)))
    }
}

/// One dense layer: `post = activation(W^T x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Matrix,
    biases: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.cols() {
            return Err(Error::DimensionMismatch {
                expected: weights.cols(),
                actual: biases.len(),
            });
        }
        Ok(DenseLayer {
            weights,
            biases,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.biases);
        for (i, &x) in input.iter().enumerate() {
            let row = &self.weights.data[i * self.weights.cols..(i + 1) * self.weights.cols];
            for (j, &w) in row.iter().enumerate() {
                out[j] += x * w;
            }
        }
    }
}

/// Per-layer pre-activations and post-activations captured by a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    /// `pre[l]` is layer `l`'s pre-activation vector `z^l`.
    pub pre: Vec<Vec<f64>>,
    /// `post[l]` is layer `l`'s post-activation vector.
    pub post: Vec<Vec<f64>>,
}

impl ActivationTrace {
    /// Final output probabilities.
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("trace of a model with no layers")
    }
}

/// A layered dense classifier with a softmax head and cross-entropy loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    input_dim: usize,
    layers: Vec<DenseLayer>,
    loss_kind: LossKind,
}

impl Model {
    /// Builds a model and checks its structural invariants: the dimension
    /// chain is consistent, the final activation is softmax, softmax appears
    /// nowhere else, and every parameter is finite.
    pub fn new(input_dim: usize, layers: Vec<DenseLayer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidModel(String::from(
                "input_dim must be positive",
            )));
        }
        if layers.is_empty() {
            return Err(Error::InvalidModel(String::from(
                "model needs at least one layer",
            )));
        }
        let mut dim = input_dim;
        let last = layers.len() - 1;
        for (l, layer) in layers.iter().enumerate() {
            if layer.in_dim() != dim {
                return Err(Error::InvalidModel(format!(
                    "layer {l} expects input width {}, previous width is {dim}",
                    layer.in_dim()
                )));
            }
            dim = layer.out_dim();
            let is_last = l == last;
            let is_softmax = layer.activation == Activation::Softmax;
            if is_last && !is_softmax {
                return Err(Error::InvalidModel(String::from(
                    "final layer activation must be softmax",
                )));
            }
            if !is_last && is_softmax {
                return Err(Error::InvalidModel(format!(
                    "softmax is only valid on the final layer, found on layer {l}"
                )));
            }
            let finite = layer.weights.as_slice().iter().all(|v| v.is_finite())
                && layer.biases.iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidModel(format!(
                    "layer {l} contains non-finite parameters"
                )));
            }
        }
        if dim < 2 {
            return Err(Error::InvalidModel(String::from(
                "final layer must have at least two output classes",
            )));
        }
        Ok(Model {
            input_dim,
            layers,
            loss_kind: LossKind::CrossEntropy,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim())
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    pub fn layer(&self, index: usize) -> Result<&DenseLayer> {
        self.layers.get(index).ok_or(Error::InvalidLayer {
            layer: index,
            num_layers: self.layers.len(),
        })
    }

    /// Index of the final (softmax) layer.
    pub fn last_layer(&self) -> usize {
        self.layers.len() - 1
    }

    /// Mean and population standard deviation of one layer's weights.
    pub fn layer_weight_stats(&self, layer: usize) -> Result<(f64, f64)> {
        let weights = self.layer(layer)?.weights.as_slice();
        let n = weights.len() as f64;
        let mean = weights.iter().sum::<f64>() / n;
        let var = weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n;
        Ok((mean, math::sqrt(var)))
    }

    /// Runs the input through every layer, capturing all intermediate
    /// activations. The final post-activation is a probability vector.
    pub fn forward(&self, x: &[f64]) -> Result<ActivationTrace> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { layer: 0 });
        }
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let input = if l == 0 { x } else { post[l - 1].as_slice() };
            let mut z = Vec::new();
            layer.affine(input, &mut z);
            if !z.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { layer: l });
            }
            let activated = match layer.activation {
                Activation::Softmax => softmax(&z),
                act => z.iter().map(|&v| act.apply_scalar(v)).collect(),
            };
            if !activated.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { layer: l });
            }
            pre.push(z);
            post.push(activated);
        }
        Ok(ActivationTrace { pre, post })
    }

    /// Predicted class: argmax of the output probabilities, ties broken
    /// toward the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let trace = self.forward(x)?;
        Ok(argmax(trace.output()))
    }

    /// Cross-entropy loss `-ln(p_y)` with the probability clamped below by
    /// [`LOSS_PROB_FLOOR`].
    pub fn loss(&self, x: &[f64], y: usize) -> Result<f64> {
        if y >= self.num_classes() {
            return Err(Error::InvalidClass {
                class: y,
                num_classes: self.num_classes(),
            });
        }
        let trace = self.forward(x)?;
        let p = trace.output()[y].max(LOSS_PROB_FLOOR);
        Ok(-math::ln(p))
    }

    /// Mean gradient of the loss with respect to the target layer's weights,
    /// averaged over the samples. For the softmax + cross-entropy head the
    /// output delta is the closed form `p - onehot(y)`.
    pub fn grad_target_layer(&self, samples: &[(&[f64], usize)], layer: usize) -> Result<Matrix> {
        if samples.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let target = self.layer(layer)?;
        let mut grad = Matrix::zeros(target.in_dim(), target.out_dim());
        for &(x, y) in samples {
            if y >= self.num_classes() {
                return Err(Error::InvalidClass {
                    class: y,
                    num_classes: self.num_classes(),
                });
            }
            let trace = self.forward(x)?;
            let probs = trace.output();
            let mut delta: Vec<f64> = probs.to_vec();
            delta[y] -= 1.0;
            let delta = self.backprop_delta(&trace, delta, layer);
            let input = self.layer_input(x, &trace, layer);
            for i in 0..grad.rows() {
                for j in 0..grad.cols() {
                    let g = grad.get(i, j) + input[i] * delta[j];
                    grad.set(i, j, g);
                }
            }
        }
        let inv = 1.0 / samples.len() as f64;
        for v in grad.data.iter_mut() {
            *v *= inv;
        }
        Ok(grad)
    }

    /// Element-wise mean of the target layer's input activation over the
    /// samples (the raw input when `layer` is 0).
    pub fn mean_activation(&self, samples: &[&[f64]], layer: usize) -> Result<Vec<f64>> {
        if samples.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let in_dim = self.layer(layer)?.in_dim();
        let mut mean = vec![0.0; in_dim];
        for &x in samples {
            if layer == 0 {
                if x.len() != self.input_dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.input_dim,
                        actual: x.len(),
                    });
                }
                for (m, v) in mean.iter_mut().zip(x) {
                    *m += v;
                }
            } else {
                let trace = self.forward(x)?;
                for (m, v) in mean.iter_mut().zip(&trace.post[layer - 1]) {
                    *m += v;
                }
            }
        }
        let inv = 1.0 / samples.len() as f64;
        for m in mean.iter_mut() {
            *m *= inv;
        }
        Ok(mean)
    }

    /// Gradient of the output probability of `class` with respect to the
    /// target layer's pre-activation, for one traced sample.
    pub fn output_grad_wrt_preactivation(
        &self,
        trace: &ActivationTrace,
        layer: usize,
        class: usize,
    ) -> Result<Vec<f64>> {
        self.layer(layer)?;
        if class >= self.num_classes() {
            return Err(Error::InvalidClass {
                class,
                num_classes: self.num_classes(),
            });
        }
        let probs = trace.output();
        let p_c = probs[class];
        // d p_c / d z_k at the softmax head: p_c * (delta_ck - p_k).
        let delta: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(k, &p_k)| p_c * ((k == class) as u8 as f64 - p_k))
            .collect();
        Ok(self.backprop_delta(trace, delta, layer))
    }

    /// Propagates a delta vector (gradient with respect to the final layer's
    /// pre-activation) back to the pre-activation of `target` layer.
    fn backprop_delta(
        &self,
        trace: &ActivationTrace,
        mut delta: Vec<f64>,
        target: usize,
    ) -> Vec<f64> {
        for l in (target + 1..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let prev = l - 1;
            let mut next = vec![0.0; layer.in_dim()];
            for (i, slot) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, &d) in delta.iter().enumerate() {
                    acc += layer.weights.get(i, j) * d;
                }
                let act = self.layers[prev].activation;
                *slot = acc * act.derivative(trace.pre[prev][i], trace.post[prev][i]);
            }
            delta = next;
        }
        delta
    }

    fn layer_input<'a>(&self, x: &'a [f64], trace: &'a ActivationTrace, layer: usize) -> &'a [f64] {
        if layer == 0 {
            x
        } else {
            &trace.post[layer - 1]
        }
    }

    pub(crate) fn set_weight(
        &mut self,
        layer: usize,
        row: usize,
        col: usize,
        value: f64,
    ) -> Result<()> {
        let num_layers = self.layers.len();
        let l = self
            .layers
            .get_mut(layer)
            .ok_or(Error::InvalidLayer { layer, num_layers })?;
        if row >= l.weights.rows() || col >= l.weights.cols() {
            return Err(Error::CoordOutOfRange { layer, row, col });
        }
        l.weights.set(row, col, value);
        Ok(())
    }
}

/// Numerically stable softmax.
fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = z.iter().map(|&v| math::exp(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// First index of the maximum value.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(weights: &[&[f64]], biases: &[f64], activation: Activation) -> DenseLayer {
        DenseLayer::new(Matrix::from_rows(weights), biases.to_vec(), activation).unwrap()
    }

    /// Single softmax layer with identity weights.
    fn softmax_identity(dim: usize) -> Model {
        let mut w = Matrix::zeros(dim, dim);
        for i in 0..dim {
            w.set(i, i, 1.0);
        }
        let l = DenseLayer::new(w, vec![0.0; dim], Activation::Softmax).unwrap();
        Model::new(dim, vec![l]).unwrap()
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let model = softmax_identity(2);
        let trace = model.forward(&[0.0, 0.0]).unwrap();
        assert_eq!(trace.output(), &[0.5, 0.5]);
    }

    #[test]
    fn forward_matches_hand_evaluated_softmax() {
        let model = softmax_identity(2);
        let trace = model.forward(&[2.0, 0.0]).unwrap();
        let e2 = (2.0f64).exp();
        let expect = [e2 / (e2 + 1.0), 1.0 / (e2 + 1.0)];
        assert!((trace.output()[0] - expect[0]).abs() < 1e-12);
        assert!((trace.output()[1] - expect[1]).abs() < 1e-12);
        // hand-rounded values
        assert!((trace.output()[0] - 0.8808).abs() < 1e-4);
        assert!((trace.output()[1] - 0.1192).abs() < 1e-4);
    }

    #[test]
    fn relu_clamps_negative_preactivations() {
        let hidden = layer(
            &[&[-1.0, -1.0], &[-1.0, -1.0]],
            &[0.0, 0.0],
            Activation::Relu,
        );
        let head = layer(
            &[&[1.0, 0.0], &[0.0, 1.0]],
            &[0.0, 0.0],
            Activation::Softmax,
        );
        let model = Model::new(2, vec![hidden, head]).unwrap();
        let trace = model.forward(&[3.0, 4.0]).unwrap();
        assert_eq!(trace.post[0], vec![0.0, 0.0]);
    }

    #[test]
    fn forward_output_sums_to_one() {
        let model = softmax_identity(3);
        let trace = model.forward(&[1.0, -2.0, 0.5]).unwrap();
        let sum: f64 = trace.output().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forward_reports_non_finite_values_with_layer_index() {
        // finite parameters, but the affine result overflows in layer 0
        let hidden = layer(
            &[&[2.0, 2.0], &[0.0, 0.0]],
            &[0.0, 0.0],
            Activation::Identity,
        );
        let head = layer(
            &[&[1.0, 0.0], &[0.0, 1.0]],
            &[0.0, 0.0],
            Activation::Softmax,
        );
        let model = Model::new(2, vec![hidden, head]).unwrap();
        assert_eq!(
            model.forward(&[f64::MAX, 0.0]),
            Err(Error::NonFinite { layer: 0 })
        );
        // non-finite input is rejected up front
        assert_eq!(
            model.forward(&[f64::NAN, 0.0]),
            Err(Error::NonFinite { layer: 0 })
        );
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let model = softmax_identity(2);
        assert_eq!(
            model.forward(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        );
    }

    #[test]
    fn forward_is_deterministic() {
        let model = softmax_identity(3);
        let a = model.forward(&[0.3, -1.2, 2.4]).unwrap();
        let b = model.forward(&[0.3, -1.2, 2.4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predict_breaks_ties_toward_lowest_index() {
        let model = softmax_identity(2);
        assert_eq!(model.predict(&[0.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn predict_takes_argmax() {
        let model = softmax_identity(2);
        assert_eq!(model.predict(&[0.0, 1.0]).unwrap(), 1);
        let model3 = softmax_identity(3);
        assert_eq!(model3.predict(&[1.0, 3.0, 2.0]).unwrap(), 1);
    }

    #[test]
    fn loss_of_certain_prediction_is_zero_and_clamped_at_floor() {
        // Bias-only logits give exact control over the output distribution.
        let l = layer(&[&[0.0, 0.0]], &[50.0, -50.0], Activation::Softmax);
        let model = Model::new(1, vec![l]).unwrap();
        // p_0 is 1 up to rounding, p_1 underflows to ~2e-44 but is above 0.
        assert!(model.loss(&[0.0], 0).unwrap() < 1e-9);

        let l = layer(&[&[0.0, 0.0]], &[800.0, -800.0], Activation::Softmax);
        let model = Model::new(1, vec![l]).unwrap();
        // p_0 is exactly 1 here, so the loss is exactly 0
        assert_eq!(model.loss(&[0.0], 0).unwrap(), 0.0);
        // p_1 underflows to exactly 0, so the clamp is active.
        let expect = -(LOSS_PROB_FLOOR.ln());
        assert!((model.loss(&[0.0], 1).unwrap() - expect).abs() < 1e-9);
        assert!((expect - 27.631).abs() < 1e-3);
    }

    #[test]
    fn loss_of_half_probability_is_ln_two() {
        let model = softmax_identity(2);
        let loss = model.loss(&[0.0, 0.0], 0).unwrap();
        assert!((loss - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn loss_rejects_out_of_range_class() {
        let model = softmax_identity(2);
        assert_eq!(
            model.loss(&[0.0, 0.0], 2),
            Err(Error::InvalidClass {
                class: 2,
                num_classes: 2
            })
        );
    }

    #[test]
    fn final_layer_gradient_matches_closed_form() {
        // Zero weights and log-probability biases pin the output to
        // exactly [0.6, 0.4] for any input.
        let l = layer(
            &[&[0.0, 0.0], &[0.0, 0.0]],
            &[(0.6f64).ln(), (0.4f64).ln()],
            Activation::Softmax,
        );
        let model = Model::new(2, vec![l]).unwrap();
        let x = [1.0, 2.0];
        let grad = model.grad_target_layer(&[(&x, 1)], 0).unwrap();
        // (p - onehot(1)) outer input = [[0.6, -0.6], [1.2, -1.2]]
        let expect = [[0.6, -0.6], [1.2, -1.2]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (grad.get(i, j) - expect[i][j]).abs() < 1e-9,
                    "grad[{i}][{j}] = {}",
                    grad.get(i, j)
                );
            }
        }
    }

    #[test]
    fn gradient_vanishes_on_perfect_predictions() {
        let l = layer(&[&[0.0, 0.0]], &[40.0, -40.0], Activation::Softmax);
        let model = Model::new(1, vec![l]).unwrap();
        let x = [1.0];
        let grad = model.grad_target_layer(&[(&x, 0)], 0).unwrap();
        assert!(grad.max_abs() < 1e-9);
    }

    #[test]
    fn gradient_rejects_empty_sample_set() {
        let model = softmax_identity(2);
        assert_eq!(model.grad_target_layer(&[], 0), Err(Error::EmptySampleSet));
    }

    #[test]
    fn mean_activation_of_single_sample_is_that_sample() {
        let model = softmax_identity(2);
        let x = [0.25, -0.5];
        assert_eq!(model.mean_activation(&[&x], 0).unwrap(), vec![0.25, -0.5]);
    }

    #[test]
    fn mean_activation_averages() {
        let model = softmax_identity(2);
        let a = [0.0, 2.0];
        let b = [2.0, 0.0];
        assert_eq!(model.mean_activation(&[&a, &b], 0).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn mean_activation_matches_naive_sum() {
        let hidden = layer(&[&[0.4, -0.3], &[0.7, 0.2]], &[0.1, -0.2], Activation::Tanh);
        let head = layer(
            &[&[1.0, -1.0], &[0.5, 0.5]],
            &[0.0, 0.0],
            Activation::Softmax,
        );
        let model = Model::new(2, vec![hidden, head]).unwrap();
        let samples: Vec<[f64; 2]> = (0..17)
            .map(|i| [(i as f64) * 0.37 - 3.0, (i as f64 % 5.0) - 2.0])
            .collect();
        let refs: Vec<&[f64]> = samples.iter().map(|s| s.as_slice()).collect();
        let mean = model.mean_activation(&refs, 1).unwrap();
        // naive summation oracle
        let mut naive = [0.0f64; 2];
        for s in &samples {
            let t = model.forward(s).unwrap();
            naive[0] += t.post[0][0];
            naive[1] += t.post[0][1];
        }
        for v in naive.iter_mut() {
            *v /= samples.len() as f64;
        }
        assert!((mean[0] - naive[0]).abs() < 1e-12);
        assert!((mean[1] - naive[1]).abs() < 1e-12);
    }

    #[test]
    fn model_invariants_are_enforced() {
        // softmax on a hidden layer
        let bad = Model::new(
            2,
            vec![
                layer(
                    &[&[1.0, 0.0], &[0.0, 1.0]],
                    &[0.0, 0.0],
                    Activation::Softmax,
                ),
                layer(
                    &[&[1.0, 0.0], &[0.0, 1.0]],
                    &[0.0, 0.0],
                    Activation::Softmax,
                ),
            ],
        );
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
        // non-softmax head
        let bad = Model::new(
            2,
            vec![layer(
                &[&[1.0, 0.0], &[0.0, 1.0]],
                &[0.0, 0.0],
                Activation::Relu,
            )],
        );
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
        // broken dimension chain
        let bad = Model::new(
            3,
            vec![layer(
                &[&[1.0, 0.0], &[0.0, 1.0]],
                &[0.0, 0.0],
                Activation::Softmax,
            )],
        );
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
    }
}
