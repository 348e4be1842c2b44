//! A small fully connected network whose last layer emits non-negative
//! evidence through a softplus, with hand-written backpropagation.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use train::{init_params, predict, train, EpochStats, Objective, TrainConfig, TrainedModel};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opinion::Evidence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// ln(1 + eᶻ), the non-negative evidence head.
    Softplus,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Softplus => softplus(z),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softplus => sigmoid(z),
            Activation::Identity => 1.0,
        }
    }
}

/// max(z, 0) + ln(1 + e^-|z|); exact to the last bit for large |z|.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    /// Fully connected stack `input → hidden… → output` with ReLU hidden
    /// layers and the given output activation.
    pub fn stack(input: usize, hidden: &[usize], output: usize, head: Activation) -> Vec<LayerSpec> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input);
        dims.extend_from_slice(hidden);
        dims.push(output);
        let last = dims.len() - 2;
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                in_dim: w[0],
                out_dim: w[1],
                activation: if i == last { head } else { Activation::Relu },
            })
            .collect()
    }
}

/// Weights (row-major, `out_dim × in_dim`) and biases of one dense layer.
/// Also used for gradients, which share the shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(spec: &LayerSpec) -> Self {
        Layer {
            weights: vec![0.0; spec.in_dim * spec.out_dim],
            bias: vec![0.0; spec.out_dim],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    specs: Vec<LayerSpec>,
    layers: Vec<Layer>,
}

/// Per-layer inputs and pre-activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Pre-activations of the final layer.
    pub fn final_pre_activation(&self) -> &[f64] {
        self.pre.last().expect("at least one layer")
    }
}

/// Gradient of a scalar with respect to every weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Gradients {
            layers: params.specs.iter().map(Layer::zeros).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|x| *x *= c);
            l.bias.iter_mut().for_each(|x| *x *= c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| *v == 0.0))
    }
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::contract("network needs at least one layer"));
    }
    for s in specs {
        if s.in_dim == 0 || s.out_dim == 0 {
            return Err(Error::contract("layer dimensions must be positive"));
        }
    }
    for w in specs.windows(2) {
        if w[0].out_dim != w[1].in_dim {
            return Err(Error::Dimension {
                what: "layer chain",
                expected: w[0].out_dim,
                actual: w[1].in_dim,
            });
        }
    }
    Ok(())
}

impl NetworkParams {
    pub fn from_parts(specs: Vec<LayerSpec>, layers: Vec<Layer>) -> Result<Self> {
        validate_specs(&specs)?;
        if layers.len() != specs.len() {
            return Err(Error::Dimension {
                what: "layer count",
                expected: specs.len(),
                actual: layers.len(),
            });
        }
        for (s, l) in specs.iter().zip(&layers) {
            if l.weights.len() != s.in_dim * s.out_dim {
                return Err(Error::Dimension {
                    what: "weight matrix",
                    expected: s.in_dim * s.out_dim,
                    actual: l.weights.len(),
                });
            }
            if l.bias.len() != s.out_dim {
                return Err(Error::Dimension {
                    what: "bias vector",
                    expected: s.out_dim,
                    actual: l.bias.len(),
                });
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::contract("network parameters must be finite"));
            }
        }
        Ok(NetworkParams { specs, layers })
    }

    pub fn zeros(specs: Vec<LayerSpec>) -> Result<Self> {
        validate_specs(&specs)?;
        let layers = specs.iter().map(Layer::zeros).collect();
        Ok(NetworkParams { specs, layers })
    }

    /// Weights uniform in ±√(6 / (fan_in + fan_out)), biases zero.
    pub fn glorot<R: Rng + ?Sized>(specs: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        validate_specs(&specs)?;
        let layers = specs
            .iter()
            .map(|s| {
                let limit = (6.0 / (s.in_dim + s.out_dim) as f64).sqrt();
                Layer {
                    weights: (0..s.in_dim * s.out_dim)
                        .map(|_| rng.random_range(-limit..=limit))
                        .collect(),
                    bias: vec![0.0; s.out_dim],
                }
            })
            .collect();
        Ok(NetworkParams { specs, layers })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.specs[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.specs[self.specs.len() - 1].out_dim
    }

    pub fn output_activation(&self) -> Activation {
        self.specs[self.specs.len() - 1].activation
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// θ ← θ − lr · g
    pub fn apply_gradients(&mut self, g: &Gradients, lr: f64) {
        for (p, d) in self.layers.iter_mut().zip(&g.layers) {
            p.weights.iter_mut().zip(&d.weights).for_each(|(w, gw)| *w -= lr * gw);
            p.bias.iter_mut().zip(&d.bias).for_each(|(b, gb)| *b -= lr * gb);
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                what: "network input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (spec, layer) in self.specs.iter().zip(&self.layers) {
            let z: Vec<f64> = (0..spec.out_dim)
                .map(|i| {
                    let row = &layer.weights[i * spec.in_dim..(i + 1) * spec.in_dim];
                    layer.bias[i] + row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect();
            let next = z.iter().map(|&v| spec.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut h, next));
            pre.push(z);
        }
        Ok(ForwardTrace { inputs, pre, output: h })
    }

    /// Final-layer activations.
    pub fn forward_output(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.output)
    }

    /// Backpropagates `grad_out` (∂L/∂output) through a recorded pass.
    pub fn backward_trace(&self, trace: &ForwardTrace, grad_out: &[f64]) -> Result<Gradients> {
        if trace.pre.len() != self.layers.len() || trace.pre.iter().zip(&self.specs).any(|(z, s)| z.len() != s.out_dim)
        {
            return Err(Error::contract("forward trace does not match this network"));
        }
        if grad_out.len() != self.output_dim() {
            return Err(Error::Dimension {
                what: "output gradient",
                expected: self.output_dim(),
                actual: grad_out.len(),
            });
        }

        let mut grads = Gradients::zeros_like(self);
        let last = self.layers.len() - 1;
        let mut delta: Vec<f64> = grad_out
            .iter()
            .zip(&trace.pre[last])
            .map(|(g, &z)| g * self.specs[last].activation.derivative(z))
            .collect();

        for l in (0..=last).rev() {
            let spec = &self.specs[l];
            let input = &trace.inputs[l];
            let g = &mut grads.layers[l];
            for (i, &d) in delta.iter().enumerate() {
                g.bias[i] = d;
                let row = &mut g.weights[i * spec.in_dim..(i + 1) * spec.in_dim];
                row.iter_mut().zip(input).for_each(|(gw, v)| *gw = d * v);
            }
            if l == 0 {
                break;
            }
            let w = &self.layers[l].weights;
            let prev = &self.specs[l - 1];
            delta = (0..spec.in_dim)
                .map(|j| {
                    let back: f64 = delta.iter().enumerate().map(|(i, d)| w[i * spec.in_dim + j] * d).sum();
                    back * prev.activation.derivative(trace.pre[l - 1][j])
                })
                .collect();
        }
        Ok(grads)
    }

    fn require_evidential_head(&self) -> Result<()> {
        if self.output_activation() != Activation::Softplus {
            return Err(Error::contract("evidential network must end in a softplus layer"));
        }
        Ok(())
    }
}

/// Evidence for `x`: the softplus outputs of the final layer.
pub fn forward(params: &NetworkParams, x: &[f64]) -> Result<Evidence> {
    params.require_evidential_head()?;
    Evidence::new(params.forward_output(x)?)
}

/// Gradients of the loss with respect to every parameter, given ∂L/∂α for
/// the forward pass on `x`. Since α = softplus(z) + 1, ∂α/∂z = sigmoid(z).
pub fn backward(params: &NetworkParams, x: &[f64], grad_wrt_alpha: &[f64]) -> Result<Gradients> {
    params.require_evidential_head()?;
    let trace = params.forward_trace(x)?;
    params.backward_trace(&trace, grad_wrt_alpha)
}
