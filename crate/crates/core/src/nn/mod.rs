//! Minimal dense feed-forward networks with reverse-mode gradients.
//!
//! Just enough machinery for the scheduler's Q, actor and critic nets:
//! dense layers with relu/tanh/linear activations, a recorded-forward tape
//! for backprop, SGD/Adam, a finite-difference gradient checker, and a
//! versioned text checkpoint format.

mod checkpoint;
mod gradcheck;
mod optimizer;

pub use checkpoint::{load_net, load_net_from_str, save_net, write_net_to_string};
pub use gradcheck::{
    finite_difference_check, max_relative_error, numeric_gradients, ScalarLoss, SquaredErrorLoss,
    SumLoss,
};
pub use optimizer::{Optimizer, OptimizerKind};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("checkpoint format: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative with respect to the pre-activation value.
    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, NnError> {
        match name {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(NnError::Checkpoint(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            activation,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Layer {
    /// Row-major (outputs x inputs).
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub inputs: usize,
    pub outputs: usize,
}

/// Dense multi-layer perceptron over f64.
#[derive(Debug, Clone)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Recorded intermediate values of one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct GradientTape {
    input: Vec<f64>,
    /// Pre-activation vector per layer.
    pre: Vec<Vec<f64>>,
    /// Post-activation output per layer.
    post: Vec<Vec<f64>>,
}

/// Per-parameter gradient buffers, shaped exactly like the net.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// self += scale * other
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for w in &mut self.weights {
            for x in w {
                *x *= s;
            }
        }
        for b in &mut self.biases {
            for x in b {
                *x *= s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().flatten().all(|x| x.is_finite())
            && self.biases.iter().flatten().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        let w = self.weights.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let b = self.biases.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        w.max(b)
    }
}

impl DenseNet {
    /// Builds a zero-initialized net; layer dimensions must chain.
    pub fn zeros(specs: &[LayerSpec]) -> Result<Self, NnError> {
        if specs.is_empty() {
            return Err(NnError::Config("a net needs at least one layer".into()));
        }
        for (k, pair) in specs.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(NnError::Shape(format!(
                    "layer {} outputs {} but layer {} expects {}",
                    k,
                    pair[0].outputs,
                    k + 1,
                    pair[1].inputs
                )));
            }
        }
        let layers = specs
            .iter()
            .map(|s| {
                if s.inputs == 0 || s.outputs == 0 {
                    return Err(NnError::Config("layer dims must be > 0".into()));
                }
                Ok(Layer {
                    weights: vec![0.0; s.inputs * s.outputs],
                    bias: vec![0.0; s.outputs],
                    activation: s.activation,
                    inputs: s.inputs,
                    outputs: s.outputs,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { layers })
    }

    /// Builds a net with Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out)))
    /// drawn deterministically from the given RNG. Biases start at zero.
    pub fn seeded(specs: &[LayerSpec], rng: &mut impl rand::Rng) -> Result<Self, NnError> {
        let mut net = Self::zeros(specs)?;
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| LayerSpec::new(l.inputs, l.outputs, l.activation))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|x| x.is_finite()) && l.bias.iter().all(|x| x.is_finite())
        })
    }

    pub(crate) fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub(crate) fn from_layers(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    /// Mutable access to one flat parameter, in (layer, weights-then-bias)
    /// order. Test support for perturbation-based checks.
    pub fn param_mut(&mut self, index: usize) -> Option<&mut f64> {
        let mut idx = index;
        for layer in &mut self.layers {
            if idx < layer.weights.len() {
                return Some(&mut layer.weights[idx]);
            }
            idx -= layer.weights.len();
            if idx < layer.bias.len() {
                return Some(&mut layer.bias[idx]);
            }
            idx -= layer.bias.len();
        }
        None
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::Shape(format!(
                "input length {} does not match first-layer input dim {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass. Deterministic for fixed parameters.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            next.clear();
            next.resize(layer.outputs, 0.0);
            matvec_bias(layer, &current, &mut next);
            for v in &mut next {
                *v = layer.activation.apply(*v);
            }
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    /// Forward pass that records the tape needed for `backward`.
    pub fn forward_recorded(&self, input: &[f64]) -> Result<(Vec<f64>, GradientTape), NnError> {
        self.check_input(input)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = input.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.outputs];
            matvec_bias(layer, &current, &mut z);
            let a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            current = a.clone();
            post.push(a);
        }
        Ok((
            current,
            GradientTape {
                input: input.to_vec(),
                pre,
                post,
            },
        ))
    }

    /// Reverse-mode gradients of a scalar loss with respect to every
    /// parameter, given dLoss/dOutput. The tape must come from
    /// `forward_recorded` on this same net and input.
    pub fn backward(
        &self,
        tape: &GradientTape,
        output_gradient: &[f64],
    ) -> Result<Gradients, NnError> {
        if tape.pre.len() != self.layers.len() || tape.input.len() != self.input_dim() {
            return Err(NnError::Shape(
                "tape does not match this net (backward without a matching recorded forward)"
                    .into(),
            ));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            if tape.pre[k].len() != layer.outputs {
                return Err(NnError::Shape(format!(
                    "tape layer {k} has {} pre-activations, net expects {}",
                    tape.pre[k].len(),
                    layer.outputs
                )));
            }
        }
        if output_gradient.len() != self.output_dim() {
            return Err(NnError::Shape(format!(
                "output gradient length {} does not match output dim {}",
                output_gradient.len(),
                self.output_dim()
            )));
        }

        let mut grads = Gradients::zeros_like(self);
        let last = self.layers.len() - 1;
        // delta = dLoss/dPre for the current layer
        let mut delta: Vec<f64> = output_gradient
            .iter()
            .zip(&tape.pre[last])
            .map(|(&g, &z)| g * self.layers[last].activation.derivative(z))
            .collect();

        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let layer_input: &[f64] = if k == 0 { &tape.input } else { &tape.post[k - 1] };
            let gw = &mut grads.weights[k];
            for o in 0..layer.outputs {
                let d = delta[o];
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for (gwi, &x) in row.iter_mut().zip(layer_input) {
                    *gwi += d * x;
                }
                grads.biases[k][o] += d;
            }
            if k > 0 {
                let prev_layer = &self.layers[k - 1];
                let mut prev_delta = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (pd, &w) in prev_delta.iter_mut().zip(row) {
                        *pd += d * w;
                    }
                }
                for (pd, &z) in prev_delta.iter_mut().zip(&tape.pre[k - 1]) {
                    *pd *= prev_layer.activation.derivative(z);
                }
                delta = prev_delta;
            }
        }
        Ok(grads)
    }
}

#[inline]
fn matvec_bias(layer: &Layer, input: &[f64], out: &mut [f64]) {
    for (o, out_v) in out.iter_mut().enumerate() {
        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
        let mut acc = layer.bias[o];
        for (&w, &x) in row.iter().zip(input) {
            acc += w * x;
        }
        *out_v = acc;
    }
}
