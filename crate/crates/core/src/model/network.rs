//! Dense feedforward network: forward pass and reverse-mode gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Activation, LossKind, ModelError, NetworkConfig};
use crate::dataset::Sample;

/// One affine transition. `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Layer {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            let mut acc = *b;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *o = acc;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub activation: Activation,
    pub layers: Vec<Layer>,
}

impl ModelParams {
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> ModelParams {
        ModelParams {
            activation,
            layers: layer_sizes
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> ModelParams {
        ModelParams::zeros(&self.layer_sizes(), self.activation)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Weight and bias buffers in a fixed order: w0, b0, w1, b1, ...
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs)
    }
}

/// Seeded uniform initialisation with bound `sqrt(6 / (fan_in + fan_out))`;
/// biases start at zero.
pub fn init_params(config: &NetworkConfig) -> Result<ModelParams, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::zeros(&config.layer_sizes, config.activation);
    for layer in &mut params.layers {
        let bound = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.gen_range(-bound..bound);
        }
    }
    Ok(params)
}

fn activate(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => z.max(0.0),
        Activation::Tanh => z.tanh(),
        Activation::Linear => z,
    }
}

/// Derivative expressed through the pre-activation `z`.
fn activate_grad(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => {
            if z > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Tanh => {
            let t = z.tanh();
            1.0 - t * t
        }
        Activation::Linear => 1.0,
    }
}

/// Per-layer pre-activations and outputs for one sample, reused across
/// samples to avoid reallocating.
pub(crate) struct Trace {
    /// `pre[l]`: pre-activation of layer l
    pub(crate) pre: Vec<Vec<f64>>,
    /// `post[0]` is the input; `post[l + 1]` the output of layer l
    pub(crate) post: Vec<Vec<f64>>,
}

impl Trace {
    pub(crate) fn new(params: &ModelParams) -> Trace {
        Trace {
            pre: params.layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
            post: std::iter::once(vec![0.0; params.input_width()])
                .chain(params.layers.iter().map(|l| vec![0.0; l.outputs]))
                .collect(),
        }
    }

    pub(crate) fn run(&mut self, params: &ModelParams, x: &[f64]) {
        self.post[0].copy_from_slice(x);
        let last = params.layers.len() - 1;
        for (l, layer) in params.layers.iter().enumerate() {
            let (done, rest) = self.post.split_at_mut(l + 1);
            layer.affine(&done[l], &mut self.pre[l]);
            let out = &mut rest[0];
            if l == last {
                out.copy_from_slice(&self.pre[l]);
            } else {
                for (o, z) in out.iter_mut().zip(&self.pre[l]) {
                    *o = activate(params.activation, *z);
                }
            }
        }
    }

    pub(crate) fn output(&self) -> &[f64] {
        self.post.last().expect("at least one layer")
    }
}

fn check_input(params: &ModelParams, x: &[f64]) -> Result<(), ModelError> {
    if x.len() != params.input_width() {
        return Err(ModelError::WidthMismatch {
            expected: params.input_width(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteInput);
    }
    Ok(())
}

/// Hidden layers use the configured activation; the output layer is linear,
/// so predictions can be negative.
pub fn forward(params: &ModelParams, x: &[f64]) -> Result<Vec<f64>, ModelError> {
    check_input(params, x)?;
    let mut trace = Trace::new(params);
    trace.run(params, x);
    Ok(trace.output().to_vec())
}

/// Loss over a batch (mean over samples and output dimensions) and its
/// gradient with respect to every parameter.
pub fn loss_and_grad(
    params: &ModelParams,
    loss: LossKind,
    batch: &[Sample],
) -> Result<(f64, ModelParams), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let out_dim = params.output_width();
    let norm = (batch.len() * out_dim) as f64;
    let mut grads = params.zeros_like();
    let mut trace = Trace::new(params);
    let mut deltas: Vec<Vec<f64>> = params.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
    let mut total = 0.0;

    for sample in batch {
        check_input(params, &sample.input)?;
        if sample.target.len() != out_dim {
            return Err(ModelError::WidthMismatch {
                expected: out_dim,
                got: sample.target.len(),
            });
        }
        trace.run(params, &sample.input);
        let last = params.layers.len() - 1;
        for ((d, y), t) in deltas[last].iter_mut().zip(trace.output()).zip(&sample.target) {
            let r = y - t;
            match loss {
                LossKind::Mse => {
                    total += r * r;
                    *d = 2.0 * r / norm;
                }
                LossKind::Mae => {
                    total += r.abs();
                    *d = if r > 0.0 {
                        1.0 / norm
                    } else if r < 0.0 {
                        -1.0 / norm
                    } else {
                        0.0
                    };
                }
            }
        }
        for l in (0..params.layers.len()).rev() {
            let layer = &params.layers[l];
            let g = &mut grads.layers[l];
            let input = &trace.post[l];
            for (o, d) in deltas[l].iter().enumerate() {
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, x) in row.iter_mut().zip(input) {
                    *gw += d * x;
                }
            }
            if l > 0 {
                let (below, above) = deltas.split_at_mut(l);
                let prev = &mut below[l - 1];
                prev.iter_mut().for_each(|p| *p = 0.0);
                for (o, d) in above[0].iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                for (p, z) in prev.iter_mut().zip(&trace.pre[l - 1]) {
                    *p *= activate_grad(params.activation, *z);
                }
            }
        }
    }
    Ok((total / norm, grads))
}
