//! Fixed-topology feed-forward networks with hand-written backpropagation.
//!
//! Hidden layers use ReLU, the output layer is linear. Weights are stored
//! row-major with one row per output unit. All batch operations take inputs
//! as a flat row-major `batch × width` slice.

mod adam;
mod checkpoint;

pub use adam::Adam;
pub use checkpoint::MlpCheckpoint;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Network parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpCheckpoint", into = "MlpCheckpoint")]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Per-layer values kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    batch: usize,
    input: Vec<f64>,
    pre_activations: Vec<Vec<f64>>,
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn num_layers(&self) -> usize {
        self.pre_activations.len()
    }

    /// Network output, `batch × output_width`.
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has no layers")
    }
}

/// Gradients with the same shapes as the parameters they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.biases).flatten()
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).flatten()
    }

    pub fn global_norm(&self) -> f64 {
        self.values().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        self.values_mut().for_each(|g| *g *= k);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += *b;
        }
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_gradient_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ac, ar) = a.split_at(a.len() / 4 * 4);
    let (bc, br) = b.split_at(ac.len());
    for (x, y) in ac.chunks_exact(4).zip(bc.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ar.iter().zip(br) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy(y: &mut [f64], k: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += k * xi;
    }
}

impl Mlp {
    /// He-uniform weights (`U(±sqrt(6 / fan_in))`), zero biases.
    pub fn he_uniform<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least an input and an output layer");
        assert!(layer_sizes.iter().all(|&s| s > 0), "layer widths must be positive");
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        }
    }

    /// Builds a network from explicit parameters, checking shapes.
    pub fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self, String> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(format!("bad layer sizes {layer_sizes:?}"));
        }
        let layers = layer_sizes.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(format!(
                "expected {layers} weight and bias blocks, found {} and {}",
                weights.len(),
                biases.len()
            ));
        }
        for k in 0..layers {
            let (fan_in, fan_out) = (layer_sizes[k], layer_sizes[k + 1]);
            if weights[k].len() != fan_in * fan_out {
                return Err(format!(
                    "layer {k}: expected {fan_out}x{fan_in} weights, found {}",
                    weights[k].len()
                ));
            }
            if biases[k].len() != fan_out {
                return Err(format!(
                    "layer {k}: expected {fan_out} biases, found {}",
                    biases[k].len()
                ));
            }
        }
        let net = Self {
            layer_sizes,
            weights,
            biases,
        };
        if !net.is_finite() {
            return Err("non-finite parameter".into());
        }
        Ok(net)
    }

    pub fn zero_output_layer(mut self) -> Self {
        let last = self.weights.len() - 1;
        self.weights[last].iter_mut().for_each(|w| *w = 0.0);
        self.biases[last].iter_mut().for_each(|b| *b = 0.0);
        self
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Row-major `sizes[k+1] × sizes[k]` weights of layer `k`.
    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.biases[layer]
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .all(|v| v.is_finite())
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).flatten()
    }

    /// Copies every parameter from `other` (same topology).
    pub fn copy_from(&mut self, other: &Mlp) {
        assert_eq!(self.layer_sizes, other.layer_sizes, "topology mismatch");
        self.clone_from(other);
    }

    fn layer_forward(&self, k: usize, input: &[f64], batch: usize, out: &mut Vec<f64>) {
        let fan_in = self.layer_sizes[k];
        let fan_out = self.layer_sizes[k + 1];
        out.clear();
        out.reserve(batch * fan_out);
        let w = &self.weights[k];
        let b = &self.biases[k];
        for x in input.chunks_exact(fan_in) {
            for j in 0..fan_out {
                out.push(b[j] + dot(&w[j * fan_in..(j + 1) * fan_in], x));
            }
        }
    }

    /// Forward pass for one input vector.
    pub fn forward(&self, input: &[f64]) -> (Vec<f64>, ForwardTrace) {
        let trace = self.forward_batch(input, 1);
        (trace.output().to_vec(), trace)
    }

    /// Output only, without keeping a trace.
    pub fn predict(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.input_width(), "input width mismatch");
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        let last = self.num_layers() - 1;
        for k in 0..self.num_layers() {
            self.layer_forward(k, &cur, 1, &mut next);
            if k < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Forward pass over `batch` row-major inputs.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> ForwardTrace {
        assert_eq!(
            inputs.len(),
            batch * self.input_width(),
            "input shape mismatch: {} values for batch {batch} of width {}",
            inputs.len(),
            self.input_width()
        );
        let layers = self.num_layers();
        let mut pre_activations = Vec::with_capacity(layers);
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(layers);
        for k in 0..layers {
            let src = if k == 0 { inputs } else { &activations[k - 1] };
            let mut z = Vec::new();
            self.layer_forward(k, src, batch, &mut z);
            let a = if k + 1 < layers {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            pre_activations.push(z);
            activations.push(a);
        }
        ForwardTrace {
            batch,
            input: inputs.to_vec(),
            pre_activations,
            activations,
        }
    }

    /// Reverse-mode gradients of `sum_b <output_grad_b, f(x_b)>` with respect
    /// to the parameters and the inputs.
    pub fn backward(&self, trace: &ForwardTrace, output_grad: &[f64]) -> (Gradients, Vec<f64>) {
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backward_into(trace, output_grad, &mut grads, true);
        (grads, input_grad)
    }

    /// Accumulates parameter gradients into `grads`; returns the input
    /// gradient if `want_input_grad`, otherwise an empty vector.
    pub fn backward_into(
        &self,
        trace: &ForwardTrace,
        output_grad: &[f64],
        grads: &mut Gradients,
        want_input_grad: bool,
    ) -> Vec<f64> {
        let layers = self.num_layers();
        assert_eq!(trace.num_layers(), layers, "trace does not match network");
        let batch = trace.batch;
        assert_eq!(
            output_grad.len(),
            batch * self.output_width(),
            "output gradient shape mismatch"
        );
        for k in 0..layers {
            assert_eq!(
                trace.pre_activations[k].len(),
                batch * self.layer_sizes[k + 1],
                "trace does not match network"
            );
        }

        let mut delta = output_grad.to_vec();
        for k in (0..layers).rev() {
            let fan_in = self.layer_sizes[k];
            let fan_out = self.layer_sizes[k + 1];
            if k + 1 < layers {
                for (d, z) in delta.iter_mut().zip(&trace.pre_activations[k]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input: &[f64] = if k == 0 {
                &trace.input
            } else {
                &trace.activations[k - 1]
            };
            let need_prev = k > 0 || want_input_grad;
            let mut prev = if need_prev {
                vec![0.0; batch * fan_in]
            } else {
                Vec::new()
            };
            let w = &self.weights[k];
            let gw = &mut grads.weights[k];
            let gb = &mut grads.biases[k];
            for b in 0..batch {
                let x = &input[b * fan_in..(b + 1) * fan_in];
                let d = &delta[b * fan_out..(b + 1) * fan_out];
                for (j, &g) in d.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    gb[j] += g;
                    axpy(&mut gw[j * fan_in..(j + 1) * fan_in], g, x);
                    if need_prev {
                        axpy(
                            &mut prev[b * fan_in..(b + 1) * fan_in],
                            g,
                            &w[j * fan_in..(j + 1) * fan_in],
                        );
                    }
                }
            }
            delta = prev;
        }
        delta
    }
}
