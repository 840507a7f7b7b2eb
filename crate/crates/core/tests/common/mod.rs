//! Test-only oracles, independent of the code paths they check.
#![allow(dead_code)]

use constellation::nn::Mlp;

/// Forward pass written out directly from the layer definition, returning
/// the output and the ReLU on/off pattern of every hidden unit.
pub fn reference_forward(net: &Mlp, input: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let mut x = input.to_vec();
    let mut pattern = Vec::new();
    let layers = net.num_layers();
    for k in 0..layers {
        let fan_in = net.layer_sizes()[k];
        let fan_out = net.layer_sizes()[k + 1];
        let w = net.weights(k);
        let b = net.biases(k);
        let mut z = vec![0.0; fan_out];
        for j in 0..fan_out {
            let mut s = b[j];
            for i in 0..fan_in {
                s += w[j * fan_in + i] * x[i];
            }
            z[j] = s;
        }
        if k + 1 < layers {
            for v in &mut z {
                pattern.push(*v > 0.0);
                *v = v.max(0.0);
            }
        }
        x = z;
    }
    (x, pattern)
}

fn scalar_loss(net: &Mlp, input: &[f64], weights: &[f64]) -> (f64, Vec<bool>) {
    let (out, pattern) = reference_forward(net, input);
    (out.iter().zip(weights).map(|(o, c)| o * c).sum(), pattern)
}

/// Central finite differences of `sum_k c_k f_k(x)` for every parameter,
/// ordered as all weights layer by layer, then all biases layer by layer.
/// Parameters whose perturbation flips a ReLU are reported as `None`.
pub fn finite_difference_gradients(
    net: &Mlp,
    input: &[f64],
    loss_weights: &[f64],
    eps: f64,
) -> Vec<Option<f64>> {
    let mut out = Vec::new();
    let mut probe = net.clone();
    let layers = net.num_layers();
    for bias in [false, true] {
        for k in 0..layers {
            let len = if bias {
                net.biases(k).len()
            } else {
                net.weights(k).len()
            };
            for idx in 0..len {
                let slot = |p: &mut Mlp| -> *mut f64 {
                    if bias {
                        &mut p.biases_mut(k)[idx]
                    } else {
                        &mut p.weights_mut(k)[idx]
                    }
                };
                let orig = unsafe { *slot(&mut probe) };
                unsafe { *slot(&mut probe) = orig + eps };
                let (plus, pat_plus) = scalar_loss(&probe, input, loss_weights);
                unsafe { *slot(&mut probe) = orig - eps };
                let (minus, pat_minus) = scalar_loss(&probe, input, loss_weights);
                unsafe { *slot(&mut probe) = orig };
                out.push((pat_plus == pat_minus).then(|| (plus - minus) / (2.0 * eps)));
            }
        }
    }
    out
}

/// Analytic gradient flattened in the oracle's order.
pub fn flatten(grads: &constellation::nn::Gradients) -> Vec<f64> {
    grads
        .weights
        .iter()
        .flatten()
        .chain(grads.biases.iter().flatten())
        .copied()
        .collect()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Largest relative error between analytic and numeric gradients on one
/// random network and input.
pub fn max_gradient_error(seed: u64, sizes: &[usize]) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::he_uniform(sizes, &mut rng);
    for k in 0..net.num_layers() {
        for b in net.biases_mut(k) {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    let input: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let loss_weights: Vec<f64> = (0..*sizes.last().unwrap())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();

    let (_, trace) = net.forward(&input);
    let (grads, _) = net.backward(&trace, &loss_weights);
    let analytic = flatten(&grads);
    let numeric = finite_difference_gradients(&net, &input, &loss_weights, 1e-5);
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(&numeric)
        .filter_map(|(a, n)| n.map(|n| relative_error(*a, n)))
        .fold(0.0, f64::max)
}

/// Random topology no larger than `[8, 16, 16, 8]`.
pub fn random_sizes(seed: u64) -> Vec<usize> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    vec![
        rng.gen_range(1..=8),
        rng.gen_range(1..=16),
        rng.gen_range(1..=16),
        rng.gen_range(1..=8),
    ]
}
