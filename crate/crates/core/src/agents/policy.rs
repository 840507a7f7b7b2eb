//! Masked action selection shared by the agents.

use rand::Rng;

/// Softmax over the valid entries of `logits`; invalid entries get
/// probability exactly 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    assert_eq!(logits.len(), mask.len(), "logit/mask length mismatch");
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(max.is_finite(), "no valid action");
    let mut probs: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(&l, &m)| if m { (l - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}

/// Shannon entropy in nats.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Valid index with the largest value, lowest index on ties.
pub fn masked_argmax(values: &[f64], mask: &[bool]) -> usize {
    assert_eq!(values.len(), mask.len(), "value/mask length mismatch");
    let mut best: Option<usize> = None;
    for (i, (&v, &m)) in values.iter().zip(mask).enumerate() {
        if m && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best.expect("no valid action")
}

/// Largest valid value, or `None` when nothing is valid.
pub fn masked_max(values: &[f64], mask: &[bool]) -> Option<f64> {
    values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .reduce(f64::max)
}

/// Draws an index from a categorical distribution.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        if u < acc {
            return i;
        }
        last = Some(i);
    }
    last.expect("empty distribution")
}

/// Uniform draw over the valid indices.
pub fn sample_valid<R: Rng + ?Sized>(mask: &[bool], rng: &mut R) -> usize {
    let count = mask.iter().filter(|&&m| m).count();
    assert!(count > 0, "no valid action");
    let k = rng.gen_range(0..count);
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .nth(k)
        .map(|(i, _)| i)
        .unwrap()
}
