//! Monte-Carlo policy gradient with an entropy bonus.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::PolicyGradientConfig;
use super::normalizer::ObservationNormalizer;
use super::policy::{entropy, masked_argmax, masked_softmax, sample_categorical};
use super::{network, Transition};
use crate::env::Observation;
use crate::nn::{clip_gradient_norm, Adam, Gradients, Mlp};

/// `G_t = Σ_{k≥t} γ^{k−t} r_k`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, &r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Zero mean, unit (population) variance, with the deviation floored at 1e-8.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt().max(1e-8);
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// Gradient with respect to the logits of
/// `scale · (−weight · log π(a) − entropy_coef · H(π))`.
///
/// `probs` is the masked softmax; masked entries get zero gradient.
pub fn reinforce_logit_gradient(
    probs: &[f64],
    action: usize,
    weight: f64,
    entropy_coef: f64,
    scale: f64,
    out: &mut [f64],
) {
    let h = entropy(probs);
    for (k, (&p, g)) in probs.iter().zip(out.iter_mut()).enumerate() {
        if p <= 0.0 {
            *g = 0.0;
            continue;
        }
        let indicator = if k == action { 1.0 } else { 0.0 };
        *g = scale * (-weight * (indicator - p) + entropy_coef * p * (p.ln() + h));
    }
}

#[derive(Debug, Clone)]
struct Step {
    obs: Vec<f64>,
    mask: Vec<bool>,
    action: usize,
    reward: f64,
}

#[derive(Debug, Clone)]
pub struct Reinforce {
    cfg: PolicyGradientConfig,
    norm: ObservationNormalizer,
    policy: Mlp,
    opt: Adam,
    episodes: Vec<Vec<Step>>,
    current: Vec<Step>,
}

impl Reinforce {
    pub fn new(
        cfg: PolicyGradientConfig,
        obs_len: usize,
        num_actions: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let policy = network(obs_len, &cfg.hidden, num_actions, rng);
        let opt = Adam::new(&policy, cfg.learning_rate);
        Self {
            cfg,
            norm: ObservationNormalizer::new(obs_len, super::OBS_CLIP),
            policy,
            opt,
            episodes: Vec::new(),
            current: Vec::new(),
        }
    }

    pub fn network(&self) -> &Mlp {
        &self.policy
    }

    pub fn normalizer(&self) -> &ObservationNormalizer {
        &self.norm
    }

    /// Samples from the current policy; folds `obs` into the input
    /// statistics first.
    pub fn act<R: Rng + ?Sized>(&mut self, obs: &Observation, mask: &[bool], rng: &mut R) -> usize {
        self.norm.update(obs.as_slice());
        let input = self.norm.normalize(obs.as_slice());
        let probs = masked_softmax(&self.policy.predict(&input), mask);
        sample_categorical(&probs, rng)
    }

    pub fn greedy(&self, obs: &Observation, mask: &[bool]) -> usize {
        masked_argmax(&self.policy.predict(&self.norm.normalize(obs.as_slice())), mask)
    }

    pub fn record(&mut self, t: &Transition) {
        self.current.push(Step {
            obs: t.state.0.clone(),
            mask: t.state.action_mask(),
            action: t.action_index,
            reward: t.reward,
        });
    }

    /// Closes the episode and updates once every `update_every` episodes.
    /// Returns the pre-clip gradient norm when an update happened.
    pub fn finish_episode(&mut self) -> Option<f64> {
        let ep = std::mem::take(&mut self.current);
        if !ep.is_empty() {
            self.episodes.push(ep);
        }
        if self.episodes.len() < self.cfg.update_every {
            return None;
        }
        let episodes = std::mem::take(&mut self.episodes);
        self.update(&episodes)
    }

    fn update(&mut self, episodes: &[Vec<Step>]) -> Option<f64> {
        let mut steps: Vec<&Step> = Vec::new();
        let mut weights = Vec::new();
        for ep in episodes {
            let rewards: Vec<f64> = ep.iter().map(|s| s.reward).collect();
            weights.extend(normalize(&discounted_returns(&rewards, self.cfg.gamma)));
            steps.extend(ep.iter());
        }
        if steps.is_empty() {
            return None;
        }
        let width = self.policy.input_width();
        let actions = self.policy.output_width();
        let batch = steps.len();
        let mut inputs = Vec::with_capacity(batch * width);
        for s in &steps {
            self.norm.normalize_into(&s.obs, &mut inputs);
        }
        let trace = self.policy.forward_batch(&inputs, batch);
        let logits = trace.output();
        let mut out_grad = vec![0.0; batch * actions];
        let scale = 1.0 / batch as f64;
        for (b, s) in steps.iter().enumerate() {
            let probs = masked_softmax(&logits[b * actions..(b + 1) * actions], &s.mask);
            reinforce_logit_gradient(
                &probs,
                s.action,
                weights[b],
                self.cfg.entropy_coef,
                scale,
                &mut out_grad[b * actions..(b + 1) * actions],
            );
        }
        let mut grads = Gradients::zeros_like(&self.policy);
        self.policy.backward_into(&trace, &out_grad, &mut grads, false);
        let norm = clip_gradient_norm(&mut grads, self.cfg.grad_clip);
        self.opt.step(&mut self.policy, &grads);
        Some(norm)
    }
}
