//! Proximal policy optimization with a clipped surrogate, GAE advantages and
//! separate policy and value networks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::PpoConfig;
use super::normalizer::ObservationNormalizer;
use super::policy::{masked_argmax, masked_softmax, sample_categorical};
use super::reinforce::{normalize, reinforce_logit_gradient};
use super::{network, Transition};
use crate::env::Observation;
use crate::nn::{clip_gradient_norm, Adam, Gradients, Mlp};

/// Per-sample objective `min(ρ·Â, clamp(ρ, 1−ε, 1+ε)·Â)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// Generalized advantage estimates and value targets (`Â + V`).
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && next_values.len() == n && dones.len() == n);
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_values[t] * live - values[t];
        acc = delta + gamma * lambda * live * acc;
        adv[t] = acc;
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, targets)
}

/// Logit gradient of `scale · (−clipped_surrogate − entropy_coef · H)` for
/// one sample. Returns the probability ratio.
#[allow(clippy::too_many_arguments)]
pub fn ppo_logit_gradient(
    probs: &[f64],
    action: usize,
    old_log_prob: f64,
    advantage: f64,
    clip: f64,
    entropy_coef: f64,
    scale: f64,
    out: &mut [f64],
) -> f64 {
    let ratio = (probs[action].ln() - old_log_prob).exp();
    let saturated = (advantage > 0.0 && ratio > 1.0 + clip) || (advantage < 0.0 && ratio < 1.0 - clip);
    let weight = if saturated { 0.0 } else { ratio * advantage };
    reinforce_logit_gradient(probs, action, weight, entropy_coef, scale, out);
    ratio
}

#[derive(Debug, Clone)]
struct Step {
    /// Normalized input the action was sampled from.
    input: Vec<f64>,
    mask: Vec<bool>,
    action: usize,
    log_prob: f64,
    value: f64,
    reward: f64,
    done: bool,
    next_obs: Vec<f64>,
}

/// Diagnostics from one rollout update.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoStats {
    /// Probability ratios of the first minibatch of the first epoch.
    pub first_minibatch_ratios: Vec<f64>,
    pub minibatches: usize,
    pub mean_policy_objective: f64,
    pub mean_value_loss: f64,
}

#[derive(Debug, Clone)]
pub struct Ppo {
    cfg: PpoConfig,
    norm: ObservationNormalizer,
    policy: Mlp,
    value: Mlp,
    policy_opt: Adam,
    value_opt: Adam,
    rollout: Vec<Step>,
    pending: Option<Pending>,
}

#[derive(Debug, Clone)]
struct Pending {
    action: usize,
    log_prob: f64,
    value: f64,
    input: Vec<f64>,
}

impl Ppo {
    pub fn new(cfg: PpoConfig, obs_len: usize, num_actions: usize, rng: &mut ChaCha8Rng) -> Self {
        let policy = network(obs_len, &cfg.hidden, num_actions, rng);
        let value = network(obs_len, &cfg.hidden, 1, rng);
        let policy_opt = Adam::new(&policy, cfg.learning_rate);
        let value_opt = Adam::new(&value, cfg.learning_rate);
        Self {
            cfg,
            norm: ObservationNormalizer::new(obs_len, super::OBS_CLIP),
            policy,
            value,
            policy_opt,
            value_opt,
            rollout: Vec::new(),
            pending: None,
        }
    }

    pub fn policy_network(&self) -> &Mlp {
        &self.policy
    }

    pub fn normalizer(&self) -> &ObservationNormalizer {
        &self.norm
    }

    pub fn value_network(&self) -> &Mlp {
        &self.value
    }

    pub fn rollout_len(&self) -> usize {
        self.rollout.len()
    }

    /// Samples an action and remembers its log-probability and the state
    /// value for the matching [`Ppo::record`].
    pub fn act<R: Rng + ?Sized>(&mut self, obs: &Observation, mask: &[bool], rng: &mut R) -> usize {
        self.norm.update(obs.as_slice());
        let input = self.norm.normalize(obs.as_slice());
        let probs = masked_softmax(&self.policy.predict(&input), mask);
        let action = sample_categorical(&probs, rng);
        let value = self.value.predict(&input)[0];
        self.pending = Some(Pending {
            action,
            log_prob: probs[action].ln(),
            value,
            input,
        });
        action
    }

    pub fn greedy(&self, obs: &Observation, mask: &[bool]) -> usize {
        masked_argmax(&self.policy.predict(&self.norm.normalize(obs.as_slice())), mask)
    }

    pub fn record(&mut self, t: &Transition) {
        let p = self.pending.take().expect("record without act");
        assert_eq!(p.action, t.action_index, "transition does not match the last action");
        self.rollout.push(Step {
            input: p.input,
            mask: t.state.action_mask(),
            action: p.action,
            log_prob: p.log_prob,
            value: p.value,
            reward: t.reward,
            done: t.done,
            next_obs: t.next_state.0.clone(),
        });
    }

    /// Updates on the collected rollout and clears it.
    pub fn finish_episode<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<PpoStats> {
        self.pending = None;
        let rollout = std::mem::take(&mut self.rollout);
        if rollout.is_empty() {
            return None;
        }
        Some(self.update(&rollout, rng))
    }

    fn update<R: Rng + ?Sized>(&mut self, rollout: &[Step], rng: &mut R) -> PpoStats {
        let n = rollout.len();
        let width = self.policy.input_width();
        let actions = self.policy.output_width();

        let mut next_inputs = Vec::with_capacity(n * width);
        for s in rollout {
            self.norm.normalize_into(&s.next_obs, &mut next_inputs);
        }
        let next_values = self.value.forward_batch(&next_inputs, n).output().to_vec();
        let rewards: Vec<f64> = rollout.iter().map(|s| s.reward).collect();
        let values: Vec<f64> = rollout.iter().map(|s| s.value).collect();
        let dones: Vec<bool> = rollout.iter().map(|s| s.done).collect();
        let (adv, targets) = gae(
            &rewards,
            &values,
            &next_values,
            &dones,
            self.cfg.gamma,
            self.cfg.gae_lambda,
        );
        let adv = normalize(&adv);

        let mut order: Vec<usize> = (0..n).collect();
        let mut stats = PpoStats {
            first_minibatch_ratios: Vec::new(),
            minibatches: 0,
            mean_policy_objective: 0.0,
            mean_value_loss: 0.0,
        };
        let mut inputs = Vec::with_capacity(self.cfg.minibatch_size * width);
        for _ in 0..self.cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(self.cfg.minibatch_size) {
                let b = chunk.len();
                let scale = 1.0 / b as f64;
                inputs.clear();
                for &i in chunk {
                    inputs.extend_from_slice(&rollout[i].input);
                }

                let trace = self.policy.forward_batch(&inputs, b);
                let mut out_grad = vec![0.0; b * actions];
                let mut objective = 0.0;
                for (row, &i) in chunk.iter().enumerate() {
                    let s = &rollout[i];
                    let logits = &trace.output()[row * actions..(row + 1) * actions];
                    let probs = masked_softmax(logits, &s.mask);
                    let ratio = ppo_logit_gradient(
                        &probs,
                        s.action,
                        s.log_prob,
                        adv[i],
                        self.cfg.clip_epsilon,
                        self.cfg.entropy_coef,
                        scale,
                        &mut out_grad[row * actions..(row + 1) * actions],
                    );
                    objective += clipped_surrogate(ratio, adv[i], self.cfg.clip_epsilon);
                    if stats.minibatches == 0 {
                        stats.first_minibatch_ratios.push(ratio);
                    }
                }
                let mut grads = Gradients::zeros_like(&self.policy);
                self.policy.backward_into(&trace, &out_grad, &mut grads, false);
                clip_gradient_norm(&mut grads, self.cfg.grad_clip);
                self.policy_opt.step(&mut self.policy, &grads);

                let vtrace = self.value.forward_batch(&inputs, b);
                let mut vgrad = vec![0.0; b];
                let mut vloss = 0.0;
                for (row, &i) in chunk.iter().enumerate() {
                    let err = vtrace.output()[row] - targets[i];
                    vloss += err * err * scale;
                    vgrad[row] = self.cfg.value_coef * 2.0 * err * scale;
                }
                let mut grads = Gradients::zeros_like(&self.value);
                self.value.backward_into(&vtrace, &vgrad, &mut grads, false);
                clip_gradient_norm(&mut grads, self.cfg.grad_clip);
                self.value_opt.step(&mut self.value, &grads);

                stats.minibatches += 1;
                stats.mean_policy_objective += objective * scale;
                stats.mean_value_loss += vloss;
            }
        }
        stats.mean_policy_objective /= stats.minibatches as f64;
        stats.mean_value_loss /= stats.minibatches as f64;
        stats
    }
}
