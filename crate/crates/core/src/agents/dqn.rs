//! Deep Q-network with uniform experience replay and a periodically copied
//! target network.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::DqnConfig;
use super::normalizer::ObservationNormalizer;
use super::policy::{masked_argmax, masked_max, sample_valid};
use super::tabular::epsilon_greedy_select;
use super::{network, ReplayBuffer, Transition};
use crate::env::Observation;
use crate::nn::{Adam, Gradients, Mlp};

/// Bootstrap target `r + γ·(1 − done)·max Q_target(s', ·)`. A next state
/// with no valid action contributes nothing.
pub fn dqn_target(reward: f64, gamma: f64, done: bool, next_max: Option<f64>) -> f64 {
    match (done, next_max) {
        (false, Some(q)) => reward + gamma * q,
        _ => reward,
    }
}

/// Linear decay from `start` to `end` over the first `fraction` of
/// `horizon` steps, then flat at `end`.
pub fn linear_epsilon(step: u64, horizon: u64, start: f64, end: f64, fraction: f64) -> f64 {
    let decay_steps = (horizon as f64 * fraction).round();
    if decay_steps <= 0.0 {
        return end;
    }
    let t = (step as f64 / decay_steps).min(1.0);
    start + (end - start) * t
}

#[derive(Debug, Clone)]
pub struct Dqn {
    cfg: DqnConfig,
    norm: ObservationNormalizer,
    qnet: Mlp,
    target: Mlp,
    opt: Adam,
    buffer: ReplayBuffer,
    env_steps: u64,
    grad_steps: u64,
    horizon: u64,
}

impl Dqn {
    pub fn new(
        cfg: DqnConfig,
        obs_len: usize,
        num_actions: usize,
        horizon: u64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let qnet = network(obs_len, &cfg.hidden, num_actions, rng);
        let target = qnet.clone();
        let opt = Adam::new(&qnet, cfg.learning_rate);
        let buffer = ReplayBuffer::new(cfg.buffer_capacity);
        Self {
            cfg,
            norm: ObservationNormalizer::new(obs_len, super::OBS_CLIP),
            qnet,
            target,
            opt,
            buffer,
            env_steps: 0,
            grad_steps: 0,
            horizon,
        }
    }

    pub fn network(&self) -> &Mlp {
        &self.qnet
    }

    pub fn normalizer(&self) -> &ObservationNormalizer {
        &self.norm
    }

    pub fn target_network(&self) -> &Mlp {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn gradient_steps(&self) -> u64 {
        self.grad_steps
    }

    pub fn epsilon(&self) -> f64 {
        linear_epsilon(
            self.env_steps,
            self.horizon,
            self.cfg.epsilon_start,
            self.cfg.epsilon_end,
            self.cfg.epsilon_decay_fraction,
        )
    }

    /// ε-greedy action; folds `obs` into the input statistics first.
    pub fn act<R: Rng + ?Sized>(&mut self, obs: &Observation, mask: &[bool], rng: &mut R) -> usize {
        self.norm.update(obs.as_slice());
        let eps = self.epsilon();
        if eps >= 1.0 {
            return sample_valid(mask, rng);
        }
        let q = self.qnet.predict(&self.norm.normalize(obs.as_slice()));
        epsilon_greedy_select(&q, eps, mask, rng)
    }

    pub fn greedy(&self, obs: &Observation, mask: &[bool]) -> usize {
        masked_argmax(&self.qnet.predict(&self.norm.normalize(obs.as_slice())), mask)
    }

    /// Q-values of the online network.
    pub fn q_values(&self, obs: &Observation) -> Vec<f64> {
        self.qnet.predict(&self.norm.normalize(obs.as_slice()))
    }

    /// Stores the transition and takes one gradient step once the buffer
    /// holds a full batch.
    pub fn observe<R: Rng + ?Sized>(&mut self, t: Transition, rng: &mut R) {
        self.buffer.push(t);
        self.env_steps += 1;
        self.update(rng);
    }

    pub fn sync_target(&mut self) {
        self.target.copy_from(&self.qnet);
    }

    /// One minibatch step on the squared TD error. Returns the loss, or
    /// `None` while the buffer is smaller than a batch.
    pub fn update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<f64> {
        let batch = self.cfg.batch_size;
        if self.buffer.len() < batch {
            return None;
        }
        let idx = self.buffer.sample_indices(batch, rng);
        let width = self.qnet.input_width();
        let actions = self.qnet.output_width();
        let mut states = Vec::with_capacity(batch * width);
        let mut next_states = Vec::with_capacity(batch * width);
        for &i in &idx {
            let t = self.buffer.get(i);
            self.norm.normalize_into(t.state.as_slice(), &mut states);
            self.norm.normalize_into(t.next_state.as_slice(), &mut next_states);
        }
        let next_q = self.target.forward_batch(&next_states, batch);
        let trace = self.qnet.forward_batch(&states, batch);
        let q = trace.output();

        let mut out_grad = vec![0.0; batch * actions];
        let mut loss = 0.0;
        for (b, &i) in idx.iter().enumerate() {
            let t = self.buffer.get(i);
            let mask = t.next_state.action_mask();
            let next_max = masked_max(&next_q.output()[b * actions..(b + 1) * actions], &mask);
            let y = dqn_target(t.reward, self.cfg.gamma, t.done, next_max);
            let err = q[b * actions + t.action_index] - y;
            loss += err * err;
            out_grad[b * actions + t.action_index] = 2.0 * err / batch as f64;
        }
        let mut grads = Gradients::zeros_like(&self.qnet);
        self.qnet.backward_into(&trace, &out_grad, &mut grads, false);
        self.opt.step(&mut self.qnet, &grads);
        self.grad_steps += 1;
        if self.grad_steps.is_multiple_of(self.cfg.target_update_every) {
            self.sync_target();
        }
        Some(loss / batch as f64)
    }
}
