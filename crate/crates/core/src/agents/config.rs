use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

/// Policy-gradient nets train on far fewer updates than DQN and need the width.
fn wide_hidden() -> Vec<usize> {
    vec![256, 256]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QLearningConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            gamma: 0.99,
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyGradientConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    /// Accepted for completeness; every update uses the whole episode.
    pub batch_size: usize,
    pub entropy_coef: f64,
    pub grad_clip: f64,
    /// Episodes between updates.
    pub update_every: usize,
    pub hidden: Vec<usize>,
}

impl Default for PolicyGradientConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            gamma: 0.99,
            batch_size: 32,
            entropy_coef: 0.01,
            grad_clip: 0.5,
            update_every: 1,
            hidden: wide_hidden(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of all training steps over which ε falls linearly.
    pub epsilon_decay_fraction: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient steps between target-network copies.
    pub target_update_every: u64,
    pub hidden: Vec<usize>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_decay_fraction: 0.2,
            batch_size: 64,
            buffer_capacity: 10_000,
            target_update_every: 1000,
            hidden: default_hidden(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    /// Optimization passes over each rollout.
    pub epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub grad_clip: f64,
    pub hidden: Vec<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs: 4,
            minibatch_size: 64,
            entropy_coef: 0.01,
            value_coef: 0.5,
            grad_clip: 0.5,
            hidden: wide_hidden(),
        }
    }
}

/// Hyperparameters for every learned agent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub q_learning: QLearningConfig,
    pub policy_gradient: PolicyGradientConfig,
    pub dqn: DqnConfig,
    pub ppo: PpoConfig,
}

fn check(ok: bool, field: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("field `{field}`: {msg}")))
    }
}

fn check_gamma(g: f64, field: &str) -> Result<()> {
    check(g > 0.0 && g <= 1.0, field, "must be in (0, 1]")
}

fn check_lr(lr: f64, field: &str) -> Result<()> {
    check(lr > 0.0 && lr.is_finite(), field, "must be positive")
}

fn check_prob(p: f64, field: &str) -> Result<()> {
    check((0.0..=1.0).contains(&p), field, "must be in [0, 1]")
}

fn check_hidden(h: &[usize], field: &str) -> Result<()> {
    check(h.iter().all(|&w| w > 0), field, "layer widths must be positive")
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let q = &self.q_learning;
        check_lr(q.learning_rate, "q_learning.learning_rate")?;
        check(q.learning_rate <= 1.0, "q_learning.learning_rate", "must be at most 1")?;
        check_gamma(q.gamma, "q_learning.gamma")?;
        check_prob(q.epsilon, "q_learning.epsilon")?;

        let pg = &self.policy_gradient;
        check_lr(pg.learning_rate, "policy_gradient.learning_rate")?;
        check_gamma(pg.gamma, "policy_gradient.gamma")?;
        check(pg.batch_size > 0, "policy_gradient.batch_size", "must be positive")?;
        check(pg.entropy_coef >= 0.0, "policy_gradient.entropy_coef", "must be non-negative")?;
        check(pg.grad_clip > 0.0, "policy_gradient.grad_clip", "must be positive")?;
        check(pg.update_every > 0, "policy_gradient.update_every", "must be positive")?;
        check_hidden(&pg.hidden, "policy_gradient.hidden")?;

        let d = &self.dqn;
        check_lr(d.learning_rate, "dqn.learning_rate")?;
        check_gamma(d.gamma, "dqn.gamma")?;
        check_prob(d.epsilon_start, "dqn.epsilon_start")?;
        check_prob(d.epsilon_end, "dqn.epsilon_end")?;
        check_prob(d.epsilon_decay_fraction, "dqn.epsilon_decay_fraction")?;
        check(d.batch_size > 0, "dqn.batch_size", "must be positive")?;
        check(
            d.buffer_capacity >= d.batch_size,
            "dqn.buffer_capacity",
            "must hold at least one batch",
        )?;
        check(d.target_update_every > 0, "dqn.target_update_every", "must be positive")?;
        check_hidden(&d.hidden, "dqn.hidden")?;

        let p = &self.ppo;
        check_lr(p.learning_rate, "ppo.learning_rate")?;
        check_gamma(p.gamma, "ppo.gamma")?;
        check_prob(p.gae_lambda, "ppo.gae_lambda")?;
        check(p.clip_epsilon > 0.0 && p.clip_epsilon < 1.0, "ppo.clip_epsilon", "must be in (0, 1)")?;
        check(p.epochs > 0, "ppo.epochs", "must be positive")?;
        check(p.minibatch_size > 0, "ppo.minibatch_size", "must be positive")?;
        check(p.entropy_coef >= 0.0, "ppo.entropy_coef", "must be non-negative")?;
        check(p.value_coef > 0.0, "ppo.value_coef", "must be positive")?;
        check(p.grad_clip > 0.0, "ppo.grad_clip", "must be positive")?;
        check_hidden(&p.hidden, "ppo.hidden")?;
        Ok(())
    }
}
