//! The five decision makers: a load-balancing heuristic, tabular
//! Q-learning, REINFORCE, DQN and PPO.
//!
//! Every agent sees the flat observation vector and picks an encoded
//! `(from, to)` transfer. Actions touching a failed satellite are masked out
//! of every selection rule.

mod checkpoint;
mod config;
mod dqn;
mod normalizer;
mod policy;
mod ppo;
mod reinforce;
mod replay;
mod tabular;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{Policy, PolicyModel, AGENT_FORMAT, AGENT_FORMAT_VERSION};
pub use config::{AgentConfig, DqnConfig, PolicyGradientConfig, PpoConfig, QLearningConfig};
pub use dqn::{dqn_target, linear_epsilon, Dqn};
pub use policy::{entropy, masked_argmax, masked_max, masked_softmax, sample_categorical};
pub use normalizer::ObservationNormalizer;
pub use ppo::{clipped_surrogate, gae, ppo_logit_gradient, Ppo, PpoStats};
pub use reinforce::{discounted_returns, normalize, reinforce_logit_gradient, Reinforce};
pub use replay::ReplayBuffer;
pub use tabular::{
    discretize_state, epsilon_greedy_select, load_balancing_select, q_update, QTable, QTableFile,
};

use crate::env::{EnvConfig, Observation};
use crate::error::{Error, Result};
use crate::nn::Mlp;

/// Standardized network inputs are clipped to this magnitude.
pub const OBS_CLIP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentKind {
    LoadBalancing,
    QLearning,
    PolicyGradient,
    #[serde(rename = "DQN")]
    Dqn,
    #[serde(rename = "PPO")]
    Ppo,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::LoadBalancing,
        AgentKind::QLearning,
        AgentKind::PolicyGradient,
        AgentKind::Dqn,
        AgentKind::Ppo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::LoadBalancing => "LoadBalancing",
            AgentKind::QLearning => "QLearning",
            AgentKind::PolicyGradient => "PolicyGradient",
            AgentKind::Dqn => "DQN",
            AgentKind::Ppo => "PPO",
        }
    }

    pub fn is_learned(self) -> bool {
        self != AgentKind::LoadBalancing
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    /// Case-insensitive; also accepts `lb`, `ql`, `pg`, `reinforce`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "loadbalancing" | "load_balancing" | "lb" => AgentKind::LoadBalancing,
            "qlearning" | "q_learning" | "ql" => AgentKind::QLearning,
            "policygradient" | "policy_gradient" | "pg" | "reinforce" => AgentKind::PolicyGradient,
            "dqn" => AgentKind::Dqn,
            "ppo" => AgentKind::Ppo,
            _ => return Err(Error::config(format!("unknown agent `{s}`"))),
        })
    }
}

/// One observed `(s, a, r, s', done)` step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Observation,
    pub action_index: usize,
    pub reward: f64,
    pub next_state: Observation,
    pub done: bool,
}

#[derive(Debug, Clone)]
enum Learner {
    LoadBalancing,
    QLearning { cfg: QLearningConfig, table: QTable },
    PolicyGradient(Reinforce),
    Dqn(Dqn),
    Ppo(Ppo),
}

/// A trainable agent bound to one constellation size.
#[derive(Debug, Clone)]
pub struct Agent {
    kind: AgentKind,
    num_sats: usize,
    learner: Learner,
    rng: ChaCha8Rng,
}

impl Agent {
    /// `total_train_steps` sets the length of any exploration schedule.
    pub fn new(
        kind: AgentKind,
        config: &AgentConfig,
        env: &EnvConfig,
        seed: u64,
        total_train_steps: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs_len = env.observation_len();
        let actions = env.num_actions();
        let learner = match kind {
            AgentKind::LoadBalancing => Learner::LoadBalancing,
            AgentKind::QLearning => Learner::QLearning {
                cfg: config.q_learning.clone(),
                table: QTable::new(actions),
            },
            AgentKind::PolicyGradient => Learner::PolicyGradient(Reinforce::new(
                config.policy_gradient.clone(),
                obs_len,
                actions,
                &mut rng,
            )),
            AgentKind::Dqn => Learner::Dqn(Dqn::new(
                config.dqn.clone(),
                obs_len,
                actions,
                total_train_steps,
                &mut rng,
            )),
            AgentKind::Ppo => {
                Learner::Ppo(Ppo::new(config.ppo.clone(), obs_len, actions, &mut rng))
            }
        };
        Ok(Self {
            kind,
            num_sats: env.num_sats,
            learner,
            rng,
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn num_sats(&self) -> usize {
        self.num_sats
    }

    fn check(&self, obs: &Observation) {
        assert_eq!(
            obs.0.len(),
            3 * self.num_sats + 1,
            "observation does not match agent"
        );
    }

    /// Training-time action, exploring where the method does. Requires at
    /// least two operational satellites.
    pub fn act(&mut self, obs: &Observation) -> usize {
        self.check(obs);
        let mask = obs.action_mask();
        match &mut self.learner {
            Learner::LoadBalancing => load_balancing_select(obs)
                .expect("fewer than two operational satellites")
                .encode(self.num_sats),
            Learner::QLearning { cfg, table } => epsilon_greedy_select(
                &table.values(discretize_state(obs)),
                cfg.epsilon,
                &mask,
                &mut self.rng,
            ),
            Learner::PolicyGradient(pg) => pg.act(obs, &mask, &mut self.rng),
            Learner::Dqn(dqn) => dqn.act(obs, &mask, &mut self.rng),
            Learner::Ppo(ppo) => ppo.act(obs, &mask, &mut self.rng),
        }
    }

    /// Deterministic action of the current policy, no exploration.
    pub fn greedy_action(&self, obs: &Observation) -> usize {
        self.check(obs);
        let mask = obs.action_mask();
        match &self.learner {
            Learner::LoadBalancing => load_balancing_select(obs)
                .expect("fewer than two operational satellites")
                .encode(self.num_sats),
            Learner::QLearning { table, .. } => {
                masked_argmax(&table.values(discretize_state(obs)), &mask)
            }
            Learner::PolicyGradient(pg) => pg.greedy(obs, &mask),
            Learner::Dqn(dqn) => dqn.greedy(obs, &mask),
            Learner::Ppo(ppo) => ppo.greedy(obs, &mask),
        }
    }

    /// Feeds back the outcome of the most recent [`Agent::act`].
    pub fn observe(&mut self, t: Transition) {
        match &mut self.learner {
            Learner::LoadBalancing => {}
            Learner::QLearning { cfg, table } => q_update(
                table,
                discretize_state(&t.state),
                t.action_index,
                t.reward,
                discretize_state(&t.next_state),
                t.done,
                cfg.learning_rate,
                cfg.gamma,
            ),
            Learner::PolicyGradient(pg) => pg.record(&t),
            Learner::Dqn(dqn) => dqn.observe(t, &mut self.rng),
            Learner::Ppo(ppo) => ppo.record(&t),
        }
    }

    /// Episode boundary; the episodic learners update here.
    pub fn end_episode(&mut self) {
        match &mut self.learner {
            Learner::PolicyGradient(pg) => {
                pg.finish_episode();
            }
            Learner::Ppo(ppo) => {
                ppo.finish_episode(&mut self.rng);
            }
            Learner::LoadBalancing | Learner::QLearning { .. } | Learner::Dqn(_) => {}
        }
    }

    /// Immutable snapshot of the current greedy policy.
    pub fn policy(&self) -> Policy {
        let model = match &self.learner {
            Learner::LoadBalancing => PolicyModel::LoadBalancing,
            Learner::QLearning { table, .. } => PolicyModel::QLearning {
                table: table.clone(),
            },
            Learner::PolicyGradient(pg) => PolicyModel::PolicyGradient {
                normalizer: pg.normalizer().clone(),
                policy: pg.network().clone(),
            },
            Learner::Dqn(dqn) => PolicyModel::Dqn {
                normalizer: dqn.normalizer().clone(),
                q_network: dqn.network().clone(),
            },
            Learner::Ppo(ppo) => PolicyModel::Ppo {
                normalizer: ppo.normalizer().clone(),
                policy: ppo.policy_network().clone(),
                value: ppo.value_network().clone(),
            },
        };
        Policy::new(self.num_sats, model)
    }

    pub fn dqn(&self) -> Option<&Dqn> {
        match &self.learner {
            Learner::Dqn(d) => Some(d),
            _ => None,
        }
    }

    pub fn ppo(&self) -> Option<&Ppo> {
        match &self.learner {
            Learner::Ppo(p) => Some(p),
            _ => None,
        }
    }
}

pub(crate) fn network(sizes_in: usize, hidden: &[usize], out: usize, rng: &mut ChaCha8Rng) -> Mlp {
    let mut sizes = vec![sizes_in];
    sizes.extend_from_slice(hidden);
    sizes.push(out);
    Mlp::he_uniform(&sizes, rng).zero_output_layer()
}
