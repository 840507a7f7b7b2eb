//! Frozen policies and their JSON checkpoint format.

use serde::{Deserialize, Serialize};

use super::normalizer::ObservationNormalizer;
use super::policy::masked_argmax;
use super::tabular::{discretize_state, load_balancing_select, QTable};
use super::AgentKind;
use crate::env::{EnvConfig, Observation};
use crate::error::{Error, Result};
use crate::nn::Mlp;

pub const AGENT_FORMAT: &str = "constellation-agent";
pub const AGENT_FORMAT_VERSION: u32 = 1;

/// Parameters of a trained agent, tagged by agent kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "agent", content = "params")]
pub enum PolicyModel {
    LoadBalancing,
    QLearning {
        table: QTable,
    },
    PolicyGradient {
        normalizer: ObservationNormalizer,
        policy: Mlp,
    },
    #[serde(rename = "DQN")]
    Dqn {
        normalizer: ObservationNormalizer,
        q_network: Mlp,
    },
    #[serde(rename = "PPO")]
    Ppo {
        normalizer: ObservationNormalizer,
        policy: Mlp,
        value: Mlp,
    },
}

/// Immutable greedy policy; safe to share across evaluation threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    format: String,
    version: u32,
    num_sats: usize,
    model: PolicyModel,
}

impl Policy {
    pub fn new(num_sats: usize, model: PolicyModel) -> Self {
        Self {
            format: AGENT_FORMAT.to_string(),
            version: AGENT_FORMAT_VERSION,
            num_sats,
            model,
        }
    }

    pub fn num_sats(&self) -> usize {
        self.num_sats
    }

    pub fn model(&self) -> &PolicyModel {
        &self.model
    }

    pub fn kind(&self) -> AgentKind {
        match self.model {
            PolicyModel::LoadBalancing => AgentKind::LoadBalancing,
            PolicyModel::QLearning { .. } => AgentKind::QLearning,
            PolicyModel::PolicyGradient { .. } => AgentKind::PolicyGradient,
            PolicyModel::Dqn { .. } => AgentKind::Dqn,
            PolicyModel::Ppo { .. } => AgentKind::Ppo,
        }
    }

    /// Greedy action; requires at least two operational satellites.
    pub fn action(&self, obs: &Observation) -> usize {
        assert_eq!(obs.num_sats(), self.num_sats, "observation does not match policy");
        let mask = obs.action_mask();
        match &self.model {
            PolicyModel::LoadBalancing => load_balancing_select(obs)
                .expect("fewer than two operational satellites")
                .encode(self.num_sats),
            PolicyModel::QLearning { table } => {
                masked_argmax(&table.values(discretize_state(obs)), &mask)
            }
            PolicyModel::PolicyGradient { normalizer, policy }
            | PolicyModel::Ppo {
                normalizer, policy, ..
            } => masked_argmax(&policy.predict(&normalizer.normalize(obs.as_slice())), &mask),
            PolicyModel::Dqn {
                normalizer,
                q_network,
            } => masked_argmax(&q_network.predict(&normalizer.normalize(obs.as_slice())), &mask),
        }
    }

    /// Checks the header and that every table or network fits `num_sats`.
    pub fn validate(&self) -> Result<()> {
        if self.format != AGENT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown agent format {:?}", self.format)));
        }
        if self.version != AGENT_FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported agent format version {}",
                self.version
            )));
        }
        if self.num_sats < 2 {
            return Err(Error::Checkpoint("num_sats must be at least 2".into()));
        }
        let obs = 3 * self.num_sats + 1;
        let actions = self.num_sats * (self.num_sats - 1);
        let norm = |n: &ObservationNormalizer| -> Result<()> {
            if !n.is_valid() || n.width() != obs {
                return Err(Error::Dimension(format!(
                    "normalizer has width {}, expected {obs}",
                    n.width()
                )));
            }
            Ok(())
        };
        let net = |name: &str, m: &Mlp, out: usize| -> Result<()> {
            if m.input_width() != obs || m.output_width() != out {
                return Err(Error::Dimension(format!(
                    "{name}: network maps {} -> {}, expected {obs} -> {out}",
                    m.input_width(),
                    m.output_width()
                )));
            }
            Ok(())
        };
        match &self.model {
            PolicyModel::LoadBalancing => Ok(()),
            PolicyModel::QLearning { table } => {
                if table.num_actions() != actions {
                    return Err(Error::Dimension(format!(
                        "Q-table has {} actions, expected {actions}",
                        table.num_actions()
                    )));
                }
                Ok(())
            }
            PolicyModel::PolicyGradient { normalizer, policy } => {
                norm(normalizer)?;
                net("policy", policy, actions)
            }
            PolicyModel::Dqn {
                normalizer,
                q_network,
            } => {
                norm(normalizer)?;
                net("q_network", q_network, actions)
            }
            PolicyModel::Ppo {
                normalizer,
                policy,
                value,
            } => {
                norm(normalizer)?;
                net("policy", policy, actions)?;
                net("value", value, 1)
            }
        }
    }

    /// Errors unless the policy was built for this environment size.
    pub fn check_env(&self, env: &EnvConfig) -> Result<()> {
        if env.num_sats != self.num_sats {
            return Err(Error::Dimension(format!(
                "checkpoint is for {} satellites, environment has {}",
                self.num_sats, env.num_sats
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}
