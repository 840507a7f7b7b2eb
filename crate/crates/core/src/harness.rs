//! Training and evaluation loops, seed sweeps and the multi-agent
//! comparison.

use std::time::Instant;

use log::{debug, info};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{Agent, AgentConfig, AgentKind, Policy, Transition};
use crate::env::{EnvConfig, Environment, Observation};
use crate::error::{Error, Result};
use crate::metrics::{self, EpisodeMetrics};

/// Action sent when fewer than two satellites remain operational: every
/// transfer is invalid then, so the round is spent on the penalty path.
pub const SENTINEL_ACTION: usize = 0;

/// One agent trained and evaluated over a list of seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub env: EnvConfig,
    pub agent: AgentKind,
    pub agent_config: AgentConfig,
    pub train_episodes: usize,
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
}

/// Experiment file: a shared environment and several agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub env: EnvConfig,
    #[serde(default = "all_agents")]
    pub agents: Vec<AgentKind>,
    #[serde(default)]
    pub agent_config: AgentConfig,
    pub train_episodes: usize,
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
}

fn all_agents() -> Vec<AgentKind> {
    AgentKind::ALL.to_vec()
}

impl ExperimentConfig {
    /// Default comparison: 8 satellites, 200 training and 50 evaluation
    /// episodes, five seeds.
    pub fn desk_scale() -> Self {
        Self {
            experiment_id: "desk".into(),
            env: EnvConfig::desk_scale(),
            agents: all_agents(),
            agent_config: AgentConfig::default(),
            train_episodes: 200,
            eval_episodes: 50,
            seeds: vec![0, 1, 2, 3, 4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.agent_config.validate()?;
        if self.experiment_id.is_empty() {
            return Err(Error::config("field `experiment_id`: must not be empty"));
        }
        if self.agents.is_empty() {
            return Err(Error::config("field `agents`: must list at least one agent"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if self.agents[..i].contains(a) {
                return Err(Error::config(format!("field `agents`: {a} listed twice")));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::config("field `seeds`: must list at least one seed"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("field `eval_episodes`: must be positive"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn specs(&self) -> Vec<ExperimentSpec> {
        self.agents
            .iter()
            .map(|&agent| ExperimentSpec {
                env: self.env.clone(),
                agent,
                agent_config: self.agent_config.clone(),
                train_episodes: self.train_episodes,
                eval_episodes: self.eval_episodes,
                seeds: self.seeds.clone(),
            })
            .collect()
    }
}

/// Independent 64-bit seed for `stream` derived from a run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

const AGENT_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;

#[derive(Debug, Clone)]
pub struct TrainedAgent {
    pub agent: Agent,
    /// Metrics of every training episode, in order.
    pub curve: Vec<EpisodeMetrics>,
}

/// Trains one agent on the environment seeded with `seed`.
pub fn train_agent(spec: &ExperimentSpec, seed: u64) -> Result<TrainedAgent> {
    let env_cfg = spec.env.clone().with_seed(seed);
    let mut env = Environment::new(env_cfg.clone())?;
    let horizon = (spec.train_episodes * env_cfg.rounds_per_episode) as u64;
    let mut agent = Agent::new(
        spec.agent,
        &spec.agent_config,
        &env_cfg,
        derive_seed(seed, AGENT_STREAM),
        horizon,
    )?;
    let mut curve = Vec::with_capacity(spec.train_episodes);
    for episode in 0..spec.train_episodes {
        let mut obs = env.reset();
        while !env.is_done() {
            if env.operational_count() < 2 {
                obs = env.step(SENTINEL_ACTION).observation;
                continue;
            }
            let started = Instant::now();
            let action = agent.act(&obs);
            env.set_decision_latency(started.elapsed());
            let out = env.step(action);
            let next = out.observation.clone();
            agent.observe(Transition {
                state: obs,
                action_index: action,
                reward: out.reward,
                next_state: out.observation,
                done: out.done,
            });
            obs = next;
        }
        agent.end_episode();
        let m = env.episode_metrics();
        debug!(
            "{} seed {seed} episode {episode}: reward {:.3} tcr {:.2}",
            spec.agent, m.reward_sum, m.tcr
        );
        curve.push(m);
    }
    Ok(TrainedAgent { agent, curve })
}

/// Aggregate of a frozen policy over evaluation episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub episodes: Vec<EpisodeMetrics>,
    pub mean_reward: f64,
    pub mean_tcr: f64,
    /// Mean over episodes that had failures; absent if none did.
    pub mean_art: Option<f64>,
    pub capacity_violations: usize,
    pub tmax_violations: usize,
    pub failures: usize,
}

impl Evaluation {
    pub fn from_episodes(episodes: Vec<EpisodeMetrics>) -> Self {
        Self {
            mean_reward: metrics::mean(episodes.iter().map(|m| m.reward_sum)),
            mean_tcr: metrics::mean(episodes.iter().map(|m| m.tcr)),
            mean_art: metrics::mean_present(episodes.iter().map(|m| m.art)),
            capacity_violations: episodes.iter().map(|m| m.capacity_violations).sum(),
            tmax_violations: episodes.iter().map(|m| m.tmax_violations).sum(),
            failures: episodes.iter().map(|m| m.failures).sum(),
            episodes,
        }
    }
}

/// Runs `eval_episodes` greedy episodes on an environment whose seed is
/// derived from `seed`. The policy is borrowed immutably.
pub fn evaluate_agent(
    policy: &Policy,
    env_config: &EnvConfig,
    eval_episodes: usize,
    seed: u64,
) -> Result<Evaluation> {
    policy.check_env(env_config)?;
    let mut env = Environment::new(env_config.clone().with_seed(derive_seed(seed, EVAL_STREAM)))?;
    let mut episodes = Vec::with_capacity(eval_episodes);
    for _ in 0..eval_episodes {
        episodes.push(run_episode(policy, &mut env, |_, _, _| {}));
    }
    Ok(Evaluation::from_episodes(episodes))
}

/// Plays one greedy episode, calling `on_step(observation, action, outcome)`
/// after every round.
pub fn run_episode(
    policy: &Policy,
    env: &mut Environment,
    mut on_step: impl FnMut(&Observation, usize, &crate::env::StepOutcome),
) -> EpisodeMetrics {
    let mut obs = env.reset();
    while !env.is_done() {
        let action = if env.operational_count() < 2 {
            SENTINEL_ACTION
        } else {
            let started = Instant::now();
            let a = policy.action(&obs);
            env.set_decision_latency(started.elapsed());
            a
        };
        let out = env.step(action);
        on_step(&obs, action, &out);
        obs = out.observation;
    }
    env.episode_metrics()
}

/// One (agent, seed) cell of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub agent: AgentKind,
    pub seed: u64,
    pub training: Vec<EpisodeMetrics>,
    pub evaluation: Evaluation,
}

/// Median across seeds of the per-seed means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: AgentKind,
    pub median_reward: f64,
    pub median_tcr: f64,
    pub median_art: Option<f64>,
    pub capacity_violations: usize,
    pub tmax_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub experiment_id: String,
    /// Agent-major, seed-minor, in input order.
    pub cells: Vec<CellResult>,
    /// One entry per agent, in input order.
    pub summary: Vec<AgentSummary>,
}

impl ComparisonReport {
    pub fn summary_for(&self, agent: AgentKind) -> Option<&AgentSummary> {
        self.summary.iter().find(|s| s.agent == agent)
    }
}

pub fn summarize(agent: AgentKind, cells: &[&CellResult]) -> AgentSummary {
    let rewards: Vec<f64> = cells.iter().map(|c| c.evaluation.mean_reward).collect();
    let tcrs: Vec<f64> = cells.iter().map(|c| c.evaluation.mean_tcr).collect();
    let arts: Vec<f64> = cells.iter().filter_map(|c| c.evaluation.mean_art).collect();
    AgentSummary {
        agent,
        median_reward: metrics::median(&rewards).unwrap_or(f64::NAN),
        median_tcr: metrics::median(&tcrs).unwrap_or(f64::NAN),
        median_art: metrics::median(&arts),
        capacity_violations: cells.iter().map(|c| c.evaluation.capacity_violations).sum(),
        tmax_violations: cells.iter().map(|c| c.evaluation.tmax_violations).sum(),
    }
}

/// Trains and evaluates every agent on every seed. Cells run in parallel;
/// the report order follows the input.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let specs = config.specs();
    let jobs: Vec<(&ExperimentSpec, u64)> = specs
        .iter()
        .flat_map(|s| s.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(spec, seed)| -> Result<CellResult> {
            let started = Instant::now();
            let trained = train_agent(spec, seed)?;
            let evaluation =
                evaluate_agent(&trained.agent.policy(), &spec.env, spec.eval_episodes, seed)?;
            info!(
                "{} seed {seed}: eval reward {:.3} tcr {:.2} ({:.1}s)",
                spec.agent,
                evaluation.mean_reward,
                evaluation.mean_tcr,
                started.elapsed().as_secs_f64()
            );
            Ok(CellResult {
                agent: spec.agent,
                seed,
                training: trained.curve,
                evaluation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = config
        .agents
        .iter()
        .map(|&a| {
            let mine: Vec<&CellResult> = cells.iter().filter(|c| c.agent == a).collect();
            summarize(a, &mine)
        })
        .collect();
    Ok(ComparisonReport {
        experiment_id: config.experiment_id.clone(),
        cells,
        summary,
    })
}
