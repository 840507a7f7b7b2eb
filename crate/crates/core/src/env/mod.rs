//! The constellation retasking environment.
//!
//! One agent action per round moves a chunk of tasks between two satellites.
//! Every round each operational satellite then works off part of its queue,
//! satellites fail at random (or when their energy runs out), and the
//! failed satellites' queues are spread over the survivors.

mod action;
mod config;
mod retask;
mod satellite;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use action::{Action, Observation};
pub use config::EnvConfig;
pub use retask::{reconfigure, redistribute_tasks, Redistribution};
pub use satellite::{initialize_satellites, Band, Modulation, SatelliteState, Status};

use crate::error::Result;
use crate::metrics::{self, EpisodeMetrics};
use crate::orbital::{euclidean_distance, gravity_acceleration, propagate, propagation_delay};

/// Escalating failure probability: flat before `start`, then linear in the
/// episode count up to `p_cap`.
pub fn failure_probability_schedule(
    base_p: f64,
    episode: u64,
    start: u64,
    rate: f64,
    p_cap: f64,
) -> f64 {
    if episode < start {
        return base_p;
    }
    (base_p + rate * (episode - start) as f64).min(p_cap)
}

/// Reward for a valid transfer: fraction of a full chunk moved, minus a
/// delay term and a congestion penalty when the receiver ends above 90%.
pub fn compute_reward(
    transfer_effective: f64,
    chunk: f64,
    delay: f64,
    max_delay: f64,
    to_load_after: f64,
    capacity: f64,
) -> f64 {
    debug_assert!(chunk > 0.0);
    let delay_term = if max_delay > 0.0 {
        0.1 * (delay / max_delay)
    } else {
        0.0
    };
    let congestion = if to_load_after > 0.9 * capacity {
        0.5
    } else {
        0.0
    };
    transfer_effective / chunk - delay_term - congestion
}

/// Diagnostics attached to a step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    pub failures_this_step: Vec<usize>,
    /// Simulated response time per new failure, seconds.
    pub response_time_samples: Vec<f64>,
    /// Measured wall-clock response time per new failure, seconds.
    pub wall_response_time_samples: Vec<f64>,
    pub tasks_completed_this_step: f64,
    pub transferred: f64,
    pub dropped: f64,
    pub invalid_action: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, Default)]
struct EpisodeTally {
    initial_tasks: f64,
    completed: f64,
    dropped: f64,
    reward_sum: f64,
    failures: usize,
    response_times: Vec<f64>,
    wall_response_times: Vec<f64>,
    capacity_violations: usize,
    tmax_violations: usize,
}

/// Single-threaded environment instance. Call [`Environment::reset`] before
/// the first [`Environment::step`].
#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    satellites: Vec<SatelliteState>,
    rng: ChaCha8Rng,
    round: usize,
    episode_counter: u64,
    failure_prob: f64,
    max_delay: f64,
    elapsed: f64,
    decision_latency: Duration,
    tally: EpisodeTally,
    started: bool,
}

impl Environment {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let satellites = initialize_satellites(&config, &mut rng)?;
        let failure_prob = config.base_failure_prob;
        Ok(Self {
            config,
            satellites,
            rng,
            round: 0,
            episode_counter: 0,
            failure_prob,
            max_delay: 0.0,
            elapsed: 0.0,
            decision_latency: Duration::ZERO,
            tally: EpisodeTally::default(),
            started: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn satellites(&self) -> &[SatelliteState] {
        &self.satellites
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn episode_counter(&self) -> u64 {
        self.episode_counter
    }

    /// Failure probability in force for the current episode.
    pub fn effective_failure_prob(&self) -> f64 {
        self.failure_prob
    }

    pub fn max_delay(&self) -> f64 {
        self.max_delay
    }

    pub fn num_actions(&self) -> usize {
        self.config.num_actions()
    }

    pub fn operational_count(&self) -> usize {
        self.satellites.iter().filter(|s| s.is_operational()).count()
    }

    /// Latency of the agent's most recent decision; folded into the
    /// wall-clock response time of failures handled in the next step.
    pub fn set_decision_latency(&mut self, latency: Duration) {
        self.decision_latency = latency;
    }

    /// Starts a new episode and returns its first observation.
    ///
    /// Every satellite comes back with fresh properties, failed ones
    /// included. Failed satellites never carry a queue here: it was drained
    /// when they failed.
    pub fn reset(&mut self) -> Observation {
        debug_assert!(self
            .satellites
            .iter()
            .all(|s| s.is_operational() || s.task_load == 0.0));
        self.satellites = initialize_satellites(&self.config, &mut self.rng)
            .expect("configuration validated at construction");
        self.episode_counter += 1;
        self.failure_prob = failure_probability_schedule(
            self.config.base_failure_prob,
            self.episode_counter,
            self.config.failure_escalation_start,
            self.config.failure_escalation_rate,
            self.config.failure_prob_cap,
        );
        self.round = 0;
        self.elapsed = 0.0;
        self.max_delay = self.constellation_diameter_delay();
        self.tally = EpisodeTally {
            initial_tasks: self.satellites.iter().map(|s| s.task_load).sum(),
            ..EpisodeTally::default()
        };
        self.started = true;
        self.observation()
    }

    fn constellation_diameter_delay(&self) -> f64 {
        let mut diameter: f64 = 0.0;
        for (i, a) in self.satellites.iter().enumerate() {
            for b in &self.satellites[i + 1..] {
                diameter = diameter.max(euclidean_distance(a.position, b.position));
            }
        }
        propagation_delay(diameter)
    }

    pub fn observation(&self) -> Observation {
        let cfg = &self.config;
        let mut v = Vec::with_capacity(cfg.observation_len());
        for s in &self.satellites {
            v.push((s.task_load / s.capacity).clamp(0.0, 1.0));
            v.push((s.energy / cfg.initial_energy).clamp(0.0, 1.0));
            v.push(if s.is_operational() { 1.0 } else { 0.0 });
        }
        v.push(self.round as f64 / cfg.rounds_per_episode as f64);
        Observation(v)
    }

    pub fn is_done(&self) -> bool {
        self.round >= self.config.rounds_per_episode || self.operational_count() == 0
    }

    /// Advances one round with the encoded action.
    ///
    /// Panics if `action_index` is outside `[0, N(N−1))`.
    pub fn step(&mut self, action_index: usize) -> StepOutcome {
        assert!(self.started, "step called before reset");
        let n = self.config.num_sats;
        let action = Action::decode(action_index, n);
        let mut info = StepInfo::default();

        if !self.satellites[action.from_sat].is_operational()
            || !self.satellites[action.to_sat].is_operational()
        {
            let reward = self.config.invalid_penalty;
            info.invalid_action = true;
            self.tally.reward_sum += reward;
            self.round += 1;
            return StepOutcome {
                observation: self.observation(),
                reward,
                done: self.is_done(),
                info,
            };
        }

        // transfer
        let (from, to) = (action.from_sat, action.to_sat);
        let distance =
            euclidean_distance(self.satellites[from].position, self.satellites[to].position);
        let delay = propagation_delay(distance);
        let effective = self
            .config
            .chunk_size
            .min(self.satellites[from].task_load)
            .min(self.satellites[to].headroom());
        let cost = self.config.transfer_energy_cost * effective;
        {
            let src = &mut self.satellites[from];
            src.task_load -= effective;
            src.energy = (src.energy - cost).max(0.0);
        }
        {
            let dst = &mut self.satellites[to];
            dst.task_load = (dst.task_load + effective).min(dst.capacity);
            dst.energy = (dst.energy - cost).max(0.0);
        }
        info.transferred = effective;
        let to_load_after = self.satellites[to].task_load;

        // service
        for s in self.satellites.iter_mut().filter(|s| s.is_operational()) {
            let done = self.config.service_rate.min(s.task_load);
            s.task_load -= done;
            info.tasks_completed_this_step += done;
        }
        self.tally.completed += info.tasks_completed_this_step;

        // motion
        let dt = self.config.round_seconds;
        for s in &mut self.satellites {
            let (p, v) = propagate(s.position, s.velocity, gravity_acceleration(s.position), dt);
            s.position = p;
            s.velocity = v;
        }
        self.elapsed += dt;

        // failures: one draw per operational satellite, in id order
        let p = self.failure_prob;
        let mut newly_failed = Vec::new();
        for s in &self.satellites {
            if !s.is_operational() {
                continue;
            }
            let hazard = (p * (2.0 - s.reliability) * 0.5).clamp(0.0, 1.0);
            let draw: f64 = self.rng.gen();
            if s.energy <= 0.0 || draw < hazard {
                newly_failed.push(s.id);
            }
        }
        for &id in &newly_failed {
            self.satellites[id].status = Status::Failed;
        }
        for &id in &newly_failed {
            self.handle_failure(id, &mut info);
        }
        info.failures_this_step = newly_failed;

        let reward = compute_reward(
            effective,
            self.config.chunk_size,
            delay,
            self.max_delay,
            to_load_after,
            self.satellites[to].capacity,
        );
        self.tally.reward_sum += reward;

        let (loads, caps): (Vec<f64>, Vec<f64>) = self
            .satellites
            .iter()
            .filter(|s| s.is_operational())
            .map(|s| (s.task_load, s.capacity))
            .unzip();
        let feasible = metrics::capacity_feasible(&loads, &caps);
        debug_assert!(feasible, "capacity exceeded after step");
        if !feasible {
            self.tally.capacity_violations += 1;
        }

        self.round += 1;
        StepOutcome {
            observation: self.observation(),
            reward,
            done: self.is_done(),
            info,
        }
    }

    fn handle_failure(&mut self, id: usize, info: &mut StepInfo) {
        let started = Instant::now();
        let origin = self.satellites[id].position;
        let redistribution = redistribute_tasks(&mut self.satellites, id);
        reconfigure(
            &mut self.satellites,
            id,
            self.elapsed,
            self.config.reconfig_energy_cost,
        );
        let wall = started.elapsed() + self.decision_latency;

        let simulated = self.simulated_response_time(origin, &redistribution);
        self.tally.failures += 1;
        self.tally.dropped += redistribution.dropped;
        if !metrics::response_time_feasible(&[simulated], self.config.t_max) {
            self.tally.tmax_violations += 1;
        }
        self.tally.response_times.push(simulated);
        self.tally.wall_response_times.push(wall.as_secs_f64());
        info.response_time_samples.push(simulated);
        info.wall_response_time_samples.push(wall.as_secs_f64());
        info.dropped += redistribution.dropped;
    }

    /// Detection latency, plus light time to the farthest receiver, plus a
    /// per-unit retasking cost for the released queue.
    fn simulated_response_time(
        &self,
        origin: crate::orbital::Vec3,
        redistribution: &Redistribution,
    ) -> f64 {
        let farthest = redistribution
            .received
            .iter()
            .map(|&(i, _)| propagation_delay(euclidean_distance(origin, self.satellites[i].position)))
            .fold(0.0, f64::max);
        self.config.detection_seconds
            + farthest
            + self.config.retask_seconds_per_unit * redistribution.released
    }

    /// Metrics for the episode so far.
    pub fn episode_metrics(&self) -> EpisodeMetrics {
        let t = &self.tally;
        let queued: f64 = self.satellites.iter().map(|s| s.task_load).sum();
        let remaining = (queued + t.dropped).clamp(0.0, t.initial_tasks);
        let tcr = metrics::task_completion_rate(t.initial_tasks, remaining).unwrap_or(0.0);
        EpisodeMetrics {
            initial_tasks: t.initial_tasks,
            remaining_tasks: remaining,
            dropped_tasks: t.dropped,
            reward_sum: t.reward_sum,
            rounds: self.round,
            failures: t.failures,
            response_times: t.response_times.clone(),
            wall_response_times: t.wall_response_times.clone(),
            tcr,
            art: metrics::average_response_time(&t.response_times).ok(),
            capacity_violations: t.capacity_violations,
            tmax_violations: t.tmax_violations,
        }
    }

    #[cfg(test)]
    pub(crate) fn satellites_mut(&mut self) -> &mut [SatelliteState] {
        &mut self.satellites
    }
}
