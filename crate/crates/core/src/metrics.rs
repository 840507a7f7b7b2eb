//! Task completion rate, average response time, and the capacity / deadline
//! feasibility checks attached to them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Percentage of initial tasks completed: `(initial - remaining) / initial * 100`.
pub fn task_completion_rate(initial: f64, remaining: f64) -> Result<f64> {
    if !(initial > 0.0) {
        return Err(Error::UndefinedMetric(
            "task completion rate needs a positive initial task count",
        ));
    }
    assert!(
        (0.0..=initial).contains(&remaining),
        "remaining tasks {remaining} outside [0, {initial}]"
    );
    Ok((initial - remaining) / initial * 100.0)
}

/// Arithmetic mean of the response-time samples. Empty input has no mean.
pub fn average_response_time(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::UndefinedMetric(
            "average response time over zero failures",
        ));
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// True iff every load fits its capacity.
pub fn capacity_feasible(loads: &[f64], capacities: &[f64]) -> bool {
    assert_eq!(
        loads.len(),
        capacities.len(),
        "loads and capacities differ in length"
    );
    loads.iter().zip(capacities).all(|(l, c)| l <= c)
}

/// True iff every response time is within `t_max`.
pub fn response_time_feasible(samples: &[f64], t_max: f64) -> bool {
    assert!(t_max > 0.0, "t_max must be positive");
    samples.iter().all(|&t| t <= t_max)
}

/// Per-episode record of rewards, task accounting and failure response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// Tasks present at reset plus any injected later.
    pub initial_tasks: f64,
    /// Tasks still queued at episode end plus tasks dropped on overflow.
    pub remaining_tasks: f64,
    pub dropped_tasks: f64,
    pub reward_sum: f64,
    pub rounds: usize,
    pub failures: usize,
    /// Simulated response time per failure, seconds. Deterministic per seed.
    pub response_times: Vec<f64>,
    /// Measured wall-clock response time per failure, seconds.
    pub wall_response_times: Vec<f64>,
    pub tcr: f64,
    /// Mean of `response_times`; absent when the episode saw no failures.
    pub art: Option<f64>,
    pub capacity_violations: usize,
    pub tmax_violations: usize,
}

impl EpisodeMetrics {
    pub fn art_wall(&self) -> Option<f64> {
        average_response_time(&self.wall_response_times).ok()
    }
}

/// Mean over the episodes that actually produced an ART value.
pub fn mean_present(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Median of a sample; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    })
}
