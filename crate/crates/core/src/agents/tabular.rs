//! Load-balancing heuristic and tabular Q-learning.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{masked_argmax, sample_valid};
use crate::env::{Action, Observation};

/// Moves work from the most loaded operational satellite to the least
/// loaded other one. Ties go to the lowest id. `None` with fewer than two
/// operational satellites.
pub fn load_balancing_select(obs: &Observation) -> Option<Action> {
    let (from, to) = extremes(obs)?;
    Some(Action::new(from, to))
}

fn extremes(obs: &Observation) -> Option<(usize, usize)> {
    let mut from: Option<usize> = None;
    for i in obs.operational() {
        if from.is_none_or(|f| obs.load_fraction(i) > obs.load_fraction(f)) {
            from = Some(i);
        }
    }
    let from = from?;
    let mut to: Option<usize> = None;
    for i in obs.operational().filter(|&i| i != from) {
        if to.is_none_or(|t| obs.load_fraction(i) < obs.load_fraction(t)) {
            to = Some(i);
        }
    }
    Some((from, to?))
}

/// `argmax_load · N + argmin_load` over operational satellites, with the
/// same tie rules as [`load_balancing_select`]. Fewer than two operational
/// satellites map to state 0.
pub fn discretize_state(obs: &Observation) -> u64 {
    let n = obs.num_sats() as u64;
    match extremes(obs) {
        Some((hi, lo)) => hi as u64 * n + lo as u64,
        None => 0,
    }
}

/// With probability `epsilon` a uniform valid index, otherwise the valid
/// argmax (lowest index on ties).
pub fn epsilon_greedy_select<R: Rng + ?Sized>(
    values: &[f64],
    epsilon: f64,
    mask: &[bool],
    rng: &mut R,
) -> usize {
    assert!(mask.iter().any(|&m| m), "no valid action");
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        sample_valid(mask, rng)
    } else {
        masked_argmax(values, mask)
    }
}

/// Sparse action-value table; unseen states read as all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QTableFile", into = "QTableFile")]
pub struct QTable {
    num_actions: usize,
    rows: BTreeMap<u64, Vec<f64>>,
}

/// JSON layout: rows as `[state, values]` pairs in ascending state order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QTableFile {
    pub num_actions: usize,
    pub rows: Vec<(u64, Vec<f64>)>,
}

impl From<QTable> for QTableFile {
    fn from(t: QTable) -> Self {
        Self {
            num_actions: t.num_actions,
            rows: t.rows.into_iter().collect(),
        }
    }
}

impl TryFrom<QTableFile> for QTable {
    type Error = String;

    fn try_from(f: QTableFile) -> Result<Self, String> {
        let mut rows = BTreeMap::new();
        for (s, v) in f.rows {
            if v.len() != f.num_actions {
                return Err(format!(
                    "state {s}: expected {} values, found {}",
                    f.num_actions,
                    v.len()
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("state {s}: non-finite value"));
            }
            if rows.insert(s, v).is_some() {
                return Err(format!("state {s} listed twice"));
            }
        }
        Ok(Self {
            num_actions: f.num_actions,
            rows,
        })
    }
}

impl QTable {
    pub fn new(num_actions: usize) -> Self {
        Self {
            num_actions,
            rows: BTreeMap::new(),
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_states_seen(&self) -> usize {
        self.rows.len()
    }

    pub fn values(&self, state: u64) -> Vec<f64> {
        self.rows
            .get(&state)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.num_actions])
    }

    pub fn get(&self, state: u64, action: usize) -> f64 {
        assert!(action < self.num_actions, "action out of range");
        self.rows.get(&state).map_or(0.0, |r| r[action])
    }

    pub fn set(&mut self, state: u64, action: usize, value: f64) {
        assert!(action < self.num_actions, "action out of range");
        let n = self.num_actions;
        self.rows.entry(state).or_insert_with(|| vec![0.0; n])[action] = value;
    }

    pub fn max_value(&self, state: u64) -> f64 {
        self.rows
            .get(&state)
            .map_or(0.0, |r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }
}

/// One-step Q-learning backup:
/// `Q(s,a) += α·(r + γ·max_a' Q(s',a')·(1 − done) − Q(s,a))`.
#[allow(clippy::too_many_arguments)]
pub fn q_update(
    table: &mut QTable,
    s: u64,
    a: usize,
    r: f64,
    s_next: u64,
    done: bool,
    alpha: f64,
    gamma: f64,
) {
    let bootstrap = if done { 0.0 } else { gamma * table.max_value(s_next) };
    let q = table.get(s, a);
    table.set(s, a, q + alpha * (r + bootstrap - q));
}
