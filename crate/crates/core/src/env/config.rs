use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbital::EARTH_RADIUS_KM;

/// Environment parameters. The JSON document uses these field names verbatim.
///
/// The first block of fields is mandatory in configuration files; the rest
/// fall back to the defaults listed on each field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub num_sats: usize,
    pub rounds_per_episode: usize,
    /// Per-satellite, per-round failure probability before escalation.
    pub base_failure_prob: f64,
    /// Episode count at which the failure probability starts to climb.
    pub failure_escalation_start: u64,
    /// Added failure probability per episode past the escalation start.
    pub failure_escalation_rate: f64,
    /// Uniform range `[lo, hi]` for task loads drawn at reset.
    pub initial_load_range: [f64; 2],
    pub capacity: f64,
    pub initial_energy: f64,
    /// Task units moved by one transfer action.
    pub chunk_size: f64,
    /// Response-time deadline, seconds.
    pub t_max: f64,
    pub seed: u64,

    /// Ceiling on the escalated failure probability. Default 0.2.
    #[serde(default = "defaults::failure_prob_cap")]
    pub failure_prob_cap: f64,
    /// Orbital planes; defaults to the largest divisor of `num_sats` not above 6.
    #[serde(default)]
    pub planes: Option<usize>,
    /// Default 55°.
    #[serde(default = "defaults::inclination_deg")]
    pub inclination_deg: f64,
    /// Default 26560 km.
    #[serde(default = "defaults::orbit_radius_km")]
    pub orbit_radius_km: f64,
    /// Task units each operational satellite completes per round. Default 2.
    #[serde(default = "defaults::service_rate")]
    pub service_rate: f64,
    /// Energy charged to both ends of a transfer, per task unit. Default 0.05.
    #[serde(default = "defaults::transfer_energy_cost")]
    pub transfer_energy_cost: f64,
    /// Energy charged to each satellite re-spaced after a failure. Default 1.0.
    #[serde(default = "defaults::reconfig_energy_cost")]
    pub reconfig_energy_cost: f64,
    /// Reward for an action touching a failed satellite. Default -1.0.
    #[serde(default = "defaults::invalid_penalty")]
    pub invalid_penalty: f64,
    /// Simulated seconds per round. Default 1.0.
    #[serde(default = "defaults::round_seconds")]
    pub round_seconds: f64,
    /// Fixed failure-detection latency in the simulated response time. Default 0.2 s.
    #[serde(default = "defaults::detection_seconds")]
    pub detection_seconds: f64,
    /// Retasking time per redistributed task unit. Default 0.01 s.
    #[serde(default = "defaults::retask_seconds_per_unit")]
    pub retask_seconds_per_unit: f64,
}

mod defaults {
    pub fn failure_prob_cap() -> f64 {
        0.2
    }
    pub fn inclination_deg() -> f64 {
        55.0
    }
    pub fn orbit_radius_km() -> f64 {
        26_560.0
    }
    pub fn service_rate() -> f64 {
        2.0
    }
    pub fn transfer_energy_cost() -> f64 {
        0.05
    }
    pub fn reconfig_energy_cost() -> f64 {
        1.0
    }
    pub fn invalid_penalty() -> f64 {
        -1.0
    }
    pub fn round_seconds() -> f64 {
        1.0
    }
    pub fn detection_seconds() -> f64 {
        0.2
    }
    pub fn retask_seconds_per_unit() -> f64 {
        0.01
    }
}

impl EnvConfig {
    /// Nominal 24-satellite, six-plane GPS-like constellation.
    pub fn gps_nominal() -> Self {
        Self {
            num_sats: 24,
            planes: Some(6),
            ..Self::desk_scale()
        }
    }

    /// Small constellation used by the default comparison experiment.
    pub fn desk_scale() -> Self {
        Self {
            num_sats: 8,
            rounds_per_episode: 100,
            base_failure_prob: 0.01,
            failure_escalation_start: 100,
            failure_escalation_rate: 0.0001,
            initial_load_range: [60.0, 100.0],
            capacity: 100.0,
            initial_energy: 8.0,
            chunk_size: 10.0,
            t_max: 1.0,
            seed: 42,
            failure_prob_cap: defaults::failure_prob_cap(),
            planes: None,
            inclination_deg: defaults::inclination_deg(),
            orbit_radius_km: defaults::orbit_radius_km(),
            service_rate: defaults::service_rate(),
            transfer_energy_cost: defaults::transfer_energy_cost(),
            reconfig_energy_cost: defaults::reconfig_energy_cost(),
            invalid_penalty: defaults::invalid_penalty(),
            round_seconds: defaults::round_seconds(),
            detection_seconds: defaults::detection_seconds(),
            retask_seconds_per_unit: defaults::retask_seconds_per_unit(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn effective_planes(&self) -> usize {
        self.planes
            .unwrap_or_else(|| (1..=6).rev().find(|p| self.num_sats.is_multiple_of(*p)).unwrap_or(1))
    }

    /// Size of the directed transfer action space, `N (N - 1)`.
    pub fn num_actions(&self) -> usize {
        self.num_sats * (self.num_sats - 1)
    }

    /// Length of the observation vector, `3N + 1`.
    pub fn observation_len(&self) -> usize {
        3 * self.num_sats + 1
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, field: &str, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("field `{field}`: {msg}")))
            }
        }
        let [lo, hi] = self.initial_load_range;
        check(self.num_sats >= 2, "num_sats", "must be at least 2")?;
        check(self.rounds_per_episode >= 1, "rounds_per_episode", "must be at least 1")?;
        check(
            (0.0..=1.0).contains(&self.base_failure_prob),
            "base_failure_prob",
            "must lie in [0, 1]",
        )?;
        check(
            (self.base_failure_prob..=1.0).contains(&self.failure_prob_cap),
            "failure_prob_cap",
            "must lie in [base_failure_prob, 1]",
        )?;
        check(
            self.failure_escalation_rate >= 0.0 && self.failure_escalation_rate.is_finite(),
            "failure_escalation_rate",
            "must be non-negative",
        )?;
        check(
            self.capacity > 0.0 && self.capacity.is_finite(),
            "capacity",
            "must be positive",
        )?;
        check(
            lo >= 0.0 && lo <= hi && hi <= self.capacity,
            "initial_load_range",
            "must satisfy 0 <= lo <= hi <= capacity",
        )?;
        check(hi > 0.0, "initial_load_range", "upper bound must be positive")?;
        check(
            self.initial_energy > 0.0 && self.initial_energy.is_finite(),
            "initial_energy",
            "must be positive",
        )?;
        check(
            self.chunk_size > 0.0 && self.chunk_size.is_finite(),
            "chunk_size",
            "must be positive",
        )?;
        check(self.t_max > 0.0, "t_max", "must be positive")?;
        check(
            self.orbit_radius_km > EARTH_RADIUS_KM,
            "orbit_radius_km",
            "must exceed the Earth radius",
        )?;
        check(
            self.inclination_deg.is_finite(),
            "inclination_deg",
            "must be finite",
        )?;
        let planes = self.effective_planes();
        check(
            planes >= 1 && self.num_sats.is_multiple_of(planes),
            "planes",
            "must evenly divide num_sats",
        )?;
        for (field, v) in [
            ("service_rate", self.service_rate),
            ("transfer_energy_cost", self.transfer_energy_cost),
            ("reconfig_energy_cost", self.reconfig_energy_cost),
            ("round_seconds", self.round_seconds),
            ("detection_seconds", self.detection_seconds),
            ("retask_seconds_per_unit", self.retask_seconds_per_unit),
        ] {
            check(v >= 0.0 && v.is_finite(), field, "must be non-negative")?;
        }
        check(
            self.invalid_penalty.is_finite(),
            "invalid_penalty",
            "must be finite",
        )?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::desk_scale()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        EnvConfig::desk_scale().validate().unwrap();
        EnvConfig::gps_nominal().validate().unwrap();
        assert_eq!(EnvConfig::gps_nominal().effective_planes(), 6);
        assert_eq!(EnvConfig::desk_scale().effective_planes(), 4);
    }

    #[test]
    fn missing_field_is_named() {
        let mut v = serde_json::to_value(EnvConfig::desk_scale()).unwrap();
        v.as_object_mut().unwrap().remove("num_sats");
        let err = EnvConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("num_sats"), "{err}");
    }

    #[test]
    fn optional_fields_default() {
        let mut v = serde_json::to_value(EnvConfig::desk_scale()).unwrap();
        v.as_object_mut().unwrap().remove("service_rate");
        let cfg = EnvConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(cfg.service_rate, 2.0);
    }

    #[test]
    fn invalid_values_name_their_field() {
        let cases: Vec<(&str, Box<dyn Fn(&mut EnvConfig)>)> = vec![
            ("num_sats", Box::new(|c| c.num_sats = 1)),
            ("base_failure_prob", Box::new(|c| c.base_failure_prob = 1.5)),
            ("initial_load_range", Box::new(|c| c.initial_load_range = [50.0, 10.0])),
            ("initial_load_range", Box::new(|c| c.initial_load_range = [10.0, 500.0])),
            ("planes", Box::new(|c| c.planes = Some(3))),
            ("rounds_per_episode", Box::new(|c| c.rounds_per_episode = 0)),
        ];
        for (field, mutate) in cases {
            let mut cfg = EnvConfig::desk_scale();
            mutate(&mut cfg);
            let msg = cfg.validate().unwrap_err().to_string();
            assert!(msg.contains(field), "{msg}");
        }
    }
}
