use serde::{Deserialize, Serialize};

/// Directed task transfer between two distinct satellites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub from_sat: usize,
    pub to_sat: usize,
}

impl Action {
    pub fn new(from_sat: usize, to_sat: usize) -> Self {
        Self { from_sat, to_sat }
    }

    /// Canonical index: `from·(N−1) + (to if to < from else to − 1)`.
    pub fn encode(self, num_sats: usize) -> usize {
        assert!(
            self.from_sat < num_sats && self.to_sat < num_sats && self.from_sat != self.to_sat,
            "invalid action {self:?} for {num_sats} satellites"
        );
        let to = if self.to_sat < self.from_sat {
            self.to_sat
        } else {
            self.to_sat - 1
        };
        self.from_sat * (num_sats - 1) + to
    }

    pub fn try_decode(index: usize, num_sats: usize) -> Option<Self> {
        if num_sats < 2 || index >= num_sats * (num_sats - 1) {
            return None;
        }
        let from_sat = index / (num_sats - 1);
        let rem = index % (num_sats - 1);
        let to_sat = if rem < from_sat { rem } else { rem + 1 };
        Some(Self { from_sat, to_sat })
    }

    /// Inverse of [`Action::encode`]. Panics on an out-of-range index.
    pub fn decode(index: usize, num_sats: usize) -> Self {
        Self::try_decode(index, num_sats)
            .unwrap_or_else(|| panic!("action index {index} out of range for {num_sats} satellites"))
    }
}

/// Flat observation: per satellite `[load/capacity, energy/initial, status]`,
/// then `round / rounds_per_episode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn num_sats(&self) -> usize {
        (self.0.len() - 1) / 3
    }

    pub fn load_fraction(&self, sat: usize) -> f64 {
        self.0[3 * sat]
    }

    pub fn energy_fraction(&self, sat: usize) -> f64 {
        self.0[3 * sat + 1]
    }

    pub fn is_operational(&self, sat: usize) -> bool {
        self.0[3 * sat + 2] > 0.5
    }

    pub fn round_fraction(&self) -> f64 {
        *self.0.last().expect("empty observation")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn operational(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_sats()).filter(|&i| self.is_operational(i))
    }

    /// Valid-action mask: both endpoints operational.
    pub fn action_mask(&self) -> Vec<bool> {
        let n = self.num_sats();
        (0..n * (n - 1))
            .map(|idx| {
                let a = Action::decode(idx, n);
                self.is_operational(a.from_sat) && self.is_operational(a.to_sat)
            })
            .collect()
    }
}
