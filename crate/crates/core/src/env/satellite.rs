use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EnvConfig;
use crate::error::Result;
use crate::orbital::{build_constellation_geometry, slot_to_cartesian, OrbitalSlot, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Operational,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    L1,
    L2,
    L5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    Bpsk,
    Qpsk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteState {
    pub id: usize,
    pub slot: OrbitalSlot,
    pub position: Vec3,
    pub velocity: Vec3,
    pub status: Status,
    pub energy: f64,
    pub task_load: f64,
    pub capacity: f64,
    pub reliability: f64,
    /// Link bandwidth to every peer, Mb/s. Self-link is zero.
    pub bandwidth_row: Vec<f64>,
    pub frequency: Band,
    pub modulation: Modulation,
}

impl SatelliteState {
    pub fn is_operational(&self) -> bool {
        self.status == Status::Operational
    }

    pub fn headroom(&self) -> f64 {
        (self.capacity - self.task_load).max(0.0)
    }
}

/// Fresh satellites at their nominal slots with randomized loads,
/// reliabilities and link bandwidths.
pub fn initialize_satellites<R: Rng + ?Sized>(
    config: &EnvConfig,
    rng: &mut R,
) -> Result<Vec<SatelliteState>> {
    config.validate()?;
    let slots = build_constellation_geometry(
        config.num_sats,
        config.effective_planes(),
        config.inclination_deg.to_radians(),
        config.orbit_radius_km,
    )?;
    let n = config.num_sats;
    let [lo, hi] = config.initial_load_range;

    let mut sats = Vec::with_capacity(n);
    for (id, slot) in slots.into_iter().enumerate() {
        let (position, velocity) = slot_to_cartesian(&slot, 0.0);
        let task_load = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let reliability = rng.gen_range(0.9..1.0);
        sats.push(SatelliteState {
            id,
            slot,
            position,
            velocity,
            status: Status::Operational,
            energy: config.initial_energy,
            task_load,
            capacity: config.capacity,
            reliability,
            bandwidth_row: vec![0.0; n],
            frequency: [Band::L1, Band::L2, Band::L5][id % 3],
            modulation: if id % 2 == 0 {
                Modulation::Bpsk
            } else {
                Modulation::Qpsk
            },
        });
    }
    // symmetric B_ij
    for i in 0..n {
        for j in (i + 1)..n {
            let b = rng.gen_range(50.0..100.0);
            sats[i].bandwidth_row[j] = b;
            sats[j].bandwidth_row[i] = b;
        }
    }
    Ok(sats)
}
