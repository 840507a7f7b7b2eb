//! Retasking (moving a failed satellite's queue onto survivors) and
//! reconfiguration (re-spacing the survivors of the failed plane).

use std::f64::consts::TAU;

use super::satellite::{SatelliteState, Status};
use crate::orbital::slot_to_cartesian;

/// Where a failed satellite's tasks went.
#[derive(Debug, Clone, PartialEq)]
pub struct Redistribution {
    pub failed_id: usize,
    /// Load held by the failed satellite before draining.
    pub released: f64,
    /// `(satellite id, task units received)` for every operational satellite.
    pub received: Vec<(usize, f64)>,
    /// Units no survivor had room for.
    pub dropped: f64,
}

impl Redistribution {
    pub fn total_received(&self) -> f64 {
        self.received.iter().map(|(_, r)| r).sum()
    }
}

/// Drains `failed_id` onto the operational satellites.
///
/// Pass one hands each survivor `T_j / |O|`, capped at its headroom. Pass two
/// spreads the leftover in proportion to remaining headroom. Whatever still
/// does not fit is dropped. With no survivors the whole queue is dropped.
pub fn redistribute_tasks(sats: &mut [SatelliteState], failed_id: usize) -> Redistribution {
    assert_eq!(
        sats[failed_id].status,
        Status::Failed,
        "redistribute_tasks: satellite {failed_id} is not failed"
    );
    let released = sats[failed_id].task_load;
    sats[failed_id].task_load = 0.0;

    let survivors: Vec<usize> = sats
        .iter()
        .filter(|s| s.is_operational())
        .map(|s| s.id)
        .collect();
    if survivors.is_empty() {
        return Redistribution {
            failed_id,
            released,
            received: Vec::new(),
            dropped: released,
        };
    }

    let before: Vec<f64> = survivors.iter().map(|&i| sats[i].task_load).collect();
    let share = released / survivors.len() as f64;
    for &i in &survivors {
        let give = share.min(sats[i].headroom());
        sats[i].task_load = (sats[i].task_load + give).min(sats[i].capacity);
    }

    let mut residue = released - received_so_far(sats, &survivors, &before);
    if residue > 0.0 {
        let room: f64 = survivors.iter().map(|&i| sats[i].headroom()).sum();
        if room > 0.0 {
            let fill_all = residue >= room;
            for &i in &survivors {
                let h = sats[i].headroom();
                let give = if fill_all { h } else { (residue * h / room).min(h) };
                sats[i].task_load = (sats[i].task_load + give).min(sats[i].capacity);
            }
            residue = released - received_so_far(sats, &survivors, &before);
        }
    }

    let received: Vec<(usize, f64)> = survivors
        .iter()
        .zip(&before)
        .map(|(&i, b)| (i, sats[i].task_load - b))
        .collect();
    Redistribution {
        failed_id,
        released,
        received,
        dropped: residue.max(0.0),
    }
}

fn received_so_far(sats: &[SatelliteState], survivors: &[usize], before: &[f64]) -> f64 {
    survivors
        .iter()
        .zip(before)
        .map(|(&i, b)| sats[i].task_load - b)
        .sum()
}

/// Re-spaces the operational satellites left in the failed satellite's plane
/// uniformly in phase, anchored at the lowest-id survivor, and charges each
/// of them `energy_cost`. Returns the ids that moved.
pub fn reconfigure(
    sats: &mut [SatelliteState],
    failed_id: usize,
    elapsed_seconds: f64,
    energy_cost: f64,
) -> Vec<usize> {
    let plane = sats[failed_id].slot.plane_index;
    let survivors: Vec<usize> = sats
        .iter()
        .filter(|s| s.is_operational() && s.slot.plane_index == plane)
        .map(|s| s.id)
        .collect();
    let Some(&anchor_id) = survivors.first() else {
        return survivors;
    };
    let anchor = sats[anchor_id].slot.phase_angle;
    let spacing = TAU / survivors.len() as f64;
    for (k, &i) in survivors.iter().enumerate() {
        let sat = &mut sats[i];
        sat.slot.phase_angle = (anchor + k as f64 * spacing).rem_euclid(TAU);
        let offset = sat.slot.mean_motion() * elapsed_seconds;
        let (p, v) = slot_to_cartesian(&sat.slot, offset);
        sat.position = p;
        sat.velocity = v;
        sat.energy = (sat.energy - energy_cost).max(0.0);
    }
    survivors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{initialize_satellites, EnvConfig};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fleet(loads: &[f64], capacity: f64) -> Vec<SatelliteState> {
        let cfg = EnvConfig {
            num_sats: loads.len(),
            planes: Some(1),
            capacity,
            initial_load_range: [0.0, capacity],
            ..EnvConfig::desk_scale()
        };
        let mut sats = initialize_satellites(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for (s, &l) in sats.iter_mut().zip(loads) {
            s.task_load = l;
        }
        sats
    }

    fn fail(sats: &mut [SatelliteState], id: usize) {
        sats[id].status = Status::Failed;
    }

    fn loads(sats: &[SatelliteState]) -> Vec<f64> {
        sats.iter().map(|s| s.task_load).collect()
    }

    #[test]
    fn even_split_with_ample_capacity() {
        let mut sats = fleet(&[12.0, 5.0, 7.0, 9.0], 100.0);
        fail(&mut sats, 0);
        let r = redistribute_tasks(&mut sats, 0);
        assert_eq!(loads(&sats), vec![0.0, 9.0, 11.0, 13.0]);
        assert_eq!(r.dropped, 0.0);
        assert_eq!(r.total_received(), 12.0);
    }

    #[test]
    fn empty_queue_changes_nothing() {
        let mut sats = fleet(&[0.0, 5.0, 7.0, 9.0], 100.0);
        fail(&mut sats, 0);
        let r = redistribute_tasks(&mut sats, 0);
        assert_eq!(loads(&sats), vec![0.0, 5.0, 7.0, 9.0]);
        assert_eq!(r.dropped, 0.0);
    }

    #[test]
    fn overflow_refilled_by_headroom() {
        // pass 1: [+2 (capped), +4, +4], residue 2
        // pass 2: headroom [0, 89, 87] → 2·89/176 and 2·87/176
        let mut sats = fleet(&[12.0, 98.0, 7.0, 9.0], 100.0);
        fail(&mut sats, 0);
        let r = redistribute_tasks(&mut sats, 0);
        let l = loads(&sats);
        assert_eq!(l[1], 100.0);
        assert_relative_eq!(l[2], 11.0 + 2.0 * 89.0 / 176.0, epsilon = 1e-12);
        assert_relative_eq!(l[3], 13.0 + 2.0 * 87.0 / 176.0, epsilon = 1e-12);
        assert_eq!(r.dropped, 0.0);
        assert_relative_eq!(l.iter().sum::<f64>(), 126.0, epsilon = 1e-12);
    }

    #[test]
    fn overflow_beyond_total_headroom_is_dropped() {
        let mut sats = fleet(&[30.0, 95.0, 90.0], 100.0);
        fail(&mut sats, 0);
        let r = redistribute_tasks(&mut sats, 0);
        assert_eq!(loads(&sats), vec![0.0, 100.0, 100.0]);
        assert_relative_eq!(r.dropped, 15.0, epsilon = 1e-12);
    }

    #[test]
    fn total_loss_drops_everything() {
        let mut sats = fleet(&[30.0, 10.0], 100.0);
        fail(&mut sats, 0);
        fail(&mut sats, 1);
        let r = redistribute_tasks(&mut sats, 0);
        assert_eq!(r.dropped, 30.0);
        assert!(r.received.is_empty());
        assert_eq!(sats[0].task_load, 0.0);
    }

    #[test]
    #[should_panic]
    fn operational_satellite_cannot_be_drained() {
        let mut sats = fleet(&[1.0, 1.0], 100.0);
        redistribute_tasks(&mut sats, 0);
    }

    #[test]
    fn plane_respaced_after_loss() {
        let mut sats = fleet(&[1.0; 4], 100.0);
        let energy_before = sats[1].energy;
        fail(&mut sats, 2);
        let moved = reconfigure(&mut sats, 2, 0.0, 1.0);
        assert_eq!(moved, vec![0, 1, 3]);
        let phases: Vec<f64> = moved.iter().map(|&i| sats[i].slot.phase_angle).collect();
        assert_relative_eq!(phases[1] - phases[0], TAU / 3.0, epsilon = 1e-12);
        assert_relative_eq!(phases[2] - phases[1], TAU / 3.0, epsilon = 1e-12);
        assert_eq!(sats[1].energy, energy_before - 1.0);
        let r = sats[3].position.norm();
        assert_relative_eq!(r, sats[3].slot.radius, max_relative = 1e-9);
    }

    #[test]
    fn lone_satellite_plane_empties() {
        let cfg = EnvConfig {
            num_sats: 4,
            planes: Some(4),
            ..EnvConfig::desk_scale()
        };
        let mut sats = initialize_satellites(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let snapshot = sats.clone();
        fail(&mut sats, 1);
        assert!(reconfigure(&mut sats, 1, 0.0, 1.0).is_empty());
        for i in [0, 2, 3] {
            assert_eq!(sats[i], snapshot[i]);
        }
    }

    #[test]
    fn failures_in_different_planes_are_independent() {
        let cfg = EnvConfig {
            num_sats: 8,
            planes: Some(2),
            ..EnvConfig::desk_scale()
        };
        let mut sats = initialize_satellites(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        fail(&mut sats, 1);
        let first = reconfigure(&mut sats, 1, 0.0, 1.0);
        let plane0_after: Vec<_> = (0..4).map(|i| sats[i].clone()).collect();
        fail(&mut sats, 6);
        let second = reconfigure(&mut sats, 6, 0.0, 1.0);
        assert_eq!(first, vec![0, 2, 3]);
        assert_eq!(second, vec![4, 5, 7]);
        for i in 0..4 {
            assert_eq!(sats[i], plane0_after[i]);
        }
    }

    proptest! {
        #[test]
        fn conserves_and_respects_capacity(
            fill in prop::collection::vec(0.0..1.0f64, 2..12),
            caps in prop::collection::vec(1.0..150.0f64, 12),
            down in prop::collection::vec(any::<bool>(), 12),
            released in 0.0..400.0f64,
        ) {
            let mut sats = fleet(&vec![0.0; fill.len()], 100.0);
            for (i, s) in sats.iter_mut().enumerate() {
                s.capacity = caps[i];
                s.task_load = fill[i] * caps[i];
                if down[i] && i != 0 {
                    s.status = Status::Failed;
                }
            }
            fail(&mut sats, 0);
            sats[0].task_load = released;
            let before = loads(&sats);
            let r = redistribute_tasks(&mut sats, 0);
            prop_assert!((r.total_received() + r.dropped - released).abs() <= 1e-9 * released.max(1.0));
            for (s, b) in sats.iter().zip(&before).skip(1) {
                prop_assert!(s.task_load <= s.capacity);
                prop_assert!(s.task_load >= *b);
                if !s.is_operational() {
                    prop_assert_eq!(s.task_load, *b);
                }
            }
        }
    }
}
