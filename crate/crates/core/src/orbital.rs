//! Constellation geometry and kinematics.
//!
//! Satellites sit on circular orbits laid out as a Walker-style grid: planes
//! evenly spaced in right ascension, slots evenly spaced in phase within each
//! plane. Intra-episode motion uses explicit Euler steps.

use std::f64::consts::TAU;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean equatorial Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Earth gravitational parameter, km^3/s^2.
pub const MU_EARTH: f64 = 398_600.4418;
/// Speed of light in vacuum, km/s.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

/// Cartesian vector in km (positions) or km/s (velocities).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// One satellite's place in the constellation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalSlot {
    pub plane_index: usize,
    pub slot_index: usize,
    /// Radians.
    pub inclination: f64,
    /// Right ascension of the ascending node, radians.
    pub raan: f64,
    /// Argument of latitude at epoch, radians.
    pub phase_angle: f64,
    /// Orbit radius, km.
    pub radius: f64,
}

impl OrbitalSlot {
    /// Circular orbital speed, km/s.
    pub fn speed(&self) -> f64 {
        (MU_EARTH / self.radius).sqrt()
    }

    /// Mean motion, rad/s.
    pub fn mean_motion(&self) -> f64 {
        self.speed() / self.radius
    }
}

/// Lays out `num_sats` slots over `planes` evenly spaced orbital planes.
///
/// Slot `i` lands in plane `i / (num_sats / planes)`. RAAN steps by
/// `2π / planes` and phase by `2π / sats_per_plane`.
pub fn build_constellation_geometry(
    num_sats: usize,
    planes: usize,
    inclination: f64,
    radius: f64,
) -> Result<Vec<OrbitalSlot>> {
    if planes == 0 {
        return Err(Error::config("planes must be at least 1"));
    }
    if num_sats == 0 || !num_sats.is_multiple_of(planes) {
        return Err(Error::config(format!(
            "planes ({planes}) must evenly divide num_sats ({num_sats})"
        )));
    }
    if !(radius > EARTH_RADIUS_KM) || !radius.is_finite() {
        return Err(Error::config(format!(
            "orbit radius {radius} km must exceed the Earth radius ({EARTH_RADIUS_KM} km)"
        )));
    }
    if !inclination.is_finite() {
        return Err(Error::config("inclination must be finite"));
    }

    let per_plane = num_sats / planes;
    let slots = (0..num_sats)
        .map(|i| {
            let plane_index = i / per_plane;
            let slot_index = i % per_plane;
            OrbitalSlot {
                plane_index,
                slot_index,
                inclination,
                raan: plane_index as f64 * TAU / planes as f64,
                phase_angle: slot_index as f64 * TAU / per_plane as f64,
                radius,
            }
        })
        .collect();
    Ok(slots)
}

/// Inertial position and velocity of a circular-orbit slot, advanced by
/// `true_anomaly_offset` radians along its orbit.
pub fn slot_to_cartesian(slot: &OrbitalSlot, true_anomaly_offset: f64) -> (Vec3, Vec3) {
    let u = slot.phase_angle + true_anomaly_offset;
    let (su, cu) = u.sin_cos();
    let (si, ci) = slot.inclination.sin_cos();
    let (so, co) = slot.raan.sin_cos();
    let r = slot.radius;
    let v = slot.speed();

    let position = Vec3::new(
        r * (co * cu - so * su * ci),
        r * (so * cu + co * su * ci),
        r * su * si,
    );
    let velocity = Vec3::new(
        v * (-co * su - so * cu * ci),
        v * (-so * su + co * cu * ci),
        v * cu * si,
    );
    (position, velocity)
}

/// One explicit Euler step: `(p + v·dt, v + a·dt)`.
pub fn propagate(position: Vec3, velocity: Vec3, acceleration: Vec3, dt: f64) -> (Vec3, Vec3) {
    assert!(dt >= 0.0, "propagate: dt must be non-negative, got {dt}");
    (position + velocity * dt, velocity + acceleration * dt)
}

/// Two-body point-mass gravity at `position`.
pub fn gravity_acceleration(position: Vec3) -> Vec3 {
    let r = position.norm();
    position * (-MU_EARTH / (r * r * r))
}

pub fn euclidean_distance(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm()
}

/// Free-space light-time delay over `distance` km, in seconds.
pub fn propagation_delay(distance: f64) -> f64 {
    assert!(
        distance >= 0.0,
        "propagation_delay: distance must be non-negative, got {distance}"
    );
    distance / SPEED_OF_LIGHT_KM_S
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn slot(inclination: f64, raan: f64, phase_angle: f64, radius: f64) -> OrbitalSlot {
        OrbitalSlot {
            plane_index: 0,
            slot_index: 0,
            inclination,
            raan,
            phase_angle,
            radius,
        }
    }

    #[test]
    fn gps_layout_spacing() {
        let slots = build_constellation_geometry(24, 6, 55f64.to_radians(), 26_560.0).unwrap();
        assert_eq!(slots.len(), 24);
        let mut raans: Vec<f64> = slots.iter().map(|s| s.raan).collect();
        raans.dedup();
        assert_eq!(raans.len(), 6);
        for pair in raans.windows(2) {
            assert_relative_eq!(pair[1] - pair[0], FRAC_PI_3, epsilon = 1e-12);
        }
        for plane in 0..6 {
            let phases: Vec<f64> = slots
                .iter()
                .filter(|s| s.plane_index == plane)
                .map(|s| s.phase_angle)
                .collect();
            assert_eq!(phases.len(), 4);
            for (k, p) in phases.iter().enumerate() {
                assert_relative_eq!(*p, k as f64 * FRAC_PI_2, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_plane_layout() {
        let slots = build_constellation_geometry(4, 1, 0.0, 7000.0).unwrap();
        let expected = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
        for (s, e) in slots.iter().zip(expected) {
            assert_eq!(s.raan, 0.0);
            assert_relative_eq!(s.phase_angle, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn geometry_rejects_bad_config() {
        assert!(matches!(
            build_constellation_geometry(24, 5, 0.9, 26_560.0),
            Err(Error::Config(_))
        ));
        assert!(build_constellation_geometry(24, 0, 0.9, 26_560.0).is_err());
        assert!(build_constellation_geometry(24, 6, 0.9, 6371.0).is_err());
        assert!(build_constellation_geometry(24, 6, 0.9, 5000.0).is_err());
    }

    #[test]
    fn geometry_is_bit_identical_across_calls() {
        let a = build_constellation_geometry(24, 6, 0.9599, 26_560.0).unwrap();
        let b = build_constellation_geometry(24, 6, 0.9599, 26_560.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equatorial_ascending_node() {
        let (p, v) = slot_to_cartesian(&slot(0.0, 0.0, 0.0, 7000.0), 0.0);
        assert_eq!(p, Vec3::new(7000.0, 0.0, 0.0));
        let speed = (398_600.4418f64 / 7000.0).sqrt();
        assert_relative_eq!(v.y, speed, max_relative = 1e-12);
        assert_relative_eq!(speed, 7.546, epsilon = 1e-3);
        assert_eq!(v.x, -0.0);
        assert_eq!(v.z, 0.0);
    }

    #[test]
    fn equatorial_opposite_side() {
        let (p, _) = slot_to_cartesian(&slot(0.0, 0.0, PI, 7000.0), 0.0);
        assert_relative_eq!(p.x, -7000.0, max_relative = 1e-12);
        assert!(p.y.abs() < 1e-9 && p.z.abs() < 1e-9);
    }

    #[test]
    fn polar_quarter_orbit_points_north() {
        // Hand rotation: perifocal (0, r, 0) tilted by 90° about x lands on +z.
        let (p, _) = slot_to_cartesian(&slot(FRAC_PI_2, 0.0, FRAC_PI_2, 7000.0), 0.0);
        assert!(p.x.abs() < 1e-6);
        assert!(p.y.abs() < 1e-6);
        assert!((p.z - 7000.0).abs() < 1e-6);
    }

    #[test]
    fn propagate_examples() {
        let (p, v) = propagate(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::ZERO,
            0.5,
        );
        assert_eq!(p, Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(v, Vec3::new(2.0, 0.0, 0.0));

        let (p, v) = propagate(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 2.0), 1.0);
        assert_eq!(p, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(v, Vec3::new(0.0, 1.0, 2.0));
    }

    #[test]
    #[should_panic]
    fn propagate_rejects_negative_dt() {
        propagate(Vec3::ZERO, Vec3::ZERO, Vec3::ZERO, -1.0);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(Vec3::ZERO, Vec3::new(3.0, 4.0, 0.0)), 5.0);
        let one = Vec3::new(1.0, 1.0, 1.0);
        assert_eq!(euclidean_distance(one, one), 0.0);
        assert_eq!(
            euclidean_distance(Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 6.0, 3.0)),
            5.0
        );
    }

    #[test]
    fn delay_examples() {
        assert_eq!(propagation_delay(0.0), 0.0);
        assert_eq!(propagation_delay(299_792.458), 1.0);
        assert_relative_eq!(propagation_delay(29_979.2458), 0.1, max_relative = 1e-15);
    }

    #[test]
    #[should_panic]
    fn delay_rejects_negative_distance() {
        propagation_delay(-1.0);
    }

    fn finite_vec() -> impl Strategy<Value = Vec3> {
        (-1e4..1e4f64, -1e4..1e4f64, -1e4..1e4f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn cartesian_radius_speed_and_orthogonality(
            inc in 0.0..PI,
            raan in 0.0..TAU,
            phase in 0.0..TAU,
            offset in -10.0..10.0f64,
            radius in 6400.0..50_000.0f64,
        ) {
            let s = slot(inc, raan, phase, radius);
            let (p, v) = slot_to_cartesian(&s, offset);
            prop_assert!(((p.norm() - radius) / radius).abs() < 1e-9);
            let speed = (MU_EARTH / radius).sqrt();
            prop_assert!(((v.norm() - speed) / speed).abs() < 1e-9);
            prop_assert!((p.dot(v) / (p.norm() * v.norm())).abs() < 1e-9);
            prop_assert!(p.is_finite() && v.is_finite());
        }

        #[test]
        fn euler_chaining_without_acceleration(
            p in finite_vec(), v in finite_vec(), dt1 in 0.0..100.0f64, dt2 in 0.0..100.0f64,
        ) {
            let (p_once, v_once) = propagate(p, v, Vec3::ZERO, dt1 + dt2);
            let (p_mid, v_mid) = propagate(p, v, Vec3::ZERO, dt1);
            let (p_twice, v_twice) = propagate(p_mid, v_mid, Vec3::ZERO, dt2);
            prop_assert_eq!(v_once, v_twice);
            prop_assert!((p_once - p_twice).norm() <= 1e-9 * (1.0 + p_once.norm()));
        }

        #[test]
        fn zero_dt_is_identity(p in finite_vec(), v in finite_vec(), a in finite_vec()) {
            prop_assert_eq!(propagate(p, v, a, 0.0), (p, v));
        }

        #[test]
        fn distance_is_a_metric(a in finite_vec(), b in finite_vec(), c in finite_vec()) {
            let ab = euclidean_distance(a, b);
            prop_assert_eq!(ab, euclidean_distance(b, a));
            prop_assert!(ab <= euclidean_distance(a, c) + euclidean_distance(c, b) + 1e-9);
            prop_assert_eq!(euclidean_distance(a, a), 0.0);
        }
    }
}
