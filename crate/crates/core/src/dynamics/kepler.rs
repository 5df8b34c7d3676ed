//! Planar Kepler problem as a check on the integrator.
//!
//! Unit gravitational parameter and semi-major axis, so the period is `2π`.
//! The orbit starts at periapsis on the positive x axis moving in `+y`.

use serde::{Deserialize, Serialize};

use super::ruth3_step;
use crate::error::{invalid, Result};

pub const DEFAULT_ECCENTRICITY: f64 = 0.6;
pub const DEFAULT_DT: f64 = 1e-3;
/// Ten orbits at the default step.
pub const DEFAULT_STEPS: usize = 62_832;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerReport {
    pub eccentricity: f64,
    pub dt: f64,
    pub n_steps: usize,
    /// Largest `|E(t) − E(0)|`.
    pub max_energy_drift: f64,
    /// Largest `|L(t) − L(0)|`.
    pub max_angular_momentum_drift: f64,
    /// Largest distance from the analytic orbit position at the same time.
    pub max_position_error: f64,
    /// Largest `|r(t) − r(0)|`; zero for an exact circular orbit.
    pub max_radius_deviation: f64,
}

impl KeplerReport {
    pub fn max_drift(&self) -> f64 {
        self.max_energy_drift.max(self.max_angular_momentum_drift)
    }
}

fn gravity(q: &[f64; 2]) -> [f64; 2] {
    let r2 = q[0] * q[0] + q[1] * q[1];
    let k = -1.0 / (r2 * r2.sqrt());
    [k * q[0], k * q[1]]
}

fn energy(q: &[f64; 2], p: &[f64; 2]) -> f64 {
    0.5 * (p[0] * p[0] + p[1] * p[1]) - 1.0 / q[0].hypot(q[1])
}

fn angular_momentum(q: &[f64; 2], p: &[f64; 2]) -> f64 {
    q[0] * p[1] - q[1] * p[0]
}

/// Analytic position at time `t` via Newton iteration on Kepler's equation.
fn analytic_position(e: f64, t: f64) -> [f64; 2] {
    let mean_anomaly = t.rem_euclid(std::f64::consts::TAU);
    let mut ecc_anomaly = if e > 0.8 { std::f64::consts::PI } else { mean_anomaly };
    for _ in 0..50 {
        let step = (ecc_anomaly - e * ecc_anomaly.sin() - mean_anomaly) / (1.0 - e * ecc_anomaly.cos());
        ecc_anomaly -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    [ecc_anomaly.cos() - e, (1.0 - e * e).sqrt() * ecc_anomaly.sin()]
}

pub fn kepler_validation(dt: f64, n_steps: usize) -> Result<KeplerReport> {
    kepler_validation_with(DEFAULT_ECCENTRICITY, dt, n_steps)
}

pub fn kepler_validation_with(eccentricity: f64, dt: f64, n_steps: usize) -> Result<KeplerReport> {
    if !(0.0..1.0).contains(&eccentricity) {
        return Err(invalid("eccentricity", "bound orbits need 0 <= e < 1"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", "must be positive"));
    }
    let e = eccentricity;
    let mut q = [1.0 - e, 0.0];
    let mut p = [0.0, ((1.0 + e) / (1.0 - e)).sqrt()];
    let (e0, l0, r0) = (energy(&q, &p), angular_momentum(&q, &p), 1.0 - e);
    let mut report = KeplerReport {
        eccentricity: e,
        dt,
        n_steps,
        max_energy_drift: 0.0,
        max_angular_momentum_drift: 0.0,
        max_position_error: 0.0,
        max_radius_deviation: 0.0,
    };
    for step in 1..=n_steps {
        ruth3_step(&mut q, &mut p, dt, gravity);
        let exact = analytic_position(e, step as f64 * dt);
        report.max_energy_drift = report.max_energy_drift.max((energy(&q, &p) - e0).abs());
        report.max_angular_momentum_drift = report.max_angular_momentum_drift.max((angular_momentum(&q, &p) - l0).abs());
        report.max_position_error = report.max_position_error.max((q[0] - exact[0]).hypot(q[1] - exact[1]));
        report.max_radius_deviation = report.max_radius_deviation.max((q[0].hypot(q[1]) - r0).abs());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_orbit_is_consistent() {
        let e = 0.6;
        let start = analytic_position(e, 0.0);
        assert!((start[0] - 0.4).abs() < 1e-14 && start[1].abs() < 1e-14);
        let half = analytic_position(e, std::f64::consts::PI);
        assert!((half[0] + 1.6).abs() < 1e-12 && half[1].abs() < 1e-12);
    }

    #[test]
    fn default_run_conserves_to_five_places() {
        let r = kepler_validation(DEFAULT_DT, DEFAULT_STEPS).unwrap();
        assert!(r.max_energy_drift < 1e-5, "{r:?}");
        assert!(r.max_angular_momentum_drift < 1e-10, "{r:?}");
        assert!(r.max_position_error < 1e-3, "{r:?}");
    }

    #[test]
    fn circular_orbit_keeps_its_radius() {
        let r = kepler_validation_with(0.0, 1e-2, 6_284).unwrap();
        assert!(r.max_radius_deviation < 1e-5, "{r:?}");
    }

    #[test]
    fn doubling_the_step_scales_error_by_eight() {
        let fine = kepler_validation_with(0.3, 0.004, 1571).unwrap();
        let coarse = kepler_validation_with(0.3, 0.008, 785).unwrap();
        let ratio = coarse.max_position_error / fine.max_position_error;
        assert!((5.5..11.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rejects_unbound_orbits() {
        assert!(kepler_validation_with(1.0, 1e-3, 10).is_err());
        assert!(kepler_validation_with(0.5, 0.0, 10).is_err());
    }
}
