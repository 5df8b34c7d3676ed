//! Pointer dynamics with back-reaction on the measured coordinate.
//!
//! The pointer `X` sits at the top of a quartic double well and is coupled
//! to the microsystem coordinate `Y` through `αN·X·Y/N`. A small force `f`
//! on `Y` tips the pointer into one well, and the pointer in turn kicks `Y`
//! hard the other way. Both follow from the separable Hamiltonian
//!
//! `H = ½p₁² + ½p₂² + V_E(q₁) + αN·q₁q₂ − f·q₂`
//!
//! with `q₁ = X` and `q₂ = Y/N`, integrated with [`ruth3_step`].

mod integrator;
pub mod kepler;

pub use integrator::{ruth3_step, RUTH3_DRIFTS, RUTH3_KICKS};
pub use kepler::{kepler_validation, kepler_validation_with, KeplerReport};

use serde::{Deserialize, Serialize};

use crate::detection::LabStatus;
use crate::error::{invalid, Error, Result};

/// Magnitude beyond which a state counts as blown up.
const BLOW_UP: f64 = 1e12;

/// `V_E(x) = (A/R⁴)x⁴ − (2A/R²)x² + A` and its derivative.
pub fn quartic_potential(x: f64, amp: f64, radius: f64) -> (f64, f64) {
    let r2 = radius * radius;
    let r4 = r2 * r2;
    let x2 = x * x;
    let value = amp / r4 * x2 * x2 - 2.0 * amp / r2 * x2 + amp;
    let slope = 4.0 * amp / r4 * x2 * x - 4.0 * amp / r2 * x;
    (value, slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    /// Height of the quartic barrier.
    pub amp_a: f64,
    /// Position of the quartic minima.
    pub radius_r: f64,
    pub alpha: f64,
    /// Number of apparatus particles.
    pub n_big: f64,
    /// Force on `Y` (sign decides the outcome).
    pub force_f: f64,
    pub dt: f64,
    pub n_steps: usize,
    /// Keep every `save_every`-th state in the trajectory.
    pub save_every: usize,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams {
            amp_a: 2.0,
            radius_r: 1.0,
            alpha: 0.003,
            n_big: 10.0,
            force_f: -0.003,
            dt: 0.01,
            n_steps: 10_000,
            save_every: 10,
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive, got {x}")))
            }
        };
        positive("amp-a", self.amp_a)?;
        positive("radius-r", self.radius_r)?;
        positive("dt", self.dt)?;
        if !(self.alpha.is_finite() && self.n_big.is_finite() && self.force_f.is_finite()) {
            return Err(invalid("alpha", "coupling, particle count and force must be finite"));
        }
        if self.n_steps == 0 {
            return Err(invalid("n-steps", "must be at least 1"));
        }
        if self.save_every == 0 {
            return Err(invalid("save-every", "must be at least 1"));
        }
        Ok(())
    }

    fn coupling(&self) -> f64 {
        self.alpha * self.n_big
    }
}

/// `q1 = X`, `p1 = Ẋ`, `q2 = Y/N`, `p2 = Ẏ/N`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DynamicsState {
    pub q1: f64,
    pub p1: f64,
    pub q2: f64,
    pub p2: f64,
    pub t: f64,
}

pub fn fake_hamiltonian_energy(s: &DynamicsState, params: &DynamicsParams) -> f64 {
    let (ve, _) = quartic_potential(s.q1, params.amp_a, params.radius_r);
    0.5 * s.p1 * s.p1 + 0.5 * s.p2 * s.p2 + ve + params.coupling() * s.q1 * s.q2 - params.force_f * s.q2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    /// `Y = N·q2`.
    pub y: f64,
    /// Second pointer, once it is switched on.
    pub x_sec: Option<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Largest `|H(t) − H(0)|` over every step. When a second pointer joins,
    /// `H(0)` is replaced by the energy at switch-on.
    pub max_energy_drift: f64,
}

#[derive(Debug, Clone, Copy)]
struct System {
    params: DynamicsParams,
    force: f64,
    second_active: bool,
}

impl System {
    /// `q = [X, Y/N, X_sec]`.
    fn accel(&self, q: &[f64; 3]) -> [f64; 3] {
        let (a, r) = (self.params.amp_a, self.params.radius_r);
        let k = self.params.coupling();
        let (_, d1) = quartic_potential(q[0], a, r);
        if self.second_active {
            let (_, d3) = quartic_potential(q[2], a, r);
            [-d1 - k * q[1], -k * (q[0] + q[2]) + self.force, -d3 - k * q[1]]
        } else {
            [-d1 - k * q[1], -k * q[0] + self.force, 0.0]
        }
    }

    fn energy(&self, q: &[f64; 3], p: &[f64; 3]) -> f64 {
        let (a, r) = (self.params.amp_a, self.params.radius_r);
        let k = self.params.coupling();
        let mut e = 0.5 * (p[0] * p[0] + p[1] * p[1]) + quartic_potential(q[0], a, r).0 + k * q[0] * q[1] - self.force * q[1];
        if self.second_active {
            e += 0.5 * p[2] * p[2] + quartic_potential(q[2], a, r).0 + k * q[2] * q[1];
        }
        e
    }
}

struct RunOutput {
    trajectory: Trajectory,
    final_q: [f64; 3],
    final_p: [f64; 3],
    settled: [f64; 2],
    y_at_switch: Option<f64>,
}

/// Integrates from rest at the origin. When `switch_step` is set, the
/// second pointer starts at rest from 0 at that step.
fn integrate(params: &DynamicsParams, force: f64, switch_step: Option<usize>) -> Result<RunOutput> {
    params.validate()?;
    if !force.is_finite() {
        return Err(invalid("force-f", "must be finite"));
    }
    let mut sys = System {
        params: *params,
        force,
        second_active: switch_step == Some(0),
    };
    let (mut q, mut p) = ([0.0; 3], [0.0; 3]);
    let mut points = Vec::with_capacity(params.n_steps / params.save_every + 2);
    let save = |q: &[f64; 3], p: &[f64; 3], t: f64, sys: &System, points: &mut Vec<TrajectoryPoint>| {
        points.push(TrajectoryPoint {
            t,
            x: q[0],
            y: params.n_big * q[1],
            x_sec: sys.second_active.then_some(q[2]),
            energy: sys.energy(q, p),
        });
    };
    save(&q, &p, 0.0, &sys, &mut points);

    let mut reference = sys.energy(&q, &p);
    let mut max_drift = 0.0f64;
    let settle_from = params.n_steps - (params.n_steps / 4).max(1);
    let mut settled = [0.0; 2];
    let mut y_at_switch = switch_step.filter(|&s| s == 0).map(|_| 0.0);
    for step in 1..=params.n_steps {
        if switch_step == Some(step - 1) && !sys.second_active {
            sys.second_active = true;
            y_at_switch = Some(params.n_big * q[1]);
            reference = sys.energy(&q, &p);
        }
        ruth3_step(&mut q, &mut p, params.dt, |x| sys.accel(x));
        let t = step as f64 * params.dt;
        if q.iter().chain(&p).any(|x| !x.is_finite() || x.abs() > BLOW_UP) {
            return Err(Error::BlowUp { step, t });
        }
        max_drift = max_drift.max((sys.energy(&q, &p) - reference).abs());
        if step > settle_from {
            settled[0] += q[0];
            settled[1] += q[2];
        }
        if step % params.save_every == 0 || step == params.n_steps {
            save(&q, &p, t, &sys, &mut points);
        }
    }
    let count = (params.n_steps - settle_from) as f64;
    Ok(RunOutput {
        trajectory: Trajectory {
            points,
            max_energy_drift: max_drift,
        },
        final_q: q,
        final_p: p,
        settled: settled.map(|s| s / count),
        y_at_switch,
    })
}

/// Needle moving down (settling at negative `X`) reads as "up".
pub fn pointer_label(settled_x: f64) -> LabStatus {
    if settled_x < 0.0 {
        LabStatus::Up
    } else if settled_x > 0.0 {
        LabStatus::Down
    } else {
        LabStatus::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerRun {
    pub trajectory: Trajectory,
    pub final_state: DynamicsState,
    /// Mean of `X` over the last quarter of the run.
    pub settled_x: f64,
    pub label: LabStatus,
}

/// Single pointer from `X = Ẋ = Y = Ẏ = 0` under force `f` on `Y`.
pub fn simulate_pointer(params: &DynamicsParams, f: f64) -> Result<PointerRun> {
    let out = integrate(params, f, None)?;
    Ok(PointerRun {
        final_state: DynamicsState {
            q1: out.final_q[0],
            p1: out.final_p[0],
            q2: out.final_q[1],
            p2: out.final_p[1],
            t: params.n_steps as f64 * params.dt,
        },
        settled_x: out.settled[0],
        label: pointer_label(out.settled[0]),
        trajectory: out.trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoApparatusRun {
    pub trajectory: Trajectory,
    pub settled_x: f64,
    pub settled_x_sec: f64,
    pub labels: (LabStatus, LabStatus),
    /// `Y` when the second pointer switched on.
    pub y_at_switch: f64,
    /// Force on the second pointer at switch-on, `−αN·Y(T)/N`.
    pub x_sec_force_at_switch: f64,
}

/// First pointer as in [`simulate_pointer`]; at `t_switch` a second pointer
/// starts at rest from 0, coupled to the same `Y`.
pub fn simulate_two_apparatus(params: &DynamicsParams, f: f64, t_switch: f64) -> Result<TwoApparatusRun> {
    params.validate()?;
    let duration = params.n_steps as f64 * params.dt;
    if !(0.0..duration).contains(&t_switch) {
        return Err(invalid("t-switch", format!("must lie in [0, {duration})")));
    }
    let switch_step = ((t_switch / params.dt).round() as usize).min(params.n_steps - 1);
    let out = integrate(params, f, Some(switch_step))?;
    let y = out.y_at_switch.expect("switch step lies inside the run");
    Ok(TwoApparatusRun {
        trajectory: out.trajectory,
        settled_x: out.settled[0],
        settled_x_sec: out.settled[1],
        labels: (pointer_label(out.settled[0]), pointer_label(out.settled[1])),
        y_at_switch: y,
        x_sec_force_at_switch: -params.coupling() * y / params.n_big,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quartic_examples() {
        assert_eq!(quartic_potential(0.0, 2.0, 1.0), (2.0, 0.0));
        assert_eq!(quartic_potential(1.0, 2.0, 1.0), (0.0, 0.0));
        assert_eq!(quartic_potential(-1.0, 2.0, 1.0), (0.0, 0.0));
        let (v, d) = quartic_potential(1.5, 3.0, 1.5);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quartic_slope_matches_finite_difference() {
        for &x in &[-1.7, -0.4, 0.2, 0.9, 2.3] {
            let h = 1e-6;
            let fd = (quartic_potential(x + h, 2.0, 1.3).0 - quartic_potential(x - h, 2.0, 1.3).0) / (2.0 * h);
            assert_abs_diff_eq!(quartic_potential(x, 2.0, 1.3).1, fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn energy_examples() {
        let p = DynamicsParams {
            force_f: 0.0,
            ..Default::default()
        };
        assert_eq!(fake_hamiltonian_energy(&DynamicsState::default(), &p), 2.0);
        let s = DynamicsState {
            q1: 1.0,
            ..Default::default()
        };
        assert_eq!(fake_hamiltonian_energy(&s, &p), 0.0);
    }

    #[test]
    fn validation() {
        assert!(DynamicsParams::default().validate().is_ok());
        for bad in [
            DynamicsParams { dt: 0.0, ..Default::default() },
            DynamicsParams { amp_a: -1.0, ..Default::default() },
            DynamicsParams { radius_r: 0.0, ..Default::default() },
            DynamicsParams { n_steps: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn negative_force_settles_near_plus_r_and_kicks_y_down() {
        let run = simulate_pointer(&DynamicsParams::default(), -0.003).unwrap();
        assert!(run.settled_x > 0.5 && run.settled_x < 1.5, "{}", run.settled_x);
        assert!(run.final_state.q2 < 0.0);
        assert_eq!(run.label, LabStatus::Down);
    }

    #[test]
    fn energy_is_conserved_at_small_step() {
        let p = DynamicsParams {
            dt: 0.002,
            n_steps: 50_000,
            ..Default::default()
        };
        let run = simulate_pointer(&p, -0.003).unwrap();
        assert!(run.trajectory.max_energy_drift < 1e-6, "{}", run.trajectory.max_energy_drift);
        let coarse = simulate_pointer(&DynamicsParams { dt: 0.004, n_steps: 25_000, ..p }, -0.003).unwrap();
        let ratio = coarse.trajectory.max_energy_drift / run.trajectory.max_energy_drift;
        assert!(ratio > 5.0, "ratio {ratio}");
    }

    #[test]
    fn positive_force_is_the_mirror_image() {
        let p = DynamicsParams::default();
        let neg = simulate_pointer(&p, -0.003).unwrap();
        let pos = simulate_pointer(&p, 0.003).unwrap();
        assert_eq!(pos.settled_x, -neg.settled_x);
        assert_eq!(pos.final_state.q2, -neg.final_state.q2);
        assert_eq!(pos.label, LabStatus::Up);
    }

    #[test]
    fn zero_force_stays_on_the_barrier() {
        let run = simulate_pointer(&DynamicsParams::default(), 0.0).unwrap();
        assert!(run.trajectory.points.iter().all(|p| p.x.abs() < 1e-9));
        assert_eq!(run.label, LabStatus::None);
    }

    #[test]
    fn trajectory_times_increase() {
        let run = simulate_pointer(&DynamicsParams::default(), 0.001).unwrap();
        assert!(run.trajectory.points.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(run.trajectory.points.len(), 1001);
    }

    #[test]
    fn second_pointer_agrees_with_first() {
        let p = DynamicsParams::default();
        for f in [-0.01, -0.003, -1e-4, 1e-4, 0.003, 0.01] {
            let run = simulate_two_apparatus(&p, f, 50.0).unwrap();
            assert_eq!(run.labels.0, run.labels.1, "f = {f}");
            assert_ne!(run.labels.0, LabStatus::None);
            assert!(run.y_at_switch * run.x_sec_force_at_switch < 0.0);
        }
    }

    #[test]
    fn simultaneous_switch_gives_identical_pointers() {
        let run = simulate_two_apparatus(&DynamicsParams::default(), 0.002, 0.0).unwrap();
        assert_eq!(run.settled_x, run.settled_x_sec);
        assert!(run.trajectory.points.iter().all(|p| p.x_sec == Some(p.x)));
    }

    #[test]
    fn switch_time_must_lie_in_run() {
        assert!(simulate_two_apparatus(&DynamicsParams::default(), 0.003, 100.0).is_err());
        assert!(simulate_two_apparatus(&DynamicsParams::default(), 0.003, -1.0).is_err());
    }

    #[test]
    fn runaway_is_reported() {
        let p = DynamicsParams {
            amp_a: 1e3,
            dt: 5.0,
            n_steps: 100,
            ..Default::default()
        };
        assert!(matches!(simulate_pointer(&p, 0.1), Err(Error::BlowUp { .. })));
    }
}
