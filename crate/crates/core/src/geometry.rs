//! Measurement directions, the idealized two-lab coefficients and their
//! joint outcome probabilities.
//!
//! Directions live in the y-z plane and are stored as a single plane angle.
//! The inner product of two directions is `cos(θa - θb)` (full-angle
//! convention); [`AngleScale::Half`] is kept only so the convention scan can
//! try the spin-half reading.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex amplitude used for both the deterministic `c` and random `v`
/// coefficients.
pub type ComplexAmplitude = Complex64;

/// A measurement direction in the y-z plane, normalized to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MeasurementAngle(f64);

impl MeasurementAngle {
    pub fn from_radians(theta: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs.
        if t >= TAU {
            t = 0.0;
        }
        MeasurementAngle(t)
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::from_radians(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    pub fn rotated(self, by: f64) -> Self {
        Self::from_radians(self.0 + by)
    }
}

/// How an angle difference is turned into `a·b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleScale {
    #[default]
    Full,
    Half,
}

impl AngleScale {
    pub fn dot(self, a: MeasurementAngle, b: MeasurementAngle) -> f64 {
        let delta = a.radians() - b.radians();
        match self {
            AngleScale::Full => delta.cos(),
            AngleScale::Half => (0.5 * delta).cos(),
        }
    }
}

/// `a·b` for unit vectors in the y-z plane.
pub fn dot(a: MeasurementAngle, b: MeasurementAngle) -> f64 {
    AngleScale::Full.dot(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbabilities {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl JointProbabilities {
    pub fn from_dot(ab: f64) -> Self {
        let ab = ab.clamp(-1.0, 1.0);
        let same = 0.25 * (1.0 - ab);
        let opposite = 0.25 * (1.0 + ab);
        JointProbabilities {
            p_pp: same,
            p_pm: opposite,
            p_mp: opposite,
            p_mm: same,
        }
    }

    pub fn sum(&self) -> f64 {
        self.p_pp + self.p_pm + self.p_mp + self.p_mm
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }
}

pub fn joint_probabilities(a: MeasurementAngle, b: MeasurementAngle) -> JointProbabilities {
    JointProbabilities::from_dot(dot(a, b))
}

/// Phases of the four deterministic coefficients, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientPhases {
    pub gamma_pp: f64,
    pub gamma_pm: f64,
    pub gamma_mp: f64,
    pub gamma_mm: f64,
}

/// Deterministic coefficients `c = √p · exp(iγ)` in the order
/// `(++, +-, -+, --)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprbCoefficients {
    pub c_pp: ComplexAmplitude,
    pub c_pm: ComplexAmplitude,
    pub c_mp: ComplexAmplitude,
    pub c_mm: ComplexAmplitude,
    pub phases: CoefficientPhases,
}

impl EprbCoefficients {
    pub fn from_probabilities(p: &JointProbabilities, phases: CoefficientPhases) -> Self {
        let c = |prob: f64, gamma: f64| Complex64::from_polar(prob.max(0.0).sqrt(), gamma);
        EprbCoefficients {
            c_pp: c(p.p_pp, phases.gamma_pp),
            c_pm: c(p.p_pm, phases.gamma_pm),
            c_mp: c(p.p_mp, phases.gamma_mp),
            c_mm: c(p.p_mm, phases.gamma_mm),
            phases,
        }
    }

    /// Coefficients for a given `a·b` with all phases zero.
    pub fn from_dot(ab: f64) -> Self {
        Self::from_probabilities(&JointProbabilities::from_dot(ab), CoefficientPhases::default())
    }

    pub fn with_phases(self, phases: CoefficientPhases) -> Self {
        let p = self.probabilities();
        Self::from_probabilities(&p, phases)
    }

    pub fn probabilities(&self) -> JointProbabilities {
        JointProbabilities {
            p_pp: self.c_pp.norm_sqr(),
            p_pm: self.c_pm.norm_sqr(),
            p_mp: self.c_mp.norm_sqr(),
            p_mm: self.c_mm.norm_sqr(),
        }
    }

    pub fn as_array(&self) -> [ComplexAmplitude; 4] {
        [self.c_pp, self.c_pm, self.c_mp, self.c_mm]
    }
}

pub fn deterministic_coefficients(a: MeasurementAngle, b: MeasurementAngle) -> EprbCoefficients {
    EprbCoefficients::from_dot(dot(a, b))
}
