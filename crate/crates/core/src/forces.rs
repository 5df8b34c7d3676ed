//! Apparatus force functionals.
//!
//! Detector response functions are idealized: the single needle sees `±1`
//! on the up/down packets, the dual detectors see `{0, 1}`, and distinct
//! packets do not overlap. Forces are in arbitrary units.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ComplexAmplitude, EprbCoefficients};
use crate::sampling::{RandomAmplitudes2, RandomAmplitudes4};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleApparatusForces {
    pub f_a: f64,
    pub f_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualApparatusForces {
    pub f_a1: f64,
    pub f_a2: f64,
    pub f_b1: f64,
    pub f_b2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgForces {
    pub f1: f64,
    pub f2: f64,
}

/// Needle forces in the two labs. Bob's force flips the sign of the `+-`
/// and `-+` terms relative to Alice's.
pub fn eprb_single_forces(c: &EprbCoefficients, v: &RandomAmplitudes4) -> SingleApparatusForces {
    let pp = (c.c_pp * v.v_pp).re;
    let pm = (c.c_pm * v.v_pm).re;
    let mp = (c.c_mp * v.v_mp).re;
    let mm = (c.c_mm * v.v_mm).re;
    SingleApparatusForces {
        f_a: 2.0 * (pp + pm - mp - mm),
        f_b: 2.0 * (pp - pm + mp - mm),
    }
}

/// Forces on the up (`1`) and down (`2`) detectors in each lab.
pub fn eprb_dual_forces(c: &EprbCoefficients, v: &RandomAmplitudes4) -> DualApparatusForces {
    let cross = |ci: ComplexAmplitude, vi: ComplexAmplitude| 2.0 * (ci * vi).re;
    let (pp, pm, mp, mm) = (
        cross(c.c_pp, v.v_pp),
        cross(c.c_pm, v.v_pm),
        cross(c.c_mp, v.v_mp),
        cross(c.c_mm, v.v_mm),
    );
    let [n_pp, n_pm, n_mp, n_mm] = v.as_array().map(|z| z.norm_sqr());
    DualApparatusForces {
        f_a1: 0.5 + pp + pm + n_pp + n_pm,
        f_a2: 0.5 + mp + mm + n_mp + n_mm,
        f_b1: 0.5 + pp + mp + n_pp + n_mp,
        f_b2: 0.5 + pm + mm + n_pm + n_mm,
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}

/// Forces on the two Stern-Gerlach detectors for branch weight `p`. The
/// fixed relative phase is absorbed into `v_m`.
pub fn sg_forces(p: f64, v: &RandomAmplitudes2) -> Result<SgForces> {
    check_probability(p)?;
    let (sp, sq) = (p.sqrt(), (1.0 - p).sqrt());
    Ok(SgForces {
        f1: p + 2.0 * (sp * v.v_p).re + v.v_p.norm_sqr(),
        f2: (1.0 - p) + 2.0 * (sq * v.v_m).re + v.v_m.norm_sqr(),
    })
}

/// `⟨ψ|σ_y|ψ⟩` at `p = ½`.
pub fn sigma_y_expectation(v: &RandomAmplitudes2) -> f64 {
    SQRT_2 * (v.v_p - v.v_m).re + v.v_p.norm_sqr() - v.v_m.norm_sqr()
}

/// `⟨ψ|σ_z|ψ⟩` for the recombined packets at `p = ½` with zero relative
/// phase. Note the deterministic part alone contributes the constant 1.
pub fn sigma_z_expectation(v: &RandomAmplitudes2) -> f64 {
    1.0 + SQRT_2 * (v.v_p.conj() + v.v_m).re + 2.0 * (v.v_p.conj() * v.v_m).re
}

/// Linear (first-order in `v`) part of [`sigma_y_expectation`].
pub fn sigma_y_linear(v: &RandomAmplitudes2) -> f64 {
    SQRT_2 * (v.v_p - v.v_m).re
}

/// Linear part of [`sigma_z_expectation`]; orthogonal to [`sigma_y_linear`]
/// for centered amplitudes with uniform phases.
pub fn sigma_z_linear(v: &RandomAmplitudes2) -> f64 {
    SQRT_2 * (v.v_p.conj() + v.v_m).re
}

/// Random force on the microsystem coordinate for branch weight `p`,
/// scaled by the field strength `m`.
pub fn pointer_random_force(p: f64, v: &RandomAmplitudes2, m: f64) -> Result<f64> {
    check_probability(p)?;
    let bracket = (2.0 * p - 1.0)
        + 2.0 * (p.sqrt() * v.v_p - (1.0 - p).sqrt() * v.v_m).re
        + v.v_p.norm_sqr()
        - v.v_m.norm_sqr();
    Ok(m * bracket)
}

/// Residual intensity at a node of the deterministic interference pattern:
/// `|v1 ψ1|² + |v2 ψ2|²`.
pub fn node_intensity(v1: Complex64, v2: Complex64, psi1: Complex64, psi2: Complex64) -> f64 {
    (v1 * psi1).norm_sqr() + (v2 * psi2).norm_sqr()
}
