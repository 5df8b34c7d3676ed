//! Locality checks.
//!
//! Active locality: Alice's force distribution must not depend on Bob's
//! setting (two-sample KS). Passive locality fails: for a fixed random part
//! `v` Alice's outcome can flip when only Bob's setting changes. The local
//! deterministic bound `|S| ≤ 2` is enumerated directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{classify_single_needle, LabStatus};
use crate::error::{Error, Result};
use crate::experiments::{Apparatus, ChshAngles, ExperimentConfig};
use crate::forces::{eprb_dual_forces, eprb_single_forces};
use crate::geometry::MeasurementAngle;
use crate::sampling::RandomAmplitudes4;

/// Significance level used by every audit.
pub const AUDIT_ALPHA: f64 = 0.01;
/// Smallest sample the asymptotic KS p-value is trusted for.
pub const KS_MIN_SAMPLE: usize = 25;

/// Trial block used for the passive-locality search.
const WITNESS_BLOCK: u64 = (1 << 24) - 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n1: usize,
    pub n2: usize,
    pub p_value: f64,
    /// `p_value < alpha` at the level the report was made for.
    pub reject: bool,
}

/// Asymptotic Kolmogorov distribution tail `Q(λ) = 2 Σ (−1)^{j−1} e^{−2j²λ²}`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test at level [`AUDIT_ALPHA`].
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsReport> {
    ks_two_sample_at(x, y, AUDIT_ALPHA)
}

pub fn ks_two_sample_at(x: &[f64], y: &[f64], alpha: f64) -> Result<KsReport> {
    let small = x.len().min(y.len());
    if small < KS_MIN_SAMPLE {
        return Err(Error::SampleTooSmall {
            got: small,
            need: KS_MIN_SAMPLE,
        });
    }
    let sorted = |s: &[f64]| {
        let mut v = s.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (xs, ys) = (sorted(x), sorted(y));
    let (n1, n2) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        let t = xs[i].min(ys[j]);
        while i < n1 && xs[i] <= t {
            i += 1;
        }
        while j < n2 && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let en = ((n1 * n2) as f64 / (n1 + n2) as f64).sqrt();
    let p_value = kolmogorov_sf((en + 0.12 + 0.11 / en) * d);
    Ok(KsReport {
        statistic: d,
        n1,
        n2,
        p_value,
        reject: p_value < alpha,
    })
}

/// Alice's force under settings `(a, b)`: `F_A` for the single needle, the
/// up-detector force `F_A1` for the dual apparatus. An optional `shift`
/// times `cos θ_b` is added to build a deliberately nonlocal control.
fn alice_forces(a: MeasurementAngle, b: MeasurementAngle, cfg: &ExperimentConfig, block: u64, shift: f64) -> Vec<f64> {
    let coeffs = cfg.coefficients(a, b);
    let streams = cfg.randomness.streams();
    let leak = shift * b.radians().cos();
    (0..cfg.n_trials)
        .into_par_iter()
        .map(|i| {
            let v = cfg.randomness.sample4(&mut streams.trial(block, i));
            let f = match cfg.apparatus {
                Apparatus::Single => eprb_single_forces(&coeffs, &v).f_a,
                Apparatus::Dual => eprb_dual_forces(&coeffs, &v).f_a1,
            };
            f + leak
        })
        .collect()
}

/// KS comparison of Alice's force under `(a, b1)` and `(a, b2)`, drawn
/// from independent trial blocks.
pub fn active_locality_audit(
    a: MeasurementAngle,
    b1: MeasurementAngle,
    b2: MeasurementAngle,
    cfg: &ExperimentConfig,
) -> Result<KsReport> {
    audit_pair(a, b1, b2, cfg, 0, 0.0, AUDIT_ALPHA)
}

/// As [`active_locality_audit`] with `strength · cos θ_b` added to Alice's
/// force. A sensitivity control that should be rejected.
pub fn corrupted_locality_control(
    a: MeasurementAngle,
    b1: MeasurementAngle,
    b2: MeasurementAngle,
    cfg: &ExperimentConfig,
    strength: f64,
) -> Result<KsReport> {
    audit_pair(a, b1, b2, cfg, 0, strength, AUDIT_ALPHA)
}

fn audit_pair(
    a: MeasurementAngle,
    b1: MeasurementAngle,
    b2: MeasurementAngle,
    cfg: &ExperimentConfig,
    first_block: u64,
    shift: f64,
    alpha: f64,
) -> Result<KsReport> {
    cfg.validate()?;
    let x = alice_forces(a, b1, cfg, first_block, shift);
    let y = alice_forces(a, b2, cfg, first_block + 1, shift);
    ks_two_sample_at(&x, &y, alpha)
}

/// Eight Bob-setting pairs `(b1, b2)` in degrees.
pub const DEFAULT_AUDIT_PAIRS_DEG: [(f64, f64); 8] = [
    (0.0, 45.0),
    (0.0, 90.0),
    (0.0, 135.0),
    (0.0, 180.0),
    (30.0, 210.0),
    (60.0, 150.0),
    (90.0, 270.0),
    (225.0, 315.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub b1_deg: f64,
    pub b2_deg: f64,
    pub report: KsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditGridReport {
    pub a_deg: f64,
    /// Bonferroni-corrected per-pair level.
    pub alpha_per_test: f64,
    pub entries: Vec<AuditEntry>,
}

impl AuditGridReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| !e.report.reject)
    }
}

/// [`active_locality_audit`] over several Bob pairs, at level
/// `AUDIT_ALPHA / pairs.len()` per pair.
pub fn active_locality_grid(a: MeasurementAngle, pairs_deg: &[(f64, f64)], cfg: &ExperimentConfig) -> Result<AuditGridReport> {
    let alpha = AUDIT_ALPHA / pairs_deg.len().max(1) as f64;
    let entries = pairs_deg
        .iter()
        .enumerate()
        .map(|(k, &(b1, b2))| {
            let report = audit_pair(
                a,
                MeasurementAngle::from_degrees(b1),
                MeasurementAngle::from_degrees(b2),
                cfg,
                2 * k as u64,
                0.0,
                alpha,
            )?;
            Ok(AuditEntry {
                b1_deg: b1,
                b2_deg: b2,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditGridReport {
        a_deg: a.degrees(),
        alpha_per_test: alpha,
        entries,
    })
}

/// A random part `v` under which Alice's outcome depends on Bob's setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassiveWitness {
    pub draw_index: u64,
    pub v: RandomAmplitudes4,
    pub f_a_under_b1: f64,
    pub f_a_under_b2: f64,
    pub alice_under_b1: LabStatus,
    pub alice_under_b2: LabStatus,
}

/// Alice's single-needle outcome at fixed `v` for Bob setting `b`.
pub fn alice_outcome(a: MeasurementAngle, b: MeasurementAngle, v: &RandomAmplitudes4, cfg: &ExperimentConfig) -> (f64, LabStatus) {
    let f = eprb_single_forces(&cfg.coefficients(a, b), v).f_a;
    (f, classify_single_needle(f, cfg.beta))
}

/// First of `n_search` draws whose Alice outcome differs between `b1` and
/// `b2`, or `None`.
pub fn passive_locality_witness(
    a: MeasurementAngle,
    b1: MeasurementAngle,
    b2: MeasurementAngle,
    cfg: &ExperimentConfig,
    n_search: u64,
) -> Result<Option<PassiveWitness>> {
    cfg.validate()?;
    let streams = cfg.randomness.streams();
    for k in 0..n_search {
        let v = cfg.randomness.sample4(&mut streams.trial(WITNESS_BLOCK, k));
        let (f1, s1) = alice_outcome(a, b1, &v, cfg);
        let (f2, s2) = alice_outcome(a, b2, &v, cfg);
        if s1 != s2 {
            return Ok(Some(PassiveWitness {
                draw_index: k,
                v,
                f_a_under_b1: f1,
                f_a_under_b2: f2,
                alice_under_b1: s1,
                alice_under_b2: s2,
            }));
        }
    }
    Ok(None)
}

/// Deterministic ±1 outcomes for two settings per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalStrategy {
    /// Outcomes for `a` and `a′`.
    pub alice: [i8; 2],
    /// Outcomes for `b` and `b′`.
    pub bob: [i8; 2],
}

impl LocalStrategy {
    /// `[C(a,b), C(a′,b), C(a,b′), C(a′,b′)]`.
    pub fn correlations(&self) -> [f64; 4] {
        let c = |i: usize, j: usize| f64::from(self.alice[i] * self.bob[j]);
        [c(0, 0), c(1, 0), c(0, 1), c(1, 1)]
    }

    pub fn chsh(&self) -> f64 {
        crate::experiments::chsh_value(self.correlations())
    }
}

/// All sixteen deterministic strategies.
pub fn all_local_strategies() -> Vec<LocalStrategy> {
    let sign = |bit: u8| if bit == 0 { 1 } else { -1 };
    (0u8..16)
        .map(|m| LocalStrategy {
            alice: [sign(m & 1), sign((m >> 1) & 1)],
            bob: [sign((m >> 2) & 1), sign((m >> 3) & 1)],
        })
        .collect()
}

/// Largest `|S|` over all local deterministic strategies.
pub fn local_deterministic_bound(settings_per_side: usize) -> Result<f64> {
    if settings_per_side != 2 {
        return Err(crate::error::invalid("settings-per-side", "only two settings per side are supported"));
    }
    Ok(all_local_strategies().iter().map(|s| s.chsh().abs()).fold(0.0, f64::max))
}

/// `S` of a probabilistic mixture of local strategies (weights need not be
/// normalized).
pub fn mixed_strategy_chsh(mixture: &[(f64, LocalStrategy)]) -> f64 {
    let total: f64 = mixture.iter().map(|(w, _)| w).sum();
    let mut c = [0.0; 4];
    for (w, s) in mixture {
        for (acc, x) in c.iter_mut().zip(s.correlations()) {
            *acc += w / total * x;
        }
    }
    crate::experiments::chsh_value(c)
}

/// Sign correlation of `F_A` and `F_B` for complex Gaussian `v`:
/// `(2/π)·asin(−a·b)`.
pub fn gaussian_sign_oracle_dot(ab: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * (-ab.clamp(-1.0, 1.0)).asin()
}

pub fn gaussian_sign_oracle(a: MeasurementAngle, b: MeasurementAngle) -> f64 {
    gaussian_sign_oracle_dot(crate::geometry::dot(a, b))
}

/// Oracle `S` for the single needle with Gaussian `v` under the convention
/// in `cfg`.
pub fn gaussian_oracle_chsh(angles: ChshAngles, cfg: &ExperimentConfig) -> f64 {
    let e = angles.in_roles(cfg.convention.roles);
    let c = |x, y| cfg.convention.sign.factor() * gaussian_sign_oracle_dot(cfg.convention.scale.dot(x, y));
    crate::experiments::chsh_value([c(e.a, e.b), c(e.a_prime, e.b), c(e.a, e.b_prime), c(e.a_prime, e.b_prime)])
}
