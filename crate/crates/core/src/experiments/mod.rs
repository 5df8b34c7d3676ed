//! Monte Carlo drivers.
//!
//! Every trial reads only its own substream and results are accumulated as
//! integer counts, so a run is bit-identical for any thread count.

mod chsh;
mod repeat;
mod sg;

pub use chsh::{
    chsh_search, chsh_value, convention_variants, run_chsh, run_chsh_in_blocks, scan_conventions, ChshAngles, ChshConvention,
    ChshResult, ChshSearchResult, ConventionScanEntry, CorrelationSign, QuadrupleSummary, RoleOrder,
    STANDARD_ANGLES_DEG,
};
pub use repeat::{repeated_measurement_stats, Innovation, RepeatConfig, RepeatedStats, ZCentering};
pub use sg::{sg_p_sweep, sg_trials, SgConfig, SgRow, SgTrialRecord};

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{classify_dual_lab, classify_eprb_event, classify_single_needle, EventClass, LabStatus};
use crate::error::{invalid, Error, Result};
use crate::forces::{eprb_dual_forces, eprb_single_forces};
use crate::geometry::{CoefficientPhases, EprbCoefficients, MeasurementAngle};
use crate::sampling::{kebab_enum, RandomnessConfig, TrialStreams};
use crate::stats::{chi_square_independence, ChiSquareReport};

/// Default number of trials per experiment.
pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Apparatus {
    /// One needle per lab, outcome from the sign of the force.
    #[default]
    Single,
    /// An up detector and a down detector per lab.
    Dual,
}

kebab_enum!(Apparatus { Single => "single", Dual => "dual" });

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub apparatus: Apparatus,
    pub randomness: RandomnessConfig,
    pub beta: f64,
    pub n_trials: u64,
    pub convention: ChshConvention,
    pub phases: CoefficientPhases,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            apparatus: Apparatus::Single,
            randomness: RandomnessConfig::default(),
            beta: 0.0,
            n_trials: DEFAULT_TRIALS,
            convention: ChshConvention::default(),
            phases: CoefficientPhases::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn single(randomness: RandomnessConfig, beta: f64, n_trials: u64) -> Self {
        ExperimentConfig {
            apparatus: Apparatus::Single,
            randomness,
            beta,
            n_trials,
            ..Default::default()
        }
    }

    pub fn dual(randomness: RandomnessConfig, beta: f64, n_trials: u64) -> Self {
        ExperimentConfig {
            apparatus: Apparatus::Dual,
            ..Self::single(randomness, beta, n_trials)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.randomness.validate()?;
        if self.n_trials == 0 {
            return Err(invalid("n-trials", "must be at least 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("must be a finite nonnegative number, got {}", self.beta)));
        }
        if self.apparatus == Apparatus::Dual && self.beta <= 0.0 {
            return Err(invalid("beta", "the dual apparatus needs a positive threshold"));
        }
        Ok(())
    }

    pub fn coefficients(&self, a: MeasurementAngle, b: MeasurementAngle) -> EprbCoefficients {
        EprbCoefficients::from_dot(self.convention.scale.dot(a, b)).with_phases(self.phases)
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (0 keeps the global
/// pool).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// One simulated EPRB trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    /// `[f_a, f_b]` for the single needle, `[f_a1, f_a2, f_b1, f_b2]` for the
    /// dual apparatus (unused slots are NaN).
    pub forces: [f64; 4],
    pub alice: LabStatus,
    pub bob: LabStatus,
    pub class: EventClass,
}

fn simulate_trial(cfg: &ExperimentConfig, coeffs: &EprbCoefficients, streams: &TrialStreams, block: u64, i: u64) -> TrialRecord {
    let mut rng = streams.trial(block, i);
    let v = cfg.randomness.sample4(&mut rng);
    let (forces, alice, bob) = match cfg.apparatus {
        Apparatus::Single => {
            let f = eprb_single_forces(coeffs, &v);
            (
                [f.f_a, f.f_b, f64::NAN, f64::NAN],
                classify_single_needle(f.f_a, cfg.beta),
                classify_single_needle(f.f_b, cfg.beta),
            )
        }
        Apparatus::Dual => {
            let f = eprb_dual_forces(coeffs, &v);
            (
                [f.f_a1, f.f_a2, f.f_b1, f.f_b2],
                classify_dual_lab(f.f_a1, f.f_a2, cfg.beta),
                classify_dual_lab(f.f_b1, f.f_b2, cfg.beta),
            )
        }
    };
    TrialRecord {
        trial_index: i,
        forces,
        alice,
        bob,
        class: classify_eprb_event(alice, bob),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub up_up: u64,
    pub up_down: u64,
    pub down_up: u64,
    pub down_down: u64,
    pub coincidences: u64,
    pub single_detections: u64,
    pub double_detections: u64,
    pub no_detections: u64,
    pub alice_up: u64,
    pub alice_down: u64,
}

impl OutcomeCounts {
    fn record(&mut self, t: &TrialRecord) {
        match t.class {
            EventClass::Coincidence => self.coincidences += 1,
            EventClass::SingleDetection => self.single_detections += 1,
            EventClass::DoubleDetection => self.double_detections += 1,
            EventClass::NoDetection => self.no_detections += 1,
        }
        match t.alice {
            LabStatus::Up => self.alice_up += 1,
            LabStatus::Down => self.alice_down += 1,
            _ => {}
        }
        if t.class == EventClass::Coincidence {
            match (t.alice, t.bob) {
                (LabStatus::Up, LabStatus::Up) => self.up_up += 1,
                (LabStatus::Up, LabStatus::Down) => self.up_down += 1,
                (LabStatus::Down, LabStatus::Up) => self.down_up += 1,
                _ => self.down_down += 1,
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.coincidences + self.single_detections + self.double_detections + self.no_detections
    }
}

impl AddAssign for OutcomeCounts {
    fn add_assign(&mut self, o: Self) {
        self.up_up += o.up_up;
        self.up_down += o.up_down;
        self.down_up += o.down_up;
        self.down_down += o.down_down;
        self.coincidences += o.coincidences;
        self.single_detections += o.single_detections;
        self.double_detections += o.double_detections;
        self.no_detections += o.no_detections;
        self.alice_up += o.alice_up;
        self.alice_down += o.alice_down;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStats {
    pub a_deg: f64,
    pub b_deg: f64,
    pub n_trials: u64,
    pub counts: OutcomeCounts,
    pub coincidence_rate: f64,
    pub sd_rate: f64,
    pub dd_rate: f64,
    pub nd_rate: f64,
    /// `(uu - ud - du + dd) / coincidences`, times the convention's sign.
    pub correlation: f64,
    /// `√((1 - C²) / coincidences)`.
    pub std_error: f64,
}

impl CorrelationStats {
    fn from_counts(a: MeasurementAngle, b: MeasurementAngle, counts: OutcomeCounts, sign: f64) -> Result<Self> {
        let n = counts.total();
        if counts.coincidences == 0 {
            return Err(Error::NoCoincidences { n_trials: n });
        }
        let k = counts.coincidences as f64;
        let agree = counts.up_up as f64 + counts.down_down as f64;
        let disagree = counts.up_down as f64 + counts.down_up as f64;
        let correlation = sign * (agree - disagree) / k;
        let rate = |x: u64| x as f64 / n as f64;
        Ok(CorrelationStats {
            a_deg: a.degrees(),
            b_deg: b.degrees(),
            n_trials: n,
            counts,
            coincidence_rate: rate(counts.coincidences),
            sd_rate: rate(counts.single_detections),
            dd_rate: rate(counts.double_detections),
            nd_rate: rate(counts.no_detections),
            correlation,
            std_error: ((1.0 - correlation * correlation).max(0.0) / k).sqrt(),
        })
    }
}

fn count_block(cfg: &ExperimentConfig, a: MeasurementAngle, b: MeasurementAngle, block: u64) -> OutcomeCounts {
    let coeffs = cfg.coefficients(a, b);
    let streams = cfg.randomness.streams();
    (0..cfg.n_trials)
        .into_par_iter()
        .fold(OutcomeCounts::default, |mut acc, i| {
            acc.record(&simulate_trial(cfg, &coeffs, &streams, block, i));
            acc
        })
        .reduce(OutcomeCounts::default, |mut x, y| {
            x += y;
            x
        })
}

pub fn run_correlation(a: MeasurementAngle, b: MeasurementAngle, cfg: &ExperimentConfig) -> Result<CorrelationStats> {
    run_correlation_in_block(a, b, cfg, 0)
}

/// As [`run_correlation`], drawing from trial block `block`.
pub fn run_correlation_in_block(
    a: MeasurementAngle,
    b: MeasurementAngle,
    cfg: &ExperimentConfig,
    block: u64,
) -> Result<CorrelationStats> {
    cfg.validate()?;
    let counts = count_block(cfg, a, b, block);
    CorrelationStats::from_counts(a, b, counts, cfg.convention.sign.factor())
}

/// Per-trial records alongside the summary, in trial order.
pub fn run_correlation_with_trials(
    a: MeasurementAngle,
    b: MeasurementAngle,
    cfg: &ExperimentConfig,
    block: u64,
) -> Result<(CorrelationStats, Vec<TrialRecord>)> {
    cfg.validate()?;
    let coeffs = cfg.coefficients(a, b);
    let streams = cfg.randomness.streams();
    let trials: Vec<TrialRecord> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|i| simulate_trial(cfg, &coeffs, &streams, block, i))
        .collect();
    let mut counts = OutcomeCounts::default();
    for t in &trials {
        counts.record(t);
    }
    let stats = CorrelationStats::from_counts(a, b, counts, cfg.convention.sign.factor())?;
    Ok((stats, trials))
}

/// Correlation at Bob angles `a − Δ` for each `Δ` in `deltas_deg`, one trial
/// block per grid point.
pub fn correlation_sweep(a: MeasurementAngle, deltas_deg: &[f64], cfg: &ExperimentConfig) -> Vec<Result<CorrelationStats>> {
    deltas_deg
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let b = a.rotated(-d.to_radians());
            run_correlation_in_block(a, b, cfg, k as u64)
        })
        .collect()
}

/// Chi-square homogeneity of Alice's up/down split across Bob settings
/// (one independent trial block per setting). Only resolved outcomes count.
pub fn alice_marginal_homogeneity(
    a: MeasurementAngle,
    bobs: &[MeasurementAngle],
    cfg: &ExperimentConfig,
) -> Result<ChiSquareReport> {
    cfg.validate()?;
    let table: Vec<[u64; 2]> = bobs
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let c = count_block(cfg, a, b, k as u64);
            [c.alice_up, c.alice_down]
        })
        .collect();
    Ok(chi_square_independence(&table))
}
