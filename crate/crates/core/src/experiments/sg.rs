use std::ops::AddAssign;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DEFAULT_TRIALS;
use crate::detection::{classify_dual_lab, LabStatus};
use crate::error::{invalid, Error, Result};
use crate::forces::sg_forces;
use crate::sampling::RandomnessConfig;

/// Stern-Gerlach run with an up detector and a down detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgConfig {
    pub randomness: RandomnessConfig,
    pub beta: f64,
    pub n_trials: u64,
}

impl Default for SgConfig {
    fn default() -> Self {
        SgConfig {
            randomness: RandomnessConfig::default(),
            beta: 1.0,
            n_trials: DEFAULT_TRIALS,
        }
    }
}

impl SgConfig {
    pub fn validate(&self) -> Result<()> {
        self.randomness.validate()?;
        if self.n_trials == 0 {
            return Err(invalid("n-trials", "must be at least 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("must be a finite nonnegative number, got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgTrialRecord {
    pub trial_index: u64,
    pub f1: f64,
    pub f2: f64,
    pub status: LabStatus,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct SgCounts {
    up: u64,
    down: u64,
    both: u64,
    none: u64,
}

impl SgCounts {
    fn record(&mut self, s: LabStatus) {
        match s {
            LabStatus::Up => self.up += 1,
            LabStatus::Down => self.down += 1,
            LabStatus::Both => self.both += 1,
            LabStatus::None => self.none += 1,
        }
    }
}

impl AddAssign for SgCounts {
    fn add_assign(&mut self, o: Self) {
        self.up += o.up;
        self.down += o.down;
        self.both += o.both;
        self.none += o.none;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgRow {
    pub p: f64,
    pub n_trials: u64,
    pub up: u64,
    pub down: u64,
    pub dd: u64,
    pub nd: u64,
    /// `up / (up + down)`; `None` when no trial registered in exactly one
    /// detector.
    pub up_rate_conditional: Option<f64>,
    pub dd_rate: f64,
    pub nd_rate: f64,
}

impl SgRow {
    pub fn unresolved(&self) -> bool {
        self.up_rate_conditional.is_none()
    }
}

fn sg_trial(p: f64, cfg: &SgConfig, streams: &crate::sampling::TrialStreams, block: u64, i: u64) -> SgTrialRecord {
    let v = cfg.randomness.sample2(&mut streams.trial(block, i));
    let f = sg_forces(p, &v).expect("p checked by caller");
    SgTrialRecord {
        trial_index: i,
        f1: f.f1,
        f2: f.f2,
        status: classify_dual_lab(f.f1, f.f2, cfg.beta),
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}

fn row(p: f64, n: u64, c: SgCounts) -> SgRow {
    let resolved = c.up + c.down;
    SgRow {
        p,
        n_trials: n,
        up: c.up,
        down: c.down,
        dd: c.both,
        nd: c.none,
        up_rate_conditional: (resolved > 0).then(|| c.up as f64 / resolved as f64),
        dd_rate: c.both as f64 / n as f64,
        nd_rate: c.none as f64 / n as f64,
    }
}

/// One row per `p`, each drawn from its own trial block.
pub fn sg_p_sweep(p_grid: &[f64], cfg: &SgConfig) -> Result<Vec<SgRow>> {
    cfg.validate()?;
    p_grid.iter().try_for_each(|&p| check_p(p))?;
    let streams = cfg.randomness.streams();
    Ok(p_grid
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let counts = (0..cfg.n_trials)
                .into_par_iter()
                .fold(SgCounts::default, |mut acc, i| {
                    acc.record(sg_trial(p, cfg, &streams, k as u64, i).status);
                    acc
                })
                .reduce(SgCounts::default, |mut x, y| {
                    x += y;
                    x
                });
            row(p, cfg.n_trials, counts)
        })
        .collect())
}

/// Per-trial records for a single `p`, using trial block `block`.
pub fn sg_trials(p: f64, cfg: &SgConfig, block: u64) -> Result<Vec<SgTrialRecord>> {
    cfg.validate()?;
    check_p(p)?;
    let streams = cfg.randomness.streams();
    Ok((0..cfg.n_trials)
        .into_par_iter()
        .map(|i| sg_trial(p, cfg, &streams, block, i))
        .collect())
}
