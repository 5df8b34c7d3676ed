use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DEFAULT_TRIALS;
use crate::error::{invalid, Result};
use crate::forces::{sigma_y_expectation, sigma_y_linear, sigma_z_expectation, sigma_z_linear};
use crate::sampling::{kebab_enum, RandomnessConfig};
use crate::stats::{bin_index, chi_square_independence, quantile_edges, ChiSquareReport};

/// Whether the second (z) measurement sees the same random part as the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Innovation {
    #[default]
    Redraw,
    Reuse,
}

/// How the z expectation is centered before taking its sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZCentering {
    /// Sign of the part linear in `v`, `√2 Re(v₊* + v₋)`. Symmetric under
    /// `v → -v`, so up and down are equally likely.
    #[default]
    Linear,
    /// Sign of `⟨σ_z⟩ − 1`. The quadratic cross term is left in and skews
    /// the marginal away from one half.
    SubtractConstant,
}

kebab_enum!(Innovation { Redraw => "redraw", Reuse => "reuse" });
kebab_enum!(ZCentering { Linear => "linear", SubtractConstant => "subtract-constant" });

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatConfig {
    pub randomness: RandomnessConfig,
    pub n_trials: u64,
    pub innovation: Innovation,
    pub z_centering: ZCentering,
    /// Quantile bins per axis for the binned independence test.
    pub bins: usize,
}

impl Default for RepeatConfig {
    fn default() -> Self {
        RepeatConfig {
            randomness: RandomnessConfig::default(),
            n_trials: DEFAULT_TRIALS,
            innovation: Innovation::Redraw,
            z_centering: ZCentering::Linear,
            bins: 4,
        }
    }
}

impl RepeatConfig {
    pub fn validate(&self) -> Result<()> {
        self.randomness.validate()?;
        if self.n_trials < 2 {
            return Err(invalid("n-trials", "must be at least 2"));
        }
        if self.bins < 2 || self.bins as u64 > self.n_trials {
            return Err(invalid("bins", "must be between 2 and the number of trials"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedStats {
    pub n_trials: u64,
    /// `[[y up & z up, y up & z down], [y down & z up, y down & z down]]`.
    pub table: [[u64; 2]; 2],
    pub z_up_rate: f64,
    pub z_up_given_y_up: Option<f64>,
    pub z_up_given_y_down: Option<f64>,
    /// Binomial standard error of `z_up_rate` at one half.
    pub z_marginal_se: f64,
    /// Standard error of the difference of the two conditional rates.
    pub conditional_diff_se: f64,
    /// Chi-square on the 2×2 sign table.
    pub sign_test: ChiSquareReport,
    /// Chi-square on quantile bins of the linear parts of the y and z
    /// expectations; sensitive to dependence that the signs alone hide.
    pub binned_test: ChiSquareReport,
    /// Sample covariance of `⟨σ_y⟩` and `⟨σ_z⟩`.
    pub expectation_covariance: f64,
}

#[derive(Clone, Copy)]
struct Sample {
    y_full: f64,
    z_full: f64,
    y_lin: f64,
    z_lin: f64,
    z_centered: f64,
}

/// Joint statistics of a y measurement followed by a z measurement on a
/// spin prepared with equal weights.
pub fn repeated_measurement_stats(cfg: &RepeatConfig) -> Result<RepeatedStats> {
    cfg.validate()?;
    let streams = cfg.randomness.streams();
    let samples: Vec<Sample> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.trial(0, i);
            let v = cfg.randomness.sample2(&mut rng);
            let vz = match cfg.innovation {
                Innovation::Reuse => v,
                Innovation::Redraw => cfg.randomness.sample2(&mut rng),
            };
            let z_full = sigma_z_expectation(&vz);
            Sample {
                y_full: sigma_y_expectation(&v),
                z_full,
                y_lin: sigma_y_linear(&v),
                z_lin: sigma_z_linear(&vz),
                z_centered: match cfg.z_centering {
                    ZCentering::Linear => sigma_z_linear(&vz),
                    ZCentering::SubtractConstant => z_full - 1.0,
                },
            }
        })
        .collect();

    let mut table = [[0u64; 2]; 2];
    for s in &samples {
        let y = usize::from(s.y_full <= 0.0);
        let z = usize::from(s.z_centered <= 0.0);
        table[y][z] += 1;
    }

    let ys: Vec<f64> = samples.iter().map(|s| s.y_lin).collect();
    let zs: Vec<f64> = samples.iter().map(|s| s.z_lin).collect();
    let (ye, ze) = (quantile_edges(&ys, cfg.bins), quantile_edges(&zs, cfg.bins));
    let mut binned = vec![vec![0u64; cfg.bins]; cfg.bins];
    for (y, z) in ys.iter().zip(&zs) {
        binned[bin_index(&ye, *y)][bin_index(&ze, *z)] += 1;
    }

    let n = cfg.n_trials as f64;
    let mean_y = samples.iter().map(|s| s.y_full).sum::<f64>() / n;
    let mean_z = samples.iter().map(|s| s.z_full).sum::<f64>() / n;
    let cov = samples.iter().map(|s| (s.y_full - mean_y) * (s.z_full - mean_z)).sum::<f64>() / (n - 1.0);

    let row_up = table[0][0] + table[0][1];
    let row_down = table[1][0] + table[1][1];
    let cond = |up: u64, tot: u64| (tot > 0).then(|| up as f64 / tot as f64);
    let diff_se = if row_up > 0 && row_down > 0 {
        (0.25 / row_up as f64 + 0.25 / row_down as f64).sqrt()
    } else {
        f64::INFINITY
    };

    Ok(RepeatedStats {
        n_trials: cfg.n_trials,
        table,
        z_up_rate: (table[0][0] + table[1][0]) as f64 / n,
        z_up_given_y_up: cond(table[0][0], row_up),
        z_up_given_y_down: cond(table[1][0], row_down),
        z_marginal_se: (0.25 / n).sqrt(),
        conditional_diff_se: diff_se,
        sign_test: chi_square_independence(&table),
        binned_test: chi_square_independence(&binned),
        expectation_covariance: cov,
    })
}
