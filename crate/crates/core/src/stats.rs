//! Small statistical helpers shared by the experiments and the audit.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sided p-value at three standard deviations.
pub const THREE_SIGMA_P: f64 = 0.002_699_796_063_260_207;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of independence on an `r × c` contingency table.
/// Rows or columns with zero total are dropped.
pub fn chi_square_independence<R: AsRef<[u64]>>(table: &[R]) -> ChiSquareReport {
    let rows: Vec<&[u64]> = table
        .iter()
        .map(|r| r.as_ref())
        .filter(|r| r.iter().sum::<u64>() > 0)
        .collect();
    let n_cols = rows.first().map_or(0, |r| r.len());
    let col_tot: Vec<u64> = (0..n_cols).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
    let live_cols: Vec<usize> = (0..n_cols).filter(|&j| col_tot[j] > 0).collect();
    let total: u64 = col_tot.iter().sum();
    if rows.len() < 2 || live_cols.len() < 2 {
        return ChiSquareReport {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
        };
    }
    let mut stat = 0.0;
    for r in &rows {
        let row_tot: u64 = r.iter().sum();
        for &j in &live_cols {
            let expected = row_tot as f64 * col_tot[j] as f64 / total as f64;
            stat += (r[j] as f64 - expected).powi(2) / expected;
        }
    }
    let dof = (rows.len() - 1) * (live_cols.len() - 1);
    ChiSquareReport {
        statistic: stat,
        dof,
        p_value: chi_square_sf(stat, dof),
    }
}

pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    ChiSquared::new(dof as f64).map_or(f64::NAN, |d| d.sf(x))
}

/// Two-sided normal p-value for a z score.
pub fn two_sided_normal_p(z: f64) -> f64 {
    let n = Normal::standard();
    2.0 * n.sf(z.abs())
}

/// Index of `x` among `k` equal-count bins given the `k - 1` interior edges.
pub fn bin_index(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

/// Interior quantile edges splitting `xs` into `k` equal-count bins.
pub fn quantile_edges(xs: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    (1..k)
        .map(|i| sorted[(i * sorted.len() / k).min(sorted.len() - 1)])
        .collect()
}
