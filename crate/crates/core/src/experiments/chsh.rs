use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run_correlation_in_block, CorrelationStats, ExperimentConfig};
use crate::error::{invalid, Error, Result};
use crate::geometry::{AngleScale, MeasurementAngle};
use crate::sampling::{kebab_enum, trial_index};

/// `(a, a′, b, b′)` in degrees.
pub const STANDARD_ANGLES_DEG: [f64; 4] = [0.0, 90.0, 225.0, 315.0];

/// Trial block reserved for drawing search angles.
const ANGLE_BLOCK: u64 = (1 << 24) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationSign {
    #[default]
    Plus,
    /// Report `-C` instead of `C`.
    Minus,
}

impl CorrelationSign {
    pub fn factor(self) -> f64 {
        match self {
            CorrelationSign::Plus => 1.0,
            CorrelationSign::Minus => -1.0,
        }
    }
}

/// Which of Alice's two settings plays the unprimed role in `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoleOrder {
    /// The first listed Alice angle is `a′`, the second is `a`. With the
    /// standard quadruple this puts the minus sign on the pair with the
    /// smallest correlation, which is where the quantum value `2√2` sits.
    #[default]
    SwapAlice,
    AsPrinted,
}

kebab_enum!(AngleScale { Full => "full", Half => "half" });
kebab_enum!(CorrelationSign { Plus => "plus", Minus => "minus" });
kebab_enum!(RoleOrder { SwapAlice => "swap-alice", AsPrinted => "as-printed" });

/// How measurement angles enter the coefficients and how `S` is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChshConvention {
    pub scale: AngleScale,
    pub sign: CorrelationSign,
    pub roles: RoleOrder,
}

impl fmt::Display for ChshConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.scale, self.sign, self.roles)
    }
}

impl FromStr for ChshConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split('/').map(str::trim).collect();
        let [scale, sign, roles] = parts.as_slice() else {
            return Err("expected scale/sign/roles, e.g. full/plus/swap-alice".into());
        };
        Ok(ChshConvention {
            scale: scale.parse()?,
            sign: sign.parse()?,
            roles: roles.parse()?,
        })
    }
}

/// All eight combinations of scale, sign and role order.
pub fn convention_variants() -> Vec<ChshConvention> {
    let mut out = Vec::with_capacity(8);
    for scale in [AngleScale::Full, AngleScale::Half] {
        for sign in [CorrelationSign::Plus, CorrelationSign::Minus] {
            for roles in [RoleOrder::SwapAlice, RoleOrder::AsPrinted] {
                out.push(ChshConvention { scale, sign, roles });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: MeasurementAngle,
    pub a_prime: MeasurementAngle,
    pub b: MeasurementAngle,
    pub b_prime: MeasurementAngle,
}

impl ChshAngles {
    pub fn from_degrees(deg: [f64; 4]) -> Self {
        let [a, a_prime, b, b_prime] = deg.map(MeasurementAngle::from_degrees);
        ChshAngles { a, a_prime, b, b_prime }
    }

    pub fn standard() -> Self {
        Self::from_degrees(STANDARD_ANGLES_DEG)
    }

    pub fn degrees(&self) -> [f64; 4] {
        [self.a, self.a_prime, self.b, self.b_prime].map(MeasurementAngle::degrees)
    }

    /// The angles in the roles they play in `S` under `roles`.
    pub fn in_roles(&self, roles: RoleOrder) -> Self {
        match roles {
            RoleOrder::AsPrinted => *self,
            RoleOrder::SwapAlice => ChshAngles {
                a: self.a_prime,
                a_prime: self.a,
                ..*self
            },
        }
    }

    fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut next = || MeasurementAngle::from_radians(rng.random_range(0.0..std::f64::consts::TAU));
        ChshAngles {
            a: next(),
            a_prime: next(),
            b: next(),
            b_prime: next(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    /// Angles as given.
    pub angles: ChshAngles,
    /// Angles in the roles used to assemble `S`.
    pub effective: ChshAngles,
    /// `[C(a,b), C(a′,b), C(a,b′), C(a′,b′)]` over the effective angles.
    pub correlations: [CorrelationStats; 4],
    pub s_value: f64,
    /// Combined standard error of `S` from the four independent blocks.
    pub std_error: f64,
}

/// `S = C(a,b) + C(a′,b) + C(a,b′) − C(a′,b′)`.
pub fn chsh_value(c: [f64; 4]) -> f64 {
    c[0] + c[1] + c[2] - c[3]
}

pub fn run_chsh(angles: ChshAngles, cfg: &ExperimentConfig) -> Result<ChshResult> {
    run_chsh_in_blocks(angles, cfg, 0)
}

/// As [`run_chsh`], with the four correlations drawn from trial blocks
/// `first_block .. first_block + 4`.
pub fn run_chsh_in_blocks(angles: ChshAngles, cfg: &ExperimentConfig, first_block: u64) -> Result<ChshResult> {
    let e = angles.in_roles(cfg.convention.roles);
    let pairs = [(e.a, e.b), (e.a_prime, e.b), (e.a, e.b_prime), (e.a_prime, e.b_prime)];
    let mut stats = Vec::with_capacity(4);
    for (k, (x, y)) in pairs.into_iter().enumerate() {
        stats.push(run_correlation_in_block(x, y, cfg, first_block + k as u64)?);
    }
    let correlations: [CorrelationStats; 4] = stats.try_into().expect("four correlations");
    let s_value = chsh_value(correlations.map(|c| c.correlation));
    let std_error = correlations.iter().map(|c| c.std_error.powi(2)).sum::<f64>().sqrt();
    Ok(ChshResult {
        angles,
        effective: e,
        correlations,
        s_value,
        std_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleSummary {
    pub index: usize,
    pub angles_deg: [f64; 4],
    /// `None` when one of the four settings produced no coincidences.
    pub s_value: Option<f64>,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshSearchResult {
    pub best: ChshResult,
    pub best_index: usize,
    pub quadruples: Vec<QuadrupleSummary>,
}

impl ChshSearchResult {
    /// Largest `(|S| − 2) / σ` over all evaluated quadruples.
    pub fn max_excess_sigmas(&self) -> f64 {
        self.quadruples
            .iter()
            .filter_map(|q| Some((q.s_value?.abs() - 2.0) / q.std_error?))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Random search over `n_quadruples` angle quadruples, each angle uniform on
/// `[0, 2π)`. Quadruple `k` uses trial blocks `4k .. 4k + 4`, so the first
/// quadruple is exactly what [`run_chsh`] would give at those angles.
pub fn chsh_search(n_quadruples: usize, cfg: &ExperimentConfig) -> Result<ChshSearchResult> {
    if n_quadruples == 0 {
        return Err(invalid("quadruples", "must be at least 1"));
    }
    cfg.validate()?;
    let streams = cfg.randomness.streams();
    let mut best: Option<(usize, ChshResult)> = None;
    let mut quadruples = Vec::with_capacity(n_quadruples);
    for k in 0..n_quadruples {
        let angles = ChshAngles::draw(&mut streams.stream(trial_index(ANGLE_BLOCK, k as u64)));
        let summary = match run_chsh_in_blocks(angles, cfg, 4 * k as u64) {
            Ok(r) => {
                if best.as_ref().is_none_or(|(_, b)| r.s_value.abs() > b.s_value.abs()) {
                    best = Some((k, r));
                }
                QuadrupleSummary {
                    index: k,
                    angles_deg: angles.degrees(),
                    s_value: Some(r.s_value),
                    std_error: Some(r.std_error),
                }
            }
            Err(Error::NoCoincidences { .. }) => QuadrupleSummary {
                index: k,
                angles_deg: angles.degrees(),
                s_value: None,
                std_error: None,
            },
            Err(e) => return Err(e),
        };
        quadruples.push(summary);
    }
    let (best_index, best) = best.ok_or(Error::NoCoincidences {
        n_trials: cfg.n_trials * 4 * n_quadruples as u64,
    })?;
    Ok(ChshSearchResult {
        best,
        best_index,
        quadruples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConventionScanEntry {
    pub convention: ChshConvention,
    pub s_value: f64,
    pub std_error: f64,
}

/// `S` at `angles` under every convention variant, same seed throughout.
pub fn scan_conventions(angles: ChshAngles, cfg: &ExperimentConfig) -> Result<Vec<ConventionScanEntry>> {
    convention_variants()
        .into_iter()
        .map(|convention| {
            let r = run_chsh(angles, &ExperimentConfig { convention, ..*cfg })?;
            Ok(ConventionScanEntry {
                convention,
                s_value: r.s_value,
                std_error: r.std_error,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RandomnessConfig;

    #[test]
    fn convention_strings_round_trip() {
        for c in convention_variants() {
            assert_eq!(c.to_string().parse::<ChshConvention>(), Ok(c));
        }
        assert_eq!(ChshConvention::default().to_string(), "full/plus/swap-alice");
        assert!("full/plus".parse::<ChshConvention>().is_err());
        assert!("full/plus/sideways".parse::<ChshConvention>().is_err());
    }

    #[test]
    fn s_combines_the_four_blocks() {
        let cfg = ExperimentConfig::single(RandomnessConfig::bounded(1.0, 2), 0.0, 5_000);
        let r = run_chsh(ChshAngles::standard(), &cfg).unwrap();
        let c = r.correlations.map(|x| x.correlation);
        assert_eq!(r.s_value, c[0] + c[1] + c[2] - c[3]);
        assert_eq!(r.effective.a.degrees(), 90.0);
        assert_eq!(r.effective.a_prime.degrees(), 0.0);
        let printed = ExperimentConfig {
            convention: ChshConvention {
                roles: RoleOrder::AsPrinted,
                ..Default::default()
            },
            ..cfg
        };
        assert_eq!(run_chsh(ChshAngles::standard(), &printed).unwrap().effective, ChshAngles::standard());
    }

    #[test]
    fn single_quadruple_search_matches_run_chsh() {
        let cfg = ExperimentConfig::single(RandomnessConfig::bounded(1.0, 11), 0.0, 4_000);
        let search = chsh_search(1, &cfg).unwrap();
        assert_eq!(search.best_index, 0);
        assert_eq!(search.best, run_chsh(search.best.angles, &cfg).unwrap());
    }

    #[test]
    fn search_is_deterministic_and_returns_the_argmax() {
        let cfg = ExperimentConfig::single(RandomnessConfig::bounded(1.0, 12), 0.0, 2_000);
        let x = chsh_search(12, &cfg).unwrap();
        assert_eq!(x, chsh_search(12, &cfg).unwrap());
        let max = x.quadruples.iter().filter_map(|q| q.s_value).map(f64::abs).fold(0.0, f64::max);
        assert_eq!(x.best.s_value.abs(), max);
        assert!(x.quadruples[..x.best_index].iter().all(|q| q.s_value.unwrap().abs() < max));
    }

    #[test]
    fn scan_covers_eight_variants() {
        let cfg = ExperimentConfig::single(RandomnessConfig::bounded(1.0, 13), 0.0, 2_000);
        let scan = scan_conventions(ChshAngles::standard(), &cfg).unwrap();
        assert_eq!(scan.len(), 8);
        // flipping the sign of every correlation flips S
        assert_eq!(scan[0].s_value, -scan[2].s_value);
    }
}
