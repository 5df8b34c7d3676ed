//! Random part of the wavefunction.
//!
//! Every trial draws from its own ChaCha8 stream keyed by the master seed,
//! with the stream id derived from `(block, trial)`. A trial's draws never
//! depend on which other trials ran, or on which thread ran them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::ComplexAmplitude;

pub type TrialRng = ChaCha8Rng;

/// Number of low bits of a stream id reserved for the trial counter.
const TRIAL_BITS: u32 = 40;

/// Stream id for trial `trial` of experiment block `block`.
pub fn trial_index(block: u64, trial: u64) -> u64 {
    debug_assert!(trial < 1 << TRIAL_BITS);
    debug_assert!(block < 1 << (64 - TRIAL_BITS));
    (block << TRIAL_BITS) | trial
}

/// Deterministic substream for one trial.
pub fn trial_stream(master_seed: u64, trial_index: u64) -> TrialRng {
    TrialStreams::new(master_seed).stream(trial_index)
}

/// Keyed stream factory; cloning the keyed generator is cheaper than
/// re-deriving the key for every trial.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    keyed: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(master_seed: u64) -> Self {
        TrialStreams {
            keyed: ChaCha8Rng::seed_from_u64(master_seed),
        }
    }

    pub fn stream(&self, index: u64) -> TrialRng {
        let mut rng = self.keyed.clone();
        rng.set_stream(index);
        rng
    }

    pub fn trial(&self, block: u64, trial: u64) -> TrialRng {
        self.stream(trial_index(block, trial))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomnessMode {
    #[default]
    Bounded,
    Gaussian,
}

/// What "variance" means for a complex Gaussian amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussianConvention {
    /// Real and imaginary parts each have the configured variance.
    #[default]
    PerComponent,
    /// `E|v|²` equals the configured variance.
    PerAmplitude,
}

/// Law used for the four bounded amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bounded4Law {
    /// The `r1..r4` angle recipe with independent uniform phases. Not the
    /// uniform measure on the sphere: `E r4² = s²/2`, `E r1² = s²/4`,
    /// `E r2² = E r3² = s²/8`.
    #[default]
    Recipe,
    /// Uniform on the sphere `Σ|v|² = s²` in C⁴.
    UniformSphere,
}

macro_rules! kebab_enum {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    _ => Err(format!(
                        "expected one of: {}",
                        [$($name),+].join(", ")
                    )),
                }
            }
        }
    };
}
pub(crate) use kebab_enum;

kebab_enum!(RandomnessMode { Bounded => "bounded", Gaussian => "gaussian" });
kebab_enum!(GaussianConvention { PerComponent => "per-component", PerAmplitude => "per-amplitude" });
kebab_enum!(Bounded4Law { Recipe => "recipe", UniformSphere => "uniform-sphere" });

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomnessConfig {
    pub mode: RandomnessMode,
    /// Radius of the bounded sphere.
    pub s: f64,
    /// Gaussian variance, interpreted per `gaussian_convention`.
    pub variance: f64,
    pub gaussian_convention: GaussianConvention,
    pub bounded4: Bounded4Law,
    pub master_seed: u64,
}

impl Default for RandomnessConfig {
    fn default() -> Self {
        RandomnessConfig {
            mode: RandomnessMode::Bounded,
            s: 1.0,
            variance: 0.25,
            gaussian_convention: GaussianConvention::PerComponent,
            bounded4: Bounded4Law::Recipe,
            master_seed: 7,
        }
    }
}

impl RandomnessConfig {
    pub fn bounded(s: f64, master_seed: u64) -> Self {
        RandomnessConfig {
            s,
            master_seed,
            ..Default::default()
        }
    }

    pub fn gaussian(variance: f64, master_seed: u64) -> Self {
        RandomnessConfig {
            mode: RandomnessMode::Gaussian,
            variance,
            master_seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            RandomnessMode::Bounded if !(self.s > 0.0 && self.s.is_finite()) => {
                Err(invalid("s", format!("must be positive in bounded mode, got {}", self.s)))
            }
            RandomnessMode::Gaussian if !(self.variance > 0.0 && self.variance.is_finite()) => Err(
                invalid("variance", format!("must be positive in gaussian mode, got {}", self.variance)),
            ),
            _ => Ok(()),
        }
    }

    pub fn streams(&self) -> TrialStreams {
        TrialStreams::new(self.master_seed)
    }

    pub fn sample4<R: Rng + ?Sized>(&self, rng: &mut R) -> RandomAmplitudes4 {
        match self.mode {
            RandomnessMode::Bounded => match self.bounded4 {
                Bounded4Law::Recipe => sample_bounded4(self.s, rng),
                Bounded4Law::UniformSphere => sample_uniform_sphere4(self.s, rng),
            },
            RandomnessMode::Gaussian => {
                let [a, b, c, d] = sample_gaussian::<4, _>(self.variance, self.gaussian_convention, rng);
                RandomAmplitudes4::new(a, b, c, d)
            }
        }
    }

    pub fn sample2<R: Rng + ?Sized>(&self, rng: &mut R) -> RandomAmplitudes2 {
        match self.mode {
            RandomnessMode::Bounded => sample_bounded2(self.s, rng),
            RandomnessMode::Gaussian => {
                let [a, b] = sample_gaussian::<2, _>(self.variance, self.gaussian_convention, rng);
                RandomAmplitudes2 { v_p: a, v_m: b }
            }
        }
    }
}

/// Random amplitudes for the four two-lab branches `(++, +-, -+, --)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomAmplitudes4 {
    pub v_pp: ComplexAmplitude,
    pub v_pm: ComplexAmplitude,
    pub v_mp: ComplexAmplitude,
    pub v_mm: ComplexAmplitude,
}

impl RandomAmplitudes4 {
    pub const ZERO: RandomAmplitudes4 = RandomAmplitudes4 {
        v_pp: Complex64::new(0.0, 0.0),
        v_pm: Complex64::new(0.0, 0.0),
        v_mp: Complex64::new(0.0, 0.0),
        v_mm: Complex64::new(0.0, 0.0),
    };

    pub fn new(v_pp: ComplexAmplitude, v_pm: ComplexAmplitude, v_mp: ComplexAmplitude, v_mm: ComplexAmplitude) -> Self {
        RandomAmplitudes4 { v_pp, v_pm, v_mp, v_mm }
    }

    pub fn as_array(&self) -> [ComplexAmplitude; 4] {
        [self.v_pp, self.v_pm, self.v_mp, self.v_mm]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.as_array().iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        let [a, b, c, d] = self.as_array();
        RandomAmplitudes4::new(a * k, b * k, c * k, d * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomAmplitudes2 {
    pub v_p: ComplexAmplitude,
    pub v_m: ComplexAmplitude,
}

impl RandomAmplitudes2 {
    pub const ZERO: RandomAmplitudes2 = RandomAmplitudes2 {
        v_p: Complex64::new(0.0, 0.0),
        v_m: Complex64::new(0.0, 0.0),
    };

    pub fn new(v_p: ComplexAmplitude, v_m: ComplexAmplitude) -> Self {
        RandomAmplitudes2 { v_p, v_m }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.v_p.norm_sqr() + self.v_m.norm_sqr()
    }
}

/// The angles behind one recipe draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecipeAngles {
    pub zeta: f64,
    pub theta: f64,
    pub phi: f64,
    pub omega: [f64; 4],
}

impl RecipeAngles {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let zeta = PI * rng.random::<f64>();
        let theta = PI * rng.random::<f64>();
        let phi = TAU * rng.random::<f64>();
        let omega = [(); 4].map(|_| TAU * rng.random::<f64>());
        RecipeAngles { zeta, theta, phi, omega }
    }

    pub fn amplitudes(&self, s: f64) -> RandomAmplitudes4 {
        let (sz, cz) = self.zeta.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        let r = [s * ct * sz, s * st * cp * sz, s * st * sp * sz, s * cz];
        let v = |k: usize| Complex64::from_polar(r[k], self.omega[k]);
        RandomAmplitudes4::new(v(0), v(1), v(2), v(3))
    }
}

/// Four bounded amplitudes from the `r1..r4` angle recipe.
pub fn sample_bounded4<R: Rng + ?Sized>(s: f64, rng: &mut R) -> RandomAmplitudes4 {
    RecipeAngles::draw(rng).amplitudes(s)
}

pub fn sample_uniform_sphere4<R: Rng + ?Sized>(s: f64, rng: &mut R) -> RandomAmplitudes4 {
    loop {
        let g: [f64; 8] = [(); 8].map(|_| rng.sample(StandardNormal));
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            let k = s / norm;
            let v = |i: usize| Complex64::new(g[2 * i] * k, g[2 * i + 1] * k);
            return RandomAmplitudes4::new(v(0), v(1), v(2), v(3));
        }
    }
}

/// Two bounded amplitudes: magnitudes `(s cos ζ, s sin ζ)` with ζ uniform on
/// `[0, π/2]`, independent uniform phases.
pub fn sample_bounded2<R: Rng + ?Sized>(s: f64, rng: &mut R) -> RandomAmplitudes2 {
    let zeta = FRAC_PI_2 * rng.random::<f64>();
    let w_p = TAU * rng.random::<f64>();
    let w_m = TAU * rng.random::<f64>();
    bounded2_from_angles(s, zeta, w_p, w_m)
}

pub fn bounded2_from_angles(s: f64, zeta: f64, w_p: f64, w_m: f64) -> RandomAmplitudes2 {
    let (sz, cz) = zeta.sin_cos();
    RandomAmplitudes2::new(Complex64::from_polar(s * cz, w_p), Complex64::from_polar(s * sz, w_m))
}

/// `N` independent complex Gaussians with zero mean.
pub fn sample_gaussian<const N: usize, R: Rng + ?Sized>(
    variance: f64,
    convention: GaussianConvention,
    rng: &mut R,
) -> [ComplexAmplitude; N] {
    let component_sd = match convention {
        GaussianConvention::PerComponent => variance.sqrt(),
        GaussianConvention::PerAmplitude => (0.5 * variance).sqrt(),
    };
    [(); N].map(|_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(component_sd * re, component_sd * im)
    })
}
