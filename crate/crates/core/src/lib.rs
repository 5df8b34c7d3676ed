//! Monte Carlo simulator for measurement models with a stochastic random
//! part added to the wavefunction.
//!
//! Deterministic EPRB coefficients ([`geometry`]) plus random amplitudes
//! ([`sampling`]) give apparatus forces ([`forces`]), which thresholds turn
//! into outcomes ([`detection`]). [`experiments`] runs the Monte Carlo
//! drivers, [`dynamics`] integrates the pointer equations and [`locality`]
//! audits the results.

pub mod config;
pub mod detection;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod forces;
pub mod geometry;
pub mod locality;
pub mod sampling;
pub mod stats;

pub use detection::{EventClass, LabStatus};
pub use error::{Error, Result};
pub use experiments::{Apparatus, ChshAngles, ChshConvention, CorrelationStats, ExperimentConfig};
pub use geometry::{EprbCoefficients, JointProbabilities, MeasurementAngle};
pub use sampling::{RandomAmplitudes2, RandomAmplitudes4, RandomnessConfig, RandomnessMode};
