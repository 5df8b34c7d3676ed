//! Thresholding forces into lab outcomes and classifying whole events.
//!
//! A force exactly at the threshold never registers. Any lab reporting
//! [`LabStatus::Both`] makes the event a double detection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sampling::kebab_enum;

/// How a lab reporting both detectors is folded into the event class.
/// Only the lab-level rule is implemented; it is named so that manifests
/// record which reading produced a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DdPrecedence {
    /// Any lab with both detectors firing makes the event a double
    /// detection, whatever the other lab saw.
    #[default]
    LabLevel,
}

kebab_enum!(DdPrecedence { LabLevel => "lab-level" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabStatus {
    Up,
    Down,
    None,
    Both,
}

impl LabStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LabStatus::Up => "up",
            LabStatus::Down => "down",
            LabStatus::None => "none",
            LabStatus::Both => "both",
        }
    }

    /// `+1` for up, `-1` for down.
    pub fn sign(self) -> Option<i32> {
        match self {
            LabStatus::Up => Some(1),
            LabStatus::Down => Some(-1),
            _ => None,
        }
    }

    pub fn is_resolved(self) -> bool {
        matches!(self, LabStatus::Up | LabStatus::Down)
    }
}

impl fmt::Display for LabStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventClass {
    #[serde(rename = "coinc")]
    Coincidence,
    #[serde(rename = "sd")]
    SingleDetection,
    #[serde(rename = "dd")]
    DoubleDetection,
    #[serde(rename = "nd")]
    NoDetection,
}

impl EventClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EventClass::Coincidence => "coinc",
            EventClass::SingleDetection => "sd",
            EventClass::DoubleDetection => "dd",
            EventClass::NoDetection => "nd",
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Needle outcome: up above `β`, down below `-β`, otherwise nothing.
pub fn classify_single_needle(f: f64, beta: f64) -> LabStatus {
    debug_assert!(beta >= 0.0);
    if f > beta {
        LabStatus::Up
    } else if f < -beta {
        LabStatus::Down
    } else {
        LabStatus::None
    }
}

/// Outcome of a lab with an up detector (`f1`) and a down detector (`f2`).
pub fn classify_dual_lab(f1: f64, f2: f64, beta: f64) -> LabStatus {
    match (f1 > beta, f2 > beta) {
        (true, false) => LabStatus::Up,
        (false, true) => LabStatus::Down,
        (true, true) => LabStatus::Both,
        (false, false) => LabStatus::None,
    }
}

pub fn classify_eprb_event(alice: LabStatus, bob: LabStatus) -> EventClass {
    use LabStatus::*;
    match (alice, bob) {
        (Both, _) | (_, Both) => EventClass::DoubleDetection,
        (None, None) => EventClass::NoDetection,
        (a, b) if a.is_resolved() && b.is_resolved() => EventClass::Coincidence,
        _ => EventClass::SingleDetection,
    }
}
