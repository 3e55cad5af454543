//! Surprisal of the agreement-bearing region.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::LogProbSequence;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Bits,
    Nats,
}

impl Unit {
    pub const fn label(self) -> &'static str {
        match self {
            Unit::Bits => "bits",
            Unit::Nats => "nats",
        }
    }

    /// Converts a quantity measured in nats.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Unit::Bits => nats / std::f64::consts::LN_2,
            Unit::Nats => nats,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bits" => Ok(Unit::Bits),
            "nats" => Ok(Unit::Nats),
            other => Err(format!("unknown unit {other:?} (expected bits or nats)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurprisalValue {
    pub value: f64,
    pub unit: Unit,
}

#[derive(Debug, Error, PartialEq)]
pub enum SurprisalError {
    #[error("empty token range")]
    EmptyRange,
    #[error("token range {range:?} exceeds sequence of {len} tokens")]
    OutOfBounds { range: Range<usize>, len: usize },
    #[error("token {0} has no conditional log-probability (sequence-initial or special)")]
    UndefinedPosition(usize),
}

/// Summed negative log-probability over `tokens`, in `unit`.
///
/// Multi-token regions are summed, so a region's surprisal is exactly the
/// sum of its single-token parts.
pub fn region_surprisal(
    logprobs: &LogProbSequence,
    tokens: &Range<usize>,
    unit: Unit,
) -> Result<SurprisalValue, SurprisalError> {
    if tokens.is_empty() {
        return Err(SurprisalError::EmptyRange);
    }
    if tokens.end > logprobs.len() {
        return Err(SurprisalError::OutOfBounds { range: tokens.clone(), len: logprobs.len() });
    }
    let mut nats = 0.0;
    for i in tokens.clone() {
        nats -= logprobs.get(i).ok_or(SurprisalError::UndefinedPosition(i))?;
    }
    // -0.0 from a probability-one region
    let nats = nats.max(0.0);
    Ok(SurprisalValue { value: unit.from_nats(nats), unit })
}
