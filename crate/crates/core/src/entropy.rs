//! Entropy of the verb's attention distribution.

use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AttentionTensor, ModelError};

/// Below this much retained attention mass a distribution is degenerate.
pub const MIN_MASS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntropyMode {
    /// All non-special tokens except the verb's own.
    #[serde(rename = "full")]
    FullContext,
    /// Mass summed per candidate controller word (head and attractor).
    #[serde(rename = "candidate")]
    CandidateOnly,
}

impl FromStr for EntropyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Self::FullContext),
            "candidate" => Ok(Self::CandidateOnly),
            other => Err(format!("unknown entropy mode {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    /// Bits.
    pub value: f64,
    pub mode: EntropyMode,
    pub layer: usize,
    /// Number of outcomes the distribution was renormalised over.
    pub support: usize,
}

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("attention mass {mass:e} left after masking is degenerate")]
    Degenerate { mass: f64 },
    #[error("candidate mode needs at least two candidate ranges, got {0}")]
    TooFewCandidates(usize),
    #[error("token range {range:?} invalid for {tokens} tokens")]
    InvalidRange { range: Range<usize>, tokens: usize },
    #[error("verb range {0:?} contains special tokens")]
    SpecialVerb(Range<usize>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Shannon entropy in bits of a probability vector, with 0·log 0 = 0.
pub fn shannon_entropy_bits(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    h.max(0.0)
}

/// Entropy of the head-averaged verb attention in `layer`.
///
/// The verb query distribution is the mean over heads and over the verb's
/// subword rows. In [`EntropyMode::FullContext`] special tokens and the
/// verb's own tokens are dropped before renormalising; in
/// [`EntropyMode::CandidateOnly`] mass is summed per candidate range and
/// renormalised over the candidates.
pub fn attention_entropy(
    attn: &AttentionTensor,
    layer: usize,
    verb: &Range<usize>,
    mode: EntropyMode,
    candidates: &[Range<usize>],
    special_mask: &[bool],
) -> Result<EntropyValue, EntropyError> {
    let tokens = attn.tokens();
    let valid = |r: &Range<usize>| !r.is_empty() && r.end <= tokens;
    if !valid(verb) {
        return Err(EntropyError::InvalidRange { range: verb.clone(), tokens });
    }
    if special_mask.len() != tokens {
        return Err(EntropyError::Model(ModelError::InvalidAttention(format!(
            "special mask of {} entries for {tokens} tokens",
            special_mask.len()
        ))));
    }
    if verb.clone().any(|i| special_mask[i]) {
        return Err(EntropyError::SpecialVerb(verb.clone()));
    }
    let dist = attn.mean_query_row(layer, verb)?;
    let masses: Vec<f64> = match mode {
        EntropyMode::FullContext => {
            (0..tokens).filter(|i| !special_mask[*i] && !verb.contains(i)).map(|i| dist[i]).collect()
        }
        EntropyMode::CandidateOnly => {
            if candidates.len() < 2 {
                return Err(EntropyError::TooFewCandidates(candidates.len()));
            }
            let mut out = Vec::with_capacity(candidates.len());
            for r in candidates {
                if !valid(r) {
                    return Err(EntropyError::InvalidRange { range: r.clone(), tokens });
                }
                out.push(r.clone().filter(|i| !special_mask[*i] && !verb.contains(i)).map(|i| dist[i]).sum());
            }
            out
        }
    };
    let total: f64 = masses.iter().sum();
    if total.is_nan() || total < MIN_MASS {
        return Err(EntropyError::Degenerate { mass: total });
    }
    let p: Vec<f64> = masses.iter().map(|m| m / total).collect();
    Ok(EntropyValue { value: shannon_entropy_bits(&p), mode, layer, support: p.len() })
}
