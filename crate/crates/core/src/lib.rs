//! Measurement pipeline for agreement-attraction effects in language models.
//!
//! Two processing proxies are computed on factorial minimal-pair stimuli:
//! surprisal at the agreement-bearing verb (autoregressive models) and the
//! entropy of the verb's attention distribution in a probed layer
//! (bidirectional models). Per-item observations are then reduced to cell
//! means, plural-minus-singular contrasts and item-bootstrap sign
//! probabilities for the interaction terms of a treatment-coded 2×2×2 design.

pub mod analysis;
pub mod conllu;
pub mod entropy;
pub mod model;
pub mod probe;
pub mod span;
pub mod stimuli;
pub mod surprisal;

pub use span::CharSpan;
pub use stimuli::{AttractorNumber, Condition, Grammaticality, StimulusItem, StimulusSet, Syncretism};
