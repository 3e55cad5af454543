//! Uniform access to language models.
//!
//! Two capabilities are needed: per-token conditional log-probabilities from
//! autoregressive models, and full attention tensors from bidirectional
//! models. Both come with a tokenization whose tokens carry character
//! offsets into the input, so word-level regions can be mapped onto subword
//! token ranges.
//!
//! Adapters are addressed by opaque model ids resolved through a
//! [`ModelCatalog`]. The deterministic [`synthetic`] adapter lives here; the
//! transformer-backed adapters live in a separate crate.

mod catalog;
pub mod synthetic;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::{trim_span, CharIndex, CharSpan};

pub use catalog::{expand_env, ModelCatalog, ModelKind, ModelSpec};

/// Tolerance on the row sums of an attention tensor.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown model id {0:?}")]
    UnknownModel(String),
    #[error("model {model_id:?} cannot {capability}")]
    Unsupported { model_id: String, capability: &'static str },
    #[error("{tokens} tokens exceed the context length {max_tokens} of model {model_id:?}")]
    ContextOverflow { model_id: String, tokens: usize, max_tokens: usize },
    #[error("span {span} ({region:?}) maps to no tokens")]
    SpanUnaligned { span: CharSpan, region: String },
    #[error("span {span} is not fully covered by tokens {tokens:?}")]
    SpanNotCovered { span: CharSpan, tokens: Range<usize> },
    #[error("span {span} out of bounds for text of {len} chars")]
    SpanOutOfBounds { span: CharSpan, len: usize },
    #[error("token {position} has zero probability under the model")]
    ZeroProbability { position: usize },
    #[error("invalid attention tensor: {0}")]
    InvalidAttention(String),
    #[error("tokenizer failure: {0}")]
    Tokenizer(String),
    #[error("cannot load model {model_id:?}: {message}")]
    Load { model_id: String, message: String },
    #[error("invalid model configuration: {0}")]
    Config(String),
}

/// Tokens of one sentence with character offsets into the original text.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    /// Empty offsets mark special/marker tokens (and whitespace-only pieces).
    pub offsets: Vec<CharSpan>,
    pub special_mask: Vec<bool>,
}

impl TokenizedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn push(&mut self, token: impl Into<String>, offset: CharSpan, special: bool) {
        self.tokens.push(token.into());
        self.offsets.push(offset);
        self.special_mask.push(special);
    }

    pub fn is_special(&self, index: usize) -> bool {
        self.special_mask.get(index).copied().unwrap_or(true)
    }

    /// Indices of non-special tokens with a non-empty offset.
    pub fn content_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.special_mask[i] && !self.offsets[i].is_empty())
    }

    /// Checks the offset invariants against the text the sentence was built
    /// from: non-special offsets are in bounds and non-decreasing, and their
    /// substrings rebuild the text once whitespace is ignored.
    ///
    /// Byte-level tokenizers can split one multi-byte character across two
    /// tokens, which then both claim it; such overlaps are allowed as long as
    /// neither token starts before the previous one.
    pub fn validate(&self, text: &str) -> Result<(), String> {
        if self.offsets.len() != self.tokens.len() || self.special_mask.len() != self.tokens.len() {
            return Err("tokens, offsets and special_mask differ in length".into());
        }
        let index = CharIndex::new(text);
        let mut rebuilt = String::new();
        let mut last = CharSpan::new(0, 0);
        for i in 0..self.len() {
            let span = self.offsets[i];
            if self.special_mask[i] {
                if !span.is_empty() {
                    return Err(format!("special token {i} has non-empty offset {span}"));
                }
                continue;
            }
            if span.is_empty() {
                continue;
            }
            if index.slice(span).is_none() {
                return Err(format!("token {i} offset {span} out of bounds"));
            }
            if span.start < last.start || span.end < last.end {
                return Err(format!("token {i} offset {span} precedes the previous token {last}"));
            }
            let fresh = CharSpan::new(span.start.max(last.end), span.end);
            last = span;
            if let Some(piece) = index.slice(fresh) {
                rebuilt.extend(piece.chars().filter(|c| !c.is_whitespace()));
            }
        }
        let expected: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if rebuilt != expected {
            return Err(format!("offsets rebuild {rebuilt:?}, expected {expected:?}"));
        }
        Ok(())
    }
}

/// Mapping from a character span to the contiguous tokens covering it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordAlignment {
    pub word_span: CharSpan,
    pub token_range: Range<usize>,
}

/// Conditional natural-log probabilities, one per token. `None` marks
/// positions without a defined conditional (the first token of an
/// autoregressive sequence without a beginning-of-sequence marker, and
/// special tokens).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogProbSequence {
    pub values: Vec<Option<f64>>,
}

impl LogProbSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, position: usize) -> Option<f64> {
        self.values.get(position).copied().flatten()
    }
}

/// Row-stochastic attention weights, laid out `[layer][head][query][key]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionTensor {
    layers: usize,
    heads: usize,
    tokens: usize,
    data: Vec<f64>,
}

impl AttentionTensor {
    /// Validates shape, non-negativity and that every row sums to one within
    /// [`ROW_SUM_TOLERANCE`].
    pub fn new(layers: usize, heads: usize, tokens: usize, data: Vec<f64>) -> Result<Self, ModelError> {
        if data.len() != layers * heads * tokens * tokens {
            return Err(ModelError::InvalidAttention(format!(
                "expected {layers}×{heads}×{tokens}×{tokens} values, got {}",
                data.len()
            )));
        }
        let t = Self { layers, heads, tokens, data };
        for l in 0..layers {
            for h in 0..heads {
                for q in 0..tokens {
                    let row = t.row(l, h, q);
                    if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                        return Err(ModelError::InvalidAttention(format!(
                            "layer {l} head {h} row {q} has invalid weight {v}"
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                        return Err(ModelError::InvalidAttention(format!("layer {l} head {h} row {q} sums to {sum}")));
                    }
                }
            }
        }
        Ok(t)
    }

    /// Builds a tensor by evaluating `weight(layer, head, query, key)`.
    pub fn from_fn(
        layers: usize,
        heads: usize,
        tokens: usize,
        mut weight: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self, ModelError> {
        let mut data = Vec::with_capacity(layers * heads * tokens * tokens);
        for l in 0..layers {
            for h in 0..heads {
                for q in 0..tokens {
                    for k in 0..tokens {
                        data.push(weight(l, h, q, k));
                    }
                }
            }
        }
        Self::new(layers, heads, tokens, data)
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn row(&self, layer: usize, head: usize, query: usize) -> &[f64] {
        let start = ((layer * self.heads + head) * self.tokens + query) * self.tokens;
        &self.data[start..start + self.tokens]
    }

    /// Mean over heads and over the query tokens of the attention rows in
    /// one layer. The result is again a distribution over keys.
    pub fn mean_query_row(&self, layer: usize, query: &Range<usize>) -> Result<Vec<f64>, ModelError> {
        if layer >= self.layers {
            return Err(ModelError::InvalidAttention(format!("layer {layer} out of range for {} layers", self.layers)));
        }
        if query.is_empty() || query.end > self.tokens {
            return Err(ModelError::InvalidAttention(format!(
                "query range {query:?} invalid for {} tokens",
                self.tokens
            )));
        }
        let mut out = vec![0.0; self.tokens];
        let n = (self.heads * query.len()) as f64;
        for h in 0..self.heads {
            for q in query.clone() {
                for (o, w) in out.iter_mut().zip(self.row(layer, h, q)) {
                    *o += w;
                }
            }
        }
        out.iter_mut().for_each(|v| *v /= n);
        Ok(out)
    }
}

/// Base contract shared by all adapters.
pub trait Adapter {
    fn model_id(&self) -> &str;

    /// Maximum number of tokens (including special tokens) per input.
    fn max_tokens(&self) -> usize;

    fn tokenize(&self, text: &str) -> Result<TokenizedSentence, ModelError>;
}

/// Autoregressive scoring.
pub trait CausalLm: Adapter {
    /// Log-probabilities aligned index-for-index with the returned tokens.
    fn log_probs(&self, text: &str) -> Result<(TokenizedSentence, LogProbSequence), ModelError>;
}

/// Bidirectional attention extraction.
pub trait AttentionLm: Adapter {
    fn num_layers(&self) -> usize;

    fn attention(&self, text: &str) -> Result<(TokenizedSentence, AttentionTensor), ModelError>;
}

pub fn score_autoregressive(model: &dyn CausalLm, text: &str) -> Result<LogProbSequence, ModelError> {
    model.log_probs(text).map(|(_, lp)| lp)
}

pub fn attention_forward(model: &dyn AttentionLm, text: &str) -> Result<AttentionTensor, ModelError> {
    model.attention(text).map(|(_, a)| a)
}

/// Fails when `tokens` exceeds the adapter's context length.
pub fn check_context(model: &dyn Adapter, tokens: usize) -> Result<(), ModelError> {
    if tokens > model.max_tokens() {
        return Err(ModelError::ContextOverflow {
            model_id: model.model_id().to_string(),
            tokens,
            max_tokens: model.max_tokens(),
        });
    }
    Ok(())
}

/// Tokenizes `text` and aligns each span.
pub fn tokenize_with_alignment(
    model: &dyn Adapter,
    text: &str,
    spans: &[CharSpan],
) -> Result<(TokenizedSentence, Vec<WordAlignment>), ModelError> {
    let sentence = model.tokenize(text)?;
    let alignments = align_spans(&sentence, text, spans)?;
    Ok((sentence, alignments))
}

/// Aligns spans against an existing tokenization of `text`.
pub fn align_spans(
    sentence: &TokenizedSentence,
    text: &str,
    spans: &[CharSpan],
) -> Result<Vec<WordAlignment>, ModelError> {
    let index = CharIndex::new(text);
    spans.iter().map(|&span| align_span(sentence, &index, span)).collect()
}

fn align_span(sentence: &TokenizedSentence, text: &CharIndex<'_>, span: CharSpan) -> Result<WordAlignment, ModelError> {
    if span.start > span.end || span.end > text.char_len() {
        return Err(ModelError::SpanOutOfBounds { span, len: text.char_len() });
    }
    let region = trim_span(text, span);
    let mut hits = sentence.content_indices().filter(|&i| sentence.offsets[i].overlaps(&region));
    let Some(first) = hits.next() else {
        return Err(ModelError::SpanUnaligned { span, region: text.slice(span).unwrap_or_default().to_string() });
    };
    let last = hits.last().unwrap_or(first);
    let token_range = first..last + 1;

    // Every non-whitespace character of the region must sit inside one of
    // the range's token offsets.
    let covered = |pos: usize| token_range.clone().any(|i| sentence.offsets[i].contains(pos));
    let chars: Vec<char> = text.slice(region).unwrap_or_default().chars().collect();
    let uncovered = chars.iter().enumerate().any(|(k, c)| !c.is_whitespace() && !covered(region.start + k));
    if uncovered {
        return Err(ModelError::SpanNotCovered { span, tokens: token_range });
    }
    Ok(WordAlignment { word_span: span, token_range })
}
