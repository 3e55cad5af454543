//! Deterministic stand-in models for tests and dry runs.
//!
//! The tokenizer splits text into alphanumeric words and single punctuation
//! characters, optionally cutting long words into fixed-width subword
//! pieces. Scoring and attention follow closed-form patterns so every output
//! can be predicted by hand.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    check_context, Adapter, AttentionLm, AttentionTensor, CausalLm, LogProbSequence, ModelError, TokenizedSentence,
};
use crate::span::CharSpan;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticTokenizer {
    /// Cut words into pieces of at most this many characters.
    pub max_piece_chars: Option<usize>,
    /// Marker token prepended to every input.
    pub bos: Option<String>,
    /// Marker token appended to every input.
    pub eos: Option<String>,
}

impl SyntheticTokenizer {
    pub fn tokenize(&self, text: &str) -> TokenizedSentence {
        let mut out = TokenizedSentence::default();
        if let Some(bos) = &self.bos {
            out.push(bos.clone(), CharSpan::empty_at(0), true);
        }
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_alphanumeric() {
                let start = i;
                while i < chars.len() && chars[i].is_alphanumeric() {
                    i += 1;
                }
                let width = self.max_piece_chars.unwrap_or(usize::MAX).max(1);
                let mut s = start;
                while s < i {
                    let e = s.saturating_add(width).min(i);
                    out.push(chars[s..e].iter().collect::<String>(), CharSpan::new(s, e), false);
                    s = e;
                }
            } else {
                out.push(c.to_string(), CharSpan::new(i, i + 1), false);
                i += 1;
            }
        }
        if let Some(eos) = &self.eos {
            out.push(eos.clone(), CharSpan::empty_at(chars.len()), true);
        }
        out
    }
}

/// Conditional probabilities `P(next | previous)` keyed by token strings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BigramTable {
    probs: BTreeMap<String, BTreeMap<String, f64>>,
}

impl BigramTable {
    /// Maximum-likelihood estimate over the tokenization of `sentences`.
    /// Special tokens take part as context (a leading marker conditions the
    /// first word) but are never predicted.
    pub fn from_corpus<S: AsRef<str>>(tokenizer: &SyntheticTokenizer, sentences: &[S]) -> Self {
        let mut counts: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for s in sentences {
            let t = tokenizer.tokenize(s.as_ref());
            for i in 1..t.len() {
                if t.special_mask[i] {
                    continue;
                }
                *counts.entry(t.tokens[i - 1].clone()).or_default().entry(t.tokens[i].clone()).or_default() += 1.0;
            }
        }
        for row in counts.values_mut() {
            let total: f64 = row.values().sum();
            row.values_mut().for_each(|v| *v /= total);
        }
        Self { probs: counts }
    }

    pub fn set(&mut self, previous: &str, next: &str, probability: f64) {
        self.probs.entry(previous.to_string()).or_default().insert(next.to_string(), probability);
    }

    pub fn prob(&self, previous: &str, next: &str) -> f64 {
        self.probs.get(previous).and_then(|r| r.get(next)).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticScorer {
    /// Uniform next-token distribution over a vocabulary of this size.
    Uniform { vocab_size: usize },
    /// Probability one on whatever token is observed.
    Certain,
    /// Bigram table, either given directly or estimated from a corpus.
    Bigram {
        #[serde(default)]
        corpus: Vec<String>,
        #[serde(default)]
        table: Option<BigramTable>,
    },
}

/// Attention pattern applied identically to every head of a layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionPattern {
    Uniform,
    /// Each query attends to the token before it (token 0 to itself).
    PreviousToken,
    SelfToken,
    FirstToken,
    /// Every query attends to one key position (clamped to the last token).
    OneHot(usize),
}

impl AttentionPattern {
    fn weight(&self, tokens: usize, query: usize, key: usize) -> f64 {
        let target = match self {
            Self::Uniform => return 1.0 / tokens as f64,
            Self::PreviousToken => query.saturating_sub(1),
            Self::SelfToken => query,
            Self::FirstToken => 0,
            Self::OneHot(k) => (*k).min(tokens - 1),
        };
        if key == target {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticAttention {
    pub heads: usize,
    pub layers: Vec<AttentionPattern>,
}

/// Configuration of a synthetic adapter, as found in a model catalog.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub tokenizer: SyntheticTokenizer,
    pub scorer: Option<SyntheticScorer>,
    pub attention: Option<SyntheticAttention>,
}

#[derive(Clone, Debug)]
enum Scorer {
    Uniform(f64),
    Certain,
    Bigram(BigramTable),
}

#[derive(Clone, Debug)]
pub struct SyntheticModel {
    id: String,
    max_tokens: usize,
    tokenizer: SyntheticTokenizer,
    scorer: Option<Scorer>,
    attention: Option<SyntheticAttention>,
}

impl SyntheticModel {
    pub fn new(id: impl Into<String>, spec: &SyntheticSpec, max_tokens: usize) -> Result<Self, ModelError> {
        let id = id.into();
        let scorer = match &spec.scorer {
            None => None,
            Some(SyntheticScorer::Uniform { vocab_size: 0 }) => {
                return Err(ModelError::Config(format!("{id}: vocab_size must be positive")))
            }
            Some(SyntheticScorer::Uniform { vocab_size }) => Some(Scorer::Uniform(-(*vocab_size as f64).ln())),
            Some(SyntheticScorer::Certain) => Some(Scorer::Certain),
            Some(SyntheticScorer::Bigram { corpus, table }) => {
                let mut t = BigramTable::from_corpus(&spec.tokenizer, corpus);
                if let Some(extra) = table {
                    for (prev, row) in &extra.probs {
                        for (next, p) in row {
                            t.set(prev, next, *p);
                        }
                    }
                }
                Some(Scorer::Bigram(t))
            }
        };
        if let Some(a) = &spec.attention {
            if a.heads == 0 || a.layers.is_empty() {
                return Err(ModelError::Config(format!("{id}: attention needs at least one head and layer")));
            }
        }
        Ok(Self { id, max_tokens, tokenizer: spec.tokenizer.clone(), scorer, attention: spec.attention.clone() })
    }

    pub fn uniform(vocab_size: usize, tokenizer: SyntheticTokenizer) -> Self {
        let spec = SyntheticSpec { tokenizer, scorer: Some(SyntheticScorer::Uniform { vocab_size }), attention: None };
        Self::new(format!("synthetic-uniform-{vocab_size}"), &spec, 512).expect("valid spec")
    }

    pub fn bigram(table: BigramTable, tokenizer: SyntheticTokenizer) -> Self {
        let spec = SyntheticSpec {
            tokenizer,
            scorer: Some(SyntheticScorer::Bigram { corpus: Vec::new(), table: Some(table) }),
            attention: None,
        };
        Self::new("synthetic-bigram", &spec, 512).expect("valid spec")
    }

    pub fn with_attention(mut self, attention: SyntheticAttention) -> Self {
        self.attention = Some(attention);
        self
    }
}

impl Adapter for SyntheticModel {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn tokenize(&self, text: &str) -> Result<TokenizedSentence, ModelError> {
        let sentence = self.tokenizer.tokenize(text);
        check_context(self, sentence.len())?;
        Ok(sentence)
    }
}

impl CausalLm for SyntheticModel {
    fn log_probs(&self, text: &str) -> Result<(TokenizedSentence, LogProbSequence), ModelError> {
        let scorer = self
            .scorer
            .as_ref()
            .ok_or_else(|| ModelError::Unsupported { model_id: self.id.clone(), capability: "score text" })?;
        let sentence = self.tokenize(text)?;
        let mut values = Vec::with_capacity(sentence.len());
        for i in 0..sentence.len() {
            if i == 0 || sentence.special_mask[i] {
                values.push(None);
                continue;
            }
            let lp = match scorer {
                Scorer::Uniform(lp) => *lp,
                Scorer::Certain => 0.0,
                Scorer::Bigram(table) => {
                    let p = table.prob(&sentence.tokens[i - 1], &sentence.tokens[i]);
                    if p <= 0.0 {
                        return Err(ModelError::ZeroProbability { position: i });
                    }
                    p.ln()
                }
            };
            values.push(Some(lp));
        }
        Ok((sentence, LogProbSequence { values }))
    }
}

impl AttentionLm for SyntheticModel {
    fn num_layers(&self) -> usize {
        self.attention.as_ref().map_or(0, |a| a.layers.len())
    }

    fn attention(&self, text: &str) -> Result<(TokenizedSentence, AttentionTensor), ModelError> {
        let spec = self
            .attention
            .as_ref()
            .ok_or_else(|| ModelError::Unsupported { model_id: self.id.clone(), capability: "produce attention" })?;
        let sentence = self.tokenize(text)?;
        let t = sentence.len();
        if t == 0 {
            return Err(ModelError::Tokenizer("empty input".into()));
        }
        let tensor =
            AttentionTensor::from_fn(spec.layers.len(), spec.heads, t, |l, _, q, k| spec.layers[l].weight(t, q, k))?;
        Ok((sentence, tensor))
    }
}
