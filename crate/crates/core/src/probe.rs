//! Layer selection by subject–verb probing.
//!
//! Subject–verb pairs are read from a dependency treebank. For every layer
//! of a bidirectional model, a pair counts as a hit when the subject is among
//! the `k` words receiving the most head-averaged attention from the verb.
//! The layer with the highest hit rate is selected for entropy measurement.

use std::fs::File;
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{read_sentences, ConlluError, Sentence};
use crate::model::{align_spans, AttentionLm, AttentionTensor, ModelError};
use crate::span::CharSpan;

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error(transparent)]
    Conllu(#[from] ConlluError),
    #[error("no single-subject verb pairs found in {sentences} sentence(s)")]
    NoPairs { sentences: usize },
    #[error("all {0} pairs were skipped; no layer accuracy can be computed")]
    AllSkipped(usize),
    #[error("layer {layer} out of range for {layers} layers")]
    InvalidLayer { layer: usize, layers: usize },
    #[error("invalid token range {range:?} for {tokens} tokens")]
    InvalidRange { range: Range<usize>, tokens: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("subject and verb are the same word in sentence {0}")]
    SelfSubject(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A verb with exactly one nominal subject, located in its sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyPair {
    pub sentence_id: String,
    pub sentence: String,
    pub verb_span: CharSpan,
    pub subject_span: CharSpan,
    /// Every surface word of the sentence; the candidate set for ranking.
    pub word_spans: Vec<CharSpan>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractLimits {
    /// Stop after reading this many sentences.
    pub max_sentences: Option<usize>,
    /// Skip sentences with more syntactic words than this.
    pub max_tokens: Option<usize>,
}

impl Default for ExtractLimits {
    fn default() -> Self {
        Self { max_sentences: Some(10_000), max_tokens: Some(64) }
    }
}

pub fn extract_pairs(conllu: impl AsRef<Path>, limits: ExtractLimits) -> Result<Vec<DependencyPair>, ProbeError> {
    let file = File::open(conllu).map_err(ConlluError::from)?;
    extract_pairs_from(file, limits)
}

pub fn extract_pairs_from(reader: impl Read, limits: ExtractLimits) -> Result<Vec<DependencyPair>, ProbeError> {
    let mut pairs = Vec::new();
    let mut read = 0;
    read_sentences(reader, |s| {
        read += 1;
        if limits.max_tokens.is_none_or(|m| s.words.len() <= m) {
            pairs.extend(sentence_pairs(&s));
        }
        limits.max_sentences.is_none_or(|m| read < m)
    })?;
    if pairs.is_empty() {
        return Err(ProbeError::NoPairs { sentences: read });
    }
    Ok(pairs)
}

fn is_subject(deprel: &str) -> bool {
    deprel.split(':').next() == Some("nsubj")
}

/// One pair per head that has exactly one `nsubj` (or `nsubj:*`) dependent.
pub fn sentence_pairs(s: &Sentence) -> Vec<DependencyPair> {
    let mut subjects: Vec<Vec<usize>> = vec![Vec::new(); s.words.len() + 1];
    for w in &s.words {
        if w.head > 0 && is_subject(&w.deprel) {
            subjects[w.head].push(w.id);
        }
    }
    let mut out = Vec::new();
    for (head, deps) in subjects.iter().enumerate() {
        let [dep] = deps.as_slice() else { continue };
        let (Some(verb), Some(subj)) = (s.word(head), s.word(*dep)) else { continue };
        // Both inside one multiword token: no separate surface word to rank.
        if verb.surface_index == subj.surface_index {
            continue;
        }
        out.push(DependencyPair {
            sentence_id: s.id.clone(),
            sentence: s.text.clone(),
            verb_span: verb.span,
            subject_span: subj.span,
            word_spans: s.surface.clone(),
        });
    }
    out
}

/// Head-averaged attention from the query tokens (rows averaged) to the key
/// tokens (columns summed) in one layer.
pub fn word_attention(
    attn: &AttentionTensor,
    layer: usize,
    query: &Range<usize>,
    key: &Range<usize>,
) -> Result<f64, ProbeError> {
    check_ranges(attn, layer, &[query, key])?;
    let dist = attn.mean_query_row(layer, query)?;
    Ok(dist[key.clone()].iter().sum())
}

fn check_ranges(attn: &AttentionTensor, layer: usize, ranges: &[&Range<usize>]) -> Result<(), ProbeError> {
    if layer >= attn.layers() {
        return Err(ProbeError::InvalidLayer { layer, layers: attn.layers() });
    }
    for r in ranges {
        if r.is_empty() || r.end > attn.tokens() {
            return Err(ProbeError::InvalidRange { range: (*r).clone(), tokens: attn.tokens() });
        }
    }
    Ok(())
}

/// Per-layer hit rates of one model over a pair list. Serialized as the
/// probe report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub model_id: String,
    pub k: usize,
    /// Indexed by 0-based layer.
    pub accuracies: Vec<f64>,
    pub selected_layer: usize,
    pub n_pairs: usize,
    pub n_skipped: usize,
}

/// Masses closer than this count as tied, so that summing a word's subword
/// pieces in a different order cannot reorder it.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Position (0-based) of `target` among `masses` sorted by descending mass,
/// ties broken by position.
pub fn rank_of(masses: &[f64], target: usize) -> usize {
    let m = masses[target];
    masses
        .iter()
        .enumerate()
        .filter(|&(i, &v)| i != target && (v > m + TIE_TOLERANCE || ((v - m).abs() <= TIE_TOLERANCE && i < target)))
        .count()
}

/// Lowest index of the maximum.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-layer hit flags for one pair. Fails when the pair's words cannot be
/// aligned with the model's tokenization.
pub fn score_pair<M: AttentionLm + ?Sized>(
    model: &M,
    pair: &DependencyPair,
    k: usize,
) -> Result<Vec<bool>, ProbeError> {
    let (sentence, attn) = model.attention(&pair.sentence)?;
    let alignments = align_spans(&sentence, &pair.sentence, &pair.word_spans)?;
    let position = |span: CharSpan| {
        pair.word_spans
            .iter()
            .position(|w| *w == span)
            .ok_or_else(|| ProbeError::Model(ModelError::SpanUnaligned { span, region: "not a surface word".into() }))
    };
    let verb = position(pair.verb_span)?;
    let subject = position(pair.subject_span)?;
    let verb_range = alignments[verb].token_range.clone();

    let candidates: Vec<usize> = (0..alignments.len()).filter(|&i| i != verb).collect();
    let target = candidates
        .iter()
        .position(|&i| i == subject)
        .ok_or_else(|| ProbeError::SelfSubject(pair.sentence_id.clone()))?;
    let mut hits = Vec::with_capacity(attn.layers());
    for layer in 0..attn.layers() {
        let dist = attn.mean_query_row(layer, &verb_range)?;
        let masses: Vec<f64> =
            candidates.iter().map(|&i| dist[alignments[i].token_range.clone()].iter().sum()).collect();
        hits.push(rank_of(&masses, target) < k);
    }
    Ok(hits)
}

/// Scores every pair and selects the best layer. Pairs that fail to align
/// are skipped and counted.
pub fn layer_accuracy<M: AttentionLm + Sync + ?Sized>(
    pairs: &[DependencyPair],
    model: &M,
    k: usize,
) -> Result<ProbeResult, ProbeError> {
    if k == 0 {
        return Err(ProbeError::ZeroK);
    }
    let layers = model.num_layers();
    let outcomes: Vec<Option<Vec<bool>>> = pairs
        .par_iter()
        .map(|pair| match score_pair(model, pair, k) {
            Ok(h) => Some(h),
            Err(e) => {
                log::debug!("skipping pair in sentence {}: {e}", pair.sentence_id);
                None
            }
        })
        .collect();
    let mut counts = vec![0usize; layers];
    let mut used = 0;
    for hits in outcomes.iter().flatten() {
        used += 1;
        for (c, h) in counts.iter_mut().zip(hits) {
            *c += usize::from(*h);
        }
    }
    if used == 0 {
        return Err(ProbeError::AllSkipped(pairs.len()));
    }
    let accuracies: Vec<f64> = counts.iter().map(|&c| c as f64 / used as f64).collect();
    Ok(ProbeResult {
        model_id: model.model_id().to_string(),
        k,
        selected_layer: argmax_lowest(&accuracies),
        accuracies,
        n_pairs: used,
        n_skipped: pairs.len() - used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::slice_chars;

    fn row(cols: &[(&str, usize, &str)]) -> String {
        let mut s = String::new();
        for (i, (form, head, rel)) in cols.iter().enumerate() {
            s += &format!("{}\t{form}\t_\t_\t_\t_\t{head}\t{rel}\t_\t_\n", i + 1);
        }
        s + "\n"
    }

    #[test]
    fn extracts_the_dog_barks() {
        let input = "# text = The dog barks.\n".to_string()
            + &row(&[("The", 2, "det"), ("dog", 3, "nsubj"), ("barks", 0, "root"), (".", 3, "punct")])
                .replace("barks\t_\t_\t_\t_\t0\troot\t_\t_", "barks\t_\t_\t_\t_\t0\troot\t_\tSpaceAfter=No");
        let pairs = extract_pairs_from(input.as_bytes(), ExtractLimits::default()).unwrap();
        assert_eq!(pairs.len(), 1);
        let p = &pairs[0];
        assert_eq!(slice_chars(&p.sentence, p.subject_span), Some("dog"));
        assert_eq!(slice_chars(&p.sentence, p.verb_span), Some("barks"));
        assert_eq!(p.word_spans.len(), 4);
    }

    #[test]
    fn two_subjects_on_one_head_are_excluded() {
        let input = row(&[("John", 3, "nsubj"), ("Mary", 3, "nsubj"), ("left", 0, "root")]);
        assert!(matches!(
            extract_pairs_from(input.as_bytes(), ExtractLimits::default()),
            Err(ProbeError::NoPairs { sentences: 1 })
        ));
    }

    #[test]
    fn passive_subjects_count_and_limits_apply() {
        let passive = row(&[("It", 3, "nsubj:pass"), ("was", 3, "aux:pass"), ("seen", 0, "root")]);
        let long = row(&[("A", 2, "nsubj"), ("b", 0, "root"), ("c", 2, "obj"), ("d", 2, "obj")]);
        let input = passive.clone() + &long;
        let all =
            extract_pairs_from(input.as_bytes(), ExtractLimits { max_sentences: None, max_tokens: None }).unwrap();
        assert_eq!(all.len(), 2);
        let short =
            extract_pairs_from(input.as_bytes(), ExtractLimits { max_sentences: None, max_tokens: Some(3) }).unwrap();
        assert_eq!(short.len(), 1);
        let first = extract_pairs_from(
            (long + &passive).as_bytes(),
            ExtractLimits { max_sentences: Some(1), max_tokens: None },
        )
        .unwrap();
        assert_eq!(first[0].sentence, "A b c d");
    }

    #[test]
    fn two_head_fixture_word_attention() {
        let rows = [[0.6, 0.4, 0.0, 0.0], [0.2, 0.8, 0.0, 0.0]];
        let attn = AttentionTensor::from_fn(1, 2, 4, |_, h, q, k| if q == 0 { rows[h][k] } else { 0.25 }).unwrap();
        let v = word_attention(&attn, 0, &(0..1), &(1..2)).unwrap();
        assert!((v - 0.6).abs() < 1e-15);
        assert!(matches!(word_attention(&attn, 1, &(0..1), &(1..2)), Err(ProbeError::InvalidLayer { .. })));
        assert!(matches!(word_attention(&attn, 0, &(0..1), &(3..5)), Err(ProbeError::InvalidRange { .. })));
    }

    #[test]
    fn uniform_single_token_word_attention() {
        let attn = AttentionTensor::from_fn(1, 1, 5, |_, _, _, _| 0.2).unwrap();
        assert!((word_attention(&attn, 0, &(2..3), &(0..1)).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn ranking_ties_follow_position() {
        assert_eq!(rank_of(&[0.2, 0.2, 0.2], 2), 2);
        assert_eq!(rank_of(&[0.1, 0.5, 0.2], 2), 1);
        assert_eq!(argmax_lowest(&[0.3, 0.7, 0.7]), 1);
        assert_eq!(argmax_lowest(&[0.0, 0.0]), 0);
    }
}
