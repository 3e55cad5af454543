//! `score`: per-item surprisal and attention entropy at the verb.

use std::path::PathBuf;

use attraction_core::analysis::{write_records, MeasureKind, MeasureRecord};
use attraction_core::entropy::{attention_entropy, EntropyMode};
use attraction_core::model::{align_spans, AttentionLm, CausalLm};
use attraction_core::stimuli::{check_factorial, load_stimuli, Condition, StimulusItem};
use attraction_core::surprisal::{region_surprisal, Unit};
use rayon::prelude::*;

use crate::config::{LayerChoice, RunConfig};
use crate::error::CliError;
use crate::output::write_file;
use crate::probe::{bidirectional_id, load_catalog, probe_model};

/// A measure that could not be computed for one stimulus.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemFailure {
    pub item_id: u64,
    pub condition: Condition,
    pub measure: MeasureKind,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ScoreOutcome {
    pub records: Vec<MeasureRecord>,
    pub failures: Vec<ItemFailure>,
    /// Attention layer used for entropy, if any.
    pub layer: Option<usize>,
    pub path: PathBuf,
}

pub const fn entropy_measure(mode: EntropyMode) -> MeasureKind {
    match mode {
        EntropyMode::FullContext => MeasureKind::EntropyFull,
        EntropyMode::CandidateOnly => MeasureKind::EntropyCandidate,
    }
}

fn failure(item: &StimulusItem, measure: MeasureKind, message: impl ToString) -> ItemFailure {
    ItemFailure { item_id: item.item_id, condition: item.condition, measure, message: message.to_string() }
}

fn record(
    item: &StimulusItem,
    measure: MeasureKind,
    value: f64,
    model_id: &str,
    layer: Option<usize>,
    unit: Unit,
) -> MeasureRecord {
    MeasureRecord {
        language: item.language.clone(),
        item_id: item.item_id,
        condition: item.condition,
        measure,
        value,
        model_id: model_id.to_string(),
        layer,
        unit,
    }
}

/// Surprisal of the verb region.
pub fn score_surprisal<M: CausalLm + ?Sized>(
    model: &M,
    item: &StimulusItem,
    unit: Unit,
) -> Result<MeasureRecord, ItemFailure> {
    let fail = |e: &dyn std::fmt::Display| failure(item, MeasureKind::Surprisal, e);
    let (sentence, logprobs) = model.log_probs(&item.text).map_err(|e| fail(&e))?;
    let aligned = align_spans(&sentence, &item.text, &[item.verb_span]).map_err(|e| fail(&e))?;
    let value = region_surprisal(&logprobs, &aligned[0].token_range, unit).map_err(|e| fail(&e))?;
    Ok(record(item, MeasureKind::Surprisal, value.value, model.model_id(), None, unit))
}

/// Verb attention entropy in `layer`, one result per mode. Candidates are
/// the head and attractor words.
pub fn score_entropy<M: AttentionLm + ?Sized>(
    model: &M,
    item: &StimulusItem,
    layer: usize,
    modes: &[EntropyMode],
) -> Vec<Result<MeasureRecord, ItemFailure>> {
    let all_fail =
        |e: &dyn std::fmt::Display| modes.iter().map(|&m| Err(failure(item, entropy_measure(m), e))).collect();
    let (sentence, attn) = match model.attention(&item.text) {
        Ok(v) => v,
        Err(e) => return all_fail(&e),
    };
    let aligned = match align_spans(&sentence, &item.text, &[item.head_span, item.attractor_span, item.verb_span]) {
        Ok(a) => a,
        Err(e) => return all_fail(&e),
    };
    let candidates = [aligned[0].token_range.clone(), aligned[1].token_range.clone()];
    modes
        .iter()
        .map(|&mode| {
            let measure = entropy_measure(mode);
            attention_entropy(&attn, layer, &aligned[2].token_range, mode, &candidates, &sentence.special_mask)
                .map(|h| record(item, measure, h.value, model.model_id(), Some(layer), Unit::Bits))
                .map_err(|e| failure(item, measure, e))
        })
        .collect()
}

/// Resolves the entropy layer, probing (or reading the probe cache) for
/// `auto`.
pub fn resolve_layer<M: AttentionLm + Sync + ?Sized>(model: &M, config: &RunConfig) -> Result<usize, CliError> {
    let layers = model.num_layers();
    match config.layer {
        LayerChoice::Fixed(n) if n < layers => Ok(n),
        LayerChoice::Fixed(n) => {
            Err(CliError::Usage(format!("layer {n} out of range: {} has {layers} layers (0-based)", model.model_id())))
        }
        LayerChoice::Auto => {
            let conllu = config.require(&config.conllu, "--conllu (needed by --layer auto)")?;
            let report = probe_model(model, &conllu, config, false)?;
            log::info!("{}: probed layer {}", model.model_id(), report.result.selected_layer);
            Ok(report.result.selected_layer)
        }
    }
}

/// The `score` command. Writes `records.csv` into the output directory.
pub fn cmd_score(config: &RunConfig) -> Result<ScoreOutcome, CliError> {
    let stimuli_path = config.require(&config.stimuli, "--stimuli")?;
    if config.autoregressive_model.is_none() && config.bidirectional_model.is_none() {
        return Err(CliError::Usage("at least one of --ar-model and --bi-model is required".into()));
    }
    if config.bidirectional_model.is_some() && config.layer == LayerChoice::Auto && config.conllu.is_none() {
        return Err(CliError::Usage("--layer auto requires --conllu".into()));
    }
    let set = config.item_filter.apply(&load_stimuli(&stimuli_path)?);
    if set.items.is_empty() {
        return Err(CliError::Usage(format!("no stimulus items left in {} after filtering", stimuli_path.display())));
    }
    if let Some(lang) = &config.language {
        if let Some(other) = set.items.iter().find(|i| &i.language != lang) {
            return Err(CliError::Usage(format!(
                "item {} has language {:?}, expected {lang:?}",
                other.item_id, other.language
            )));
        }
    }
    let report = check_factorial(&set);
    if !report.is_complete() {
        log::warn!("items missing conditions: {:?}", report.incomplete_items());
    }
    let catalog = load_catalog(config)?;

    let mut results: Vec<Result<MeasureRecord, ItemFailure>> = Vec::new();
    if let Some(id) = &config.autoregressive_model {
        let model = attraction_nn::load_causal(&catalog, id)?;
        results.par_extend(set.items.par_iter().map(|item| score_surprisal(model.as_ref(), item, config.unit)));
    }
    let mut layer = None;
    if config.bidirectional_model.is_some() {
        let model = attraction_nn::load_attention(&catalog, bidirectional_id(config)?)?;
        let l = resolve_layer(model.as_ref(), config)?;
        layer = Some(l);
        results.par_extend(
            set.items.par_iter().flat_map_iter(|item| score_entropy(model.as_ref(), item, l, &config.entropy_modes)),
        );
    }

    let (mut records, mut failures) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    records.sort_by_key(|r| (r.measure, r.item_id, r.condition.index()));
    failures.sort_by_key(|f| (f.measure, f.item_id, f.condition.index()));
    for f in &failures {
        log::warn!("item {} {} {}: {}", f.item_id, f.condition, f.measure.label(), f.message);
    }
    if records.is_empty() {
        return Err(CliError::NothingScored);
    }
    let path = config.output_dir()?.join("records.csv");
    let mut bytes = Vec::new();
    write_records(&records, &mut bytes)?;
    write_file(&path, &bytes)?;
    Ok(ScoreOutcome { records, failures, layer, path })
}
