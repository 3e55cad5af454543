//! `probe`: rank-based layer selection on a dependency treebank, cached by
//! model, corpus contents and k.

use std::path::{Path, PathBuf};

use attraction_core::model::{AttentionLm, ModelCatalog};
use attraction_core::probe::{extract_pairs, layer_accuracy, ExtractLimits, ProbeResult};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{sha256_file, sha256_parts, slug, write_json};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    #[serde(flatten)]
    pub result: ProbeResult,
    pub corpus_sha256: String,
    pub limits: ExtractLimits,
}

pub fn load_catalog(config: &RunConfig) -> Result<ModelCatalog, CliError> {
    let path = config.require(&config.models, "--models")?;
    Ok(ModelCatalog::from_path(path)?)
}

pub fn bidirectional_id(config: &RunConfig) -> Result<&str, CliError> {
    config.bidirectional_model.as_deref().ok_or_else(|| CliError::Usage("--bi-model is required".into()))
}

fn cache_path(out: &Path, model_id: &str, corpus_sha: &str, k: usize, limits: &ExtractLimits) -> PathBuf {
    let limits = serde_json::to_string(limits).expect("limits serialize");
    let key = sha256_parts(&[model_id, corpus_sha, &k.to_string(), &limits]);
    out.join("cache").join(format!("probe-{}.json", &key[..16]))
}

/// Probes `model` on `conllu`. A cached report with the same key is reused
/// unless `refresh` is set; fresh results are written to the cache.
pub fn probe_model<M: AttentionLm + Sync + ?Sized>(
    model: &M,
    conllu: &Path,
    config: &RunConfig,
    refresh: bool,
) -> Result<ProbeReport, CliError> {
    let out = config.output_dir()?;
    let corpus_sha256 = sha256_file(conllu)?;
    let cache = cache_path(&out, model.model_id(), &corpus_sha256, config.k, &config.probe_limits);
    if !refresh {
        if let Some(report) = read_cache(&cache) {
            log::info!("using cached probe {}", cache.display());
            return Ok(report);
        }
    }
    let pairs = extract_pairs(conllu, config.probe_limits)?;
    log::info!("probing {} on {} subject-verb pairs", model.model_id(), pairs.len());
    let result = layer_accuracy(&pairs, model, config.k)?;
    if result.n_skipped > 0 {
        log::warn!("{} of {} pairs could not be aligned and were skipped", result.n_skipped, pairs.len());
    }
    let report = ProbeReport { result, corpus_sha256, limits: config.probe_limits };
    write_json(&cache, &report)?;
    Ok(report)
}

fn read_cache(path: &Path) -> Option<ProbeReport> {
    let text = std::fs::read_to_string(path).ok()?;
    match serde_json::from_str(&text) {
        Ok(r) => Some(r),
        Err(e) => {
            log::warn!("ignoring unreadable probe cache {}: {e}", path.display());
            None
        }
    }
}

/// The `probe` command. Writes `probe_<model>.json` into the output
/// directory and returns the report and its path.
pub fn cmd_probe(config: &RunConfig) -> Result<(ProbeReport, PathBuf), CliError> {
    let model_id = bidirectional_id(config)?;
    let conllu = config.require(&config.conllu, "--conllu")?;
    let catalog = load_catalog(config)?;
    let model = attraction_nn::load_attention(&catalog, model_id)?;
    let report = probe_model(model.as_ref(), &conllu, config, true)?;
    let path = config.output_dir()?.join(format!("probe_{}.json", slug(model_id)));
    write_json(&path, &report)?;
    Ok((report, path))
}
