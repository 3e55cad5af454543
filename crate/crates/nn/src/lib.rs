//! CPU forward passes for GPT-2 and BERT checkpoints stored as
//! `config.json` + `model.safetensors` + `tokenizer.json`, plus a loader
//! that resolves catalog entries to adapters.

use std::path::Path;

use attraction_core::model::{AttentionLm, CausalLm, ModelCatalog, ModelError, ModelKind};
use serde::de::DeserializeOwned;

pub mod bert;
pub mod gpt2;
pub mod ops;
pub mod tokenizer;
pub mod weights;

pub use bert::{Bert, BertConfig};
pub use gpt2::{Gpt2, Gpt2Config};

pub type BoxedCausalLm = Box<dyn CausalLm + Send + Sync>;
pub type BoxedAttentionLm = Box<dyn AttentionLm + Send + Sync>;

pub(crate) fn read_config<T: DeserializeOwned>(id: &str, path: &Path) -> Result<T, ModelError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| weights::load_error(id, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ModelError::Config(format!("{}: {e}", path.display())))
}

/// Builds the autoregressive adapter for `model_id`.
pub fn load_causal(catalog: &ModelCatalog, model_id: &str) -> Result<BoxedCausalLm, ModelError> {
    let spec = catalog.get(model_id)?;
    match spec.kind {
        ModelKind::Synthetic => Ok(Box::new(catalog.synthetic(model_id)?)),
        ModelKind::Autoregressive => {
            let dir = spec.locator_path(model_id)?;
            log::info!("loading {model_id} from {}", dir.display());
            Ok(Box::new(Gpt2::load(model_id, &dir, spec.max_tokens)?))
        }
        ModelKind::Bidirectional => {
            Err(ModelError::Unsupported { model_id: model_id.to_string(), capability: "autoregressive scoring" })
        }
    }
}

/// Builds the attention-extracting adapter for `model_id`.
pub fn load_attention(catalog: &ModelCatalog, model_id: &str) -> Result<BoxedAttentionLm, ModelError> {
    let spec = catalog.get(model_id)?;
    match spec.kind {
        ModelKind::Synthetic => Ok(Box::new(catalog.synthetic(model_id)?)),
        ModelKind::Bidirectional => {
            let dir = spec.locator_path(model_id)?;
            log::info!("loading {model_id} from {}", dir.display());
            Ok(Box::new(Bert::load(model_id, &dir, spec.max_tokens)?))
        }
        ModelKind::Autoregressive => {
            Err(ModelError::Unsupported { model_id: model_id.to_string(), capability: "attention extraction" })
        }
    }
}
