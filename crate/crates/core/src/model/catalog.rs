use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::{SyntheticModel, SyntheticSpec};
use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Autoregressive,
    Bidirectional,
    Synthetic,
}

fn default_max_tokens() -> usize {
    512
}

/// One catalog entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Where the artifact lives: a local checkpoint directory for transformer
    /// models. `${VAR}` references are expanded from the environment.
    #[serde(default)]
    pub locator: Option<String>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
}

/// Model id → artifact mapping, read from a JSON object.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelCatalog {
    pub models: BTreeMap<String, ModelSpec>,
}

impl ModelCatalog {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ModelError::Config(format!("{}: {e}", path.display())))
    }

    pub fn get(&self, model_id: &str) -> Result<&ModelSpec, ModelError> {
        self.models.get(model_id).ok_or_else(|| ModelError::UnknownModel(model_id.to_string()))
    }

    /// Builds the synthetic adapter for `model_id`.
    pub fn synthetic(&self, model_id: &str) -> Result<SyntheticModel, ModelError> {
        let spec = self.get(model_id)?;
        if spec.kind != ModelKind::Synthetic {
            return Err(ModelError::Config(format!("{model_id:?} is not a synthetic model")));
        }
        SyntheticModel::new(model_id, &spec.synthetic.clone().unwrap_or_default(), spec.max_tokens)
    }
}

impl ModelSpec {
    /// The locator with `${VAR}` references expanded.
    pub fn locator_path(&self, model_id: &str) -> Result<PathBuf, ModelError> {
        let raw = self.locator.as_deref().ok_or_else(|| ModelError::Config(format!("{model_id:?} has no locator")))?;
        expand_env(raw).map(PathBuf::from)
    }
}

/// Expands `${VAR}` references from the environment.
pub fn expand_env(raw: &str) -> Result<String, ModelError> {
    let mut out = String::new();
    let mut rest = raw;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}').ok_or_else(|| ModelError::Config(format!("unterminated variable in {raw:?}")))?;
        let name = &after[..end];
        let value = std::env::var(name)
            .map_err(|_| ModelError::Config(format!("environment variable {name} is not set (needed by {raw:?})")))?;
        out.push_str(&value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}
