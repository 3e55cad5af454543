use std::path::PathBuf;

use attraction_core::analysis::AnalysisError;
use attraction_core::model::ModelError;
use attraction_core::probe::ProbeError;
use attraction_core::stimuli::StimuliError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stimuli(#[from] StimuliError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("cannot render {}: {message}", path.display())]
    Render { path: PathBuf, message: String },
    #[error("no item could be scored")]
    NothingScored,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 for usage and configuration problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Json { .. } | Self::Stimuli(_) => 2,
            Self::Model(ModelError::Config(_) | ModelError::UnknownModel(_) | ModelError::Unsupported { .. }) => 2,
            _ => 1,
        }
    }
}
