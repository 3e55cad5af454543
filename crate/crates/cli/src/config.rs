//! Run configuration: a JSON file overlaid with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use attraction_core::analysis::BootstrapConfig;
use attraction_core::entropy::EntropyMode;
use attraction_core::model::expand_env;
use attraction_core::probe::{ExtractLimits, DEFAULT_TOP_K};
use attraction_core::stimuli::ItemFilter;
use attraction_core::surprisal::Unit;
use clap::Args;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// Attention layer used for entropy: probed or fixed (0-based).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LayerChoice {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for LayerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse().map(Self::Fixed).map_err(|_| format!("layer must be \"auto\" or a non-negative integer, got {s:?}"))
    }
}

impl fmt::Display for LayerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for LayerChoice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Auto => s.serialize_str("auto"),
            Self::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for LayerChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(n) => Ok(Self::Fixed(n)),
            Raw::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `--entropy-mode` values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum EntropyModes {
    Full,
    Candidate,
    Both,
}

impl EntropyModes {
    pub fn modes(self) -> Vec<EntropyMode> {
        match self {
            Self::Full => vec![EntropyMode::FullContext],
            Self::Candidate => vec![EntropyMode::CandidateOnly],
            Self::Both => vec![EntropyMode::FullContext, EntropyMode::CandidateOnly],
        }
    }
}

fn default_k() -> usize {
    DEFAULT_TOP_K
}

fn default_modes() -> Vec<EntropyMode> {
    EntropyModes::Both.modes()
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Expected language code of every stimulus item.
    #[serde(default)]
    pub language: Option<String>,
    /// Model catalog (JSON).
    #[serde(default)]
    pub models: Option<PathBuf>,
    #[serde(default)]
    pub autoregressive_model: Option<String>,
    #[serde(default)]
    pub bidirectional_model: Option<String>,
    #[serde(default)]
    pub stimuli: Option<PathBuf>,
    #[serde(default)]
    pub conllu: Option<PathBuf>,
    #[serde(default)]
    pub item_filter: ItemFilter,
    #[serde(default)]
    pub layer: LayerChoice,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub unit: Unit,
    #[serde(default = "default_modes")]
    pub entropy_modes: Vec<EntropyMode>,
    #[serde(default)]
    pub probe_limits: ExtractLimits,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    /// Overrides `bootstrap.seed` when set.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Flags shared by every command. Each one overrides the matching config
/// field.
#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model catalog (JSON object of model id to checkpoint).
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Language code every stimulus item must carry.
    #[arg(long)]
    pub language: Option<String>,
    /// Stimulus JSONL file.
    #[arg(long)]
    pub stimuli: Option<PathBuf>,
    /// CoNLL-U treebank used for layer probing.
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    /// Autoregressive model id (surprisal).
    #[arg(long = "ar-model")]
    pub autoregressive_model: Option<String>,
    /// Bidirectional model id (attention entropy, probing).
    #[arg(long = "bi-model")]
    pub bidirectional_model: Option<String>,
    /// `auto` to probe, or a 0-based layer index.
    #[arg(long)]
    pub layer: Option<LayerChoice>,
    /// Rank cutoff for layer probing [default: 5].
    #[arg(long)]
    pub topk: Option<usize>,
    /// Surprisal unit [default: bits].
    #[arg(long)]
    pub unit: Option<Unit>,
    /// Entropy variant(s) to compute [default: both].
    #[arg(long, value_enum)]
    pub entropy_mode: Option<EntropyModes>,
    /// Bootstrap seed [default: 1234].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bootstrap resamples [default: 2000].
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Maximum treebank sentences read for probing.
    #[arg(long)]
    pub max_sentences: Option<usize>,
    /// Output directory [default: results].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
    }

    /// Config file (if any) with flags applied on top.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let mut c = match &args.config {
            Some(path) => Self::from_path(path)?,
            None => Self::default(),
        };
        fn set<T: Clone>(field: &mut Option<T>, flag: &Option<T>) {
            if flag.is_some() {
                field.clone_from(flag);
            }
        }
        set(&mut c.models, &args.models);
        set(&mut c.language, &args.language);
        set(&mut c.stimuli, &args.stimuli);
        set(&mut c.conllu, &args.conllu);
        set(&mut c.autoregressive_model, &args.autoregressive_model);
        set(&mut c.bidirectional_model, &args.bidirectional_model);
        set(&mut c.seed, &args.seed);
        c.layer = args.layer.unwrap_or(c.layer);
        c.k = args.topk.unwrap_or(c.k);
        c.unit = args.unit.unwrap_or(c.unit);
        if let Some(out) = &args.out {
            c.output_dir.clone_from(out);
        }
        if let Some(modes) = args.entropy_mode {
            c.entropy_modes = modes.modes();
        }
        if let Some(n) = args.resamples {
            c.bootstrap.n_resamples = n;
        }
        if let Some(n) = args.max_sentences {
            c.probe_limits.max_sentences = Some(n);
        }
        if let Some(seed) = c.seed {
            c.bootstrap.seed = seed;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == 0 {
            return Err(CliError::Usage("--topk must be at least 1".into()));
        }
        if self.bootstrap.n_resamples == 0 {
            return Err(CliError::Usage("--resamples must be at least 1".into()));
        }
        if self.entropy_modes.is_empty() {
            return Err(CliError::Usage("at least one entropy mode is required".into()));
        }
        Ok(())
    }

    pub fn output_dir(&self) -> Result<PathBuf, CliError> {
        expand_path(&self.output_dir)
    }

    pub fn require(&self, value: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
        let path = value.as_ref().ok_or_else(|| CliError::Usage(format!("{flag} is required")))?;
        expand_path(path)
    }
}

/// Expands `${VAR}` references in a path.
pub fn expand_path(path: &Path) -> Result<PathBuf, CliError> {
    let raw = path.to_str().ok_or_else(|| CliError::Usage(format!("path {} is not UTF-8", path.display())))?;
    Ok(PathBuf::from(expand_env(raw)?))
}
