//! Reduction of per-item measures to contrasts and interaction estimates.
//!
//! Everything downstream of scoring consumes [`MeasureRecord`]s: one value
//! per (language, item, condition, measure, model). Records are grouped per
//! language, model and measure before any statistic is computed.

mod bootstrap;
mod cells;
mod design;
mod records;
mod simulate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimuli::Condition;
use crate::surprisal::Unit;

pub use bootstrap::{
    bootstrap_interactions, fit_nonsyncretic_only, ols, BootstrapConfig, BootstrapSummary, FixedEffects, Term,
    TermSummary,
};
pub use cells::{cell_stats, delta_contrasts, CellStat, ContrastSummary};
pub use design::{design_matrix, write_coded_csv, write_export_csv, DesignMatrix, DesignRow};
pub use records::{group_records, read_records, write_records, GroupKey};
pub use simulate::Simulation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Surprisal,
    EntropyFull,
    EntropyCandidate,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 3] = [Self::Surprisal, Self::EntropyFull, Self::EntropyCandidate];

    pub const fn label(self) -> &'static str {
        match self {
            Self::Surprisal => "surprisal",
            Self::EntropyFull => "entropy_full",
            Self::EntropyCandidate => "entropy_candidate",
        }
    }
}

/// One observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub language: String,
    pub item_id: u64,
    pub condition: Condition,
    pub measure: MeasureKind,
    pub value: f64,
    pub model_id: String,
    /// Attention layer; absent for surprisal.
    pub layer: Option<usize>,
    pub unit: Unit,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no {0} records")]
    Empty(&'static str),
    #[error("duplicate record for item {item_id} in cell {condition} ({measure})")]
    Duplicate { item_id: u64, condition: Condition, measure: &'static str },
    #[error("records mix {what}: {first:?} and {second:?}; group them first")]
    Mixed { what: &'static str, first: String, second: String },
    #[error("{measure}: only {complete} complete item(s) for {what}, need at least {needed}")]
    TooFewItems { measure: &'static str, what: String, complete: usize, needed: usize },
    #[error("design matrix singular in every redraw of resample {resample}")]
    Singular { resample: usize },
    #[error("cannot read records: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read records: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid record on line {line}: {message}")]
    InvalidRecord { line: u64, message: String },
}

/// Values of one measure arranged by item and cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct MeasureTable {
    pub items: BTreeMap<u64, [Option<f64>; 8]>,
}

impl MeasureTable {
    pub fn build(records: &[MeasureRecord], measure: MeasureKind) -> Result<Self, AnalysisError> {
        let mut items: BTreeMap<u64, [Option<f64>; 8]> = BTreeMap::new();
        let mut first: Option<&MeasureRecord> = None;
        for r in records.iter().filter(|r| r.measure == measure) {
            if let Some(f) = first {
                if f.language != r.language {
                    return Err(AnalysisError::Mixed {
                        what: "languages",
                        first: f.language.clone(),
                        second: r.language.clone(),
                    });
                }
                if f.model_id != r.model_id {
                    return Err(AnalysisError::Mixed {
                        what: "models",
                        first: f.model_id.clone(),
                        second: r.model_id.clone(),
                    });
                }
            } else {
                first = Some(r);
            }
            let slot = &mut items.entry(r.item_id).or_default()[r.condition.index()];
            if slot.is_some() {
                return Err(AnalysisError::Duplicate {
                    item_id: r.item_id,
                    condition: r.condition,
                    measure: measure.label(),
                });
            }
            *slot = Some(r.value);
        }
        if items.is_empty() {
            return Err(AnalysisError::Empty(measure.label()));
        }
        Ok(Self { items })
    }

    /// Items that have a value in every listed cell.
    pub fn complete_items(&self, cells: &[Condition]) -> Vec<u64> {
        self.items.iter().filter(|(_, v)| cells.iter().all(|c| v[c.index()].is_some())).map(|(id, _)| *id).collect()
    }
}
