use serde::{Deserialize, Serialize};

use super::{AnalysisError, MeasureKind, MeasureRecord, MeasureTable};
use crate::stimuli::{AttractorNumber, Condition, Grammaticality, Syncretism};

/// Mean and standard error of one design cell over the items present in it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub condition: Condition,
    pub n: usize,
    /// `None` for an empty cell.
    pub mean: Option<f64>,
    /// Sample SD / √n; `None` when fewer than two items are present.
    pub se: Option<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard error of the mean, `None` below two observations.
fn standard_error(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some(var.sqrt() / (xs.len() as f64).sqrt())
}

fn stats_from_table(table: &MeasureTable) -> [CellStat; 8] {
    Condition::ALL.map(|condition| {
        let xs: Vec<f64> = table.items.values().filter_map(|v| v[condition.index()]).collect();
        CellStat { condition, n: xs.len(), mean: (!xs.is_empty()).then(|| mean(&xs)), se: standard_error(&xs) }
    })
}

/// Cell means and SEs for one measure, ordered by [`Condition::index`].
pub fn cell_stats(records: &[MeasureRecord], measure: MeasureKind) -> Result<[CellStat; 8], AnalysisError> {
    Ok(stats_from_table(&MeasureTable::build(records, measure)?))
}

/// Plural-minus-singular contrasts at one grammaticality level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastSummary {
    pub measure: MeasureKind,
    pub grammaticality: Grammaticality,
    pub cells: Vec<CellStat>,
    pub delta_syncretic: f64,
    pub delta_nonsyncretic: f64,
    pub se_delta_syncretic: f64,
    pub se_delta_nonsyncretic: f64,
    /// `delta_syncretic - delta_nonsyncretic`.
    pub modulation: f64,
    pub n_syncretic: usize,
    pub n_nonsyncretic: usize,
    /// Items lacking the singular or plural cell at either syncretism level.
    pub dropped_items: Vec<u64>,
}

/// Paired by-item differences: Δ is the mean of (plural − singular) within
/// item, its SE the sample SD of those differences over √n.
pub fn delta_contrasts(
    records: &[MeasureRecord],
    measure: MeasureKind,
    grammaticality: Grammaticality,
) -> Result<ContrastSummary, AnalysisError> {
    let table = MeasureTable::build(records, measure)?;
    let mut dropped = std::collections::BTreeSet::new();
    let mut level = |syncretism: Syncretism| -> Result<(f64, f64, usize), AnalysisError> {
        let sg = Condition::new(syncretism, grammaticality, AttractorNumber::Singular).index();
        let pl = Condition::new(syncretism, grammaticality, AttractorNumber::Plural).index();
        let mut diffs = Vec::new();
        for (id, v) in &table.items {
            match (v[sg], v[pl]) {
                (Some(s), Some(p)) => diffs.push(p - s),
                _ => {
                    dropped.insert(*id);
                }
            }
        }
        if diffs.len() < 2 {
            return Err(AnalysisError::TooFewItems {
                measure: measure.label(),
                what: format!("{}/{} contrast", syncretism.label(), grammaticality.label()),
                complete: diffs.len(),
                needed: 2,
            });
        }
        let se = standard_error(&diffs).expect("at least two differences");
        Ok((mean(&diffs), se, diffs.len()))
    };
    let (delta_syncretic, se_delta_syncretic, n_syncretic) = level(Syncretism::Syncretic)?;
    let (delta_nonsyncretic, se_delta_nonsyncretic, n_nonsyncretic) = level(Syncretism::NonSyncretic)?;
    if !dropped.is_empty() {
        log::warn!(
            "{}: dropped {} item(s) missing a {} cell from the contrast: {:?}",
            measure.label(),
            dropped.len(),
            grammaticality.label(),
            dropped
        );
    }
    Ok(ContrastSummary {
        measure,
        grammaticality,
        cells: stats_from_table(&table).to_vec(),
        delta_syncretic,
        delta_nonsyncretic,
        se_delta_syncretic,
        se_delta_nonsyncretic,
        modulation: delta_syncretic - delta_nonsyncretic,
        n_syncretic,
        n_nonsyncretic,
        dropped_items: dropped.into_iter().collect(),
    })
}
