use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AnalysisError, MeasureKind, MeasureRecord};
use crate::stimuli::{AttractorNumber, Condition, Grammaticality, Syncretism};
use crate::surprisal::Unit;

/// CSV row; column order is the file's column order.
#[derive(Debug, Serialize, Deserialize)]
struct Row {
    language: String,
    item_id: u64,
    syncretism: Syncretism,
    grammaticality: Grammaticality,
    attractor_number: AttractorNumber,
    measure: MeasureKind,
    value: f64,
    model_id: String,
    layer: Option<usize>,
    unit: Unit,
}

impl From<&MeasureRecord> for Row {
    fn from(r: &MeasureRecord) -> Self {
        Self {
            language: r.language.clone(),
            item_id: r.item_id,
            syncretism: r.condition.syncretism,
            grammaticality: r.condition.grammaticality,
            attractor_number: r.condition.attractor_number,
            measure: r.measure,
            value: r.value,
            model_id: r.model_id.clone(),
            layer: r.layer,
            unit: r.unit,
        }
    }
}

impl From<Row> for MeasureRecord {
    fn from(r: Row) -> Self {
        Self {
            language: r.language,
            item_id: r.item_id,
            condition: Condition::new(r.syncretism, r.grammaticality, r.attractor_number),
            measure: r.measure,
            value: r.value,
            model_id: r.model_id,
            layer: r.layer,
            unit: r.unit,
        }
    }
}

pub fn write_records(records: &[MeasureRecord], out: impl Write) -> Result<(), AnalysisError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in records {
        w.serialize(Row::from(r))?;
    }
    if records.is_empty() {
        w.write_record([
            "language",
            "item_id",
            "syncretism",
            "grammaticality",
            "attractor_number",
            "measure",
            "value",
            "model_id",
            "layer",
            "unit",
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a records CSV, enforcing key uniqueness and finite values.
pub fn read_records(input: impl Read) -> Result<Vec<MeasureRecord>, AnalysisError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    let mut keys = HashSet::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        let r = MeasureRecord::from(row);
        let line = out.len() as u64 + 2;
        if !r.value.is_finite() {
            return Err(AnalysisError::InvalidRecord { line, message: format!("non-finite value {}", r.value) });
        }
        if !keys.insert((r.language.clone(), r.item_id, r.condition, r.measure, r.model_id.clone())) {
            return Err(AnalysisError::Duplicate {
                item_id: r.item_id,
                condition: r.condition,
                measure: r.measure.label(),
            });
        }
        out.push(r);
    }
    Ok(out)
}

/// (language, model id, measure)
pub type GroupKey = (String, String, MeasureKind);

pub fn group_records(records: &[MeasureRecord]) -> BTreeMap<GroupKey, Vec<MeasureRecord>> {
    let mut groups: BTreeMap<GroupKey, Vec<MeasureRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.language.clone(), r.model_id.clone(), r.measure)).or_default().push(r.clone());
    }
    groups
}
