use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{AnalysisError, MeasureKind, MeasureRecord, MeasureTable};
use crate::stimuli::{AttractorNumber, Condition, Grammaticality, Syncretism};

/// One treatment-coded observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignRow {
    pub value: f64,
    pub item_id: u64,
    pub condition: Condition,
}

impl DesignRow {
    pub fn s(&self) -> f64 {
        f64::from(u8::from(self.condition.syncretism == Syncretism::NonSyncretic))
    }

    pub fn g(&self) -> f64 {
        f64::from(u8::from(self.condition.grammaticality == Grammaticality::Ungrammatical))
    }

    pub fn a(&self) -> f64 {
        f64::from(u8::from(self.condition.attractor_number == AttractorNumber::Plural))
    }

    /// Intercept, S, G, A, S·G, S·A, G·A, S·G·A.
    pub fn full(&self) -> [f64; 8] {
        let (s, g, a) = (self.s(), self.g(), self.a());
        [1.0, s, g, a, s * g, s * a, g * a, s * g * a]
    }

    /// Intercept, G, A, G·A.
    pub fn reduced(&self) -> [f64; 4] {
        let (g, a) = (self.g(), self.a());
        [1.0, g, a, g * a]
    }
}

/// Long-format table, rows ordered by item then cell index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DesignMatrix {
    pub measure: Option<MeasureKind>,
    pub rows: Vec<DesignRow>,
}

impl DesignMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The 8-column coded matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), 8, |i, j| self.rows[i].full()[j])
    }

    pub fn rank(&self) -> usize {
        if self.rows.is_empty() {
            return 0;
        }
        self.to_matrix().rank(1e-9)
    }
}

pub(crate) fn rows_from_table(table: &MeasureTable) -> Vec<DesignRow> {
    let mut rows = Vec::new();
    for (&item_id, cells) in &table.items {
        for (i, v) in cells.iter().enumerate() {
            if let Some(value) = *v {
                rows.push(DesignRow { value, item_id, condition: Condition::from_index(i) });
            }
        }
    }
    rows
}

pub fn design_matrix(records: &[MeasureRecord], measure: MeasureKind) -> Result<DesignMatrix, AnalysisError> {
    let table = MeasureTable::build(records, measure)?;
    Ok(DesignMatrix { measure: Some(measure), rows: rows_from_table(&table) })
}

#[derive(Serialize)]
#[serde(rename_all = "PascalCase")]
struct ExportRow<'a> {
    #[serde(rename = "value")]
    value: f64,
    syn: &'a str,
    gram: &'a str,
    attr: &'a str,
    item: u64,
}

/// Factor-labelled table for an external mixed-model fitter.
pub fn write_export_csv(design: &DesignMatrix, out: impl Write) -> Result<(), AnalysisError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    if design.rows.is_empty() {
        w.write_record(["value", "Syn", "Gram", "Attr", "Item"])?;
    }
    for r in &design.rows {
        w.serialize(ExportRow {
            value: r.value,
            syn: r.condition.syncretism.label(),
            gram: r.condition.grammaticality.label(),
            attr: r.condition.attractor_number.label(),
            item: r.item_id,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Numeric 0/1 coding with interaction columns.
pub fn write_coded_csv(design: &DesignMatrix, out: impl Write) -> Result<(), AnalysisError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["value", "S", "G", "A", "SG", "SA", "GA", "SGA", "item_id"])?;
    for r in &design.rows {
        let x = r.full();
        let mut rec = vec![r.value.to_string()];
        rec.extend(x[1..].iter().map(|v| (*v as u8).to_string()));
        rec.push(r.item_id.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
