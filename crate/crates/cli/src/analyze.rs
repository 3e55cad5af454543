//! `analyze` and `export`: per (language, model, measure) summaries and
//! long-format tables for external model fitting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use attraction_core::analysis::{
    bootstrap_interactions, cell_stats, delta_contrasts, design_matrix, fit_nonsyncretic_only, group_records,
    read_records, write_coded_csv, write_export_csv, BootstrapConfig, BootstrapSummary, CellStat, ContrastSummary,
    MeasureKind, MeasureRecord,
};
use attraction_core::stimuli::Grammaticality;
use attraction_core::surprisal::Unit;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{slug, write_file, write_json};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub language: String,
    pub model_id: String,
    pub measure: MeasureKind,
    pub unit: Unit,
    /// Attention layer shared by every record of the group.
    pub layer: Option<usize>,
    pub n_records: usize,
    /// Items lacking at least one of the eight cells.
    pub incomplete_items: Vec<u64>,
    pub cells: Option<[CellStat; 8]>,
    /// Plural-minus-singular contrasts keyed by grammaticality label.
    pub contrasts: BTreeMap<String, ContrastSummary>,
    pub bootstrap: Option<BootstrapSummary>,
    pub nonsyncretic_only: Option<BootstrapSummary>,
    /// Analyses that could not be run, with the reason.
    pub skipped: Vec<String>,
}

impl GroupSummary {
    pub fn contrast(&self, g: Grammaticality) -> Option<&ContrastSummary> {
        self.contrasts.get(g.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub bootstrap: BootstrapConfig,
    pub groups: Vec<GroupSummary>,
}

impl AnalysisSummary {
    pub fn group(&self, measure: MeasureKind) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.measure == measure)
    }

    pub fn has_skips(&self) -> bool {
        self.groups.iter().any(|g| !g.skipped.is_empty())
    }
}

pub fn load_records(path: &Path) -> Result<Vec<MeasureRecord>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let records = read_records(file)?;
    if records.is_empty() {
        return Err(CliError::Usage(format!("{} contains no records", path.display())));
    }
    Ok(records)
}

/// `records.csv` in the output directory unless given explicitly.
pub fn records_path(config: &RunConfig, explicit: Option<&Path>) -> Result<PathBuf, CliError> {
    match explicit {
        Some(p) => Ok(p.to_path_buf()),
        None => Ok(config.output_dir()?.join("records.csv")),
    }
}

fn incomplete_items(records: &[MeasureRecord]) -> Vec<u64> {
    let mut seen: BTreeMap<u64, [bool; 8]> = BTreeMap::new();
    for r in records {
        seen.entry(r.item_id).or_default()[r.condition.index()] = true;
    }
    seen.into_iter().filter(|(_, cells)| !cells.iter().all(|c| *c)).map(|(id, _)| id).collect()
}

fn shared<T: PartialEq + Copy>(mut values: impl Iterator<Item = T>) -> Option<T> {
    let first = values.next()?;
    values.all(|v| v == first).then_some(first)
}

pub fn summarize_group(records: &[MeasureRecord], config: &BootstrapConfig) -> GroupSummary {
    let first = &records[0];
    let measure = first.measure;
    let mut skipped = Vec::new();
    let mut note = |what: &str, e: &dyn std::fmt::Display| {
        log::warn!("{} {} {}: {what} skipped: {e}", first.language, first.model_id, measure.label());
        skipped.push(format!("{what}: {e}"));
    };
    let cells = cell_stats(records, measure).map_err(|e| note("cell means", &e)).ok();
    let mut contrasts = BTreeMap::new();
    for g in [Grammaticality::Ungrammatical, Grammaticality::Grammatical] {
        match delta_contrasts(records, measure, g) {
            Ok(c) => {
                contrasts.insert(g.label().to_string(), c);
            }
            Err(e) => note(&format!("{} contrast", g.label()), &e),
        }
    }
    let bootstrap = bootstrap_interactions(records, measure, config).map_err(|e| note("bootstrap", &e)).ok();
    let nonsyncretic_only =
        fit_nonsyncretic_only(records, measure, config).map_err(|e| note("non-syncretic bootstrap", &e)).ok();
    GroupSummary {
        language: first.language.clone(),
        model_id: first.model_id.clone(),
        measure,
        unit: first.unit,
        layer: shared(records.iter().map(|r| r.layer)).flatten(),
        n_records: records.len(),
        incomplete_items: incomplete_items(records),
        cells,
        contrasts,
        bootstrap,
        nonsyncretic_only,
        skipped,
    }
}

pub fn analyze_records(records: &[MeasureRecord], config: &BootstrapConfig) -> AnalysisSummary {
    let groups = group_records(records).values().map(|g| summarize_group(g, config)).collect();
    AnalysisSummary { bootstrap: *config, groups }
}

fn group_stem(language: &str, model_id: &str, measure: MeasureKind) -> String {
    format!("{}_{}_{}", slug(language), slug(model_id), measure.label())
}

/// Writes `export_<group>.csv` (factor labels) and `coded_<group>.csv`
/// (0/1 codes) per group; returns the paths written.
pub fn export_tables(records: &[MeasureRecord], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for ((language, model_id, measure), group) in group_records(records) {
        let stem = group_stem(&language, &model_id, measure);
        let design = design_matrix(&group, measure)?;
        let mut labels = Vec::new();
        write_export_csv(&design, &mut labels)?;
        let mut coded = Vec::new();
        write_coded_csv(&design, &mut coded)?;
        for (name, bytes) in [(format!("export_{stem}.csv"), labels), (format!("coded_{stem}.csv"), coded)] {
            let path = out.join(name);
            write_file(&path, &bytes)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// The `analyze` command: `summary.json` plus the export tables.
pub fn cmd_analyze(config: &RunConfig, records: Option<&Path>) -> Result<(AnalysisSummary, PathBuf), CliError> {
    let records = load_records(&records_path(config, records)?)?;
    let out = config.output_dir()?;
    let summary = analyze_records(&records, &config.bootstrap);
    let path = out.join("summary.json");
    write_json(&path, &summary)?;
    export_tables(&records, &out)?;
    Ok((summary, path))
}

/// The `export` command.
pub fn cmd_export(config: &RunConfig, records: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let records = load_records(&records_path(config, records)?)?;
    export_tables(&records, &config.output_dir()?)
}
