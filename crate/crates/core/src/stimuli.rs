//! Factorial minimal-pair stimuli.
//!
//! A stimulus set is a JSONL file with one sentence per line. Each sentence
//! belongs to an item (a lexicalisation of the design) and one of the eight
//! cells of the Syncretism × Grammaticality × Attractor-number design, and
//! marks the head noun, the attractor noun and the agreement-bearing verb as
//! character spans.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::{covers_whole_word, trim_span, CharIndex, CharSpan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Syncretism {
    #[serde(rename = "syncretic")]
    Syncretic,
    #[serde(rename = "nonsyncretic")]
    NonSyncretic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Grammaticality {
    #[serde(rename = "gram")]
    Grammatical,
    #[serde(rename = "ungram")]
    Ungrammatical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttractorNumber {
    #[serde(rename = "sg")]
    Singular,
    #[serde(rename = "pl")]
    Plural,
}

/// Grammatical number of the head noun. Only used to filter stimulus sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeadNumber {
    #[serde(rename = "sg")]
    Singular,
    #[serde(rename = "pl")]
    Plural,
}

impl Syncretism {
    pub const fn label(self) -> &'static str {
        match self {
            Self::Syncretic => "syncretic",
            Self::NonSyncretic => "nonsyncretic",
        }
    }
}

impl Grammaticality {
    pub const fn label(self) -> &'static str {
        match self {
            Self::Grammatical => "gram",
            Self::Ungrammatical => "ungram",
        }
    }
}

impl AttractorNumber {
    pub const fn label(self) -> &'static str {
        match self {
            Self::Singular => "sg",
            Self::Plural => "pl",
        }
    }
}

/// One cell of the 2×2×2 design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub syncretism: Syncretism,
    pub grammaticality: Grammaticality,
    pub attractor_number: AttractorNumber,
}

impl Condition {
    /// All eight cells, ordered by [`Condition::index`].
    pub const ALL: [Condition; 8] = {
        use AttractorNumber::*;
        use Grammaticality::*;
        use Syncretism::*;
        [
            Condition::new(Syncretic, Grammatical, Singular),
            Condition::new(Syncretic, Grammatical, Plural),
            Condition::new(Syncretic, Ungrammatical, Singular),
            Condition::new(Syncretic, Ungrammatical, Plural),
            Condition::new(NonSyncretic, Grammatical, Singular),
            Condition::new(NonSyncretic, Grammatical, Plural),
            Condition::new(NonSyncretic, Ungrammatical, Singular),
            Condition::new(NonSyncretic, Ungrammatical, Plural),
        ]
    };

    pub const fn new(
        syncretism: Syncretism,
        grammaticality: Grammaticality,
        attractor_number: AttractorNumber,
    ) -> Self {
        Self { syncretism, grammaticality, attractor_number }
    }

    /// Treatment-coded position: bit 2 = NonSyncretic, bit 1 = Ungrammatical,
    /// bit 0 = Plural. The reference cell (Syncretic, Grammatical, Singular)
    /// is index 0.
    pub const fn index(self) -> usize {
        let s = matches!(self.syncretism, Syncretism::NonSyncretic) as usize;
        let g = matches!(self.grammaticality, Grammaticality::Ungrammatical) as usize;
        let a = matches!(self.attractor_number, AttractorNumber::Plural) as usize;
        s * 4 + g * 2 + a
    }

    pub const fn from_index(index: usize) -> Self {
        Self::ALL[index % 8]
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.syncretism.label(), self.grammaticality.label(), self.attractor_number.label())
    }
}

/// One sentence of the design with its annotated regions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StimulusItem {
    pub item_id: u64,
    pub language: String,
    pub condition: Condition,
    pub text: String,
    pub head_span: CharSpan,
    pub attractor_span: CharSpan,
    /// Agreement-bearing word(s): the surprisal region and the attention query.
    pub verb_span: CharSpan,
    pub head_number: Option<HeadNumber>,
}

/// Wire format of one JSONL line. Field order is the serialization order.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StimulusLine {
    item_id: u64,
    language: String,
    syncretism: Syncretism,
    grammaticality: Grammaticality,
    attractor_number: AttractorNumber,
    text: String,
    head_span: CharSpan,
    attractor_span: CharSpan,
    verb_span: CharSpan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    head_number: Option<HeadNumber>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetadataLine {
    metadata: BTreeMap<String, String>,
}

impl From<StimulusLine> for StimulusItem {
    fn from(l: StimulusLine) -> Self {
        Self {
            item_id: l.item_id,
            language: l.language,
            condition: Condition::new(l.syncretism, l.grammaticality, l.attractor_number),
            text: l.text,
            head_span: l.head_span,
            attractor_span: l.attractor_span,
            verb_span: l.verb_span,
            head_number: l.head_number,
        }
    }
}

impl From<&StimulusItem> for StimulusLine {
    fn from(i: &StimulusItem) -> Self {
        Self {
            item_id: i.item_id,
            language: i.language.clone(),
            syncretism: i.condition.syncretism,
            grammaticality: i.condition.grammaticality,
            attractor_number: i.condition.attractor_number,
            text: i.text.clone(),
            head_span: i.head_span,
            attractor_span: i.attractor_span,
            verb_span: i.verb_span,
            head_number: i.head_number,
        }
    }
}

/// A single invariant violation of a stimulus item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl StimulusItem {
    pub fn spans(&self) -> [(&'static str, CharSpan); 3] {
        [("head_span", self.head_span), ("attractor_span", self.attractor_span), ("verb_span", self.verb_span)]
    }

    pub fn region(&self, span: CharSpan) -> Option<&str> {
        CharIndex::new(&self.text).slice(span)
    }

    /// Checks every item invariant and returns all violations found.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let lang_ok = self.language.len() == 2 && self.language.bytes().all(|b| b.is_ascii_lowercase());
        if !lang_ok {
            out.push(Violation { field: "language", message: format!("{:?} is not an ISO 639-1 code", self.language) });
        }
        let index = CharIndex::new(&self.text);
        let n = index.char_len();
        let mut in_bounds = true;
        for (field, span) in self.spans() {
            if span.start > span.end || span.end > n {
                in_bounds = false;
                out.push(Violation { field, message: format!("span {span} out of bounds for text of {n} chars") });
                continue;
            }
            if trim_span(&index, span).is_empty() {
                out.push(Violation { field, message: format!("span {span} is empty after trimming") });
            }
        }
        if !in_bounds {
            return out;
        }
        let spans = self.spans();
        for i in 0..spans.len() {
            for j in i + 1..spans.len() {
                if spans[i].1.overlaps(&spans[j].1) {
                    out.push(Violation {
                        field: spans[j].0,
                        message: format!("overlaps {} {}", spans[i].0, spans[i].1),
                    });
                }
            }
        }
        for (field, span) in [("head_span", self.head_span), ("attractor_span", self.attractor_span)] {
            if !span.is_empty() && !covers_whole_word(&self.text, span) {
                out.push(Violation { field, message: format!("span {span} covers no whole word") });
            }
        }
        out
    }
}

/// A loaded stimulus set. Items keep file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StimulusSet {
    pub items: Vec<StimulusItem>,
    pub metadata: BTreeMap<String, String>,
}

/// Error for one line of a stimulus file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub item_id: Option<u64>,
    pub field: Option<&'static str>,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}", self.line)?;
        if let Some(id) = self.item_id {
            write!(f, " (item {id})")?;
        }
        if let Some(field) = self.field {
            write!(f, " {field}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Error)]
pub enum StimuliError {
    #[error("cannot read stimuli: {0}")]
    Io(#[from] std::io::Error),
    #[error("{} invalid stimulus line(s):\n{}", .0.len(), join_lines(.0))]
    Invalid(Vec<LineError>),
    #[error("cannot serialize stimuli: {0}")]
    Serialize(#[from] serde_json::Error),
}

fn join_lines(errors: &[LineError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

pub fn load_stimuli(path: impl AsRef<Path>) -> Result<StimulusSet, StimuliError> {
    parse_stimuli(File::open(path)?)
}

/// Parses JSONL stimuli, collecting every bad line instead of stopping at the
/// first one. An optional `{"metadata": {...}}` line may appear anywhere.
pub fn parse_stimuli(reader: impl Read) -> Result<StimulusSet, StimuliError> {
    let mut set = StimulusSet::default();
    let mut errors = Vec::new();
    let mut seen: HashSet<(u64, Condition)> = HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(meta) = serde_json::from_str::<MetadataLine>(&line) {
            set.metadata.extend(meta.metadata);
            continue;
        }
        let item: StimulusItem = match serde_json::from_str::<StimulusLine>(&line) {
            Ok(l) => l.into(),
            Err(e) => {
                errors.push(LineError { line: line_no, item_id: None, field: None, message: e.to_string() });
                continue;
            }
        };
        let violations = item.violations();
        if !violations.is_empty() {
            errors.extend(violations.into_iter().map(|v| LineError {
                line: line_no,
                item_id: Some(item.item_id),
                field: Some(v.field),
                message: v.message,
            }));
            continue;
        }
        if !seen.insert((item.item_id, item.condition)) {
            errors.push(LineError {
                line: line_no,
                item_id: Some(item.item_id),
                field: None,
                message: format!("duplicate (item_id, condition) for {}", item.condition),
            });
            continue;
        }
        set.items.push(item);
    }
    if errors.is_empty() {
        Ok(set)
    } else {
        Err(StimuliError::Invalid(errors))
    }
}

/// Writes the set as JSONL with LF line endings. Metadata, when present, is
/// written as the first line.
pub fn write_stimuli(set: &StimulusSet, mut out: impl Write) -> Result<(), StimuliError> {
    if !set.metadata.is_empty() {
        serde_json::to_writer(&mut out, &MetadataLine { metadata: set.metadata.clone() })?;
        out.write_all(b"\n")?;
    }
    for item in &set.items {
        serde_json::to_writer(&mut out, &StimulusLine::from(item))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Cells absent from each item of a set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FactorialReport {
    /// Sorted by item id, then by condition index.
    pub missing: Vec<(u64, Condition)>,
}

impl FactorialReport {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn incomplete_items(&self) -> BTreeSet<u64> {
        self.missing.iter().map(|(id, _)| *id).collect()
    }
}

pub fn check_factorial(set: &StimulusSet) -> FactorialReport {
    let mut present: BTreeMap<u64, [bool; 8]> = BTreeMap::new();
    for item in &set.items {
        present.entry(item.item_id).or_default()[item.condition.index()] = true;
    }
    let missing = present
        .into_iter()
        .flat_map(|(id, cells)| Condition::ALL.into_iter().filter(move |c| !cells[c.index()]).map(move |c| (id, c)))
        .collect();
    FactorialReport { missing }
}

/// Configuration-level item selection.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFilter {
    /// Keep only items whose `head_number` equals this value.
    #[serde(default)]
    pub head_number: Option<HeadNumber>,
}

impl ItemFilter {
    pub fn apply(&self, set: &StimulusSet) -> StimulusSet {
        let items =
            set.items.iter().filter(|i| self.head_number.is_none_or(|h| i.head_number == Some(h))).cloned().collect();
        StimulusSet { items, metadata: set.metadata.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{"item_id":1,"language":"en","syncretism":"syncretic","grammaticality":"ungram","attractor_number":"pl","text":"The statue in the elves' gardens are old.","head_span":[4,10],"attractor_span":[25,32],"verb_span":[33,36]}"#;

    #[test]
    fn condition_index_round_trips() {
        for (i, c) in Condition::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(Condition::from_index(i), *c);
        }
    }

    #[test]
    fn loads_single_valid_line() {
        let set = parse_stimuli(VALID.as_bytes()).unwrap();
        assert_eq!(set.items.len(), 1);
        let item = &set.items[0];
        assert_eq!(item.region(item.head_span), Some("statue"));
        assert_eq!(item.region(item.attractor_span), Some("gardens"));
        assert_eq!(item.region(item.verb_span), Some("are"));
    }

    #[test]
    fn verb_span_beyond_text_names_item_and_field() {
        let bad = VALID.replace("[33,36]", "[33,99]");
        let err = parse_stimuli(bad.as_bytes()).unwrap_err();
        let StimuliError::Invalid(errors) = err else { panic!("expected Invalid") };
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].item_id, Some(1));
        assert_eq!(errors[0].field, Some("verb_span"));
        assert_eq!(errors[0].line, 1);
    }

    #[test]
    fn collects_errors_from_several_lines() {
        let input = format!("{VALID}\nnot json\n{VALID}\n");
        let StimuliError::Invalid(errors) = parse_stimuli(input.as_bytes()).unwrap_err() else { panic!() };
        assert_eq!(errors.iter().map(|e| e.line).collect::<Vec<_>>(), vec![2, 3]);
        assert!(errors[1].message.contains("duplicate"));
    }

    #[test]
    fn rejects_overlapping_and_blank_spans() {
        let overlapping = VALID.replace(r#""attractor_span":[25,32]"#, r#""attractor_span":[8,14]"#);
        let StimuliError::Invalid(errors) = parse_stimuli(overlapping.as_bytes()).unwrap_err() else { panic!() };
        assert!(errors.iter().any(|e| e.field == Some("attractor_span") && e.message.contains("overlaps")));

        let blank = VALID.replace("[33,36]", "[32,33]");
        let StimuliError::Invalid(errors) = parse_stimuli(blank.as_bytes()).unwrap_err() else { panic!() };
        assert!(errors.iter().any(|e| e.message.contains("empty after trimming")));
    }

    #[test]
    fn head_must_cover_a_whole_word() {
        let partial = VALID.replace("[4,10]", "[5,10]");
        let StimuliError::Invalid(errors) = parse_stimuli(partial.as_bytes()).unwrap_err() else { panic!() };
        assert_eq!(errors[0].field, Some("head_span"));
    }

    #[test]
    fn metadata_line_is_kept_and_written_first() {
        let input = format!("{VALID}\n{{\"metadata\":{{\"source\":\"test\"}}}}\n");
        let set = parse_stimuli(input.as_bytes()).unwrap();
        assert_eq!(set.metadata.get("source").map(String::as_str), Some("test"));
        let mut out = Vec::new();
        write_stimuli(&set, &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("{\"metadata\""));
    }

    #[test]
    fn reports_exactly_the_missing_cell() {
        let base = parse_stimuli(VALID.as_bytes()).unwrap().items[0].clone();
        let mut set = StimulusSet::default();
        let dropped = Condition::new(Syncretism::NonSyncretic, Grammaticality::Ungrammatical, AttractorNumber::Plural);
        for c in Condition::ALL {
            if c != dropped {
                set.items.push(StimulusItem { condition: c, ..base.clone() });
            }
        }
        assert_eq!(check_factorial(&set).missing, vec![(1, dropped)]);
        set.items.push(StimulusItem { condition: dropped, ..base });
        assert!(check_factorial(&set).is_complete());
    }

    #[test]
    fn head_number_filter() {
        let base = parse_stimuli(VALID.as_bytes()).unwrap().items[0].clone();
        let set = StimulusSet {
            items: vec![
                StimulusItem { head_number: Some(HeadNumber::Singular), ..base.clone() },
                StimulusItem { item_id: 2, head_number: Some(HeadNumber::Plural), ..base.clone() },
                StimulusItem { item_id: 3, head_number: None, ..base },
            ],
            metadata: BTreeMap::new(),
        };
        let filter = ItemFilter { head_number: Some(HeadNumber::Singular) };
        let kept = filter.apply(&set);
        assert_eq!(kept.items.iter().map(|i| i.item_id).collect::<Vec<_>>(), vec![1]);
        assert_eq!(ItemFilter::default().apply(&set).items.len(), 3);
    }
}
