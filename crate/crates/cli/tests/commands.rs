//! End-to-end command runs against synthetic and tiny real checkpoints.

use std::path::{Path, PathBuf};
use std::process::Command;

use attraction_cli::analyze::{cmd_analyze, cmd_export, load_records};
use attraction_cli::plot::cmd_plot;
use attraction_cli::probe::cmd_probe;
use attraction_cli::score::cmd_score;
use attraction_cli::{CliError, LayerChoice, RunConfig};
use attraction_core::analysis::MeasureKind;
use attraction_core::stimuli::{Condition, Grammaticality};
use serde_json::json;

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn english() -> PathBuf {
    repo().join("data/stimuli/english.jsonl")
}

fn treebank() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/subject_first.conllu")
}

struct Setup {
    dir: tempfile::TempDir,
}

impl Setup {
    /// Catalog with a bigram LM estimated on the English stimuli and an
    /// attention model whose layer 2 attends to the first word. The
    /// uniform last layer also hits but loses the tie to the lower index.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let corpus: Vec<String> = std::fs::read_to_string(english())
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["text"].as_str().unwrap().to_string())
            .collect();
        let fixtures = repo().join("crates/nn/tests/fixtures");
        let catalog = json!({
            "syn-lm": {"kind": "synthetic", "synthetic": {"scorer": {"bigram": {"corpus": corpus}}}},
            "syn-attn": {"kind": "synthetic", "synthetic": {"attention": {
                "heads": 2,
                "layers": ["previous_token", "previous_token", "first_token", "previous_token", "uniform"]
            }}},
            "tiny-gpt2": {"kind": "autoregressive", "locator": fixtures.join("tiny-gpt2"), "max_tokens": 64},
            "tiny-bert": {"kind": "bidirectional", "locator": fixtures.join("tiny-bert"), "max_tokens": 64}
        });
        std::fs::write(dir.path().join("models.json"), catalog.to_string()).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self) -> RunConfig {
        RunConfig {
            models: Some(self.path("models.json")),
            autoregressive_model: Some("syn-lm".into()),
            bidirectional_model: Some("syn-attn".into()),
            stimuli: Some(english()),
            conllu: Some(treebank()),
            output_dir: self.path("out"),
            ..RunConfig::default()
        }
    }

    /// The first `n` items of the English stimuli.
    fn first_items(&self, n: u64) -> PathBuf {
        let text: String = std::fs::read_to_string(english())
            .unwrap()
            .lines()
            .filter(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["item_id"].as_u64().unwrap() <= n)
            .map(|l| format!("{l}\n"))
            .collect();
        let path = self.path(&format!("first{n}.jsonl"));
        std::fs::write(&path, text).unwrap();
        path
    }
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn one_item_yields_eight_conditions_times_three_measures() {
    let s = Setup::new();
    let config = RunConfig { stimuli: Some(s.first_items(1)), layer: LayerChoice::Fixed(4), ..s.config() };
    let out = cmd_score(&config).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert_eq!(out.records.len(), 24);
    assert_eq!(out.layer, Some(4));
    let csv = String::from_utf8(read(&out.path)).unwrap();
    assert_eq!(csv.lines().count(), 25);
    for m in MeasureKind::ALL {
        assert_eq!(out.records.iter().filter(|r| r.measure == m).count(), 8);
    }
}

#[test]
fn probe_selects_the_planted_layer_and_writes_a_report() {
    let s = Setup::new();
    let config = RunConfig { k: 1, ..s.config() };
    let (report, path) = cmd_probe(&config).unwrap();
    assert_eq!(report.result.selected_layer, 2);
    assert_eq!(report.result.accuracies, vec![0.0, 0.0, 1.0, 0.0, 1.0]);
    assert_eq!(report.result.n_pairs, 5);
    let on_disk: serde_json::Value = serde_json::from_slice(&read(&path)).unwrap();
    assert_eq!(on_disk["selected_layer"], 2);
    // probing again gives the same bytes
    let first = read(&path);
    cmd_probe(&config).unwrap();
    assert_eq!(read(&path), first);
}

#[test]
fn missing_treebank_is_a_usage_error() {
    let s = Setup::new();
    let config = RunConfig { conllu: None, ..s.config() };
    let err = cmd_probe(&config).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    let err = cmd_score(&config).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)), "{err}");
}

#[test]
fn out_of_range_layer_is_a_usage_error() {
    let s = Setup::new();
    let config = RunConfig { stimuli: Some(s.first_items(1)), layer: LayerChoice::Fixed(5), ..s.config() };
    let err = cmd_score(&config).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)), "{err}");
}

#[test]
fn auto_layer_reuses_the_probe_cache() {
    let s = Setup::new();
    let config = RunConfig { stimuli: Some(s.first_items(1)), k: 1, ..s.config() };
    let out = cmd_score(&config).unwrap();
    assert_eq!(out.layer, Some(2));
    let cache_dir = s.path("out/cache");
    let entries: Vec<_> = std::fs::read_dir(&cache_dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);

    // A doctored cache entry is trusted, proving the probe was not rerun.
    let mut cached: serde_json::Value = serde_json::from_slice(&read(&entries[0])).unwrap();
    cached["selected_layer"] = json!(3);
    std::fs::write(&entries[0], cached.to_string()).unwrap();
    assert_eq!(cmd_score(&config).unwrap().layer, Some(3));

    // Different extraction limits are a different key.
    let mut config = config;
    config.probe_limits.max_sentences = Some(4);
    assert_eq!(cmd_score(&config).unwrap().layer, Some(2));
    assert_eq!(std::fs::read_dir(&cache_dir).unwrap().count(), 2);
}

/// Eight cells of an item whose verb is the first word, so no
/// autoregressive prediction exists for it.
fn verb_first_item(id: u64) -> String {
    let mut lines = String::new();
    for c in Condition::ALL {
        let verb = if c.grammaticality == Grammaticality::Grammatical { "Is" } else { "Are" };
        let att = if c.attractor_number.label() == "sg" { "garden" } else { "gardens" };
        let text = format!("{verb} the statue in the {att} old?");
        let v = verb.chars().count();
        let head = v + 5;
        let a = head + "statue in the ".chars().count();
        let record = json!({
            "item_id": id, "language": "en",
            "syncretism": c.syncretism.label(), "grammaticality": c.grammaticality.label(),
            "attractor_number": c.attractor_number.label(), "text": text,
            "head_span": [head, head + 6], "attractor_span": [a, a + att.len()], "verb_span": [0, v]
        });
        lines.push_str(&format!("{record}\n"));
    }
    lines
}

#[test]
fn unscorable_items_are_reported_and_left_out() {
    let s = Setup::new();
    let path = s.path("mixed.jsonl");
    let text = std::fs::read_to_string(s.first_items(1)).unwrap() + &verb_first_item(99);
    std::fs::write(&path, text).unwrap();
    let config = RunConfig { stimuli: Some(path), layer: LayerChoice::Fixed(4), ..s.config() };
    let out = cmd_score(&config).unwrap();
    assert_eq!(out.failures.len(), 8);
    assert!(out.failures.iter().all(|f| f.item_id == 99 && f.measure == MeasureKind::Surprisal));
    assert!(!out.records.iter().any(|r| r.item_id == 99 && r.measure == MeasureKind::Surprisal));
    assert_eq!(out.records.iter().filter(|r| r.item_id == 99).count(), 16);
}

#[test]
fn analyze_is_byte_identical_across_runs() {
    let s = Setup::new();
    let config = RunConfig { layer: LayerChoice::Fixed(4), ..s.config() };
    let mut config = config;
    config.bootstrap.n_resamples = 200;
    cmd_score(&config).unwrap();
    let (summary, path) = cmd_analyze(&config, None).unwrap();
    let first = read(&path);
    let (_, path) = cmd_analyze(&config, None).unwrap();
    assert_eq!(read(&path), first);

    assert_eq!(summary.groups.len(), 3);
    assert!(!summary.has_skips(), "{:?}", summary.groups.iter().map(|g| &g.skipped).collect::<Vec<_>>());
    let g = summary.group(MeasureKind::Surprisal).unwrap();
    assert_eq!(g.n_records, 128);
    let c = g.contrast(Grammaticality::Ungrammatical).unwrap();
    assert_eq!(c.modulation, c.delta_syncretic - c.delta_nonsyncretic);
    assert_eq!(g.bootstrap.as_ref().unwrap().n_items, 16);

    let export = std::fs::read_to_string(s.path("out/export_en_syn-lm_surprisal.csv")).unwrap();
    assert_eq!(export.lines().next(), Some("value,Syn,Gram,Attr,Item"));
    assert_eq!(export.lines().count(), 129);
    let coded = std::fs::read_to_string(s.path("out/coded_en_syn-lm_surprisal.csv")).unwrap();
    assert_eq!(coded.lines().next(), Some("value,S,G,A,SG,SA,GA,SGA,item_id"));

    let exported = cmd_export(&config, None).unwrap();
    assert_eq!(exported.len(), 6);
}

#[test]
fn incomplete_factorial_is_listed_and_fits_skipped() {
    let s = Setup::new();
    let mut config = RunConfig { stimuli: Some(s.first_items(2)), layer: LayerChoice::Fixed(4), ..s.config() };
    config.bootstrap.n_resamples = 50;
    cmd_score(&config).unwrap();
    // drop one cell of item 2
    let records = s.path("out/records.csv");
    let kept: String = std::fs::read_to_string(&records)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("en,2,nonsyncretic,ungram,pl,"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&records, kept).unwrap();
    let (summary, _) = cmd_analyze(&config, None).unwrap();
    for g in &summary.groups {
        assert_eq!(g.incomplete_items, vec![2]);
        assert!(g.bootstrap.is_none());
        assert!(g.skipped.iter().any(|m| m.starts_with("bootstrap")), "{:?}", g.skipped);
        // one complete pair per syncretism level is too few for a Δ
        assert!(g.contrast(Grammaticality::Ungrammatical).is_none());
    }
    assert!(summary.has_skips());
}

#[test]
fn empty_records_are_rejected() {
    let s = Setup::new();
    let path = s.path("empty.csv");
    std::fs::write(
        &path,
        "language,item_id,syncretism,grammaticality,attractor_number,measure,value,model_id,layer,unit\n",
    )
    .unwrap();
    let err = cmd_analyze(&s.config(), Some(&path)).unwrap_err();
    assert_ne!(err.exit_code(), 0);
    assert!(load_records(&path).is_err());
}

#[test]
fn figures_have_eight_bars_with_error_bars_and_are_reproducible() {
    let s = Setup::new();
    let config = RunConfig { layer: LayerChoice::Fixed(4), ..s.config() };
    cmd_score(&config).unwrap();
    let plots = cmd_plot(&config, None).unwrap();
    assert_eq!(plots.len(), 3);
    for p in &plots {
        let svg = std::fs::read_to_string(&p.svg_path).unwrap();
        assert_eq!(svg.matches(r#"class="bar""#).count(), 8);
        assert_eq!(svg.matches(r#"class="errorbar""#).count(), 8);
        assert!(read(&p.png_path).starts_with(b"\x89PNG"));
    }
    let first: Vec<Vec<u8>> = plots.iter().flat_map(|p| [read(&p.svg_path), read(&p.png_path)]).collect();
    let again = cmd_plot(&config, None).unwrap();
    let second: Vec<Vec<u8>> = again.iter().flat_map(|p| [read(&p.svg_path), read(&p.png_path)]).collect();
    assert_eq!(first, second);
    // plotted heights are the cell means
    let surprisal = plots.iter().find(|p| p.svg_path.to_string_lossy().contains("surprisal")).unwrap();
    let cell = surprisal.figure.cells[0];
    let svg = std::fs::read_to_string(&surprisal.svg_path).unwrap();
    assert!(svg.contains(&format!(r#"data-mean="{:.6}""#, cell.mean.unwrap())));
}

#[test]
fn tiny_checkpoints_score_an_item() {
    let s = Setup::new();
    let config = RunConfig {
        stimuli: Some(s.first_items(1)),
        autoregressive_model: Some("tiny-gpt2".into()),
        bidirectional_model: Some("tiny-bert".into()),
        layer: LayerChoice::Fixed(1),
        ..s.config()
    };
    let out = cmd_score(&config).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert_eq!(out.records.len(), 24);
    assert!(out.records.iter().all(|r| r.value.is_finite() && r.value >= 0.0));
}

fn bin(args: &[&str], cwd: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_attraction")).args(args).current_dir(cwd).output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes_distinguish_success_partial_and_usage() {
    let s = Setup::new();
    let dir = s.dir.path();
    let one = s.first_items(1);
    let one = one.to_str().unwrap();
    let base = ["--models", "models.json", "--ar-model", "syn-lm", "--bi-model", "syn-attn", "--out", "out"];
    let with = |extra: &[&str]| -> Vec<String> { base.iter().chain(extra).map(|s| s.to_string()).collect() };

    let mut args = vec!["score".to_string()];
    args.extend(with(&["--stimuli", one, "--layer", "4"]));
    assert_eq!(bin(&args.iter().map(String::as_str).collect::<Vec<_>>(), dir), 0);
    assert_eq!(bin(&["analyze", "--out", "out", "--resamples", "10"], dir), 1, "one item is too few for the bootstrap");
    assert_eq!(bin(&["plot", "--out", "out"], dir), 0);
    assert_eq!(bin(&["export", "--out", "out"], dir), 0);

    let mixed = s.path("mixed.jsonl");
    std::fs::write(&mixed, std::fs::read_to_string(s.first_items(1)).unwrap() + &verb_first_item(99)).unwrap();
    let mut args = vec!["score".to_string()];
    args.extend(with(&["--stimuli", mixed.to_str().unwrap(), "--layer", "4"]));
    assert_eq!(bin(&args.iter().map(String::as_str).collect::<Vec<_>>(), dir), 1);

    let mut args = vec!["score".to_string()];
    args.extend(with(&["--stimuli", one]));
    assert_eq!(bin(&args.iter().map(String::as_str).collect::<Vec<_>>(), dir), 2, "--layer auto without --conllu");
    assert_eq!(bin(&["probe", "--models", "models.json", "--bi-model", "syn-attn"], dir), 2);
    assert_eq!(bin(&["score", "--bogus"], dir), 2);
    assert_eq!(bin(&["analyze", "missing.csv"], dir), 1);
}
