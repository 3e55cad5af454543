//! The bundled run configurations and stimulus sets are well-formed.

use std::collections::BTreeSet;
use std::path::PathBuf;

use attraction_cli::{LayerChoice, RunConfig};
use attraction_core::stimuli::{check_factorial, load_stimuli, HeadNumber};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

const RUNS: [(&str, &str, usize); 4] =
    [("english", "en", 16), ("german", "de", 16), ("russian", "ru", 16), ("turkish", "tr", 16)];

#[test]
fn configs_point_at_complete_stimulus_sets() {
    let catalog: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(repo().join("configs/models.json")).unwrap()).unwrap();
    for (name, code, n_items) in RUNS {
        let config = RunConfig::from_path(&repo().join(format!("configs/{name}.json"))).unwrap();
        config.validate().unwrap();
        assert_eq!(config.language.as_deref(), Some(code));
        assert_eq!(config.layer, LayerChoice::Auto);
        for id in [&config.autoregressive_model, &config.bidirectional_model] {
            let id = id.as_deref().unwrap();
            assert!(catalog.get(id).is_some(), "{name}: {id} missing from the catalog");
        }

        let set = load_stimuli(repo().join(config.stimuli.as_ref().unwrap())).unwrap();
        assert!(set.items.iter().all(|i| i.language == code), "{name}");
        let set = config.item_filter.apply(&set);
        assert!(check_factorial(&set).is_complete(), "{name}");
        let ids: BTreeSet<u64> = set.items.iter().map(|i| i.item_id).collect();
        assert_eq!(ids.len(), n_items, "{name}");
        assert_eq!(set.items.len(), 8 * n_items, "{name}");
    }
}

#[test]
fn russian_filter_keeps_singular_heads_only() {
    let all = load_stimuli(repo().join("data/stimuli/russian.jsonl")).unwrap();
    let config = RunConfig::from_path(&repo().join("configs/russian.json")).unwrap();
    let kept = config.item_filter.apply(&all);
    assert!(all.items.iter().any(|i| i.head_number == Some(HeadNumber::Plural)));
    assert!(kept.items.iter().all(|i| i.head_number == Some(HeadNumber::Singular)));
    assert_eq!(all.items.len() - kept.items.len(), 32);
}
