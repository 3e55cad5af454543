use attraction_core::span::CharSpan;
use attraction_core::stimuli::{
    check_factorial, parse_stimuli, write_stimuli, Condition, HeadNumber, ItemFilter, StimulusItem, StimulusSet,
};
use proptest::prelude::*;

fn item(
    item_id: u64,
    condition: Condition,
    head: &str,
    attractor: &str,
    verb: &str,
    head_number: Option<HeadNumber>,
) -> StimulusItem {
    let text = format!("The {head} near the {attractor} {verb} here.");
    let h0 = 4;
    let h1 = h0 + head.chars().count();
    let a0 = h1 + 10;
    let a1 = a0 + attractor.chars().count();
    let v0 = a1 + 1;
    let v1 = v0 + verb.chars().count();
    StimulusItem {
        item_id,
        language: "en".into(),
        condition,
        text,
        head_span: CharSpan::new(h0, h1),
        attractor_span: CharSpan::new(a0, a1),
        verb_span: CharSpan::new(v0, v1),
        head_number,
    }
}

fn word() -> impl Strategy<Value = String> {
    "[a-zа-яçğıöşü]{1,10}"
}

fn stimulus_set() -> impl Strategy<Value = StimulusSet> {
    prop::collection::btree_map(
        (1u64..40, 0usize..8),
        (word(), word(), word(), prop::option::of(prop_oneof![Just(HeadNumber::Singular), Just(HeadNumber::Plural)])),
        1..40,
    )
    .prop_flat_map(|cells| {
        let items: Vec<StimulusItem> = cells
            .into_iter()
            .map(|((id, c), (h, a, v, n))| item(id, Condition::from_index(c), &h, &a, &v, n))
            .collect();
        Just(items).prop_shuffle()
    })
    .prop_map(|items| StimulusSet { items, metadata: [("source".to_string(), "fuzz".to_string())].into() })
}

proptest! {
    #[test]
    fn write_then_load_is_identity(set in stimulus_set()) {
        let mut first = Vec::new();
        write_stimuli(&set, &mut first).unwrap();
        let loaded = parse_stimuli(first.as_slice()).unwrap();
        prop_assert_eq!(&loaded, &set);
        let mut second = Vec::new();
        write_stimuli(&loaded, &mut second).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn factorial_report_ignores_item_order(set in stimulus_set(), seed in any::<u64>()) {
        let mut shuffled = set.clone();
        let mut s = seed;
        for i in (1..shuffled.items.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.items.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(check_factorial(&set), check_factorial(&shuffled));
    }
}

#[test]
fn complete_item_passes_factorial_check() {
    let items: Vec<StimulusItem> = Condition::ALL.iter().map(|&c| item(3, c, "key", "cabinets", "is", None)).collect();
    let set = StimulusSet { items, metadata: Default::default() };
    assert!(check_factorial(&set).is_complete());
    let partial = StimulusSet { items: set.items[..6].to_vec(), metadata: Default::default() };
    let report = check_factorial(&partial);
    assert_eq!(report.missing, vec![(3, Condition::ALL[6]), (3, Condition::ALL[7])]);
}

#[test]
fn singular_head_filter() {
    let items = vec![
        item(1, Condition::ALL[0], "key", "doors", "is", Some(HeadNumber::Singular)),
        item(2, Condition::ALL[0], "keys", "doors", "are", Some(HeadNumber::Plural)),
        item(3, Condition::ALL[0], "key", "doors", "is", None),
    ];
    let set = StimulusSet { items, metadata: Default::default() };
    let kept = ItemFilter { head_number: Some(HeadNumber::Singular) }.apply(&set);
    assert_eq!(kept.items.iter().map(|i| i.item_id).collect::<Vec<_>>(), vec![1]);
    assert_eq!(ItemFilter::default().apply(&set), set);
}
