use attraction_core::model::synthetic::{BigramTable, SyntheticModel, SyntheticTokenizer};
use attraction_core::model::{tokenize_with_alignment, CausalLm};
use attraction_core::span::CharSpan;
use attraction_core::surprisal::{region_surprisal, Unit};
use proptest::prelude::*;

fn bos() -> SyntheticTokenizer {
    SyntheticTokenizer { bos: Some("<s>".into()), ..Default::default() }
}

fn hand_table(p_are: f64) -> BigramTable {
    let mut t = BigramTable::default();
    t.set("<s>", "The", 0.5);
    t.set("The", "keys", 0.2);
    t.set("keys", "are", p_are);
    t.set("are", "old", 0.4);
    t
}

#[test]
fn bigram_region_matches_hand_table() {
    let model = SyntheticModel::bigram(hand_table(0.3), bos());
    let text = "The keys are old";
    let (sentence, lp) = model.log_probs(text).unwrap();
    let (_, align) = tokenize_with_alignment(&model, text, &[CharSpan::new(9, 12), CharSpan::new(0, 16)]).unwrap();
    assert_eq!(lp.len(), sentence.len());

    // -log2 0.3
    let are = region_surprisal(&lp, &align[0].token_range, Unit::Bits).unwrap();
    assert!((are.value - 1.736_965_594_166_206).abs() < 1e-6);
    // -log2(0.5 * 0.2 * 0.3 * 0.4) = -log2 0.012
    let all = region_surprisal(&lp, &align[1].token_range, Unit::Bits).unwrap();
    assert!((all.value - 6.380_821_783_940_931).abs() < 1e-6);
    let nats = region_surprisal(&lp, &align[0].token_range, Unit::Nats).unwrap();
    assert!((nats.value - 1.203_972_804_325_936).abs() < 1e-6);
}

#[test]
fn lower_probability_raises_surprisal() {
    let text = "The keys are old";
    let region = CharSpan::new(9, 12);
    let mut last = 0.0;
    for p in [0.9, 0.5, 0.3, 0.1, 0.01] {
        let model = SyntheticModel::bigram(hand_table(p), bos());
        let (_, align) = tokenize_with_alignment(&model, text, &[region]).unwrap();
        let (_, lp) = model.log_probs(text).unwrap();
        let s = region_surprisal(&lp, &align[0].token_range, Unit::Bits).unwrap().value;
        assert!(s > last, "p = {p}");
        last = s;
    }
}

#[test]
fn repeated_calls_are_identical() {
    let model = SyntheticModel::bigram(hand_table(0.3), bos());
    assert_eq!(model.log_probs("The keys are old").unwrap(), model.log_probs("The keys are old").unwrap());
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-zçğıöşüжёщ]{1,12}", 2..8)
}

proptest! {
    /// A region's surprisal is exactly the sum of its single-token parts.
    #[test]
    fn subword_additivity(words in sentence(), width in 1usize..5, target in 0usize..8) {
        let tokenizer = SyntheticTokenizer { max_piece_chars: Some(width), bos: Some("<s>".into()), eos: None };
        let text = words.join(" ");
        let table = BigramTable::from_corpus(&tokenizer, &[text.as_str(), "zz zz zz"]);
        let model = SyntheticModel::bigram(table, tokenizer);
        let target = target % words.len();
        let start: usize = words[..target].iter().map(|w| w.chars().count() + 1).sum();
        let span = CharSpan::new(start, start + words[target].chars().count());
        let (_, align) = tokenize_with_alignment(&model, &text, &[span]).unwrap();
        let (_, lp) = model.log_probs(&text).unwrap();
        let range = align[0].token_range.clone();

        let whole = region_surprisal(&lp, &range, Unit::Nats).unwrap().value;
        let parts = range
            .clone()
            .map(|i| region_surprisal(&lp, &(i..i + 1), Unit::Nats).unwrap().value)
            .fold(0.0, |acc, v| acc + v);
        prop_assert_eq!(whole, parts);

        let bits = region_surprisal(&lp, &range, Unit::Bits).unwrap().value;
        prop_assert!((bits - whole / std::f64::consts::LN_2).abs() < 1e-12);
    }
}
