use attraction_core::model::synthetic::{SyntheticModel, SyntheticTokenizer};
use attraction_core::model::{align_spans, Adapter, CausalLm, ModelError};
use attraction_core::span::{slice_chars, word_spans, CharSpan};
use proptest::prelude::*;

fn fuzzed_text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            4 => "[A-Za-z]{1,9}",
            2 => "[а-яА-ЯёЁ]{1,9}",
            2 => "[çğıİöşüÇĞÖŞÜäßé]{1,6}",
            1 => "[0-9]{1,3}",
            1 => "[.,;:!?'\"()-]",
        ],
        1..16,
    )
    .prop_flat_map(|pieces| {
        let n = pieces.len();
        (Just(pieces), prop::collection::vec(prop_oneof![" ", "", "  ", "\t"], n))
    })
    .prop_map(|(pieces, gaps)| pieces.iter().zip(gaps).map(|(p, g)| format!("{p}{g}")).collect::<String>())
}

fn tokenizer() -> impl Strategy<Value = SyntheticTokenizer> {
    (prop::option::of(1usize..5), any::<bool>()).prop_map(|(w, markers)| SyntheticTokenizer {
        max_piece_chars: w,
        bos: markers.then(|| "<s>".to_string()),
        eos: markers.then(|| "</s>".to_string()),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn offsets_rebuild_input_and_words_align(text in fuzzed_text(), tok in tokenizer()) {
        let sentence = tok.tokenize(&text);
        prop_assert!(sentence.validate(&text).is_ok());

        let rebuilt: String = sentence
            .content_indices()
            .map(|i| slice_chars(&text, sentence.offsets[i]).unwrap())
            .collect();
        let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(rebuilt, stripped);
        for i in sentence.content_indices() {
            prop_assert_eq!(slice_chars(&text, sentence.offsets[i]).unwrap(), sentence.tokens[i].as_str());
        }

        let spans = word_spans(&text);
        let aligned = align_spans(&sentence, &text, &spans).unwrap();
        for (span, a) in spans.iter().zip(&aligned) {
            prop_assert!(!a.token_range.is_empty());
            let covered: usize = a.token_range.clone().map(|i| sentence.offsets[i].len()).sum();
            prop_assert_eq!(covered, span.len());
            for i in a.token_range.clone() {
                prop_assert!(!sentence.is_special(i));
                prop_assert!(span.contains_span(&sentence.offsets[i]));
            }
        }
    }

    /// Scoring and tokenization agree on sequence length.
    #[test]
    fn logprob_length_matches_tokens(text in fuzzed_text(), tok in tokenizer()) {
        let model = SyntheticModel::uniform(50, tok);
        let sentence = model.tokenize(&text).unwrap();
        let (_, lp) = model.log_probs(&text).unwrap();
        prop_assert_eq!(lp.len(), sentence.len());
    }
}

#[test]
fn whitespace_region_is_rejected() {
    let tok = SyntheticTokenizer::default();
    let text = "a  b";
    let s = tok.tokenize(text);
    assert!(matches!(align_spans(&s, text, &[CharSpan::new(1, 3)]), Err(ModelError::SpanUnaligned { .. })));
    assert!(matches!(align_spans(&s, text, &[CharSpan::new(2, 9)]), Err(ModelError::SpanOutOfBounds { .. })));
}

#[test]
fn span_inside_a_token_maps_to_that_token() {
    let tok = SyntheticTokenizer::default();
    let text = "the keys";
    let s = tok.tokenize(text);
    let aligned = align_spans(&s, text, &[CharSpan::new(4, 6)]).unwrap();
    assert_eq!(aligned[0].token_range, 1..2);
}

#[test]
fn split_character_may_be_shared_by_neighbouring_tokens() {
    use attraction_core::model::TokenizedSentence;
    // "ş" is two bytes; a byte-level tokenizer can put one in each token.
    let text = "aşb c";
    let mut s = TokenizedSentence::default();
    s.push("a\u{c5}", CharSpan::new(0, 2), false);
    s.push("\u{9f}b", CharSpan::new(1, 3), false);
    s.push("c", CharSpan::new(4, 5), false);
    assert!(s.validate(text).is_ok());
    let aligned = align_spans(&s, text, &[CharSpan::new(0, 3)]).unwrap();
    assert_eq!(aligned[0].token_range, 0..2);

    let mut backwards = TokenizedSentence::default();
    backwards.push("b", CharSpan::new(1, 2), false);
    backwards.push("a", CharSpan::new(0, 1), false);
    assert!(backwards.validate("ab").is_err());
}
