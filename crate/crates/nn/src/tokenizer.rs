use std::path::Path;

use attraction_core::model::{ModelError, TokenizedSentence};
use attraction_core::span::CharSpan;
use tokenizers::Tokenizer;

/// A `tokenizer.json` tokenizer producing character offsets.
pub struct HfTokenizer {
    inner: Tokenizer,
}

impl HfTokenizer {
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let inner =
            Tokenizer::from_file(path).map_err(|e| ModelError::Tokenizer(format!("{}: {e}", path.display())))?;
        Ok(Self { inner })
    }

    pub fn token_to_id(&self, token: &str) -> Option<u32> {
        self.inner.token_to_id(token)
    }

    pub fn id_to_token(&self, id: u32) -> Option<String> {
        self.inner.id_to_token(id)
    }

    /// Token ids and the matching sentence. Offsets are trimmed of
    /// surrounding whitespace; whitespace-only pieces and special tokens get
    /// empty offsets.
    pub fn encode(&self, text: &str, add_special_tokens: bool) -> Result<(Vec<u32>, TokenizedSentence), ModelError> {
        let enc = self
            .inner
            .encode_char_offsets(text, add_special_tokens)
            .map_err(|e| ModelError::Tokenizer(e.to_string()))?;
        let chars: Vec<char> = text.chars().collect();
        let mut sentence = TokenizedSentence::default();
        for ((token, &(start, end)), &special) in
            enc.get_tokens().iter().zip(enc.get_offsets()).zip(enc.get_special_tokens_mask())
        {
            let special = special == 1;
            let offset = if special { CharSpan::empty_at(start.min(chars.len())) } else { trim(&chars, start, end) };
            sentence.push(token.clone(), offset, special);
        }
        Ok((enc.get_ids().to_vec(), sentence))
    }
}

fn trim(chars: &[char], start: usize, end: usize) -> CharSpan {
    let end = end.min(chars.len());
    let mut s = start.min(end);
    let mut e = end;
    while s < e && chars[s].is_whitespace() {
        s += 1;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    if s == e {
        CharSpan::empty_at(s)
    } else {
        CharSpan::new(s, e)
    }
}
