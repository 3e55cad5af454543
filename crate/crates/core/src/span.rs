//! Character intervals over Unicode text.
//!
//! All spans in this crate are half-open `[start, end)` intervals counted in
//! Unicode scalar values (Rust `char`s), never bytes. Cyrillic and Turkish
//! stimuli would otherwise shift every offset after the first non-ASCII char.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Half-open interval of character positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub const fn empty_at(pos: usize) -> Self {
        Self { start: pos, end: pos }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when both spans share at least one character.
    pub fn overlaps(&self, other: &CharSpan) -> bool {
        !self.is_empty() && !other.is_empty() && self.start < other.end && other.start < self.end
    }

    pub fn contains_span(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.start <= pos && pos < self.end
    }
}

impl From<[usize; 2]> for CharSpan {
    fn from([start, end]: [usize; 2]) -> Self {
        Self { start, end }
    }
}

impl From<CharSpan> for [usize; 2] {
    fn from(span: CharSpan) -> Self {
        [span.start, span.end]
    }
}

impl fmt::Display for CharSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Byte offsets of every character boundary in a string, for repeated
/// char-indexed slicing.
#[derive(Clone, Debug)]
pub struct CharIndex<'a> {
    text: &'a str,
    // boundaries[i] is the byte offset of char i; the last entry is text.len().
    boundaries: Vec<usize>,
}

impl<'a> CharIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut boundaries: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        boundaries.push(text.len());
        Self { text, boundaries }
    }

    pub fn char_len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn slice(&self, span: CharSpan) -> Option<&'a str> {
        if span.start > span.end || span.end > self.char_len() {
            return None;
        }
        Some(&self.text[self.boundaries[span.start]..self.boundaries[span.end]])
    }

    /// Character position of a byte offset. Offsets inside a multi-byte
    /// character resolve to the character that contains them.
    pub fn char_of_byte(&self, byte: usize) -> usize {
        match self.boundaries.binary_search(&byte) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    /// Like [`char_of_byte`](Self::char_of_byte) but rounds up for interval ends.
    pub fn char_of_byte_end(&self, byte: usize) -> usize {
        match self.boundaries.binary_search(&byte) {
            Ok(i) | Err(i) => i.min(self.char_len()),
        }
    }
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

pub fn slice_chars(text: &str, span: CharSpan) -> Option<&str> {
    CharIndex::new(text).slice(span)
}

/// Maximal runs of alphanumeric characters.
pub fn word_spans(text: &str) -> Vec<CharSpan> {
    let mut out = Vec::new();
    let mut start = None;
    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        n = i + 1;
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(CharSpan::new(s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(CharSpan::new(s, n));
    }
    out
}

/// True when `span` fully contains at least one alphanumeric word of `text`.
pub fn covers_whole_word(text: &str, span: CharSpan) -> bool {
    word_spans(text).iter().any(|w| span.contains_span(w))
}

/// Shrinks a span so it neither starts nor ends on whitespace. Returns an
/// empty span at the original start if nothing but whitespace remains.
pub fn trim_span(text: &CharIndex<'_>, span: CharSpan) -> CharSpan {
    let Some(s) = text.slice(span) else {
        return span;
    };
    let chars: Vec<char> = s.chars().collect();
    let lead = chars.iter().take_while(|c| c.is_whitespace()).count();
    if lead == chars.len() {
        return CharSpan::empty_at(span.start);
    }
    let trail = chars.iter().rev().take_while(|c| c.is_whitespace()).count();
    CharSpan::new(span.start + lead, span.end - trail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_by_code_point() {
        let text = "Трасса через поля";
        assert_eq!(slice_chars(text, CharSpan::new(7, 12)), Some("через"));
        assert_eq!(slice_chars(text, CharSpan::new(13, 18)), None);
    }

    #[test]
    fn turkish_dotted_and_dotless_i_are_single_chars() {
        let text = "hocası İzmir'de";
        assert_eq!(char_len(text), 15);
        assert_eq!(slice_chars(text, CharSpan::new(7, 12)), Some("İzmir"));
    }

    #[test]
    fn byte_to_char_round_trip() {
        let idx = CharIndex::new("ağaç a");
        assert_eq!(idx.char_of_byte(0), 0);
        assert_eq!(idx.char_of_byte(3), 2); // after "ağ" (1 + 2 bytes)
        assert_eq!(idx.char_of_byte_end(idx.char_len() + 100), idx.char_len());
    }

    #[test]
    fn word_spans_split_on_apostrophes() {
        let text = "the elves' gardens";
        let words = word_spans(text);
        assert_eq!(words, vec![CharSpan::new(0, 3), CharSpan::new(4, 9), CharSpan::new(11, 18)]);
        assert!(covers_whole_word(text, CharSpan::new(4, 10)));
        assert!(!covers_whole_word(text, CharSpan::new(5, 10)));
    }

    #[test]
    fn overlap_is_half_open() {
        let a = CharSpan::new(0, 3);
        assert!(!a.overlaps(&CharSpan::new(3, 5)));
        assert!(a.overlaps(&CharSpan::new(2, 5)));
        assert!(!a.overlaps(&CharSpan::empty_at(1)));
    }

    #[test]
    fn trims_whitespace() {
        let idx = CharIndex::new(" are ");
        assert_eq!(trim_span(&idx, CharSpan::new(0, 5)), CharSpan::new(1, 4));
        assert_eq!(trim_span(&idx, CharSpan::new(0, 1)), CharSpan::empty_at(0));
    }

    #[test]
    fn serializes_as_pair() {
        let s = serde_json::to_string(&CharSpan::new(4, 9)).unwrap();
        assert_eq!(s, "[4,9]");
        let back: CharSpan = serde_json::from_str(&s).unwrap();
        assert_eq!(back, CharSpan::new(4, 9));
    }
}
