//! Minimal CoNLL-U reader.
//!
//! Only what subject–verb extraction needs is kept: word ids, forms, heads,
//! relations and the surface layout (multiword tokens, `SpaceAfter=No`,
//! `# text`) required to rebuild the sentence string with character spans.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use thiserror::Error;

use crate::span::{CharIndex, CharSpan};

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("cannot read CoNLL-U: {0}")]
    Io(#[from] std::io::Error),
    #[error("sentence {sentence}, line {line}: {message}")]
    Malformed { sentence: String, line: usize, message: String },
}

/// A syntactic word (integer id line).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    pub id: usize,
    pub form: String,
    pub upos: String,
    /// 0 for the root.
    pub head: usize,
    pub deprel: String,
    /// Character span of the surface token realising this word. Words inside
    /// a multiword token share that token's span.
    pub span: CharSpan,
    /// Index into [`Sentence::surface`].
    pub surface_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    /// `# sent_id` when present, otherwise the 1-based sentence ordinal.
    pub id: String,
    pub text: String,
    pub words: Vec<Word>,
    /// Spans of the surface tokens, in order.
    pub surface: Vec<CharSpan>,
}

impl Sentence {
    pub fn word(&self, id: usize) -> Option<&Word> {
        id.checked_sub(1).and_then(|i| self.words.get(i))
    }
}

#[derive(Debug)]
struct RawToken {
    kind: TokenKind,
    form: String,
    upos: String,
    head: usize,
    deprel: String,
    space_after: bool,
    line: usize,
}

#[derive(Debug, PartialEq, Eq)]
enum TokenKind {
    Word(usize),
    Range(usize, usize),
}

/// Reads every sentence of a CoNLL-U stream.
pub fn parse_conllu(reader: impl Read) -> Result<Vec<Sentence>, ConlluError> {
    let mut out = Vec::new();
    read_sentences(reader, |s| {
        out.push(s);
        true
    })?;
    Ok(out)
}

/// Streams sentences to `visit` until it returns `false`.
pub fn read_sentences(reader: impl Read, mut visit: impl FnMut(Sentence) -> bool) -> Result<(), ConlluError> {
    let mut comments: HashMap<String, String> = HashMap::new();
    let mut tokens: Vec<RawToken> = Vec::new();
    let mut ordinal = 0usize;
    let mut start_line = 1;
    let mut lines = BufReader::new(reader).lines();
    let mut line_no = 0;
    loop {
        let line = lines.next().transpose()?;
        line_no += 1;
        let at_end = line.is_none();
        let line = line.unwrap_or_default();
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !tokens.is_empty() {
                ordinal += 1;
                let id = comments.get("sent_id").cloned().unwrap_or_else(|| ordinal.to_string());
                let sentence =
                    assemble(id, comments.get("text").map(String::as_str), std::mem::take(&mut tokens), start_line)?;
                if !visit(sentence) {
                    return Ok(());
                }
            }
            comments.clear();
            if at_end {
                return Ok(());
            }
            start_line = line_no + 1;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                comments.insert(key.trim().to_string(), value.trim().to_string());
            }
            continue;
        }
        let sentence_id = || comments.get("sent_id").cloned().unwrap_or_else(|| (ordinal + 1).to_string());
        let malformed = |message: String| ConlluError::Malformed { sentence: sentence_id(), line: line_no, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(malformed(format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        let id = cols[0];
        if id.contains('.') {
            continue; // empty node
        }
        let kind = if let Some((a, b)) = id.split_once('-') {
            match (a.parse(), b.parse()) {
                (Ok(a), Ok(b)) if a <= b => TokenKind::Range(a, b),
                _ => return Err(malformed(format!("bad range id {id:?}"))),
            }
        } else {
            TokenKind::Word(id.parse().map_err(|_| malformed(format!("bad word id {id:?}")))?)
        };
        let head = match (&kind, cols[6]) {
            (TokenKind::Range(..), _) | (_, "_") => 0,
            (_, h) => h.parse().map_err(|_| malformed(format!("bad head {h:?}")))?,
        };
        let space_after = !cols[9].split('|').any(|m| m == "SpaceAfter=No");
        tokens.push(RawToken {
            kind,
            form: cols[1].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
            space_after,
            line: line_no,
        });
    }
}

fn assemble(
    id: String,
    text_comment: Option<&str>,
    tokens: Vec<RawToken>,
    start_line: usize,
) -> Result<Sentence, ConlluError> {
    let malformed = |line: usize, message: String| ConlluError::Malformed { sentence: id.clone(), line, message };

    // Surface tokens: ranges plus the words they do not cover.
    let mut surface_forms: Vec<(&str, bool)> = Vec::new();
    let mut surface_of_word: Vec<usize> = Vec::new();
    let mut words: Vec<&RawToken> = Vec::new();
    let mut covered_until = 0;
    for tok in &tokens {
        match tok.kind {
            TokenKind::Range(a, b) => {
                if a != words.len() + 1 {
                    return Err(malformed(tok.line, format!("range {a}-{b} out of sequence")));
                }
                surface_forms.push((&tok.form, tok.space_after));
                covered_until = b;
            }
            TokenKind::Word(n) => {
                if n != words.len() + 1 {
                    return Err(malformed(tok.line, format!("word id {n} out of sequence")));
                }
                if n > covered_until {
                    surface_forms.push((&tok.form, tok.space_after));
                }
                surface_of_word.push(surface_forms.len() - 1);
                words.push(tok);
            }
        }
    }
    if words.is_empty() {
        return Err(malformed(start_line, "sentence has no words".into()));
    }

    let (text, surface) = match text_comment.and_then(|t| locate(t, &surface_forms)) {
        Some(spans) => (text_comment.unwrap_or_default().to_string(), spans),
        None => rebuild(&surface_forms),
    };

    let mut out = Vec::with_capacity(words.len());
    for (i, w) in words.iter().enumerate() {
        if w.head > words.len() {
            return Err(malformed(w.line, format!("head {} beyond sentence length {}", w.head, words.len())));
        }
        out.push(Word {
            id: i + 1,
            form: w.form.clone(),
            upos: w.upos.clone(),
            head: w.head,
            deprel: w.deprel.clone(),
            span: surface[surface_of_word[i]],
            surface_index: surface_of_word[i],
        });
    }
    Ok(Sentence { id, text, words: out, surface })
}

/// Finds each surface form in order inside `text`.
fn locate(text: &str, forms: &[(&str, bool)]) -> Option<Vec<CharSpan>> {
    let index = CharIndex::new(text);
    let mut byte = 0;
    let mut spans = Vec::with_capacity(forms.len());
    for (form, _) in forms {
        let rel = text[byte..].find(form)?;
        // Only whitespace may be skipped between tokens.
        if !text[byte..byte + rel].chars().all(char::is_whitespace) {
            return None;
        }
        let start = byte + rel;
        let end = start + form.len();
        spans.push(CharSpan::new(index.char_of_byte(start), index.char_of_byte(end)));
        byte = end;
    }
    Some(spans)
}

fn rebuild(forms: &[(&str, bool)]) -> (String, Vec<CharSpan>) {
    let mut text = String::new();
    let mut spans = Vec::with_capacity(forms.len());
    let mut pos = 0;
    for (i, (form, space_after)) in forms.iter().enumerate() {
        let n = form.chars().count();
        spans.push(CharSpan::new(pos, pos + n));
        text.push_str(form);
        pos += n;
        if *space_after && i + 1 < forms.len() {
            text.push(' ');
            pos += 1;
        }
    }
    (text, spans)
}
