//! Sentences, tokens and code-switching labels.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const USER_PLACEHOLDER: &str = "@USER";
pub const URL_PLACEHOLDER: &str = "HTTPURL";

/// One segmented sentence of a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub tokens: Vec<String>,
}

impl SentenceRecord {
    pub fn new(doc_id: impl Into<String>, index: usize, text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Self {
            doc_id: doc_id.into(),
            index,
            text,
            tokens,
        }
    }

    /// Stable identifier `doc_id#index`.
    pub fn id(&self) -> String {
        format!("{}#{}", self.doc_id, self.index)
    }

    /// Length in unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Why a token carries the `Other` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OtherReason {
    Mixed,
    NamedEntity,
    Neutral,
    Unknown,
}

/// Code-switching status of a single token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CsLabel {
    /// The non-English language of the pair.
    Lang1,
    English,
    Other(OtherReason),
}

impl CsLabel {
    pub const NEUTRAL: CsLabel = CsLabel::Other(OtherReason::Neutral);
    pub const UNKNOWN: CsLabel = CsLabel::Other(OtherReason::Unknown);
    pub const NAMED_ENTITY: CsLabel = CsLabel::Other(OtherReason::NamedEntity);
    pub const MIXED: CsLabel = CsLabel::Other(OtherReason::Mixed);

    pub fn is_other(self) -> bool {
        matches!(self, CsLabel::Other(_))
    }

    pub fn is_language(self) -> bool {
        !self.is_other()
    }

    /// The other language of the pair; `None` for `Other`.
    pub fn opposite(self) -> Option<CsLabel> {
        match self {
            CsLabel::Lang1 => Some(CsLabel::English),
            CsLabel::English => Some(CsLabel::Lang1),
            CsLabel::Other(_) => None,
        }
    }
}

impl fmt::Display for CsLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CsLabel::Lang1 => "lang1",
            CsLabel::English => "english",
            CsLabel::Other(OtherReason::Mixed) => "other:mixed",
            CsLabel::Other(OtherReason::NamedEntity) => "other:named_entity",
            CsLabel::Other(OtherReason::Neutral) => "other:neutral",
            CsLabel::Other(OtherReason::Unknown) => "other:unknown",
        };
        f.write_str(s)
    }
}

impl FromStr for CsLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "lang1" => CsLabel::Lang1,
            "english" => CsLabel::English,
            "other:mixed" => CsLabel::MIXED,
            "other:named_entity" => CsLabel::NAMED_ENTITY,
            "other:neutral" | "other" => CsLabel::NEUTRAL,
            "other:unknown" => CsLabel::UNKNOWN,
            _ => return Err(format!("unknown label {s:?}")),
        })
    }
}

impl Serialize for CsLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CsLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A tokenized sentence where every token carries one label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsSentence {
    #[serde(flatten)]
    pub record: SentenceRecord,
    pub labels: Vec<CsLabel>,
}

impl CsSentence {
    /// Wraps a record with every token labeled `Other(unknown)`.
    pub fn unlabeled(record: SentenceRecord) -> Self {
        let labels = vec![CsLabel::UNKNOWN; record.tokens.len()];
        Self { record, labels }
    }

    pub fn new(record: SentenceRecord, labels: Vec<CsLabel>) -> crate::Result<Self> {
        if record.tokens.len() != labels.len() {
            return Err(crate::Error::validation(format!(
                "labels: {} labels for {} tokens",
                labels.len(),
                record.tokens.len()
            )));
        }
        Ok(Self { record, labels })
    }

    pub fn tokens(&self) -> &[String] {
        &self.record.tokens
    }

    pub fn text(&self) -> &str {
        &self.record.text
    }

    pub fn len(&self) -> usize {
        self.record.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.record.tokens.is_empty()
    }

    pub fn count(&self, label: CsLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// True for tokens that are words: at least one letter and nothing but
/// letters, digits, marks, apostrophes and hyphens.
pub fn is_word(token: &str) -> bool {
    if token == USER_PLACEHOLDER || token == URL_PLACEHOLDER {
        return false;
    }
    let mut has_letter = false;
    for c in token.chars() {
        if c.is_alphabetic() {
            has_letter = true;
        } else if !c.is_numeric() && !matches!(c, '\'' | '’' | '-' | '\u{0300}'..='\u{036f}') {
            return false;
        }
    }
    has_letter
}

/// Unicode uppercase initial. All-caps tokens count as capitalized.
pub fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

pub fn is_han(c: char) -> bool {
    ('\u{4e00}'..='\u{9fff}').contains(&c)
}

pub fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || (c.is_alphabetic()
            && matches!(c, '\u{00c0}'..='\u{024f}' | '\u{1e00}'..='\u{1eff}')
            && c != '×'
            && c != '÷')
}

pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '…' | '“'
                | '”'
                | '‘'
                | '’'
                | '«'
                | '»'
                | '¿'
                | '¡'
                | '–'
                | '—'
                | '，'
                | '。'
                | '！'
                | '？'
                | '、'
                | '：'
                | '；'
                | '（'
                | '）'
                | '「'
                | '」'
                | '《'
                | '》'
        )
}

/// `#tag` or `@name`: the sigil stays attached to the word.
fn is_sigil_word(chunk: &str) -> bool {
    let mut chars = chunk.chars();
    matches!(chars.next(), Some('#' | '@'))
        && chars.next().is_some_and(|c| c.is_alphanumeric() || c == '_')
}

/// Splits Han character runs into words.
pub trait HanSegmenter {
    fn segment(&self, run: &str) -> Vec<String>;
}

/// Fallback: one token per Han character.
#[derive(Debug, Clone, Copy, Default)]
pub struct PerCharacter;

impl HanSegmenter for PerCharacter {
    fn segment(&self, run: &str) -> Vec<String> {
        run.chars().map(String::from).collect()
    }
}

/// Keeps each whitespace-delimited Han run intact, for transcripts that
/// arrive pre-segmented.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeepRuns;

impl HanSegmenter for KeepRuns {
    fn segment(&self, run: &str) -> Vec<String> {
        vec![run.to_string()]
    }
}

/// Whitespace tokenization with edge punctuation split off. Placeholders,
/// hashtags and emoji stay atomic; Han runs go to the per-character
/// fallback.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, &PerCharacter)
}

pub fn tokenize_with(text: &str, han: &dyn HanSegmenter) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        tokenize_chunk(chunk, han, &mut out);
    }
    out
}

fn tokenize_chunk(chunk: &str, han: &dyn HanSegmenter, out: &mut Vec<String>) {
    if chunk == USER_PLACEHOLDER || chunk == URL_PLACEHOLDER {
        out.push(chunk.to_string());
        return;
    }
    if chunk.chars().any(is_han) {
        // alternate Han and non-Han pieces
        let mut piece = String::new();
        let mut piece_is_han = None;
        for c in chunk.chars() {
            let h = is_han(c);
            if piece_is_han.is_some_and(|p| p != h) {
                flush_piece(&piece, piece_is_han == Some(true), han, out);
                piece.clear();
            }
            piece_is_han = Some(h);
            piece.push(c);
        }
        flush_piece(&piece, piece_is_han == Some(true), han, out);
        return;
    }
    split_edges(chunk, out);
}

fn flush_piece(piece: &str, han_piece: bool, han: &dyn HanSegmenter, out: &mut Vec<String>) {
    if piece.is_empty() {
        return;
    }
    if han_piece {
        out.extend(han.segment(piece));
    } else {
        split_edges(piece, out);
    }
}

/// Peels punctuation runs off both edges of a chunk.
fn split_edges(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    let mut end = chars.len();
    let mut leading = Vec::new();
    if !is_sigil_word(chunk) {
        while start < end && is_punct(chars[start]) {
            let c = chars[start];
            let mut run = String::new();
            while start < end && chars[start] == c {
                run.push(c);
                start += 1;
            }
            leading.push(run);
        }
    }
    let mut trailing = Vec::new();
    while end > start && is_punct(chars[end - 1]) {
        let c = chars[end - 1];
        let mut run = String::new();
        while end > start && chars[end - 1] == c {
            run.push(c);
            end -= 1;
        }
        trailing.push(run);
    }
    out.extend(leading);
    if start < end {
        out.push(chars[start..end].iter().collect());
    }
    out.extend(trailing.into_iter().rev());
}

fn attaches_left(token: &str) -> bool {
    token.chars().all(|c| {
        matches!(
            c,
            '.' | ',' | '!' | '?' | ';' | ':' | '…' | ')' | ']' | '}' | '»' | '”' | '’' | '%'
                | '，' | '。' | '！' | '？' | '、' | '：' | '；' | '）' | '」' | '》'
        )
    })
}

fn attaches_right(token: &str) -> bool {
    token
        .chars()
        .all(|c| matches!(c, '(' | '[' | '{' | '«' | '“' | '¿' | '¡' | '（' | '「' | '《'))
}

/// Joins tokens with single spaces, without spaces before closing or after
/// opening punctuation.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut glue_next = true;
    for tok in tokens {
        let tok = tok.as_ref();
        if !glue_next && !attaches_left(tok) {
            out.push(' ');
        }
        out.push_str(tok);
        glue_next = attaches_right(tok);
    }
    out
}

/// Byte ranges of each token in `text`, located left to right. `None` when
/// the tokens are not an in-order sequence of substrings of the text.
pub fn token_spans<S: AsRef<str>>(text: &str, tokens: &[S]) -> Option<Vec<Range<usize>>> {
    let mut cursor = 0;
    let mut spans = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let tok = tok.as_ref();
        let at = text[cursor..].find(tok)? + cursor;
        spans.push(at..at + tok.len());
        cursor = at + tok.len();
    }
    Some(spans)
}

/// Converts a byte range of `text` to a range in unicode scalar values.
pub fn byte_to_char_range(text: &str, bytes: Range<usize>) -> Range<usize> {
    let start = text[..bytes.start].chars().count();
    let len = text[bytes.start..bytes.end].chars().count();
    start..start + len
}
