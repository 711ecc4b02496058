//! Normalisation, sentence segmentation and the admission gates applied
//! before language identification.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::backend::{ClientConfig, JsonEndpoint};
use crate::sentence::{is_han, tokenize_with, HanSegmenter, PerCharacter, SentenceRecord};
use crate::{Error, Result};

pub const MAX_CHARS: usize = 200;
pub const MIN_TOKENS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Social,
    Spoken,
}

/// One input document (a post or a transcript turn).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    /// Language the upstream platform assigned to the whole document.
    pub lang_claim: String,
    pub domain: Domain,
}

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S+").expect("valid regex"));
// A mention must not be glued to a preceding word character (e-mail
// addresses); runs separated only by whitespace collapse.
static MENTIONS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?P<pre>^|[^\w@])@\w+(?:\s+@\w+)*").expect("valid regex")
});

/// Replaces URLs with `HTTPURL` and every run of mentions with one `@USER`.
pub fn normalize(raw_text: &str) -> String {
    let no_urls = URL.replace_all(raw_text, "HTTPURL");
    MENTIONS
        .replace_all(&no_urls, "${pre}@USER")
        .into_owned()
}

/// Case-folded lexicon of obscene surface forms.
#[derive(Debug, Clone, Default)]
pub struct ObsceneLexicon(HashSet<String>);

impl ObsceneLexicon {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        Self(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(&token.to_lowercase())
    }
}

/// `false` iff any token is in the lexicon.
pub fn obscenity_gate<S: AsRef<str>>(tokens: &[S], lexicon: &ObsceneLexicon) -> bool {
    !tokens.iter().any(|t| lexicon.contains(t.as_ref()))
}

/// `true` iff the sentence has at most 200 characters and at least 6 tokens.
pub fn length_gate(sentence: &SentenceRecord) -> bool {
    length_gate_with(sentence, MAX_CHARS, MIN_TOKENS)
}

pub fn length_gate_with(sentence: &SentenceRecord, max_chars: usize, min_tokens: usize) -> bool {
    sentence.char_len() <= max_chars && sentence.tokens.len() >= min_tokens
}

/// Produces sentence boundaries as `[start, end)` character offsets.
pub trait SegmentationBackend: Send + Sync {
    fn name(&self) -> String;
    fn boundaries(&self, text: &str) -> Result<Vec<(usize, usize)>>;
}

/// Splits after `.`, `!`, `?` or `…` (runs thereof) when followed by
/// whitespace and then an uppercase letter or a Han character.
#[derive(Debug, Clone, Copy, Default)]
pub struct FallbackSegmenter;

impl SegmentationBackend for FallbackSegmenter {
    fn name(&self) -> String {
        "fallback".into()
    }

    fn boundaries(&self, text: &str) -> Result<Vec<(usize, usize)>> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            if matches!(chars[i], '.' | '!' | '?' | '…') {
                let mut end = i + 1;
                while end < chars.len() && matches!(chars[end], '.' | '!' | '?' | '…') {
                    end += 1;
                }
                let mut next = end;
                while next < chars.len() && chars[next].is_whitespace() {
                    next += 1;
                }
                if next > end
                    && next < chars.len()
                    && (chars[next].is_uppercase() || is_han(chars[next]))
                {
                    out.push((start, end));
                    start = end;
                }
                i = end;
            } else {
                i += 1;
            }
        }
        if start < chars.len() {
            out.push((start, chars.len()));
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct SegmentRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct SegmentResponse {
    char_offsets: Vec<(usize, usize)>,
}

/// Remote segmenter: `{text}` → `{char_offsets: [[start, end], ...]}`.
pub struct HttpSegmenter {
    endpoint: JsonEndpoint,
}

impl HttpSegmenter {
    pub fn new(url: impl Into<String>, config: ClientConfig) -> Self {
        Self {
            endpoint: JsonEndpoint::new(url, config),
        }
    }
}

impl SegmentationBackend for HttpSegmenter {
    fn name(&self) -> String {
        self.endpoint.url().to_string()
    }

    fn boundaries(&self, text: &str) -> Result<Vec<(usize, usize)>> {
        let resp: SegmentResponse = self.endpoint.post(&SegmentRequest { text })?;
        Ok(resp.char_offsets)
    }
}

/// Segments a document into sentences. Each sentence is the backend's
/// character range with surrounding whitespace trimmed; empty ranges are
/// dropped.
pub fn segment(
    doc_id: &str,
    document_text: &str,
    backend: &dyn SegmentationBackend,
) -> Result<Vec<SentenceRecord>> {
    segment_with(doc_id, document_text, backend, &PerCharacter)
}

pub fn segment_with(
    doc_id: &str,
    document_text: &str,
    backend: &dyn SegmentationBackend,
    han: &dyn HanSegmenter,
) -> Result<Vec<SentenceRecord>> {
    let offsets = backend.boundaries(document_text)?;
    // char index -> byte index
    let mut byte_at: Vec<usize> = document_text.char_indices().map(|(b, _)| b).collect();
    byte_at.push(document_text.len());
    let n_chars = byte_at.len() - 1;

    let mut out = Vec::new();
    let mut prev_end = 0;
    for (k, &(start, end)) in offsets.iter().enumerate() {
        if start > end || end > n_chars || start < prev_end {
            return Err(Error::backend(
                backend.name(),
                format!("boundary {k} [{start},{end}) invalid for a {n_chars}-char text"),
            ));
        }
        prev_end = end;
        let text = document_text[byte_at[start]..byte_at[end]].trim();
        if text.is_empty() {
            continue;
        }
        let tokens = tokenize_with(text, han);
        out.push(SentenceRecord {
            doc_id: doc_id.to_string(),
            index: out.len(),
            text: text.to_string(),
            tokens,
        });
    }
    Ok(out)
}
