//! Minimal-pair generation.
//!
//! A minimal pair couples an observed code-switched sentence with a variant
//! in which one word adjacent to a switch point has been replaced by its
//! aligned translation, moving the switch point by one word. The variant
//! must keep the number of switch points, must not put a noun next to the
//! moved switch point and must not split a multi-word expression.

mod candidates;
mod corpus;

pub use candidates::{
    changed_word_pos, enumerate_candidates, is_integrative, projected_pos, MweSpans,
};
pub use corpus::{
    assemble_corpus, generate, sentence_candidates, GenerationConfig, GenerationOutcome,
    SentenceCandidates,
};

use serde::{Deserialize, Serialize};

use crate::sentence::{
    byte_to_char_range, detokenize, is_word, token_spans, CsLabel, CsSentence, SentenceRecord,
};
use crate::{Error, Result, Upos};

/// Boundary between two language-labeled tokens, with `Other` tokens
/// skipped over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchPoint {
    pub left: usize,
    pub right: usize,
    /// `right == left + 1`: nothing sits between the two tokens.
    pub adjacent: bool,
}

pub fn find_switch_points(cs: &CsSentence) -> Vec<SwitchPoint> {
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for (i, &label) in cs.labels.iter().enumerate() {
        if label.is_other() {
            continue;
        }
        if let Some(p) = prev {
            if cs.labels[p] != label {
                out.push(SwitchPoint {
                    left: p,
                    right: i,
                    adjacent: i == p + 1,
                });
            }
        }
        prev = Some(i);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchSide {
    Left,
    Right,
}

/// Replacement of one CS word by its aligned translation span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manipulation {
    pub switch_point: SwitchPoint,
    pub side: SwitchSide,
    /// `[start, end)` token range of the observed sentence.
    pub removed: (usize, usize),
    pub inserted: Vec<String>,
    pub inserted_pos: Vec<Upos>,
    pub inserted_language: CsLabel,
    /// `[start, end)` token range of the translation the words came from.
    pub translation_span: (usize, usize),
    /// Alignment links `(cs_index, trans_index)` that licensed the insertion.
    pub links: Vec<(usize, usize)>,
}

/// Sentence after a manipulation, with the character ranges of the
/// differing material in both sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realized {
    pub sentence: CsSentence,
    pub observed_span: (usize, usize),
    pub manipulated_span: (usize, usize),
}

/// Applies a manipulation, regenerating the text by splicing the inserted
/// words into the original string.
pub fn apply_manipulation(cs: &CsSentence, m: &Manipulation) -> Result<CsSentence> {
    realize(cs, m).map(|r| r.sentence)
}

pub fn realize(cs: &CsSentence, m: &Manipulation) -> Result<Realized> {
    let (start, end) = m.removed;
    if start >= end && m.inserted.is_empty() {
        return Err(Error::validation("manipulation: identity (nothing removed or inserted)"));
    }
    if start >= end || end > cs.len() {
        return Err(Error::validation(format!(
            "manipulation: removed span [{start},{end}) invalid for {} tokens",
            cs.len()
        )));
    }
    if m.inserted.is_empty() {
        return Err(Error::validation("manipulation: nothing inserted"));
    }
    if m.inserted_language.is_other()
        || cs.labels[start..end].contains(&m.inserted_language)
    {
        return Err(Error::validation(format!(
            "manipulation: inserted language {} matches removed tokens",
            m.inserted_language
        )));
    }

    let mut inserted = m.inserted.clone();
    let sentence_initial = !cs.tokens()[..start].iter().any(|t| is_word(t));
    if sentence_initial {
        let first = &inserted[0];
        let mut chars = first.chars();
        if let Some(c) = chars.next() {
            inserted[0] = c.to_uppercase().chain(chars).collect();
        }
    }

    let mut tokens = cs.tokens()[..start].to_vec();
    tokens.extend(inserted.iter().cloned());
    tokens.extend_from_slice(&cs.tokens()[end..]);
    let mut labels = cs.labels[..start].to_vec();
    labels.extend(std::iter::repeat_n(m.inserted_language, inserted.len()));
    labels.extend_from_slice(&cs.labels[end..]);

    let insert_text = detokenize(&inserted);
    let text = cs.text();
    let (new_text, observed_span, manipulated_span) = match token_spans(text, cs.tokens()) {
        Some(spans) => {
            let b0 = spans[start].start;
            let b1 = spans[end - 1].end;
            let new_text = format!("{}{}{}", &text[..b0], insert_text, &text[b1..]);
            let obs = byte_to_char_range(text, b0..b1);
            let len = insert_text.chars().count();
            ((new_text), (obs.start, obs.end), (obs.start, obs.start + len))
        }
        None => {
            let new_text = detokenize(&tokens);
            let obs = differing_chars(&detokenize(cs.tokens()), &new_text);
            (new_text, obs.0, obs.1)
        }
    };

    Ok(Realized {
        sentence: CsSentence {
            record: SentenceRecord {
                doc_id: cs.record.doc_id.clone(),
                index: cs.record.index,
                text: new_text,
                tokens,
            },
            labels,
        },
        observed_span,
        manipulated_span,
    })
}

/// Character ranges where two strings differ after removing their common
/// prefix and suffix.
fn differing_chars(a: &str, b: &str) -> ((usize, usize), (usize, usize)) {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let max_suffix = a.len().min(b.len()) - prefix;
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take(max_suffix)
        .take_while(|(x, y)| x == y)
        .count();
    ((prefix, a.len() - suffix), (prefix, b.len() - suffix))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub doc_id: String,
    pub sentence_index: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalPair {
    pub pair_id: String,
    pub lang_pair: String,
    pub observed: CsSentence,
    pub manipulated: CsSentence,
    pub manipulation: Manipulation,
    pub changed_word_pos: Option<Upos>,
    /// The changed word is aligned to exactly one identical word in its own
    /// language's translation, so `changed_word_pos` is trustworthy.
    pub pos_eligible: bool,
    /// Case-folded `(removed, inserted)` surface forms.
    pub lexical_difference: (String, String),
    /// Character range of the differing material in the observed text.
    pub observed_span: (usize, usize),
    /// Character range of the differing material in the manipulated text.
    pub manipulated_span: (usize, usize),
    pub provenance: Provenance,
}

pub fn lexical_difference(cs: &CsSentence, m: &Manipulation) -> (String, String) {
    let removed = cs.tokens()[m.removed.0..m.removed.1].join(" ").to_lowercase();
    let inserted = m.inserted.join(" ").to_lowercase();
    (removed, inserted)
}

/// `true` iff both sentences have the same number of switch points.
pub fn switch_count_gate(pair: &MinimalPair) -> bool {
    find_switch_points(&pair.observed).len() == find_switch_points(&pair.manipulated).len()
}
