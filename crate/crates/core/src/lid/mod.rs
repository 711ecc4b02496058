//! Token-level code-switching labels and the label-based admission gates.

mod lexicon;
mod mono;

pub use lexicon::{load_lexicons, LexiconSet, Manifest, PairManifest};
pub use mono::{HttpMonoLid, LidPrediction, MonoLidBackend, TrigramLid};

use crate::pairgen::find_switch_points;
use crate::sentence::{
    is_capitalized, is_han, is_latin_letter, is_word, CsLabel, CsSentence, SentenceRecord,
};
use crate::Result;

pub const MAX_UNKNOWN_FRACTION: f64 = 0.5;
pub const NE_CAPITALIZED_FRACTION: f64 = 0.75;

/// Wordlist lookup: one list → that language, both lists or neither →
/// `Other(unknown)`, non-words → `Other(neutral)`.
pub fn tag_tokens(sentence: SentenceRecord, lexicons: &LexiconSet) -> CsSentence {
    let labels = sentence
        .tokens
        .iter()
        .map(|tok| {
            if !is_word(tok) {
                return CsLabel::NEUTRAL;
            }
            let folded = tok.to_lowercase();
            match (lexicons.in_lang1(&folded), lexicons.in_english(&folded)) {
                (true, false) => CsLabel::Lang1,
                (false, true) => CsLabel::English,
                _ => CsLabel::UNKNOWN,
            }
        })
        .collect();
    CsSentence {
        record: sentence,
        labels,
    }
}

/// Lang1 tokens borrowed from English, and English tokens borrowed from
/// Lang1, become `Other(neutral)`.
pub fn reassign_borrowings(mut cs: CsSentence, lexicons: &LexiconSet) -> CsSentence {
    for (tok, label) in cs.record.tokens.iter().zip(cs.labels.iter_mut()) {
        let folded = tok.to_lowercase();
        let borrowed = match label {
            CsLabel::Lang1 => lexicons.borrowings_from_english.contains(&folded),
            CsLabel::English => lexicons.borrowings_to_english.contains(&folded),
            CsLabel::Other(_) => false,
        };
        if borrowed {
            *label = CsLabel::NEUTRAL;
        }
    }
    cs
}

/// Marks named-entity runs with the default 75% threshold.
pub fn mark_named_entity_runs(cs: CsSentence) -> CsSentence {
    mark_named_entity_runs_with(cs, NE_CAPITALIZED_FRACTION)
}

/// Within each stretch of consecutive word tokens, every token covered by a
/// window of at least two tokens whose capitalized share exceeds
/// `threshold` becomes `Other(named_entity)`.
pub fn mark_named_entity_runs_with(mut cs: CsSentence, threshold: f64) -> CsSentence {
    let tokens = &cs.record.tokens;
    let n = tokens.len();
    let mut mark = vec![false; n];
    let mut i = 0;
    while i < n {
        if !is_word(&tokens[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && is_word(&tokens[i]) {
            i += 1;
        }
        let caps: Vec<usize> = tokens[start..i]
            .iter()
            .map(|t| usize::from(is_capitalized(t)))
            .collect();
        for a in 0..caps.len() {
            let mut capitalized = caps[a];
            for b in a + 1..caps.len() {
                capitalized += caps[b];
                let len = b - a + 1;
                if capitalized as f64 > threshold * len as f64 {
                    mark[start + a..=start + b].iter_mut().for_each(|m| *m = true);
                }
            }
        }
    }
    for (label, m) in cs.labels.iter_mut().zip(mark) {
        if m {
            *label = CsLabel::NAMED_ENTITY;
        }
    }
    cs
}

/// `true` iff unknown words make up fewer than half of the word tokens.
/// Sentences without word tokens are rejected.
pub fn unknown_gate(cs: &CsSentence) -> bool {
    unknown_gate_with(cs, MAX_UNKNOWN_FRACTION)
}

pub fn unknown_gate_with(cs: &CsSentence, max_fraction: f64) -> bool {
    let words = cs.tokens().iter().filter(|t| is_word(t)).count();
    if words == 0 {
        return false;
    }
    let unknown = cs.count(CsLabel::UNKNOWN);
    (unknown as f64) < max_fraction * words as f64
}

/// Rejects sentences containing a word with a guarded character (umlauts,
/// say) that is missing from the Lang1 wordlist. Always `true` when the
/// lexicon has no guard configured.
pub fn diacritic_gate(cs: &CsSentence, lexicons: &LexiconSet) -> bool {
    if lexicons.diacritic_guard.is_empty() {
        return true;
    }
    !cs.tokens().iter().any(|t| {
        is_word(t)
            && t.chars().any(|c| lexicons.diacritic_guard.contains(&c))
            && !lexicons.in_lang1(&t.to_lowercase())
    })
}

/// Character-class labeling for Chinese–English: Han-only tokens are Lang1,
/// Latin-only words English, tokens mixing the two `Other(mixed)`, the rest
/// `Other(neutral)`.
pub fn han_lid(sentence: SentenceRecord) -> CsSentence {
    let labels = sentence
        .tokens
        .iter()
        .map(|tok| {
            let han = tok.chars().filter(|&c| is_han(c)).count();
            let latin = tok.chars().filter(|&c| is_latin_letter(c)).count();
            let total = tok.chars().count();
            if han > 0 && latin > 0 {
                CsLabel::MIXED
            } else if han > 0 {
                if han == total {
                    CsLabel::Lang1
                } else if tok.chars().any(|c| !is_han(c) && c.is_alphanumeric()) {
                    CsLabel::MIXED
                } else {
                    CsLabel::NEUTRAL
                }
            } else if latin > 0 && is_word(tok) && tok.chars().all(|c| !c.is_alphabetic() || is_latin_letter(c)) {
                CsLabel::English
            } else {
                CsLabel::NEUTRAL
            }
        })
        .collect();
    CsSentence {
        record: sentence,
        labels,
    }
}

/// Space-joined Lang1 tokens, in order.
pub fn lang1_string(cs: &CsSentence) -> String {
    cs.tokens()
        .iter()
        .zip(&cs.labels)
        .filter(|(_, &l)| l == CsLabel::Lang1)
        .map(|(t, _)| t.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Submits the Lang1 material to a monolingual identifier and keeps the
/// sentence iff the prediction matches the platform's claim.
pub fn consistency_check(
    cs: &CsSentence,
    backend: &dyn MonoLidBackend,
    claimed_language: &str,
) -> Result<bool> {
    let text = lang1_string(cs);
    if text.is_empty() {
        return Ok(false);
    }
    let prediction = backend.detect(&text)?;
    Ok(prediction.language == claimed_language)
}

fn has_run(labels: &[CsLabel], label: CsLabel, min_len: usize) -> bool {
    labels
        .split(|&l| l != label)
        .any(|run| run.len() >= min_len)
}

/// At least one switch point, and at least one run of two or more adjacent
/// tokens in each language.
pub fn cs_qualification(cs: &CsSentence) -> bool {
    !find_switch_points(cs).is_empty()
        && has_run(&cs.labels, CsLabel::Lang1, 2)
        && has_run(&cs.labels, CsLabel::English, 2)
}
