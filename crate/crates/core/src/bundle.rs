//! Per-sentence annotation bundles: the two monolingual translations of a
//! code-switched sentence with word alignments, POS tags, dependency parses
//! and named-entity spans, all produced offline by external tools.
//!
//! Record layout (one JSON object per line, `schema: 1`):
//!
//! ```text
//! { "schema": 1, "id": "doc#0", "lang_pair": "de-en",
//!   "cs": { "doc_id", "index", "text", "tokens": [..], "labels": [..] },
//!   "translation_l1": { "text", "tokens": [..] },
//!   "translation_en": { "text", "tokens": [..] },
//!   "align_l1": [[cs_index, trans_index], ..],   "align_en": [..],
//!   "pos_l1": ["DET", ..],                       "pos_en": [..],
//!   "deps_l1": [{"head": null|int, "dep": int, "rel": str}, ..],  "deps_en": [..],
//!   "ner_l1": [[start, end], ..],                "ner_en": [..] }
//! ```

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::levenshtein::levenshtein;
use crate::sentence::{CsLabel, CsSentence};
use crate::{Error, Result, Upos};

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_TRANSLATION_DISTANCE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationText {
    pub text: String,
    pub tokens: Vec<String>,
}

/// One dependency arc; `head: None` attaches to the virtual root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepEdge {
    pub head: Option<usize>,
    pub dep: usize,
    pub rel: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationBundle {
    pub schema: u32,
    pub id: String,
    pub lang_pair: String,
    pub cs: CsSentence,
    pub translation_l1: TranslationText,
    pub translation_en: TranslationText,
    pub align_l1: Vec<(usize, usize)>,
    pub align_en: Vec<(usize, usize)>,
    pub pos_l1: Vec<Upos>,
    pub pos_en: Vec<Upos>,
    pub deps_l1: Vec<DepEdge>,
    pub deps_en: Vec<DepEdge>,
    #[serde(default)]
    pub ner_l1: Vec<(usize, usize)>,
    #[serde(default)]
    pub ner_en: Vec<(usize, usize)>,
}

/// Which monolingual translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    L1,
    En,
}

impl Side {
    pub fn of(label: CsLabel) -> Option<Side> {
        match label {
            CsLabel::Lang1 => Some(Side::L1),
            CsLabel::English => Some(Side::En),
            CsLabel::Other(_) => None,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Side::L1 => "l1",
            Side::En => "en",
        }
    }

    pub fn label(self) -> CsLabel {
        match self {
            Side::L1 => CsLabel::Lang1,
            Side::En => CsLabel::English,
        }
    }
}

/// Borrowed view of one translation and its annotations.
#[derive(Debug, Clone, Copy)]
pub struct TranslationView<'a> {
    pub side: Side,
    pub text: &'a str,
    pub tokens: &'a [String],
    pub align: &'a [(usize, usize)],
    pub pos: &'a [Upos],
    pub deps: &'a [DepEdge],
    pub ner: &'a [(usize, usize)],
}

impl TranslationView<'_> {
    /// Sorted, deduplicated translation indices linked to a CS token.
    pub fn aligned_to(&self, cs_index: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .align
            .iter()
            .filter(|&&(c, _)| c == cs_index)
            .map(|&(_, t)| t)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// CS indices linked to a translation token.
    pub fn aligned_from(&self, trans_index: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .align
            .iter()
            .filter(|&&(_, t)| t == trans_index)
            .map(|&(c, _)| c)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_aligned(&self, trans_index: usize) -> bool {
        self.align.iter().any(|&(_, t)| t == trans_index)
    }

    /// True when the two translation tokens share a dependency arc.
    pub fn linked(&self, a: usize, b: usize) -> bool {
        self.deps.iter().any(|e| {
            e.head.is_some_and(|h| (h == a && e.dep == b) || (h == b && e.dep == a))
        })
    }

    pub fn in_ner(&self, trans_index: usize) -> bool {
        self.ner
            .iter()
            .any(|&(s, e)| (s..e).contains(&trans_index))
    }
}

impl AnnotationBundle {
    pub fn view(&self, side: Side) -> TranslationView<'_> {
        match side {
            Side::L1 => TranslationView {
                side,
                text: &self.translation_l1.text,
                tokens: &self.translation_l1.tokens,
                align: &self.align_l1,
                pos: &self.pos_l1,
                deps: &self.deps_l1,
                ner: &self.ner_l1,
            },
            Side::En => TranslationView {
                side,
                text: &self.translation_en.text,
                tokens: &self.translation_en.tokens,
                align: &self.align_en,
                pos: &self.pos_en,
                deps: &self.deps_en,
                ner: &self.ner_en,
            },
        }
    }

    pub fn views(&self) -> [TranslationView<'_>; 2] {
        [self.view(Side::L1), self.view(Side::En)]
    }

    pub fn doc_id(&self) -> &str {
        &self.cs.record.doc_id
    }
}

fn check_tree(field: &str, deps: &[DepEdge], n: usize) -> Result<()> {
    let mut head_of: Vec<Option<Option<usize>>> = vec![None; n];
    for (k, e) in deps.iter().enumerate() {
        if e.dep >= n {
            return Err(Error::validation(format!(
                "{field} edge {k}: dependent {} out of range",
                e.dep
            )));
        }
        if let Some(h) = e.head {
            if h >= n {
                return Err(Error::validation(format!(
                    "{field} edge {k}: head {h} out of range"
                )));
            }
        }
        if head_of[e.dep].is_some() {
            return Err(Error::validation(format!("{field}: not a tree")));
        }
        head_of[e.dep] = Some(e.head);
    }
    if head_of.iter().any(Option::is_none) {
        return Err(Error::validation(format!("{field}: not a tree")));
    }
    // every token must reach the root without revisiting a node
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while let Some(Some(h)) = head_of[cur] {
            cur = h;
            steps += 1;
            if steps > n {
                return Err(Error::validation(format!("{field}: not a tree")));
            }
        }
    }
    Ok(())
}

/// Checks index ranges, list lengths and tree shape. One-to-many and
/// many-to-one links and unaligned tokens are allowed.
pub fn validate_bundle(bundle: AnnotationBundle) -> Result<AnnotationBundle> {
    if bundle.schema != SCHEMA_VERSION {
        return Err(Error::validation(format!(
            "schema: unsupported version {}",
            bundle.schema
        )));
    }
    let n_cs = bundle.cs.len();
    if bundle.cs.labels.len() != n_cs {
        return Err(Error::validation(format!(
            "cs.labels: {} labels for {} tokens",
            bundle.cs.labels.len(),
            n_cs
        )));
    }
    for view in bundle.views() {
        let s = view.side.suffix();
        let n_tr = view.tokens.len();
        for (k, &(c, t)) in view.align.iter().enumerate() {
            if c >= n_cs {
                return Err(Error::validation(format!(
                    "align_{s} link {k}: cs_index {c} out of range"
                )));
            }
            if t >= n_tr {
                return Err(Error::validation(format!(
                    "align_{s} link {k}: trans_index {t} out of range"
                )));
            }
        }
        if view.pos.len() != n_tr {
            return Err(Error::validation(format!(
                "pos_{s}: {} tags for {n_tr} tokens",
                view.pos.len()
            )));
        }
        check_tree(&format!("deps_{s}"), view.deps, n_tr)?;
        for (k, &(a, b)) in view.ner.iter().enumerate() {
            if a >= b || b > n_tr {
                return Err(Error::validation(format!(
                    "ner_{s} span {k}: [{a},{b}) out of range"
                )));
            }
        }
    }
    Ok(bundle)
}

/// CS tokens aligned into a named-entity span of either translation become
/// `Other(named_entity)`, unless they are already `Other`.
pub fn ner_override(mut bundle: AnnotationBundle) -> AnnotationBundle {
    let mut hits = HashSet::new();
    for view in bundle.views() {
        for &(c, t) in view.align {
            if view.in_ner(t) {
                hits.insert(c);
            }
        }
    }
    for c in hits {
        let label = &mut bundle.cs.labels[c];
        if label.is_language() {
            *label = CsLabel::NAMED_ENTITY;
        }
    }
    bundle
}

/// Rejects a bundle when either translation is within 4 edits of the CS
/// text, or when either translation carries a UPOS `X` tag.
pub fn translation_cs_residue_gate(bundle: &AnnotationBundle) -> bool {
    translation_cs_residue_gate_with(bundle, MIN_TRANSLATION_DISTANCE)
}

pub fn translation_cs_residue_gate_with(bundle: &AnnotationBundle, min_distance: usize) -> bool {
    let cs = bundle.cs.text();
    bundle.views().iter().all(|v| {
        levenshtein(cs, v.text) >= min_distance && !v.pos.contains(&Upos::X)
    })
}

/// Reason a bundle fails [`translation_cs_residue_gate`], if it does.
pub fn residue_rejection(bundle: &AnnotationBundle, min_distance: usize) -> Option<&'static str> {
    let cs = bundle.cs.text();
    let views = bundle.views();
    if views.iter().any(|v| levenshtein(cs, v.text) < min_distance) {
        Some("translation_too_close")
    } else if views.iter().any(|v| v.pos.contains(&Upos::X)) {
        Some("x_tag")
    } else {
        None
    }
}

/// A lexicon of multi-word expressions, matched case-folded.
#[derive(Debug, Clone, Default)]
pub struct MweLexicon {
    by_first: HashMap<String, Vec<Vec<String>>>,
    max_len: usize,
}

impl MweLexicon {
    /// Entries are whitespace-separated token sequences; single-token
    /// entries are ignored.
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(entries: I) -> Self {
        let mut lex = MweLexicon::default();
        for e in entries {
            let toks: Vec<String> = e
                .as_ref()
                .split_whitespace()
                .map(str::to_lowercase)
                .collect();
            if toks.len() < 2 {
                continue;
            }
            lex.max_len = lex.max_len.max(toks.len());
            let bucket = lex.by_first.entry(toks[0].clone()).or_default();
            if !bucket.contains(&toks) {
                bucket.push(toks);
            }
        }
        lex
    }

    pub fn is_empty(&self) -> bool {
        self.by_first.is_empty()
    }

    fn longest_at(&self, folded: &[String], i: usize) -> Option<&[String]> {
        self.by_first
            .get(&folded[i])?
            .iter()
            .filter(|e| folded[i..].starts_with(e))
            .max_by_key(|e| e.len())
            .map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MweSpan {
    pub start: usize,
    pub end: usize,
    pub entry: String,
}

impl MweSpan {
    pub fn contains(&self, i: usize) -> bool {
        (self.start..self.end).contains(&i)
    }

    /// True when `[start, end)` overlaps this span without covering it.
    pub fn split_by(&self, start: usize, end: usize) -> bool {
        let overlaps = start < self.end && self.start < end;
        let covers = start <= self.start && self.end <= end;
        overlaps && !covers
    }
}

/// Leftmost-longest, non-overlapping matches against case-folded tokens.
pub fn tag_mwes<S: AsRef<str>>(tokens: &[S], lexicon: &MweLexicon) -> Vec<MweSpan> {
    let folded: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < folded.len() {
        match lexicon.longest_at(&folded, i) {
            Some(entry) => {
                out.push(MweSpan {
                    start: i,
                    end: i + entry.len(),
                    entry: entry.join(" "),
                });
                i += entry.len();
            }
            None => i += 1,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentence::SentenceRecord;

    pub(crate) fn small_bundle() -> AnnotationBundle {
        let cs = CsSentence::new(
            SentenceRecord::new("d", 0, "I said etwas leiser"),
            vec![CsLabel::English, CsLabel::English, CsLabel::Lang1, CsLabel::Lang1],
        )
        .unwrap();
        let edge = |head: Option<usize>, dep: usize| DepEdge {
            head,
            dep,
            rel: "dep".into(),
        };
        AnnotationBundle {
            schema: 1,
            id: "d#0".into(),
            lang_pair: "de-en".into(),
            cs,
            translation_l1: TranslationText {
                text: "Ich sagte etwas leiser".into(),
                tokens: vec!["Ich".into(), "sagte".into(), "etwas".into(), "leiser".into()],
            },
            translation_en: TranslationText {
                text: "I said a little quieter".into(),
                tokens: vec!["I".into(), "said".into(), "a".into(), "little".into(), "quieter".into()],
            },
            align_l1: vec![(0, 0), (1, 1), (2, 2), (3, 3)],
            align_en: vec![(0, 0), (1, 1), (2, 3), (3, 4)],
            pos_l1: vec![Upos::Pron, Upos::Verb, Upos::Adv, Upos::Adj],
            pos_en: vec![Upos::Pron, Upos::Verb, Upos::Det, Upos::Adv, Upos::Adj],
            deps_l1: vec![edge(Some(1), 0), edge(None, 1), edge(Some(3), 2), edge(Some(1), 3)],
            deps_en: vec![
                edge(Some(1), 0),
                edge(None, 1),
                edge(Some(3), 2),
                edge(Some(4), 3),
                edge(Some(1), 4),
            ],
            ner_l1: vec![],
            ner_en: vec![],
        }
    }

    #[test]
    fn accepts_well_formed_bundle() {
        let b = small_bundle();
        assert_eq!(validate_bundle(b.clone()).unwrap(), b);
    }

    #[test]
    fn rejects_out_of_range_link() {
        let mut b = small_bundle();
        b.align_en.insert(0, (99, 0));
        let err = validate_bundle(b).unwrap_err();
        assert_eq!(err.to_string(), "align_en link 0: cs_index 99 out of range");
    }

    #[test]
    fn rejects_cycles_and_missing_heads() {
        let mut b = small_bundle();
        // 2 -> 3 -> 2
        b.deps_l1[3].head = Some(2);
        assert_eq!(validate_bundle(b).unwrap_err().to_string(), "deps_l1: not a tree");

        let mut b = small_bundle();
        b.deps_en.pop();
        assert_eq!(validate_bundle(b).unwrap_err().to_string(), "deps_en: not a tree");

        let mut b = small_bundle();
        b.pos_en.pop();
        assert_eq!(
            validate_bundle(b).unwrap_err().to_string(),
            "pos_en: 4 tags for 5 tokens"
        );
    }

    #[test]
    fn ner_override_relabels_language_tokens_only() {
        let mut b = small_bundle();
        b.ner_l1 = vec![(3, 4)];
        b.ner_en = vec![(0, 1)];
        b.cs.labels[0] = CsLabel::NEUTRAL;
        let out = ner_override(b.clone());
        assert_eq!(out.cs.labels[3], CsLabel::NAMED_ENTITY);
        assert_eq!(out.cs.labels[0], CsLabel::NEUTRAL);
        assert_eq!(out.cs.labels[1], CsLabel::English);
        assert_eq!(ner_override(out.clone()), out);

        let plain = small_bundle();
        assert_eq!(ner_override(plain.clone()), plain);
    }

    #[test]
    fn residue_gate_boundaries() {
        let mut b = small_bundle();
        b.translation_l1.text = b.cs.text().to_string();
        assert!(!translation_cs_residue_gate(&b));

        // "I said etwas leiser" -> 4 and 5 edits
        let mut b = small_bundle();
        b.translation_l1.text = "I said etwas lXXXXr".into();
        assert_eq!(levenshtein(b.cs.text(), &b.translation_l1.text), 4);
        assert!(!translation_cs_residue_gate(&b));
        b.translation_l1.text = "I said etwaX lXXXXr".into();
        assert_eq!(levenshtein(b.cs.text(), &b.translation_l1.text), 5);
        assert!(translation_cs_residue_gate(&b));

        let mut b = small_bundle();
        b.pos_en[2] = Upos::X;
        assert!(!translation_cs_residue_gate(&b));
        assert_eq!(residue_rejection(&b, 5), Some("x_tag"));
    }

    #[test]
    fn mwe_matching() {
        let lex = MweLexicon::new(["way with the ladies", "pop up", "up !"]);
        let spans = tag_mwes(&["a", "way", "With", "the", "ladies"], &lex);
        assert_eq!(
            spans,
            vec![MweSpan {
                start: 1,
                end: 5,
                entry: "way with the ladies".into()
            }]
        );
        assert!(tag_mwes(&["nothing", "here"], &lex).is_empty());
        let spans = tag_mwes(&["pop", "up", "!"], &lex);
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end), (0, 2));
    }

    /// Brute force: all maximal sets of non-overlapping occurrences, pick
    /// the lexicographically smallest by (start, -length).
    fn brute_force_mwes(tokens: &[&str], entries: &[&str]) -> Vec<(usize, usize)> {
        let folded: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut occ = Vec::new();
        for e in entries {
            let et: Vec<String> = e.split_whitespace().map(str::to_lowercase).collect();
            if et.len() < 2 {
                continue;
            }
            for i in 0..folded.len() {
                if folded[i..].starts_with(&et) && !occ.contains(&(i, i + et.len())) {
                    occ.push((i, i + et.len()));
                }
            }
        }
        let n = occ.len();
        let mut best: Option<Vec<(i64, i64)>> = None;
        let mut best_set = Vec::new();
        for mask in 0u32..(1 << n) {
            let set: Vec<(usize, usize)> =
                (0..n).filter(|b| mask & (1 << b) != 0).map(|b| occ[b]).collect();
            let disjoint = set
                .iter()
                .enumerate()
                .all(|(i, a)| set[i + 1..].iter().all(|b| a.1 <= b.0 || b.1 <= a.0));
            if !disjoint {
                continue;
            }
            let maximal = occ.iter().all(|o| {
                set.contains(o) || set.iter().any(|b| o.0 < b.1 && b.0 < o.1)
            });
            if !maximal {
                continue;
            }
            let mut key: Vec<(i64, i64)> =
                set.iter().map(|&(s, e)| (s as i64, -((e - s) as i64))).collect();
            key.sort();
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
                let mut s = set.clone();
                s.sort();
                best_set = s;
            }
        }
        best_set
    }

    #[test]
    fn mwe_matches_brute_force_oracle() {
        let entries = ["pop up", "up !", "a b", "b c d", "a b c", "c d"];
        let lex = MweLexicon::new(entries);
        let fixtures: [&[&str]; 5] = [
            &["pop", "up", "!"],
            &["a", "b", "c", "d"],
            &["x", "b", "c", "d", "a", "b"],
            &["up", "!", "pop", "up"],
            &["A", "B", "C", "D", "c", "d"],
        ];
        for toks in fixtures {
            let got: Vec<_> = tag_mwes(toks, &lex).iter().map(|s| (s.start, s.end)).collect();
            assert_eq!(got, brute_force_mwes(toks, &entries), "{toks:?}");
        }
    }
}
