use serde::{Deserialize, Serialize};

use super::{find_switch_points, Manipulation, SwitchPoint, SwitchSide};
use crate::bundle::{tag_mwes, AnnotationBundle, MweLexicon, MweSpan, Side, TranslationView};
use crate::{CsLabel, Error, Result, Upos};

/// Multi-word expressions found in the CS sentence and both translations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MweSpans {
    pub cs: Vec<MweSpan>,
    pub l1: Vec<MweSpan>,
    pub en: Vec<MweSpan>,
}

impl MweSpans {
    pub fn tag(bundle: &AnnotationBundle, lexicon: &MweLexicon) -> Self {
        Self {
            cs: tag_mwes(bundle.cs.tokens(), lexicon),
            l1: tag_mwes(&bundle.translation_l1.tokens, lexicon),
            en: tag_mwes(&bundle.translation_en.tokens, lexicon),
        }
    }

    fn side(&self, side: Side) -> &[MweSpan] {
        match side {
            Side::L1 => &self.l1,
            Side::En => &self.en,
        }
    }
}

/// Why a (switch point, side) combination produced no candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discard {
    NotAdjacent,
    OtherWord,
    Unaligned,
    NonContiguous,
    ExtensionChain,
    NounBefore,
    NounAfter,
    MweInSentence,
    MweInTranslation,
    IdenticalForm,
}

impl Discard {
    pub fn as_str(self) -> &'static str {
        match self {
            Discard::NotAdjacent => "not_adjacent",
            Discard::OtherWord => "other_word",
            Discard::Unaligned => "unaligned",
            Discard::NonContiguous => "non_contiguous",
            Discard::ExtensionChain => "extension_chain",
            Discard::NounBefore => "noun_before",
            Discard::NounAfter => "noun_after",
            Discard::MweInSentence => "mwe_in_sentence",
            Discard::MweInTranslation => "mwe_in_translation",
            Discard::IdenticalForm => "identical_form",
        }
    }
}

/// POS of a CS token read off its aligned translation tokens: its own
/// language's translation first, the other one as a fallback. `Noun` wins
/// when any aligned token is a noun.
pub fn projected_pos(bundle: &AnnotationBundle, cs_index: usize) -> Option<Upos> {
    let order = match Side::of(bundle.cs.labels[cs_index]) {
        Some(Side::En) => [Side::En, Side::L1],
        _ => [Side::L1, Side::En],
    };
    for side in order {
        let view = bundle.view(side);
        let t = view.aligned_to(cs_index);
        if t.is_empty() {
            continue;
        }
        if t.iter().any(|&k| view.pos[k] == Upos::Noun) {
            return Some(Upos::Noun);
        }
        return Some(view.pos[t[0]]);
    }
    None
}

/// POS of the replaced word, and whether it is reliable: the word must be
/// aligned to exactly one identical (case-folded) word in its own
/// language's translation.
pub fn changed_word_pos(bundle: &AnnotationBundle, cs_index: usize) -> (Option<Upos>, bool) {
    if let Some(side) = Side::of(bundle.cs.labels[cs_index]) {
        let view = bundle.view(side);
        let t = view.aligned_to(cs_index);
        if t.len() == 1
            && view.tokens[t[0]].to_lowercase() == bundle.cs.tokens()[cs_index].to_lowercase()
        {
            return (Some(view.pos[t[0]]), true);
        }
    }
    (projected_pos(bundle, cs_index), false)
}

/// `true` iff a dependency arc of the majority-language translation,
/// projected onto the CS sentence through the alignment, joins a
/// minority-language token to a majority-language token.
///
/// The minority language has fewer language-labeled tokens; on a tie
/// English is taken as the minority.
pub fn is_integrative(bundle: &AnnotationBundle) -> Result<bool> {
    let labels = &bundle.cs.labels;
    let n_l1 = bundle.cs.count(CsLabel::Lang1);
    let n_en = bundle.cs.count(CsLabel::English);
    if n_l1 == 0 || n_en == 0 {
        return Err(Error::Precondition(format!(
            "{}: sentence is not code-switched",
            bundle.id
        )));
    }
    let minority = if n_l1 < n_en {
        CsLabel::Lang1
    } else {
        CsLabel::English
    };
    let majority = minority.opposite().expect("language label");
    let view = bundle.view(Side::of(majority).expect("language label"));

    let minority_aligned = view
        .align
        .iter()
        .any(|&(c, _)| labels.get(c) == Some(&minority));
    if !minority_aligned {
        return Ok(false);
    }
    for edge in view.deps {
        let Some(head) = edge.head else { continue };
        let heads = view.aligned_from(head);
        let deps = view.aligned_from(edge.dep);
        for &a in &heads {
            for &b in &deps {
                let (la, lb) = (labels[a], labels[b]);
                if (la == minority && lb == majority) || (la == majority && lb == minority) {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

fn linked_to_span(view: &TranslationView<'_>, k: usize, start: usize, end: usize) -> bool {
    (start..end).any(|x| view.linked(k, x))
}

fn outward_unaligned_linked(view: &TranslationView<'_>, k: usize, start: usize, end: usize) -> bool {
    !view.is_aligned(k) && linked_to_span(view, k, start, end)
}

/// Grows `[start, end)` by one unaligned, dependency-linked neighbour per
/// direction. A second such neighbour beyond the first makes the span
/// ambiguous.
fn extend_span(view: &TranslationView<'_>, start: usize, end: usize) -> Option<(usize, usize)> {
    let n = view.tokens.len();
    let (mut s, mut e) = (start, end);
    if s > 0 && outward_unaligned_linked(view, s - 1, s, e) {
        s -= 1;
        if s > 0 && outward_unaligned_linked(view, s - 1, s, e) {
            return None;
        }
    }
    if e < n && outward_unaligned_linked(view, e, s, e) {
        e += 1;
        if e < n && outward_unaligned_linked(view, e, s, e) {
            return None;
        }
    }
    Some((s, e))
}

/// Every adjacent switch point and side, with the manipulation it licenses
/// or the rule that discarded it.
pub fn examine_candidates(
    bundle: &AnnotationBundle,
    mwes: &MweSpans,
) -> Vec<(SwitchPoint, Option<SwitchSide>, std::result::Result<Manipulation, Discard>)> {
    let cs = &bundle.cs;
    let mut out = Vec::new();
    for sp in find_switch_points(cs) {
        if !sp.adjacent {
            out.push((sp, None, Err(Discard::NotAdjacent)));
            continue;
        }
        let noun_before = [sp.left, sp.right]
            .iter()
            .any(|&i| projected_pos(bundle, i) == Some(Upos::Noun));
        for side in [SwitchSide::Left, SwitchSide::Right] {
            let outcome = if noun_before {
                Err(Discard::NounBefore)
            } else {
                candidate(bundle, mwes, sp, side)
            };
            out.push((sp, Some(side), outcome));
        }
    }
    out
}

fn candidate(
    bundle: &AnnotationBundle,
    mwes: &MweSpans,
    sp: SwitchPoint,
    side: SwitchSide,
) -> std::result::Result<Manipulation, Discard> {
    let cs = &bundle.cs;
    let w = match side {
        SwitchSide::Left => sp.left,
        SwitchSide::Right => sp.right,
    };
    let own = cs.labels[w];
    let target = own.opposite().ok_or(Discard::OtherWord)?;
    let target_side = Side::of(target).expect("language label");
    let view = bundle.view(target_side);

    let aligned = view.aligned_to(w);
    let (Some(&first), Some(&last)) = (aligned.first(), aligned.last()) else {
        return Err(Discard::Unaligned);
    };
    if last - first + 1 != aligned.len() {
        return Err(Discard::NonContiguous);
    }
    let (start, end) = extend_span(&view, first, last + 1).ok_or(Discard::ExtensionChain)?;

    if mwes.cs.iter().any(|m| m.contains(w)) {
        return Err(Discard::MweInSentence);
    }
    if mwes
        .side(target_side)
        .iter()
        .any(|m| m.split_by(start, end))
    {
        return Err(Discard::MweInTranslation);
    }

    let inserted: Vec<String> = view.tokens[start..end].to_vec();
    let inserted_pos: Vec<Upos> = view.pos[start..end].to_vec();
    if inserted.join(" ").to_lowercase() == cs.tokens()[w].to_lowercase() {
        return Err(Discard::IdenticalForm);
    }

    // After the swap the switch point sits between the inserted word at the
    // far end and the nearest language-labeled word beyond `w`.
    let (flank_inserted, beyond) = match side {
        SwitchSide::Right => (
            *inserted_pos.last().expect("non-empty"),
            (w + 1..cs.len()).find(|&i| !cs.labels[i].is_other()),
        ),
        SwitchSide::Left => (
            inserted_pos[0],
            (0..w).rev().find(|&i| !cs.labels[i].is_other()),
        ),
    };
    if flank_inserted == Upos::Noun
        || beyond.is_some_and(|b| projected_pos(bundle, b) == Some(Upos::Noun))
    {
        return Err(Discard::NounAfter);
    }

    let links = (start..end)
        .flat_map(|t| view.aligned_from(t).into_iter().map(move |c| (c, t)))
        .filter(|&(c, _)| c == w)
        .collect();
    Ok(Manipulation {
        switch_point: sp,
        side,
        removed: (w, w + 1),
        inserted,
        inserted_pos,
        inserted_language: target,
        translation_span: (start, end),
        links,
    })
}

/// Candidate manipulations of one sentence, in switch-point order, left
/// side before right side.
pub fn enumerate_candidates(bundle: &AnnotationBundle, mwes: &MweSpans) -> Vec<Manipulation> {
    examine_candidates(bundle, mwes)
        .into_iter()
        .filter_map(|(_, _, r)| r.ok())
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bundle::{validate_bundle, DepEdge, TranslationText};
    use crate::pairgen::apply_manipulation;
    use crate::sentence::{tokenize, CsSentence, SentenceRecord};
    use CsLabel::{English as E, Lang1 as L};

    fn edges(spec: &[(Option<usize>, usize)]) -> Vec<DepEdge> {
        spec.iter()
            .map(|&(head, dep)| DepEdge {
                head,
                dep,
                rel: "dep".into(),
            })
            .collect()
    }

    fn text(s: &str) -> TranslationText {
        TranslationText {
            text: s.into(),
            tokens: tokenize(s),
        }
    }

    fn pos(tags: &str) -> Vec<Upos> {
        tags.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    /// The running German-English example, with hand-made annotations.
    pub(crate) fn fig1_bundle() -> AnnotationBundle {
        let o = CsLabel::NEUTRAL;
        let cs = CsSentence::new(
            SentenceRecord::new(
                "fig1",
                0,
                "And I said maybe etwas leiser singen, sonst ruf ich die Polizei",
            ),
            vec![E, E, E, E, L, L, L, o, L, L, L, L, L],
        )
        .unwrap();
        let b = AnnotationBundle {
            schema: 1,
            id: "fig1#0".into(),
            lang_pair: "de-en".into(),
            cs,
            translation_l1: text(
                "Und ich sagte vielleicht etwas leiser singen, sonst rufe ich die Polizei",
            ),
            translation_en: text(
                "And I said maybe sing a little quieter, otherwise I call the police",
            ),
            align_l1: (0..13).map(|i| (i, i)).collect(),
            align_en: vec![
                (0, 0),
                (1, 1),
                (2, 2),
                (3, 3),
                (4, 6),
                (5, 7),
                (6, 4),
                (7, 8),
                (8, 9),
                (9, 11),
                (10, 10),
                (11, 12),
                (12, 13),
            ],
            pos_l1: pos("CCONJ PRON VERB ADV ADV ADJ VERB PUNCT ADV VERB PRON DET NOUN"),
            pos_en: pos("CCONJ PRON VERB ADV VERB DET ADV ADV PUNCT ADV PRON VERB DET NOUN"),
            deps_l1: edges(&[
                (Some(2), 0),
                (Some(2), 1),
                (None, 2),
                (Some(6), 3),
                (Some(5), 4),
                (Some(6), 5),
                (Some(2), 6),
                (Some(9), 7),
                (Some(9), 8),
                (Some(2), 9),
                (Some(9), 10),
                (Some(12), 11),
                (Some(9), 12),
            ]),
            deps_en: edges(&[
                (Some(2), 0),
                (Some(2), 1),
                (None, 2),
                (Some(4), 3),
                (Some(2), 4),
                (Some(6), 5),
                (Some(7), 6),
                (Some(4), 7),
                (Some(11), 8),
                (Some(11), 9),
                (Some(11), 10),
                (Some(2), 11),
                (Some(13), 12),
                (Some(11), 13),
            ]),
            ner_l1: vec![],
            ner_en: vec![],
        };
        validate_bundle(b).unwrap()
    }

    #[test]
    fn fig1_candidates() {
        let b = fig1_bundle();
        let cands = enumerate_candidates(&b, &MweSpans::default());
        let shown: Vec<_> = cands
            .iter()
            .map(|m| (m.removed, m.inserted.join(" ")))
            .collect();
        assert_eq!(
            shown,
            vec![((3, 4), "vielleicht".to_string()), ((4, 5), "a little".to_string())]
        );
        let right = &cands[1];
        assert_eq!(right.translation_span, (5, 7));
        assert_eq!(right.links, vec![(4, 6)]);
        let out = apply_manipulation(&b.cs, right).unwrap();
        assert_eq!(
            out.text(),
            "And I said maybe a little leiser singen, sonst ruf ich die Polizei"
        );
        assert_eq!(changed_word_pos(&b, 4), (Some(Upos::Adv), true));
    }

    #[test]
    fn fig1_is_integrative() {
        assert!(is_integrative(&fig1_bundle()).unwrap());
    }

    #[test]
    fn monolingual_sentence_is_a_precondition_error() {
        let mut b = fig1_bundle();
        b.cs.labels = vec![L; b.cs.len()];
        assert!(matches!(is_integrative(&b), Err(Error::Precondition(_))));
    }

    #[test]
    fn insertional_when_no_cross_arc() {
        let mut b = fig1_bundle();
        // the English minority only attaches among itself
        b.deps_l1 = edges(&[
            (Some(2), 0),
            (Some(2), 1),
            (None, 2),
            (Some(2), 3),
            (Some(5), 4),
            (Some(6), 5),
            (None, 6),
            (Some(9), 7),
            (Some(9), 8),
            (Some(6), 9),
            (Some(9), 10),
            (Some(12), 11),
            (Some(9), 12),
        ]);
        assert!(!is_integrative(&b).unwrap());
        // no minority alignment at all
        let mut b = fig1_bundle();
        b.align_l1.retain(|&(c, _)| c >= 4);
        assert!(!is_integrative(&b).unwrap());
    }

    #[test]
    fn noun_at_switch_point_discards_both_sides() {
        let mut b = fig1_bundle();
        b.pos_l1[4] = Upos::Noun;
        let ex = examine_candidates(&b, &MweSpans::default());
        assert!(ex.iter().all(|(_, _, r)| *r == Err(Discard::NounBefore)));
    }

    #[test]
    fn noun_after_manipulation_discards() {
        let mut b = fig1_bundle();
        // leiser becomes the new neighbour of the moved switch point
        b.pos_l1[5] = Upos::Noun;
        b.pos_en[7] = Upos::Noun;
        let ex = examine_candidates(&b, &MweSpans::default());
        assert_eq!(ex[1].2, Err(Discard::NounAfter));
        assert!(ex[0].2.is_ok());
    }

    #[test]
    fn mwe_rules() {
        let b = fig1_bundle();
        let lex = MweLexicon::new(["maybe etwas", "little quieter"]);
        let mwes = MweSpans::tag(&b, &lex);
        let ex = examine_candidates(&b, &mwes);
        assert_eq!(ex[0].2, Err(Discard::MweInSentence));
        assert_eq!(ex[1].2, Err(Discard::MweInSentence));
        let lex = MweLexicon::new(["little quieter"]);
        let ex = examine_candidates(&b, &MweSpans::tag(&b, &lex));
        assert_eq!(ex[1].2, Err(Discard::MweInTranslation));
        // an MWE entirely inside the inserted span is fine
        let lex = MweLexicon::new(["a little"]);
        let ex = examine_candidates(&b, &MweSpans::tag(&b, &lex));
        assert!(ex[1].2.is_ok());
    }

    #[test]
    fn alignment_rules() {
        let mut b = fig1_bundle();
        b.align_en.retain(|&(c, _)| c != 4);
        let ex = examine_candidates(&b, &MweSpans::default());
        assert_eq!(ex[1].2, Err(Discard::Unaligned));
        b.align_en.push((4, 5));
        b.align_en.push((4, 7));
        let ex = examine_candidates(&b, &MweSpans::default());
        assert_eq!(ex[1].2, Err(Discard::NonContiguous));
    }

    #[test]
    fn extension_chain_discards() {
        let mut b = fig1_bundle();
        // "sing" loses its alignment; while it hangs off "said" the span
        // grows by "a" only
        b.align_en.retain(|&(c, _)| c != 6);
        b.deps_en = edges(&[
            (Some(2), 0),
            (Some(2), 1),
            (None, 2),
            (Some(7), 3),
            (Some(2), 4),
            (Some(6), 5),
            (Some(7), 6),
            (Some(2), 7),
            (Some(11), 8),
            (Some(11), 9),
            (Some(11), 10),
            (Some(2), 11),
            (Some(13), 12),
            (Some(11), 13),
        ]);
        let ex = examine_candidates(&b, &MweSpans::default());
        assert_eq!(ex[1].2.as_ref().unwrap().translation_span, (5, 7));
        // hanging off "a", it would be a second unaligned neighbour
        b.deps_en[4] = DepEdge {
            head: Some(5),
            dep: 4,
            rel: "dep".into(),
        };
        let ex = examine_candidates(&b, &MweSpans::default());
        assert_eq!(ex[1].2, Err(Discard::ExtensionChain));
    }

    #[test]
    fn non_adjacent_switch_points_yield_nothing() {
        let mut b = fig1_bundle();
        b.cs.labels[3] = CsLabel::NEUTRAL;
        let ex = examine_candidates(&b, &MweSpans::default());
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].2, Err(Discard::NotAdjacent));
    }

    pub(crate) fn ex2_bundle() -> AnnotationBundle {
        let mut labels = vec![E; 4];
        labels.extend([L; 9]);
        labels.push(CsLabel::NEUTRAL);
        let cs = CsSentence::new(
            SentenceRecord::new(
                "ex2",
                0,
                "Would do it myself om inte make var bilmek och nördig med det.",
            ),
            labels,
        )
        .unwrap();
        let b = AnnotationBundle {
            schema: 1,
            id: "ex2#0".into(),
            lang_pair: "sv-en".into(),
            cs,
            translation_l1: text("Skulle göra det själv om inte make var bilmek och nördig med det."),
            translation_en: text(
                "Would do it myself if my husband was not a mechanic and into that stuff.",
            ),
            align_l1: (0..14).map(|i| (i, i)).collect(),
            align_en: vec![
                (0, 0),
                (1, 1),
                (2, 2),
                (3, 3),
                (4, 4),
                (5, 8),
                (6, 6),
                (7, 7),
                (8, 10),
                (9, 11),
                (10, 12),
                (12, 13),
                (13, 15),
            ],
            pos_l1: pos("AUX VERB PRON PRON SCONJ ADV NOUN AUX ADJ CCONJ ADJ ADP PRON PUNCT"),
            pos_en: pos(
                "AUX VERB PRON PRON SCONJ PRON NOUN AUX PART DET NOUN CCONJ ADP DET NOUN PUNCT",
            ),
            deps_l1: edges(&[
                (Some(1), 0),
                (None, 1),
                (Some(1), 2),
                (Some(1), 3),
                (Some(7), 4),
                (Some(7), 5),
                (Some(7), 6),
                (Some(1), 7),
                (Some(7), 8),
                (Some(10), 9),
                (Some(8), 10),
                (Some(12), 11),
                (Some(10), 12),
                (Some(1), 13),
            ]),
            deps_en: edges(&[
                (Some(1), 0),
                (None, 1),
                (Some(1), 2),
                (Some(1), 3),
                (Some(7), 4),
                (Some(6), 5),
                (Some(7), 6),
                (Some(1), 7),
                (Some(7), 8),
                (Some(10), 9),
                (Some(7), 10),
                (Some(12), 11),
                (Some(10), 12),
                (Some(14), 13),
                (Some(12), 14),
                (Some(1), 15),
            ]),
            ner_l1: vec![],
            ner_en: vec![],
        };
        validate_bundle(b).unwrap()
    }

    #[test]
    fn ex2_left_side_candidate() {
        let b = ex2_bundle();
        let cands = enumerate_candidates(&b, &MweSpans::default());
        let left = cands
            .iter()
            .find(|m| m.side == SwitchSide::Left)
            .expect("left-side candidate");
        assert_eq!(left.removed, (3, 4));
        assert_eq!(left.inserted, ["själv"]);
        let out = apply_manipulation(&b.cs, left).unwrap();
        assert_eq!(
            out.text(),
            "Would do it själv om inte make var bilmek och nördig med det."
        );
        let right = cands.iter().find(|m| m.side == SwitchSide::Right).unwrap();
        assert_eq!(right.inserted, ["if"]);
    }

    #[test]
    fn thumbs_up_sentence_is_insertional() {
        let o = CsLabel::NEUTRAL;
        let cs = CsSentence::new(
            SentenceRecord::new("gr", 0, "great 👍 ich liebe das"),
            vec![E, o, L, L, L],
        )
        .unwrap();
        let b = AnnotationBundle {
            schema: 1,
            id: "gr#0".into(),
            lang_pair: "de-en".into(),
            cs,
            translation_l1: text("toll 👍 ich liebe das"),
            translation_en: text("great 👍 I love that"),
            align_l1: (0..5).map(|i| (i, i)).collect(),
            align_en: (0..5).map(|i| (i, i)).collect(),
            pos_l1: pos("ADJ SYM PRON VERB PRON"),
            pos_en: pos("ADJ SYM PRON VERB PRON"),
            // "toll" heads its own fragment
            deps_l1: edges(&[(None, 0), (Some(0), 1), (Some(3), 2), (None, 3), (Some(3), 4)]),
            deps_en: edges(&[(Some(3), 0), (Some(0), 1), (Some(3), 2), (None, 3), (Some(3), 4)]),
            ner_l1: vec![],
            ner_en: vec![],
        };
        let b = validate_bundle(b).unwrap();
        assert!(!is_integrative(&b).unwrap());
    }
}
