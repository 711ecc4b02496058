//! Seeded random annotation bundles for property tests of the generator.
//!
//! Words are drawn from two small artificial vocabularies (`l0`, `l1`, ...
//! for the first language and `e0`, `e1`, ... for English) related by a
//! fixed index-preserving dictionary, so lexical differences repeat across
//! sentences. Translations include one-to-many renderings, unaligned
//! function words attached to their neighbours, dropped alignments and
//! nouns, which exercises every candidate rule.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::bundle::{AnnotationBundle, DepEdge, MweLexicon, TranslationText, SCHEMA_VERSION};
use crate::rng::{indexed_rng, keyed_rng};
use crate::sentence::{detokenize, CsLabel, CsSentence, SentenceRecord};
use crate::Upos;

const VOCAB: usize = 40;

const TAGS: [Upos; 10] = [
    Upos::Noun,
    Upos::Verb,
    Upos::Adj,
    Upos::Adv,
    Upos::Det,
    Upos::Pron,
    Upos::Adp,
    Upos::Aux,
    Upos::Cconj,
    Upos::Part,
];

fn word(label: CsLabel, k: usize) -> String {
    match label {
        CsLabel::Lang1 => format!("l{k}"),
        _ => format!("e{k}"),
    }
}

/// Every word index has one tag, shared by both vocabularies.
fn tag_of(k: usize) -> Upos {
    TAGS[(k * 7 + 3) % TAGS.len()]
}

/// Random forest over `n` tokens: tokens are attached in a random order,
/// each to a token placed before it.
fn random_tree(rng: &mut impl Rng, n: usize) -> Vec<DepEdge> {
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    let mut edges: Vec<DepEdge> = order
        .iter()
        .enumerate()
        .map(|(pos, &dep)| DepEdge {
            head: (pos > 0).then(|| order[rng.random_range(0..pos)]),
            dep,
            rel: "dep".into(),
        })
        .collect();
    edges.sort_by_key(|e| e.dep);
    edges
}

struct Rendered {
    tokens: Vec<String>,
    pos: Vec<Upos>,
    align: Vec<(usize, usize)>,
}

/// Renders the CS sentence in one language. Tokens already in that
/// language are copied; others are translated, sometimes into two words,
/// sometimes preceded by an unaligned particle, sometimes left unaligned.
fn render(
    rng: &mut impl Rng,
    words: &[usize],
    labels: &[CsLabel],
    target: CsLabel,
) -> Rendered {
    let mut out = Rendered {
        tokens: Vec::new(),
        pos: Vec::new(),
        align: Vec::new(),
    };
    let push = |out: &mut Rendered, tok: String, tag: Upos, link: Option<usize>| {
        if let Some(c) = link {
            out.align.push((c, out.tokens.len()));
        }
        out.tokens.push(tok);
        out.pos.push(tag);
    };
    for (i, (&k, &label)) in words.iter().zip(labels).enumerate() {
        if label.is_other() {
            push(&mut out, ",".into(), Upos::Punct, Some(i));
            continue;
        }
        if label == target {
            push(&mut out, word(target, k), tag_of(k), Some(i));
            continue;
        }
        let roll: f64 = rng.random();
        if roll < 0.1 {
            // unaligned particle in front
            let p = rng.random_range(0..VOCAB);
            push(&mut out, word(target, p), Upos::Part, None);
            push(&mut out, word(target, k), tag_of(k), Some(i));
        } else if roll < 0.2 {
            let extra = (k + 1) % VOCAB;
            push(&mut out, word(target, k), tag_of(k), Some(i));
            push(&mut out, word(target, extra), tag_of(extra), Some(i));
        } else if roll < 0.25 {
            push(&mut out, word(target, k), tag_of(k), None);
        } else {
            push(&mut out, word(target, k), tag_of(k), Some(i));
        }
    }
    out
}

/// One random code-switched bundle with at least one switch point.
pub fn random_bundle(seed: u64, index: usize, lang_pair: &str) -> AnnotationBundle {
    let mut rng = indexed_rng(seed, "synth-bundle", index as u64);
    let n = rng.random_range(6..=14);
    let mut labels = Vec::with_capacity(n);
    let mut current = if rng.random::<bool>() {
        CsLabel::Lang1
    } else {
        CsLabel::English
    };
    while labels.len() < n {
        let run = rng.random_range(1..=4).min(n - labels.len());
        labels.extend(std::iter::repeat_n(current, run));
        if labels.len() < n && rng.random::<f64>() < 0.15 {
            labels.push(CsLabel::NEUTRAL);
        }
        current = current.opposite().expect("language label");
    }
    labels.truncate(n);
    if labels.iter().all(|l| *l == labels[0]) || labels.iter().all(|l| l.is_other()) {
        labels[n - 1] = CsLabel::English;
        labels[0] = CsLabel::Lang1;
    }
    let words: Vec<usize> = (0..n).map(|_| rng.random_range(0..VOCAB)).collect();
    let tokens: Vec<String> = words
        .iter()
        .zip(&labels)
        .map(|(&k, &l)| if l.is_other() { ",".into() } else { word(l, k) })
        .collect();
    let text = detokenize(&tokens);
    let doc_id = format!("synth{index:05}");
    let cs = CsSentence::new(
        SentenceRecord {
            doc_id: doc_id.clone(),
            index: 0,
            text,
            tokens,
        },
        labels.clone(),
    )
    .expect("one label per token");

    let l1 = render(&mut rng, &words, &labels, CsLabel::Lang1);
    let en = render(&mut rng, &words, &labels, CsLabel::English);
    let deps_l1 = random_tree(&mut rng, l1.tokens.len());
    let deps_en = random_tree(&mut rng, en.tokens.len());
    AnnotationBundle {
        schema: SCHEMA_VERSION,
        id: format!("{doc_id}#0"),
        lang_pair: lang_pair.to_string(),
        cs,
        translation_l1: TranslationText {
            text: detokenize(&l1.tokens),
            tokens: l1.tokens,
        },
        translation_en: TranslationText {
            text: detokenize(&en.tokens),
            tokens: en.tokens,
        },
        align_l1: l1.align,
        align_en: en.align,
        pos_l1: l1.pos,
        pos_en: en.pos,
        deps_l1,
        deps_en,
        ner_l1: Vec::new(),
        ner_en: Vec::new(),
    }
}

pub fn random_bundles(seed: u64, count: usize, lang_pair: &str) -> Vec<AnnotationBundle> {
    (0..count).map(|i| random_bundle(seed, i, lang_pair)).collect()
}

/// A handful of two-word expressions over both vocabularies.
pub fn random_mwes(seed: u64, count: usize) -> MweLexicon {
    let mut rng = keyed_rng(seed, &["synth-mwe"]);
    let labels = [CsLabel::Lang1, CsLabel::English];
    let entries: Vec<String> = (0..count)
        .map(|_| {
            let l = *labels.choose(&mut rng).expect("non-empty");
            format!(
                "{} {}",
                word(l, rng.random_range(0..VOCAB)),
                word(l, rng.random_range(0..VOCAB))
            )
        })
        .collect();
    MweLexicon::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::validate_bundle;
    use crate::pairgen::find_switch_points;

    #[test]
    fn bundles_are_valid_and_switch() {
        for b in random_bundles(3, 200, "xx-en") {
            assert!(!find_switch_points(&b.cs).is_empty());
            validate_bundle(b).unwrap();
        }
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(random_bundle(1, 7, "xx-en"), random_bundle(1, 7, "xx-en"));
        assert_ne!(random_bundle(1, 7, "xx-en"), random_bundle(2, 7, "xx-en"));
    }
}
