//! Constraint checks for generated pairs, written independently of the
//! generator where practical. Shared by the core and acceptance tests.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use acs_core::bundle::{tag_mwes, AnnotationBundle, MweLexicon};
use acs_core::pairgen::{generate, GenerationConfig, MinimalPair};
use acs_core::synth::{random_bundles, random_mwes};
use acs_core::{CsLabel, CsSentence, Upos};

pub const SENTENCES: usize = 1000;

fn switches(cs: &CsSentence) -> Vec<(usize, usize)> {
    let langs: Vec<(usize, CsLabel)> = cs
        .labels
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, l)| matches!(l, CsLabel::Lang1 | CsLabel::English))
        .collect();
    langs
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| (w[0].0, w[1].0))
        .collect()
}

fn aligned_pos(bundle: &AnnotationBundle, l1: bool, cs_index: usize) -> Vec<Upos> {
    let (align, pos) = if l1 {
        (&bundle.align_l1, &bundle.pos_l1)
    } else {
        (&bundle.align_en, &bundle.pos_en)
    };
    align
        .iter()
        .filter(|&&(c, _)| c == cs_index)
        .map(|&(_, t)| pos[t])
        .collect()
}

/// Noun status of an observed token: its own language's translation
/// decides when it has an alignment there, the other one otherwise.
fn is_noun(bundle: &AnnotationBundle, cs_index: usize) -> bool {
    let own_l1 = bundle.cs.labels[cs_index] != CsLabel::English;
    for l1 in [own_l1, !own_l1] {
        let tags = aligned_pos(bundle, l1, cs_index);
        if !tags.is_empty() {
            return tags.contains(&Upos::Noun);
        }
    }
    false
}

pub fn check_pair(pair: &MinimalPair, bundle: &AnnotationBundle, mwes: &MweLexicon) -> Vec<String> {
    let mut v = Vec::new();
    let obs = &pair.observed;
    let man = &pair.manipulated;
    let (r0, r1) = pair.manipulation.removed;
    let ins = pair.manipulation.inserted.len();

    if obs.tokens() == man.tokens() || obs.text() == man.text() {
        v.push("observed equals manipulated".into());
    }
    // one contiguous differing span
    if r1 != r0 + 1 || ins == 0 {
        v.push(format!("removed [{r0},{r1}) inserted {ins}"));
    }
    if obs.tokens()[..r0] != man.tokens()[..r0] || obs.labels[..r0] != man.labels[..r0] {
        v.push("prefix differs".into());
    }
    if obs.tokens()[r1..] != man.tokens()[r0 + ins..] || obs.labels[r1..] != man.labels[r0 + ins..] {
        v.push("suffix differs".into());
    }
    let removed_lang = obs.labels[r0];
    if man.labels[r0..r0 + ins]
        .iter()
        .any(|&l| l == removed_lang || l.is_other())
    {
        v.push("inserted tokens not relabeled to the other language".into());
    }
    let ochars: Vec<char> = obs.text().chars().collect();
    let mchars: Vec<char> = man.text().chars().collect();
    let (os, oe) = pair.observed_span;
    let (ms, me) = pair.manipulated_span;
    if ochars[..os] != mchars[..ms] || ochars[oe..] != mchars[me..] {
        v.push("text differs outside the reported spans".into());
    }

    // switch-point counts
    let (so, sm) = (switches(obs), switches(man));
    if so.len() != sm.len() {
        v.push(format!("switch points {} vs {}", so.len(), sm.len()));
    }

    // nouns at the manipulated switch point, before and after
    let sp = pair.manipulation.switch_point;
    if is_noun(bundle, sp.left) || is_noun(bundle, sp.right) {
        v.push("noun flanks the switch point before manipulation".into());
    }
    let to_observed = |j: usize| if j < r0 { j } else { j + 1 - ins };
    for (l, r) in sm {
        let touches = |j: usize| (r0..r0 + ins).contains(&j);
        if !touches(l) && !touches(r) {
            continue;
        }
        for j in [l, r] {
            let noun = if touches(j) {
                pair.manipulation.inserted_pos[j - r0] == Upos::Noun
            } else {
                is_noun(bundle, to_observed(j))
            };
            if noun {
                v.push(format!("noun flanks switch point ({l},{r}) after manipulation"));
            }
        }
    }

    // multi-word expressions
    for m in tag_mwes(obs.tokens(), mwes) {
        if m.start <= r0 && r0 < m.end {
            v.push(format!("removed word inside MWE {:?}", m.entry));
        }
    }
    let trans = match pair.manipulation.inserted_language {
        CsLabel::Lang1 => &bundle.translation_l1.tokens,
        _ => &bundle.translation_en.tokens,
    };
    let (ts, te) = pair.manipulation.translation_span;
    for m in tag_mwes(trans, mwes) {
        let overlaps = ts < m.end && m.start < te;
        let covered = ts <= m.start && m.end <= te;
        if overlaps && !covered {
            v.push(format!("inserted span splits MWE {:?}", m.entry));
        }
    }
    v
}

pub fn run(seed: u64) -> (Vec<AnnotationBundle>, MweLexicon, Vec<MinimalPair>) {
    let bundles = random_bundles(seed, SENTENCES, "xx-en");
    let mwes = random_mwes(seed, 60);
    let config = GenerationConfig {
        seed,
        cap: SENTENCES,
        ..Default::default()
    };
    let out = generate(bundles.clone(), &mwes, &config);
    (bundles, mwes, out.pairs)
}

/// Pairs and violations found for one seed, plus whether a rerun was
/// byte-identical.
pub struct SuiteResult {
    pub pairs: usize,
    pub violations: Vec<String>,
    pub rerun_identical: bool,
}

pub fn check_suite(seed: u64) -> SuiteResult {
    let (bundles, mwes, pairs) = run(seed);
    let by_doc: HashMap<&str, &AnnotationBundle> =
        bundles.iter().map(|b| (b.doc_id(), b)).collect();

    let mut violations = Vec::new();
    let mut keys = HashSet::new();
    let mut sources = HashSet::new();
    for p in &pairs {
        let b = by_doc[p.provenance.doc_id.as_str()];
        for msg in check_pair(p, b, &mwes) {
            violations.push(format!("{}: {msg}", p.pair_id));
        }
        if !keys.insert((p.lang_pair.clone(), p.lexical_difference.clone())) {
            violations.push(format!("{}: lexical difference reused", p.pair_id));
        }
        if !sources.insert((p.provenance.doc_id.clone(), p.provenance.sentence_index)) {
            violations.push(format!("{}: second pair from one sentence", p.pair_id));
        }
    }
    let again = run(seed).2;
    SuiteResult {
        pairs: pairs.len(),
        violations,
        rerun_identical: serde_json::to_string(&pairs).unwrap()
            == serde_json::to_string(&again).unwrap(),
    }
}
