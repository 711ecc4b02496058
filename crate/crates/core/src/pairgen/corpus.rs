use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::candidates::{changed_word_pos, examine_candidates, is_integrative, MweSpans};
use super::{lexical_difference, realize, switch_count_gate, MinimalPair, Provenance};
use crate::bundle::{
    ner_override, residue_rejection, validate_bundle, AnnotationBundle, MweLexicon,
    MIN_TRANSLATION_DISTANCE,
};
use crate::rng::{keyed_rng, keyed_u64};

/// Surviving candidate pairs of one source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceCandidates {
    pub lang_pair: String,
    pub doc_id: String,
    pub index: usize,
    pub pairs: Vec<MinimalPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub seed: u64,
    /// Maximum number of pairs per language pair.
    pub cap: usize,
    pub min_translation_distance: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cap: 1000,
            min_translation_distance: MIN_TRANSLATION_DISTANCE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    pub pairs: Vec<MinimalPair>,
    pub sentences_in: usize,
    /// Sentences removed, by reason.
    pub rejected: BTreeMap<String, usize>,
    /// Candidate (switch point, side) combinations removed, by rule.
    pub discarded: BTreeMap<String, usize>,
}

fn pair_id(lang_pair: &str, doc_id: &str, index: usize) -> String {
    format!("{lang_pair}:{doc_id}#{index}")
}

/// Turns every candidate manipulation of a bundle into a minimal pair and
/// keeps those that pass the switch-count gate. Returns the candidates and
/// the discard counts by rule.
pub fn sentence_candidates(
    bundle: &AnnotationBundle,
    mwes: &MweLexicon,
) -> (SentenceCandidates, BTreeMap<String, usize>) {
    let spans = MweSpans::tag(bundle, mwes);
    let mut discarded = BTreeMap::new();
    let mut pairs = Vec::new();
    let id = pair_id(&bundle.lang_pair, bundle.doc_id(), bundle.cs.record.index);
    for (_, _, outcome) in examine_candidates(bundle, &spans) {
        let m = match outcome {
            Ok(m) => m,
            Err(d) => {
                *discarded.entry(d.as_str().to_string()).or_insert(0) += 1;
                continue;
            }
        };
        let Ok(r) = realize(&bundle.cs, &m) else {
            *discarded.entry("unrealizable".to_string()).or_insert(0) += 1;
            continue;
        };
        let (pos, eligible) = changed_word_pos(bundle, m.removed.0);
        let pair = MinimalPair {
            pair_id: id.clone(),
            lang_pair: bundle.lang_pair.clone(),
            lexical_difference: lexical_difference(&bundle.cs, &m),
            observed: bundle.cs.clone(),
            manipulated: r.sentence,
            manipulation: m,
            changed_word_pos: pos,
            pos_eligible: eligible,
            observed_span: r.observed_span,
            manipulated_span: r.manipulated_span,
            provenance: Provenance {
                doc_id: bundle.doc_id().to_string(),
                sentence_index: bundle.cs.record.index,
                seed: 0,
            },
        };
        if switch_count_gate(&pair) {
            pairs.push(pair);
        } else {
            *discarded.entry("switch_count".to_string()).or_insert(0) += 1;
        }
    }
    (
        SentenceCandidates {
            lang_pair: bundle.lang_pair.clone(),
            doc_id: bundle.doc_id().to_string(),
            index: bundle.cs.record.index,
            pairs,
        },
        discarded,
    )
}

/// Picks at most one pair per source sentence, never reusing a lexical
/// difference within a language pair, until each language pair reaches
/// `cap`.
///
/// Sentences are visited in an order drawn from `seed`, and each
/// sentence's candidates are shuffled by an RNG keyed on
/// `(seed, doc_id, index)`, so a sentence's draw does not depend on which
/// other sentences are present.
pub fn assemble_corpus(
    groups: impl IntoIterator<Item = SentenceCandidates>,
    seed: u64,
    cap: usize,
) -> Vec<MinimalPair> {
    assemble(groups, seed, cap).0
}

struct AssemblyCounts {
    duplicate: usize,
    over_cap: usize,
}

fn assemble(
    groups: impl IntoIterator<Item = SentenceCandidates>,
    seed: u64,
    cap: usize,
) -> (Vec<MinimalPair>, AssemblyCounts) {
    let mut groups: Vec<(u64, SentenceCandidates)> = groups
        .into_iter()
        .filter(|g| !g.pairs.is_empty())
        .map(|g| {
            let idx = g.index.to_string();
            let key = keyed_u64(seed, &["order", &g.lang_pair, &g.doc_id, &idx]);
            (key, g)
        })
        .collect();
    groups.sort_by(|(ka, a), (kb, b)| {
        ka.cmp(kb)
            .then_with(|| (&a.lang_pair, &a.doc_id, a.index).cmp(&(&b.lang_pair, &b.doc_id, b.index)))
    });

    let mut used: HashSet<(String, (String, String))> = HashSet::new();
    let mut taken: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    let mut counts = AssemblyCounts {
        duplicate: 0,
        over_cap: 0,
    };
    for (_, g) in groups {
        let n = taken.entry(g.lang_pair.clone()).or_insert(0);
        if *n >= cap {
            counts.over_cap += 1;
            continue;
        }
        let idx = g.index.to_string();
        let mut rng = keyed_rng(seed, &["select", &g.lang_pair, &g.doc_id, &idx]);
        let mut order: Vec<usize> = (0..g.pairs.len()).collect();
        order.shuffle(&mut rng);
        let pick = order.into_iter().find(|&i| {
            !used.contains(&(g.lang_pair.clone(), g.pairs[i].lexical_difference.clone()))
        });
        match pick {
            Some(i) => {
                let mut pair = g.pairs[i].clone();
                used.insert((g.lang_pair.clone(), pair.lexical_difference.clone()));
                pair.provenance.seed = seed;
                *n += 1;
                out.push(pair);
            }
            None => counts.duplicate += 1,
        }
    }
    (out, counts)
}

fn bump(map: &mut BTreeMap<String, usize>, key: &str, by: usize) {
    if by > 0 {
        *map.entry(key.to_string()).or_insert(0) += by;
    }
}

/// Runs the bundle gates, candidate generation and corpus assembly over a
/// set of bundles.
pub fn generate(
    bundles: Vec<AnnotationBundle>,
    mwes: &MweLexicon,
    config: &GenerationConfig,
) -> GenerationOutcome {
    enum Step {
        Rejected(&'static str),
        Kept(SentenceCandidates, BTreeMap<String, usize>),
    }
    let sentences_in = bundles.len();
    let steps: Vec<Step> = bundles
        .into_par_iter()
        .map(|b| {
            let Ok(b) = validate_bundle(b) else {
                return Step::Rejected("invalid_bundle");
            };
            let b = ner_override(b);
            if let Some(reason) = residue_rejection(&b, config.min_translation_distance) {
                return Step::Rejected(reason);
            }
            match is_integrative(&b) {
                Ok(true) => {}
                Ok(false) => return Step::Rejected("not_integrative"),
                Err(_) => return Step::Rejected("not_code_switched"),
            }
            let (cands, discarded) = sentence_candidates(&b, mwes);
            Step::Kept(cands, discarded)
        })
        .collect();

    let mut outcome = GenerationOutcome {
        sentences_in,
        ..Default::default()
    };
    let mut groups = Vec::new();
    for step in steps {
        match step {
            Step::Rejected(reason) => bump(&mut outcome.rejected, reason, 1),
            Step::Kept(cands, discarded) => {
                for (k, v) in discarded {
                    bump(&mut outcome.discarded, &k, v);
                }
                if cands.pairs.is_empty() {
                    bump(&mut outcome.rejected, "no_candidate", 1);
                } else {
                    groups.push(cands);
                }
            }
        }
    }
    let (pairs, counts) = assemble(groups, config.seed, config.cap);
    bump(&mut outcome.rejected, "duplicate_lexical_difference", counts.duplicate);
    bump(&mut outcome.rejected, "over_cap", counts.over_cap);
    outcome.pairs = pairs;
    outcome
}
