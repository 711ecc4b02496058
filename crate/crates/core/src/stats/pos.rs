use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::permutation::{unpaired_permutation_test, PermutationConfig};
use super::{mean, median};
use crate::pairgen::MinimalPair;
use crate::scoring::ScoredPair;
use crate::upos::{Upos, WordClass};
use crate::Result;

/// Groups with fewer pairs are left out of the report.
pub const MIN_GROUP_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosGroupSummary {
    pub upos: Upos,
    pub class: Option<WordClass>,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosReport {
    /// Eligible pairs that entered the grouping.
    pub eligible: usize,
    /// Groups with at least [`MIN_GROUP_SIZE`] pairs, in tag order.
    pub groups: Vec<PosGroupSummary>,
    /// Groups below the size threshold, with their sizes.
    pub excluded: BTreeMap<Upos, usize>,
    pub closed_count: usize,
    pub open_count: usize,
    pub closed_mean: Option<f64>,
    pub open_mean: Option<f64>,
    /// Unpaired permutation p-value between the pooled closed-class and
    /// open-class absolute margins of the reported groups.
    pub closed_vs_open_p: Option<f64>,
}

/// Absolute margins of eligible pairs (changed word aligned to a single
/// identical word in its own-language translation), grouped by tag.
pub fn pos_margin_analysis(
    pairs: &[MinimalPair],
    scored: &[ScoredPair],
    config: &PermutationConfig,
) -> Result<PosReport> {
    let margins: HashMap<&str, f64> = scored
        .iter()
        .map(|s| (s.pair_id.as_str(), s.margin()))
        .collect();
    let items: Vec<(Upos, f64)> = pairs
        .iter()
        .filter(|p| p.pos_eligible)
        .filter_map(|p| Some((p.changed_word_pos?, *margins.get(p.pair_id.as_str())?)))
        .collect();
    pos_margin_analysis_from(&items, config)
}

/// Same analysis over `(tag, margin)` items that are already eligible.
pub fn pos_margin_analysis_from(
    items: &[(Upos, f64)],
    config: &PermutationConfig,
) -> Result<PosReport> {
    let mut by_tag: BTreeMap<Upos, Vec<f64>> = BTreeMap::new();
    for &(tag, m) in items {
        by_tag.entry(tag).or_default().push(m.abs());
    }
    let mut groups = Vec::new();
    let mut excluded = BTreeMap::new();
    let (mut closed, mut open) = (Vec::new(), Vec::new());
    for (tag, v) in by_tag {
        if v.len() < MIN_GROUP_SIZE {
            excluded.insert(tag, v.len());
            continue;
        }
        match tag.class() {
            Some(WordClass::Closed) => closed.extend_from_slice(&v),
            Some(WordClass::Open) => open.extend_from_slice(&v),
            None => {}
        }
        groups.push(PosGroupSummary {
            upos: tag,
            class: tag.class(),
            count: v.len(),
            mean: mean(&v),
            median: median(&v),
        });
    }
    let closed_vs_open_p = if closed.is_empty() || open.is_empty() {
        None
    } else {
        Some(unpaired_permutation_test(&closed, &open, config)?.p_value)
    };
    Ok(PosReport {
        eligible: items.len(),
        groups,
        excluded,
        closed_count: closed.len(),
        open_count: open.len(),
        closed_mean: (!closed.is_empty()).then(|| mean(&closed)),
        open_mean: (!open.is_empty()).then(|| mean(&open)),
        closed_vs_open_p,
    })
}
