use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::permutation::{unpaired_permutation_test_with, PermutationConfig, UnpairedStatistic};
use super::{mean, median, quantile};
use crate::judgment::{resolve, JudgmentRecord, Resolved};
use crate::scoring::ScoredPair;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorAccuracy {
    pub judged: usize,
    pub observed_chosen: usize,
    pub accuracy: f64,
}

impl AnnotatorAccuracy {
    fn from_counts(judged: usize, observed_chosen: usize) -> Self {
        Self {
            judged,
            observed_chosen,
            accuracy: if judged == 0 {
                0.0
            } else {
                observed_chosen as f64 / judged as f64
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub per_annotator: BTreeMap<String, AnnotatorAccuracy>,
    pub pooled: AnnotatorAccuracy,
}

/// Share of judgments that picked the observed sentence, per annotator and
/// pooled. Each choice is mapped back through the recorded placement.
pub fn gold_agreement(
    judgments: &[JudgmentRecord],
    known_pairs: &HashSet<String>,
) -> Result<AgreementReport> {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for j in judgments {
        if !known_pairs.contains(&j.pair_id) {
            return Err(Error::validation(format!(
                "judgment by {} references unknown pair {}",
                j.annotator, j.pair_id
            )));
        }
        let resolved = resolve(j.choice, j.observed_side);
        if resolved != j.resolved_choice {
            return Err(Error::validation(format!(
                "judgment by {} on {}: stored resolution disagrees with placement",
                j.annotator, j.pair_id
            )));
        }
        let e = counts.entry(j.annotator.clone()).or_default();
        e.0 += 1;
        if resolved == Resolved::Observed {
            e.1 += 1;
        }
    }
    let total = counts.values().map(|c| c.0).sum();
    let observed = counts.values().map(|c| c.1).sum();
    Ok(AgreementReport {
        per_annotator: counts
            .into_iter()
            .map(|(a, (n, o))| (a, AnnotatorAccuracy::from_counts(n, o)))
            .collect(),
        pooled: AnnotatorAccuracy::from_counts(total, observed),
    })
}

/// Per pair: (number of judgments, number choosing the observed sentence).
pub fn agreement_counts(judgments: &[JudgmentRecord]) -> BTreeMap<String, (usize, usize)> {
    let mut out: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for j in judgments {
        let e = out.entry(j.pair_id.clone()).or_default();
        e.0 += 1;
        if j.resolved_choice == Resolved::Observed {
            e.1 += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    /// Number of annotators who chose the observed sentence.
    pub agreement: usize,
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketComparison {
    pub a: usize,
    pub b: usize,
    pub median_p: f64,
    pub mean_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub raters: usize,
    /// Agreement levels `0..=raters` with no scored pair.
    pub absent: Vec<usize>,
    pub buckets: Vec<BucketSummary>,
    pub comparisons: Vec<BucketComparison>,
    /// Judged pairs without a score.
    pub unscored: usize,
}

/// Groups margins by how many annotators agreed with the observed
/// sentence and compares every two non-empty groups.
pub fn margin_vs_agreement(
    judgments: &[JudgmentRecord],
    scored: &[ScoredPair],
    config: &PermutationConfig,
) -> Result<BucketReport> {
    let counts = agreement_counts(judgments);
    let raters = counts.values().map(|c| c.0).max().unwrap_or(0);
    let margins: HashMap<&str, f64> = scored
        .iter()
        .map(|s| (s.pair_id.as_str(), s.margin()))
        .collect();
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut unscored = 0;
    for (pair, (_, agree)) in &counts {
        match margins.get(pair.as_str()) {
            Some(&m) => groups.entry(*agree).or_default().push(m),
            None => unscored += 1,
        }
    }
    let buckets: Vec<BucketSummary> = groups
        .iter()
        .map(|(&agreement, v)| BucketSummary {
            agreement,
            count: v.len(),
            median: median(v),
            mean: mean(v),
            q1: quantile(v, 0.25),
            q3: quantile(v, 0.75),
        })
        .collect();
    let absent = (0..=raters).filter(|a| !groups.contains_key(a)).collect();
    let mut comparisons = Vec::new();
    let keys: Vec<usize> = groups.keys().copied().collect();
    for (i, &a) in keys.iter().enumerate() {
        for &b in &keys[i + 1..] {
            let (ga, gb) = (&groups[&a], &groups[&b]);
            let test = |stat| unpaired_permutation_test_with(ga, gb, stat, config);
            comparisons.push(BucketComparison {
                a,
                b,
                median_p: test(UnpairedStatistic::MedianDifference)?.p_value,
                mean_p: test(UnpairedStatistic::MeanDifference)?.p_value,
            });
        }
    }
    Ok(BucketReport {
        raters,
        absent,
        buckets,
        comparisons,
        unscored,
    })
}
