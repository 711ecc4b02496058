use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::judgment::{JudgmentRecord, Resolved};
use crate::{Error, Result};

/// Per-item category counts with the same number of raters on every item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentMatrix {
    counts: Vec<Vec<usize>>,
    raters: usize,
}

impl JudgmentMatrix {
    /// Rows are items, columns categories.
    pub fn new(counts: Vec<Vec<usize>>) -> Result<Self> {
        let first = counts
            .first()
            .ok_or_else(|| Error::validation("judgment matrix has no items"))?;
        let k = first.len();
        if k < 2 {
            return Err(Error::validation("judgment matrix needs at least 2 categories"));
        }
        let raters: usize = first.iter().sum();
        if raters < 2 {
            return Err(Error::validation(format!(
                "fleiss kappa needs at least 2 raters per item, got {raters}"
            )));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != k {
                return Err(Error::validation(format!(
                    "item {i}: {} categories, expected {k}",
                    row.len()
                )));
            }
            let s: usize = row.iter().sum();
            if s != raters {
                return Err(Error::validation(format!(
                    "item {i}: {s} ratings, expected {raters}"
                )));
            }
        }
        Ok(Self { counts, raters })
    }

    /// Two categories (observed, manipulated) per pair, raters treated as
    /// exchangeable. Every pair must have the same number of judgments.
    pub fn from_records(records: &[JudgmentRecord]) -> Result<Self> {
        let mut by_pair: BTreeMap<&str, (BTreeSet<&str>, [usize; 2])> = BTreeMap::new();
        for r in records {
            let e = by_pair.entry(&r.pair_id).or_default();
            if !e.0.insert(&r.annotator) {
                return Err(Error::validation(format!(
                    "{}: annotator {} judged the pair twice",
                    r.pair_id, r.annotator
                )));
            }
            match r.resolved_choice {
                Resolved::Observed => e.1[0] += 1,
                Resolved::Manipulated => e.1[1] += 1,
            }
        }
        Self::new(by_pair.into_values().map(|(_, c)| c.to_vec()).collect())
    }

    pub fn items(&self) -> usize {
        self.counts.len()
    }

    pub fn raters(&self) -> usize {
        self.raters
    }

    pub fn categories(&self) -> usize {
        self.counts[0].len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.counts
    }
}

/// Fleiss's kappa. Perfect agreement gives 1 even when every rating falls
/// in one category (where chance agreement is also 1).
pub fn fleiss_kappa(m: &JudgmentMatrix) -> f64 {
    let n = m.raters as f64;
    let items = m.items() as f64;
    let k = m.categories();

    let mut p_j = vec![0.0; k];
    let mut p_bar = 0.0;
    for row in &m.counts {
        let sq: f64 = row.iter().map(|&c| (c * c) as f64).sum();
        p_bar += (sq - n) / (n * (n - 1.0));
        for (j, &c) in row.iter().enumerate() {
            p_j[j] += c as f64;
        }
    }
    p_bar /= items;
    let p_e: f64 = p_j.iter().map(|&s| (s / (items * n)).powi(2)).sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return 1.0;
    }
    (p_bar - p_e) / (1.0 - p_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judgment::Choice;
    use proptest::prelude::*;

    #[test]
    fn hand_fixture() {
        let m = JudgmentMatrix::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        assert!((fleiss_kappa(&m) + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_agreement() {
        let m = JudgmentMatrix::new(vec![vec![3, 0], vec![0, 3], vec![3, 0]]).unwrap();
        assert_eq!(fleiss_kappa(&m), 1.0);
        let one_category = JudgmentMatrix::new(vec![vec![3, 0], vec![3, 0]]).unwrap();
        assert_eq!(fleiss_kappa(&one_category), 1.0);
    }

    #[test]
    fn needs_two_raters() {
        assert!(JudgmentMatrix::new(vec![vec![1, 0]]).is_err());
        assert!(JudgmentMatrix::new(vec![vec![2, 0], vec![1, 2]]).is_err());
        assert!(JudgmentMatrix::new(vec![]).is_err());
    }

    #[test]
    fn from_records_counts_resolved_choices() {
        let rec = |a: &str, p: &str, r: Resolved| JudgmentRecord {
            annotator: a.into(),
            pair_id: p.into(),
            choice: Choice::A,
            observed_side: if r == Resolved::Observed { Choice::A } else { Choice::B },
            resolved_choice: r,
            batch: 0,
            timestamp: 0,
        };
        let recs = vec![
            rec("x", "p1", Resolved::Observed),
            rec("y", "p1", Resolved::Observed),
            rec("x", "p2", Resolved::Manipulated),
            rec("y", "p2", Resolved::Observed),
        ];
        let m = JudgmentMatrix::from_records(&recs).unwrap();
        assert_eq!(m.rows(), &[vec![2, 0], vec![1, 1]]);
        let mut dup = recs.clone();
        dup.push(rec("x", "p1", Resolved::Observed));
        assert!(JudgmentMatrix::from_records(&dup).is_err());
    }

    fn matrix() -> impl Strategy<Value = Vec<Vec<usize>>> {
        (2usize..5, 2usize..4, 1usize..12).prop_flat_map(|(n, k, items)| {
            proptest::collection::vec(
                proptest::collection::vec(0..k, n).prop_map(move |ratings| {
                    let mut row = vec![0; k];
                    for r in ratings {
                        row[r] += 1;
                    }
                    row
                }),
                items,
            )
        })
    }

    proptest! {
        #[test]
        fn invariant_under_relabeling_and_reordering(rows in matrix(), rot in 0usize..3) {
            let m = JudgmentMatrix::new(rows.clone()).unwrap();
            let k = rows[0].len();
            let relabeled: Vec<Vec<usize>> = rows
                .iter()
                .map(|r| (0..k).map(|j| r[(j + rot) % k]).collect())
                .rev()
                .collect();
            let m2 = JudgmentMatrix::new(relabeled).unwrap();
            prop_assert!((fleiss_kappa(&m) - fleiss_kappa(&m2)).abs() < 1e-12);
        }
    }
}
