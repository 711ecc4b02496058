//! Assignment of pairs to annotators and their batches.

use std::collections::BTreeMap;

use acs_core::judgment::Choice;
use acs_core::rng::{keyed_rng, keyed_u64};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::JudgeError;

pub const DEFAULT_BATCH_SIZE: usize = 67;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub pair_id: String,
    pub annotators: Vec<String>,
    /// Where each annotator sees the observed sentence.
    pub presentation: BTreeMap<String, Choice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub annotator: String,
    pub index: usize,
    pub pair_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub pool: Vec<String>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
}

fn default_k() -> usize {
    1
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub seed: u64,
    pub k: usize,
    pub batch_size: usize,
    pub pool: Vec<String>,
    pub assignments: Vec<Assignment>,
    pub batches: Vec<Batch>,
    /// Bearer token per annotator.
    #[serde(default)]
    pub tokens: BTreeMap<String, String>,
}

impl Plan {
    pub fn request(&self) -> PlanRequest {
        PlanRequest {
            pool: self.pool.clone(),
            k: self.k,
            seed: self.seed,
            batch_size: self.batch_size,
        }
    }

    pub fn batches_of<'a>(&'a self, annotator: &'a str) -> impl Iterator<Item = &'a Batch> + 'a {
        self.batches.iter().filter(move |b| b.annotator == annotator)
    }

    pub fn annotator_for_token(&self, token: &str) -> Option<&str> {
        self.tokens
            .iter()
            .find(|(_, t)| t.as_str() == token)
            .map(|(a, _)| a.as_str())
    }

    /// Gives every annotator a fresh random token.
    pub fn issue_tokens(&mut self) {
        self.tokens = self
            .pool
            .iter()
            .map(|a| (a.clone(), uuid::Uuid::new_v4().simple().to_string()))
            .collect();
    }
}

/// Side on which `annotator` sees the observed sentence of `pair_id`.
pub fn observed_side(seed: u64, pair_id: &str, annotator: &str) -> Choice {
    if keyed_u64(seed, &["presentation", pair_id, annotator]) & 1 == 0 {
        Choice::A
    } else {
        Choice::B
    }
}

/// Assigns each pair to `k` distinct annotators, keeping annotator loads
/// within one pair of each other, and cuts each annotator's pairs into
/// batches. Tokens are left empty; see [`Plan::issue_tokens`].
pub fn plan_assignments(
    pair_ids: &[String],
    pool: &[String],
    k: usize,
    seed: u64,
    batch_size: usize,
) -> Result<Plan, JudgeError> {
    if k == 0 {
        return Err(JudgeError::Plan("k must be at least 1".into()));
    }
    if batch_size == 0 {
        return Err(JudgeError::Plan("batch size must be at least 1".into()));
    }
    let mut distinct = pool.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != pool.len() {
        return Err(JudgeError::Plan("annotator pool has duplicates".into()));
    }
    if pool.len() < k {
        return Err(JudgeError::Plan(format!(
            "pool of {} annotators cannot give {k} per pair",
            pool.len()
        )));
    }

    let mut rng = keyed_rng(seed, &["plan"]);
    let mut order: Vec<&String> = pair_ids.iter().collect();
    order.sort();
    order.dedup();
    order.shuffle(&mut rng);

    let mut load = vec![0usize; pool.len()];
    let mut per_annotator: Vec<Vec<String>> = vec![Vec::new(); pool.len()];
    let mut assignments = Vec::with_capacity(order.len());
    for pair in order {
        let mut cands: Vec<(usize, u64, usize)> = (0..pool.len())
            .map(|i| (load[i], rng.random::<u64>(), i))
            .collect();
        cands.sort_unstable();
        let mut chosen: Vec<usize> = cands[..k].iter().map(|c| c.2).collect();
        chosen.sort_unstable();
        for &i in &chosen {
            load[i] += 1;
            per_annotator[i].push(pair.clone());
        }
        let annotators: Vec<String> = chosen.iter().map(|&i| pool[i].clone()).collect();
        let presentation = annotators
            .iter()
            .map(|a| (a.clone(), observed_side(seed, pair, a)))
            .collect();
        assignments.push(Assignment {
            pair_id: pair.clone(),
            annotators,
            presentation,
        });
    }

    let batches = pool
        .iter()
        .zip(per_annotator)
        .flat_map(|(a, pairs)| {
            pairs
                .chunks(batch_size)
                .enumerate()
                .map(|(index, c)| Batch {
                    annotator: a.clone(),
                    index,
                    pair_ids: c.to_vec(),
                })
                .collect::<Vec<_>>()
        })
        .collect();

    Ok(Plan {
        seed,
        k,
        batch_size,
        pool: pool.to_vec(),
        assignments,
        batches,
        tokens: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i:04}")).collect()
    }

    fn pool(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("ann{i}")).collect()
    }

    #[test]
    fn study_design() {
        let plan = plan_assignments(&ids(335), &pool(5), 3, 1, 67).unwrap();
        for a in pool(5) {
            let batches: Vec<_> = plan.batches_of(&a).collect();
            assert_eq!(batches.len(), 3);
            assert!(batches.iter().all(|b| b.pair_ids.len() == 67));
            let all: HashSet<_> = batches.iter().flat_map(|b| b.pair_ids.iter()).collect();
            assert_eq!(all.len(), 201);
        }
        for asg in &plan.assignments {
            let set: HashSet<_> = asg.annotators.iter().collect();
            assert_eq!(set.len(), 3);
        }
    }

    #[test]
    fn single_annotator() {
        let plan = plan_assignments(&ids(201), &pool(1), 1, 1, 67).unwrap();
        assert_eq!(plan.batches.len(), 3);
    }

    #[test]
    fn pool_smaller_than_k() {
        assert!(plan_assignments(&ids(10), &pool(2), 3, 1, 67).is_err());
    }

    #[test]
    fn deterministic_and_balanced() {
        let a = plan_assignments(&ids(101), &pool(4), 3, 9, 10).unwrap();
        let b = plan_assignments(&ids(101), &pool(4), 3, 9, 10).unwrap();
        assert_eq!(a, b);
        let loads: Vec<usize> = pool(4)
            .iter()
            .map(|p| a.batches_of(p).map(|b| b.pair_ids.len()).sum())
            .collect();
        let (min, max) = (loads.iter().min().unwrap(), loads.iter().max().unwrap());
        assert!(max - min <= 1, "{loads:?}");
        assert_eq!(loads.iter().sum::<usize>(), 303);
    }

    #[test]
    fn presentation_is_a_pure_function() {
        let plan = plan_assignments(&ids(50), &pool(3), 2, 4, 67).unwrap();
        for asg in &plan.assignments {
            for (a, side) in &asg.presentation {
                assert_eq!(*side, observed_side(4, &asg.pair_id, a));
            }
        }
        let sides: HashSet<_> = plan
            .assignments
            .iter()
            .flat_map(|a| a.presentation.values())
            .collect();
        assert_eq!(sides.len(), 2);
    }
}
