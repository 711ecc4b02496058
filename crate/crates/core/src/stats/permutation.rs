//! Two-tailed permutation tests, exact or Monte-Carlo.
//!
//! Exact mode enumerates every sign pattern (paired) or every split of the
//! pooled values (unpaired) and reports `count / total`, the identity
//! permutation included. Monte-Carlo mode draws `R` resamples and reports
//! `(1 + count) / (R + 1)`. In both modes a resample counts when its
//! absolute statistic reaches the observed one, up to a small relative
//! tolerance for floating-point noise.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::median;
use crate::rng::indexed_rng;
use crate::{Error, Result};

/// Enumeration is used when the number of permutations is at most this.
pub const EXACT_LIMIT: u64 = 1 << 20;
const BLOCK: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exact when the permutation count is within [`EXACT_LIMIT`].
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationConfig {
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
    pub mode: Mode,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self {
            resamples: 10_000,
            alpha: 0.05,
            seed: 0,
            mode: Mode::Auto,
        }
    }
}

impl PermutationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples < 1 {
            return Err(Error::validation("resamples must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnpairedStatistic {
    MeanDifference,
    MedianDifference,
}

impl UnpairedStatistic {
    pub fn compute(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            UnpairedStatistic::MeanDifference => mean(a) - mean(b),
            UnpairedStatistic::MedianDifference => median(a) - median(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub statistic: f64,
    pub p_value: f64,
    /// `Exact` or `MonteCarlo`.
    pub mode: Mode,
    /// Permutations enumerated or drawn.
    pub permutations: u64,
    pub significant: bool,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn reaches(stat: f64, observed: f64) -> bool {
    let tol = 1e-9 * observed.abs().max(1.0);
    stat.abs() >= observed.abs() - tol
}

fn use_exact(mode: Mode, permutations: Option<u64>) -> Result<bool> {
    match mode {
        Mode::MonteCarlo => Ok(false),
        Mode::Auto => Ok(permutations.is_some_and(|p| p <= EXACT_LIMIT)),
        Mode::Exact => match permutations {
            Some(p) if p <= EXACT_LIMIT => Ok(true),
            _ => Err(Error::validation(format!(
                "exact enumeration limited to {EXACT_LIMIT} permutations"
            ))),
        },
    }
}

fn finish(statistic: f64, count: u64, total: u64, exact: bool, alpha: f64) -> PermutationResult {
    let p_value = if exact {
        count as f64 / total as f64
    } else {
        (1 + count) as f64 / (total + 1) as f64
    };
    PermutationResult {
        statistic,
        p_value,
        mode: if exact { Mode::Exact } else { Mode::MonteCarlo },
        permutations: total,
        significant: p_value < alpha,
    }
}

/// Paired test on the per-item differences `a[i] - b[i]`; the statistic
/// is their mean.
pub fn paired_permutation_test(
    a: &[f64],
    b: &[f64],
    config: &PermutationConfig,
) -> Result<PermutationResult> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    paired_differences_test(&d, config)
}

pub fn paired_differences_test(d: &[f64], config: &PermutationConfig) -> Result<PermutationResult> {
    config.validate()?;
    if d.is_empty() {
        return Err(Error::validation("paired test needs at least one pair"));
    }
    let n = d.len();
    let observed = mean(d);
    let patterns = (n < 64).then(|| 1u64 << n);
    if use_exact(config.mode, patterns)? {
        let total = patterns.expect("checked");
        let count: u64 = (0..total)
            .into_par_iter()
            .filter(|&mask| {
                let s: f64 = d
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x })
                    .sum();
                reaches(s / n as f64, observed)
            })
            .count() as u64;
        return Ok(finish(observed, count, total, true, config.alpha));
    }
    let r = config.resamples;
    let count: u64 = (0..r.div_ceil(BLOCK))
        .into_par_iter()
        .map(|block| {
            let mut rng = indexed_rng(config.seed, "paired", block as u64);
            let size = BLOCK.min(r - block * BLOCK);
            (0..size)
                .filter(|_| {
                    let s: f64 = d
                        .iter()
                        .map(|&x| if rng.random::<bool>() { -x } else { x })
                        .sum();
                    reaches(s / n as f64, observed)
                })
                .count() as u64
        })
        .sum();
    Ok(finish(observed, count, r as u64, false, config.alpha))
}

/// Number of ways to choose `k` of `n`, if it fits in a `u64`.
fn binomial(n: usize, k: usize) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Unpaired test on the difference of group means.
pub fn unpaired_permutation_test(
    a: &[f64],
    b: &[f64],
    config: &PermutationConfig,
) -> Result<PermutationResult> {
    unpaired_permutation_test_with(a, b, UnpairedStatistic::MeanDifference, config)
}

pub fn unpaired_permutation_test_with(
    a: &[f64],
    b: &[f64],
    statistic: UnpairedStatistic,
    config: &PermutationConfig,
) -> Result<PermutationResult> {
    config.validate()?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::validation("unpaired test needs two non-empty groups"));
    }
    let observed = statistic.compute(a, b);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (na, n) = (a.len(), pooled.len());

    let splits = binomial(n, na);
    if use_exact(config.mode, splits)? {
        let total = splits.expect("checked");
        let mut ga = Vec::with_capacity(na);
        let mut gb = Vec::with_capacity(n - na);
        let mut count = 0u64;
        for chosen in (0..n).combinations(na) {
            ga.clear();
            gb.clear();
            let mut next = chosen.iter().peekable();
            for (i, &x) in pooled.iter().enumerate() {
                if next.peek() == Some(&&i) {
                    next.next();
                    ga.push(x);
                } else {
                    gb.push(x);
                }
            }
            if reaches(statistic.compute(&ga, &gb), observed) {
                count += 1;
            }
        }
        return Ok(finish(observed, count, total, true, config.alpha));
    }
    let r = config.resamples;
    let count: u64 = (0..r.div_ceil(BLOCK))
        .into_par_iter()
        .map(|block| {
            let mut rng = indexed_rng(config.seed, "unpaired", block as u64);
            let mut work = pooled.clone();
            let size = BLOCK.min(r - block * BLOCK);
            (0..size)
                .filter(|_| {
                    let (ga, gb) = work.partial_shuffle(&mut rng, na);
                    reaches(statistic.compute(ga, gb), observed)
                })
                .count() as u64
        })
        .sum();
    Ok(finish(observed, count, r as u64, false, config.alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact() -> PermutationConfig {
        PermutationConfig {
            mode: Mode::Exact,
            ..Default::default()
        }
    }

    #[test]
    fn equal_samples_give_one() {
        let a = [1.0, 2.5, -3.0];
        assert_eq!(paired_permutation_test(&a, &a, &exact()).unwrap().p_value, 1.0);
        let mc = PermutationConfig {
            mode: Mode::MonteCarlo,
            resamples: 500,
            ..Default::default()
        };
        assert_eq!(paired_permutation_test(&a, &a, &mc).unwrap().p_value, 1.0);
        assert_eq!(unpaired_permutation_test(&a, &a, &exact()).unwrap().p_value, 1.0);
    }

    #[test]
    fn ten_unit_differences() {
        let r = paired_differences_test(&[1.0; 10], &exact()).unwrap();
        assert_eq!(r.p_value, 2.0 / 1024.0);
        assert_eq!(r.permutations, 1024);
        let r = paired_differences_test(&[1.0], &exact()).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn separated_groups() {
        let r = unpaired_permutation_test(&[0.0; 3], &[10.0; 3], &exact()).unwrap();
        assert_eq!(r.permutations, 20);
        assert_eq!(r.p_value, 0.1);
        assert_eq!(r.statistic, -10.0);
    }

    #[test]
    fn auto_mode_switches_on_size() {
        let small = paired_differences_test(&[1.0; 20], &PermutationConfig::default()).unwrap();
        assert_eq!(small.mode, Mode::Exact);
        let big = paired_differences_test(&[1.0; 21], &PermutationConfig::default()).unwrap();
        assert_eq!(big.mode, Mode::MonteCarlo);
        assert!(paired_differences_test(&[1.0; 21], &exact()).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(paired_permutation_test(&[1.0], &[1.0, 2.0], &exact()).is_err());
        assert!(unpaired_permutation_test(&[], &[1.0], &exact()).is_err());
        let bad = PermutationConfig {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(paired_differences_test(&[1.0], &bad).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), Some(20));
        assert_eq!(binomial(20, 10), Some(184_756));
        assert_eq!(binomial(5, 0), Some(1));
    }

    proptest::proptest! {
        #[test]
        fn p_in_unit_interval_and_sign_symmetric(d in proptest::collection::vec(-5i32..5, 1..10)) {
            let d: Vec<f64> = d.into_iter().map(f64::from).collect();
            let neg: Vec<f64> = d.iter().map(|x| -x).collect();
            let p = paired_differences_test(&d, &exact()).unwrap().p_value;
            let q = paired_differences_test(&neg, &exact()).unwrap().p_value;
            proptest::prop_assert!(p > 0.0 && p <= 1.0);
            proptest::prop_assert_eq!(p, q);
        }
    }
}
