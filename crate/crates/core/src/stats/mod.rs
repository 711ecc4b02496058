//! Significance tests, inter-annotator agreement and the margin analyses.

mod agreement;
mod kappa;
mod permutation;
mod pos;

pub use agreement::{
    agreement_counts, gold_agreement, margin_vs_agreement, AgreementReport, AnnotatorAccuracy,
    BucketComparison, BucketReport, BucketSummary,
};
pub use kappa::{fleiss_kappa, JudgmentMatrix};
pub use permutation::{
    paired_differences_test, paired_permutation_test, unpaired_permutation_test,
    unpaired_permutation_test_with, Mode, PermutationConfig, PermutationResult,
    UnpairedStatistic, EXACT_LIMIT,
};
pub use pos::{
    pos_margin_analysis, pos_margin_analysis_from, PosGroupSummary, PosReport, MIN_GROUP_SIZE,
};

/// Quantile `q` of `values` by the midpoint rule: with the sorted values
/// `x` and `h = (n - 1) q`, the result is `(x[floor h] + x[ceil h]) / 2`.
///
/// Panics on an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let h = (x.len() - 1) as f64 * q.clamp(0.0, 1.0);
    (x[h.floor() as usize] + x[h.ceil() as usize]) / 2.0
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_quartiles() {
        let x = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&x, 0.25), 1.5);
        assert_eq!(median(&x), 2.5);
        assert_eq!(quantile(&x, 0.75), 3.5);
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&y, 0.25), 2.0);
        assert_eq!(median(&y), 3.0);
        assert_eq!(median(&[7.0]), 7.0);
    }
}
