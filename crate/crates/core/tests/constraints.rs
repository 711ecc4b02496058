//! Every pair generated from 1,000 random bundles is checked against the
//! generation constraints.

#[path = "support/constraints.rs"]
mod support;

#[test]
fn generated_pairs_satisfy_all_constraints() {
    let r = support::check_suite(20240611);
    assert!(r.pairs >= 100, "only {} pairs generated", r.pairs);
    assert!(r.violations.is_empty(), "{:#?}", r.violations);
    assert!(r.rerun_identical);
}
