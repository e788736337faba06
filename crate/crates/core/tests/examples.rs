#[allow(dead_code)]
mod lasso_exact {
    include!("../examples/lasso_exact.rs");
}
#[allow(dead_code)]
mod backtracking {
    include!("../examples/backtracking.rs");
}
#[allow(dead_code)]
mod error_budgets {
    include!("../examples/error_budgets.rs");
}
#[allow(dead_code)]
mod superiorization_tv {
    include!("../examples/superiorization_tv.rs");
}
#[allow(dead_code)]
mod rate_table {
    include!("../examples/rate_table.rs");
}
#[allow(dead_code)]
mod trace_roundtrip {
    include!("../examples/trace_roundtrip.rs");
}

#[test]
fn lasso_exact_is_compliant() {
    assert_eq!(lasso_exact::run_example().unwrap(), 1.0);
}

#[test]
fn backtracking_steps_stay_in_range() {
    let (l1, hint, steps) = backtracking::run_example().unwrap();
    assert!(steps[0] > l1);
    assert!(steps.windows(2).all(|w| w[1] > w[0]));
    assert!(*steps.last().unwrap() <= 2.0 * hint);
}

#[test]
fn error_budgets_are_positive_and_small() {
    for (variant, budget) in error_budgets::run_example().unwrap() {
        assert!(budget > 0.0 && budget < 1e-6, "{variant:?}: {budget}");
    }
}

#[test]
fn superiorization_reports_both_runs() {
    let (directed, zero) = superiorization_tv::run_example().unwrap();
    assert!(directed.is_finite() && zero.is_finite());
}

#[test]
fn rate_table_has_a_row_per_exponent() {
    let table = rate_table::run_example().unwrap();
    assert_eq!(table.lines().count(), 6);
    assert!(!table.contains("failed"));
}

#[test]
fn trace_roundtrip_preserves_content() {
    assert!(trace_roundtrip::run_example().unwrap());
}
