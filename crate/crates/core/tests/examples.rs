//! Every example runs and its headline result holds.

mod fit_case1 {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fit_case1.rs"));
}

mod cv_tuning {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/cv_tuning.rs"));
}

mod threshold_scan {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/threshold_scan.rs"));
}

mod importance {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/importance.rs"));
}

mod partial_dependence {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/partial_dependence.rs"));
}

mod tir_baseline {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/tir_baseline.rs"));
}

mod residual_diagnostics {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/residual_diagnostics.rs"));
}

mod cli_workflow {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/cli_workflow.rs"));
}

mod simulate {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/simulate.rs"));
}

#[test]
fn fit_case1_runs() {
    let s = fit_case1::run_example().unwrap();
    assert!(s.final_loss < s.initial_loss);
    assert!(s.rank_correlation > 0.3, "{}", s.rank_correlation);
}

#[test]
fn cv_tuning_runs() {
    let r = cv_tuning::run_example().unwrap();
    assert_eq!(r.cells.len(), 6);
    assert!(r.best_loss <= r.cells[0].curve[0]);
}

#[test]
fn threshold_scan_runs() {
    let (tir, evi) = threshold_scan::run_example().unwrap();
    assert!(!evi.reports.is_empty() && evi.reports.len() <= tir.reports.len());
    assert!(tir.best_q > 0.0 && tir.best_q < 1.0);
}

#[test]
fn importance_runs() {
    let r = importance::run_example().unwrap();
    let signal = r.corrected[..3].iter().cloned().fold(f64::MIN, f64::max);
    let noise = r.corrected[3..].iter().cloned().fold(f64::MIN, f64::max);
    assert!(signal > noise);
}

#[test]
fn partial_dependence_runs() {
    let (curve, truth) = partial_dependence::run_example().unwrap();
    // true effect of x1 is decreasing; the fitted curve follows it end to end
    assert!(truth[0] > truth[truth.len() - 1]);
    assert!(curve.values[0] > curve.values[curve.values.len() - 1]);
}

#[test]
fn tir_baseline_runs() {
    let m = tir_baseline::run_example().unwrap();
    assert!(m.grad_norm < 1e-8);
    assert!((m.theta[1] + 0.5).abs() < 0.2);
}

#[test]
fn residual_diagnostics_runs() {
    let r = residual_diagnostics::run_example().unwrap();
    assert_eq!(r.len(), 3);
    assert!(r[0].1.p_value > 0.01);
}

#[test]
fn cli_workflow_runs() {
    let dir = tempfile::tempdir().unwrap();
    let pred = cli_workflow::run_example_in(dir.path()).unwrap();
    assert_eq!(pred.len(), 1000);
    assert!(pred.iter().all(|g| *g > 0.0));
}

#[test]
fn simulate_runs() {
    let r = simulate::run_example().unwrap();
    assert_eq!(r.summary.len(), 4);
    assert!(r.summary.iter().all(|s| s.median.is_finite()));
}
