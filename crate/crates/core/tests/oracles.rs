use std::f64::consts::PI;
use std::path::Path;

use aharmonic::experiment::{run_scenario, Scenario};

fn bundle(file: &str) -> aharmonic::experiment::ResultBundle {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/suite").join(file);
    run_scenario(&Scenario::load(&path).unwrap()).unwrap()
}

fn worst_rel(t: &[f64], got: &[f64], want: impl Fn(f64) -> f64) -> f64 {
    t.iter().zip(got).map(|(&t, g)| (g - want(t)).abs() / want(t).abs()).fold(0.0, f64::max)
}

#[test]
fn flat_p2_lengths_are_circles() {
    // u = ln r / ln 2, so {u = t} is the circle r = 2^t
    let b = bundle("01_flat_p2.json");
    let p = &b.profile;
    let ln2 = 2f64.ln();
    assert!(worst_rel(&p.t, &p.length, |t| 2.0 * PI * 2f64.powf(t)) < 1e-4);
    assert!(worst_rel(&p.t, &p.l1_coarea, |t| 2.0 * PI * ln2 * 2f64.powf(t)) < 1e-3);
    assert!(worst_rel(&p.t, &p.l2_coarea, |t| 2.0 * PI * ln2 * ln2 * 2f64.powf(t)) < 1e-3);
    for k in &p.k_int {
        assert!((k + 2.0 * PI).abs() < 1e-3, "k_int {k}");
    }
}

#[test]
fn catenoid_lengths_follow_cosh() {
    // u = arccosh r - arccosh 1.5, so L = 2 pi cosh(t + arccosh 1.5)
    let b = bundle("06_catenoid.json");
    let p = &b.profile;
    let t0 = 1.5f64.acosh();
    assert!(worst_rel(&p.t, &p.length, |t| 2.0 * PI * (t + t0).cosh()) < 1e-4);
    assert!(worst_rel(&p.t, &p.l1_coarea, |t| 2.0 * PI * (t + t0).sinh()) < 1e-3);
}

#[test]
fn cylinder_lengths_are_constant() {
    let b = bundle("07_cylinder_minimal.json");
    let p = &b.profile;
    assert!(worst_rel(&p.t, &p.length, |_| 2.0 * PI) < 1e-9);
    assert!(p.l1_coarea.iter().all(|v| v.abs() < 1e-8));
}

#[test]
fn positive_curvature_closes_the_gates() {
    let b = bundle("10_positive_bump_p2.json");
    assert!(b.verdicts.iter().all(|v| v.status == aharmonic::verdicts::Status::NotApplicable));
    assert!(b.diagnostics.warnings.iter().any(|w| w.contains("curvature is Nonnegative")));
}
