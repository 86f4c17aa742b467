use std::f64::consts::PI;

use katolab::estimates::EstimateParams;
use katolab::kato::linear_grid;
use katolab::manifold::{build_sphere, build_torus_of_revolution, AnalyticFlatTorus, Manifold};
use katolab::spectral::eigendecompose;
use katolab::verify::{
    certify, check_betti, check_gradient_estimate, check_harnack, check_heat_kernel_bounds,
    check_j_bounds, check_schrodinger_norm, geometric_grid, run_suite, sample_pairs,
    schrodinger_potential, CheckKind, SuiteConfig, ANALYTIC_TOLERANCE,
};

fn unit_torus() -> (Manifold, katolab::SpectralData) {
    let t = AnalyticFlatTorus::new(vec![1.0, 1.0], 8).unwrap();
    let k = t.modes().len();
    let m: Manifold = t.into();
    let s = eigendecompose(&m, None, k).unwrap();
    (m, s)
}

#[test]
fn analytic_liyau_holds_on_dense_time_grid() {
    let (m, s) = unit_torus();
    let Manifold::Flat(t) = &m else {
        unreachable!()
    };
    let u0 = t.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos()).unwrap();
    let p = EstimateParams::new(2, 0.5, 2.0, 0.0).unwrap();
    let r = check_gradient_estimate(&m, &s, &u0, &p, &linear_grid(0.01, 1.0, 100)).unwrap();
    assert!(r.passed && r.worst_margin >= -ANALYTIC_TOLERANCE, "{r:?}");
    assert_eq!(r.samples_tested, 100 * m.len());
    assert_eq!(r.samples_csv().lines().count(), r.samples_tested + 1);
}

#[test]
fn analytic_harnack_on_sampled_pairs() {
    let (m, s) = unit_torus();
    let Manifold::Flat(t) = &m else {
        unreachable!()
    };
    let u0 = t
        .sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin())
        .unwrap();
    let p = EstimateParams::new(2, 0.5, 2.0, 0.0).unwrap();
    let pairs = sample_pairs(&m, 7, 16, 16).unwrap();
    assert_eq!(pairs.len(), 256);
    let r = check_harnack(&m, &s, &u0, &p, &pairs, &[(0.1, 0.2, 0.2)]).unwrap();
    assert!(r.passed, "{r:?}");
    assert_eq!(r.samples_tested + r.samples_skipped, 512);
}

#[test]
fn flat_torus_betti_chain_and_kernel_bounds() {
    let (m, s) = unit_torus();
    let p = EstimateParams::new(2, 0.5, 2.0, 0.0).unwrap();
    let diam = m.diameter().unwrap();
    let pairs = sample_pairs(&m, 0, 4, 8).unwrap();
    let hk =
        check_heat_kernel_bounds(&m, &s, &p, diam, &[0.05, 0.1, 0.2, 0.4, 0.9], &pairs).unwrap();
    assert!(hk.passed);
    // at t = beta/2 = 1 the measured side is theta(1)^2 ~ 1 < b1 = 2
    let betti = check_betti(&m, &s, &p, diam, 2).unwrap();
    assert!(!betti.passed);
    assert!((betti.metrics["vol_times_norm_1_inf"] - 1.0).abs() < 1e-10);
    // short times keep the measured side above 2
    let short = EstimateParams::new(2, 0.5, 0.06, 0.0).unwrap();
    assert!(check_betti(&m, &s, &short, diam, 2).unwrap().passed);
}

#[test]
fn sphere_mesh_suite_passes() {
    let m: Manifold = build_sphere(1.0, 2).unwrap().into();
    let report = run_suite(&m, &SuiteConfig::default()).unwrap();
    for r in &report.reports {
        assert!(r.passed, "{} failed: {r:?}", r.check_name);
    }
    assert_eq!(report.params.b, 0.0);
}

#[test]
fn suite_is_deterministic() {
    let m: Manifold = build_sphere(1.0, 1).unwrap().into();
    let cfg = SuiteConfig {
        seed: 42,
        ..SuiteConfig::default()
    };
    let a = serde_json::to_string(&run_suite(&m, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_suite(&m, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn suite_rejects_inadmissible_grid() {
    let m: Manifold = build_torus_of_revolution(2.0, 1.0, 16).unwrap().into();
    let cfg = SuiteConfig {
        beta: Some(5.0),
        checks: vec![CheckKind::GradientEstimate],
        ..SuiteConfig::default()
    };
    assert!(run_suite(&m, &cfg).is_err());
}

/// The stated norm bound uses the Kato constant of `rho_-`, while the
/// semigroup is driven by `2 (a - 1) rho_-`; on negatively curved regions the
/// measured growth overtakes the bound.
#[test]
fn stated_norm_bound_fails_on_torus_of_revolution() {
    let m: Manifold = build_torus_of_revolution(2.0, 1.0, 16).unwrap().into();
    let s = eigendecompose(&m, None, m.len()).unwrap();
    let cfg = SuiteConfig {
        beta_grid: linear_grid(0.01, 0.2, 20),
        ..SuiteConfig::default()
    };
    let (_, p) = certify(&m, &s, &cfg).unwrap();
    let w = schrodinger_potential(&m.rho_minus(), &p);
    let sp = eigendecompose(&m, Some(&w), m.len()).unwrap();
    let times = linear_grid(p.beta / 20.0, p.beta, 20);
    let norm = check_schrodinger_norm(&m, &sp, &p, &times).unwrap();
    assert!(!norm.passed && norm.worst_margin < -1.0);
    assert!(norm.metrics["max_duality_gap"] < 1e-10);
    let j = check_j_bounds(&m, &sp, &p, &times).unwrap();
    assert!(j.metrics["min_w_minus_one"] > -1e-10);
    assert!(j.worst_margin < 0.0);
}

#[test]
fn geometric_grid_endpoints() {
    let g = geometric_grid(0.01, 1.0, 5);
    assert!((g[0] - 0.01).abs() < 1e-15 && (g[4] - 1.0).abs() < 1e-12);
    assert!(g
        .windows(2)
        .all(|w| (w[1] / w[0] - 10f64.sqrt()).abs() < 1e-12));
}
