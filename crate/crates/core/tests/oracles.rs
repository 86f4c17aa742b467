//! Independent oracles for derived quantities: theta series, planted Kato
//! constants, trapezoid quadrature, brute-force lattice distances and
//! finite differences in time.

use std::f64::consts::PI;

use katolab::estimates::{
    betti_bound, delta_of_alpha, heat_kernel_bounds, kato_threshold, EstimateParams,
};
use katolab::kato::{decay_profile, kato_constant, kato_constants};
use katolab::manifold::{build_flat_torus, build_sphere, AnalyticFlatTorus, Manifold};
use katolab::spectral::{eigendecompose, op_norms};
use katolab::ScalarField;

/// `sum_k exp(-4 pi^2 k^2 t / L^2) / L`: the circle heat kernel on the diagonal.
fn theta_fourier(t: f64, period: f64) -> f64 {
    (-200i64..=200)
        .map(|k| (-4.0 * PI * PI * (k * k) as f64 * t / (period * period)).exp())
        .sum::<f64>()
        / period
}

/// Same quantity as a wrapped Gaussian `sum_m exp(-(m L)^2 / 4t) / sqrt(4 pi t)`.
fn theta_gaussian(t: f64, period: f64) -> f64 {
    (-200i64..=200)
        .map(|m| (-((m as f64 * period).powi(2)) / (4.0 * t)).exp())
        .sum::<f64>()
        / (4.0 * PI * t).sqrt()
}

#[test]
fn theta_forms_agree() {
    for t in [0.001, 0.01, 0.05, 0.1, 0.4, 2.0] {
        for l in [1.0, 2.5] {
            let (a, b) = (theta_fourier(t, l), theta_gaussian(t, l));
            assert!((a - b).abs() <= 1e-12 * a, "t={t} L={l}: {a} vs {b}");
        }
    }
}

#[test]
fn analytic_torus_diagonal_matches_theta_product() {
    let m: Manifold = AnalyticFlatTorus::new(vec![1.0, 2.0], 12).unwrap().into();
    let k = m.len().min(match &m {
        Manifold::Flat(t) => t.modes().len(),
        _ => unreachable!(),
    });
    let s = eigendecompose(&m, None, k).unwrap();
    for t in [0.05, 0.1, 0.4, 0.9] {
        let diag = s.kernel_diagonal(t).unwrap();
        let exact = theta_fourier(t, 1.0) * theta_fourier(t, 2.0);
        for &p in diag.iter() {
            assert!((p - exact).abs() <= 1e-10 * exact, "t={t}: {p} vs {exact}");
        }
    }
}

#[test]
fn unit_torus_operator_norms_match_theta() {
    let m: Manifold = AnalyticFlatTorus::new(vec![1.0, 1.0], 8).unwrap().into();
    let s = eigendecompose(&m, None, 289).unwrap();
    for t in [0.05, 0.2, 1.0] {
        let norms = op_norms(&s.kernel(t).unwrap(), m.weights());
        let theta2 = theta_fourier(t, 1.0).powi(2);
        assert!((norms.norm_1_inf - theta2).abs() < 1e-10 * theta2);
        // stochastic completeness
        assert!((norms.norm_1_1 - 1.0).abs() < 1e-12 && (norms.norm_inf_inf - 1.0).abs() < 1e-12);
    }
}

#[test]
fn planted_constant_potential_kato_constant() {
    let m: Manifold = AnalyticFlatTorus::new(vec![1.0, 1.0], 8).unwrap().into();
    let s = eigendecompose(&m, None, 289).unwrap();
    let v = ScalarField::constant(m.len(), 0.1);
    let c = kato_constant(&s, &v, 2.0, 1e-12).unwrap();
    assert!((c.b - 0.2).abs() < 1e-10, "{c:?}");
    assert!(c.quadrature_error < 1e-10);
}

/// Composite trapezoid with 2048 panels on a uniform grid.
fn trapezoid(values: &[f64], width: f64) -> f64 {
    let n = values.len() - 1;
    width / n as f64 * (values[1..n].iter().sum::<f64>() + 0.5 * (values[0] + values[n]))
}

#[test]
fn kato_constant_matches_trapezoid_on_sphere() {
    let mesh = build_sphere(1.0, 2).unwrap();
    let v = ScalarField::new(
        mesh.vertices()
            .iter()
            .map(|p| (p[2] + 0.3).max(0.0).powi(2))
            .collect(),
    )
    .unwrap();
    let m: Manifold = mesh.into();
    let s = eigendecompose(&m, None, m.len()).unwrap();
    let beta = 0.5;
    let times: Vec<f64> = (0..=2048).map(|i| beta * i as f64 / 2048.0).collect();
    let oracle = trapezoid(&decay_profile(&s, &v, &times).unwrap(), beta);
    let c = kato_constant(&s, &v, beta, 1e-9).unwrap();
    // trapezoid error ~ beta h^2 max|f''| / 12, far below 1e-6 here
    assert!((c.b - oracle).abs() < 1e-6, "{} vs {oracle}", c.b);

    let grid = [0.1, 0.2, 0.3, 0.4, 0.5];
    let cumulative = kato_constants(&s, &v, &grid, 1e-9).unwrap();
    assert!((cumulative[4].b - c.b).abs() < 1e-8);
    assert!(cumulative.windows(2).all(|w| w[1].b > w[0].b));
}

#[test]
fn three_torus_distances_match_lattice_brute_force() {
    let t = AnalyticFlatTorus::new(vec![1.0, 1.0, 1.0], 2).unwrap();
    let origin = &t.sample_points()[0];
    let dist = t.distances_from(0).unwrap();
    let mut farthest = 0.0f64;
    for (y, d) in t.sample_points().iter().zip(dist.iter()) {
        let mut best = f64::INFINITY;
        for i in -1..=1 {
            for j in -1..=1 {
                for k in -1..=1 {
                    let shift = [i as f64, j as f64, k as f64];
                    let r: f64 = (0..3)
                        .map(|a| (y[a] + shift[a] - origin[a]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    best = best.min(r);
                }
            }
        }
        assert!((best - d).abs() < 1e-14);
        farthest = farthest.max(best);
    }
    assert!((farthest - 3f64.sqrt() / 2.0).abs() < 1e-14);
    assert!((t.diameter() - 3f64.sqrt() / 2.0).abs() < 1e-15);
}

#[test]
fn time_derivative_matches_central_difference() {
    let flat = build_flat_torus([1.0, 1.0], 10).unwrap();
    let m: Manifold = flat.mesh.into();
    let s = eigendecompose(&m, None, m.len()).unwrap();
    let u0 = ScalarField::new(
        (0..m.len())
            .map(|i| 1.0 + 0.3 * ((i * 7 % 13) as f64 / 13.0))
            .collect(),
    )
    .unwrap();
    let (t, h) = (0.01, 1e-6);
    let ut = s.time_derivative(&u0, t).unwrap();
    let plus = s.semigroup_apply(&u0, t + h).unwrap().field;
    let minus = s.semigroup_apply(&u0, t - h).unwrap().field;
    let scale = ut.sup_norm();
    for i in 0..m.len() {
        let fd = (plus[i] - minus[i]) / (2.0 * h);
        assert!((fd - ut[i]).abs() < 1e-6 * scale, "{i}: {fd} vs {}", ut[i]);
    }
}

#[test]
fn formula_identities_on_grid() {
    for n in 2..=10 {
        for i in 1..=19 {
            let alpha = 0.05 * i as f64;
            let d = delta_of_alpha(alpha, n).unwrap();
            assert!(((2.0 - d) * (1.0 - alpha).powi(2) / n as f64 - d).abs() < 1e-14);
            let thr = kato_threshold(d).unwrap();
            assert!(thr <= 0.25);
            assert!(((5.0 / d - 1.0) * thr - 1.0).abs() < 1e-13);
        }
    }
}

#[test]
fn frozen_three_torus_betti_bound() {
    // delta = 2/13, E = 3 / ((2 - 2/13) / 2) = 13/4, C1 = e^{3/2};
    // B = e^{3/2} 2^{3/2 + 13/4} 2^{13/4} e^{3/8}
    let p = EstimateParams::new(3, 0.5, 1.0, 0.0).unwrap();
    assert!((p.delta - 2.0 / 13.0).abs() < 1e-15);
    let expected = (1.5f64 + 0.375).exp() * 2f64.powf(1.5 + 3.25 + 3.25);
    let b = betti_bound(&p, 3f64.sqrt() / 2.0).unwrap();
    assert!((b.bound.value - expected).abs() < 1e-10 * expected);
    assert!((expected - 1669.33).abs() < 0.01);
    assert!(b.dimension_hypothesis_met);
}

#[test]
fn flat_torus_on_diagonal_bound_values() {
    // n=2, alpha=1/2: delta=2/9, E = 2 / ((16/9) / 2) = 9/4; C1 = 2^{9/4} e^{1/2}
    let p = EstimateParams::new(2, 0.5, 2.0, 0.0).unwrap();
    let diam = 0.5f64.sqrt();
    let hk = heat_kernel_bounds(0.1, 0.0, &p, diam, 1.0).unwrap();
    let c1 = 2f64.powf(2.25) * 0.5f64.exp();
    assert!((hk.c1.value - c1).abs() < 1e-12 * c1);
    assert!((hk.on_diag.value - c1 * 0.1f64.powf(-2.25)).abs() < 1e-9 * hk.on_diag.value);
    assert!(hk.on_diag.value >= theta_fourier(0.1, 1.0).powi(2));
}
