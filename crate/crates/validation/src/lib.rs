//! Closed-form references used by the acceptance suite.

use std::f64::consts::PI;

/// Terms kept on each side of the theta sums; ample for `t >= 1e-4` and
/// periods up to 10.
const THETA_TERMS: i64 = 400;

/// Diagonal of the circle heat kernel, `sum_k exp(-4 pi^2 k^2 t / L^2) / L`.
pub fn circle_diagonal(t: f64, period: f64) -> f64 {
    (-THETA_TERMS..=THETA_TERMS)
        .map(|k| (-4.0 * PI * PI * (k * k) as f64 * t / (period * period)).exp())
        .sum::<f64>()
        / period
}

/// The same quantity by Poisson summation, `sum_m exp(-(m L)^2 / 4t) / sqrt(4 pi t)`.
pub fn circle_diagonal_wrapped(t: f64, period: f64) -> f64 {
    (-THETA_TERMS..=THETA_TERMS)
        .map(|m| (-(m as f64 * period).powi(2) / (4.0 * t)).exp())
        .sum::<f64>()
        / (4.0 * PI * t).sqrt()
}

/// `p_t(x, x)` on the flat torus with the given periods.
pub fn flat_torus_diagonal(t: f64, periods: &[f64]) -> f64 {
    periods.iter().map(|&l| circle_diagonal(t, l)).product()
}

/// Largest `t` on a bisection of `[lo, hi]` with `f(t) >= target`, for
/// decreasing `f`.
pub fn last_time_above(
    f: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
) -> Option<f64> {
    if f(lo) < target {
        return None;
    }
    if f(hi) >= target {
        return Some(hi);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_summation_agrees() {
        for t in [1e-3, 0.02, 0.3, 1.5] {
            let (a, b) = (circle_diagonal(t, 1.0), circle_diagonal_wrapped(t, 1.0));
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn unit_torus_crosses_two_near_four_hundredths() {
        let t = last_time_above(|t| flat_torus_diagonal(t, &[1.0, 1.0]), 2.0, 1e-3, 2.0).unwrap();
        assert!(t > 0.03 && t < 0.05, "{t}");
    }
}
