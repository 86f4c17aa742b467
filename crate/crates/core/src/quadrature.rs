//! Globally adaptive Simpson quadrature on seeded panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Panel budget for the adaptive refinement.
pub const DEFAULT_MAX_PANELS: usize = 4096;

/// Number of geometrically graded seed panels toward the left endpoint.
pub const DEFAULT_GEOMETRIC_SEEDS: usize = 10;

#[derive(Clone, Copy, Debug)]
pub struct SimpsonOptions {
    /// Target for the summed panel error estimates.
    pub tol: f64,
    pub max_panels: usize,
    /// Seed panels `[a, a + h/2^m], [a + h/2^m, a + h/2^(m-1)], ..., [a + h/2, b]`.
    pub geometric_seeds: usize,
}

impl SimpsonOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

impl Default for SimpsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_panels: DEFAULT_MAX_PANELS,
            geometric_seeds: DEFAULT_GEOMETRIC_SEEDS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
    pub evaluations: usize,
}

/// One panel `[a, b]` with samples at the quarter points.
#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    f: [f64; 5],
    value: f64,
    error: f64,
}

impl Panel {
    fn new(a: f64, b: f64, f: [f64; 5]) -> Self {
        let h = b - a;
        let whole = h / 6.0 * (f[0] + 4.0 * f[2] + f[4]);
        let halves = h / 12.0 * (f[0] + 4.0 * f[1] + 2.0 * f[2] + 4.0 * f[3] + f[4]);
        let diff = halves - whole;
        let value = halves + diff / 15.0;
        // two estimates agreeing bitwise still carry rounding error
        let rounding =
            4.0 * f64::EPSILON * h.abs() * f.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        Panel {
            a,
            b,
            f,
            value,
            error: (diff.abs() / 15.0).max(rounding),
        }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over `[a, b]`, always splitting the panel with the largest
/// error estimate, until the summed estimate drops to `opts.tol`.
pub fn adaptive_simpson<F>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &SimpsonOptions,
) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::invalid(format!(
            "integration interval [{a}, {b}] is empty or not finite"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!(
            "quadrature tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let mut evaluations = 0usize;
    let mut eval = |x: f64| -> Result<f64> {
        evaluations += 1;
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::invalid(format!("integrand is not finite at {x}")));
        }
        Ok(v)
    };

    let h = b - a;
    let mut breaks = vec![a];
    for m in (1..=opts.geometric_seeds).rev() {
        breaks.push(a + h * 0.5f64.powi(m as i32));
    }
    breaks.push(b);

    let mut heap = BinaryHeap::new();
    let mut left_value = eval(a)?;
    for w in breaks.windows(2) {
        let (pa, pb) = (w[0], w[1]);
        let q = (pb - pa) / 4.0;
        let fs = [
            left_value,
            eval(pa + q)?,
            eval(pa + 2.0 * q)?,
            eval(pa + 3.0 * q)?,
            eval(pb)?,
        ];
        left_value = fs[4];
        heap.push(Panel::new(pa, pb, fs));
    }

    let total_error = |heap: &BinaryHeap<Panel>| heap.iter().map(|p| p.error).sum::<f64>();
    while total_error(&heap) > opts.tol {
        if heap.len() >= opts.max_panels {
            let value = heap.iter().map(|p| p.value).sum();
            return Err(Error::QuadratureBudget {
                best: value,
                error_bound: total_error(&heap),
                tol: opts.tol,
                panels: heap.len(),
            });
        }
        let p = heap.pop().expect("at least one panel");
        let m = 0.5 * (p.a + p.b);
        let q = (p.b - p.a) / 8.0;
        let left = [p.f[0], eval(p.a + q)?, p.f[1], eval(p.a + 3.0 * q)?, p.f[2]];
        let right = [p.f[2], eval(m + q)?, p.f[3], eval(m + 3.0 * q)?, p.f[4]];
        heap.push(Panel::new(p.a, m, left));
        heap.push(Panel::new(m, p.b, right));
    }

    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(QuadratureResult {
        value: panels.iter().map(|p| p.value).sum(),
        error_estimate: panels.iter().map(|p| p.error).sum(),
        panels: panels.len(),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_exponentials() {
        let r =
            adaptive_simpson(|x| Ok(3.0 * x * x), 0.0, 2.0, &SimpsonOptions::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-12);
        let r = adaptive_simpson(
            |x| Ok((-5.0 * x).exp()),
            0.0,
            3.0,
            &SimpsonOptions::with_tol(1e-11),
        )
        .unwrap();
        let exact = (1.0 - (-15.0f64).exp()) / 5.0;
        assert!((r.value - exact).abs() < 1e-10);
        assert!(r.error_estimate <= 1e-11);
    }

    #[test]
    fn steep_integrand_near_zero() {
        // steep near t = 0, where the geometric seed panels sit
        let f = |x: f64| Ok(1.0 / (x + 1e-3).sqrt());
        let r = adaptive_simpson(f, 0.0, 1.0, &SimpsonOptions::with_tol(1e-9)).unwrap();
        let exact = 2.0 * ((1.0 + 1e-3f64).sqrt() - 1e-3f64.sqrt());
        assert!((r.value - exact).abs() < 1e-8);
    }

    #[test]
    fn budget_exhaustion_reports_best_value() {
        let opts = SimpsonOptions {
            tol: 1e-14,
            max_panels: 16,
            geometric_seeds: 2,
        };
        match adaptive_simpson(|x| Ok((40.0 * x).sin().abs()), 0.0, 10.0, &opts) {
            Err(Error::QuadratureBudget {
                best,
                error_bound,
                panels,
                ..
            }) => {
                assert!(best.is_finite() && error_bound > 1e-14);
                assert!(panels >= 16);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(adaptive_simpson(|_| Ok(1.0), 1.0, 1.0, &SimpsonOptions::default()).is_err());
    }
}
