use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Largest sample grid an analytic torus will allocate.
const MAX_SAMPLES: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Constant,
    Cos,
    Sin,
}

/// A real Fourier eigenfunction `sqrt(2/V) cos(2 pi k.x/L)` (or `sin`, or the
/// normalized constant).
#[derive(Clone, Debug, Serialize)]
pub struct FourierMode {
    pub wavevector: Vec<i64>,
    pub kind: ModeKind,
    pub eigenvalue: f64,
}

/// The flat torus `R^n / (L_1 Z x ... x L_n Z)` with its exact spectrum.
///
/// Fields live on a uniform sample grid with `2 * cutoff + 2` points per
/// axis. On that grid the retained modes are exactly orthonormal under the
/// equal quadrature weights `V / N`, so semigroups and kernels built from
/// them are exact up to the Fourier cutoff.
#[derive(Clone, Debug)]
pub struct AnalyticFlatTorus {
    periods: Vec<f64>,
    mode_cutoff: usize,
    samples_per_axis: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    modes: Vec<FourierMode>,
}

impl AnalyticFlatTorus {
    pub fn new(periods: Vec<f64>, mode_cutoff: usize) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::invalid("flat torus needs at least one period"));
        }
        if periods.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::invalid(format!(
                "flat torus periods must be positive, got {periods:?}"
            )));
        }
        if mode_cutoff < 1 {
            return Err(Error::invalid("mode cutoff must be at least 1"));
        }
        let dim = periods.len();
        let per_axis = 2 * mode_cutoff + 2;
        let total = per_axis
            .checked_pow(dim as u32)
            .filter(|&t| t <= MAX_SAMPLES)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "analytic torus grid {per_axis}^{dim} exceeds {MAX_SAMPLES} samples; lower the cutoff"
                ))
            })?;

        let points: Vec<Vec<f64>> = (0..total)
            .map(|mut idx| {
                (0..dim)
                    .map(|axis| {
                        let i = idx % per_axis;
                        idx /= per_axis;
                        periods[axis] * i as f64 / per_axis as f64
                    })
                    .collect()
            })
            .collect();
        let volume: f64 = periods.iter().product();
        let weights = vec![volume / total as f64; total];

        let mut modes = Vec::new();
        let c = mode_cutoff as i64;
        let span = (2 * c + 1) as usize;
        for idx in 0..span.pow(dim as u32) {
            let mut rem = idx;
            let k: Vec<i64> = (0..dim)
                .map(|_| {
                    let v = (rem % span) as i64 - c;
                    rem /= span;
                    v
                })
                .collect();
            let eigenvalue = 4.0
                * PI
                * PI
                * k.iter()
                    .zip(&periods)
                    .map(|(&ki, l)| (ki as f64 / l).powi(2))
                    .sum::<f64>();
            match k.iter().find(|&&ki| ki != 0) {
                None => modes.push(FourierMode {
                    wavevector: k,
                    kind: ModeKind::Constant,
                    eigenvalue,
                }),
                Some(&first) if first > 0 => {
                    modes.push(FourierMode {
                        wavevector: k.clone(),
                        kind: ModeKind::Cos,
                        eigenvalue,
                    });
                    modes.push(FourierMode {
                        wavevector: k,
                        kind: ModeKind::Sin,
                        eigenvalue,
                    });
                }
                Some(_) => {}
            }
        }
        modes.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));

        Ok(Self {
            periods,
            mode_cutoff,
            samples_per_axis: per_axis,
            points,
            weights,
            modes,
        })
    }

    pub fn dimension(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn mode_cutoff(&self) -> usize {
        self.mode_cutoff
    }

    pub fn samples_per_axis(&self) -> usize {
        self.samples_per_axis
    }

    pub fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    /// `sqrt(sum (L_i / 2)^2)`: the farthest point from any point is the
    /// antipodal corner of its fundamental cell.
    pub fn diameter(&self) -> f64 {
        self.periods
            .iter()
            .map(|l| (l / 2.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sample_count(&self) -> usize {
        self.points.len()
    }

    pub fn sample_points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Retained modes sorted by eigenvalue.
    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    /// Smallest eigenvalue not represented by the cutoff box.
    pub fn first_excluded_eigenvalue(&self) -> f64 {
        let lmax = self.periods.iter().copied().fold(0.0, f64::max);
        4.0 * PI * PI * ((self.mode_cutoff + 1) as f64 / lmax).powi(2)
    }

    /// First Betti number of the n-torus.
    pub fn first_betti_number(&self) -> usize {
        self.dimension()
    }

    pub fn descriptor(&self) -> String {
        let dims: Vec<String> = self.periods.iter().map(|l| l.to_string()).collect();
        format!("flat-torus:{},cutoff={}", dims.join("x"), self.mode_cutoff)
    }

    fn phase(&self, mode: &FourierMode, x: &[f64]) -> f64 {
        2.0 * PI
            * mode
                .wavevector
                .iter()
                .zip(x)
                .zip(&self.periods)
                .map(|((&k, xi), l)| k as f64 * xi / l)
                .sum::<f64>()
    }

    /// Value of an L^2-normalized mode at an arbitrary point.
    pub fn mode_value(&self, mode: &FourierMode, x: &[f64]) -> f64 {
        let v = self.volume();
        match mode.kind {
            ModeKind::Constant => 1.0 / v.sqrt(),
            ModeKind::Cos => (2.0 / v).sqrt() * self.phase(mode, x).cos(),
            ModeKind::Sin => (2.0 / v).sqrt() * self.phase(mode, x).sin(),
        }
    }

    /// Gradient of an L^2-normalized mode at an arbitrary point.
    pub fn mode_gradient(&self, mode: &FourierMode, x: &[f64]) -> Vec<f64> {
        let v = self.volume();
        let d = match mode.kind {
            ModeKind::Constant => 0.0,
            ModeKind::Cos => -(2.0 / v).sqrt() * self.phase(mode, x).sin(),
            ModeKind::Sin => (2.0 / v).sqrt() * self.phase(mode, x).cos(),
        };
        mode.wavevector
            .iter()
            .zip(&self.periods)
            .map(|(&k, l)| d * 2.0 * PI * k as f64 / l)
            .collect()
    }

    /// Shortest periodic displacement length between two points.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.periods)
            .map(|((a, b), l)| {
                let d = (a - b).rem_euclid(*l);
                d.min(l - d).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn distances_from(&self, source: usize) -> Result<ScalarField> {
        let x = self
            .points
            .get(source)
            .ok_or_else(|| Error::invalid(format!("sample {source} out of range")))?;
        Ok(ScalarField::from_vec(
            self.points.iter().map(|y| self.distance(x, y)).collect(),
        ))
    }

    /// Samples a function of position on the grid.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Result<ScalarField> {
        ScalarField::new(self.points.iter().map(|x| f(x)).collect())
    }

    /// Exact `|grad u|^2` of the band-limited interpolant of `u`.
    ///
    /// Coefficients come from the discrete inner product, which is exact for
    /// trigonometric polynomials within the cutoff.
    pub fn gradient_squared(&self, u: &ScalarField) -> Result<ScalarField> {
        if u.len() != self.sample_count() {
            return Err(Error::invalid(format!(
                "field has {} entries, torus grid has {} samples",
                u.len(),
                self.sample_count()
            )));
        }
        let coeffs: Vec<f64> = self
            .modes
            .iter()
            .map(|m| {
                self.points
                    .iter()
                    .zip(u.iter())
                    .zip(&self.weights)
                    .map(|((x, ux), w)| self.mode_value(m, x) * ux * w)
                    .sum()
            })
            .collect();
        let out = self
            .points
            .iter()
            .map(|x| {
                let mut g = vec![0.0; self.dimension()];
                for (m, c) in self.modes.iter().zip(&coeffs) {
                    if *c == 0.0 || m.kind == ModeKind::Constant {
                        continue;
                    }
                    for (gi, di) in g.iter_mut().zip(self.mode_gradient(m, x)) {
                        *gi += c * di;
                    }
                }
                g.iter().map(|v| v * v).sum()
            })
            .collect();
        Ok(ScalarField::from_vec(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_torus_low_spectrum() {
        let t = AnalyticFlatTorus::new(vec![1.0, 1.0], 4).unwrap();
        let ev: Vec<f64> = t.modes().iter().map(|m| m.eigenvalue).collect();
        let four_pi2 = 4.0 * PI * PI;
        assert_eq!(ev[0], 0.0);
        for e in &ev[1..5] {
            assert!((e - four_pi2).abs() < 1e-12);
        }
        for e in &ev[5..9] {
            assert!((e - 2.0 * four_pi2).abs() < 1e-12);
        }
        assert!(ev[9] > 2.0 * four_pi2 + 1.0);
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn modes_are_orthonormal_on_grid() {
        let t = AnalyticFlatTorus::new(vec![1.0, 2.0], 3).unwrap();
        let table: Vec<Vec<f64>> = t
            .modes()
            .iter()
            .map(|m| {
                t.sample_points()
                    .iter()
                    .map(|x| t.mode_value(m, x))
                    .collect()
            })
            .collect();
        for (i, a) in table.iter().enumerate() {
            for (j, b) in table.iter().enumerate() {
                let ip: f64 = a
                    .iter()
                    .zip(b)
                    .zip(t.weights())
                    .map(|((p, q), w)| p * q * w)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-12, "<{i},{j}> = {ip}");
            }
        }
    }

    #[test]
    fn gradient_of_single_cosine() {
        let t = AnalyticFlatTorus::new(vec![1.0, 1.0], 4).unwrap();
        let u = t.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos()).unwrap();
        let g = t.gradient_squared(&u).unwrap();
        for (x, gx) in t.sample_points().iter().zip(g.iter()) {
            let exact = (PI * (2.0 * PI * x[0]).sin()).powi(2);
            assert!((gx - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_oversized_grid() {
        assert!(AnalyticFlatTorus::new(vec![1.0; 4], 8).is_err());
        assert!(AnalyticFlatTorus::new(vec![1.0, -1.0], 2).is_err());
    }
}
