//! The Kato quantity `b(beta, V) = int_0^beta ||P_t V||_inf dt` and the
//! search for `beta` satisfying the smallness condition `b < delta/(5 - delta)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::{delta_of_alpha, kato_threshold};
use crate::field::ScalarField;
use crate::quadrature::{adaptive_simpson, SimpsonOptions};
use crate::spectral::SpectralData;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KatoCertificate {
    pub beta: f64,
    pub b: f64,
    pub quadrature_error: f64,
    /// `delta / (5 - delta)`, when decided against a threshold.
    pub threshold: Option<f64>,
    /// `b + quadrature_error < threshold`.
    pub admissible: Option<bool>,
}

impl KatoCertificate {
    /// Upper estimate of the Kato constant.
    pub fn b_upper(&self) -> f64 {
        self.b + self.quadrature_error
    }

    pub fn decide(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self.admissible = Some(self.b_upper() < threshold);
        self
    }
}

/// `t -> ||P_t V||_inf` with the spectral coefficients of `V` cached.
struct Decay<'a> {
    spectral: &'a SpectralData,
    coeffs: Vec<f64>,
    sup_v: f64,
}

impl<'a> Decay<'a> {
    fn new(spectral: &'a SpectralData, v: &ScalarField) -> Result<Self> {
        if v.len() != spectral.point_count() {
            return Err(Error::invalid(format!(
                "potential has {} entries, expected {}",
                v.len(),
                spectral.point_count()
            )));
        }
        if let Some(i) = v.iter().position(|&x| x < 0.0) {
            return Err(Error::invalid(format!(
                "Kato potential must be nonnegative (entry {i} = {})",
                v[i]
            )));
        }
        if spectral
            .potential()
            .is_some_and(|w| w.iter().any(|&x| x != 0.0))
        {
            return Err(Error::invalid(
                "Kato constant needs the unperturbed heat semigroup",
            ));
        }
        Ok(Self {
            spectral,
            coeffs: spectral.coefficients(v),
            sup_v: v.sup_norm(),
        })
    }

    fn at(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.sup_v;
        }
        let c: Vec<f64> = self
            .coeffs
            .iter()
            .zip(self.spectral.eigenvalues())
            .map(|(c, l)| c * (-l * t).exp())
            .collect();
        self.spectral
            .synthesize(&c)
            .iter()
            .fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// `||P_t V||_inf` at each requested time (`t = 0` gives `||V||_inf`).
pub fn decay_profile(spectral: &SpectralData, v: &ScalarField, times: &[f64]) -> Result<Vec<f64>> {
    let decay = Decay::new(spectral, v)?;
    times
        .iter()
        .map(|&t| {
            if t >= 0.0 && t.is_finite() {
                Ok(decay.at(t))
            } else {
                Err(Error::invalid(format!(
                    "profile time must be nonnegative, got {t}"
                )))
            }
        })
        .collect()
}

/// Kato constants at every `beta` of an increasing grid, integrating
/// consecutive intervals so that each certificate's error is at most `tol`.
pub fn kato_constants(
    spectral: &SpectralData,
    v: &ScalarField,
    betas: &[f64],
    tol: f64,
) -> Result<Vec<KatoCertificate>> {
    if betas.is_empty() {
        return Err(Error::invalid("beta grid is empty"));
    }
    if betas[0] <= 0.0
        || betas.windows(2).any(|w| w[1] <= w[0])
        || betas.iter().any(|b| !b.is_finite())
    {
        return Err(Error::invalid(
            "beta grid must be positive and strictly increasing",
        ));
    }
    let decay = Decay::new(spectral, v)?;
    let piece_tol = tol / betas.len() as f64;
    let mut out = Vec::with_capacity(betas.len());
    let (mut acc, mut err, mut lo) = (0.0, 0.0, 0.0);
    for (i, &beta) in betas.iter().enumerate() {
        let opts = SimpsonOptions {
            tol: piece_tol,
            // seeding toward t = 0 only matters on the first interval
            geometric_seeds: if i == 0 {
                SimpsonOptions::default().geometric_seeds
            } else {
                0
            },
            ..SimpsonOptions::default()
        };
        let r = adaptive_simpson(|t| Ok(decay.at(t)), lo, beta, &opts).map_err(|e| match e {
            Error::QuadratureBudget {
                best,
                error_bound,
                tol,
                panels,
            } => Error::QuadratureBudget {
                best: acc + best,
                error_bound: err + error_bound,
                tol,
                panels,
            },
            other => other,
        })?;
        acc += r.value;
        err += r.error_estimate;
        lo = beta;
        out.push(KatoCertificate {
            beta,
            b: acc.max(0.0),
            quadrature_error: err,
            threshold: None,
            admissible: None,
        });
    }
    Ok(out)
}

/// `b(beta, V)` by adaptive Simpson with error estimate at most `tol`.
pub fn kato_constant(
    spectral: &SpectralData,
    v: &ScalarField,
    beta: f64,
    tol: f64,
) -> Result<KatoCertificate> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    Ok(kato_constants(spectral, v, &[beta], tol)?.remove(0))
}

/// Certificates for the whole grid, each decided against `delta(alpha, n) / (5 - delta)`.
pub fn scan_admissible(
    spectral: &SpectralData,
    rho_minus: &ScalarField,
    alpha: f64,
    n: usize,
    betas: &[f64],
    tol: f64,
) -> Result<Vec<KatoCertificate>> {
    let threshold = kato_threshold(delta_of_alpha(alpha, n)?)?;
    Ok(kato_constants(spectral, rho_minus, betas, tol)?
        .into_iter()
        .map(|c| c.decide(threshold))
        .collect())
}

/// The admissible certificate with the largest `beta`, if any.
pub fn find_admissible(
    spectral: &SpectralData,
    rho_minus: &ScalarField,
    alpha: f64,
    n: usize,
    betas: &[f64],
    tol: f64,
) -> Result<Option<KatoCertificate>> {
    Ok(scan_admissible(spectral, rho_minus, alpha, n, betas, tol)?
        .into_iter()
        .rfind(|c| c.admissible == Some(true)))
}

/// Evenly spaced grid `start, ..., stop` with `count` points.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{build_sphere, Manifold};
    use crate::spectral::eigendecompose;

    fn sphere_spectrum() -> (Manifold, SpectralData) {
        let m: Manifold = build_sphere(1.0, 2).unwrap().into();
        let s = eigendecompose(&m, None, m.len()).unwrap();
        (m, s)
    }

    #[test]
    fn zero_potential_gives_zero() {
        let (m, s) = sphere_spectrum();
        let c = kato_constant(&s, &ScalarField::zeros(m.len()), 1.0, 1e-10).unwrap();
        assert_eq!(c.b, 0.0);
    }

    #[test]
    fn negative_potential_rejected() {
        let (m, s) = sphere_spectrum();
        let mut v = vec![0.0; m.len()];
        v[3] = -1.0;
        assert!(kato_constant(&s, &ScalarField::new(v).unwrap(), 1.0, 1e-8).is_err());
    }

    #[test]
    fn constant_potential_is_exact() {
        let (m, s) = sphere_spectrum();
        let c = kato_constant(&s, &ScalarField::constant(m.len(), 0.1), 2.0, 1e-10).unwrap();
        assert!((c.b - 0.2).abs() < 1e-10);
        assert!(c.quadrature_error < 1e-10);
    }

    #[test]
    fn boundary_case_is_rejected() {
        let cert = KatoCertificate {
            beta: 1.0,
            b: 0.25,
            quadrature_error: 0.0,
            threshold: None,
            admissible: None,
        };
        assert_eq!(cert.decide(0.25).admissible, Some(false));
        assert_eq!(cert.decide(0.2500001).admissible, Some(true));
    }

    #[test]
    fn grid_validation() {
        let (m, s) = sphere_spectrum();
        let v = ScalarField::zeros(m.len());
        assert!(kato_constants(&s, &v, &[], 1e-8).is_err());
        assert!(kato_constants(&s, &v, &[1.0, 0.5], 1e-8).is_err());
        assert_eq!(linear_grid(0.1, 2.0, 20).len(), 20);
    }
}
