//! Spectral calculus for `Delta + W` on the discrete volume measure.
//!
//! Eigenfunctions are orthonormal with respect to the lumped-mass inner
//! product `<f, g> = sum_x f(x) g(x) a_x`, so for a mesh the generalized
//! problem `(L + diag(W a)) phi = lambda diag(a) phi` is reduced to the
//! symmetric matrix `a^{-1/2} L a^{-1/2} + diag(W)`.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::{AnalyticFlatTorus, DiscreteManifold, Manifold};

/// Default number of retained eigenpairs, capped by the vertex count.
pub const DEFAULT_MODE_COUNT: usize = 500;

/// Largest mesh handed to the dense eigensolver.
pub const DENSE_EIGEN_CAP: usize = 6_000;

/// Largest vertex count for which full kernel matrices are formed.
pub const DENSE_KERNEL_CAP: usize = 5_000;

/// Kernel queries need `exp(-lambda_trunc t) <= KERNEL_FLOOR_RATIO / Vol`.
pub const KERNEL_FLOOR_RATIO: f64 = 1e-8;

/// Relative residual accepted from the eigensolver.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

pub fn default_mode_count(n: usize) -> usize {
    DEFAULT_MODE_COUNT.min(n)
}

/// Truncated eigen-decomposition of `Delta + W`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    /// Mode-major: `eigenvectors[k * n + x]`.
    eigenvectors: Vec<f64>,
    n: usize,
    weights: Vec<f64>,
    potential: Option<ScalarField>,
    truncation_eigenvalue: f64,
    complete: bool,
}

/// A semigroup image together with its truncation-tail estimate.
#[derive(Clone, Debug)]
pub struct Evolved {
    pub field: ScalarField,
    /// `exp(-lambda_trunc t) ||f||_2`, zero when the basis is complete.
    pub tail_bound: f64,
}

/// Dense kernel `k_t(x, y) = sum_k exp(-lambda_k t) phi_k(x) phi_k(y)`,
/// taken with respect to the volume weights.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub t: f64,
    n: usize,
    entries: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorms {
    /// `max_y sum_x |k(x, y)| a_x`
    pub norm_1_1: f64,
    /// `max_x sum_y |k(x, y)| a_y`
    pub norm_inf_inf: f64,
    /// `max |k(x, y)|`
    pub norm_1_inf: f64,
}

/// JSON layout used for cross-language diffing of spectral data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralExport {
    pub eigenvalues: Vec<f64>,
    /// One array per mode, one entry per vertex.
    pub eigenvectors: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub potential: Option<Vec<f64>>,
}

/// Lowest `k` eigenpairs of `Delta + W` on `m`.
pub fn eigendecompose(
    m: &Manifold,
    potential: Option<&ScalarField>,
    k: usize,
) -> Result<SpectralData> {
    if k == 0 || k > m.len() {
        return Err(Error::invalid(format!(
            "mode count must be in 1..={}, got {k}",
            m.len()
        )));
    }
    if let Some(w) = potential {
        if w.len() != m.len() {
            return Err(Error::invalid(format!(
                "potential has {} entries, expected {}",
                w.len(),
                m.len()
            )));
        }
    }
    match m {
        Manifold::Mesh(mesh) => eigen_mesh(mesh, potential, k),
        Manifold::Flat(torus) => eigen_flat(torus, potential, k),
    }
}

fn eigen_mesh(
    m: &DiscreteManifold,
    potential: Option<&ScalarField>,
    k: usize,
) -> Result<SpectralData> {
    let n = m.vertex_count();
    if n > DENSE_EIGEN_CAP {
        return Err(Error::DenseCapExceeded {
            what: "eigensolver",
            vertices: n,
            cap: DENSE_EIGEN_CAP,
        });
    }
    let areas = m.vertex_areas();
    let inv_sqrt: Vec<f64> = areas.iter().map(|a| 1.0 / a.sqrt()).collect();
    let mut h = Mat::<f64>::zeros(n, n);
    for &(i, j, w) in m.stiffness().edge_weights() {
        let off = -w * inv_sqrt[i] * inv_sqrt[j];
        h[(i, j)] += off;
        h[(j, i)] += off;
        h[(i, i)] += w * inv_sqrt[i] * inv_sqrt[i];
        h[(j, j)] += w * inv_sqrt[j] * inv_sqrt[j];
    }
    if let Some(w) = potential {
        for (i, wi) in w.iter().enumerate() {
            h[(i, i)] += wi;
        }
    }
    let (vals, vecs) = symmetric_eigen(&h)?;

    let mut eigenvectors = Vec::with_capacity(k * n);
    for c in 0..k {
        eigenvectors.extend((0..n).map(|x| vecs[(x, c)] * inv_sqrt[x]));
    }
    Ok(SpectralData {
        truncation_eigenvalue: vals[k - 1],
        eigenvalues: vals[..k].to_vec(),
        eigenvectors,
        n,
        weights: areas.to_vec(),
        potential: potential.cloned(),
        complete: k == n,
    })
}

/// Dense symmetric eigen-decomposition with ascending eigenvalues and a
/// residual check on the returned pairs.
fn symmetric_eigen(h: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = h.nrows();
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SolverFailed {
            message: format!("{e:?}"),
            residual: f64::NAN,
        })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let vals: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    let vecs = Mat::from_fn(n, n, |r, c| u[(r, order[c])]);

    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let hv = h * &vecs;
    let mut residual = 0.0f64;
    for c in 0..n {
        for r in 0..n {
            residual = residual.max((hv[(r, c)] - vals[c] * vecs[(r, c)]).abs());
        }
    }
    if !(residual <= SOLVER_TOLERANCE * scale) {
        return Err(Error::SolverFailed {
            message: "eigenpair residual above tolerance".into(),
            residual: residual / scale,
        });
    }
    Ok((vals, vecs))
}

fn eigen_flat(
    t: &AnalyticFlatTorus,
    potential: Option<&ScalarField>,
    k: usize,
) -> Result<SpectralData> {
    let n = t.sample_count();
    let modes = t.modes();
    if k > modes.len() {
        return Err(Error::invalid(format!(
            "analytic torus keeps {} modes, requested {k}",
            modes.len()
        )));
    }
    let table: Vec<f64> = modes
        .iter()
        .flat_map(|m| t.sample_points().iter().map(move |x| t.mode_value(m, x)))
        .collect();
    let base: Vec<f64> = modes.iter().map(|m| m.eigenvalue).collect();
    let cutoff_tail = |shift: f64| {
        if k < modes.len() {
            base[k] + shift
        } else {
            t.first_excluded_eigenvalue() + shift
        }
    };

    let constant_shift = match potential {
        None => Some(0.0),
        Some(w) if w.iter().all(|&v| v == w[0]) => Some(w[0]),
        Some(_) => None,
    };
    if let Some(c) = constant_shift {
        return Ok(SpectralData {
            eigenvalues: base[..k].iter().map(|l| l + c).collect(),
            eigenvectors: table[..k * n].to_vec(),
            n,
            weights: t.weights().to_vec(),
            potential: potential.cloned(),
            truncation_eigenvalue: cutoff_tail(c),
            complete: false,
        });
    }

    // Galerkin projection of Delta + W onto all retained modes.
    let w = potential.expect("non-constant potential");
    let nm = modes.len();
    let weights = t.weights();
    let mut h = Mat::<f64>::zeros(nm, nm);
    for i in 0..nm {
        let pi = &table[i * n..(i + 1) * n];
        for j in 0..=i {
            let pj = &table[j * n..(j + 1) * n];
            let v: f64 = (0..n).map(|x| pi[x] * pj[x] * w[x] * weights[x]).sum();
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
        h[(i, i)] += base[i];
    }
    let (vals, vecs) = symmetric_eigen(&h)?;
    let mut eigenvectors = vec![0.0; k * n];
    for c in 0..k {
        let out = &mut eigenvectors[c * n..(c + 1) * n];
        for i in 0..nm {
            let coef = vecs[(i, c)];
            if coef != 0.0 {
                for (o, p) in out.iter_mut().zip(&table[i * n..(i + 1) * n]) {
                    *o += coef * p;
                }
            }
        }
    }
    let wmin = w.min();
    Ok(SpectralData {
        eigenvalues: vals[..k].to_vec(),
        eigenvectors,
        n,
        weights: weights.to_vec(),
        potential: potential.cloned(),
        truncation_eigenvalue: cutoff_tail(wmin),
        complete: false,
    })
}

impl SpectralData {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        &self.eigenvectors[k * self.n..(k + 1) * self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn potential(&self) -> Option<&ScalarField> {
        self.potential.as_ref()
    }

    /// Whether the basis spans every discrete field (full mesh decomposition).
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Eigenvalue controlling the truncation tail.
    pub fn truncation_eigenvalue(&self) -> f64 {
        self.truncation_eigenvalue
    }

    /// Smallest time at which kernels are trusted; zero for a complete basis.
    pub fn kernel_floor(&self) -> f64 {
        if self.complete {
            return 0.0;
        }
        let lambda = self.truncation_eigenvalue;
        if lambda <= 0.0 {
            return f64::INFINITY;
        }
        ((self.volume() / KERNEL_FLOOR_RATIO).ln() / lambda).max(0.0)
    }

    /// `<f, phi_k>` for every retained mode.
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        (0..self.mode_count())
            .map(|k| {
                self.eigenvector(k)
                    .iter()
                    .zip(f)
                    .zip(&self.weights)
                    .map(|((p, v), a)| p * v * a)
                    .sum()
            })
            .collect()
    }

    /// `sum_k c_k phi_k`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                for (o, p) in out.iter_mut().zip(self.eigenvector(k)) {
                    *o += c * p;
                }
            }
        }
        out
    }

    fn check_field(&self, f: &ScalarField) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::invalid(format!(
                "field has {} entries, expected {}",
                f.len(),
                self.n
            )));
        }
        Ok(())
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        Ok(())
    }

    fn tail(&self, f: &ScalarField, t: f64) -> f64 {
        if self.complete {
            0.0
        } else {
            (-self.truncation_eigenvalue * t).exp() * f.l2_norm(&self.weights)
        }
    }

    /// `exp(-t (Delta + W)) f` in the retained basis.
    pub fn semigroup_apply(&self, f: &ScalarField, t: f64) -> Result<Evolved> {
        self.check_field(f)?;
        Self::check_time(t)?;
        let c: Vec<f64> = self
            .coefficients(f)
            .into_iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| c * (-l * t).exp())
            .collect();
        Ok(Evolved {
            field: ScalarField::new(self.synthesize(&c))?,
            tail_bound: self.tail(f, t),
        })
    }

    /// `d/dt exp(-t (Delta + W)) f = -sum_k lambda_k exp(-lambda_k t) <f, phi_k> phi_k`.
    pub fn time_derivative(&self, f: &ScalarField, t: f64) -> Result<ScalarField> {
        self.check_field(f)?;
        Self::check_time(t)?;
        let c: Vec<f64> = self
            .coefficients(f)
            .into_iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| -l * c * (-l * t).exp())
            .collect();
        ScalarField::new(self.synthesize(&c))
    }

    fn check_kernel_time(&self, t: f64) -> Result<()> {
        Self::check_time(t)?;
        let t_min = self.kernel_floor();
        if t <= t_min {
            return Err(Error::BelowKernelFloor { t, t_min });
        }
        Ok(())
    }

    /// Kernel values on the diagonal, `k_t(x, x)`.
    pub fn kernel_diagonal(&self, t: f64) -> Result<ScalarField> {
        self.check_kernel_time(t)?;
        let mut out = vec![0.0; self.n];
        for (k, l) in self.eigenvalues.iter().enumerate() {
            let e = (-l * t).exp();
            for (o, p) in out.iter_mut().zip(self.eigenvector(k)) {
                *o += e * p * p;
            }
        }
        ScalarField::new(out)
    }

    /// A single kernel entry `k_t(x, y)`.
    pub fn kernel_entry(&self, x: usize, y: usize, t: f64) -> Result<f64> {
        self.check_kernel_time(t)?;
        Ok(self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let v = self.eigenvector(k);
                (-l * t).exp() * v[x] * v[y]
            })
            .sum())
    }

    /// Full kernel matrix; refused below the reliability floor and above the
    /// dense cap.
    pub fn kernel(&self, t: f64) -> Result<KernelMatrix> {
        self.check_kernel_time(t)?;
        if self.n > DENSE_KERNEL_CAP {
            return Err(Error::DenseCapExceeded {
                what: "kernel matrix",
                vertices: self.n,
                cap: DENSE_KERNEL_CAP,
            });
        }
        let n = self.n;
        let kk = self.mode_count();
        let a = Mat::from_fn(n, kk, |x, k| {
            self.eigenvector(k)[x] * (-0.5 * self.eigenvalues[k] * t).exp()
        });
        let prod = &a * a.transpose();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = prod[(i, j)];
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Ok(KernelMatrix { t, n, entries })
    }

    pub fn export(&self) -> SpectralExport {
        SpectralExport {
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: (0..self.mode_count())
                .map(|k| self.eigenvector(k).to_vec())
                .collect(),
            weights: self.weights.clone(),
            potential: self.potential.as_ref().map(|p| p.values().to_vec()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.export()).expect("spectral export is serializable")
    }
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.n..(x + 1) * self.n]
    }

    /// Most negative entry (zero if none); the positivity monitor.
    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::min)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// `sum_y k(x, y) a_y` for every `x`.
    pub fn row_integrals(&self, areas: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|x| self.row(x).iter().zip(areas).map(|(k, a)| k * a).sum())
            .collect()
    }
}

/// Operator norms of a kernel operator on the weighted measure. The
/// `(1, 1)` norm is computed column-wise, independently of the row-wise
/// `(inf, inf)` norm.
pub fn op_norms(k: &KernelMatrix, areas: &[f64]) -> OperatorNorms {
    let n = k.size();
    assert_eq!(areas.len(), n);
    let norm_inf_inf = (0..n)
        .map(|x| {
            k.row(x)
                .iter()
                .zip(areas)
                .map(|(v, a)| v.abs() * a)
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let mut col = vec![0.0; n];
    for (x, area) in areas.iter().enumerate().take(n) {
        for (c, v) in col.iter_mut().zip(k.row(x)) {
            *c += v.abs() * area;
        }
    }
    let norm_1_1 = col.into_iter().fold(0.0, f64::max);
    let norm_1_inf = k.entries.iter().fold(0.0, |m, v| f64::max(m, v.abs()));
    OperatorNorms {
        norm_1_1,
        norm_inf_inf,
        norm_1_inf,
    }
}
