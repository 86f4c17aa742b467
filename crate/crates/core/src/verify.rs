//! End-to-end checks of the estimates against discrete solutions.
//!
//! Margins are relative: `(bound - observed) / bound`, negative on a
//! violation. Exact backends are held to [`ANALYTIC_TOLERANCE`]; meshes to
//! `c * h` with `c` fixed per mesh family (see [`tolerance_constant`]) and
//! `h` the mean edge length.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimates::{
    betti_bound, harnack_factor, heat_kernel_bounds, j_lower, liyau_rhs, schrodinger_norm_bound,
    EstimateParams,
};
use crate::field::ScalarField;
use crate::kato::{linear_grid, scan_admissible, KatoCertificate};
use crate::manifold::{
    build_flat_torus, build_sphere, build_torus_of_revolution, DiscreteManifold, Manifold,
    MeshFamily,
};
use crate::spectral::{eigendecompose, op_norms, SpectralData, DENSE_KERNEL_CAP, SOLVER_TOLERANCE};

pub const ANALYTIC_TOLERANCE: f64 = 1e-8;

/// Solutions below this value are skipped (truncation artifacts).
pub const POSITIVITY_FLOOR: f64 = 1e-14;

pub const PAIR_SOURCES: usize = 16;
pub const PAIR_TARGETS: usize = 16;

/// Worst-case relative overshoot of edge-graph distances on the builders'
/// triangulations, `2/sqrt(3) - 1` rounded up.
pub const EDGE_DISTANCE_OVERSHOOT: f64 = 0.16;

/// Margins this close to zero are rounding, not violations (refinement studies).
pub const ROUNDOFF_FLOOR: f64 = SOLVER_TOLERANCE;

/// Relative gap allowed between the column-wise and row-wise kernel norms.
pub const DUALITY_TOLERANCE: f64 = 1e-10;

/// Calibrated `c` in the mesh tolerance `c * h`: twice the largest ratio
/// (relative error of the ten lowest nonzero eigenvalues) / h seen on three
/// refinement levels of the builder's default shape. Loaded meshes have no
/// reference and get a flat 1.
pub fn tolerance_constant(family: MeshFamily) -> f64 {
    match family {
        MeshFamily::FlatTorus => 1.5,
        MeshFamily::Sphere => 0.4,
        MeshFamily::TorusOfRevolution => 0.25,
        MeshFamily::Loaded => 1.0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerance {
    pub value: f64,
    pub policy: String,
}

pub fn tolerance_for(m: &Manifold) -> Tolerance {
    match m {
        Manifold::Flat(_) => Tolerance {
            value: ANALYTIC_TOLERANCE,
            policy: format!("analytic {ANALYTIC_TOLERANCE:e}"),
        },
        Manifold::Mesh(mesh) => {
            let c = tolerance_constant(mesh.family());
            let h = mesh.mesh_size();
            Tolerance {
                value: c * h,
                policy: format!("c*h with c={c}, h={h:.6}"),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Location {
    Point {
        index: usize,
        t: f64,
    },
    Pair {
        x: usize,
        y: usize,
        t1: f64,
        t2: f64,
    },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SampleMargin {
    pub location: Location,
    pub bound: f64,
    pub observed: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub manifold: String,
    pub params: EstimateParams,
    /// Smallest relative margin `(bound - observed) / bound`.
    pub worst_margin: f64,
    pub worst_location: Option<Location>,
    pub samples_tested: usize,
    pub samples_skipped: usize,
    pub tolerance_used: f64,
    pub tolerance_policy: String,
    pub passed: bool,
    pub notes: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip)]
    pub samples: Vec<SampleMargin>,
}

impl VerificationReport {
    /// Violation magnitude `-worst_margin`, or zero when the margin is
    /// nonnegative or within [`ROUNDOFF_FLOOR`] of zero.
    pub fn violation(&self) -> f64 {
        let v = -self.worst_margin;
        if v > ROUNDOFF_FLOOR {
            v
        } else {
            0.0
        }
    }

    /// Per-sample margins as CSV.
    pub fn samples_csv(&self) -> String {
        let mut s = String::from("check,x,y,t1,t2,bound,observed,margin\n");
        for m in &self.samples {
            let (x, y, t1, t2) = match m.location {
                Location::Point { index, t } => (index.to_string(), String::new(), t, f64::NAN),
                Location::Pair { x, y, t1, t2 } => (x.to_string(), y.to_string(), t1, t2),
            };
            let t2 = if t2.is_nan() {
                String::new()
            } else {
                format!("{t2:e}")
            };
            let _ = writeln!(
                s,
                "{},{x},{y},{t1:e},{t2},{:e},{:e},{:e}",
                self.check_name, m.bound, m.observed, m.margin
            );
        }
        s
    }
}

/// Accumulates margins and the worst location.
struct Tracker {
    worst: f64,
    worst_location: Option<Location>,
    tested: usize,
    skipped: usize,
    samples: Vec<SampleMargin>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            worst: f64::INFINITY,
            worst_location: None,
            tested: 0,
            skipped: 0,
            samples: Vec::new(),
        }
    }

    fn record(&mut self, location: Location, bound: f64, observed: f64, margin: f64) {
        self.tested += 1;
        if margin < self.worst || self.worst_location.is_none() {
            self.worst = margin;
            self.worst_location = Some(location);
        }
        self.samples.push(SampleMargin {
            location,
            bound,
            observed,
            margin,
        });
    }

    /// Relative margin of `observed <= bound`.
    fn upper(&mut self, location: Location, bound: f64, observed: f64) {
        // an overflowed bound holds trivially; its relative margin tends to 1
        let margin = if bound.is_infinite() {
            1.0
        } else {
            (bound - observed) / bound.abs()
        };
        self.record(location, bound, observed, margin);
    }

    fn finish(
        self,
        name: &str,
        m: &Manifold,
        params: &EstimateParams,
        notes: Vec<String>,
        metrics: BTreeMap<String, f64>,
    ) -> Result<VerificationReport> {
        if self.tested == 0 {
            return Err(Error::invalid(format!(
                "{name}: no samples could be tested ({} skipped)",
                self.skipped
            )));
        }
        let tol = tolerance_for(m);
        Ok(VerificationReport {
            check_name: name.to_string(),
            manifold: m.descriptor(),
            params: *params,
            worst_margin: self.worst,
            worst_location: self.worst_location,
            samples_tested: self.tested,
            samples_skipped: self.skipped,
            tolerance_used: tol.value,
            tolerance_policy: tol.policy,
            passed: self.worst >= -tol.value,
            notes,
            metrics,
            samples: self.samples,
        })
    }
}

fn check_times(times: &[f64], strict: bool) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    if let Some(t) = times
        .iter()
        .find(|&&t| !(t.is_finite() && if strict { t > 0.0 } else { t >= 0.0 }))
    {
        return Err(Error::invalid(format!("invalid time {t} in grid")));
    }
    Ok(())
}

/// `W = -2 (a - 1) rho_-`, the potential whose semigroup controls `J`.
pub fn schrodinger_potential(rho_minus: &ScalarField, params: &EstimateParams) -> ScalarField {
    rho_minus.scaled(-2.0 * (params.a - 1.0))
}

/// `1 + eps * m / ||m||_inf` with `m` a seeded mixture of the first four
/// nonconstant modes; strictly positive for `eps < 1`.
pub fn manufactured_initial(s: &SpectralData, eps: f64, seed: u64) -> Result<ScalarField> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::invalid(format!(
            "mixture amplitude must lie in (0, 0.5], got {eps}"
        )));
    }
    let modes = s.mode_count().min(5);
    if modes < 2 {
        return Err(Error::invalid(
            "need at least two modes for a nonconstant initial datum",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![0.0; s.mode_count()];
    for c in coeffs.iter_mut().take(modes).skip(1) {
        *c = rng.gen_range(-1.0..=1.0);
    }
    let mix = s.synthesize(&coeffs);
    let sup = mix.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    ScalarField::new(mix.iter().map(|v| 1.0 + eps * v / sup).collect())
}

/// `p_{t0}(x0, .)`, whose evolution is the heat kernel solution started at `t0`.
pub fn heat_kernel_solution(s: &SpectralData, x0: usize, t0: f64) -> Result<ScalarField> {
    if x0 >= s.point_count() {
        return Err(Error::invalid(format!("point {x0} out of range")));
    }
    let floor = s.kernel_floor();
    if t0 <= floor {
        return Err(Error::BelowKernelFloor {
            t: t0,
            t_min: floor,
        });
    }
    let c: Vec<f64> = (0..s.mode_count())
        .map(|k| (-s.eigenvalues()[k] * t0).exp() * s.eigenvector(k)[x0])
        .collect();
    ScalarField::new(s.synthesize(&c))
}

/// Per-point `Q = c(x) |grad u|^2 / u^2 - u_t / u` at time `t`, where
/// `c = alpha * j(t)` or `alpha * J(x, t)`. Points with `u` below the
/// positivity floor are `None`.
pub fn q_field(
    m: &Manifold,
    s: &SpectralData,
    u0: &ScalarField,
    coefficient: &[f64],
    t: f64,
) -> Result<Vec<Option<f64>>> {
    let u = s.semigroup_apply(u0, t)?.field;
    let ut = s.time_derivative(u0, t)?;
    let g2 = m.gradient_squared(&u)?;
    Ok((0..u.len())
        .map(|x| {
            (u[x] > POSITIVITY_FLOOR).then(|| coefficient[x] * g2[x] / (u[x] * u[x]) - ut[x] / u[x])
        })
        .collect())
}

/// Li-Yau type estimate `alpha j |grad u|^2/u^2 - u_t/u <= n / ((2 - delta) alpha j t)`
/// for `u = P_t u0`.
pub fn check_gradient_estimate(
    m: &Manifold,
    s: &SpectralData,
    u0: &ScalarField,
    params: &EstimateParams,
    times: &[f64],
) -> Result<VerificationReport> {
    check_times(times, true)?;
    if !(u0.min() > 0.0) {
        return Err(Error::invalid("initial datum must be strictly positive"));
    }
    let mut tr = Tracker::new();
    for &t in times {
        let j = j_lower(t, params)?;
        let rhs = liyau_rhs(t, params)?;
        let coef = vec![params.alpha * j; u0.len()];
        for (x, q) in q_field(m, s, u0, &coef, t)?.into_iter().enumerate() {
            match q {
                Some(q) => tr.upper(Location::Point { index: x, t }, rhs, q),
                None => tr.skipped += 1,
            }
        }
    }
    let notes = if tr.skipped > 0 {
        vec![format!(
            "{} samples below positivity floor {POSITIVITY_FLOOR:e} skipped",
            tr.skipped
        )]
    } else {
        Vec::new()
    };
    tr.finish("gradient_estimate", m, params, notes, BTreeMap::new())
}

/// `j(t) <= J <= 1` and `w >= 1` for `w = exp(-t (Delta - 2 (a-1) rho_-)) 1`,
/// `J = w^{-1/(a-1)}`.
pub fn check_j_bounds(
    m: &Manifold,
    s_perturbed: &SpectralData,
    params: &EstimateParams,
    times: &[f64],
) -> Result<VerificationReport> {
    check_times(times, false)?;
    let one = ScalarField::constant(m.len(), 1.0);
    let power = -1.0 / (params.a - 1.0);
    let mut tr = Tracker::new();
    let mut metrics = BTreeMap::new();
    let (mut max_w, mut min_w_excess) = (f64::NEG_INFINITY, f64::INFINITY);
    for &t in times {
        let j = j_lower(t, params)?;
        let w = s_perturbed.semigroup_apply(&one, t)?.field;
        for (x, &wx) in w.iter().enumerate() {
            let loc = Location::Point { index: x, t };
            max_w = max_w.max(wx);
            min_w_excess = min_w_excess.min(wx - 1.0);
            if wx <= 0.0 {
                tr.record(loc, 1.0, wx, wx - 1.0);
                continue;
            }
            let jx = wx.powf(power);
            // lower envelope, upper bound, and w >= 1
            let m_lower = (jx - j) / j;
            let m_upper = 1.0 - jx;
            let m_w = wx - 1.0;
            let (margin, bound, observed) = [(m_lower, j, jx), (m_upper, 1.0, jx), (m_w, 1.0, wx)]
                .into_iter()
                .fold(
                    (f64::INFINITY, 0.0, 0.0),
                    |a, b| if b.0 < a.0 { b } else { a },
                );
            tr.record(loc, bound, observed, margin);
        }
    }
    metrics.insert("max_w".into(), max_w);
    metrics.insert("min_w_minus_one".into(), min_w_excess);
    tr.finish("j_bounds", m, params, Vec::new(), metrics)
}

/// `||exp(-t (Delta - 2 (a-1) rho_-))||_{1,1} <= (1/(1-b))^{1 + t/beta}`,
/// with the duality `||.||_{1,1} = ||.||_{inf,inf}` checked on kernel samples.
pub fn check_schrodinger_norm(
    m: &Manifold,
    s_perturbed: &SpectralData,
    params: &EstimateParams,
    times: &[f64],
) -> Result<VerificationReport> {
    check_times(times, false)?;
    let one = ScalarField::constant(m.len(), 1.0);
    let floor = s_perturbed.kernel_floor();
    let mut tr = Tracker::new();
    let mut notes = Vec::new();
    let mut max_gap = 0.0f64;
    let mut witness_times = 0usize;
    for &t in times {
        let bound = schrodinger_norm_bound(t, params)?;
        if t > floor && m.len() <= DENSE_KERNEL_CAP {
            let k = s_perturbed.kernel(t)?;
            let norms = op_norms(&k, m.weights());
            let gap = (norms.norm_1_1 - norms.norm_inf_inf).abs() / norms.norm_inf_inf.max(1.0);
            max_gap = max_gap.max(gap);
            tr.upper(Location::Point { index: 0, t }, bound, norms.norm_1_1);
        } else {
            // ||w||_inf is a lower bound for the (inf, inf) norm
            let w = s_perturbed.semigroup_apply(&one, t)?.field;
            let (x, _) = w.map(f64::abs).argmax();
            tr.upper(Location::Point { index: x, t }, bound, w[x].abs());
            witness_times += 1;
        }
    }
    if witness_times > 0 {
        notes.push(format!(
            "{witness_times} time(s) below kernel floor {floor:.3e} or above dense cap: used ||w||_inf witness"
        ));
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("max_duality_gap".into(), max_gap);
    // the Kato constant is linear in the potential
    metrics.insert(
        "kato_constant_of_potential".into(),
        2.0 * (params.a - 1.0) * params.b,
    );
    let mut report = tr.finish("schrodinger_norm", m, params, notes, metrics)?;
    if max_gap > DUALITY_TOLERANCE {
        report.passed = false;
        report.notes.push(format!(
            "duality gap {max_gap:e} exceeds {DUALITY_TOLERANCE:e}"
        ));
    }
    Ok(report)
}

/// Deterministic sample of point pairs: farthest-point sources, each with
/// seeded random targets. Returns `(source, target, distance)`.
pub fn sample_pairs(
    m: &Manifold,
    seed: u64,
    sources: usize,
    targets: usize,
) -> Result<Vec<(usize, usize, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(sources * targets);
    for (src, dist) in m.farthest_point_sources(sources)? {
        for _ in 0..targets {
            let y = rng.gen_range(0..m.len());
            out.push((src, y, dist[y]));
        }
    }
    Ok(out)
}

/// Harnack inequality `u(x, t1) <= u(y, t2) F(d(x, y), t1, t2, T)` on sampled
/// pairs in both orientations.
pub fn check_harnack(
    m: &Manifold,
    s: &SpectralData,
    u0: &ScalarField,
    params: &EstimateParams,
    pairs: &[(usize, usize, f64)],
    windows: &[(f64, f64, f64)],
) -> Result<VerificationReport> {
    if pairs.is_empty() || windows.is_empty() {
        return Err(Error::invalid("Harnack check needs pairs and time windows"));
    }
    let shrink = if m.is_analytic() {
        0.0
    } else {
        EDGE_DISTANCE_OVERSHOOT
    };
    let mut tr = Tracker::new();
    let mut shrunk_worst = f64::INFINITY;
    for &(t1, t2, horizon) in windows {
        let u1 = s.semigroup_apply(u0, t1)?.field;
        let u2 = s.semigroup_apply(u0, t2)?.field;
        for &(a, b, d) in pairs {
            for (x, y) in [(a, b), (b, a)] {
                let loc = Location::Pair { x, y, t1, t2 };
                if u1[x] <= POSITIVITY_FLOOR || u2[y] <= POSITIVITY_FLOOR {
                    tr.skipped += 1;
                    continue;
                }
                let ln_ratio = u1[x].ln() - u2[y].ln();
                let f = harnack_factor(d, t1, t2, horizon, params)?;
                let margin = -(ln_ratio - f.ln_value).exp_m1();
                tr.record(loc, u2[y] * f.value, u1[x], margin);
                let fs = harnack_factor(d * (1.0 - shrink), t1, t2, horizon, params)?;
                shrunk_worst = shrunk_worst.min(-(ln_ratio - fs.ln_value).exp_m1());
            }
        }
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("worst_margin_shrunk_distance".into(), shrunk_worst);
    metrics.insert("distance_shrink_factor".into(), 1.0 - shrink);
    tr.finish("harnack", m, params, Vec::new(), metrics)
}

/// Diagonal and sampled off-diagonal heat kernel values against the closed
/// form bounds, for grid times in `(t_min, beta/2)`.
pub fn check_heat_kernel_bounds(
    m: &Manifold,
    s: &SpectralData,
    params: &EstimateParams,
    diam: f64,
    times: &[f64],
    pairs: &[(usize, usize, f64)],
) -> Result<VerificationReport> {
    check_times(times, true)?;
    let floor = s.kernel_floor();
    let usable: Vec<f64> = times
        .iter()
        .copied()
        .filter(|&t| t > floor && t < params.beta / 2.0)
        .collect();
    if usable.is_empty() {
        let t = times.iter().copied().fold(0.0, f64::max);
        return Err(Error::BelowKernelFloor { t, t_min: floor });
    }
    let vol = m.volume();
    let mut tr = Tracker::new();
    tr.skipped = times.len() - usable.len();
    let mut notes = Vec::new();
    if tr.skipped > 0 {
        notes.push(format!(
            "{} grid time(s) outside (t_min={floor:.3e}, beta/2) skipped",
            tr.skipped
        ));
    }
    let mut clipped = 0usize;
    let mut metrics = BTreeMap::new();
    let mut prev_max = f64::INFINITY;
    let mut diag_monotone = true;
    for &t in &usable {
        let diag = s.kernel_diagonal(t)?;
        let on = heat_kernel_bounds(t, 0.0, params, diam, vol)?.on_diag;
        for (x, &p) in diag.iter().enumerate() {
            tr.upper(Location::Point { index: x, t }, on.value, p);
        }
        let max_diag = diag.max();
        diag_monotone &= max_diag <= prev_max * (1.0 + 1e-12);
        prev_max = max_diag;
        for &(x, y, d) in pairs {
            if d > diam {
                clipped += 1;
            }
            let off = heat_kernel_bounds(t, d.min(diam), params, diam, vol)?.off_diag;
            tr.upper(
                Location::Pair { x, y, t1: t, t2: t },
                off.value,
                s.kernel_entry(x, y, t)?,
            );
        }
    }
    if clipped > 0 {
        notes.push(format!(
            "{clipped} pair distance(s) above the diameter estimate clipped to it"
        ));
    }
    metrics.insert(
        "diagonal_max_nonincreasing".into(),
        if diag_monotone { 1.0 } else { 0.0 },
    );
    tr.finish("heat_kernel_bounds", m, params, notes, metrics)
}

/// `b1 <= Vol ||exp(-beta/2 (Delta + rho))||_{1,inf}` and `b1 <= B`.
///
/// `s_rho` must be built with the signed curvature as potential.
pub fn check_betti(
    m: &Manifold,
    s_rho: &SpectralData,
    params: &EstimateParams,
    diam: f64,
    known_b1: usize,
) -> Result<VerificationReport> {
    let t = params.beta / 2.0;
    let floor = s_rho.kernel_floor();
    if t <= floor {
        return Err(Error::BelowKernelFloor { t, t_min: floor });
    }
    // positive definite kernel: the sup is attained on the diagonal
    let (index, norm_1_inf) = if m.len() <= DENSE_KERNEL_CAP {
        let k = s_rho.kernel(t)?;
        let n = op_norms(&k, m.weights()).norm_1_inf;
        (s_rho.kernel_diagonal(t)?.argmax().0, n)
    } else {
        s_rho.kernel_diagonal(t)?.argmax()
    };
    let measured = m.volume() * norm_1_inf;
    let bb = betti_bound(params, diam)?;
    let b1 = known_b1 as f64;
    let scale = b1.max(1.0);

    let mut tr = Tracker::new();
    tr.record(
        Location::Point { index, t },
        measured,
        b1,
        (measured - b1) / scale,
    );
    tr.record(
        Location::Point { index, t },
        bb.bound.value,
        b1,
        (bb.bound.value - b1) / scale,
    );

    let mut notes = Vec::new();
    if !bb.dimension_hypothesis_met {
        notes.push(format!(
            "dimension n={} < 3: Betti bound evaluated outside its hypothesis",
            params.n
        ));
    }
    if bb.bound.overflow {
        notes.push("Betti bound overflows double precision; reported as +inf".into());
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("known_b1".into(), b1);
    metrics.insert("vol_times_norm_1_inf".into(), measured);
    metrics.insert(
        "dimension_times_vol_norm_1_inf".into(),
        params.n as f64 * measured,
    );
    metrics.insert("ln_betti_bound".into(), bb.bound.ln_value);
    tr.finish("betti", m, params, notes, metrics)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    GradientEstimate,
    JBounds,
    SchrodingerNorm,
    Harnack,
    HarnackKernel,
    HeatKernelBounds,
    Betti,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] = [
        CheckKind::GradientEstimate,
        CheckKind::JBounds,
        CheckKind::SchrodingerNorm,
        CheckKind::Harnack,
        CheckKind::HarnackKernel,
        CheckKind::HeatKernelBounds,
        CheckKind::Betti,
    ];

    pub fn parse(s: &str) -> Result<Vec<CheckKind>> {
        Ok(match s {
            "all" => Self::ALL.to_vec(),
            "gradient" => vec![CheckKind::GradientEstimate],
            "j-bounds" => vec![CheckKind::JBounds],
            "norm" => vec![CheckKind::SchrodingerNorm],
            "harnack" => vec![CheckKind::Harnack, CheckKind::HarnackKernel],
            "heat-kernel" => vec![CheckKind::HeatKernelBounds],
            "betti" => vec![CheckKind::Betti],
            other => {
                return Err(Error::invalid(format!(
                    "unknown suite '{other}' (all, gradient, j-bounds, norm, harnack, heat-kernel, betti)"
                )))
            }
        })
    }
}

/// Inputs of [`run_suite`]. Time grids are derived from `beta` unless given.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub alpha: f64,
    /// Dimension override; defaults to the manifold's.
    pub n: Option<usize>,
    /// Fixed `beta`; otherwise the largest admissible point of `beta_grid`.
    pub beta: Option<f64>,
    pub beta_grid: Vec<f64>,
    /// Retained eigenpairs; `None` keeps the full mesh basis.
    pub mode_count: Option<usize>,
    pub kato_tol: f64,
    pub seed: u64,
    pub checks: Vec<CheckKind>,
    pub mixture_amplitude: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            n: None,
            beta: None,
            beta_grid: linear_grid(0.1, 2.0, 20),
            mode_count: None,
            kato_tol: 1e-6,
            seed: 0,
            checks: CheckKind::ALL.to_vec(),
            mixture_amplitude: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub manifold: String,
    pub vertices: usize,
    pub volume: f64,
    pub diameter: f64,
    pub mesh_size: Option<f64>,
    pub negative_cotangent_weights: usize,
    pub certificate: KatoCertificate,
    pub params: EstimateParams,
    pub reports: Vec<VerificationReport>,
    pub passed: bool,
}

fn default_modes(m: &Manifold, requested: Option<usize>) -> usize {
    match (requested, m) {
        (Some(k), _) => k.min(m.len()),
        (None, Manifold::Mesh(mesh)) => mesh.vertex_count(),
        (None, Manifold::Flat(t)) => t.modes().len(),
    }
}

pub fn geometric_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let r = (stop / start).ln() / (count - 1) as f64;
    (0..count).map(|i| start * (r * i as f64).exp()).collect()
}

/// Certifies `(beta, b)` for `rho_-` and returns the parameter bundle, with
/// `b` replaced by its upper estimate `b + quadrature error`.
pub fn certify(
    m: &Manifold,
    s: &SpectralData,
    cfg: &SuiteConfig,
) -> Result<(KatoCertificate, EstimateParams)> {
    let n = cfg.n.unwrap_or(m.dimension());
    let rho_minus = m.rho_minus();
    let grid = match cfg.beta {
        Some(beta) => vec![beta],
        None => cfg.beta_grid.clone(),
    };
    let certs = scan_admissible(s, &rho_minus, cfg.alpha, n, &grid, cfg.kato_tol)?;
    let cert = certs
        .iter()
        .rev()
        .find(|c| c.admissible == Some(true))
        .copied()
        .ok_or_else(|| {
            Error::invalid(format!(
                "no admissible beta for alpha={} on {} (smallest b = {:.4e}, threshold {:.4e})",
                cfg.alpha,
                m.descriptor(),
                certs[0].b,
                certs[0].threshold.unwrap_or(f64::NAN)
            ))
        })?;
    let params = EstimateParams::new(n, cfg.alpha, cert.beta, cert.b_upper())?;
    Ok((cert, params))
}

/// A mesh rescaled until the Kato condition admits some `beta` of the grid.
#[derive(Clone, Debug)]
pub struct ScaledCertificate {
    /// Homothety factor applied to the input mesh (1 when no scaling was needed).
    pub scale: f64,
    pub manifold: Manifold,
    pub spectral: SpectralData,
    pub certificate: KatoCertificate,
    pub params: EstimateParams,
}

/// Certifies `mesh`, doubling its lengths (dividing `rho_-` by 4) up to
/// `max_doublings` times while no grid point is admissible.
pub fn certify_with_scaling(
    mesh: &DiscreteManifold,
    cfg: &SuiteConfig,
    max_doublings: u32,
) -> Result<ScaledCertificate> {
    let mut scale = 1.0;
    loop {
        let m = Manifold::Mesh(if scale == 1.0 {
            mesh.clone()
        } else {
            mesh.scaled(scale)?
        });
        let s = eigendecompose(&m, None, default_modes(&m, cfg.mode_count))?;
        match certify(&m, &s, cfg) {
            Ok((certificate, params)) => {
                return Ok(ScaledCertificate {
                    scale,
                    manifold: m,
                    spectral: s,
                    certificate,
                    params,
                })
            }
            Err(Error::InvalidInput(_)) if scale < 2f64.powi(max_doublings as i32) => scale *= 2.0,
            Err(e) => return Err(e),
        }
    }
}

/// Runs the configured checks on one manifold.
pub fn run_suite(m: &Manifold, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let k = default_modes(m, cfg.mode_count);
    let s = eigendecompose(m, None, k)?;
    let (cert, params) = certify(m, &s, cfg)?;
    let beta = params.beta;
    let diam = m.diameter()?;
    let u0 = manufactured_initial(&s, cfg.mixture_amplitude, cfg.seed)?;
    let pairs = sample_pairs(m, cfg.seed, PAIR_SOURCES, PAIR_TARGETS)?;

    let needs_perturbed = cfg
        .checks
        .iter()
        .any(|c| matches!(c, CheckKind::JBounds | CheckKind::SchrodingerNorm));
    let rho_minus = m.rho_minus();
    let s_pert = if needs_perturbed && rho_minus.iter().any(|&v| v != 0.0) {
        Some(eigendecompose(
            m,
            Some(&schrodinger_potential(&rho_minus, &params)),
            k,
        )?)
    } else {
        None
    };
    let s_pert = s_pert.as_ref().unwrap_or(&s);

    let mut reports = Vec::new();
    for &check in &cfg.checks {
        let report = match check {
            CheckKind::GradientEstimate => check_gradient_estimate(
                m,
                &s,
                &u0,
                &params,
                &geometric_grid(beta / 100.0, beta, 20),
            )?,
            CheckKind::JBounds => {
                check_j_bounds(m, s_pert, &params, &linear_grid(beta / 20.0, beta, 20))?
            }
            CheckKind::SchrodingerNorm => {
                check_schrodinger_norm(m, s_pert, &params, &linear_grid(beta / 20.0, beta, 20))?
            }
            CheckKind::Harnack => {
                check_harnack(m, &s, &u0, &params, &pairs, &harnack_windows(beta))?
            }
            CheckKind::HarnackKernel => {
                let t0 = (2.0 * s.kernel_floor()).max(beta / 10.0);
                let u = heat_kernel_solution(&s, pairs[0].0, t0)?;
                let mut r = check_harnack(m, &s, &u, &params, &pairs, &harnack_windows(beta))?;
                r.check_name = "harnack_heat_kernel".into();
                r.notes.push(format!(
                    "u(., t) = p_(t + {t0:.4e})(x0 = {}, .)",
                    pairs[0].0
                ));
                r
            }
            CheckKind::HeatKernelBounds => {
                let lo = (1.05 * s.kernel_floor()).max(beta / 50.0);
                let hi = 0.45 * beta;
                if lo >= hi {
                    return Err(Error::BelowKernelFloor {
                        t: hi,
                        t_min: s.kernel_floor(),
                    });
                }
                check_heat_kernel_bounds(m, &s, &params, diam, &geometric_grid(lo, hi, 5), &pairs)?
            }
            CheckKind::Betti => {
                let s_rho = if m.rho().iter().all(|&v| v == 0.0) {
                    None
                } else {
                    Some(eigendecompose(m, Some(&m.rho()), k)?)
                };
                check_betti(
                    m,
                    s_rho.as_ref().unwrap_or(&s),
                    &params,
                    diam,
                    m.first_betti_number(),
                )?
            }
        };
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    Ok(SuiteReport {
        manifold: m.descriptor(),
        vertices: m.len(),
        volume: m.volume(),
        diameter: diam,
        mesh_size: m.mesh_size(),
        negative_cotangent_weights: m
            .as_mesh()
            .map_or(0, DiscreteManifold::negative_weight_count),
        certificate: cert,
        params,
        reports,
        passed,
    })
}

/// `(t1, t2, T)` windows scaled to `beta`.
pub fn harnack_windows(beta: f64) -> Vec<(f64, f64, f64)> {
    vec![
        (beta / 8.0, beta / 4.0, beta / 4.0),
        (beta / 4.0, beta / 2.0, beta / 2.0),
        (beta / 2.0, beta, beta),
    ]
}

/// Mesh families for refinement studies.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Sphere { radius: f64 },
    TorusOfRevolution { major: f64, minor: f64 },
    FlatTorus { lx: f64, ly: f64 },
}

impl Family {
    /// `level` is the subdivision count (sphere) or resolution (tori).
    pub fn build(&self, level: usize) -> Result<DiscreteManifold> {
        match *self {
            Family::Sphere { radius } => build_sphere(radius, level),
            Family::TorusOfRevolution { major, minor } => {
                build_torus_of_revolution(major, minor, level)
            }
            Family::FlatTorus { lx, ly } => Ok(build_flat_torus([lx, ly], level)?.mesh),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub vertices: usize,
    pub mesh_size: f64,
    pub worst_margin: f64,
    pub violation: f64,
    pub kato_b: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub check: String,
    pub rows: Vec<ConvergenceRow>,
    /// `log(v_i / v_{i+1}) / log(h_i / h_{i+1})` where both violations are positive.
    pub empirical_orders: Vec<Option<f64>>,
    pub violation_nonincreasing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub family: Family,
    pub beta: f64,
    pub gauss_bonnet_residuals: Vec<f64>,
    pub tables: Vec<ConvergenceTable>,
}

/// Runs the configured checks at each refinement level with `beta` held
/// fixed: the configured value, or the largest grid point admissible at
/// every level.
pub fn convergence_study(
    family: Family,
    levels: &[usize],
    cfg: &SuiteConfig,
) -> Result<ConvergenceStudy> {
    if levels.len() < 3 {
        return Err(Error::invalid("a refinement study needs at least 3 levels"));
    }
    let meshes: Vec<Manifold> = levels
        .iter()
        .map(|&l| family.build(l).map(Manifold::Mesh))
        .collect::<Result<_>>()?;
    let mut cfg = cfg.clone();
    if cfg.beta.is_none() {
        let mut admissible = vec![true; cfg.beta_grid.len()];
        for m in &meshes {
            let s = eigendecompose(m, None, default_modes(m, cfg.mode_count))?;
            let n = cfg.n.unwrap_or(m.dimension());
            let certs = scan_admissible(
                &s,
                &m.rho_minus(),
                cfg.alpha,
                n,
                &cfg.beta_grid,
                cfg.kato_tol,
            )?;
            for (ok, c) in admissible.iter_mut().zip(&certs) {
                *ok &= c.admissible == Some(true);
            }
        }
        let beta = cfg
            .beta_grid
            .iter()
            .zip(&admissible)
            .rfind(|(_, ok)| **ok)
            .map(|(b, _)| *b);
        cfg.beta =
            Some(beta.ok_or_else(|| {
                Error::invalid("no beta of the grid is admissible at every level")
            })?);
    }
    let beta = cfg.beta.expect("beta fixed above");
    let mut gb = Vec::new();
    let mut per_level: Vec<(usize, SuiteReport)> = Vec::new();
    for (&level, m) in levels.iter().zip(&meshes) {
        gb.push(
            m.as_mesh()
                .map_or(0.0, DiscreteManifold::gauss_bonnet_residual),
        );
        per_level.push((level, run_suite(m, &cfg)?));
    }
    let mut tables = Vec::new();
    for (i, check) in cfg.checks.iter().enumerate() {
        let rows: Vec<ConvergenceRow> = per_level
            .iter()
            .map(|(level, r)| ConvergenceRow {
                level: *level,
                vertices: r.vertices,
                mesh_size: r.mesh_size.unwrap_or(f64::NAN),
                worst_margin: r.reports[i].worst_margin,
                violation: r.reports[i].violation(),
                kato_b: r.certificate.b,
            })
            .collect();
        let empirical_orders = rows
            .windows(2)
            .map(|w| {
                (w[0].violation > 0.0 && w[1].violation > 0.0).then(|| {
                    (w[0].violation / w[1].violation).ln() / (w[0].mesh_size / w[1].mesh_size).ln()
                })
            })
            .collect();
        let violation_nonincreasing = rows.windows(2).all(|w| w[1].violation <= w[0].violation);
        tables.push(ConvergenceTable {
            check: per_level[0].1.reports[i].check_name.clone(),
            rows,
            empirical_orders,
            violation_nonincreasing,
        });
        let _ = check;
    }
    Ok(ConvergenceStudy {
        family,
        beta,
        gauss_bonnet_residuals: gb,
        tables,
    })
}
