use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::ScalarField;

use super::flat::AnalyticFlatTorus;
use super::mesh::{DiscreteManifold, MeshFamily};

/// Fourier cutoff of the analytic twin returned with a flat torus mesh.
pub const DEFAULT_TWIN_CUTOFF: usize = 8;

/// A flat torus mesh together with its exact Fourier counterpart.
#[derive(Clone, Debug)]
pub struct FlatTorus {
    pub mesh: DiscreteManifold,
    pub analytic: AnalyticFlatTorus,
}

/// Periodic grid on `[0, Lx) x [0, Ly)`, each cell split along its diagonal.
/// Edge lengths are the exact flat ones, so every angle defect vanishes.
pub fn build_flat_torus(periods: [f64; 2], resolution: usize) -> Result<FlatTorus> {
    if periods.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::invalid(format!(
            "flat torus periods must be positive, got {periods:?}"
        )));
    }
    if resolution < 4 {
        return Err(Error::invalid(format!(
            "flat torus resolution must be at least 4, got {resolution}"
        )));
    }
    let n = resolution;
    let (hx, hy) = (periods[0] / n as f64, periods[1] / n as f64);
    let diag = hx.hypot(hy);
    let id = |i: usize, j: usize| (j % n) * n + (i % n);

    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            vertices.push([i as f64 * hx, j as f64 * hy, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * n * n);
    let mut lengths = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            lengths.push([hy, diag, hx]);
            faces.push([a, c, d]);
            lengths.push([hx, hy, diag]);
        }
    }
    let mesh = DiscreteManifold::from_intrinsic(vertices, faces, lengths)?
        .with_family(
            MeshFamily::FlatTorus,
            format!("flat-torus:{}x{},res={n}", periods[0], periods[1]),
        )
        .with_reference_curvature(ScalarField::zeros(n * n));
    let analytic = AnalyticFlatTorus::new(periods.to_vec(), DEFAULT_TWIN_CUTOFF)?;
    Ok(FlatTorus { mesh, analytic })
}

/// Icosahedron refined `subdivisions` times by edge midpoints, projected to
/// the sphere of the given radius.
pub fn build_sphere(radius: f64, subdivisions: usize) -> Result<DiscreteManifold> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!(
            "sphere radius must be positive, got {radius}"
        )));
    }
    if subdivisions < 1 {
        return Err(Error::invalid("sphere needs at least one subdivision"));
    }
    let (mut vertices, mut faces) = icosahedron();
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut refined = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |p: usize, q: usize| {
                let key = if p < q { (p, q) } else { (q, p) };
                *midpoint.entry(key).or_insert_with(|| {
                    let (u, v) = (vertices[p], vertices[q]);
                    vertices.push(normalize([u[0] + v[0], u[1] + v[1], u[2] + v[2]]));
                    vertices.len() - 1
                })
            };
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            refined.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = refined;
    }
    let vertices: Vec<[f64; 3]> = vertices
        .into_iter()
        .map(|p| p.map(|c| c * radius))
        .collect();
    let nv = vertices.len();
    Ok(DiscreteManifold::from_embedded(vertices, faces)?
        .with_family(
            MeshFamily::Sphere,
            format!("sphere:radius={radius},subdiv={subdivisions}"),
        )
        .with_reference_curvature(ScalarField::constant(nv, 1.0 / (radius * radius))))
}

/// Number of samples around the tube for a torus of revolution: roughly
/// square cells, always even so that the innermost and outermost circles
/// carry vertices.
pub fn tube_resolution(major: f64, minor: f64, resolution: usize) -> usize {
    let n = (resolution as f64 * minor / major).round() as usize;
    n.max(4).div_ceil(2) * 2
}

/// The embedded torus `((R + r cos v) cos u, (R + r cos v) sin u, r sin v)`
/// with `resolution` samples along the major circle.
///
/// The closed-form Gaussian curvature `cos v / (r (R + r cos v))` is stored
/// as reference field.
pub fn build_torus_of_revolution(
    major: f64,
    minor: f64,
    resolution: usize,
) -> Result<DiscreteManifold> {
    if !(minor > 0.0 && major.is_finite()) {
        return Err(Error::invalid(format!(
            "tube radius must be positive, got r={minor}"
        )));
    }
    if major <= minor {
        return Err(Error::invalid(format!(
            "torus of revolution self-intersects: need R > r, got R={major}, r={minor}"
        )));
    }
    if resolution < 8 {
        return Err(Error::invalid(format!(
            "torus of revolution resolution must be at least 8, got {resolution}"
        )));
    }
    let nu = resolution;
    let nv = tube_resolution(major, minor, resolution);
    let id = |i: usize, j: usize| (j % nv) * nu + (i % nu);

    let mut vertices = Vec::with_capacity(nu * nv);
    let mut curvature = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        let v = 2.0 * PI * j as f64 / nv as f64;
        for i in 0..nu {
            let u = 2.0 * PI * i as f64 / nu as f64;
            let rho = major + minor * v.cos();
            vertices.push([rho * u.cos(), rho * u.sin(), minor * v.sin()]);
            curvature.push(v.cos() / (minor * rho));
        }
    }
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    Ok(DiscreteManifold::from_embedded(vertices, faces)?
        .with_family(
            MeshFamily::TorusOfRevolution,
            format!("torus-rev:R={major},r={minor},res={resolution}"),
        )
        .with_reference_curvature(ScalarField::from_vec(curvature)))
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    p.map(|c| c / n)
}

fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let vertices = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (vertices, faces)
}

/// Regular icosahedron with unit circumradius, for tests and examples.
pub fn icosahedron_mesh() -> Result<DiscreteManifold> {
    let (v, f) = icosahedron();
    DiscreteManifold::from_embedded(v, f)
}
