use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Relative face-area threshold (against the mean face area) below which a
/// triangle is rejected as degenerate.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-12;

/// Which builder produced a mesh. Tolerance calibration is per family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFamily {
    FlatTorus,
    Sphere,
    TorusOfRevolution,
    Loaded,
}

/// Cotangent stiffness matrix stored as symmetric edge weights.
///
/// `(L u)_i = sum_j w_ij (u_i - u_j)`, so `L 1 = 0` holds exactly.
#[derive(Clone, Debug)]
pub struct Stiffness {
    size: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Stiffness {
    pub fn size(&self) -> usize {
        self.size
    }

    /// `(i, j, w_ij)` with `i < j`, sorted.
    pub fn edge_weights(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.size);
        let mut out = vec![0.0; self.size];
        for &(i, j, w) in &self.edges {
            let flux = w * (u[i] - u[j]);
            out[i] += flux;
            out[j] -= flux;
        }
        out
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.size;
        let mut m = vec![0.0; n * n];
        for &(i, j, w) in &self.edges {
            m[i * n + j] -= w;
            m[j * n + i] -= w;
            m[i * n + i] += w;
            m[j * n + j] += w;
        }
        m
    }

    pub fn negative_weight_count(&self) -> usize {
        self.edges.iter().filter(|e| e.2 < 0.0).count()
    }
}

/// A closed, orientable triangle surface with its P1 finite element data.
///
/// All geometry is derived from per-face edge lengths, so intrinsically flat
/// surfaces such as the flat torus are represented exactly even though they
/// have no isometric embedding stored in `vertices`.
#[derive(Clone, Debug)]
pub struct DiscreteManifold {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    /// `face_lengths[f][i]` is the length of the edge opposite corner `i`.
    face_lengths: Vec<[f64; 3]>,
    face_areas: Vec<f64>,
    corner_angles: Vec<[f64; 3]>,
    face_cotans: Vec<[f64; 3]>,
    vertex_areas: Vec<f64>,
    angle_defects: Vec<f64>,
    stiffness: Stiffness,
    adjacency: Vec<Vec<(usize, f64)>>,
    euler_char: i64,
    family: MeshFamily,
    descriptor: String,
    reference_curvature: Option<ScalarField>,
}

impl DiscreteManifold {
    /// Builds a mesh whose metric is induced by the vertex coordinates.
    pub fn from_embedded(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        check_indices(vertices.len(), &faces)?;
        let lengths = faces
            .iter()
            .map(|f| {
                let p = |k: usize| vertices[f[k]];
                [dist(p(1), p(2)), dist(p(2), p(0)), dist(p(0), p(1))]
            })
            .collect();
        Self::from_intrinsic(vertices, faces, lengths)
    }

    /// Builds a mesh from per-face edge lengths. Coordinates are kept only
    /// for export.
    pub fn from_intrinsic(
        vertices: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
        face_lengths: Vec<[f64; 3]>,
    ) -> Result<Self> {
        let nv = vertices.len();
        check_indices(nv, &faces)?;
        if face_lengths.len() != faces.len() {
            return Err(Error::invalid("one edge-length triple per face required"));
        }
        if faces.is_empty() {
            return Err(Error::invalid("mesh has no faces"));
        }
        check_topology(nv, &faces)?;

        let face_areas: Vec<f64> = face_lengths.iter().map(|l| heron(*l)).collect();
        let mean_area =
            face_areas.iter().filter(|a| a.is_finite()).sum::<f64>() / faces.len() as f64;
        let degenerate: Vec<usize> = face_areas
            .iter()
            .enumerate()
            .filter(|(_, &a)| !(a.is_finite() && a > DEGENERATE_AREA_RATIO * mean_area))
            .map(|(f, _)| f)
            .collect();
        if !degenerate.is_empty() {
            return Err(Error::DegenerateFaces { faces: degenerate });
        }

        let mut corner_angles = Vec::with_capacity(faces.len());
        let mut face_cotans = Vec::with_capacity(faces.len());
        for (l, &area) in face_lengths.iter().zip(&face_areas) {
            let mut ang = [0.0; 3];
            let mut cot = [0.0; 3];
            for i in 0..3 {
                let a = l[i];
                let b = l[(i + 1) % 3];
                let c = l[(i + 2) % 3];
                let num = b * b + c * c - a * a;
                ang[i] = (num / (2.0 * b * c)).clamp(-1.0, 1.0).acos();
                cot[i] = num / (4.0 * area);
            }
            corner_angles.push(ang);
            face_cotans.push(cot);
        }

        let mut vertex_areas = vec![0.0; nv];
        let mut angle_sums = vec![0.0; nv];
        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut lengths: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (f, tri) in faces.iter().enumerate() {
            for i in 0..3 {
                vertex_areas[tri[i]] += face_areas[f] / 3.0;
                angle_sums[tri[i]] += corner_angles[f][i];
                let key = edge_key(tri[(i + 1) % 3], tri[(i + 2) % 3]);
                *weights.entry(key).or_insert(0.0) += 0.5 * face_cotans[f][i];
                lengths.entry(key).or_insert(face_lengths[f][i]);
            }
        }
        let angle_defects = angle_sums.iter().map(|s| 2.0 * PI - s).collect();

        let mut adjacency = vec![Vec::new(); nv];
        for (&(i, j), &len) in &lengths {
            adjacency[i].push((j, len));
            adjacency[j].push((i, len));
        }
        let stiffness = Stiffness {
            size: nv,
            edges: weights.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
        };
        let euler_char = nv as i64 - stiffness.edges.len() as i64 + faces.len() as i64;

        Ok(Self {
            vertices,
            faces,
            face_lengths,
            face_areas,
            corner_angles,
            face_cotans,
            vertex_areas,
            angle_defects,
            stiffness,
            adjacency,
            euler_char,
            family: MeshFamily::Loaded,
            descriptor: format!("mesh:V={nv}"),
            reference_curvature: None,
        })
    }

    pub(crate) fn with_family(mut self, family: MeshFamily, descriptor: String) -> Self {
        self.family = family;
        self.descriptor = descriptor;
        self
    }

    pub(crate) fn with_reference_curvature(mut self, k: ScalarField) -> Self {
        self.reference_curvature = Some(k);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.stiffness.edges.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn face_lengths(&self) -> &[[f64; 3]] {
        &self.face_lengths
    }

    pub fn corner_angles(&self) -> &[[f64; 3]] {
        &self.corner_angles
    }

    /// Lumped (barycentric) vertex areas; the diagonal mass matrix.
    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    pub fn total_area(&self) -> f64 {
        self.vertex_areas.iter().sum()
    }

    pub fn stiffness(&self) -> &Stiffness {
        &self.stiffness
    }

    /// Meshes are surfaces.
    pub fn dimension(&self) -> usize {
        2
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler_char
    }

    /// First Betti number of a closed orientable connected surface, `2 - chi`.
    pub fn first_betti_number(&self) -> usize {
        (2 - self.euler_char).max(0) as usize
    }

    pub fn family(&self) -> MeshFamily {
        self.family
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn angle_defects(&self) -> &[f64] {
        &self.angle_defects
    }

    /// `|sum of angle defects - 2 pi chi|`.
    pub fn gauss_bonnet_residual(&self) -> f64 {
        let total: f64 = self.angle_defects.iter().sum();
        (total - 2.0 * PI * self.euler_char as f64).abs()
    }

    /// Discrete Gaussian curvature: angle defect over lumped area.
    pub fn gaussian_curvature(&self) -> ScalarField {
        ScalarField::from_vec(
            self.angle_defects
                .iter()
                .zip(&self.vertex_areas)
                .map(|(d, a)| d / a)
                .collect(),
        )
    }

    /// The smallest Ricci eigenvalue. On a surface `Ric = K g`, so this is `K`.
    pub fn rho(&self) -> ScalarField {
        self.gaussian_curvature()
    }

    /// Negative part of the Ricci lower bound, `max(0, -K)`.
    pub fn rho_minus(&self) -> ScalarField {
        self.rho().map(|k| (-k).max(0.0))
    }

    /// Closed-form curvature sampled at the vertices, when the builder knows it.
    pub fn reference_curvature(&self) -> Option<&ScalarField> {
        self.reference_curvature.as_ref()
    }

    /// Mean edge length.
    pub fn mesh_size(&self) -> f64 {
        let total: f64 = self.adjacency.iter().flatten().map(|e| e.1).sum();
        total / (2 * self.edge_count()) as f64
    }

    pub fn negative_weight_count(&self) -> usize {
        self.stiffness.negative_weight_count()
    }

    pub(crate) fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adjacency
    }

    /// Homothety `g -> s^2 g`: lengths scale by `s`, curvature by `1/s^2`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!(
                "metric scale factor must be positive, got {s}"
            )));
        }
        let vertices = self.vertices.iter().map(|p| p.map(|c| c * s)).collect();
        let lengths = self.face_lengths.iter().map(|l| l.map(|c| c * s)).collect();
        let mut out = Self::from_intrinsic(vertices, self.faces.clone(), lengths)?;
        out.family = self.family;
        out.descriptor = format!("{},scale={s}", self.descriptor);
        out.reference_curvature = self
            .reference_curvature
            .as_ref()
            .map(|k| k.scaled(1.0 / (s * s)));
        Ok(out)
    }

    /// `|grad u|^2` of the piecewise-linear interpolant, averaged from faces
    /// to vertices with face-area weights.
    pub fn gradient_squared(&self, u: &ScalarField) -> Result<ScalarField> {
        if u.len() != self.vertex_count() {
            return Err(Error::invalid(format!(
                "field has {} entries, mesh has {} vertices",
                u.len(),
                self.vertex_count()
            )));
        }
        let mut acc = vec![0.0; self.vertex_count()];
        for (f, tri) in self.faces.iter().enumerate() {
            let area = self.face_areas[f];
            // |grad u|^2 = (1 / 2A) sum_k cot(theta_k) (u_i - u_j)^2 over the edge opposite k.
            let mut g = 0.0;
            for k in 0..3 {
                let du = u[tri[(k + 1) % 3]] - u[tri[(k + 2) % 3]];
                g += self.face_cotans[f][k] * du * du;
            }
            let g = (g / (2.0 * area)).max(0.0);
            for &v in tri {
                acc[v] += area * g;
            }
        }
        Ok(ScalarField::from_vec(
            acc.iter()
                .zip(&self.vertex_areas)
                .map(|(s, a)| s / (3.0 * a))
                .collect(),
        ))
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Numerically stable Heron formula. NaN when the lengths violate the
/// triangle inequality.
fn heron(l: [f64; 3]) -> f64 {
    let mut s = l;
    s.sort_by(|a, b| b.total_cmp(a));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if p < 0.0 {
        f64::NAN
    } else {
        0.25 * p.sqrt()
    }
}

fn check_indices(nv: usize, faces: &[[usize; 3]]) -> Result<()> {
    for (f, tri) in faces.iter().enumerate() {
        if let Some(&v) = tri.iter().find(|&&v| v >= nv) {
            return Err(Error::invalid(format!(
                "face {f} references vertex {v}, only {nv} vertices"
            )));
        }
    }
    let repeated: Vec<usize> = faces
        .iter()
        .enumerate()
        .filter(|(_, t)| t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
        .map(|(f, _)| f)
        .collect();
    if !repeated.is_empty() {
        return Err(Error::DegenerateFaces { faces: repeated });
    }
    Ok(())
}

/// Closedness, manifoldness and orientability of the edge structure.
fn check_topology(nv: usize, faces: &[[usize; 3]]) -> Result<()> {
    let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut undirected: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for tri in faces {
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            *directed.entry((a, b)).or_insert(0) += 1;
            *undirected.entry(edge_key(a, b)).or_insert(0) += 1;
        }
    }

    let non_manifold: Vec<_> = undirected
        .iter()
        .filter(|(_, &c)| c > 2)
        .map(|(&e, &c)| (e, c))
        .collect();
    if !non_manifold.is_empty() {
        return Err(Error::NonManifoldEdges {
            edges: non_manifold,
        });
    }

    // Half-edges without a twin bound holes; chain them into cycles.
    let boundary: Vec<(usize, usize)> = directed
        .keys()
        .copied()
        .filter(|&(a, b)| undirected[&edge_key(a, b)] == 1)
        .collect();
    if !boundary.is_empty() {
        let next: BTreeMap<usize, usize> = boundary.iter().map(|&(a, b)| (b, a)).collect();
        let mut seen = BTreeSet::new();
        let mut cycles = Vec::new();
        for &(_, start) in &boundary {
            if seen.contains(&start) {
                continue;
            }
            let mut cycle = vec![start];
            seen.insert(start);
            let mut cur = start;
            while let Some(&n) = next.get(&cur) {
                if !seen.insert(n) {
                    break;
                }
                cycle.push(n);
                cur = n;
            }
            cycles.push(cycle);
        }
        return Err(Error::BoundaryEdges {
            count: boundary.len(),
            cycles,
        });
    }

    let flipped: Vec<(usize, usize)> = directed
        .iter()
        .filter(|(_, &c)| c > 1)
        .map(|(&e, _)| e)
        .collect();
    if !flipped.is_empty() {
        return Err(Error::NonOrientable { edges: flipped });
    }

    let mut used = vec![false; nv];
    faces.iter().flatten().for_each(|&v| used[v] = true);
    let unused: Vec<usize> = (0..nv).filter(|&v| !used[v]).collect();
    if !unused.is_empty() {
        return Err(Error::UnreferencedVertices { vertices: unused });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetrahedron() -> DiscreteManifold {
        let v = vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        let f = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
        DiscreteManifold::from_embedded(v, f).unwrap()
    }

    #[test]
    fn tetrahedron_basics() {
        let m = tetrahedron();
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.first_betti_number(), 0);
        assert!(m.gauss_bonnet_residual() < 1e-12);
        // each vertex: three equilateral angles of pi/3, defect pi
        for d in m.angle_defects() {
            assert!((d - PI).abs() < 1e-12);
        }
        let total: f64 = m.face_areas().iter().sum();
        assert!((m.total_area() - total).abs() < 1e-12);
    }

    #[test]
    fn stiffness_annihilates_constants_and_is_symmetric() {
        let m = tetrahedron();
        let l = m.stiffness().apply(&[3.5; 4]);
        assert!(l.iter().all(|&x| x == 0.0));
        let d = m.stiffness().to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d[i * 4 + j], d[j * 4 + i]);
            }
            let row: f64 = d[i * 4..i * 4 + 4].iter().sum();
            assert!(row.abs() < 1e-14);
        }
    }

    #[test]
    fn open_mesh_reports_hole() {
        let v = vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        let f = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3]];
        match DiscreteManifold::from_embedded(v, f) {
            Err(Error::BoundaryEdges { count, cycles }) => {
                assert_eq!(count, 3);
                assert_eq!(cycles.len(), 1);
                let mut c = cycles[0].clone();
                c.sort();
                assert_eq!(c, vec![1, 2, 3]);
            }
            other => panic!("expected boundary error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_face_rejected() {
        // vertex 3 sits on the midpoint of edge 0-1, flattening face [0, 3, 1]
        let m_v = vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [1.0, 0.0, 0.0],
        ];
        let f = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
        match DiscreteManifold::from_embedded(m_v, f) {
            Err(Error::DegenerateFaces { faces }) => assert_eq!(faces, vec![1]),
            other => panic!("expected degenerate error, got {other:?}"),
        }
    }

    #[test]
    fn non_manifold_edge_rejected() {
        let v = vec![
            [0.0; 3],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        let f = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        assert!(matches!(
            DiscreteManifold::from_embedded(v, f),
            Err(Error::NonManifoldEdges { .. })
        ));
    }

    #[test]
    fn gradient_of_constant_vanishes_and_is_homogeneous() {
        let m = tetrahedron();
        let g = m.gradient_squared(&ScalarField::constant(4, 2.0)).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
        let u = ScalarField::new(vec![0.3, -1.0, 2.0, 0.5]).unwrap();
        let g1 = m.gradient_squared(&u).unwrap();
        let g2 = m.gradient_squared(&u.scaled(3.0)).unwrap();
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((9.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn scaling_rescales_area_and_curvature() {
        let m = tetrahedron();
        let s = m.scaled(2.0).unwrap();
        assert!((s.total_area() - 4.0 * m.total_area()).abs() < 1e-12);
        for (a, b) in s
            .gaussian_curvature()
            .iter()
            .zip(m.gaussian_curvature().iter())
        {
            assert!((a * 4.0 - b).abs() < 1e-12);
        }
    }
}
