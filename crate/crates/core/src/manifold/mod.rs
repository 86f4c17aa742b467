//! Discrete closed Riemannian manifolds.
//!
//! Two backends share one interface through [`Manifold`]: triangle meshes
//! ([`DiscreteManifold`], P1 finite elements) and exact flat tori
//! ([`AnalyticFlatTorus`], Fourier modes on a sample grid).

mod build;
mod flat;
pub mod geodesic;
pub mod io;
mod mesh;
mod parse;

pub use build::{
    build_flat_torus, build_sphere, build_torus_of_revolution, icosahedron_mesh, tube_resolution,
    FlatTorus, DEFAULT_TWIN_CUTOFF,
};
pub use flat::{AnalyticFlatTorus, FourierMode, ModeKind};
pub use io::{load_mesh, write_off, MeshFormat};
pub use mesh::{DiscreteManifold, MeshFamily, Stiffness, DEGENERATE_AREA_RATIO};
pub use parse::{parse_manifold, HIGH_DIMENSIONAL_CUTOFF};

use crate::error::Result;
use crate::field::ScalarField;

#[derive(Clone, Debug)]
pub enum Manifold {
    Mesh(DiscreteManifold),
    Flat(AnalyticFlatTorus),
}

impl From<DiscreteManifold> for Manifold {
    fn from(m: DiscreteManifold) -> Self {
        Manifold::Mesh(m)
    }
}

impl From<AnalyticFlatTorus> for Manifold {
    fn from(t: AnalyticFlatTorus) -> Self {
        Manifold::Flat(t)
    }
}

impl Manifold {
    /// Number of vertices or sample points.
    pub fn len(&self) -> usize {
        match self {
            Manifold::Mesh(m) => m.vertex_count(),
            Manifold::Flat(t) => t.sample_count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimension(&self) -> usize {
        match self {
            Manifold::Mesh(m) => m.dimension(),
            Manifold::Flat(t) => t.dimension(),
        }
    }

    /// Volume weights defining the discrete measure.
    pub fn weights(&self) -> &[f64] {
        match self {
            Manifold::Mesh(m) => m.vertex_areas(),
            Manifold::Flat(t) => t.weights(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Manifold::Mesh(m) => m.total_area(),
            Manifold::Flat(t) => t.volume(),
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            Manifold::Mesh(m) => m.descriptor().to_string(),
            Manifold::Flat(t) => t.descriptor(),
        }
    }

    /// Mean edge length for meshes; `None` for the exact backend.
    pub fn mesh_size(&self) -> Option<f64> {
        match self {
            Manifold::Mesh(m) => Some(m.mesh_size()),
            Manifold::Flat(_) => None,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, Manifold::Flat(_))
    }

    pub fn as_mesh(&self) -> Option<&DiscreteManifold> {
        match self {
            Manifold::Mesh(m) => Some(m),
            Manifold::Flat(_) => None,
        }
    }

    /// Smallest Ricci eigenvalue per point (zero on flat tori).
    pub fn rho(&self) -> ScalarField {
        match self {
            Manifold::Mesh(m) => m.rho(),
            Manifold::Flat(t) => ScalarField::zeros(t.sample_count()),
        }
    }

    pub fn rho_minus(&self) -> ScalarField {
        self.rho().map(|k| (-k).max(0.0))
    }

    pub fn gradient_squared(&self, u: &ScalarField) -> Result<ScalarField> {
        match self {
            Manifold::Mesh(m) => m.gradient_squared(u),
            Manifold::Flat(t) => t.gradient_squared(u),
        }
    }

    pub fn distances_from(&self, source: usize) -> Result<ScalarField> {
        match self {
            Manifold::Mesh(m) => geodesic::edge_distances(m, source),
            Manifold::Flat(t) => t.distances_from(source),
        }
    }

    /// Farthest-point estimate on meshes, closed form on flat tori.
    pub fn diameter(&self) -> Result<f64> {
        match self {
            Manifold::Mesh(m) => geodesic::diameter(m),
            Manifold::Flat(t) => Ok(t.diameter()),
        }
    }

    pub fn first_betti_number(&self) -> usize {
        match self {
            Manifold::Mesh(m) => m.first_betti_number(),
            Manifold::Flat(t) => t.first_betti_number(),
        }
    }

    /// Farthest-point sampled sources (with distance fields), starting at
    /// point 0.
    pub fn farthest_point_sources(&self, count: usize) -> Result<Vec<(usize, ScalarField)>> {
        match self {
            Manifold::Mesh(m) => geodesic::farthest_point_sources(m, count, 0),
            Manifold::Flat(t) => {
                let count = count.min(t.sample_count()).max(1);
                let mut nearest = vec![f64::INFINITY; t.sample_count()];
                let mut out = Vec::with_capacity(count);
                let mut next = 0;
                for _ in 0..count {
                    let d = t.distances_from(next)?;
                    for (n, &di) in nearest.iter_mut().zip(d.iter()) {
                        *n = n.min(di);
                    }
                    out.push((next, d));
                    next = nearest
                        .iter()
                        .enumerate()
                        .fold(
                            (0, f64::NEG_INFINITY),
                            |b, (i, &v)| if v > b.1 { (i, v) } else { b },
                        )
                        .0;
                }
                Ok(out)
            }
        }
    }
}
