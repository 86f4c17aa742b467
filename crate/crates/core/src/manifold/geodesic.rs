use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::field::ScalarField;

use super::mesh::DiscreteManifold;

/// Number of farthest-point sources used for the diameter estimate.
pub const DIAMETER_SOURCES: usize = 16;

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties broken by vertex index
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Edge-graph shortest-path distances from `source`. These overestimate the
/// surface geodesic distance.
pub fn edge_distances(m: &DiscreteManifold, source: usize) -> Result<ScalarField> {
    let n = m.vertex_count();
    if source >= n {
        return Err(Error::invalid(format!(
            "source vertex {source} out of range ({n} vertices)"
        )));
    }
    let adj = m.adjacency();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry(nd, w));
            }
        }
    }
    let unreachable = dist.iter().filter(|d| d.is_infinite()).count();
    if unreachable > 0 {
        return Err(Error::Disconnected {
            source_vertex: source,
            unreachable,
        });
    }
    Ok(ScalarField::from_vec(dist))
}

/// Greedy farthest-point sampling seeded at `start`. Returns the chosen
/// vertices and their distance fields.
pub fn farthest_point_sources(
    m: &DiscreteManifold,
    count: usize,
    start: usize,
) -> Result<Vec<(usize, ScalarField)>> {
    let count = count.min(m.vertex_count()).max(1);
    let mut out: Vec<(usize, ScalarField)> = Vec::with_capacity(count);
    let mut nearest = vec![f64::INFINITY; m.vertex_count()];
    let mut next = start;
    for _ in 0..count {
        let d = edge_distances(m, next)?;
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

/// Largest edge-graph distance seen from the farthest-point sources.
pub fn diameter(m: &DiscreteManifold) -> Result<f64> {
    Ok(farthest_point_sources(m, DIAMETER_SOURCES, 0)?
        .iter()
        .map(|(_, d)| d.max())
        .fold(0.0, f64::max))
}
