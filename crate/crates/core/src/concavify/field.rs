use std::sync::Arc;

use super::mesh::Mesh;
use crate::geometry::Point;

/// One value per mesh node. Values at the ceiling stand in for `+∞`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
    pub pinned: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolated {
    pub value: f64,
    /// Spread of the node values used; zero at nodes.
    pub error: f64,
}

impl ScalarField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Self {
        assert_eq!(mesh.len(), values.len());
        let pinned = vec![false; values.len()];
        Self { mesh, values, pinned }
    }

    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.nodes.iter().map(|&p| f(p)).collect();
        Self::new(mesh, values)
    }

    /// Exact at nodes; bilinear inside a lattice cell whose four corners are
    /// nodes; otherwise barycentric on the smallest triangle of nearby nodes
    /// containing `p`, and inverse-distance weighting of the four nearest
    /// nodes when no such triangle exists.
    pub fn value_at(&self, p: Point) -> Option<Interpolated> {
        let mesh = &self.mesh;
        if let Some(n) = mesh.node_at(p) {
            return Some(Interpolated { value: self.values[n], error: 0.0 });
        }
        let h = mesh.resolution;
        let (fi, fj) = (p.x / h, p.y / h);
        let (i, j) = (fi.floor() as i64, fj.floor() as i64);
        let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)].map(|(a, b)| mesh.lattice_node(a, b));
        if let [Some(a), Some(b), Some(c), Some(d)] = corners {
            let (u, v) = (fi - i as f64, fj - j as f64);
            let vals = [a, b, c, d].map(|n| self.values[n]);
            let value = (1.0 - u) * (1.0 - v) * vals[0] + u * (1.0 - v) * vals[1] + (1.0 - u) * v * vals[2] + u * v * vals[3];
            return Some(Interpolated { value, error: spread(&vals) });
        }
        let mut near: Vec<(f64, usize)> = mesh.nodes.iter().enumerate().map(|(n, q)| (q.dist(p), n)).collect();
        if near.is_empty() {
            return None;
        }
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        if near[0].0 == 0.0 {
            return Some(Interpolated { value: self.values[near[0].1], error: 0.0 });
        }
        // Boundary samples alone are nearly collinear; mix in lattice nodes.
        let mut cands: Vec<(f64, usize)> = near.iter().take(NEAREST).copied().collect();
        cands.extend(near.iter().skip(NEAREST).filter(|&&(_, n)| !mesh.is_data(n)).take(NEAREST / 2));
        if let Some((ids, w)) = enclosing_triangle(&mesh.nodes, &cands, p) {
            let vals = ids.map(|n| self.values[n]);
            let value = w[0] * vals[0] + w[1] * vals[1] + w[2] * vals[2];
            return Some(Interpolated { value, error: spread(&vals) });
        }
        near.truncate(4);
        let (mut num, mut den) = (0.0, 0.0);
        for &(d, n) in &near {
            num += self.values[n] / d;
            den += 1.0 / d;
        }
        let vals: Vec<f64> = near.iter().map(|&(_, n)| self.values[n]).collect();
        Some(Interpolated { value: num / den, error: spread(&vals) })
    }

    pub fn pinned_count(&self) -> usize {
        self.pinned.iter().filter(|&&p| p).count()
    }
}

/// Candidate vertices for the enclosing triangle.
const NEAREST: usize = 12;

/// Among triangles on the given nodes, the one of least perimeter containing
/// `p`, with its barycentric weights. When none contains `p` (just outside a
/// convex boundary, say) the triangle whose smallest weight is largest is
/// used, which extrapolates linearly.
fn enclosing_triangle(nodes: &[Point], near: &[(f64, usize)], p: Point) -> Option<([usize; 3], [f64; 3])> {
    let mut inside: Option<(f64, [usize; 3], [f64; 3])> = None;
    let mut outside: Option<(f64, [usize; 3], [f64; 3])> = None;
    for a in 0..near.len() {
        for b in a + 1..near.len() {
            for c in b + 1..near.len() {
                let ids = [near[a].1, near[b].1, near[c].1];
                let [x, y, z] = ids.map(|n| nodes[n]);
                let area = (y - x).cross(z - x);
                // Slivers extrapolate wildly.
                if area.abs() <= 0.05 * (y - x).norm() * (z - x).norm() {
                    continue;
                }
                let w1 = (p - x).cross(z - x) / area;
                let w2 = (y - x).cross(p - x) / area;
                let w = [1.0 - w1 - w2, w1, w2];
                let low = w.iter().copied().fold(f64::INFINITY, f64::min);
                if low >= -1e-12 {
                    let perimeter = x.dist(y) + y.dist(z) + z.dist(x);
                    if inside.as_ref().map_or(true, |b| perimeter < b.0) {
                        inside = Some((perimeter, ids, w));
                    }
                } else if outside.as_ref().map_or(true, |b| low > b.0) {
                    outside = Some((low, ids, w));
                }
            }
        }
    }
    inside.or(outside).map(|(_, ids, w)| (ids, w))
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}
