//! Minimal locally concave majorant of boundary data on a lattice mesh.

mod field;
mod mesh;

use std::sync::Arc;

use rayon::prelude::*;

pub use field::{Interpolated, ScalarField};
pub use mesh::{build_mesh, Line, Mesh, MeshOptions, NodeChord, NodeKind, Window};

use crate::error::{Error, Result};
use crate::lace::BoundaryData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// In-place updates line by line; single-threaded.
    GaussSeidel,
    /// Every line reads the previous sweep; parallel and order independent.
    Jacobi,
}

#[derive(Debug, Clone, Copy)]
pub struct MajorantOptions {
    pub max_iters: usize,
    /// A sweep that moves no value by more than this ends the iteration.
    pub tolerance: f64,
    pub mode: SweepMode,
    /// Stand-in for `+∞`.
    pub ceiling: f64,
}

impl Default for MajorantOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tolerance: 1e-11,
            mode: SweepMode::GaussSeidel,
            ceiling: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MajorantResult {
    pub field: ScalarField,
    pub converged: bool,
    pub iterations: usize,
    /// Largest change per sweep.
    pub history: Vec<f64>,
}

/// Upper concave hull of `(xs[k], ys[k])` (with `xs` increasing) evaluated
/// at every `xs[k]`.
pub fn upper_hull_values(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[b] - xs[a]) * (ys[k] - ys[a]) - (ys[b] - ys[a]) * (xs[k] - xs[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut out = ys.to_vec();
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for k in a + 1..b {
            let lambda = (xs[k] - xs[a]) / (xs[b] - xs[a]);
            out[k] = out[k].max((1.0 - lambda) * ys[a] + lambda * ys[b]);
        }
    }
    out
}

/// Boundary data values at data nodes and, at interior nodes, the largest
/// value forced by a chord of `∂Ω₀` through the node (`-∞` without chords).
pub fn chord_floors(mesh: &Mesh, data: &BoundaryData) -> Vec<f64> {
    (0..mesh.len())
        .map(|n| match mesh.kinds[n] {
            NodeKind::Data { param } => data.value(param),
            NodeKind::Interior { .. } => mesh.chords[n]
                .iter()
                .map(|c| c.lambda * data.value(c.a) + (1.0 - c.lambda) * data.value(c.b))
                .fold(f64::NEG_INFINITY, f64::max),
        })
        .collect()
}

/// Iterates from below to the smallest field that equals the data on `∂Ω₀`
/// nodes, dominates every node chord and is concave along every mesh line.
///
/// Interior nodes start at the smallest data value present in the mesh, so
/// only the data seen by the mesh has to be bounded below.
pub fn minimal_concave_majorant(
    mesh: Arc<Mesh>,
    data: &BoundaryData,
    opts: &MajorantOptions,
) -> Result<MajorantResult> {
    let floors = chord_floors(&mesh, data);
    let base = (0..mesh.len())
        .filter(|&n| mesh.is_data(n))
        .map(|n| floors[n])
        .fold(f64::INFINITY, f64::min);
    let base = match (base.is_finite(), data.lower_bound) {
        (true, _) => base,
        (false, Some(lb)) if base == f64::INFINITY => lb,
        _ => return Err(Error::UnboundedBelow),
    };
    let mut values: Vec<f64> = floors.iter().map(|&f| f.max(base).min(opts.ceiling)).collect();
    let fixed: Vec<bool> = (0..mesh.len()).map(|n| mesh.is_data(n)).collect();

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let gather = |line: &Line, values: &[f64]| -> Vec<f64> { line.nodes.iter().map(|&n| values[n]).collect() };
    while iterations < opts.max_iters {
        iterations += 1;
        let mut change = 0.0f64;
        match opts.mode {
            SweepMode::GaussSeidel => {
                for line in &mesh.lines {
                    let hull = upper_hull_values(&line.positions, &gather(line, &values));
                    for (&n, &v) in line.nodes.iter().zip(&hull) {
                        let v = v.min(opts.ceiling);
                        if !fixed[n] && v > values[n] {
                            change = change.max(v - values[n]);
                            values[n] = v;
                        }
                    }
                }
            }
            SweepMode::Jacobi => {
                let hulls: Vec<Vec<f64>> = mesh
                    .lines
                    .par_iter()
                    .map(|line| upper_hull_values(&line.positions, &gather(line, &values)))
                    .collect();
                let next: Vec<f64> = (0..mesh.len())
                    .into_par_iter()
                    .map(|n| {
                        if fixed[n] {
                            return values[n];
                        }
                        mesh.node_lines[n]
                            .iter()
                            .map(|&l| {
                                let k = mesh.lines[l].nodes.iter().position(|&m| m == n).unwrap();
                                hulls[l][k]
                            })
                            .fold(values[n], f64::max)
                            .min(opts.ceiling)
                    })
                    .collect();
                for (old, new) in values.iter().zip(&next) {
                    change = change.max(new - old);
                }
                values = next;
            }
        }
        history.push(change);
        if change <= opts.tolerance {
            converged = true;
            break;
        }
    }
    let pinned = values.iter().map(|&v| v >= opts.ceiling).collect();
    Ok(MajorantResult {
        field: ScalarField { mesh, values, pinned },
        converged,
        iterations,
        history,
    })
}

/// Largest amount by which a node value falls below the chord of two other
/// nodes on a common mesh line. Zero for fields concave along every line.
pub fn local_concavity_violation(field: &ScalarField) -> f64 {
    field
        .mesh
        .lines
        .par_iter()
        .map(|line| {
            let ys: Vec<f64> = line.nodes.iter().map(|&n| field.values[n]).collect();
            upper_hull_values(&line.positions, &ys)
                .iter()
                .zip(&ys)
                .map(|(h, y)| h - y)
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, Point};
    use crate::presets::{bmo_domain, FSpec};

    fn mesh(eps: f64, h: f64, x1: (f64, f64)) -> (Domain, Arc<Mesh>) {
        let d = bmo_domain(eps).unwrap();
        let w = Window::around_domain(&d, x1).unwrap();
        let m = build_mesh(&d, w, &MeshOptions::new(h)).unwrap();
        (d, Arc::new(m))
    }

    fn data(d: &Domain, f: &str) -> BoundaryData {
        f.parse::<FSpec>().unwrap().build(d.outer.curve.range()).unwrap()
    }

    #[test]
    fn hull_of_convex_points_is_chord() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, -1.0, -1.0, 3.0];
        let h = upper_hull_values(&xs, &ys);
        assert_eq!(h, vec![0.0, 1.0, 2.0, 3.0]);
        let ys = [0.0, 2.0, 3.0, 3.5];
        assert_eq!(upper_hull_values(&xs, &ys), ys.to_vec());
    }

    #[test]
    fn nodes_lie_in_domain_and_lines_are_collinear() {
        let (d, m) = mesh(1.0, 0.1, (-3.0, 3.0));
        assert!(m.interior_count() > 100);
        for (n, p) in m.nodes.iter().enumerate() {
            assert!(d.contains(*p), "node {n} at {p:?}");
            if let NodeKind::Data { param } = m.kinds[n] {
                assert!(d.outer.level(*p).abs() < 1e-9);
                assert!((d.outer.curve.eval(param).dist(*p)) < 1e-12);
            }
        }
        for line in &m.lines {
            let (a, b) = (m.nodes[line.nodes[0]], m.nodes[*line.nodes.last().unwrap()]);
            let dir = (b - a).normalized();
            for (&n, &s) in line.nodes.iter().zip(&line.positions) {
                assert!((m.nodes[n] - a).cross(dir).abs() < 1e-9);
                let _ = s;
            }
            assert!(line.positions.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn visibility_is_symmetric() {
        let (_, m) = mesh(0.5, 0.1, (-1.0, 1.0));
        for n in (0..m.len()).step_by(7) {
            for v in m.visible(n) {
                assert!(m.visible(v).contains(&n));
            }
        }
    }

    #[test]
    fn window_inside_inner_set_is_empty() {
        let d = bmo_domain(1.0).unwrap();
        let w = Window::new((-0.5, 0.5), (5.0, 6.0)).unwrap();
        assert_eq!(build_mesh(&d, w, &MeshOptions::new(0.1)).unwrap_err(), Error::EmptyMesh);
    }

    #[test]
    fn halving_resolution_quadruples_nodes() {
        let (_, a) = mesh(1.0, 0.1, (-3.0, 3.0));
        let (_, b) = mesh(1.0, 0.05, (-3.0, 3.0));
        let ratio = b.interior_count() as f64 / a.interior_count() as f64;
        assert!((ratio - 4.0).abs() < 1.2, "{ratio}");
    }

    #[test]
    fn affine_data_reproduced() {
        let (d, m) = mesh(1.0, 0.1, (-2.0, 2.0));
        for (f, exact) in [("affine slope=1", 0usize), ("power p=2", 1)] {
            let r = minimal_concave_majorant(m.clone(), &data(&d, f), &MajorantOptions::default()).unwrap();
            assert!(r.converged);
            for (p, v) in m.nodes.iter().zip(&r.field.values) {
                let e = if exact == 0 { p.x } else { p.y };
                assert!((v - e).abs() < 1e-9, "{f} at {p:?}: {v} vs {e}");
            }
        }
    }

    #[test]
    fn exp_majorant_converges_and_is_concave() {
        let (d, m) = mesh(0.5, 0.1, (-1.5, 1.5));
        let r = minimal_concave_majorant(m.clone(), &data(&d, "exp"), &MajorantOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.history.windows(2).count() + 1 == r.iterations);
        assert!(local_concavity_violation(&r.field) < 1e-9);
        for (n, p) in m.nodes.iter().enumerate() {
            let v = r.field.values[n];
            if m.is_data(n) {
                assert!((v - p.x.exp()).abs() < 1e-9 * v);
            } else {
                assert!(v > p.x.exp(), "{p:?}");
            }
        }
    }

    #[test]
    fn jacobi_and_gauss_seidel_agree() {
        let (d, m) = mesh(0.5, 0.1, (-1.0, 1.0));
        let f = data(&d, "exp");
        let gs = minimal_concave_majorant(m.clone(), &f, &MajorantOptions::default()).unwrap();
        let jopts = MajorantOptions { mode: SweepMode::Jacobi, ..Default::default() };
        let j1 = minimal_concave_majorant(m.clone(), &f, &jopts).unwrap();
        let j2 = minimal_concave_majorant(m.clone(), &f, &jopts).unwrap();
        assert_eq!(j1.field.values, j2.field.values);
        for (a, b) in gs.field.values.iter().zip(&j1.field.values) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn sweeps_never_decrease_values() {
        let (d, m) = mesh(0.5, 0.1, (-1.0, 1.0));
        let f = data(&d, "sin");
        let mut prev: Option<Vec<f64>> = None;
        for iters in [1, 2, 4, 8] {
            let opts = MajorantOptions { max_iters: iters, ..Default::default() };
            let r = minimal_concave_majorant(m.clone(), &f, &opts).unwrap();
            if let Some(p) = prev {
                assert!(p.iter().zip(&r.field.values).all(|(a, b)| b >= a));
            }
            prev = Some(r.field.values);
        }
    }

    #[test]
    fn unbounded_data_refused() {
        let (d, m) = mesh(1.0, 0.2, (-1.0, 1.0));
        let cubic = minimal_concave_majorant(m.clone(), &data(&d, "power p=3"), &MajorantOptions::default());
        assert!(cubic.unwrap().converged);
        let z: crate::lace::ScalarFn = Arc::new(|_| 0.0);
        let bad = BoundaryData::new(
            "log",
            Arc::new(|t: f64| if t > 0.0 { t.ln() } else { f64::NEG_INFINITY }),
            z.clone(),
            z.clone(),
            z,
            false,
            None,
        );
        let err = minimal_concave_majorant(m, &bad, &MajorantOptions::default()).unwrap_err();
        assert_eq!(err, Error::UnboundedBelow);
    }

    #[test]
    fn violation_examples() {
        let (d, m) = mesh(1.0, 0.1, (-2.0, 2.0));
        assert!(local_concavity_violation(&ScalarField::from_fn(m.clone(), |p| p.y)) < 1e-12);
        let f = data(&d, "exp");
        let floor = f.lower_bound.unwrap();
        let start = ScalarField::from_fn(m.clone(), |p| if d.on_outer_boundary(p) { p.x.exp() } else { floor });
        assert!(local_concavity_violation(&start) > 0.1);
    }

    #[test]
    fn ceiling_pins_values() {
        let (d, m) = mesh(1.0, 0.2, (-1.0, 1.0));
        let opts = MajorantOptions { ceiling: 1.5, ..Default::default() };
        let r = minimal_concave_majorant(m, &data(&d, "exp lambda=2"), &opts).unwrap();
        assert!(r.field.pinned_count() > 0);
        assert!(r.field.values.iter().all(|&v| v <= 1.5));
    }

    #[test]
    fn interpolation_exact_at_nodes() {
        let (_, m) = mesh(1.0, 0.1, (-2.0, 2.0));
        let f = ScalarField::from_fn(m, |p| 2.0 * p.x - p.y);
        let at = f.value_at(Point::new(0.3, 0.5)).unwrap();
        assert_eq!(at.error, 0.0);
        assert!((at.value - 0.1).abs() < 1e-12);
        let mid = f.value_at(Point::new(0.33, 0.55)).unwrap();
        assert!((mid.value - (0.66 - 0.55)).abs() < 1e-12);
        assert!(mid.error > 0.0);
    }
}
