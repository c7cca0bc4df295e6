use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Domain, ExitKind, Point, DEFAULT_SEGMENT_SAMPLES, LEVEL_TOL};

/// Axis-aligned box cutting a finite piece out of `Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

impl Window {
    pub fn new(x1: (f64, f64), x2: (f64, f64)) -> Result<Self> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !ok(x1) || !ok(x2) {
            return Err(Error::InvalidParameter(format!("bad window {x1:?} x {x2:?}")));
        }
        Ok(Self { x1, x2 })
    }

    /// The `x₁` band `x1` with the `x₂` extent of `∂Ω₀ ∪ ∂Ω₁` inside it.
    pub fn around_domain(domain: &Domain, x1: (f64, f64)) -> Result<Self> {
        const N: usize = 20_000;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for curve in [&domain.outer.curve, &domain.inner.curve] {
            let r = curve.range();
            for k in 0..N {
                let p = curve.eval(r.from_unit((k as f64 + 0.5) / N as f64));
                if p.is_finite() && p.x >= x1.0 && p.x <= x1.1 {
                    lo = lo.min(p.y);
                    hi = hi.max(p.y);
                }
            }
        }
        if !(lo < hi) {
            return Err(Error::EmptyMesh);
        }
        let pad = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
        Self::new(x1, (lo - pad, hi + pad))
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x1.0 && p.x <= self.x1.1 && p.y >= self.x2.0 && p.y <= self.x2.1
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MeshOptions {
    /// Lattice spacing `h`; nodes sit at `(i h, j h)`.
    pub resolution: f64,
    /// Lattice lines run along primitive directions `(a, b)` with `|a|, |b| ≤ K`.
    pub max_direction: i64,
    /// Extra chord directions per node between its two tangent lines.
    pub chord_directions: usize,
    pub segment_samples: usize,
}

impl MeshOptions {
    pub fn new(resolution: f64) -> Self {
        Self {
            resolution,
            max_direction: 3,
            chord_directions: 8,
            segment_samples: DEFAULT_SEGMENT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// Lattice node `(i h, j h)` of `Ω`.
    Interior { i: i64, j: i64 },
    /// Point of `∂Ω₀` with its curve parameter; carries boundary data.
    Data { param: f64 },
}

/// Collinear nodes along one piece of a lattice line, ordered by `positions`.
/// Every pair of nodes on a line sees each other.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub nodes: Vec<usize>,
    pub positions: Vec<f64>,
}

/// A chord of `∂Ω₀` through an interior node `x = λ g(a) + (1 - λ) g(b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeChord {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub window: Window,
    pub resolution: f64,
    pub nodes: Vec<Point>,
    pub kinds: Vec<NodeKind>,
    pub lines: Vec<Line>,
    /// Lines through each node.
    pub node_lines: Vec<Vec<usize>>,
    /// Chords with both ends on `∂Ω₀` through each node.
    pub chords: Vec<Vec<NodeChord>>,
    index: HashMap<(i64, i64), usize>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn primitive_directions(k: i64) -> Vec<(i64, i64)> {
    let mut dirs = Vec::new();
    for a in 0..=k {
        for b in -k..=k {
            if (a > 0 || b == 1) && gcd(a, b) == 1 {
                dirs.push((a, b));
            }
        }
    }
    dirs
}

struct Piece {
    nodes: Vec<usize>,
    front: Option<Point>,
    back: Option<Point>,
    dir: Point,
}

/// Lattice mesh of `Ω ∩ window`.
///
/// Interior nodes are the lattice points strictly inside `Ω₀` and outside the
/// open `Ω₁`. Lines are maximal runs of consecutive lattice points along each
/// primitive direction whose joining segments pass `segment_in_domain`; both
/// ends are continued inside `Ω` and, when they reach `∂Ω₀`, end at a data
/// node there (possibly outside the window). Each interior node also gets
/// chords of `∂Ω₀` through it along its two tangent lines to `Ω₁` and along
/// evenly spread directions between them. Finally `∂Ω₀ ∩ window` is sampled
/// at spacing about `h`.
pub fn build_mesh(domain: &Domain, window: Window, opts: &MeshOptions) -> Result<Mesh> {
    let h = opts.resolution;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("resolution must be positive, got {h}")));
    }
    let (i0, i1) = ((window.x1.0 / h).ceil() as i64, (window.x1.1 / h).floor() as i64);
    let (j0, j1) = ((window.x2.0 / h).ceil() as i64, (window.x2.1 / h).floor() as i64);
    if (i1 - i0 + 1).saturating_mul(j1 - j0 + 1) > 50_000_000 {
        return Err(Error::InvalidParameter("window too large for the resolution".into()));
    }
    let lattice: Vec<(i64, i64, Point)> = (i0..=i1)
        .into_par_iter()
        .flat_map_iter(|i| {
            (j0..=j1).filter_map(move |j| {
                let p = Point::new(i as f64 * h, j as f64 * h);
                (domain.outer.level(p) < -LEVEL_TOL && domain.inner.level(p) >= -LEVEL_TOL).then_some((i, j, p))
            })
        })
        .collect();

    let mut nodes: Vec<Point> = Vec::with_capacity(lattice.len());
    let mut kinds = Vec::with_capacity(lattice.len());
    let mut index = HashMap::with_capacity(lattice.len());
    for &(i, j, p) in &lattice {
        index.insert((i, j), nodes.len());
        nodes.push(p);
        kinds.push(NodeKind::Interior { i, j });
    }
    let interior = nodes.len();

    let outer = &domain.outer.curve;
    let snap = |e: Option<crate::geometry::Exit>| {
        e.filter(|e| e.kind == ExitKind::Outer).map(|e| outer.eval(outer.inverse(e.point)))
    };

    let pieces: Vec<Piece> = primitive_directions(opts.max_direction)
        .into_par_iter()
        .flat_map_iter(|(a, b)| {
            let dir = Point::new(a as f64, b as f64).normalized();
            let mut groups: HashMap<i64, Vec<(i64, usize)>> = HashMap::new();
            for (n, &(i, j, _)) in lattice.iter().enumerate() {
                groups.entry(b * i - a * j).or_default().push((a * i + b * j, n));
            }
            let mut keys: Vec<i64> = groups.keys().copied().collect();
            keys.sort_unstable();
            let step = a * a + b * b;
            let mut out = Vec::new();
            for key in keys {
                let mut g = groups.remove(&key).unwrap();
                g.sort_unstable();
                let mut run: Vec<usize> = vec![g[0].1];
                for w in g.windows(2) {
                    let (s0, n0) = w[0];
                    let (s1, n1) = w[1];
                    let joined = s1 - s0 == step
                        && domain.segment_in_domain(lattice[n0].2, lattice[n1].2, opts.segment_samples);
                    if joined {
                        run.push(n1);
                    } else {
                        out.push(std::mem::replace(&mut run, vec![n1]));
                    }
                }
                out.push(run);
            }
            out.into_iter()
                .map(|run| {
                    let first = lattice[run[0]].2;
                    let last = lattice[*run.last().unwrap()].2;
                    Piece {
                        front: snap(domain.exit_along(first, -dir)),
                        back: snap(domain.exit_along(last, dir)),
                        nodes: run,
                        dir,
                    }
                })
                .filter(|p| p.nodes.len() + p.front.is_some() as usize + p.back.is_some() as usize >= 3)
                .collect::<Vec<_>>()
        })
        .collect();

    let mut lines = Vec::with_capacity(pieces.len());
    // Lines ending at the same boundary point share one data node.
    let mut data_index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut push_data = |p: Point, nodes: &mut Vec<Point>, kinds: &mut Vec<NodeKind>| {
        let key = ((p.x / h * 1e9).round() as i64, (p.y / h * 1e9).round() as i64);
        *data_index.entry(key).or_insert_with(|| {
            nodes.push(p);
            kinds.push(NodeKind::Data { param: outer.inverse(p) });
            nodes.len() - 1
        })
    };
    for piece in pieces {
        let origin = nodes[piece.nodes[0]];
        let mut ids = Vec::with_capacity(piece.nodes.len() + 2);
        if let Some(p) = piece.front {
            ids.push(push_data(p, &mut nodes, &mut kinds));
        }
        ids.extend(piece.nodes.iter().copied());
        if let Some(p) = piece.back {
            ids.push(push_data(p, &mut nodes, &mut kinds));
        }
        let positions = ids.iter().map(|&k| (nodes[k] - origin).dot(piece.dir)).collect();
        lines.push(Line { nodes: ids, positions });
    }

    let chords: Vec<Vec<NodeChord>> = (0..interior)
        .into_par_iter()
        .map(|k| node_chords(domain, nodes[k], opts.chord_directions))
        .collect();

    for p in sample_outer_boundary(domain, &window, h) {
        push_data(p, &mut nodes, &mut kinds);
    }
    if nodes.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut node_lines = vec![Vec::new(); nodes.len()];
    for (l, line) in lines.iter().enumerate() {
        for &n in &line.nodes {
            node_lines[n].push(l);
        }
    }
    let mut chords = chords;
    chords.resize(nodes.len(), Vec::new());
    Ok(Mesh {
        window,
        resolution: h,
        nodes,
        kinds,
        lines,
        node_lines,
        chords,
        index,
    })
}

/// Chords of `∂Ω₀` through `x` along directions sweeping the cone of lines
/// that miss `Ω₁`, from one tangent line to the other.
fn node_chords(domain: &Domain, x: Point, extra: usize) -> Vec<NodeChord> {
    let angles: Vec<f64> = match domain.touch_params(x) {
        Ok((l, r)) => {
            let dr = domain.inner.curve.eval(r) - x;
            let dl = domain.inner.curve.eval(l) - x;
            let w = dr.normalized().dot(dl.normalized()).clamp(-1.0, 1.0).acos();
            let s = dr.cross(dl).signum();
            let base = dr.y.atan2(dr.x);
            (0..=extra + 1)
                .map(|k| base - s * k as f64 * (std::f64::consts::PI - w) / (extra + 1) as f64)
                .collect()
        }
        Err(_) => (0..extra + 2)
            .map(|k| k as f64 * std::f64::consts::PI / (extra + 2) as f64)
            .collect(),
    };
    let outer = &domain.outer.curve;
    angles
        .into_iter()
        .filter_map(|ang| {
            let d = Point::new(ang.cos(), ang.sin());
            let (back, fwd) = domain.maximal_segment(x, d);
            let (back, fwd) = (back?, fwd?);
            if back.kind != ExitKind::Outer || fwd.kind != ExitKind::Outer {
                return None;
            }
            let (a, b) = (outer.inverse(back.point), outer.inverse(fwd.point));
            let (ya, yb) = (outer.eval(a), outer.eval(b));
            let len = ya.dist(yb);
            (len > 0.0).then(|| NodeChord { a, b, lambda: x.dist(yb) / len })
        })
        .collect()
}

/// Points of `∂Ω₀ ∩ window` spaced about `h` apart.
fn sample_outer_boundary(domain: &Domain, window: &Window, h: f64) -> Vec<Point> {
    const N: usize = 200_000;
    let curve = &domain.outer.curve;
    let r = curve.range();
    let mut out: Vec<Point> = Vec::new();
    for k in 0..N {
        let p = curve.eval(r.from_unit((k as f64 + 0.5) / N as f64));
        if !p.is_finite() || !window.contains(p) {
            continue;
        }
        if out.last().map_or(true, |q| q.dist(p) >= h) {
            out.push(p);
        }
    }
    out
}

impl Mesh {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interior_count(&self) -> usize {
        self.kinds.iter().filter(|k| matches!(k, NodeKind::Interior { .. })).count()
    }

    pub fn is_data(&self, n: usize) -> bool {
        matches!(self.kinds[n], NodeKind::Data { .. })
    }

    /// Node at lattice index `(i, j)`, if it is in the mesh.
    pub fn lattice_node(&self, i: i64, j: i64) -> Option<usize> {
        self.index.get(&(i, j)).copied()
    }

    /// Lattice node at `p` when `p` is a lattice point up to `1e-9 h`.
    pub fn node_at(&self, p: Point) -> Option<usize> {
        let (fi, fj) = (p.x / self.resolution, p.y / self.resolution);
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 1e-9 || (fj - j).abs() > 1e-9 {
            return None;
        }
        self.lattice_node(i as i64, j as i64)
    }

    /// Nodes that share a line with `n`.
    pub fn visible(&self, n: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.node_lines[n]
            .iter()
            .flat_map(|&l| self.lines[l].nodes.iter().copied())
            .filter(|&m| m != n)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}
