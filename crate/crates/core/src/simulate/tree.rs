use rand::Rng;

use super::step::StepFunction;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Exit, Point};

/// Outer level values within this band count as lying on `∂Ω₀`.
pub const BOUNDARY_BAND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNodeKind {
    /// Point of `∂Ω₀` with its curve parameter.
    Leaf { param: f64 },
    /// `point = λ·plus + (1 - λ)·minus`; `plus_first` orders the children
    /// inside the node's interval.
    Split { lambda: f64, minus: usize, plus: usize, plus_first: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub point: Point,
    pub kind: TreeNodeKind,
}

/// Binary splitting of a point of `Ω` down to points of `∂Ω₀`. Node 0 is
/// the root.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitPolicy {
    /// Split toward a tangency point of `Ω₁`; `jitter` perturbs the
    /// direction by up to that many radians (zero keeps the exact tangent).
    TangentBiased { jitter: f64 },
    Random,
    AxisAligned,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowOptions {
    pub policy: SplitPolicy,
    /// Largest number of splits along any root-to-leaf path.
    pub depth: usize,
    /// Probability of stopping a child partway along its segment instead of
    /// at the segment end.
    pub shrink: f64,
    /// Directions tried per node before giving up.
    pub direction_tries: usize,
}

impl Default for GrowOptions {
    fn default() -> Self {
        Self {
            policy: SplitPolicy::TangentBiased { jitter: 0.0 },
            depth: 48,
            shrink: 0.5,
            direction_tries: 16,
        }
    }
}

impl SplitTree {
    pub fn root(&self) -> Point {
        self.nodes[0].point
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.kind, TreeNodeKind::Leaf { .. })).count()
    }

    /// Largest gap in the identity `x = λx⁺ + (1 - λ)x⁻` over all splits.
    pub fn combination_error(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                TreeNodeKind::Split { lambda, minus, plus, .. } => {
                    let c = self.nodes[plus].point * lambda + self.nodes[minus].point * (1.0 - lambda);
                    Some(c.dist(n.point))
                }
                TreeNodeKind::Leaf { .. } => None,
            })
            .fold(0.0, f64::max)
    }
}

fn on_outer(domain: &Domain, p: Point) -> bool {
    domain.outer.level(p).abs() <= BOUNDARY_BAND
}

fn on_inner(domain: &Domain, p: Point) -> bool {
    domain.inner.level(p).abs() <= BOUNDARY_BAND
}

struct Grower<'a, R: Rng> {
    domain: &'a Domain,
    opts: &'a GrowOptions,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
}

impl<R: Rng> Grower<'_, R> {
    fn leaf(&mut self, p: Point) -> usize {
        let param = self.domain.outer.curve.inverse(p);
        self.nodes.push(TreeNode {
            point: self.domain.outer.curve.eval(param),
            kind: TreeNodeKind::Leaf { param },
        });
        self.nodes.len() - 1
    }

    fn exit(&self, x: Point, d: Point) -> Option<Exit> {
        self.domain.exit_along(x, d).filter(|e| e.distance > 1e-12)
    }

    /// Segment `[minus, plus] ∋ x` inside `Ω`, or `None` for this attempt.
    fn propose(&mut self, x: Point) -> Option<(Point, Point)> {
        let domain = self.domain;
        if on_inner(domain, x) {
            let s = domain.inner.curve.inverse(x);
            let d = domain.inner.curve.d1(s).normalized();
            let (a, b) = (self.exit(x, -d)?, self.exit(x, d)?);
            return Some((a.point, b.point));
        }
        let d = match self.opts.policy {
            SplitPolicy::TangentBiased { jitter } => {
                let (l, r) = domain.touch_params(x).ok()?;
                let s = if self.rng.gen_bool(0.5) { l } else { r };
                let touch = domain.inner.curve.eval(s);
                if jitter == 0.0 {
                    let d = (touch - x).normalized();
                    let a = self.exit(x, -d)?;
                    if !domain.segment_in_domain(x, touch, crate::geometry::DEFAULT_SEGMENT_SAMPLES) {
                        return None;
                    }
                    return Some((a.point, touch));
                }
                (touch - x).normalized().rotated(self.rng.gen_range(-jitter..=jitter))
            }
            SplitPolicy::Random => {
                let ang: f64 = self.rng.gen_range(0.0..std::f64::consts::PI);
                Point::new(ang.cos(), ang.sin())
            }
            SplitPolicy::AxisAligned => {
                if self.rng.gen_bool(0.5) {
                    Point::new(1.0, 0.0)
                } else {
                    Point::new(0.0, 1.0)
                }
            }
        };
        let (a, b) = (self.exit(x, -d)?, self.exit(x, d)?);
        Some((a.point, b.point))
    }

    fn grow(&mut self, x: Point, depth: usize) -> Result<usize> {
        if on_outer(self.domain, x) {
            return Ok(self.leaf(x));
        }
        let stuck = Error::StuckPoint { x: x.x, y: x.y };
        if depth == 0 {
            return Err(stuck);
        }
        let (mut minus, mut plus) = (0..self.opts.direction_tries)
            .find_map(|_| self.propose(x))
            .ok_or(stuck)?;
        for end in [&mut minus, &mut plus] {
            if self.opts.shrink > 0.0 && self.rng.gen_bool(self.opts.shrink) {
                let tau = self.rng.gen_range(0.2..0.9);
                *end = x + (*end - x) * tau;
            }
        }
        let len = minus.dist(plus);
        let lambda = x.dist(minus) / len;
        let plus_first = self.rng.gen_bool(0.5);
        let slot = self.nodes.len();
        self.nodes.push(TreeNode {
            point: x,
            kind: TreeNodeKind::Leaf { param: f64::NAN },
        });
        let m = self.grow(minus, depth - 1)?;
        let p = self.grow(plus, depth - 1)?;
        self.nodes[slot].kind = TreeNodeKind::Split { lambda, minus: m, plus: p, plus_first };
        Ok(slot)
    }
}

/// Grows a split tree at `x ∈ Ω`.
///
/// Points on `∂Ω₁` split along the tangent line of `∂Ω₁`; other points split
/// along the maximal segment in the direction chosen by the policy. Child
/// points at segment ends on `∂Ω₀` become leaves (projected onto the curve);
/// node points are then recomputed from the leaves so that every split
/// identity holds to rounding.
pub fn grow_split_tree<R: Rng>(domain: &Domain, x: Point, opts: &GrowOptions, rng: &mut R) -> Result<SplitTree> {
    let mut g = Grower { domain, opts, rng, nodes: Vec::new() };
    g.grow(x, opts.depth)?;
    let mut nodes = g.nodes;
    for k in (0..nodes.len()).rev() {
        if let TreeNodeKind::Split { lambda, minus, plus, .. } = nodes[k].kind {
            nodes[k].point = nodes[plus].point * lambda + nodes[minus].point * (1.0 - lambda);
        }
    }
    Ok(SplitTree { nodes })
}

/// Single split of `x` along direction `d`, continuing once along the
/// tangent of `∂Ω₁` where the segment ends there.
pub fn chord_tree(domain: &Domain, x: Point, d: Point) -> Result<SplitTree> {
    let opts = GrowOptions { shrink: 0.0, depth: 3, ..GrowOptions::default() };
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let mut g = Grower { domain, opts: &opts, rng: &mut rng, nodes: Vec::new() };
    if on_outer(domain, x) {
        g.leaf(x);
    } else {
        let stuck = Error::StuckPoint { x: x.x, y: x.y };
        let (a, b) = match (g.exit(x, -d), g.exit(x, d)) {
            (Some(a), Some(b)) => (a.point, b.point),
            _ => return Err(stuck),
        };
        let lambda = x.dist(a) / a.dist(b);
        g.nodes.push(TreeNode { point: x, kind: TreeNodeKind::Leaf { param: f64::NAN } });
        let m = g.grow(a, 2)?;
        let p = g.grow(b, 2)?;
        g.nodes[0].kind = TreeNodeKind::Split { lambda, minus: m, plus: p, plus_first: true };
    }
    let mut nodes = g.nodes;
    for k in (0..nodes.len()).rev() {
        if let TreeNodeKind::Split { lambda, minus, plus, .. } = nodes[k].kind {
            nodes[k].point = nodes[plus].point * lambda + nodes[minus].point * (1.0 - lambda);
        }
    }
    Ok(SplitTree { nodes })
}

/// Unfolds the tree into nested intervals of `[0, 1]`: a split node of
/// length `L` gives `λL` to its plus child and `(1 - λ)L` to its minus child.
pub fn tree_to_step_function(domain: &Domain, tree: &SplitTree) -> StepFunction {
    let mut breaks = vec![0.0];
    let mut params = Vec::new();
    let mut stack = vec![(0usize, 0.0f64, 1.0f64)];
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    while let Some((n, lo, hi)) = stack.pop() {
        match tree.nodes[n].kind {
            TreeNodeKind::Leaf { param } => pieces.push((lo, hi, param)),
            TreeNodeKind::Split { lambda, minus, plus, plus_first } => {
                let len = hi - lo;
                let (first, w) = if plus_first { (plus, lambda) } else { (minus, 1.0 - lambda) };
                let second = if plus_first { minus } else { plus };
                let mid = lo + w * len;
                stack.push((second, mid, hi));
                stack.push((first, lo, mid));
            }
        }
    }
    for (lo, hi, param) in pieces {
        if hi > lo {
            debug_assert!((lo - breaks.last().unwrap()).abs() < 1e-15);
            breaks.push(hi);
            params.push(param);
        }
    }
    *breaks.last_mut().unwrap() = 1.0;
    StepFunction::new(&domain.outer.curve, breaks, params)
}
