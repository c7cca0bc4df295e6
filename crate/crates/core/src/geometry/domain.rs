use std::fmt;
use std::sync::Arc;

use super::{BoundaryCurve, Point};
use crate::error::{Error, Result};

pub type LevelFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Interior samples used by [`Domain::segment_in_domain`] when no explicit
/// resolution is requested. Counts are rounded up to `2^k - 1`.
pub const DEFAULT_SEGMENT_SAMPLES: usize = 63;

/// Absolute tolerance on level-function values.
pub const LEVEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTest {
    Inside,
    OnBoundary,
    Outside,
}

/// An open strictly convex set described by its boundary curve and a level
/// function that is negative inside, zero on the boundary, positive outside.
#[derive(Clone)]
pub struct ConvexRegion {
    pub curve: BoundaryCurve,
    level: LevelFn,
}

impl fmt::Debug for ConvexRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexRegion").field("curve", &self.curve).finish_non_exhaustive()
    }
}

impl ConvexRegion {
    pub fn new(curve: BoundaryCurve, level: LevelFn) -> Self {
        Self { curve, level }
    }

    pub fn level(&self, p: Point) -> f64 {
        (self.level)(p)
    }

    pub fn test(&self, p: Point) -> RegionTest {
        let v = self.level(p);
        if v < -LEVEL_TOL {
            RegionTest::Inside
        } else if v > LEVEL_TOL {
            RegionTest::Outside
        } else {
            RegionTest::OnBoundary
        }
    }

    fn rigid_motion(&self, angle: f64, shift: Point) -> ConvexRegion {
        let level = self.level.clone();
        ConvexRegion {
            curve: self.curve.rigid_motion(angle, shift),
            level: Arc::new(move |p| level((p - shift).rotated(-angle))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Which boundary stopped a march through `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Crossed `∂Ω₀`.
    Outer,
    /// Entered the open set `Ω₁`.
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exit {
    pub point: Point,
    pub distance: f64,
    pub kind: ExitKind,
}

/// A tangent segment from a point of `∂Ω₀` to `cl Ω₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub source_param: f64,
    pub touch_param: f64,
    pub source: Point,
    pub touch: Point,
    pub length: f64,
    /// Oriented angle of `touch - source` against `(1, 0)`, in `(-π, π]`.
    pub angle: f64,
    pub side: Side,
}

/// The annular domain `Ω = cl(Ω₀ \ Ω₁)`.
#[derive(Clone, Debug)]
pub struct Domain {
    pub outer: ConvexRegion,
    pub inner: ConvexRegion,
    /// `+1` when `Ω` lies to the left of the outer parametrization, `-1` otherwise.
    pub orientation: f64,
    /// Base step for marching along rays.
    pub probe_step: f64,
    /// Rays longer than this are treated as unbounded.
    pub max_ray: f64,
}

impl Domain {
    pub fn new(outer: ConvexRegion, inner: ConvexRegion) -> Self {
        let range = outer.curve.range();
        let t = range.from_unit(0.5);
        let p = outer.curve.eval(t);
        let n = outer.curve.d1(t).normalized().perp();
        let h = 1e-6 * (1.0 + p.norm());
        let orientation = if outer.level(p + n * h) < outer.level(p - n * h) {
            1.0
        } else {
            -1.0
        };
        Self {
            outer,
            inner,
            orientation,
            probe_step: 5e-3,
            max_ray: 1e4,
        }
    }

    pub fn with_probe_step(mut self, step: f64) -> Self {
        self.probe_step = step;
        self
    }

    /// Closed-set membership in `Ω`.
    pub fn contains(&self, p: Point) -> bool {
        self.outer.level(p) <= LEVEL_TOL && self.inner.level(p) >= -LEVEL_TOL
    }

    pub fn in_inner_open(&self, p: Point) -> bool {
        self.inner.level(p) < -LEVEL_TOL
    }

    pub fn on_outer_boundary(&self, p: Point) -> bool {
        self.outer.test(p) == RegionTest::OnBoundary
    }

    /// Sampled test that `[p, q]` stays in `Ω`: no interior sample lies in the
    /// open set `Ω₁` or outside `cl Ω₀`. Samples sit at dyadic fractions
    /// `j / 2^k`, so a finer request checks a superset of points.
    pub fn segment_in_domain(&self, p: Point, q: Point, samples: usize) -> bool {
        let n = dyadic_count(samples);
        let denom = (n + 1) as f64;
        (1..=n).all(|j| {
            let lambda = j as f64 / denom;
            let x = p * (1.0 - lambda) + q * lambda;
            self.contains(x)
        })
    }

    /// Marches from `p` along the unit direction `d` until leaving `Ω`.
    /// Returns `None` if the ray stays in `Ω` up to [`Domain::max_ray`].
    pub fn exit_along(&self, p: Point, d: Point) -> Option<Exit> {
        let d = d.normalized();
        let state = |t: f64| -> Option<ExitKind> {
            let x = p + d * t;
            if self.outer.level(x) > LEVEL_TOL {
                Some(ExitKind::Outer)
            } else if self.inner.level(x) < -LEVEL_TOL {
                Some(ExitKind::Inner)
            } else {
                None
            }
        };
        let mut t_prev = 0.0;
        let mut step = self.probe_step * 1e-3;
        loop {
            let t = t_prev + step;
            if t > self.max_ray {
                return None;
            }
            if let Some(kind) = state(t) {
                let (mut lo, mut hi) = (t_prev, t);
                // Outer crossings are located on the outer level alone so
                // that a grazing contact with ∂Ω₁ does not shadow them.
                let crossed = |s: f64| match kind {
                    ExitKind::Outer => self.outer.level(p + d * s) > 0.0,
                    ExitKind::Inner => self.inner.level(p + d * s) < 0.0,
                };
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if crossed(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let distance = 0.5 * (lo + hi);
                return Some(Exit {
                    point: p + d * distance,
                    distance,
                    kind,
                });
            }
            t_prev = t;
            step = (step * 2.0).min(self.probe_step * (1.0 + 0.05 * t));
        }
    }

    /// Ends of the maximal segment of `Ω` through `p` in direction `±d`.
    pub fn maximal_segment(&self, p: Point, d: Point) -> (Option<Exit>, Option<Exit>) {
        (self.exit_along(p, -d), self.exit_along(p, d))
    }

    /// Ends of the chord of `cl Ω₀` through `p` in direction `±d`, ignoring `Ω₁`.
    pub fn outer_chord(&self, p: Point, d: Point) -> Option<(Point, Point)> {
        let a = self.exit_outer(p, -d)?;
        let b = self.exit_outer(p, d)?;
        Some((a, b))
    }

    fn exit_outer(&self, p: Point, d: Point) -> Option<Point> {
        let d = d.normalized();
        let level = |t: f64| self.outer.level(p + d * t);
        let mut t_prev = 0.0;
        let mut step = self.probe_step * 1e-3;
        loop {
            let t = t_prev + step;
            if t > self.max_ray {
                return None;
            }
            if level(t) > 0.0 {
                let (mut lo, mut hi) = (t_prev, t);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if level(mid) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(p + d * (0.5 * (lo + hi)));
            }
            t_prev = t;
            step = (step * 2.0).min(self.probe_step * (1.0 + 0.05 * t));
        }
    }

    /// Parameters `(left, right)` of the two tangency points on `∂Ω₁` seen
    /// from `p ∉ cl Ω₁`.
    ///
    /// Roots of `s ↦ (p - h(s)) × h'(s)` are bracketed by expanding from the
    /// nearest sampled point of `∂Ω₁` and refined by bisection. The left
    /// tangent is the one for which the right tangent direction is a
    /// counterclockwise turn (in the orientation of `Ω`).
    pub fn touch_params(&self, p: Point) -> Result<(f64, f64)> {
        let fail = |reason: &str| Error::NoTangent {
            param: f64::NAN,
            reason: reason.to_string(),
        };
        if self.inner.level(p) <= LEVEL_TOL {
            return Err(fail("point lies in the closure of the inner set"));
        }
        let curve = &self.inner.curve;
        let range = curve.range();
        let f = |s: f64| (p - curve.eval(s)).cross(curve.d1(s));

        let mut seed = curve.inverse(p);
        let mut best = p.dist(curve.eval(seed));
        const SCAN: usize = 256;
        for k in 0..SCAN {
            let s = range.from_unit((k as f64 + 0.5) / SCAN as f64);
            let d = p.dist(curve.eval(s));
            if d < best {
                best = d;
                seed = s;
            }
        }
        let sign0 = f(seed).signum();
        if sign0 == 0.0 {
            return Err(fail("seed lies on a tangent line"));
        }
        let theta0 = range.to_unit(seed);
        let mut roots = [f64::NAN; 2];
        for (slot, dir) in [(0usize, -1.0f64), (1, 1.0)] {
            let mut prev = theta0;
            let mut step = 1e-12;
            let mut bracket = None;
            let bound = if dir > 0.0 { 1.0 } else { 0.0 };
            for _ in 0..200 {
                let mut theta = theta0 + dir * step;
                if (theta - bound) * dir >= 0.0 {
                    theta = 0.5 * (prev + bound);
                    if theta == prev {
                        break;
                    }
                }
                let v = f(range.from_unit(theta));
                if !v.is_finite() {
                    break;
                }
                if v.signum() != sign0 {
                    bracket = Some((range.from_unit(prev), range.from_unit(theta)));
                    break;
                }
                prev = theta;
                step *= 1.5;
            }
            let (mut inside, mut outside) = bracket.ok_or_else(|| fail("tangency root not bracketed"))?;
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if mid == inside || mid == outside {
                    break;
                }
                if f(mid).signum() == sign0 {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            roots[slot] = 0.5 * (inside + outside);
        }
        let d0 = curve.eval(roots[0]) - p;
        let d1 = curve.eval(roots[1]) - p;
        let turn = self.orientation * d0.cross(d1);
        if turn.abs() <= 1e-14 * d0.norm() * d1.norm() {
            return Err(fail("collinear tangency points"));
        }
        Ok(if turn > 0.0 {
            (roots[0], roots[1])
        } else {
            (roots[1], roots[0])
        })
    }

    /// The tangent segment from `g(u)` to `cl Ω₁` on the requested side.
    pub fn tangent(&self, u: f64, side: Side) -> Result<Tangent> {
        let source = self.outer.curve.eval(u);
        let (left, right) = self.touch_params(source).map_err(|e| match e {
            Error::NoTangent { reason, .. } => Error::NoTangent { param: u, reason },
            other => other,
        })?;
        let s = match side {
            Side::Left => left,
            Side::Right => right,
        };
        let touch = self.inner.curve.eval(s);
        let d = touch - source;
        Ok(Tangent {
            source_param: u,
            touch_param: s,
            source,
            touch,
            length: d.norm(),
            angle: d.y.atan2(d.x),
            side,
        })
    }

    /// Tangent length measured from the touch point `h(s)`: distance along
    /// the tangent line at `h(s)` to `∂Ω₀`, forward for the right tangent and
    /// backward for the left one.
    pub fn tangent_length_at_touch(&self, s: f64, side: Side) -> Option<f64> {
        let h = self.inner.curve.eval(s);
        let mut dir = self.inner.curve.d1(s).normalized() * (self.inner_orientation() * self.orientation);
        if side == Side::Left {
            dir = -dir;
        }
        self.exit_outer(h, dir).map(|q| q.dist(h))
    }

    /// `+1` when `Ω₁` lies to the left of its parametrization.
    pub fn inner_orientation(&self) -> f64 {
        let curve = &self.inner.curve;
        let t = curve.range().from_unit(0.5);
        let p = curve.eval(t);
        let n = curve.d1(t).normalized().perp();
        let h = 1e-6 * (1.0 + p.norm());
        if self.inner.level(p + n * h) < self.inner.level(p - n * h) {
            1.0
        } else {
            -1.0
        }
    }

    /// Structural warnings: inner boundary not strictly inside `Ω₀`, or
    /// either boundary failing the convexity sign test.
    pub fn validate(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let inner = &self.inner.curve;
        let range = inner.range();
        let mut touching = 0usize;
        const N: usize = 64;
        for k in 1..N {
            let s = range.from_unit(k as f64 / N as f64);
            if self.outer.level(inner.eval(s)) >= -LEVEL_TOL {
                touching += 1;
            }
        }
        if touching > 0 {
            warnings.push(format!(
                "degenerate domain: {touching} of {} sampled points of the inner boundary are not strictly inside the outer set",
                N - 1
            ));
        }
        for (name, curve) in [("outer", &self.outer.curve), ("inner", &self.inner.curve)] {
            let r = curve.range();
            let signs: Vec<f64> = (1..N)
                .map(|k| curve.curvature_cross(r.from_unit(k as f64 / N as f64)).signum())
                .collect();
            if signs.iter().any(|&s| s != signs[0] || s == 0.0) {
                warnings.push(format!("{name} boundary is not strictly convex on sampled parameters"));
            }
        }
        warnings
    }

    /// The same configuration moved by `p ↦ R(angle)·p + shift`.
    pub fn rigid_motion(&self, angle: f64, shift: Point) -> Domain {
        Domain {
            outer: self.outer.rigid_motion(angle, shift),
            inner: self.inner.rigid_motion(angle, shift),
            orientation: self.orientation,
            probe_step: self.probe_step,
            max_ray: self.max_ray,
        }
    }
}

fn dyadic_count(samples: usize) -> usize {
    let mut n = 1usize;
    while n < samples {
        n = 2 * n + 1;
    }
    n
}
