use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::Point;

pub type PointFn = Arc<dyn Fn(f64) -> Point + Send + Sync>;
pub type InverseFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Open parameter interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub const REAL_LINE: ParamRange = ParamRange {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty parameter range ({lo}, {hi})");
        Self { lo, hi }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }

    pub fn clamp_open(&self, t: f64) -> f64 {
        let eps = 1e-12 * (1.0 + t.abs());
        t.max(self.lo + eps).min(self.hi - eps)
    }

    /// Maps `θ ∈ (0, 1)` onto the range. Infinite ends are reached through a
    /// tangent (two-sided) or exp-tangent (one-sided, log scale) map.
    pub fn from_unit(&self, theta: f64) -> f64 {
        let z = (PI * (theta - 0.5)).tan();
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (false, false) => z,
            (true, false) => self.lo + z.exp(),
            (false, true) => self.hi - (-z).exp(),
            (true, true) => self.lo + (self.hi - self.lo) * theta,
        }
    }

    pub fn to_unit(&self, t: f64) -> f64 {
        let from_z = |z: f64| z.atan() / PI + 0.5;
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (false, false) => from_z(t),
            (true, false) => from_z((t - self.lo).ln()),
            (false, true) => from_z(-(self.hi - t).ln()),
            (true, true) => (t - self.lo) / (self.hi - self.lo),
        }
    }
}

/// A parametrized, strictly convex planar curve with derivatives up to third
/// order and a left inverse mapping points near the curve back to a parameter.
#[derive(Clone)]
pub struct BoundaryCurve {
    range: ParamRange,
    eval: PointFn,
    d1: PointFn,
    d2: PointFn,
    d3: PointFn,
    inverse: InverseFn,
}

impl fmt::Debug for BoundaryCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryCurve").field("range", &self.range).finish_non_exhaustive()
    }
}

impl BoundaryCurve {
    pub fn new(
        range: ParamRange,
        eval: PointFn,
        d1: PointFn,
        d2: PointFn,
        d3: PointFn,
        inverse: InverseFn,
    ) -> Self {
        Self { range, eval, d1, d2, d3, inverse }
    }

    pub fn range(&self) -> ParamRange {
        self.range
    }

    pub fn eval(&self, t: f64) -> Point {
        (self.eval)(t)
    }

    pub fn d1(&self, t: f64) -> Point {
        (self.d1)(t)
    }

    pub fn d2(&self, t: f64) -> Point {
        (self.d2)(t)
    }

    pub fn d3(&self, t: f64) -> Point {
        (self.d3)(t)
    }

    /// Parameter of the curve point associated with `p` (exact for points on
    /// the curve, a seed for points off it).
    pub fn inverse(&self, p: Point) -> f64 {
        self.range.clamp_open((self.inverse)(p))
    }

    /// `d1 × d2`, whose sign is fixed for a strictly convex curve.
    pub fn curvature_cross(&self, t: f64) -> f64 {
        self.d1(t).cross(self.d2(t))
    }

    /// Applies the rigid motion `p ↦ R(angle)·p + shift`.
    pub fn rigid_motion(&self, angle: f64, shift: Point) -> BoundaryCurve {
        let (e, a, b, c, inv) = (
            self.eval.clone(),
            self.d1.clone(),
            self.d2.clone(),
            self.d3.clone(),
            self.inverse.clone(),
        );
        BoundaryCurve {
            range: self.range,
            eval: Arc::new(move |t| e(t).rotated(angle) + shift),
            d1: Arc::new(move |t| a(t).rotated(angle)),
            d2: Arc::new(move |t| b(t).rotated(angle)),
            d3: Arc::new(move |t| c(t).rotated(angle)),
            inverse: Arc::new(move |p| inv((p - shift).rotated(-angle))),
        }
    }

    /// Largest relative mismatch between each derivative callback and a
    /// central difference of the next-lower one over `window`.
    pub fn derivative_mismatch(&self, window: (f64, f64), samples: usize) -> f64 {
        let mut worst = 0.0f64;
        let n = samples.max(2);
        for k in 0..n {
            let t = window.0 + (window.1 - window.0) * k as f64 / (n - 1) as f64;
            if !self.range.contains(t) {
                continue;
            }
            let h = 1e-5 * (1.0 + t.abs());
            let pairs: [(&PointFn, &PointFn); 3] =
                [(&self.eval, &self.d1), (&self.d1, &self.d2), (&self.d2, &self.d3)];
            for (lower, upper) in pairs {
                let fd = (lower(t + h) - lower(t - h)) * (0.5 / h);
                let exact = upper(t);
                let err = (fd - exact).norm() / (1.0 + exact.norm());
                worst = worst.max(err);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_map_round_trips() {
        for range in [
            ParamRange::REAL_LINE,
            ParamRange::new(0.0, f64::INFINITY),
            ParamRange::new(f64::NEG_INFINITY, 2.0),
            ParamRange::new(-1.0, 3.0),
        ] {
            for k in 1..50 {
                let theta = k as f64 / 50.0;
                let t = range.from_unit(theta);
                assert!(range.contains(t), "{range:?} {t}");
                assert!((range.to_unit(t) - theta).abs() < 1e-12);
            }
        }
    }
}
