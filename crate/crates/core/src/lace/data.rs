use std::fmt;
use std::sync::Arc;

use crate::geometry::BoundaryCurve;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Boundary data `f̃ = f ∘ g` with derivatives up to third order.
#[derive(Clone)]
pub struct BoundaryData {
    pub label: String,
    value: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
    d3: ScalarFn,
    /// False for data that is only piecewise smooth (e.g. an indicator);
    /// such data is accepted by the majorant and simulation but refused by
    /// the torsion and cup machinery.
    pub smooth: bool,
    /// A finite lower bound on the curve's parameter range, if one exists.
    pub lower_bound: Option<f64>,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("label", &self.label)
            .field("smooth", &self.smooth)
            .field("lower_bound", &self.lower_bound)
            .finish_non_exhaustive()
    }
}

impl BoundaryData {
    pub fn new(
        label: impl Into<String>,
        value: ScalarFn,
        d1: ScalarFn,
        d2: ScalarFn,
        d3: ScalarFn,
        smooth: bool,
        lower_bound: Option<f64>,
    ) -> Self {
        Self {
            label: label.into(),
            value,
            d1,
            d2,
            d3,
            smooth,
            lower_bound,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }
    pub fn d1(&self, t: f64) -> f64 {
        (self.d1)(t)
    }
    pub fn d2(&self, t: f64) -> f64 {
        (self.d2)(t)
    }
    pub fn d3(&self, t: f64) -> f64 {
        (self.d3)(t)
    }

    /// Largest relative mismatch between each derivative and a central
    /// difference of the one below it.
    pub fn derivative_mismatch(&self, window: (f64, f64), samples: usize) -> f64 {
        let fns: [&ScalarFn; 4] = [&self.value, &self.d1, &self.d2, &self.d3];
        let n = samples.max(2);
        let mut worst = 0.0f64;
        for k in 0..n {
            let t = window.0 + (window.1 - window.0) * k as f64 / (n - 1) as f64;
            let h = 1e-5 * (1.0 + t.abs());
            for w in fns.windows(2) {
                let fd = (w[0](t + h) - w[0](t - h)) / (2.0 * h);
                let exact = w[1](t);
                worst = worst.max((fd - exact).abs() / (1.0 + exact.abs()));
            }
        }
        worst
    }
}

/// The space curve `γ(t) = (g₁(t), g₂(t), f̃(t))`.
#[derive(Clone, Debug)]
pub struct LiftedCurve {
    pub base: BoundaryCurve,
    pub data: BoundaryData,
}

pub type Vec3 = [f64; 3];

impl LiftedCurve {
    pub fn new(base: BoundaryCurve, data: BoundaryData) -> Self {
        Self { base, data }
    }

    pub fn lower_bound(&self) -> Option<f64> {
        self.data.lower_bound
    }

    pub fn point(&self, t: f64) -> Vec3 {
        let g = self.base.eval(t);
        [g.x, g.y, self.data.value(t)]
    }

    /// `k`-th derivative of `γ`, `k ∈ 1..=3`.
    pub fn derivative(&self, t: f64, k: usize) -> Vec3 {
        let (g, f) = match k {
            1 => (self.base.d1(t), self.data.d1(t)),
            2 => (self.base.d2(t), self.data.d2(t)),
            3 => (self.base.d3(t), self.data.d3(t)),
            _ => panic!("derivative order {k} not available"),
        };
        [g.x, g.y, f]
    }
}

pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

/// Determinant of the matrix with rows `a`, `b`, `c`.
pub fn det3(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    dot3(a, cross3(b, c))
}
