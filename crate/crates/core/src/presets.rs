//! Example domains (parabolic strip, power-curve `A_{p₁,p₂}` domains, reverse
//! Jensen strips) and the boundary data used with them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, ConvexRegion, Domain, ParamRange, Point};
use crate::lace::BoundaryData;
use crate::simulate::{membership_check, scan_points, StepFunction};

fn graph_curve(range: ParamRange, f: [Arc<dyn Fn(f64) -> f64 + Send + Sync>; 4]) -> BoundaryCurve {
    let [f0, f1, f2, f3] = f;
    BoundaryCurve::new(
        range,
        Arc::new(move |t| Point::new(t, f0(t))),
        Arc::new(move |t| Point::new(1.0, f1(t))),
        Arc::new(move |t| Point::new(0.0, f2(t))),
        Arc::new(move |t| Point::new(0.0, f3(t))),
        Arc::new(|p: Point| p.x),
    )
}

/// The parabolic strip `{x₁² < x₂} \ {x₁² + ε² < x₂}`.
pub fn bmo_domain(epsilon: f64) -> Result<Domain> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let e2 = epsilon * epsilon;
    let outer = graph_curve(
        ParamRange::REAL_LINE,
        [Arc::new(|t| t * t), Arc::new(|t| 2.0 * t), Arc::new(|_| 2.0), Arc::new(|_| 0.0)],
    );
    let inner = graph_curve(
        ParamRange::REAL_LINE,
        [Arc::new(move |s| s * s + e2), Arc::new(|s| 2.0 * s), Arc::new(|_| 2.0), Arc::new(|_| 0.0)],
    );
    Ok(Domain::new(
        ConvexRegion::new(outer, Arc::new(|p: Point| p.x * p.x - p.y)),
        ConvexRegion::new(inner, Arc::new(move |p: Point| p.x * p.x + e2 - p.y)),
    ))
}

/// `t ↦ (c₁ t^{p₁}, t^{p₂})` on `t > 0` with exact derivatives.
fn power_curve(p1: f64, p2: f64, c1: f64, inverse: Arc<dyn Fn(Point) -> f64 + Send + Sync>) -> BoundaryCurve {
    let pw = move |p: f64, k: i32, t: f64| {
        let mut c = 1.0;
        for j in 0..k {
            c *= p - j as f64;
        }
        c * t.powf(p - k as f64)
    };
    BoundaryCurve::new(
        ParamRange::new(0.0, f64::INFINITY),
        Arc::new(move |t| Point::new(c1 * pw(p1, 0, t), pw(p2, 0, t))),
        Arc::new(move |t| Point::new(c1 * pw(p1, 1, t), pw(p2, 1, t))),
        Arc::new(move |t| Point::new(c1 * pw(p1, 2, t), pw(p2, 2, t))),
        Arc::new(move |t| Point::new(c1 * pw(p1, 3, t), pw(p2, 3, t))),
        inverse,
    )
}

/// `Ω₀ = {x > 0 : x₂^{1/p₂} < x₁^{1/p₁}}` and `Ω₁` the same with `Q x₂^{1/p₂}`.
/// `∂Ω₀` is `t ↦ (t^{p₁}, t^{p₂})` and `∂Ω₁` is `s ↦ (Q^{p₁} s^{p₁}, s^{p₂})`.
pub fn ap_domain(p1: f64, p2: f64, q: f64) -> Result<Domain> {
    if !(p1 > p2) || p1 == 0.0 || p2 == 0.0 || !p1.is_finite() || !p2.is_finite() {
        return Err(Error::InvalidExponents { p1, p2 });
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("Q must be at least 1, got {q}")));
    }
    let root = move |p: Point, c: f64| {
        let a = p.x.max(1e-300).powf(1.0 / p1) / c;
        let b = p.y.max(1e-300).powf(1.0 / p2);
        (a * b).sqrt()
    };
    let outer = power_curve(p1, p2, 1.0, Arc::new(move |p| root(p, 1.0)));
    let inner = power_curve(p1, p2, q.powf(p1), Arc::new(move |p| root(p, q)));
    let level = move |c: f64| {
        Arc::new(move |p: Point| {
            if p.x > 0.0 && p.y > 0.0 {
                c * p.y.powf(1.0 / p2) - p.x.powf(1.0 / p1)
            } else {
                1.0
            }
        })
    };
    Ok(Domain::new(
        ConvexRegion::new(outer, level(1.0)),
        ConvexRegion::new(inner, level(q)),
    ))
}

/// A convex profile `Φ` with derivatives up to third order.
#[derive(Clone)]
pub struct ConvexProfile {
    pub label: String,
    pub range: ParamRange,
    value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d2: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d3: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ConvexProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexProfile").field("label", &self.label).finish_non_exhaustive()
    }
}

impl ConvexProfile {
    pub fn new(
        label: impl Into<String>,
        range: ParamRange,
        value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        d1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        d2: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        d3: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    ) -> Self {
        Self { label: label.into(), range, value, d1, d2, d3 }
    }

    pub fn exp() -> Self {
        Self::new(
            "exp",
            ParamRange::REAL_LINE,
            Arc::new(f64::exp),
            Arc::new(f64::exp),
            Arc::new(f64::exp),
            Arc::new(f64::exp),
        )
    }

    pub fn square() -> Self {
        Self::new(
            "square",
            ParamRange::REAL_LINE,
            Arc::new(|t| t * t),
            Arc::new(|t| 2.0 * t),
            Arc::new(|_| 2.0),
            Arc::new(|_| 0.0),
        )
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    /// Second differences on a grid over `[-10, 10]` (clipped to the range)
    /// must be nonnegative up to a relative tolerance.
    pub fn check_convex(&self) -> Result<()> {
        let (lo, hi) = (self.range.lo.max(-10.0), self.range.hi.min(10.0));
        let h = 1e-3;
        for k in 0..=200 {
            let t = lo + (hi - lo) * k as f64 / 200.0;
            if !(self.range.contains(t - h) && self.range.contains(t + h)) {
                continue;
            }
            let (a, b, c) = (self.value(t - h), self.value(t), self.value(t + h));
            let second = (a - 2.0 * b + c) / (h * h);
            if second < -1e-6 * (1.0 + b.abs()) {
                return Err(Error::NotConvex { at: t });
            }
        }
        Ok(())
    }
}

/// The strip `{Φ(x₁) ≤ x₂ ≤ QΦ(x₁)}`: `Ω₀` is the epigraph of `Φ` and `Ω₁`
/// the epigraph of `QΦ`.
pub fn reverse_jensen_domain(phi: &ConvexProfile, q: f64) -> Result<Domain> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("Q must exceed 1, got {q}")));
    }
    phi.check_convex()?;
    let fns = |c: f64| -> [Arc<dyn Fn(f64) -> f64 + Send + Sync>; 4] {
        let (a, b, d, e) = (phi.value.clone(), phi.d1.clone(), phi.d2.clone(), phi.d3.clone());
        [
            Arc::new(move |t| c * a(t)),
            Arc::new(move |t| c * b(t)),
            Arc::new(move |t| c * d(t)),
            Arc::new(move |t| c * e(t)),
        ]
    };
    let level = |c: f64| {
        let v = phi.value.clone();
        Arc::new(move |p: Point| c * v(p.x) - p.y)
    };
    Ok(Domain::new(
        ConvexRegion::new(graph_curve(phi.range, fns(1.0)), level(1.0)),
        ConvexRegion::new(graph_curve(phi.range, fns(q)), level(q)),
    ))
}

fn circle(radius: f64) -> BoundaryCurve {
    BoundaryCurve::new(
        ParamRange::new(-PI, PI),
        Arc::new(move |t: f64| Point::new(radius * t.cos(), radius * t.sin())),
        Arc::new(move |t: f64| Point::new(-radius * t.sin(), radius * t.cos())),
        Arc::new(move |t: f64| Point::new(-radius * t.cos(), -radius * t.sin())),
        Arc::new(move |t: f64| Point::new(radius * t.sin(), -radius * t.cos())),
        Arc::new(|p: Point| p.y.atan2(p.x)),
    )
}

/// Concentric disks of radii 2 and 1. Bounded, so it fails the
/// unboundedness diagnostic; used to exercise the diagnostics.
pub fn annulus_domain() -> Domain {
    let disk = |r: f64| ConvexRegion::new(circle(r), Arc::new(move |p: Point| p.norm() - r));
    Domain::new(disk(2.0), disk(1.0))
}

/// Custom domains addressable by id from a domain file.
pub fn custom_domain(id: &str) -> Result<Domain> {
    match id {
        "annulus" => Ok(annulus_domain()),
        "exp-strip" => reverse_jensen_domain(&ConvexProfile::exp(), 2.0),
        _ => Err(Error::InvalidParameter(format!("unknown custom domain `{id}`"))),
    }
}

/// Named preset with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Bmo { epsilon: f64 },
    Ap { p1: f64, p2: f64, q: f64 },
    ReverseJensen { profile: String, q: f64 },
    Custom { id: String },
}

impl Preset {
    pub fn build(&self) -> Result<Domain> {
        match self {
            Preset::Bmo { epsilon } => bmo_domain(*epsilon),
            Preset::Ap { p1, p2, q } => ap_domain(*p1, *p2, *q),
            Preset::ReverseJensen { profile, q } => {
                let phi = match profile.as_str() {
                    "exp" => ConvexProfile::exp(),
                    "square" => ConvexProfile::square(),
                    other => return Err(Error::InvalidParameter(format!("unknown profile `{other}`"))),
                };
                reverse_jensen_domain(&phi, *q)
            }
            Preset::Custom { id } => custom_domain(id),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Bmo { .. } => "bmo",
            Preset::Ap { .. } => "ap",
            Preset::ReverseJensen { .. } => "reverse_jensen",
            Preset::Custom { .. } => "custom",
        }
    }

    /// Default `x₁` window for meshing and plots.
    pub fn default_window(&self) -> (f64, f64) {
        match self {
            Preset::Bmo { .. } => (-2.0, 2.0),
            Preset::Ap { .. } => (0.05, 4.0),
            Preset::ReverseJensen { .. } => (-2.0, 1.5),
            Preset::Custom { .. } => (-2.5, 2.5),
        }
    }
}

/// Boundary data `f̃(t)` as accepted on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum FSpec {
    /// `e^{λt}`.
    Exp { lambda: f64 },
    /// `sign · t^p`.
    Power { p: f64, sign: f64 },
    Sin,
    /// `slope · t + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `1` for `t ≥ a`, `0` otherwise.
    Indicator { a: f64 },
}

impl fmt::Display for FSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FSpec::Exp { lambda } => write!(f, "exp lambda={lambda}"),
            FSpec::Power { p, sign } => write!(f, "power p={p} sign={sign}"),
            FSpec::Sin => f.write_str("sin"),
            FSpec::Affine { slope, intercept } => write!(f, "affine slope={slope} intercept={intercept}"),
            FSpec::Indicator { a } => write!(f, "indicator a={a}"),
        }
    }
}

impl FromStr for FSpec {
    type Err = Error;

    /// `name key=value ...`, e.g. `exp lambda=2` or `power p=4 sign=-1`.
    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let name = words.next().ok_or_else(|| Error::Parse("empty boundary data spec".into()))?;
        let mut args = std::collections::BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{w}`")))?;
            let v: f64 = v.parse().map_err(|_| Error::Parse(format!("bad number `{v}` for `{k}`")))?;
            args.insert(k.to_string(), v);
        }
        let mut take = |k: &str, default: Option<f64>| {
            args.remove(k)
                .or(default)
                .ok_or_else(|| Error::Parse(format!("`{name}` needs `{k}=`")))
        };
        let spec = match name {
            "exp" => FSpec::Exp { lambda: take("lambda", Some(1.0))? },
            "power" => FSpec::Power { p: take("p", None)?, sign: take("sign", Some(1.0))? },
            "sin" => FSpec::Sin,
            "affine" => FSpec::Affine {
                slope: take("slope", Some(1.0))?,
                intercept: take("intercept", Some(0.0))?,
            },
            "indicator" => FSpec::Indicator { a: take("a", Some(0.0))? },
            other => return Err(Error::Parse(format!("unknown boundary data `{other}`"))),
        };
        if let Some(k) = args.keys().next() {
            return Err(Error::Parse(format!("unexpected key `{k}` for `{name}`")));
        }
        Ok(spec)
    }
}

impl FSpec {
    /// Boundary data over `range`, with the infimum over the range as lower
    /// bound when it is finite.
    pub fn build(&self, range: ParamRange) -> Result<BoundaryData> {
        let label = self.to_string();
        let lb = |vals: &[f64]| {
            let m = vals.iter().copied().fold(f64::INFINITY, f64::min);
            m.is_finite().then_some(m)
        };
        let data = match *self {
            FSpec::Exp { lambda } => {
                let e = move |k: i32| -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
                    Arc::new(move |t: f64| lambda.powi(k) * (lambda * t).exp())
                };
                let ends = [(lambda * range.lo).exp(), (lambda * range.hi).exp()];
                let bound = if lambda == 0.0 { Some(1.0) } else { lb(&ends).map(|v| v.max(0.0)) };
                BoundaryData::new(label, e(0), e(1), e(2), e(3), true, bound)
            }
            FSpec::Power { p, sign } => {
                let integer = p.fract() == 0.0 && p.abs() < 64.0;
                if !integer && range.lo < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "non-integer power {p} needs a positive parameter range"
                    )));
                }
                let pw = move |k: i32| -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
                    Arc::new(move |t: f64| {
                        let mut c = sign;
                        for j in 0..k {
                            c *= p - j as f64;
                        }
                        if c == 0.0 {
                            return 0.0;
                        }
                        let e = p - k as f64;
                        if integer {
                            c * t.powi(e as i32)
                        } else {
                            c * t.powf(e)
                        }
                    })
                };
                let v = pw(0);
                let mut cands = vec![v(range.lo), v(range.hi)];
                if range.contains(0.0) || (range.lo == 0.0 && p > 0.0) {
                    cands.push(v(0.0));
                }
                let bound = if cands.iter().any(|x| x.is_nan()) { None } else { lb(&cands) };
                BoundaryData::new(label, v, pw(1), pw(2), pw(3), true, bound)
            }
            FSpec::Sin => BoundaryData::new(
                label,
                Arc::new(f64::sin),
                Arc::new(f64::cos),
                Arc::new(|t: f64| -t.sin()),
                Arc::new(|t: f64| -t.cos()),
                true,
                Some(-1.0),
            ),
            FSpec::Affine { slope, intercept } => {
                let bound = if slope == 0.0 {
                    Some(intercept)
                } else {
                    lb(&[slope * range.lo + intercept, slope * range.hi + intercept])
                };
                BoundaryData::new(
                    label,
                    Arc::new(move |t| slope * t + intercept),
                    Arc::new(move |_| slope),
                    Arc::new(|_| 0.0),
                    Arc::new(|_| 0.0),
                    true,
                    bound,
                )
            }
            FSpec::Indicator { a } => BoundaryData::new(
                label,
                Arc::new(move |t| if t >= a { 1.0 } else { 0.0 }),
                Arc::new(|_| 0.0),
                Arc::new(|_| 0.0),
                Arc::new(|_| 0.0),
                false,
                Some(0.0),
            ),
        };
        Ok(data)
    }
}

/// Class whose scalar description is compared with geometric membership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassKind {
    /// `⟨(φ₁ - ⟨φ₁⟩_J)²⟩_J ≤ ε²`.
    Bmo { epsilon: f64 },
    /// `⟨ψ^{p₁}⟩_J^{1/p₁} ⟨ψ^{p₂}⟩_J^{-1/p₂} ≤ Q`.
    Ap { p1: f64, p2: f64, q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorrespondenceReport {
    pub samples: usize,
    pub agree: usize,
    pub disagree: usize,
    /// Functions whose worst margin (either test) is within `TIE_BAND`.
    pub ties: usize,
    /// Members among the non-tied functions.
    pub members: usize,
}

impl CorrespondenceReport {
    pub fn agreement_rate(&self) -> f64 {
        let n = self.agree + self.disagree;
        if n == 0 {
            1.0
        } else {
            self.agree as f64 / n as f64
        }
    }
}

pub const TIE_BAND: f64 = 1e-9;

/// Scan grid used by the correspondence check.
pub const CORRESPONDENCE_GRID: usize = 32;

impl ClassKind {
    pub fn domain(&self) -> Result<Domain> {
        match *self {
            ClassKind::Bmo { epsilon } => bmo_domain(epsilon),
            ClassKind::Ap { p1, p2, q } => ap_domain(p1, p2, q),
        }
    }

    /// Smallest scalar margin over subintervals with ends on the scan grid.
    /// Nonnegative means the class condition holds on every tested interval.
    pub fn scalar_margin(&self, phi: &StepFunction, grid: usize) -> f64 {
        let xs = scan_points(phi, grid);
        let moment = |a: f64, b: f64, h: &dyn Fn(f64) -> f64| -> f64 {
            phi.piece_rows()
                .map(|(l, r, t, _)| (r.min(b) - l.max(a)).max(0.0) * h(t))
                .sum::<f64>()
                / (b - a)
        };
        let mut worst = f64::INFINITY;
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                let (a, b) = (xs[i], xs[j]);
                let m = match *self {
                    ClassKind::Bmo { epsilon } => {
                        let mean = moment(a, b, &|t| t);
                        let osc = moment(a, b, &|t| (t - mean) * (t - mean));
                        epsilon * epsilon - osc
                    }
                    ClassKind::Ap { p1, p2, q } => {
                        let m1 = moment(a, b, &|t| t.powf(p1)).powf(1.0 / p1);
                        let m2 = moment(a, b, &|t| t.powf(p2)).powf(-1.0 / p2);
                        (q - m1 * m2) / q
                    }
                };
                worst = worst.min(m);
            }
        }
        worst
    }

    fn random_step(&self, outer: &BoundaryCurve, rng: &mut ChaCha8Rng) -> StepFunction {
        let pieces = rng.gen_range(1..=6usize);
        let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.gen_range(0.02..0.98)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut bps = vec![0.0];
        bps.extend(cuts);
        bps.push(1.0);
        let n = bps.len() - 1;
        let params: Vec<f64> = match *self {
            ClassKind::Bmo { epsilon } => {
                let spread = rng.gen_range(0.0..2.0 * epsilon);
                let shift = rng.gen_range(-3.0..3.0);
                (0..n).map(|_| shift + rng.gen_range(-spread..=spread)).collect()
            }
            ClassKind::Ap { .. } => {
                let sigma = rng.gen_range(0.0..3.0);
                let shift: f64 = rng.gen_range(-1.0..1.0);
                (0..n).map(|_| (shift + rng.gen_range(-sigma..=sigma)).exp()).collect()
            }
        };
        StepFunction::new(outer, bps, params)
    }
}

/// Compares geometric membership (`⟨φ⟩_J ∉ Ω₁`) with the classical scalar
/// condition on `samples` random step functions.
///
/// For the power-curve class the step function takes values
/// `(ψ^{p₁}, ψ^{p₂})` with `ψ = t`, the lift matching the parametrization.
pub fn class_correspondence_check(kind: ClassKind, samples: usize, seed: u64) -> Result<CorrespondenceReport> {
    let domain = kind.domain()?;
    let outer = &domain.outer.curve;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phis: Vec<StepFunction> = (0..samples).map(|_| kind.random_step(outer, &mut rng)).collect();
    let rows: Vec<(bool, bool, bool)> = phis
        .par_iter()
        .map(|phi| {
            let geo = membership_check(&domain, phi, CORRESPONDENCE_GRID);
            let scalar = kind.scalar_margin(phi, CORRESPONDENCE_GRID);
            let geo_scale = match kind {
                ClassKind::Bmo { .. } => 1.0,
                ClassKind::Ap { q, .. } => q * 1.0f64.max(geo.worst.abs()),
            };
            let tie = geo.worst.abs() < TIE_BAND * geo_scale || scalar.abs() < TIE_BAND;
            (tie, geo.ok, scalar >= 0.0)
        })
        .collect();
    let mut report = CorrespondenceReport { samples, ..Default::default() };
    for (tie, g, s) in rows {
        if tie {
            report.ties += 1;
        } else if g == s {
            report.agree += 1;
            report.members += usize::from(g);
        } else {
            report.disagree += 1;
        }
    }
    Ok(report)
}
