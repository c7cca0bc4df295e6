//! Sampled certificates for the structural conditions on `Ω`. None of these
//! are proofs: each reports what the samples are consistent with.

use std::f64::consts::PI;

use super::{Domain, Point, Side};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy)]
pub struct RayProbe {
    /// Number of equally spaced directions on the circle.
    pub directions: usize,
    /// Largest radius tested along each ray.
    pub max_radius: f64,
    /// Geometrically spaced radii per ray.
    pub radial_samples: usize,
    /// Base points tried for each set.
    pub base_points: usize,
}

impl Default for RayProbe {
    fn default() -> Self {
        Self {
            directions: 16,
            max_radius: 1e4,
            radial_samples: 64,
            base_points: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRow {
    pub angle: f64,
    /// Some ray with this direction stays in `Ω₀`.
    pub admissible: bool,
    /// Some translate of such a ray stays in `Ω₁`.
    pub translated: bool,
}

impl RayRow {
    pub fn passes(&self) -> bool {
        self.admissible && self.translated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayReport {
    pub rows: Vec<RayRow>,
    pub pass: bool,
}

/// Searches, for each sampled direction admissible in `Ω₀`, for a translate of
/// the ray contained in `Ω₁`. The overall verdict passes when at least one
/// direction is admissible and every admissible direction translates.
pub fn check_ray_condition(domain: &Domain, probe: &RayProbe) -> RayReport {
    let inner_bases = interior_points(domain, probe.base_points);
    let radii: Vec<f64> = (1..=probe.radial_samples)
        .map(|k| probe.max_radius.powf(k as f64 / probe.radial_samples as f64))
        .collect();
    let stays = |base: Point, d: Point, inside: &dyn Fn(Point) -> bool| {
        inside(base) && radii.iter().all(|&r| inside(base + d * r))
    };
    let in_outer = |p: Point| domain.outer.level(p) < 0.0;
    let in_inner = |p: Point| domain.inner.level(p) < 0.0;
    let rows: Vec<RayRow> = (0..probe.directions)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / probe.directions as f64;
            let d = Point::new(angle.cos(), angle.sin());
            let admissible = inner_bases.iter().any(|&b| stays(b, d, &in_outer));
            let translated = admissible && inner_bases.iter().any(|&b| stays(b, d, &in_inner));
            RayRow { angle, admissible, translated }
        })
        .collect();
    let pass = rows.iter().any(|r| r.admissible) && rows.iter().all(|r| !r.admissible || r.translated);
    RayReport { rows, pass }
}

/// Points strictly inside `Ω₁` (hence inside `Ω₀`), pushed off `∂Ω₁` along
/// the inward normal.
fn interior_points(domain: &Domain, count: usize) -> Vec<Point> {
    let curve = &domain.inner.curve;
    let range = curve.range();
    (1..=count)
        .filter_map(|k| {
            let s = range.from_unit(k as f64 / (count + 1) as f64);
            let p = curve.eval(s);
            let n = curve.d1(s).normalized().perp();
            let scale = 1e-3 * (1.0 + p.norm());
            [n, -n]
                .into_iter()
                .map(|m| p + m * scale)
                .find(|&q| domain.inner.level(q) < 0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceVerdict {
    /// Partial integrals keep growing with no sign of saturation.
    Diverges,
    /// Growth is slowing (or the window is empty); no claim is made.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceSide {
    pub side: Side,
    /// `(end parameter on ∂Ω₁, arclength covered, partial integral of 1/ℓ)`.
    pub partials: Vec<(f64, f64, f64)>,
    pub verdict: DivergenceVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub right: DivergenceSide,
    pub left: DivergenceSide,
}

/// Number of nested windows probed per side.
pub const DIVERGENCE_WINDOWS: usize = 8;

/// Probes divergence of `∫ 1/ℓ_R` toward the lower end of `∂Ω₁` and of
/// `∫ 1/ℓ_L` toward the upper end, integrating against arclength of `∂Ω₁`
/// from the parameter `t0` over windows whose parameter span doubles up to
/// `horizon` (or, toward a finite endpoint, halves the remaining gap).
pub fn check_divergence_condition(domain: &Domain, t0: f64, horizon: f64) -> Result<DivergenceReport> {
    if horizon < 0.0 {
        return Err(Error::InvalidParameter("horizon must be nonnegative".into()));
    }
    let right = divergence_side(domain, t0, horizon, Side::Right)?;
    let left = divergence_side(domain, t0, horizon, Side::Left)?;
    Ok(DivergenceReport { right, left })
}

fn divergence_side(domain: &Domain, t0: f64, horizon: f64, side: Side) -> Result<DivergenceSide> {
    let curve = &domain.inner.curve;
    let range = curve.range();
    let dir = match side {
        Side::Right => -1.0,
        Side::Left => 1.0,
    };
    let end = if dir < 0.0 { range.lo } else { range.hi };
    let ends: Vec<f64> = (1..=DIVERGENCE_WINDOWS)
        .map(|k| {
            if horizon == 0.0 {
                t0
            } else if end.is_finite() {
                end + (t0 - end) * 0.5f64.powi(k as i32)
            } else {
                t0 + dir * horizon * 0.5f64.powi((DIVERGENCE_WINDOWS - k) as i32)
            }
        })
        .collect();
    let integrand = |s: f64| -> Result<f64> {
        let ell = domain
            .tangent_length_at_touch(s, side)
            .ok_or_else(|| Error::QuadratureFailure {
                at: s,
                reason: "tangent line does not reach the outer boundary".into(),
            })?;
        if !(ell > 0.0) {
            return Err(Error::QuadratureFailure {
                at: s,
                reason: "zero tangent length".into(),
            });
        }
        Ok(curve.d1(s).norm() / ell)
    };
    let arclength = |s: f64| Ok(curve.d1(s).norm());
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-8,
        max_intervals: 4000,
    };
    let mut partials = Vec::with_capacity(ends.len());
    let (mut prev, mut total, mut length) = (t0, 0.0, 0.0);
    for &e in &ends {
        total += integrate(integrand, prev, e, opts)?.value.abs();
        length += integrate(arclength, prev, e, opts)?.value.abs();
        partials.push((e, length, total));
        prev = e;
    }
    let sums: Vec<f64> = partials.iter().map(|p| p.2).collect();
    Ok(DivergenceSide {
        side,
        verdict: classify_partials(&sums),
        partials,
    })
}

/// Classifies partial integrals over nested windows whose size doubles.
///
/// Logarithmic or faster growth adds a non-shrinking increment per doubling;
/// a convergent tail shrinks geometrically. The last two increment ratios
/// must both stay above `0.75` to report divergence.
pub fn classify_partials(sums: &[f64]) -> DivergenceVerdict {
    if sums.len() < 4 {
        return DivergenceVerdict::Inconclusive;
    }
    let inc: Vec<f64> = sums.windows(2).map(|w| w[1] - w[0]).collect();
    let n = inc.len();
    let ok = |a: f64, b: f64| a > 0.0 && b >= 0.75 * a;
    if ok(inc[n - 3], inc[n - 2]) && ok(inc[n - 2], inc[n - 1]) {
        DivergenceVerdict::Diverges
    } else {
        DivergenceVerdict::Inconclusive
    }
}

/// Same classification for a tangent-length profile given directly as a
/// function of arclength `σ ≥ 0`.
pub fn divergence_from_length_profile<F>(ell: F, horizon: f64) -> Result<(Vec<f64>, DivergenceVerdict)>
where
    F: Fn(f64) -> f64,
{
    let mut sums = Vec::with_capacity(DIVERGENCE_WINDOWS);
    let (mut prev, mut total) = (0.0, 0.0);
    for k in 1..=DIVERGENCE_WINDOWS {
        let e = if horizon == 0.0 {
            0.0
        } else {
            horizon * 0.5f64.powi((DIVERGENCE_WINDOWS - k) as i32)
        };
        total += integrate(|s| Ok(1.0 / ell(s)), prev, e, QuadOptions::default())?.value;
        sums.push(total);
        prev = e;
    }
    let verdict = classify_partials(&sums);
    Ok((sums, verdict))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnboundedReport {
    pub outer: bool,
    pub inner: bool,
}

/// Checks that both boundaries run off to distances above `radius` near the
/// ends of their parameter ranges ("consistent with unbounded").
pub fn check_unbounded(domain: &Domain, radius: f64) -> UnboundedReport {
    let far = |c: &super::BoundaryCurve| {
        let r = c.range();
        [1e-7, 1.0 - 1e-7]
            .into_iter()
            .all(|theta| c.eval(r.from_unit(theta)).norm() > radius)
    };
    UnboundedReport {
        outer: far(&domain.outer.curve),
        inner: far(&domain.inner.curve),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_log_vs_convergent() {
        let log: Vec<f64> = (0..8).map(|k| (2f64.powi(k)).ln() + 1.0).collect();
        assert_eq!(classify_partials(&log), DivergenceVerdict::Diverges);
        let conv: Vec<f64> = (0..8).map(|k| 1.0 - 0.5f64.powi(k)).collect();
        assert_eq!(classify_partials(&conv), DivergenceVerdict::Inconclusive);
        assert_eq!(classify_partials(&[0.0; 8]), DivergenceVerdict::Inconclusive);
    }

    #[test]
    fn quadratic_length_profile_plateaus() {
        let (sums, verdict) = divergence_from_length_profile(|s| 1.0 + s * s, 1e3).unwrap();
        assert_eq!(verdict, DivergenceVerdict::Inconclusive);
        assert!((sums.last().unwrap() - (1e3f64).atan()).abs() < 1e-6);
    }

    #[test]
    fn linear_length_profile_diverges() {
        let (_, verdict) = divergence_from_length_profile(|s| 1.0 + s, 1e3).unwrap();
        assert_eq!(verdict, DivergenceVerdict::Diverges);
    }

    #[test]
    fn zero_horizon_is_inconclusive() {
        let (sums, verdict) = divergence_from_length_profile(|s| 1.0 + s, 0.0).unwrap();
        assert!(sums.iter().all(|&s| s == 0.0));
        assert_eq!(verdict, DivergenceVerdict::Inconclusive);
    }
}
