//! The force integral along `∂Ω₀`, coming from `-∞` along right tangents or
//! from `+∞` along left tangents.
//!
//! With `w = g₁'/(ℓ cos α)` and
//! `k = (tan α · g₁' - g₂') / (g₁'g₂'' - g₂'g₁'')² · det[f̃'…; g₁'…; g₂'…]`
//! evaluated on the tangent of the requested side, the right force is
//! `F(t) = ∫_{-∞}^t exp(∫_τ^t w) k(τ) dτ` and the left force is
//! `G(t) = ∫_t^{+∞} exp(-∫_t^τ w) k(τ) dτ`. Both satisfy linear ODEs,
//! `F' = k + wF` and `G' = -k + wG`, which are integrated from a truncation
//! point with zero initial value.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Domain, ParamRange, Side};
use crate::lace::{det3, LiftedCurve};
use crate::quad::{integrate, integrate_scalar_ode, OdeError, OdeOptions, QuadOptions};

/// `det[(f̃', f̃'', f̃'''), (g₁', g₁'', g₁'''), (g₂', g₂'', g₂''')]`.
pub fn force_determinant(curve: &LiftedCurve, tau: f64) -> f64 {
    let g = &curve.base;
    let (a, b, c) = (g.d1(tau), g.d2(tau), g.d3(tau));
    let d = &curve.data;
    det3([d.d1(tau), d.d2(tau), d.d3(tau)], [a.x, b.x, c.x], [a.y, b.y, c.y])
}

/// Curvature-type factor below which the boundary is treated as degenerate.
pub const CURVATURE_TOL: f64 = 1e-12;
/// `|cos α|` below which the integrand is singular.
pub const COS_TOL: f64 = 1e-10;

/// `(w(τ), k(τ))` for the tangent on `side` at `g(τ)`.
pub fn force_coefficients(domain: &Domain, curve: &LiftedCurve, tau: f64, side: Side) -> Result<(f64, f64)> {
    let g = &curve.base;
    let (d1, d2) = (g.d1(tau), g.d2(tau));
    let curv = d1.cross(d2);
    if curv.abs() < CURVATURE_TOL {
        return Err(Error::CurvatureDegenerate { at: tau });
    }
    let det = force_determinant(curve, tau);
    let tan = domain.tangent(tau, side)?;
    let cos = tan.angle.cos();
    if cos.abs() < COS_TOL {
        return Err(Error::SingularIntegrand { at: tau });
    }
    let w = d1.x / (tan.length * cos);
    if det == 0.0 {
        return Ok((w, 0.0));
    }
    let k = (tan.angle.tan() * d1.x - d1.y) / (curv * curv) * det;
    Ok((w, k))
}

#[derive(Debug, Clone, Copy)]
pub struct ForceOptions {
    /// Number of truncation doublings; `0` leaves an empty window.
    pub max_doublings: u32,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub ode: OdeOptions,
}

impl Default for ForceOptions {
    fn default() -> Self {
        Self {
            max_doublings: 10,
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            ode: OdeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceValue {
    pub value: f64,
    pub converged: bool,
    /// Change produced by the last truncation doubling.
    pub tail: f64,
    /// Truncation point used in place of `∓∞`.
    pub truncation: f64,
}

/// Truncation point number `k ≥ 1` for a window starting at `t` and running
/// toward the end of `range` selected by `side`.
fn truncation_point(range: ParamRange, t: f64, side: Side, k: u32) -> f64 {
    let scale = 2f64.powi(k as i32 - 1);
    match side {
        Side::Right if range.lo.is_finite() => range.lo + (t - range.lo) / (1.0 + scale),
        Side::Right => t - scale,
        Side::Left if range.hi.is_finite() => range.hi - (range.hi - t) / (1.0 + scale),
        Side::Left => t + scale,
    }
}

fn ode_error(domain: &Domain, curve: &LiftedCurve, side: Side, e: OdeError) -> Error {
    match e {
        OdeError::Rhs(err) => err,
        OdeError::StepCollapse(x) => {
            let near_vertical = domain
                .tangent(x, side)
                .map(|t| t.angle.cos().abs() < 1e-3)
                .unwrap_or(false);
            if near_vertical || force_coefficients(domain, curve, x, side).is_err() {
                Error::SingularIntegrand { at: x }
            } else {
                Error::QuadratureFailure {
                    at: x,
                    reason: "step size collapsed".into(),
                }
            }
        }
    }
}

/// Integrates the force ODE from `start` through the sorted `stops`.
fn sweep(domain: &Domain, curve: &LiftedCurve, side: Side, start: f64, stops: &[f64], opts: &OdeOptions) -> Result<Vec<f64>> {
    let rhs = |tau: f64, y: f64| -> Result<f64> {
        let (w, k) = force_coefficients(domain, curve, tau, side)?;
        Ok(match side {
            Side::Right => k + w * y,
            Side::Left => -k + w * y,
        })
    };
    integrate_scalar_ode(rhs, start, 0.0, stops, *opts).map_err(|e| ode_error(domain, curve, side, e))
}

/// Force value at `t` with the truncation pushed out by doubling until two
/// successive values agree within tolerance.
pub fn force_integral(
    domain: &Domain,
    curve: &LiftedCurve,
    t: f64,
    side: Side,
    opts: &ForceOptions,
) -> Result<ForceValue> {
    let range = curve.base.range();
    if opts.max_doublings == 0 {
        return Ok(ForceValue { value: 0.0, converged: false, tail: f64::INFINITY, truncation: t });
    }
    let mut prev: Option<f64> = None;
    let mut last = ForceValue { value: 0.0, converged: false, tail: f64::INFINITY, truncation: t };
    for k in 1..=opts.max_doublings {
        let start = truncation_point(range, t, side, k);
        let value = sweep(domain, curve, side, start, &[t], &opts.ode)?[0];
        let tail = prev.map_or(f64::INFINITY, |p| (value - p).abs());
        last = ForceValue {
            value,
            converged: tail <= opts.abs_tol.max(opts.rel_tol * value.abs()),
            tail,
            truncation: start,
        };
        if last.converged {
            break;
        }
        prev = Some(value);
    }
    Ok(last)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceProfile {
    pub side: Side,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub converged: Vec<bool>,
    pub tails: Vec<f64>,
    /// Final truncation point of the shared sweep.
    pub truncation: f64,
    /// Per-point failure, if any; such points carry `NaN` and `converged = false`.
    pub errors: Vec<Option<Error>>,
}

/// Force values on a grid from one shared ODE sweep per truncation depth.
///
/// A failure inside the sweep (for example a singular integrand) only marks
/// the grid points whose integral runs through the failing abscissa; every
/// other point is recomputed on its own.
pub fn force_profile(
    domain: &Domain,
    curve: &LiftedCurve,
    t_grid: &[f64],
    side: Side,
    opts: &ForceOptions,
) -> Result<ForceProfile> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("force grid is empty".into()));
    }
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b]));
    if side == Side::Left {
        order.reverse();
    }
    let stops: Vec<f64> = order.iter().map(|&i| t_grid[i]).collect();
    let range = curve.base.range();
    let n = t_grid.len();
    let mut values = vec![f64::NAN; n];
    let mut converged = vec![false; n];
    let mut tails = vec![f64::INFINITY; n];
    let mut truncation = stops[0];

    let shared = (|| -> Result<()> {
        let mut prev: Option<Vec<f64>> = None;
        for k in 1..=opts.max_doublings {
            let start = truncation_point(range, stops[0], side, k);
            truncation = start;
            let vals = sweep(domain, curve, side, start, &stops, &opts.ode)?;
            let mut all = true;
            for (j, &i) in order.iter().enumerate() {
                let tail = prev.as_ref().map_or(f64::INFINITY, |p| (vals[j] - p[j]).abs());
                values[i] = vals[j];
                tails[i] = tail;
                converged[i] = tail <= opts.abs_tol.max(opts.rel_tol * vals[j].abs());
                all &= converged[i];
            }
            if all {
                break;
            }
            prev = Some(vals);
        }
        if opts.max_doublings == 0 {
            values.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(())
    })();

    let mut errors = vec![None; n];
    if shared.is_err() {
        let single: Vec<Result<ForceValue>> = t_grid
            .par_iter()
            .map(|&t| force_integral(domain, curve, t, side, opts))
            .collect();
        for (i, r) in single.into_iter().enumerate() {
            match r {
                Ok(v) => {
                    values[i] = v.value;
                    converged[i] = v.converged;
                    tails[i] = v.tail;
                }
                Err(e) => {
                    values[i] = f64::NAN;
                    converged[i] = false;
                    tails[i] = f64::INFINITY;
                    errors[i] = Some(e);
                }
            }
        }
    }
    Ok(ForceProfile {
        side,
        t_grid: t_grid.to_vec(),
        values,
        converged,
        tails,
        truncation,
        errors,
    })
}

/// `∫_τ^t w` for the right side (the exponent of the damping factor), or
/// `-∫_t^τ w` for the left side, by adaptive quadrature.
pub fn inner_exponent(domain: &Domain, curve: &LiftedCurve, t: f64, tau: f64, side: Side) -> Result<f64> {
    let w = |s: f64| force_coefficients(domain, curve, s, side).map(|c| c.0);
    let v = integrate(w, tau, t, QuadOptions::default())?.value;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{bmo_domain, FSpec};

    fn setup(eps: f64, f: &str) -> (Domain, LiftedCurve) {
        let d = bmo_domain(eps).unwrap();
        let data = f.parse::<FSpec>().unwrap().build(d.outer.curve.range()).unwrap();
        let c = LiftedCurve::new(d.outer.curve.clone(), data);
        (d, c)
    }

    #[test]
    fn parabola_determinant_is_twice_third_derivative() {
        let (_, c) = setup(0.5, "exp");
        for k in -20..=20 {
            let t = 0.2 * k as f64;
            let det = force_determinant(&c, t);
            assert!((det - 2.0 * t.exp()).abs() <= 1e-12 * det.abs());
        }
    }

    #[test]
    fn bmo_coefficients_closed_form() {
        let eps = 0.5;
        let (d, c) = setup(eps, "exp");
        for t in [-1.0, 0.0, 0.7] {
            let (w, k) = force_coefficients(&d, &c, t, Side::Right).unwrap();
            assert!((w + 1.0 / eps).abs() < 1e-9, "{w}");
            assert!((k + eps * f64::exp(t)).abs() < 1e-9 * f64::exp(t), "{k}");
            let (w, k) = force_coefficients(&d, &c, t, Side::Left).unwrap();
            assert!((w - 1.0 / eps).abs() < 1e-9);
            assert!((k - eps * f64::exp(t)).abs() < 1e-9 * f64::exp(t));
        }
    }

    #[test]
    fn affine_data_gives_zero() {
        let (d, c) = setup(0.5, "affine slope=2 intercept=1");
        let v = force_integral(&d, &c, 0.3, Side::Right, &ForceOptions::default()).unwrap();
        assert!(v.value.abs() < 1e-10 && v.converged);
    }

    #[test]
    fn zero_window() {
        let (d, c) = setup(0.5, "exp");
        let opts = ForceOptions { max_doublings: 0, ..Default::default() };
        let v = force_integral(&d, &c, 0.0, Side::Right, &opts).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(!v.converged);
    }

    #[test]
    fn exp_closed_forms() {
        let eps = 0.5;
        let (d, c) = setup(eps, "exp");
        let r = force_integral(&d, &c, 0.0, Side::Right, &ForceOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.value + eps * eps / (1.0 + eps)).abs() < 1e-7, "{r:?}");
        let l = force_integral(&d, &c, 0.0, Side::Left, &ForceOptions::default()).unwrap();
        assert!(l.converged);
        assert!((l.value - eps * eps / (1.0 - eps)).abs() < 1e-7, "{l:?}");
    }

    #[test]
    fn left_force_diverges_for_wide_strip() {
        let (d, c) = setup(1.5, "exp");
        let opts = ForceOptions { max_doublings: 6, ..Default::default() };
        let l = force_integral(&d, &c, 0.0, Side::Left, &opts).unwrap();
        assert!(!l.converged);
    }

    #[test]
    fn ode_matches_nested_quadrature() {
        let eps = 0.5;
        let (d, c) = setup(eps, "sin");
        let (t, lower) = (0.4, -3.0);
        let q = QuadOptions { abs_tol: 1e-10, rel_tol: 1e-9, max_intervals: 500 };
        let outer = integrate(
            |tau| {
                let e = inner_exponent(&d, &c, t, tau, Side::Right)?;
                let (_, k) = force_coefficients(&d, &c, tau, Side::Right)?;
                Ok(e.exp() * k)
            },
            lower,
            t,
            q,
        )
        .unwrap()
        .value;
        let ode = sweep(&d, &c, Side::Right, lower, &[t], &OdeOptions::default()).unwrap()[0];
        assert!((ode - outer).abs() < 1e-7, "{ode} vs {outer}");
    }

    #[test]
    fn damping_factor_bounded_by_one() {
        let (d, c) = setup(0.5, "exp");
        assert_eq!(inner_exponent(&d, &c, 0.2, 0.2, Side::Right).unwrap(), 0.0);
        let mut last = f64::NEG_INFINITY;
        for k in (0..8).rev() {
            let tau = 0.2 - 0.5 * k as f64;
            let e = inner_exponent(&d, &c, 0.2, tau, Side::Right).unwrap();
            assert!(e <= 1e-12 && e >= last - 1e-12);
            last = e;
        }
    }

    #[test]
    fn profile_values_increase() {
        let (d, c) = setup(0.5, "exp");
        let p = force_profile(&d, &c, &[-1.0, 0.0, 1.0], Side::Left, &ForceOptions::default()).unwrap();
        assert!(p.converged.iter().all(|&x| x));
        assert!(p.values[0] > 0.0 && p.values[0] < p.values[1] && p.values[1] < p.values[2]);
        for (t, v) in p.t_grid.iter().zip(&p.values) {
            assert!((v - 0.5 * t.exp()).abs() < 1e-6 * t.exp());
        }
    }

    #[test]
    fn profile_isolates_singular_point() {
        let (d, c) = setup(0.5, "exp");
        let rd = d.rigid_motion(std::f64::consts::FRAC_PI_2, crate::geometry::Point::new(0.0, 0.0));
        let rc = LiftedCurve::new(rd.outer.curve.clone(), c.data.clone());
        let opts = ForceOptions { max_doublings: 3, ..Default::default() };
        let p = force_profile(&rd, &rc, &[-1.0, 0.5, 1.5], Side::Right, &opts).unwrap();
        assert!(p.errors[0].is_none(), "{:?}", p.errors[0]);
        assert!(p.values[0].is_finite());
        assert!(matches!(p.errors[1], Some(Error::SingularIntegrand { .. })), "{:?}", p.errors[1]);
        assert!(!p.converged[1]);
    }
}
