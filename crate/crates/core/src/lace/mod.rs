//! The lifted curve `γ = (g₁, g₂, f̃)`: torsion sign, cup equation and the
//! chord inequalities.

mod data;

pub use data::{cross3, det3, dot3, norm3, sub3, BoundaryData, LiftedCurve, ScalarFn, Vec3};

use crate::error::{Error, Result};
use crate::geometry::{Domain, DEFAULT_SEGMENT_SAMPLES};

/// Zero band for the normalized torsion determinant.
pub const TORSION_ZERO_TOL: f64 = 1e-10;

/// Default cap on the number of torsion sign changes in a window.
pub const DEFAULT_MAX_CHANGES: usize = 64;

/// `det[γ', γ'', γ''']`, the numerator of the torsion.
pub fn torsion_determinant(curve: &LiftedCurve, t: f64) -> f64 {
    det3(curve.derivative(t, 1), curve.derivative(t, 2), curve.derivative(t, 3))
}

/// `det[γ', γ'', γ'''] / (|γ'|³·|γ' × γ''|)`.
pub fn normalized_torsion(curve: &LiftedCurve, t: f64) -> f64 {
    let d1 = curve.derivative(t, 1);
    let d2 = curve.derivative(t, 2);
    let scale = norm3(d1).powi(3) * norm3(cross3(d1, d2));
    if scale == 0.0 {
        return 0.0;
    }
    det3(d1, d2, curve.derivative(t, 3)) / scale
}

/// Sign of the torsion of `γ` at `t`: `+1`, `-1`, or `0` inside the zero band.
pub fn torsion_sign(curve: &LiftedCurve, t: f64) -> i8 {
    let v = normalized_torsion(curve, t);
    if v.abs() < TORSION_ZERO_TOL {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipDirection {
    PlusToMinus,
    MinusToPlus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorsionChange {
    pub location: f64,
    pub direction: FlipDirection,
}

impl TorsionChange {
    /// Cups sit where the torsion turns from `+` to `-`.
    pub fn is_cup_candidate(&self) -> bool {
        self.direction == FlipDirection::PlusToMinus
    }
}

/// Sign flips of the torsion on a uniform grid over `window`, each refined by
/// bisection to `1e-10`. Zero samples are skipped so a flip is recorded
/// between the last nonzero sign and the next one of opposite sign.
pub fn torsion_sign_changes(
    curve: &LiftedCurve,
    window: (f64, f64),
    grid: usize,
    max_changes: usize,
) -> Result<Vec<TorsionChange>> {
    if !curve.data.smooth {
        return Err(Error::NotSmooth(curve.data.label.clone()));
    }
    if grid < 2 {
        return Err(Error::InvalidParameter("torsion grid needs at least 2 points".into()));
    }
    let (lo, hi) = window;
    let mut changes = Vec::new();
    let mut last: Option<(f64, i8)> = None;
    for k in 0..grid {
        let t = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
        let s = torsion_sign(curve, t);
        if s == 0 {
            continue;
        }
        if let Some((t_prev, s_prev)) = last {
            if s != s_prev {
                let location = refine_flip(curve, t_prev, t, s_prev);
                let direction = if s_prev > 0 {
                    FlipDirection::PlusToMinus
                } else {
                    FlipDirection::MinusToPlus
                };
                changes.push(TorsionChange { location, direction });
                if changes.len() > max_changes {
                    return Err(Error::TooManyChanges { cap: max_changes });
                }
            }
        }
        last = Some((t, s));
    }
    Ok(changes)
}

fn refine_flip(curve: &LiftedCurve, mut a: f64, mut b: f64, sign_a: i8) -> f64 {
    while b - a > 1e-10 {
        let m = 0.5 * (a + b);
        let v = torsion_determinant(curve, m);
        if (v > 0.0) == (sign_a > 0) && v != 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// The general cup equation: the determinant with rows `γ̄'(a)`, `γ̄'(b)`,
/// `γ(b) - γ(a)` where `γ̄'` is the tangent `(g₁', g₂', f̃')`. It vanishes when
/// both tangents and the chord of `γ` are coplanar.
pub fn cup_equation_residual(curve: &LiftedCurve, a: f64, b: f64) -> f64 {
    det3(
        curve.derivative(a, 1),
        curve.derivative(b, 1),
        sub3(curve.point(b), curve.point(a)),
    )
}

/// A chord `[g(a), g(b)]` of `∂Ω₀` with its cup residual and the two chord
/// inequality values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
    pub diff_ineq_a: f64,
    pub diff_ineq_b: f64,
}

impl Chord {
    pub fn admissible(&self, tol: f64) -> bool {
        self.diff_ineq_a <= -tol && self.diff_ineq_b <= -tol
    }
}

fn principal_normal(curve: &LiftedCurve, t: f64) -> Option<Vec3> {
    let d1 = curve.derivative(t, 1);
    let d2 = curve.derivative(t, 2);
    let k = dot3(d2, d1) / dot3(d1, d1);
    let n = [d2[0] - k * d1[0], d2[1] - k * d1[1], d2[2] - k * d1[2]];
    let len = norm3(n);
    (len > 0.0 && len.is_finite()).then(|| [n[0] / len, n[1] / len, n[2] / len])
}

/// Triple products `[γ'(a), γ(b) - γ(a), N(a)]` and `[γ'(b), γ(a) - γ(b), N(b)]`
/// with `N` the unit principal normal of `γ`. A chord is admissible when both
/// are negative. Returns zeros where the normal is undefined.
pub fn chord_differential_inequalities(curve: &LiftedCurve, a: f64, b: f64) -> (f64, f64) {
    let product = |x: f64, y: f64| match principal_normal(curve, x) {
        Some(n) => det3(curve.derivative(x, 1), sub3(curve.point(y), curve.point(x)), n),
        None => 0.0,
    };
    (product(a, b), product(b, a))
}

#[derive(Debug, Clone, Copy)]
pub struct CupOptions {
    /// Predictor step in the `(midpoint, half-length)` plane.
    pub step: f64,
    /// Steps below this size stall the continuation.
    pub min_step: f64,
    pub max_chords: usize,
    pub segment_samples: usize,
}

impl Default for CupOptions {
    fn default() -> Self {
        Self {
            step: 1e-2,
            min_step: 1e-7,
            max_chords: 20_000,
            segment_samples: DEFAULT_SEGMENT_SAMPLES,
        }
    }
}

/// Cup residual divided by `(b - a)⁴`, which removes the trivial zero on the
/// diagonal `a = b`. Written in midpoint/half-length coordinates.
fn reduced_residual(curve: &LiftedCurve, m: f64, d: f64) -> f64 {
    let r = cup_equation_residual(curve, m - d, m + d);
    r / (2.0 * d).powi(4)
}

fn gradient(curve: &LiftedCurve, m: f64, d: f64) -> (f64, f64) {
    let hm = 1e-6 * (1.0 + m.abs());
    let hd = 1e-6 * (1.0 + d.abs()).min(d * 0.5).max(1e-9);
    let rm = (reduced_residual(curve, m + hm, d) - reduced_residual(curve, m - hm, d)) / (2.0 * hm);
    let rd = (reduced_residual(curve, m, d + hd) - reduced_residual(curve, m, d - hd)) / (2.0 * hd);
    (rm, rd)
}

/// Newton corrector on `{ r(m, d) = 0, tangent · (z - z_pred) = 0 }`.
fn correct(curve: &LiftedCurve, pred: (f64, f64), tangent: (f64, f64)) -> Option<(f64, f64)> {
    let (mut m, mut d) = pred;
    for _ in 0..30 {
        let r = reduced_residual(curve, m, d);
        let c = tangent.0 * (m - pred.0) + tangent.1 * (d - pred.1);
        let (rm, rd) = gradient(curve, m, d);
        let det = rm * tangent.1 - rd * tangent.0;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dm = (r * tangent.1 - rd * c) / det;
        let dd = (rm * c - r * tangent.0) / det;
        m -= dm;
        d -= dd;
        if !(m.is_finite() && d.is_finite()) || d <= 0.0 {
            return None;
        }
        if dm.abs().max(dd.abs()) < 1e-14 * (1.0 + m.abs() + d) {
            return Some((m, d));
        }
    }
    let r = reduced_residual(curve, m, d);
    (r.abs() < 1e-9).then_some((m, d))
}

/// Continues the family of cup chords born at a `+ → -` torsion flip.
///
/// The cup equation is tracked in midpoint/half-length coordinates
/// `(m, d)`, chord `[m - d, m + d]`, by pseudo-arclength predictor–corrector
/// steps starting at `(origin, step)`. Continuation stops when a chord end
/// leaves `search_window`, the family turns back to `d = 0`, or the next
/// chord leaves `Ω` (the last admissible chord is then located by step
/// bisection). An origin that is not a `+ → -` flip yields no chords.
pub fn solve_cup_chords(
    domain: &Domain,
    curve: &LiftedCurve,
    origin: f64,
    search_window: (f64, f64),
    opts: &CupOptions,
) -> Result<Vec<Chord>> {
    if !curve.data.smooth {
        return Err(Error::NotSmooth(curve.data.label.clone()));
    }
    let probe = 1e-4 * (1.0 + origin.abs());
    if torsion_sign(curve, origin - probe) != 1 || torsion_sign(curve, origin + probe) != -1 {
        return Ok(Vec::new());
    }
    let (lo, hi) = search_window;
    let in_window = |m: f64, d: f64| m - d >= lo && m + d <= hi;
    let g = &domain.outer.curve;
    let chord_in_domain =
        |m: f64, d: f64| domain.segment_in_domain(g.eval(m - d), g.eval(m + d), opts.segment_samples);
    let make_chord = |m: f64, d: f64| {
        let (a, b) = (m - d, m + d);
        let (ia, ib) = chord_differential_inequalities(curve, a, b);
        Chord {
            a,
            b,
            residual: cup_equation_residual(curve, a, b),
            diff_ineq_a: ia,
            diff_ineq_b: ib,
        }
    };

    // First point: solve r(m, d0) = 0 for m at fixed d0.
    let d0 = opts.step;
    let mut m = origin;
    for _ in 0..50 {
        let r = reduced_residual(curve, m, d0);
        let (rm, _) = gradient(curve, m, d0);
        if r == 0.0 || rm == 0.0 || !rm.is_finite() {
            break;
        }
        let dm = r / rm;
        m -= dm;
        if dm.abs() < 1e-13 * (1.0 + m.abs()) {
            break;
        }
    }
    let found = reduced_residual(curve, m, d0).abs() < 1e-9;
    if !found || !in_window(m, d0) {
        return Err(Error::ContinuationStall { a: origin - d0, b: origin + d0 });
    }
    if !chord_in_domain(m, d0) {
        return Err(Error::ChordExitsDomain { a: m - d0, b: m + d0 });
    }
    let mut chords = vec![make_chord(m, d0)];
    let mut z = (m, d0);
    let mut tangent = {
        let (rm, rd) = gradient(curve, z.0, z.1);
        orient((-rd, rm), (0.0, 1.0))
    };
    let mut h = opts.step;
    while chords.len() < opts.max_chords {
        let pred = (z.0 + h * tangent.0, z.1 + h * tangent.1);
        let next = match correct(curve, pred, tangent) {
            Some(p) => p,
            None => {
                h *= 0.5;
                if h < opts.min_step {
                    return Err(Error::ContinuationStall { a: z.0 - z.1, b: z.0 + z.1 });
                }
                continue;
            }
        };
        if next.1 <= 0.0 || !in_window(next.0, next.1) {
            break;
        }
        if !chord_in_domain(next.0, next.1) {
            if h > opts.min_step {
                h *= 0.5;
                continue;
            }
            break;
        }
        let (rm, rd) = gradient(curve, next.0, next.1);
        tangent = orient((-rd, rm), tangent);
        z = next;
        chords.push(make_chord(z.0, z.1));
        h = (2.0 * h).min(opts.step);
    }
    Ok(chords)
}

fn orient(v: (f64, f64), reference: (f64, f64)) -> (f64, f64) {
    let n = v.0.hypot(v.1);
    let u = (v.0 / n, v.1 / n);
    if u.0 * reference.0 + u.1 * reference.1 < 0.0 {
        (-u.0, -u.1)
    } else {
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{bmo_domain, FSpec};

    fn strip(f: FSpec) -> (Domain, LiftedCurve) {
        let d = bmo_domain(1.0).unwrap();
        let data = f.build(d.outer.curve.range()).unwrap();
        let c = LiftedCurve::new(d.outer.curve.clone(), data);
        (d, c)
    }

    #[test]
    fn quartic_torsion_signs() {
        let (_, c) = strip(FSpec::Power { p: 4.0, sign: 1.0 });
        assert_eq!(torsion_sign(&c, 1.0), 1);
        assert!((torsion_determinant(&c, 1.0) - 48.0).abs() < 1e-12);
        let (_, c) = strip(FSpec::Power { p: 4.0, sign: -1.0 });
        assert_eq!(torsion_sign(&c, 1.0), -1);
    }

    #[test]
    fn affine_data_has_no_torsion() {
        let (_, c) = strip(FSpec::Affine { slope: 2.0, intercept: -1.0 });
        for k in -10..=10 {
            assert_eq!(torsion_sign(&c, k as f64 * 0.3), 0);
        }
    }

    #[test]
    fn sign_changes_of_negative_quartic() {
        let (_, c) = strip(FSpec::Power { p: 4.0, sign: -1.0 });
        let ch = torsion_sign_changes(&c, (-2.0, 2.0), 101, DEFAULT_MAX_CHANGES).unwrap();
        assert_eq!(ch.len(), 1);
        assert!(ch[0].location.abs() < 1e-9);
        assert!(ch[0].is_cup_candidate());
    }

    #[test]
    fn square_has_no_sign_changes() {
        let (_, c) = strip(FSpec::Power { p: 2.0, sign: 1.0 });
        assert!(torsion_sign_changes(&c, (-3.0, 3.0), 200, 8).unwrap().is_empty());
    }

    #[test]
    fn sine_has_four_alternating_changes() {
        use std::f64::consts::PI;
        let (_, c) = strip(FSpec::Sin);
        let ch = torsion_sign_changes(&c, (-7.0, 7.0), 400, 16).unwrap();
        let expected = [-1.5 * PI, -0.5 * PI, 0.5 * PI, 1.5 * PI];
        assert_eq!(ch.len(), 4);
        for (c, e) in ch.iter().zip(expected) {
            assert!((c.location - e).abs() < 1e-9, "{} vs {e}", c.location);
        }
        let dirs: Vec<_> = ch.iter().map(|c| c.direction).collect();
        assert_eq!(
            dirs,
            vec![
                FlipDirection::MinusToPlus,
                FlipDirection::PlusToMinus,
                FlipDirection::MinusToPlus,
                FlipDirection::PlusToMinus
            ]
        );
    }

    #[test]
    fn too_many_changes_is_an_error() {
        let (_, c) = strip(FSpec::Sin);
        let err = torsion_sign_changes(&c, (-40.0, 40.0), 4000, 5).unwrap_err();
        assert_eq!(err, Error::TooManyChanges { cap: 5 });
    }

    #[test]
    fn indicator_refused_by_torsion() {
        let (_, c) = strip(FSpec::Indicator { a: 1.0 });
        assert!(matches!(
            torsion_sign_changes(&c, (-2.0, 2.0), 10, 4),
            Err(Error::NotSmooth(_))
        ));
    }

    #[test]
    fn parabolic_residual_reduces_to_midpoint_rule() {
        let (_, c) = strip(FSpec::Sin);
        for (a, b) in [(-1.0f64, 0.5f64), (0.2, 2.0), (-3.0, -0.1)] {
            let mid = (b.sin() - f64::sin(a)) / (b - a) - (f64::cos(a) + b.cos()) / 2.0;
            let r = cup_equation_residual(&c, a, b);
            assert!((r - 2.0 * (b - a) * (b - a) * mid).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn symmetric_chords_solve_negative_quartic() {
        let (_, c) = strip(FSpec::Power { p: 4.0, sign: -1.0 });
        for b in [0.1, 0.7, 1.9] {
            assert!(cup_equation_residual(&c, -b, b).abs() < 1e-12);
        }
        assert!(cup_equation_residual(&c, 0.3, 0.3 + 1e-9).abs() < 1e-12);
    }

    #[test]
    fn residual_swap_symmetry() {
        let (_, c) = strip(FSpec::Exp { lambda: 0.7 });
        for (a, b) in [(-1.0, 0.4), (0.3, 1.1)] {
            let r1 = cup_equation_residual(&c, a, b);
            let r2 = cup_equation_residual(&c, b, a);
            assert!((r1.abs() - r2.abs()).abs() < 1e-12 * (1.0 + r1.abs()));
        }
    }

    #[test]
    fn quartic_cup_chords_stop_at_grazing() {
        let (d, c) = strip(FSpec::Power { p: 4.0, sign: -1.0 });
        let chords = solve_cup_chords(&d, &c, 0.0, (-3.0, 3.0), &CupOptions::default()).unwrap();
        assert!(chords.len() > 50);
        for ch in &chords {
            assert!((ch.a + ch.b).abs() < 1e-9, "{ch:?}");
            assert!(ch.residual.abs() <= 1e-8);
        }
        let b_max = chords.last().unwrap().b;
        assert!((b_max - 1.0).abs() < 1e-3, "b_max = {b_max}");
    }

    #[test]
    fn wrong_direction_origin_gives_no_chords() {
        let (d, c) = strip(FSpec::Power { p: 4.0, sign: 1.0 });
        let chords = solve_cup_chords(&d, &c, 0.0, (-3.0, 3.0), &CupOptions::default()).unwrap();
        assert!(chords.is_empty());
    }

    #[test]
    fn sine_cup_family() {
        use std::f64::consts::FRAC_PI_2;
        let (d, c) = strip(FSpec::Sin);
        let chords =
            solve_cup_chords(&d, &c, -FRAC_PI_2, (-FRAC_PI_2 - 0.8, -FRAC_PI_2 + 0.8), &CupOptions::default())
                .unwrap();
        assert!(!chords.is_empty());
        assert!(chords.iter().all(|c| c.residual.abs() < 1e-8));
        let g = &d.outer.curve;
        assert!(chords
            .iter()
            .all(|c| d.segment_in_domain(g.eval(c.a), g.eval(c.b), DEFAULT_SEGMENT_SAMPLES)));
    }

    #[test]
    fn chord_inequalities_signs() {
        let (_, c) = strip(FSpec::Power { p: 4.0, sign: -1.0 });
        let (ia, ib) = chord_differential_inequalities(&c, -0.5, 0.5);
        assert!(ia < 0.0 && ib < 0.0, "{ia} {ib}");
        let (_, c) = strip(FSpec::Power { p: 4.0, sign: 1.0 });
        let (ia, ib) = chord_differential_inequalities(&c, -0.5, 0.5);
        assert!(ia > 0.0 && ib > 0.0);
        let (_, c) = strip(FSpec::Affine { slope: 1.0, intercept: 0.0 });
        let (ia, ib) = chord_differential_inequalities(&c, -0.5, 0.5);
        assert!(ia.abs() < 1e-12 && ib.abs() < 1e-12);
    }

    #[test]
    fn rotation_preserves_torsion_and_cups() {
        let (d, c) = strip(FSpec::Sin);
        let rotated = LiftedCurve::new(
            d.rigid_motion(0.7, crate::geometry::Point::new(1.0, -2.0)).outer.curve,
            c.data.clone(),
        );
        for k in -20..=20 {
            let t = k as f64 * 0.33;
            assert_eq!(torsion_sign(&c, t), torsion_sign(&rotated, t));
            let r1 = cup_equation_residual(&c, t, t + 0.8);
            let r2 = cup_equation_residual(&rotated, t, t + 0.8);
            assert!((r1 - r2).abs() < 1e-10 * (1.0 + r1.abs()));
        }
    }
}
