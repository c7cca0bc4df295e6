//! Adaptive Gauss–Kronrod quadrature and an embedded Runge–Kutta integrator.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// 15-point Kronrod rule with the embedded 7-point Gauss error estimate.
fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x)? + f(c + x)?;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the total
/// estimate drops below `max(abs_tol, rel_tol·|I|)`. An exhausted interval
/// budget is reported as [`Error::QuadratureFailure`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&mut f, lo, hi)?;
    let mut pieces = vec![(lo, hi, v, e)];
    loop {
        let value: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::QuadratureFailure {
                at: lo,
                reason: "non-finite integrand".into(),
            });
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult {
                value: sign * value,
                error,
            });
        }
        if pieces.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure {
                at: lo,
                reason: format!("interval budget exhausted (error {error:.3e})"),
            });
        }
        let (k, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (l, r, _, _) = pieces.swap_remove(k);
        let m = 0.5 * (l + r);
        let (v1, e1) = gk15(&mut f, l, m)?;
        let (v2, e2) = gk15(&mut f, m, r)?;
        pieces.push((l, m, v1, e1));
        pieces.push((m, r, v2, e2));
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-9,
            min_step: 1e-10,
            max_steps: 200_000,
        }
    }
}

/// Failure of [`integrate_scalar_ode`] at a given abscissa.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    /// The right-hand side failed.
    Rhs(Error),
    /// Step size collapsed below the minimum.
    StepCollapse(f64),
}

/// Dormand–Prince 5(4) integration of the scalar ODE `y' = rhs(x, y)` from
/// `x0` through the increasing (or decreasing) abscissae `stops`, recording
/// `y` at each stop.
pub fn integrate_scalar_ode<F>(
    mut rhs: F,
    x0: f64,
    y0: f64,
    stops: &[f64],
    opts: OdeOptions,
) -> std::result::Result<Vec<f64>, OdeError>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut out = Vec::with_capacity(stops.len());
    let mut x = x0;
    let mut y = y0;
    let mut h_abs = 1e-2;
    let mut steps = 0usize;
    for &stop in stops {
        let dir = if stop >= x { 1.0 } else { -1.0 };
        while (stop - x) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(OdeError::StepCollapse(x));
            }
            let remaining = (stop - x).abs();
            let last = h_abs >= remaining;
            let h = dir * h_abs.min(remaining);
            let mut k = [0.0f64; 7];
            k[0] = rhs(x, y).map_err(OdeError::Rhs)?;
            for s in 0..6 {
                let mut yi = y;
                for j in 0..=s {
                    yi += h * A[s][j] * k[j];
                }
                k[s + 1] = rhs(x + C[s] * h, yi).map_err(OdeError::Rhs)?;
            }
            let y5: f64 = y + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
            let y4: f64 = y + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
            let err = (y5 - y4).abs();
            let scale = opts.abs_tol + opts.rel_tol * y.abs().max(y5.abs());
            let ratio = err / scale;
            if ratio <= 1.0 && y5.is_finite() {
                x = if last { stop } else { x + h };
                y = y5;
                let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).min(5.0) };
                if !last {
                    h_abs = h.abs() * grow;
                } else {
                    h_abs = h_abs.max(h.abs() * grow);
                }
            } else {
                let shrink = if ratio.is_finite() { (0.9 * ratio.powf(-0.25)).max(0.1) } else { 0.1 };
                h_abs = h.abs() * shrink;
                if h_abs < opts.min_step {
                    return Err(OdeError::StepCollapse(x));
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| Ok(x.powi(5) - 3.0 * x), -1.0, 2.0, QuadOptions::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - 1.5 * (4.0 - 1.0);
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| Ok(x.sin());
        let a = integrate(f, 0.0, 3.0, QuadOptions::default()).unwrap().value;
        let b = integrate(f, 3.0, 0.0, QuadOptions::default()).unwrap().value;
        assert!((a + b).abs() < 1e-14);
        assert!((a - (1.0 - 3f64.cos())).abs() < 1e-9);
    }

    #[test]
    fn peaked_integrand_adapts() {
        let f = |x: f64| Ok(1.0 / (1e-4 + x * x));
        let r = integrate(f, -1.0, 1.0, QuadOptions::default()).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((r.value - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn ode_matches_exponential() {
        let ys = integrate_scalar_ode(|_, y| Ok(-2.0 * y + 1.0), 0.0, 0.0, &[0.5, 1.0, 3.0], OdeOptions::default())
            .unwrap();
        for (y, x) in ys.iter().zip([0.5, 1.0, 3.0]) {
            let exact = 0.5 * (1.0 - (-2.0 * x as f64).exp());
            assert!((y - exact).abs() < 1e-9, "{y} vs {exact}");
        }
    }

    #[test]
    fn ode_backward() {
        let ys = integrate_scalar_ode(|x, _| Ok(x.cos()), 2.0, 0.0, &[0.0], OdeOptions::default()).unwrap();
        assert!((ys[0] - (0f64.sin() - 2f64.sin())).abs() < 1e-9);
    }
}
