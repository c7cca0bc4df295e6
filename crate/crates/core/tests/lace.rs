use std::sync::Arc;

use annular_bellman::lace::{
    cup_equation_residual, normalized_torsion, solve_cup_chords, torsion_sign, CupOptions, TORSION_ZERO_TOL,
};
use annular_bellman::presets::{bmo_domain, FSpec};
use annular_bellman::{BoundaryData, LiftedCurve};
use proptest::prelude::*;

/// `c0 + c1 t + ... + c4 t⁴` with exact derivatives.
fn quartic(c: [f64; 5]) -> BoundaryData {
    let f = move |t: f64| c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
    let f1 = move |t: f64| c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * 4.0 * c[4]));
    let f2 = move |t: f64| 2.0 * c[2] + t * (6.0 * c[3] + t * 12.0 * c[4]);
    let f3 = move |t: f64| 6.0 * c[3] + 24.0 * c[4] * t;
    BoundaryData::new("quartic", Arc::new(f), Arc::new(f1), Arc::new(f2), Arc::new(f3), true, None)
}

fn strip_curve(data: BoundaryData) -> LiftedCurve {
    LiftedCurve::new(bmo_domain(1.0).unwrap().outer.curve, data)
}

proptest! {
    #[test]
    fn torsion_sign_is_sign_of_third_derivative(
        c in prop::array::uniform5(-3.0..3.0f64),
        t in -3.0..3.0f64,
    ) {
        let data = quartic(c);
        let f3 = data.d3(t);
        let curve = strip_curve(data);
        if normalized_torsion(&curve, t).abs() > TORSION_ZERO_TOL {
            prop_assert_eq!(torsion_sign(&curve, t) as f64, f3.signum());
        }
    }

    #[test]
    fn residual_magnitude_symmetric(c in prop::array::uniform5(-3.0..3.0f64), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let curve = strip_curve(quartic(c));
        let (x, y) = (cup_equation_residual(&curve, a, b), cup_equation_residual(&curve, b, a));
        prop_assert!((x.abs() - y.abs()).abs() <= 1e-12 * (1.0 + x.abs()));
    }
}

#[test]
fn returned_chords_solve_the_cup_equation_inside_the_domain() {
    for (f, origin, window) in [
        ("power p=4 sign=-1", 0.0, (-3.0, 3.0)),
        ("sin", -std::f64::consts::FRAC_PI_2, (-7.0, 7.0)),
    ] {
        let d = bmo_domain(1.0).unwrap();
        let data = f.parse::<FSpec>().unwrap().build(d.outer.curve.range()).unwrap();
        let curve = LiftedCurve::new(d.outer.curve.clone(), data);
        let chords = solve_cup_chords(&d, &curve, origin, window, &CupOptions::default()).unwrap();
        assert!(!chords.is_empty(), "{f}");
        for c in &chords {
            assert!(c.residual.abs() <= 1e-8, "{f} {c:?}");
            let (p, q) = (d.outer.curve.eval(c.a), d.outer.curve.eval(c.b));
            assert!(d.segment_in_domain(p, q, 63), "{f} {c:?}");
        }
    }
}
