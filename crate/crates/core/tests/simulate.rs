use std::sync::Arc;

use annular_bellman::concavify::{build_mesh, minimal_concave_majorant, MajorantOptions, MeshOptions, Window};
use annular_bellman::presets::{FSpec, Preset};
use annular_bellman::simulate::{
    grow_split_tree, lower_bound, membership_check, tree_to_step_function, GrowOptions, LowerBoundOptions,
    SplitPolicy, TreeNodeKind,
};
use annular_bellman::{Domain, LiftedCurve, Point};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(preset: &Preset, f: &str) -> (Domain, LiftedCurve) {
    let d = preset.build().unwrap();
    let data = f.parse::<FSpec>().unwrap().build(d.outer.curve.range()).unwrap();
    (d.clone(), LiftedCurve::new(d.outer.curve.clone(), data))
}

/// A point a fraction `v` of the way across the BMO strip above `x1 = u`.
fn bmo_point(eps: f64, u: f64, v: f64) -> Point {
    Point::new(u, u * u + v * eps * eps)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trees_reproduce_their_node_points(u in -1.5..1.5f64, v in 0.05..0.95f64, seed in 0u64..1000, policy in 0usize..3, shrink in 0.0..0.9f64) {
        let (d, _) = setup(&Preset::Bmo { epsilon: 0.5 }, "exp");
        let x = bmo_point(0.5, u, v);
        let policy = [SplitPolicy::TangentBiased { jitter: 0.1 }, SplitPolicy::Random, SplitPolicy::AxisAligned][policy];
        let opts = GrowOptions { policy, shrink, ..GrowOptions::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Ok(tree) = grow_split_tree(&d, x, &opts, &mut rng) {
            prop_assert!(tree.root().dist(x) < 1e-10);
            for node in &tree.nodes {
                if let TreeNodeKind::Split { lambda, minus, plus, .. } = node.kind {
                    let p = tree.nodes[minus].point.lerp(tree.nodes[plus].point, lambda);
                    prop_assert!(p.dist(node.point) <= 1e-12 * (1.0 + p.norm()));
                } else {
                    prop_assert!(d.on_outer_boundary(node.point));
                }
            }
            let phi = tree_to_step_function(&d, &tree);
            prop_assert!(phi.whole_average().dist(x) < 1e-10);
        }
    }

    #[test]
    fn lower_bounds_are_sound(u in -1.5..1.5f64, v in 0.05..0.95f64, seed in 0u64..1000) {
        let (d, c) = setup(&Preset::Bmo { epsilon: 0.5 }, "sin");
        let x = bmo_point(0.5, u, v);
        let opts = LowerBoundOptions { budget: 80, seed, ..Default::default() };
        let lb = lower_bound(&d, &c, x, &opts).unwrap();
        prop_assert!(membership_check(&d, &lb.phi, opts.window_grid).ok);
        prop_assert!(lb.phi.whole_average().dist(x) <= 1e-10);
        prop_assert_eq!(lb.value, lb.phi.weighted_mean(|t| c.data.value(t)));
    }
}

#[test]
fn budget_is_monotone() {
    let (d, c) = setup(&Preset::Ap { p1: 1.0, p2: -1.0, q: 2.0 }, "power p=2");
    let x = Point::new(1.0, 1.5);
    let mut last = f64::NEG_INFINITY;
    for budget in [1, 10, 65, 100, 300] {
        let opts = LowerBoundOptions { budget, seed: 7, ..Default::default() };
        let v = lower_bound(&d, &c, x, &opts).unwrap().value;
        assert!(v >= last, "budget {budget}: {v} < {last}");
        last = v;
    }
}

#[test]
fn sandwich_across_presets() {
    let cases = [
        (Preset::Bmo { epsilon: 0.5 }, "exp", vec![Point::new(0.0, 0.1), Point::new(0.7, 0.6), Point::new(-1.0, 1.2)]),
        (Preset::Bmo { epsilon: 1.0 }, "sin", vec![Point::new(0.0, 0.5), Point::new(1.0, 1.9)]),
        (Preset::Ap { p1: 1.0, p2: -1.0, q: 2.0 }, "power p=2", vec![Point::new(1.0, 1.5), Point::new(0.8, 2.0)]),
        (Preset::ReverseJensen { profile: "exp".into(), q: 2.0 }, "sin", vec![Point::new(0.0, 1.5), Point::new(-0.5, 1.0)]),
    ];
    for (preset, f, points) in cases {
        let (d, c) = setup(&preset, f);
        let w = Window::around_domain(&d, preset.default_window()).unwrap();
        let mesh = Arc::new(build_mesh(&d, w, &MeshOptions::new(0.05)).unwrap());
        let field = minimal_concave_majorant(mesh, &c.data, &MajorantOptions::default()).unwrap().field;
        for x in points {
            assert!(d.contains(x), "{preset:?} {x:?}");
            let up = field.value_at(x).unwrap();
            let lb = lower_bound(&d, &c, x, &LowerBoundOptions { budget: 300, ..Default::default() }).unwrap();
            assert!(lb.value <= up.value + up.error + 1e-9, "{preset:?} {f} {x:?}: {} > {:?}", lb.value, up);
        }
    }
}
