//! Admissible step functions, split trees and certified lower bounds.

mod step;
mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use step::{membership_check, scan_points, Membership, StepFunction};
pub use tree::{
    chord_tree, grow_split_tree, tree_to_step_function, GrowOptions, SplitPolicy, SplitTree, TreeNode,
    TreeNodeKind, BOUNDARY_BAND,
};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::lace::LiftedCurve;

#[derive(Debug, Clone, Copy)]
pub struct LowerBoundOptions {
    /// Number of candidates tried; candidate `k` is the same for every budget.
    pub budget: usize,
    /// Uniform scan grid used by the membership check.
    pub window_grid: usize,
    /// Single-chord candidates (one per direction) tried first.
    pub chord_directions: usize,
    pub seed: u64,
    pub depth: usize,
}

impl Default for LowerBoundOptions {
    fn default() -> Self {
        Self {
            budget: 1000,
            window_grid: 64,
            chord_directions: 64,
            seed: 0,
            depth: 48,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    pub phi: StepFunction,
    /// Index of the winning candidate.
    pub candidate: usize,
    pub membership: Membership,
}

/// Root average must reproduce `x` to this accuracy.
pub const AVERAGE_TOL: f64 = 1e-10;

fn candidate_tree(domain: &Domain, x: Point, k: usize, opts: &LowerBoundOptions) -> Result<SplitTree> {
    if k < opts.chord_directions {
        let ang = std::f64::consts::PI * k as f64 / opts.chord_directions as f64;
        return chord_tree(domain, x, Point::new(ang.cos(), ang.sin()));
    }
    let j = k - opts.chord_directions;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let policy = match j % 4 {
        0 | 1 => SplitPolicy::TangentBiased { jitter: 0.0 },
        2 => SplitPolicy::TangentBiased { jitter: 0.2 },
        _ => SplitPolicy::Random,
    };
    let shrink = [0.0, 0.3, 0.6, 0.9][(j / 4) % 4];
    let grow = GrowOptions { policy, depth: opts.depth, shrink, ..GrowOptions::default() };
    grow_split_tree(domain, x, &grow, &mut rng)
}

/// Best membership-verified witness among `budget` candidates: the value is
/// `⟨f̃(φ)⟩` for a step function `φ` with `⟨φ⟩ = x` whose averages over all
/// scanned subintervals avoid `Ω₁`.
pub fn lower_bound(domain: &Domain, curve: &LiftedCurve, x: Point, opts: &LowerBoundOptions) -> Result<LowerBound> {
    if !domain.contains(x) {
        return Err(Error::InvalidParameter(format!("({}, {}) is not in the domain", x.x, x.y)));
    }
    let best = (0..opts.budget.max(1))
        .into_par_iter()
        .filter_map(|k| {
            let tree = candidate_tree(domain, x, k, opts).ok()?;
            let phi = tree_to_step_function(domain, &tree);
            if phi.whole_average().dist(x) > AVERAGE_TOL * (1.0 + x.norm()) {
                return None;
            }
            let membership = membership_check(domain, &phi, opts.window_grid);
            if !membership.ok {
                return None;
            }
            let value = phi.weighted_mean(|t| curve.data.value(t));
            value.is_finite().then_some(LowerBound { value, phi, candidate: k, membership })
        })
        .reduce_with(|a, b| {
            if b.value > a.value || (b.value == a.value && b.candidate < a.candidate) {
                b
            } else {
                a
            }
        });
    best.ok_or(Error::NoCandidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{bmo_domain, FSpec};

    fn setup(eps: f64, f: &str) -> (Domain, LiftedCurve) {
        let d = bmo_domain(eps).unwrap();
        let data = f.parse::<FSpec>().unwrap().build(d.outer.curve.range()).unwrap();
        (d.clone(), LiftedCurve::new(d.outer.curve.clone(), data))
    }

    #[test]
    fn boundary_point_is_single_leaf() {
        let (d, _) = setup(1.0, "exp");
        let x = d.outer.curve.eval(0.7);
        let t = chord_tree(&d, x, Point::new(1.0, 0.0)).unwrap();
        assert_eq!(t.nodes.len(), 1);
        let phi = tree_to_step_function(&d, &t);
        assert_eq!(phi.pieces(), 1);
        assert!((phi.params()[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn horizontal_split_of_unit_point() {
        let (d, _) = setup(1.0, "power p=2");
        let t = chord_tree(&d, Point::new(0.0, 1.0), Point::new(1.0, 0.0)).unwrap();
        assert_eq!(t.leaves(), 2);
        let TreeNodeKind::Split { lambda, .. } = t.nodes[0].kind else { panic!() };
        assert!((lambda - 0.5).abs() < 1e-12);
        let phi = tree_to_step_function(&d, &t);
        assert!((phi.breakpoints()[1] - 0.5).abs() < 1e-12);
        let mut ps = phi.params().to_vec();
        ps.sort_by(f64::total_cmp);
        assert!((ps[0] + 1.0).abs() < 1e-12 && (ps[1] - 1.0).abs() < 1e-12);
        assert!(phi.whole_average().dist(Point::new(0.0, 1.0)) < 1e-12);
    }

    #[test]
    fn zero_depth_refuses_interior_points() {
        let (d, _) = setup(1.0, "exp");
        let opts = GrowOptions { depth: 0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = grow_split_tree(&d, Point::new(0.0, 0.5), &opts, &mut rng).unwrap_err();
        assert!(matches!(err, Error::StuckPoint { .. }));
    }

    #[test]
    fn grown_trees_are_consistent() {
        let (d, _) = setup(0.5, "exp");
        let x = Point::new(0.2, 0.15);
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let opts = GrowOptions { shrink: 0.6, ..Default::default() };
            let Ok(t) = grow_split_tree(&d, x, &opts, &mut rng) else { continue };
            assert!(t.combination_error() < 1e-12);
            assert!(t.root().dist(x) < 1e-10);
            let phi = tree_to_step_function(&d, &t);
            assert!(phi.pieces() <= t.leaves());
            assert!(phi.whole_average().dist(x) < 1e-10);
            for n in &t.nodes {
                if let TreeNodeKind::Split { minus, plus, .. } = n.kind {
                    let (a, b) = (t.nodes[minus].point, t.nodes[plus].point);
                    assert!(d.segment_in_domain(a, b, 63), "{a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn lower_bound_examples() {
        let (d, c) = setup(1.0, "power p=2");
        let lb = lower_bound(&d, &c, Point::new(0.0, 1.0), &LowerBoundOptions::default()).unwrap();
        assert!((lb.value - 1.0).abs() < 1e-9);
        let x = d.outer.curve.eval(0.4);
        let lb = lower_bound(&d, &c, x, &LowerBoundOptions::default()).unwrap();
        assert!((lb.value - 0.16).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_is_sound_and_monotone() {
        let (d, c) = setup(0.5, "exp");
        let x = Point::new(0.0, 0.2);
        let mut last = f64::NEG_INFINITY;
        for budget in [70, 200, 600] {
            let opts = LowerBoundOptions { budget, ..Default::default() };
            let lb = lower_bound(&d, &c, x, &opts).unwrap();
            assert!(lb.value >= last);
            last = lb.value;
            assert!(membership_check(&d, &lb.phi, opts.window_grid).ok);
            assert!(lb.phi.whole_average().dist(x) < 1e-10);
            let r = (0.25f64 - 0.2).sqrt();
            let exact = (1.0 - r) / 0.5 * (r - 0.5f64).exp();
            assert!(lb.value <= exact + 1e-9, "{} > {exact}", lb.value);
        }
    }
}
