mod common;

use std::sync::Arc;

use annular_bellman::concavify::{
    build_mesh, local_concavity_violation, minimal_concave_majorant, MajorantOptions, MeshOptions, NodeKind,
    SweepMode, Window,
};
use annular_bellman::presets::{bmo_domain, FSpec};
use annular_bellman::Point;

fn data(d: &annular_bellman::Domain, f: &str) -> annular_bellman::BoundaryData {
    f.parse::<FSpec>().unwrap().build(d.outer.curve.range()).unwrap()
}

#[test]
fn sweep_matches_all_pairs_oracle() {
    let d = bmo_domain(1.0).unwrap();
    let w = Window::new((-1.0, 1.0), (0.0, 2.0)).unwrap();
    let mesh = Arc::new(build_mesh(&d, w, &MeshOptions::new(0.1)).unwrap());
    for f in ["exp", "power p=4 sign=-1", "sin"] {
        let data = data(&d, f);
        let opts = MajorantOptions { tolerance: 0.0, max_iters: 200_000, ..Default::default() };
        let sweep = minimal_concave_majorant(mesh.clone(), &data, &opts).unwrap();
        assert!(sweep.converged, "{f}");
        let (oracle, done) = common::all_pairs_oracle(&mesh, &data, 200_000);
        assert!(done, "{f}");
        for (a, b) in sweep.field.values.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{f}: {a} vs {b}");
        }
    }
}

#[test]
fn field_equals_data_on_boundary_nodes() {
    let d = bmo_domain(0.5).unwrap();
    let data = data(&d, "exp");
    let w = Window::around_domain(&d, (-1.0, 1.0)).unwrap();
    let mesh = Arc::new(build_mesh(&d, w, &MeshOptions::new(0.05)).unwrap());
    let r = minimal_concave_majorant(mesh.clone(), &data, &MajorantOptions::default()).unwrap();
    for (n, kind) in mesh.kinds.iter().enumerate() {
        if let NodeKind::Data { param } = kind {
            assert_eq!(r.field.values[n], data.value(*param));
        }
    }
    assert!(local_concavity_violation(&r.field) <= 1e-10);
}

#[test]
fn refinement_raises_the_field_on_shared_nodes() {
    let d = bmo_domain(0.5).unwrap();
    let data = data(&d, "exp");
    let w = Window::new((-1.0, 1.0), (0.0, 1.25)).unwrap();
    let solve = |h: f64| {
        let mesh = Arc::new(build_mesh(&d, w, &MeshOptions::new(h)).unwrap());
        minimal_concave_majorant(mesh, &data, &MajorantOptions::default()).unwrap().field
    };
    let (coarse, fine) = (solve(0.1), solve(0.05));
    let mut shared = 0;
    for (n, kind) in coarse.mesh.kinds.iter().enumerate() {
        if let NodeKind::Interior { i, j } = *kind {
            let m = fine.mesh.lattice_node(2 * i, 2 * j).expect("nested lattice");
            assert!(fine.values[m] >= coarse.values[n] - 1e-9, "({i}, {j})");
            shared += 1;
        }
    }
    assert!(shared > 50);
}

#[test]
fn jacobi_output_is_reproducible() {
    let d = bmo_domain(0.5).unwrap();
    let data = data(&d, "sin");
    let w = Window::around_domain(&d, (-1.0, 1.0)).unwrap();
    let mesh = Arc::new(build_mesh(&d, w, &MeshOptions::new(0.1)).unwrap());
    let opts = MajorantOptions { mode: SweepMode::Jacobi, ..Default::default() };
    let a = minimal_concave_majorant(mesh.clone(), &data, &opts).unwrap();
    let b = minimal_concave_majorant(mesh, &data, &opts).unwrap();
    assert_eq!(a.field.values, b.field.values);
    assert_eq!(a.history, b.history);
}

#[test]
fn interpolation_recovers_affine_fields() {
    let d = bmo_domain(1.0).unwrap();
    let w = Window::around_domain(&d, (-1.0, 1.0)).unwrap();
    let mesh = Arc::new(build_mesh(&d, w, &MeshOptions::new(0.1)).unwrap());
    let data = data(&d, "power p=2");
    let r = minimal_concave_majorant(mesh, &data, &MajorantOptions::default()).unwrap();
    for p in [Point::new(0.03, 0.5), Point::new(-0.41, 0.77), Point::new(0.66, 1.2), Point::new(0.97, 0.9415), Point::new(-0.974, 0.95)] {
        let v = r.field.value_at(p).unwrap();
        assert!((v.value - p.y).abs() < 1e-9, "{p:?} {v:?}");
    }
}
