#![allow(dead_code)]

use annular_bellman::concavify::{chord_floors, Mesh};
use annular_bellman::BoundaryData;

/// Brute-force fixed point over the same constraint set as the sweep: data
/// nodes fixed, node chords as floors, and for every node pair on a common
/// line every node between them at least the linear interpolant.
pub fn all_pairs_oracle(mesh: &Mesh, data: &BoundaryData, max_rounds: usize) -> (Vec<f64>, bool) {
    let floors = chord_floors(mesh, data);
    let base = (0..mesh.len())
        .filter(|&n| mesh.is_data(n))
        .map(|n| floors[n])
        .fold(f64::INFINITY, f64::min);
    let mut v: Vec<f64> = floors.iter().map(|&f| f.max(base)).collect();
    for _ in 0..max_rounds {
        let mut changed = false;
        for line in &mesh.lines {
            let (ns, xs) = (&line.nodes, &line.positions);
            for i in 0..ns.len() {
                for j in i + 2..ns.len() {
                    for k in i + 1..j {
                        if mesh.is_data(ns[k]) {
                            continue;
                        }
                        let lambda = (xs[k] - xs[i]) / (xs[j] - xs[i]);
                        let interp = (1.0 - lambda) * v[ns[i]] + lambda * v[ns[j]];
                        if interp > v[ns[k]] {
                            v[ns[k]] = interp;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return (v, true);
        }
    }
    (v, false)
}
