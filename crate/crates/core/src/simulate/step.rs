use crate::geometry::{BoundaryCurve, Domain, Point, LEVEL_TOL};

/// A step function on `I = [0, 1]` whose values lie on `∂Ω₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    params: Vec<f64>,
    points: Vec<Point>,
    /// `prefix[k] = ∫_0^{breakpoints[k]} φ`.
    prefix: Vec<Point>,
}

impl StepFunction {
    /// `breakpoints` must start at 0, end at 1 and increase strictly;
    /// `params[k]` is the outer-boundary parameter on piece `k`.
    pub fn new(outer: &BoundaryCurve, breakpoints: Vec<f64>, params: Vec<f64>) -> Self {
        assert_eq!(breakpoints.len(), params.len() + 1, "one parameter per piece");
        assert!(breakpoints[0] == 0.0 && *breakpoints.last().unwrap() == 1.0, "pieces must cover [0, 1]");
        assert!(breakpoints.windows(2).all(|w| w[1] > w[0]), "pieces must have positive length");
        let points: Vec<Point> = params.iter().map(|&t| outer.eval(t)).collect();
        let mut prefix = Vec::with_capacity(breakpoints.len());
        let mut acc = Point::new(0.0, 0.0);
        prefix.push(acc);
        for (k, p) in points.iter().enumerate() {
            acc = acc + *p * (breakpoints[k + 1] - breakpoints[k]);
            prefix.push(acc);
        }
        Self { breakpoints, params, points, prefix }
    }

    pub fn constant(outer: &BoundaryCurve, t: f64) -> Self {
        Self::new(outer, vec![0.0, 1.0], vec![t])
    }

    pub fn pieces(&self) -> usize {
        self.params.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// `(left, right, parameter, point)` per piece.
    pub fn piece_rows(&self) -> impl Iterator<Item = (f64, f64, f64, Point)> + '_ {
        (0..self.pieces()).map(|k| (self.breakpoints[k], self.breakpoints[k + 1], self.params[k], self.points[k]))
    }

    fn integral_to(&self, x: f64) -> Point {
        let k = match self.breakpoints.partition_point(|&b| b <= x) {
            0 => return Point::new(0.0, 0.0),
            k => k - 1,
        };
        if k >= self.pieces() {
            return self.prefix[self.pieces()];
        }
        self.prefix[k] + self.points[k] * (x - self.breakpoints[k])
    }

    /// `⟨φ⟩_{[a, b]}` for `0 ≤ a < b ≤ 1`.
    pub fn average(&self, a: f64, b: f64) -> Point {
        (self.integral_to(b) - self.integral_to(a)) * (1.0 / (b - a))
    }

    pub fn whole_average(&self) -> Point {
        self.prefix[self.pieces()]
    }

    /// Length-weighted mean of `h` over the piece parameters.
    pub fn weighted_mean(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.piece_rows().map(|(l, r, t, _)| (r - l) * h(t)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub ok: bool,
    /// Smallest inner level value over the tested averages; negative values
    /// lie inside `Ω₁`.
    pub worst: f64,
    /// Interval realizing `worst`.
    pub worst_interval: (f64, f64),
}

/// Scan abscissae: the breakpoints merged with a uniform grid of
/// `window_grid + 1` points.
pub fn scan_points(phi: &StepFunction, window_grid: usize) -> Vec<f64> {
    let n = window_grid.max(1);
    let mut xs: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).chain(phi.breakpoints.iter().copied()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Tests `⟨φ⟩_J ∉ Ω₁` for every `J` with both ends among [`scan_points`].
pub fn membership_check(domain: &Domain, phi: &StepFunction, window_grid: usize) -> Membership {
    let xs = scan_points(phi, window_grid);
    let ints: Vec<Point> = xs.iter().map(|&x| phi.integral_to(x)).collect();
    let mut worst = f64::INFINITY;
    let mut worst_interval = (0.0, 1.0);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let avg = (ints[j] - ints[i]) * (1.0 / (xs[j] - xs[i]));
            let m = domain.inner.level(avg);
            if m < worst {
                worst = m;
                worst_interval = (xs[i], xs[j]);
            }
        }
    }
    Membership {
        ok: worst >= -LEVEL_TOL,
        worst,
        worst_interval,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::bmo_domain;

    #[test]
    fn constant_is_member() {
        let d = bmo_domain(1.0).unwrap();
        let phi = StepFunction::constant(&d.outer.curve, 0.3);
        let m = membership_check(&d, &phi, 16);
        assert!(m.ok);
        assert!((m.worst - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_piece_unit_jump_sits_on_inner_boundary() {
        let d = bmo_domain(1.0).unwrap();
        let phi = StepFunction::new(&d.outer.curve, vec![0.0, 0.5, 1.0], vec![-1.0, 1.0]);
        assert_eq!(phi.whole_average(), Point::new(0.0, 1.0));
        let m = membership_check(&d, &phi, 16);
        assert!(m.ok);
        assert_eq!(m.worst, 0.0);
        assert_eq!(m.worst_interval, (0.0, 1.0));
    }

    #[test]
    fn two_piece_double_jump_fails() {
        let d = bmo_domain(1.0).unwrap();
        let phi = StepFunction::new(&d.outer.curve, vec![0.0, 0.5, 1.0], vec![-2.0, 2.0]);
        assert_eq!(phi.whole_average(), Point::new(0.0, 4.0));
        let m = membership_check(&d, &phi, 16);
        assert!(!m.ok);
        assert!((m.worst + 3.0).abs() < 1e-12);
    }

    #[test]
    fn partial_averages() {
        let d = bmo_domain(1.0).unwrap();
        let phi = StepFunction::new(&d.outer.curve, vec![0.0, 0.25, 1.0], vec![2.0, 0.0]);
        let a = phi.average(0.0, 0.5);
        assert!((a.x - 1.0).abs() < 1e-15 && (a.y - 2.0).abs() < 1e-15);
        assert!((phi.weighted_mean(|t| t) - 0.5).abs() < 1e-15);
    }
}
