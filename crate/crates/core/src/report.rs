//! CSV tables and SVG 1.1 figures.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::concavify::{Mesh, NodeKind, ScalarField};
use crate::error::Result;
use crate::force::ForceProfile;
use crate::geometry::{Domain, Point, Tangent};
use crate::lace::Chord;
use crate::simulate::StepFunction;

/// A header row followed by string rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|s| s.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| crate::Error::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

pub fn field_table(field: &ScalarField) -> Table {
    let mut t = Table::new(&["x1", "x2", "value", "pinned_at_ceiling"]);
    for (k, p) in field.mesh.nodes.iter().enumerate() {
        t.push([p.x.to_string(), p.y.to_string(), field.values[k].to_string(), field.pinned[k].to_string()]);
    }
    t
}

pub fn mesh_node_table(mesh: &Mesh) -> Table {
    let mut t = Table::new(&["node", "x1", "x2", "kind", "param"]);
    for (k, (p, kind)) in mesh.nodes.iter().zip(&mesh.kinds).enumerate() {
        let (name, param) = match kind {
            NodeKind::Interior { .. } => ("interior", String::new()),
            NodeKind::Data { param } => ("data", param.to_string()),
        };
        t.push([k.to_string(), p.x.to_string(), p.y.to_string(), name.to_string(), param]);
    }
    t
}

/// Consecutive node pairs along every mesh line.
pub fn mesh_edge_table(mesh: &Mesh) -> Table {
    let mut t = Table::new(&["line", "from", "to"]);
    for (l, line) in mesh.lines.iter().enumerate() {
        for w in line.nodes.windows(2) {
            t.push([l, w[0], w[1]]);
        }
    }
    t
}

pub fn witness_table(domain: &Domain, phi: &StepFunction) -> Table {
    let mut t = Table::new(&["left", "right", "param", "x1", "x2"]);
    let bp = phi.breakpoints();
    for (k, &s) in phi.params().iter().enumerate() {
        let p = domain.outer.curve.eval(s);
        t.push([bp[k], bp[k + 1], s, p.x, p.y]);
    }
    t
}

pub fn chord_table(chords: &[Chord]) -> Table {
    let mut t = Table::new(&["a", "b", "residual", "diff_ineq_a", "diff_ineq_b"]);
    for c in chords {
        t.push([c.a, c.b, c.residual, c.diff_ineq_a, c.diff_ineq_b]);
    }
    t
}

pub fn force_table(profile: &ForceProfile) -> Table {
    let mut t = Table::new(&["t", "value", "converged", "truncation"]);
    for (k, &s) in profile.t_grid.iter().enumerate() {
        t.push([s.to_string(), profile.values[k].to_string(), profile.converged[k].to_string(), profile.truncation.to_string()]);
    }
    t
}

/// Minimal SVG 1.1 canvas over a rectangle of the plane (y up).
#[derive(Debug, Clone)]
pub struct Svg {
    lo: Point,
    hi: Point,
    width: f64,
    height: f64,
    body: String,
}

const MARGIN: f64 = 10.0;

impl Svg {
    pub fn new(lo: Point, hi: Point, width: f64) -> Self {
        let span = Point::new((hi.x - lo.x).max(1e-12), (hi.y - lo.y).max(1e-12));
        let height = (width * span.y / span.x).clamp(50.0, 4.0 * width);
        Self { lo, hi, width, height, body: String::new() }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        let sx = (self.width - 2.0 * MARGIN) / (self.hi.x - self.lo.x).max(1e-12);
        let sy = (self.height - 2.0 * MARGIN) / (self.hi.y - self.lo.y).max(1e-12);
        (MARGIN + (p.x - self.lo.x) * sx, self.height - MARGIN - (p.y - self.lo.y) * sy)
    }

    fn visible(&self, p: Point) -> bool {
        p.is_finite() && p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    /// Polyline split wherever it leaves the canvas.
    pub fn polyline(&mut self, pts: &[Point], stroke: &str, width: f64) {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, body: &mut String| {
            if run.len() > 1 {
                let coords: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    body,
                    r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
                    coords.join(" ")
                );
            }
            run.clear();
        };
        for &p in pts {
            if self.visible(p) {
                run.push(self.map(p));
            } else {
                flush(&mut run, &mut self.body);
            }
        }
        flush(&mut run, &mut self.body);
    }

    pub fn segment(&mut self, a: Point, b: Point, stroke: &str, width: f64) {
        let ((x1, y1), (x2, y2)) = (self.map(a), self.map(b));
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width}"/>"#
        );
    }

    pub fn dot(&mut self, p: Point, r: f64, fill: &str) {
        if self.visible(p) {
            let (x, y) = self.map(p);
            let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#);
        }
    }

    /// Axis-aligned cell centred at `p` with plane half-size `half`.
    pub fn cell(&mut self, p: Point, half: f64, fill: &str) {
        let (x0, y0) = self.map(Point::new(p.x - half, p.y + half));
        let (x1, y1) = self.map(Point::new(p.x + half, p.y - half));
        let _ = writeln!(
            self.body,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            x1 - x0,
            y1 - y0
        );
    }

    pub fn finish(&self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.finish())?;
        Ok(())
    }
}

/// Blue-to-red ramp for `s ∈ [0, 1]`.
pub fn ramp(s: f64) -> String {
    let s = if s.is_finite() { s.clamp(0.0, 1.0) } else { 0.5 };
    let r = (255.0 * s).round() as u8;
    let b = (255.0 * (1.0 - s)).round() as u8;
    let g = (255.0 * (1.0 - (2.0 * s - 1.0).abs()) * 0.8).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn boundary_polylines(svg: &mut Svg, domain: &Domain, samples: usize) {
    for (region, colour) in [(&domain.outer, "black"), (&domain.inner, "#555555")] {
        let c = &region.curve;
        let r = c.range();
        let pts: Vec<Point> = (1..samples)
            .map(|k| c.eval(r.from_unit(k as f64 / samples as f64)))
            .collect();
        svg.polyline(&pts, colour, 1.5);
    }
}

/// Heatmap of a field on its window with both boundary curves drawn on top.
/// Pinned nodes are grey.
pub fn field_heatmap(domain: &Domain, field: &ScalarField) -> Svg {
    let w = field.mesh.window;
    let mut svg = Svg::new(Point::new(w.x1.0, w.x2.0), Point::new(w.x1.1, w.x2.1), 600.0);
    let live: Vec<f64> = field
        .values
        .iter()
        .zip(&field.pinned)
        .filter(|(v, p)| !**p && v.is_finite())
        .map(|(v, _)| *v)
        .collect();
    let lo = live.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = live.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = 0.5 * field.mesh.resolution;
    for (k, kind) in field.mesh.kinds.iter().enumerate() {
        if let NodeKind::Interior { .. } = kind {
            let colour = if field.pinned[k] {
                "#bbbbbb".to_string()
            } else {
                ramp((field.values[k] - lo) / (hi - lo).max(1e-300))
            };
            svg.cell(field.mesh.nodes[k], half, &colour);
        }
    }
    boundary_polylines(&mut svg, domain, 2000);
    svg
}

/// The domain with a sample of tangent segments.
pub fn domain_figure(domain: &Domain, window: (Point, Point), tangents: &[Tangent]) -> Svg {
    let mut svg = Svg::new(window.0, window.1, 600.0);
    boundary_polylines(&mut svg, domain, 2000);
    for t in tangents {
        svg.segment(t.source, t.touch, "#1f77b4", 0.8);
        svg.dot(t.touch, 1.5, "#d62728");
    }
    svg
}

/// Chords drawn as segments between their boundary points.
pub fn chord_overlay(domain: &Domain, window: (Point, Point), chords: &[Chord]) -> Svg {
    let mut svg = Svg::new(window.0, window.1, 600.0);
    boundary_polylines(&mut svg, domain, 2000);
    let g = &domain.outer.curve;
    for c in chords {
        svg.segment(g.eval(c.a), g.eval(c.b), "#2ca02c", 0.6);
    }
    svg
}
