//! Command-line front end: `diagnose`, `solve`, `gap` and `cups`.
//!
//! Exit codes: 0 success, 1 inconclusive or not converged, 2 hard failure,
//! 64 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::concavify::{
    build_mesh, local_concavity_violation, minimal_concave_majorant, MajorantOptions, MeshOptions, SweepMode,
    Window,
};
use crate::error::{Error, Result};
use crate::force::{force_profile, ForceOptions};
use crate::geometry::{check_divergence_condition, check_ray_condition, check_unbounded, DivergenceVerdict, RayProbe};
use crate::geometry::{Domain, Point, Side};
use crate::lace::{solve_cup_chords, torsion_sign_changes, CupOptions, FlipDirection, LiftedCurve, DEFAULT_MAX_CHANGES};
use crate::presets::{FSpec, Preset};
use crate::report::{self, Table};
use crate::simulate::{lower_bound, LowerBoundOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INCONCLUSIVE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "annular-bellman", version, about = "Bellman functions on annular convex domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissibility diagnostics, a verdict table and a domain figure.
    Diagnose(Common),
    /// Minimal locally concave majorant on a mesh.
    Solve(SolveArgs),
    /// Lower bounds from step functions against the majorant.
    Gap(GapArgs),
    /// Torsion sign changes and cup chord families.
    Cups(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// bmo, ap, reverse_jensen or custom.
    #[arg(long, conflicts_with = "domain_file")]
    pub preset: Option<String>,
    /// Key-value domain description, e.g. `preset=bmo epsilon=0.5`.
    #[arg(long)]
    pub domain_file: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p2: Option<f64>,
    #[arg(long = "Q", allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// Boundary data, e.g. `exp lambda=1` or `power p=4 sign=-1` [default: exp].
    #[arg(long)]
    pub f: Option<String>,
    /// Window `lo,hi` for x1 and for the boundary parameter.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Key-value file supplying defaults for any unset flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    GaussSeidel,
    Jacobi,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Lattice spacing [default: 0.05].
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Sweep limit [default: 20000].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Sweep convergence tolerance [default: 1e-11].
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GapArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Candidate step functions per point [default: 1000].
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points `x1,x2;x1,x2;...` [default: a 3x3 grid across the window].
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
}

/// Parses `key=value` tokens separated by whitespace; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{tok}`")))?;
            out.push((k.to_string(), v.to_string()));
        }
    }
    Ok(out)
}

fn number(key: &str, v: &str) -> Result<f64> {
    v.parse().map_err(|_| Error::Parse(format!("bad number `{v}` for `{key}`")))
}

/// Preset from a domain description.
pub fn parse_domain_description(text: &str) -> Result<Preset> {
    let kv = parse_key_values(text)?;
    let get = |k: &str| kv.iter().rev().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    for (k, _) in &kv {
        if !["preset", "epsilon", "p1", "p2", "Q", "q", "profile", "id"].contains(&k.as_str()) {
            return Err(Error::Parse(format!("unknown domain key `{k}`")));
        }
    }
    let num = |k: &str| -> Result<Option<f64>> { get(k).map(|v| number(k, v)).transpose() };
    let q = match num("Q")? {
        Some(q) => Some(q),
        None => num("q")?,
    };
    let name = get("preset").ok_or_else(|| Error::Parse("domain description needs `preset=`".into()))?;
    preset_from_parts(
        name,
        num("epsilon")?,
        num("p1")?,
        num("p2")?,
        q,
        get("profile"),
        get("id"),
    )
}

fn preset_from_parts(
    name: &str,
    epsilon: Option<f64>,
    p1: Option<f64>,
    p2: Option<f64>,
    q: Option<f64>,
    profile: Option<&str>,
    id: Option<&str>,
) -> Result<Preset> {
    let need = |v: Option<f64>, k: &str| v.ok_or_else(|| Error::Parse(format!("preset `{name}` needs `{k}`")));
    Ok(match name {
        "bmo" => Preset::Bmo { epsilon: need(epsilon, "epsilon")? },
        "ap" => Preset::Ap {
            p1: need(p1, "p1")?,
            p2: need(p2, "p2")?,
            q: need(q, "Q")?,
        },
        "reverse_jensen" => Preset::ReverseJensen {
            profile: profile.unwrap_or("exp").to_string(),
            q: need(q, "Q")?,
        },
        "custom" => Preset::Custom {
            id: id.ok_or_else(|| Error::Parse("custom preset needs `id`".into()))?.to_string(),
        },
        other => return Err(Error::Parse(format!("unknown preset `{other}`"))),
    })
}

fn parse_window(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("window must be `lo,hi`, got `{s}`")))?;
    let (a, b) = (number("window", a.trim())?, number("window", b.trim())?);
    if !(a < b) {
        return Err(Error::Parse(format!("empty window `{s}`")));
    }
    Ok((a, b))
}

fn parse_points(s: &str) -> Result<Vec<Point>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("point must be `x1,x2`, got `{p}`")))?;
            Ok(Point::new(number("points", a.trim())?, number("points", b.trim())?))
        })
        .collect()
}

/// Values from `--config`, consulted for any flag left unset.
#[derive(Debug, Default)]
struct Config(Vec<(String, String)>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let kv = parse_key_values(&text)?;
        const KEYS: [&str; 10] =
            ["f", "window", "resolution", "mode", "max_iters", "tolerance", "budget", "seed", "points", "segment_samples"];
        for (k, _) in &kv {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown config key `{k}`")));
            }
        }
        Ok(Self(kv))
    }

    fn get(&self, k: &str) -> Option<&str> {
        self.0.iter().rev().find(|(key, _)| key == k).map(|(_, v)| v.as_str())
    }

    fn num<T: std::str::FromStr>(&self, k: &str) -> Result<Option<T>> {
        self.get(k)
            .map(|v| v.parse().map_err(|_| Error::Parse(format!("bad value `{v}` for `{k}`"))))
            .transpose()
    }
}

/// Everything the commands share once flags, config and presets are resolved.
struct Setup {
    preset: Preset,
    domain: Domain,
    fspec: FSpec,
    curve: LiftedCurve,
    window: (f64, f64),
    out_dir: PathBuf,
    config: Config,
}

fn setup(c: &Common) -> Result<Setup> {
    let config = Config::load(c.config.as_deref())?;
    let preset = match (&c.preset, &c.domain_file) {
        (_, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            parse_domain_description(&text)?
        }
        (Some(name), None) => preset_from_parts(name, c.epsilon, c.p1, c.p2, c.q, None, None)?,
        (None, None) => return Err(Error::Parse("one of --preset or --domain-file is required".into())),
    };
    let domain = preset.build()?;
    let f_text = c.f.clone().or_else(|| config.get("f").map(str::to_string)).unwrap_or_else(|| "exp".into());
    let fspec: FSpec = f_text.parse()?;
    let data = fspec.build(domain.outer.curve.range())?;
    let curve = LiftedCurve::new(domain.outer.curve.clone(), data);
    let window = match c.window.as_deref().or(config.get("window")) {
        Some(w) => parse_window(w)?,
        None => preset.default_window(),
    };
    fs::create_dir_all(&c.out_dir)?;
    Ok(Setup {
        preset,
        domain,
        fspec,
        curve,
        window,
        out_dir: c.out_dir.clone(),
        config,
    })
}

/// Pass/inconclusive/fail with the worst one deciding the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }
}

fn uniform(window: (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| window.0 + (window.1 - window.0) * k as f64 / (n - 1).max(1) as f64)
        .collect()
}

fn plot_box(domain: &Domain, window: (f64, f64)) -> (Point, Point) {
    Window::around_domain(domain, window)
        .map(|w| (Point::new(w.x1.0, w.x2.0), Point::new(w.x1.1, w.x2.1)))
        .unwrap_or((Point::new(window.0, window.0), Point::new(window.1, window.1)))
}

fn diagnose(c: &Common, out: &mut dyn Write) -> Result<i32> {
    let s = setup(c)?;
    let d = &s.domain;
    let mut rows: Vec<(String, Verdict, String)> = Vec::new();
    let mut push = |name: &str, v: Verdict, detail: String| rows.push((name.to_string(), v, detail));

    let warnings = d.validate();
    let degenerate = warnings.iter().any(|w| w.starts_with("degenerate"));
    let nonconvex = warnings.iter().any(|w| w.contains("not strictly convex"));
    let structure = if nonconvex {
        Verdict::Fail
    } else if degenerate {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    push("domain_structure", structure, warnings.join("; "));

    let mismatch = d
        .outer
        .curve
        .derivative_mismatch(s.window, 64)
        .max(d.inner.curve.derivative_mismatch(s.window, 64));
    let smooth = if mismatch < 1e-4 { Verdict::Pass } else { Verdict::Inconclusive };
    push("boundary_derivatives", smooth, format!("max relative mismatch {mismatch:.3e}"));

    let data = &s.curve.data;
    if data.smooth {
        let m = data.derivative_mismatch(s.window, 64);
        let v = if m < 1e-4 { Verdict::Pass } else { Verdict::Inconclusive };
        push("data_derivatives", v, format!("max relative mismatch {m:.3e}"));
    } else {
        push("data_derivatives", Verdict::Inconclusive, format!("{} is not C3", data.label));
    }
    match data.lower_bound {
        Some(m) => push("data_bounded_below", Verdict::Pass, format!("infimum {m}")),
        None => push("data_bounded_below", Verdict::Inconclusive, "no finite infimum".into()),
    }

    let mut tangents = Vec::new();
    if degenerate {
        for name in ["unbounded", "ray_translation", "divergence_right", "divergence_left", "torsion", "force_right", "force_left"] {
            push(name, Verdict::Inconclusive, "skipped: degenerate domain".into());
        }
    } else {
        let u = check_unbounded(d, 1e3);
        let v = if u.outer && u.inner { Verdict::Pass } else { Verdict::Inconclusive };
        push("unbounded", v, format!("consistent with unbounded: outer {} inner {}", u.outer, u.inner));

        let rays = check_ray_condition(d, &RayProbe::default());
        let admissible = rays.rows.iter().filter(|r| r.admissible).count();
        let v = if rays.pass { Verdict::Pass } else { Verdict::Fail };
        push("ray_translation", v, format!("{admissible} admissible directions of {}", rays.rows.len()));

        let mid = 0.5 * (s.window.0 + s.window.1);
        match d.tangent(mid, Side::Right) {
            Ok(t) => match check_divergence_condition(d, t.touch_param, 1e3) {
                Ok(rep) => {
                    for side in [&rep.right, &rep.left] {
                        let name = match side.side {
                            Side::Right => "divergence_right",
                            Side::Left => "divergence_left",
                        };
                        let total = side.partials.last().map_or(0.0, |p| p.2);
                        let v = if side.verdict == DivergenceVerdict::Diverges {
                            Verdict::Pass
                        } else {
                            Verdict::Inconclusive
                        };
                        push(name, v, format!("partial integral {total:.6} over {} windows", side.partials.len()));
                    }
                }
                Err(e) => {
                    push("divergence_right", Verdict::Inconclusive, e.to_string());
                    push("divergence_left", Verdict::Inconclusive, e.to_string());
                }
            },
            Err(e) => {
                push("divergence_right", Verdict::Inconclusive, e.to_string());
                push("divergence_left", Verdict::Inconclusive, e.to_string());
            }
        }

        if data.smooth {
            match torsion_sign_changes(&s.curve, s.window, 2000, DEFAULT_MAX_CHANGES) {
                Ok(ch) => {
                    let cups = ch.iter().filter(|c| c.is_cup_candidate()).count();
                    push("torsion", Verdict::Pass, format!("{} sign changes, {cups} cup candidates", ch.len()));
                }
                Err(e) => push("torsion", Verdict::Inconclusive, e.to_string()),
            }
            let grid = uniform(s.window, 9);
            for (name, side) in [("force_right", Side::Right), ("force_left", Side::Left)] {
                match force_profile(d, &s.curve, &grid, side, &ForceOptions::default()) {
                    Ok(p) => {
                        let ok = p.converged.iter().filter(|&&c| c).count();
                        let v = if ok == grid.len() { Verdict::Pass } else { Verdict::Inconclusive };
                        let tail = p.tails.iter().cloned().fold(0.0f64, f64::max);
                        push(name, v, format!("{ok} of {} converged, max tail {tail:.3e}", grid.len()));
                    }
                    Err(e) => push(name, Verdict::Inconclusive, e.to_string()),
                }
            }
        } else {
            for name in ["torsion", "force_right", "force_left"] {
                push(name, Verdict::Inconclusive, "skipped: data is not C3".into());
            }
        }

        for u in uniform(s.window, 21) {
            for side in [Side::Right, Side::Left] {
                if let Ok(t) = d.tangent(u, side) {
                    tangents.push(t);
                }
            }
        }
    }

    let mut table = Table::new(&["condition", "verdict", "detail"]);
    for (name, v, detail) in &rows {
        table.push([name.as_str(), v.as_str(), detail.as_str()]);
    }
    table.write(&s.out_dir.join("diagnose.csv"))?;
    report::domain_figure(d, plot_box(d, s.window), &tangents).write(&s.out_dir.join("domain.svg"))?;

    let worst = rows.iter().map(|r| r.1).max().unwrap_or(Verdict::Pass);
    for (name, v, detail) in &rows {
        writeln!(out, "{name:<22} {:<12} {detail}", v.as_str())?;
    }
    if degenerate {
        writeln!(out, "warning: degenerate {} domain, inner and outer boundaries meet", s.preset.name())?;
    }
    writeln!(out, "overall: {}", worst.as_str())?;
    Ok(match worst {
        Verdict::Pass => EXIT_OK,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
        Verdict::Fail => EXIT_FAILURE,
    })
}

/// Exact Bellman function for boundary data that is the restriction of an
/// affine function of `x`.
fn affine_reference(preset: &Preset, f: &FSpec) -> Option<Box<dyn Fn(Point) -> f64>> {
    match (preset, f) {
        (Preset::Bmo { .. }, FSpec::Affine { slope, intercept }) => {
            let (a, b) = (*slope, *intercept);
            Some(Box::new(move |p: Point| a * p.x + b))
        }
        (Preset::Bmo { .. }, FSpec::Power { p, sign }) if *p == 1.0 || *p == 2.0 => {
            let (p, s) = (*p, *sign);
            Some(Box::new(move |x: Point| s * if p == 1.0 { x.x } else { x.y }))
        }
        (Preset::Ap { p1, .. }, FSpec::Power { p, sign }) if p == p1 => {
            let s = *sign;
            Some(Box::new(move |x: Point| s * x.x))
        }
        _ => None,
    }
}

struct Solved {
    result: crate::concavify::MajorantResult,
    resolution: f64,
}

fn solve_field(s: &Setup, a: &SolveArgs) -> Result<Solved> {
    let resolution = match a.resolution {
        Some(r) => r,
        None => s.config.num("resolution")?.unwrap_or(0.05),
    };
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Parse(format!("resolution must be positive, got {resolution}")));
    }
    let mode = match a.mode {
        Some(m) => m,
        None => match s.config.get("mode") {
            Some(v) => Mode::from_str(v, true).map_err(|_| Error::Parse(format!("bad mode `{v}`")))?,
            None => Mode::GaussSeidel,
        },
    };
    let mut opts = MajorantOptions {
        mode: match mode {
            Mode::GaussSeidel => SweepMode::GaussSeidel,
            Mode::Jacobi => SweepMode::Jacobi,
        },
        ..MajorantOptions::default()
    };
    if let Some(m) = a.max_iters.or(s.config.num("max_iters")?) {
        opts.max_iters = m;
    }
    if let Some(t) = a.tolerance.or(s.config.num("tolerance")?) {
        opts.tolerance = t;
    }
    let mut mesh_opts = MeshOptions::new(resolution);
    if let Some(n) = s.config.num("segment_samples")? {
        mesh_opts.segment_samples = n;
    }
    let window = Window::around_domain(&s.domain, s.window)?;
    let mesh = Arc::new(build_mesh(&s.domain, window, &mesh_opts)?);
    let result = minimal_concave_majorant(mesh, &s.curve.data, &opts)?;
    Ok(Solved { result, resolution })
}

fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let s = setup(&a.common)?;
    let Solved { result, .. } = solve_field(&s, a)?;
    let field = &result.field;
    report::field_table(field).write(&s.out_dir.join("field.csv"))?;
    report::mesh_node_table(&field.mesh).write(&s.out_dir.join("mesh_nodes.csv"))?;
    report::mesh_edge_table(&field.mesh).write(&s.out_dir.join("mesh_edges.csv"))?;
    report::field_heatmap(&s.domain, field).write(&s.out_dir.join("field.svg"))?;
    let mut log = Table::new(&["sweep", "max_change"]);
    for (k, v) in result.history.iter().enumerate() {
        log.push([(k + 1).to_string(), v.to_string()]);
    }
    log.write(&s.out_dir.join("convergence.csv"))?;

    writeln!(
        out,
        "nodes {} sweeps {} converged {} pinned {} concavity violation {:.3e}",
        field.mesh.len(),
        result.iterations,
        result.converged,
        field.pinned_count(),
        local_concavity_violation(field)
    )?;
    if let Some(exact) = affine_reference(&s.preset, &s.fspec) {
        let dev = field
            .mesh
            .nodes
            .iter()
            .zip(&field.values)
            .map(|(&p, &v)| (v - exact(p)).abs())
            .fold(0.0f64, f64::max);
        writeln!(out, "max deviation from the affine solution {dev:.3e}")?;
    }
    Ok(if result.converged { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

/// Three points on each of three inward normals from `∂Ω₀`, at a quarter,
/// half and three quarters of the way to the far side of `Ω`.
fn default_points(d: &Domain, window: (f64, f64)) -> Vec<Point> {
    let g = &d.outer.curve;
    let mut pts = Vec::new();
    for u in [0.25, 0.5, 0.75] {
        let t = window.0 + u * (window.1 - window.0);
        let p = g.eval(t);
        let mut n = g.d1(t).normalized().perp();
        let h = 1e-9 * (1.0 + p.norm());
        if d.outer.level(p + n * h) > d.outer.level(p - n * h) {
            n = -n;
        }
        let start = p + n * h;
        if let Some(e) = d.exit_along(start, n) {
            for frac in [0.25, 0.5, 0.75] {
                pts.push(start + n * (frac * e.distance));
            }
        }
    }
    pts
}

fn gap(a: &GapArgs, out: &mut dyn Write) -> Result<i32> {
    let s = setup(&a.solve.common)?;
    let budget = match a.budget {
        Some(b) => b,
        None => s.config.num("budget")?.unwrap_or(1000),
    };
    if budget == 0 {
        return Err(Error::Parse("budget must be positive".into()));
    }
    let seed = match a.seed {
        Some(v) => v,
        None => s.config.num("seed")?.unwrap_or(0),
    };
    let points = match a.points.as_deref().or(s.config.get("points")) {
        Some(p) => parse_points(p)?,
        None => default_points(&s.domain, s.window),
    };
    let Solved { result, resolution } = solve_field(&s, &a.solve)?;
    let field = &result.field;
    let lb_opts = LowerBoundOptions { budget, seed, ..LowerBoundOptions::default() };

    let mut table = Table::new(&["x1", "x2", "lower", "upper", "upper_error", "gap", "relative_gap", "status"]);
    let (mut max_gap, mut max_rel) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (k, &x) in points.iter().enumerate() {
        let upper = field.value_at(x);
        let lower = lower_bound(&s.domain, &s.curve, x, &lb_opts);
        let mut status = Vec::new();
        if let Err(e) = &lower {
            status.push(e.to_string());
        }
        if upper.is_none() {
            status.push("outside mesh".to_string());
        }
        let (lv, uv, ue) = (
            lower.as_ref().map_or(f64::NAN, |l| l.value),
            upper.map_or(f64::NAN, |u| u.value),
            upper.map_or(f64::NAN, |u| u.error),
        );
        let g = uv - lv;
        let rel = g / uv.abs().max(lv.abs()).max(f64::MIN_POSITIVE);
        if g.is_finite() {
            max_gap = max_gap.max(g);
            max_rel = max_rel.max(rel);
        }
        if let Ok(l) = &lower {
            report::witness_table(&s.domain, &l.phi).write(&s.out_dir.join(format!("witness_{k}.csv")))?;
        }
        let status = if status.is_empty() { "ok".to_string() } else { status.join("; ") };
        table.push([
            x.x.to_string(),
            x.y.to_string(),
            lv.to_string(),
            uv.to_string(),
            ue.to_string(),
            g.to_string(),
            rel.to_string(),
            status,
        ]);
        writeln!(out, "({}, {}) lower {lv:.6} upper {uv:.6} gap {g:.3e}", x.x, x.y)?;
    }
    let summary = |v: f64| if v.is_finite() { v.to_string() } else { String::new() };
    table.push([
        "max".to_string(),
        String::new(),
        String::new(),
        String::new(),
        resolution.to_string(),
        summary(max_gap),
        summary(max_rel),
        format!("converged={}", result.converged),
    ]);
    table.write(&s.out_dir.join("gap.csv"))?;
    writeln!(out, "max gap {} max relative gap {}", summary(max_gap), summary(max_rel))?;
    Ok(if result.converged { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

fn cups(c: &Common, out: &mut dyn Write) -> Result<i32> {
    let s = setup(c)?;
    let changes = match torsion_sign_changes(&s.curve, s.window, 2000, DEFAULT_MAX_CHANGES) {
        Ok(ch) => ch,
        Err(e @ Error::TooManyChanges { .. }) => {
            writeln!(out, "{e}")?;
            return Ok(EXIT_INCONCLUSIVE);
        }
        Err(e) => return Err(e),
    };
    let mut torsion = Table::new(&["location", "direction", "cup_candidate"]);
    let mut chords = Vec::new();
    for ch in &changes {
        let dir = match ch.direction {
            FlipDirection::PlusToMinus => "+-",
            FlipDirection::MinusToPlus => "-+",
        };
        torsion.push([ch.location.to_string(), dir.to_string(), ch.is_cup_candidate().to_string()]);
        if ch.is_cup_candidate() {
            let family = solve_cup_chords(&s.domain, &s.curve, ch.location, s.window, &CupOptions::default())?;
            writeln!(out, "cup at {:.6}: {} chords", ch.location, family.len())?;
            chords.extend(family);
        }
    }
    torsion.write(&s.out_dir.join("torsion.csv"))?;
    report::chord_table(&chords).write(&s.out_dir.join("chords.csv"))?;
    report::chord_overlay(&s.domain, plot_box(&s.domain, s.window), &chords).write(&s.out_dir.join("chords.svg"))?;
    writeln!(out, "{} torsion sign changes, {} chords", changes.len(), chords.len())?;
    Ok(EXIT_OK)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::InvalidParameter(_) | Error::InvalidExponents { .. } => EXIT_USAGE,
        Error::TooManyChanges { .. } => EXIT_INCONCLUSIVE,
        _ => EXIT_FAILURE,
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Diagnose(c) => diagnose(c, out),
        Command::Solve(a) => solve(a, out),
        Command::Gap(a) => gap(a, out),
        Command::Cups(c) => cups(c, out),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        exit_code(&e)
    })
}
