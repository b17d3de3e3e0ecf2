//! Command implementations. Each returns its complete output so nothing is
//! written until the run has succeeded.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use bundletc::bundle::Telescope;
use bundletc::dsl::check_source;
use bundletc::manifolds::{RiemannianManifold, SmoothMap};
use bundletc::variational::*;
use bundletc::verify::fixtures::{bent_equator, great_circle};
use bundletc::verify::suites::{run_suite, Suite};
use serde::Serialize;

use crate::config::{InitialSpec, RunConfig, VariationSpec};
use crate::failure::Failure;
use crate::output::{csv_table, fmt_real};

/// What a command prints, and the exit code it ends with.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    /// Extra files, written only when the command succeeds.
    pub files: Vec<(std::path::PathBuf, String)>,
    pub code: u8,
}

type Manifold = Arc<RiemannianManifold<f64>>;

pub fn typecheck(path: &Path, level: Telescope) -> Result<Outcome, Failure> {
    let src =
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let report = check_source(&src, level);
    let mut out = Outcome::default();
    for t in &report.typed {
        let span = t.expr.span;
        out.stdout.push_str(&format!(
            "{}:{}: {} : {}\n",
            span.line,
            span.col,
            t.expr,
            t.ty.render(&report.checker.env, level)
        ));
    }
    let file = path.display().to_string();
    for d in &report.diagnostics {
        out.stderr.push_str(&d.render(&file));
        out.stderr.push('\n');
    }
    out.code = u8::from(!report.ok());
    Ok(out)
}

pub fn geodesic(cfg: &RunConfig) -> Result<Outcome, Failure> {
    cfg.expect_command("geodesic")?;
    let s = cfg.target()?;
    let (x0, v0) = match cfg.initial()? {
        InitialSpec::State { point, velocity } => (point, velocity),
        _ => return Failure::schema_err("/initial/type", "geodesic needs an initial `state`"),
    };
    let h = cfg.solver.step.unwrap_or(1e-3);
    let t_end = cfg.solver.t.ok_or_else(|| Failure::schema("/solver/T", "missing final time `T`"))?;
    let curve = solve_geodesic(&s, &x0, &v0, t_end, h)?;

    // Hamiltonian of the kinetic energy on the sampled time grid.
    let steps = curve.times.len() - 1;
    let time = Arc::new(RiemannianManifold::euclidean(1).renamed("I"));
    let p = EnergyProblem::new(
        Domain::Interval { a: 0.0, b: t_end, n: steps },
        Arc::new(Kinetic::new(time, s.clone())),
        Boundary::Free,
    )?;
    let ham = hamiltonian(&p, &curve.curve)?;
    let vels = curve.curve.jacobians.as_ref().expect("geodesic solver stores velocities");

    let mut header = vec!["t".to_string()];
    header.extend((0..s.dim()).map(|k| format!("x{k}")));
    header.extend(["speed".to_string(), "H".to_string()]);
    let mut rows = Vec::with_capacity(curve.times.len());
    for (k, &t) in curve.times.iter().enumerate() {
        let x = &curve.curve.values[k];
        let mut row = vec![fmt_real(t)];
        row.extend(x.iter().map(|&c| fmt_real(c)));
        row.push(fmt_real(s.norm(x, &vels[k])?));
        row.push(fmt_real(ham[k]));
        rows.push(row);
    }
    Ok(Outcome { stdout: csv_table(&header, &rows)?, ..Default::default() })
}

pub fn harmonic(cfg: &RunConfig, field_out: Option<&Path>) -> Result<Outcome, Failure> {
    cfg.expect_command("harmonic")?;
    let (p, phi0) = problem_and_configuration(cfg)?;
    let steps = cfg.solver.steps.unwrap_or(1000);
    let h = p.grid.step().iter().copied().fold(f64::INFINITY, f64::min);
    let dt = cfg.solver.dt.unwrap_or(0.1 * h * h);
    let flow = gradient_flow_harmonic(&p, &phi0, steps, dt)?;

    let rows: Vec<Vec<String>> =
        flow.history.iter().enumerate().map(|(k, &v)| vec![k.to_string(), fmt_real(v)]).collect();
    let history = csv_table(&["step".to_string(), "sup_tension".to_string()], &rows)?;

    let mut out = Outcome { stdout: history, ..Default::default() };
    if let Some(path) = field_out {
        out.files.push((path.to_path_buf(), field_table(&p, &flow.field)?));
    }
    Ok(out)
}

/// Final configuration: domain coordinates, target coordinates and the
/// tension norm (zero on the boundary, where the flow holds values fixed).
fn field_table(p: &EnergyProblem<f64>, phi: &FieldConfiguration<f64>) -> Result<String, Failure> {
    let (nm, ns) = (p.m().dim(), p.s().dim());
    let mut header = vec!["node".to_string()];
    header.extend((0..nm).map(|k| format!("m{k}")));
    header.extend((0..ns).map(|k| format!("s{k}")));
    header.push("tension".to_string());
    let mut rows = Vec::with_capacity(p.nodes());
    for node in 0..p.nodes() {
        let mut row = vec![node.to_string()];
        row.extend(p.coords(node).into_iter().map(fmt_real));
        row.extend(phi.values[node].iter().map(|&c| fmt_real(c)));
        let tension = if p.grid.is_boundary(node) {
            0.0
        } else {
            p.s().norm(&phi.values[node], &discrete_tension(p, phi, node)?)?
        };
        row.push(fmt_real(tension));
        rows.push(row);
    }
    csv_table(&header, &rows)
}

#[derive(Debug, Serialize)]
struct ResidualEntry {
    node: usize,
    coords: Vec<f64>,
    value: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct BoundaryEntry {
    node: usize,
    coords: Vec<f64>,
    axis: usize,
    /// `+1` on the upper face, `-1` on the lower one.
    side: f64,
    value: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct VariationReport {
    energy: f64,
    first_variation_formula: Vec<f64>,
    first_variation_fd: Vec<f64>,
    el_residual_max: f64,
    el_residual_grid: Vec<ResidualEntry>,
    boundary_residual_max: f64,
    boundary_residual: Vec<BoundaryEntry>,
    /// Interval domains only.
    hamiltonian_trace: Option<Vec<f64>>,
    hamiltonian_drift: Option<f64>,
    /// Diagonal second variation `Q(Aᵢ, Aᵢ)`; empty unless the configuration
    /// is critical.
    second_variation_formula: Vec<f64>,
    second_variation_fd: Vec<f64>,
    second_variation_skipped: Option<String>,
}

pub fn variation(cfg: &RunConfig) -> Result<Outcome, Failure> {
    cfg.expect_command("variation")?;
    let (p, phi) = problem_and_configuration(cfg)?;
    let fields = variation_fields(cfg, &p, &phi)?;

    let mut first_formula = Vec::with_capacity(fields.len());
    let mut first_fd = Vec::with_capacity(fields.len());
    for (k, a) in fields.iter().enumerate() {
        let fv = first_variation(&p, &phi, a).map_err(|e| Failure::from(e).at(&format!("/variations/{k}")))?;
        first_formula.push(fv.formula);
        first_fd.push(fv.fd);
    }

    let res = euler_lagrange_residual(&p, &phi)?;
    let el_residual_grid = res
        .interior
        .iter()
        .map(|(node, r)| ResidualEntry { node: *node, coords: p.coords(*node), value: r.clone() })
        .collect();
    let boundary_residual = res
        .boundary
        .iter()
        .map(|(b, r)| BoundaryEntry {
            node: b.node,
            coords: p.coords(b.node),
            axis: b.axis,
            side: b.sign,
            value: r.clone(),
        })
        .collect();

    let hamiltonian_trace = match p.domain {
        Domain::Interval { .. } => Some(hamiltonian(&p, &phi)?),
        Domain::Rectangle { .. } => None,
    };
    let hamiltonian_drift = hamiltonian_trace.as_deref().map(relative_drift);

    let (mut second_formula, mut second_fd, mut skipped) = (Vec::new(), Vec::new(), None);
    match require_critical(&p, &phi) {
        Ok(()) => {
            for a in &fields {
                let sv = second_variation(&p, &phi, a, a)?;
                second_formula.push(sv.formula);
                second_fd.push(sv.fd);
            }
        }
        Err(e @ bundletc::Error::NotCritical { .. }) => skipped = Some(e.to_string()),
        Err(e) => return Err(e.into()),
    }

    let report = VariationReport {
        energy: energy(&p, &phi)?,
        first_variation_formula: first_formula,
        first_variation_fd: first_fd,
        el_residual_max: res.max_interior(),
        el_residual_grid,
        boundary_residual_max: res.max_boundary(),
        boundary_residual,
        hamiltonian_trace,
        hamiltonian_drift,
        second_variation_formula: second_formula,
        second_variation_fd: second_fd,
        second_variation_skipped: skipped,
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Domain(e.to_string()))?;
    json.push('\n');
    Ok(Outcome { stdout: json, ..Default::default() })
}

pub fn verify(suite: Suite, seed: u64) -> Outcome {
    let reports = run_suite(suite, seed);
    let mut out = Outcome::default();
    for r in &reports {
        out.stdout.push_str(&r.summary());
        out.stdout.push('\n');
    }
    let passed = reports.iter().filter(|r| r.passed()).count();
    out.stdout.push_str(&format!("{passed}/{} criteria passed (suite {suite}, seed {seed})\n", reports.len()));
    out.code = u8::from(passed != reports.len());
    out
}

fn problem_and_configuration(cfg: &RunConfig) -> Result<(EnergyProblem<f64>, FieldConfiguration<f64>), Failure> {
    let domain = cfg.domain()?;
    let m = cfg.manifold(&domain)?;
    let s = cfg.target()?;
    let lagrangian = cfg.lagrangian(m.clone(), s.clone())?;
    let p = EnergyProblem::new(domain, lagrangian, cfg.boundary.into()).map_err(|e| Failure::from(e).at("/domain"))?;
    let phi = configuration(cfg, &p, &m, &s).map_err(|e| e.at("/initial"))?;
    phi.check(&p).map_err(|e| Failure::from(e).at("/initial"))?;
    Ok((p, phi))
}

/// Lower and upper corners of the grid.
fn bounds(p: &EnergyProblem<f64>) -> (Vec<f64>, Vec<f64>) {
    match p.domain {
        Domain::Interval { a, b, .. } => (vec![a], vec![b]),
        Domain::Rectangle { x, y } => (vec![x.0, y.0], vec![x.1, y.1]),
    }
}

/// `Π sin(π(xᵢ − loᵢ)/(hiᵢ − loᵢ))`, vanishing on the grid boundary.
fn bump(lo: &[f64], hi: &[f64], x: &[f64]) -> f64 {
    x.iter().zip(lo.iter().zip(hi)).map(|(&c, (&l, &h))| (PI * (c - l) / (h - l)).sin()).product()
}

fn interval_of(p: &EnergyProblem<f64>) -> Result<(f64, f64), Failure> {
    match p.domain {
        Domain::Interval { a, b, .. } => Ok((a, b)),
        _ => Failure::schema_err("/domain/type", "this initial map needs an interval domain"),
    }
}

fn expect_len(v: &[f64], n: usize, what: &str) -> Result<(), Failure> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Failure::usage(format!("{what} needs {n} coordinates, got {}", v.len())))
    }
}

fn configuration(
    cfg: &RunConfig,
    p: &EnergyProblem<f64>,
    m: &Manifold,
    s: &Manifold,
) -> Result<FieldConfiguration<f64>, Failure> {
    let (lo, hi) = bounds(p);
    let n = s.dim();
    let sample = |f: &dyn Fn(&[f64]) -> Vec<f64>| {
        FieldConfiguration::from_values((0..p.nodes()).map(|k| f(&p.coords(k))).collect())
    };
    let unit_sphere = || -> Result<(), Failure> {
        let spec = &cfg.target;
        if spec.name.eq_ignore_ascii_case("sphere2") && spec.params.radius.unwrap_or(1.0) == 1.0 {
            Ok(())
        } else {
            Failure::schema_err("/target", "this initial map lives on the unit sphere `sphere2`")
        }
    };
    Ok(match cfg.initial()? {
        InitialSpec::State { .. } => {
            return Failure::schema_err("/initial/type", "a point and velocity only seed the geodesic command")
        }
        InitialSpec::PerturbedIdentity { amplitude } => {
            if m.dim() != n {
                return Err(Failure::usage("the identity needs domain and target of equal dimension"));
            }
            let a = amplitude;
            sample(&|x: &[f64]| {
                let b = bump(&lo, &hi, x);
                let mut y = x.to_vec();
                y[0] += a * b;
                if n > 1 {
                    y[1] -= 0.5 * a * b * b;
                }
                y
            })
        }
        InitialSpec::Segment { from, to, bend } => {
            let (a, b) = interval_of(p)?;
            expect_len(&from, n, "segment start")?;
            expect_len(&to, n, "segment end")?;
            sample(&|x: &[f64]| {
                let u = (x[0] - a) / (b - a);
                let mut y: Vec<f64> = from.iter().zip(&to).map(|(&f, &t)| f + u * (t - f)).collect();
                y[0] += bend * (PI * u).sin();
                y
            })
        }
        InitialSpec::GreatCircle { tilt, speed } => {
            interval_of(p)?;
            unit_sphere()?;
            FieldConfiguration::from_map(p, great_circle(m.clone(), tilt, speed))?
        }
        InitialSpec::BentEquator { amplitude, omega } => {
            interval_of(p)?;
            unit_sphere()?;
            FieldConfiguration::from_map(p, bent_equator(m.clone(), amplitude, omega))?
        }
        InitialSpec::Geodesic { point, velocity } => {
            interval_of(p)?;
            expect_len(&point, n, "geodesic point")?;
            expect_len(&velocity, n, "geodesic velocity")?;
            let steps = cfg.solver.steps.unwrap_or(1000);
            let map = SmoothMap::geodesic("geodesic", m.clone(), s.clone(), point, velocity, steps);
            FieldConfiguration::from_map(p, map)?
        }
        InitialSpec::BoundaryValue { from, to } => {
            let (a, b) = interval_of(p)?;
            if a != 0.0 {
                return Failure::schema_err("/domain/a", "boundary-value geodesics start at t = 0");
            }
            expect_len(&from, n, "start point")?;
            expect_len(&to, n, "end point")?;
            let steps = cfg.solver.steps.unwrap_or(1000);
            let v0 = shoot_geodesic(s, &from, &to, b, steps)?;
            let map = SmoothMap::geodesic("geodesic", m.clone(), s.clone(), from, v0, steps);
            FieldConfiguration::from_map(p, map)?
        }
    })
}

fn variation_fields(
    cfg: &RunConfig,
    p: &EnergyProblem<f64>,
    phi: &FieldConfiguration<f64>,
) -> Result<Vec<VariationField<f64>>, Failure> {
    let n = p.s().dim();
    let axis = |k: usize| (0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    let configured = cfg.variations()?;
    let specs: Vec<VariationSpec> = if configured.is_empty() {
        (0..n)
            .map(|k| match p.boundary {
                Boundary::Fixed => VariationSpec::Bump { direction: axis(k), power: 4 },
                Boundary::Free => VariationSpec::Constant { direction: axis(k) },
            })
            .collect()
    } else {
        configured
    };
    let (lo, hi) = bounds(p);
    specs
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let at = format!("/variations/{k}");
            let field = match spec {
                VariationSpec::Bump { direction, power } => {
                    expect_len(direction, n, "direction").map_err(|e| e.at(&at))?;
                    if *power < 1 {
                        return Failure::schema_err(format!("{at}/power"), "power must be at least 1");
                    }
                    let (d, pw, lo, hi) = (direction.clone(), *power, lo.clone(), hi.clone());
                    VariationField::from_fn(p, move |x: &[f64]| {
                        let e = bump(&lo, &hi, x).powi(pw);
                        Ok(d.iter().map(|&c| c * e).collect())
                    })?
                }
                VariationSpec::Constant { direction } => {
                    expect_len(direction, n, "direction").map_err(|e| e.at(&at))?;
                    let d = direction.clone();
                    VariationField::from_fn(p, move |_: &[f64]| Ok(d.clone()))?
                }
                VariationSpec::Normal { mode } => {
                    if *mode == 0 {
                        return Failure::schema_err(format!("{at}/mode"), "modes start at 1");
                    }
                    normal_mode(p, phi, *mode).map_err(|e| Failure::from(e).at(&at))?
                }
            };
            Ok(field)
        })
        .collect()
}
