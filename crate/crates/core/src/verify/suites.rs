//! Named verification suites. Each criterion records measured errors against
//! tolerances plus its wall time against a budget; the CLI `verify` command
//! and the acceptance test both run these.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::{normalize, BundleType, Environment};
use crate::covariant::{
    covariant_hessian, covariant_hessian_formula, pullback_curvature_check, tangent_map, tension_field, Slot,
    TensorField,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::manifolds::{RiemannianManifold, SmoothMap};
use crate::scalar::{max_abs, max_abs_diff};
use crate::tensor::{inversion_derivative, AxisTag, Permutation, SpaceId, TypedTensor, Variance};
use crate::variational::*;

use super::fixtures::{bent_equator, great_circle, line, perturbed_torus_identity, sphere, Manifold};
use super::{exprs, gen};

/// One measured quantity. Passes when `value <= tolerance`; quantities that
/// must instead be large record `tolerance` as a lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub tolerance: f64,
    pub at_least: bool,
}

impl Measurement {
    pub fn at_most(label: &str, value: f64, tolerance: f64) -> Self {
        Measurement { label: label.to_string(), value, tolerance, at_least: false }
    }

    pub fn at_least(label: &str, value: f64, bound: f64) -> Self {
        Measurement { label: label.to_string(), value, tolerance: bound, at_least: true }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.tolerance
        } else {
            self.value <= self.tolerance
        }
    }
}

/// Result of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub suite: Suite,
    pub measurements: Vec<Measurement>,
    pub elapsed: f64,
    pub budget: f64,
    pub error: Option<String>,
}

impl CriterionReport {
    pub fn within_budget(&self) -> bool {
        self.elapsed <= self.budget
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.within_budget() && self.measurements.iter().all(Measurement::passed)
    }

    /// `PASS 3 title (0.41s/5s): label=1.2e-9<=1e-6, ...`
    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let details = match &self.error {
            Some(e) => format!("error: {e}"),
            None => self
                .measurements
                .iter()
                .map(|m| {
                    let op = if m.at_least { ">=" } else { "<=" };
                    format!("{}={:.3e}{op}{:.0e}", m.label, m.value, m.tolerance)
                })
                .collect::<Vec<_>>()
                .join(", "),
        };
        format!("{status} {:>2} {} ({:.2}s/{}s): {details}", self.id, self.title, self.elapsed, self.budget)
    }
}

/// Grouping of criteria by module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Tensor,
    Bundle,
    Dsl,
    Manifolds,
    Covariant,
    Variational,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["tensor", "bundle", "dsl", "manifolds", "covariant", "variational", "all"];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Tensor => "tensor",
            Suite::Bundle => "bundle",
            Suite::Dsl => "dsl",
            Suite::Manifolds => "manifolds",
            Suite::Covariant => "covariant",
            Suite::Variational => "variational",
            Suite::All => "all",
        }
    }

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tensor" => Suite::Tensor,
            "bundle" => Suite::Bundle,
            "dsl" => Suite::Dsl,
            "manifolds" => Suite::Manifolds,
            "covariant" => Suite::Covariant,
            "variational" => Suite::Variational,
            "all" => Suite::All,
            other => {
                return Err(Error::usage(format!(
                    "unknown suite `{other}` (expected one of {})",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

type Check = fn(&mut ChaCha8Rng) -> Result<Vec<Measurement>>;

struct Criterion {
    id: usize,
    title: &'static str,
    suite: Suite,
    budget: f64,
    check: Check,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "typechecker soundness", suite: Suite::Dsl, budget: 5.0, check: typechecker_soundness },
    Criterion { id: 2, title: "inversion derivative", suite: Suite::Tensor, budget: 1.0, check: inversion_identity },
    Criterion { id: 3, title: "permutation calculus", suite: Suite::Tensor, budget: 5.0, check: permutation_calculus },
    Criterion {
        id: 4,
        title: "pullback chain rule",
        suite: Suite::Covariant,
        budget: 10.0,
        check: pullback_chain_rule,
    },
    Criterion { id: 5, title: "hessian symmetries", suite: Suite::Covariant, budget: 10.0, check: hessian_symmetries },
    Criterion {
        id: 6,
        title: "curvature identities",
        suite: Suite::Covariant,
        budget: 10.0,
        check: curvature_identities,
    },
    Criterion { id: 7, title: "geodesics", suite: Suite::Manifolds, budget: 10.0, check: geodesics },
    Criterion { id: 8, title: "first variation", suite: Suite::Variational, budget: 30.0, check: first_variations },
    Criterion { id: 9, title: "euler-lagrange residual", suite: Suite::Variational, budget: 30.0, check: residuals },
    Criterion { id: 10, title: "harmonic flow", suite: Suite::Variational, budget: 60.0, check: harmonic_flow },
    Criterion { id: 11, title: "second variation", suite: Suite::Variational, budget: 60.0, check: second_variations },
    Criterion { id: 12, title: "degenerate map", suite: Suite::Covariant, budget: 5.0, check: degenerate_map },
    Criterion { id: 13, title: "type normalization", suite: Suite::Bundle, budget: 5.0, check: type_normalization },
];

/// Number of numbered acceptance criteria (the bundle checks come after).
pub const ACCEPTANCE_CRITERIA: usize = 12;

fn run_one(c: &Criterion, seed: u64) -> CriterionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(c.id as u64));
    let start = Instant::now();
    let outcome = (c.check)(&mut rng);
    let elapsed = start.elapsed().as_secs_f64();
    let (measurements, error) = match outcome {
        Ok(m) => (m, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionReport { id: c.id, title: c.title, suite: c.suite, measurements, elapsed, budget: c.budget, error }
}

/// Runs every criterion of `suite` in id order.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<CriterionReport> {
    CRITERIA.iter().filter(|c| suite.includes(c.suite)).map(|c| run_one(c, seed)).collect()
}

/// Runs one criterion by id.
pub fn run_criterion(id: usize, seed: u64) -> Result<CriterionReport> {
    CRITERIA
        .iter()
        .find(|c| c.id == id)
        .map(|c| run_one(c, seed))
        .ok_or_else(|| Error::usage(format!("no criterion {id}")))
}

fn plane() -> Manifold {
    Arc::new(RiemannianManifold::euclidean(2).renamed("M"))
}

fn half_plane() -> Manifold {
    Arc::new(RiemannianManifold::half_plane())
}

fn small_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    gen::vector(rng, n).iter().map(|v| r * v).collect()
}

fn map_into(rng: &mut ChaCha8Rng, target: Manifold) -> SmoothMap<f64> {
    let on_sphere = target.name() == sphere().name();
    let (center, scale) = if on_sphere { (vec![PI / 2.0, 0.3], 0.4) } else { (vec![0.2, 1.5], 0.3) };
    let lin = small_point(rng, 4, scale);
    gen::random_map(rng, "phi", plane(), target, vec![0.0, 0.0], center, lin, 0.2)
}

fn typechecker_soundness(rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let composition = "\
manifold(M, 2)
manifold(U, 2)
manifold(V, 3)
manifold(W, 4)
map(u, M, U)
map(v, M, V)
map(w, M, W)
field(A, hom(pullback(u, tangent(U)), pullback(v, tangent(V))))
field(B, hom(pullback(v, tangent(V)), pullback(w, tangent(W))))
";
    let level = crate::bundle::Telescope::Mid;
    let good = crate::dsl::check_source(&format!("{composition}pair(B, A, 1)\n"), level);
    let bad = crate::dsl::check_source(&format!("{composition}pair(A, B, 1)\n"), level);
    let mismatch = bad.type_errors.len() == 1 && bad.type_errors[0].kind == crate::bundle::TypeErrorKind::SpaceMismatch;
    let s = exprs::soundness(rng, 1000)?;
    Ok(vec![
        Measurement::at_most("pair(B,A,1) errors", good.diagnostics.len() as f64, 0.0),
        Measurement::at_least("pair(A,B,1) space mismatch", f64::from(u8::from(mismatch)), 1.0),
        Measurement::at_least("well-typed generated", s.generated as f64, 1000.0),
        Measurement::at_most("tag mismatches", s.tag_mismatches.len() as f64, 0.0),
        Measurement::at_most("other evaluation failures", s.other_failures.len() as f64, 0.0),
    ])
}

fn inversion_identity(rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let v = SpaceId::abstract_space("V");
    let tags = vec![AxisTag::vector(v.clone(), 3), AxisTag::covector(v, 3)];
    let (mut closed, mut fd) = (0.0f64, 0.0f64);
    let mut tested = 0;
    while tested < 100 {
        let mut a = gen::vector(rng, 9);
        for i in 0..3 {
            a[i * 4] += 3.0;
        }
        let inv = linalg::inverse(&a, 3)?;
        if linalg::condition_estimate(&a, &inv) > 1e3 {
            continue;
        }
        tested += 1;
        let b = gen::vector(rng, 9);
        let at = TypedTensor::new(tags.clone(), a.clone())?;
        let bt = TypedTensor::new(tags.clone(), b.clone())?;
        let got = inversion_derivative(&at)?.contract(&bt, 2)?;
        let want: Vec<f64> = linalg::matmul(&linalg::matmul(&inv, &b, 3), &inv, 3).iter().map(|x| -x).collect();
        closed = closed.max(max_abs_diff(got.data(), &want));
        let eps = 1e-6;
        let shifted = |s: f64| -> Result<Vec<f64>> {
            let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
            linalg::inverse(&m, 3)
        };
        let (p, m) = (shifted(eps)?, shifted(-eps)?);
        let diff: Vec<f64> = p.iter().zip(&m).map(|(x, y)| (x - y) / (2.0 * eps)).collect();
        fd = fd.max(max_abs_diff(got.data(), &diff));
    }
    Ok(vec![
        Measurement::at_most("vs -A^-1 B A^-1", closed, 1e-10),
        Measurement::at_most("vs finite differences", fd, 1e-5),
    ])
}

fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Result<Permutation> {
    let mut images: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        images.swap(i, rng.gen_range(0..=i));
    }
    Permutation::from_images(images)
}

fn permutation_calculus(rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let s = sphere();
    let variances = [Variance::Vector, Variance::Covector, Variance::Vector];
    let (mut composition, mut parallel) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let x = gen::random_field(rng, s.clone(), gen::base_slots(&s, &variances), 1.0);
        let sigma = random_permutation(rng, 3)?;
        let tau = random_permutation(rng, 3)?;
        let p = gen::sphere_point(rng);
        let twice = x.permute(&sigma)?.permute(&tau)?.at(&p)?;
        let once = x.permute(&sigma.then(&tau))?.at(&p)?;
        composition = composition.max(twice.max_abs_diff(&once)?);
        let lhs = x.permute(&sigma)?.covariant_derivative();
        let rhs = x.covariant_derivative().permute(&sigma.extend(4))?;
        parallel = parallel.max(lhs.at(&p)?.max_abs_diff(&rhs.at(&p)?)?);
    }
    Ok(vec![
        Measurement::at_most("(A^s)^t - A^(st)", composition, 1e-6),
        Measurement::at_most("nabla(X^s) - (nabla X)^s", parallel, 1e-6),
    ])
}

fn pullback_chain_rule(rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let target = if trial % 2 == 0 { sphere() } else { half_plane() };
        let phi = map_into(rng, target.clone());
        let variances = [Variance::Vector, Variance::Covector];
        let e = gen::random_field(rng, target.clone(), gen::base_slots(&target, &variances), 1.0);
        let lhs = e.pullback(&phi)?.covariant_derivative();
        let rhs = e.covariant_derivative().pullback(&phi)?.contract(&tangent_map(&phi), 1)?;
        let x = small_point(rng, 2, 0.3);
        worst = worst.max(lhs.at(&x)?.max_abs_diff(&rhs.at(&x)?)?);
    }
    Ok(vec![Measurement::at_most("max error", worst, 1e-6)])
}

fn hessian_symmetries(rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let swap = Permutation::from_cycles(3, &[vec![2, 3]])?;
    let s = sphere();
    let (mut function, mut map, mut mixed) = (0.0f64, 0.0f64, 0.0f64);
    let h = half_plane();
    let c = gen::vector(rng, 6);
    let f = TensorField::scalar(h.clone(), move |x: &[f64]| {
        Ok(c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] * x[1] + c[5] * x[1].powi(3))
    });
    let d2 = f.covariant_derivative().covariant_derivative();
    for _ in 0..5 {
        let x = gen::half_plane_point(rng);
        let v = d2.components(&x)?;
        function = function.max((v[1] - v[2]).abs());
    }
    for _ in 0..10 {
        let mut lin = small_point(rng, 4, 0.2);
        lin[0] += 1.0;
        lin[3] += 1.0;
        let phi = gen::random_map(rng, "phi", s.clone(), s.clone(), vec![PI / 2.0, 0.0], vec![PI / 2.0, 0.0], lin, 0.1)
            .without_exact_derivatives();
        let x = vec![PI / 2.0 + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let hess = covariant_hessian(&phi);
        let t = hess.at(&x)?;
        map = map.max(t.max_abs_diff(&hess.permute(&swap)?.at(&x)?)?);
        map = map.max(max_abs_diff(t.data(), &covariant_hessian_formula(&phi, &x)?));
    }
    let interval = RiemannianManifold::euclidean(1).renamed("I");
    let domain: Manifold = Arc::new(RiemannianManifold::product(&RiemannianManifold::half_plane(), &interval));
    let lin = small_point(rng, 6, 0.3);
    let psi = gen::random_map(rng, "psi", domain, sphere(), vec![0.0, 1.0, 0.0], vec![PI / 2.0, 0.0], lin, 0.2)
        .without_exact_derivatives();
    let hess = covariant_hessian(&psi);
    for _ in 0..5 {
        let x = vec![rng.gen_range(-0.3..0.3), rng.gen_range(0.8..1.2), rng.gen_range(-0.3..0.3)];
        let c = hess.components(&x)?;
        for a in 0..2 {
            for j in 0..2 {
                mixed = mixed.max((c[(a * 3 + j) * 3 + 2] - c[(a * 3 + 2) * 3 + j]).abs());
            }
        }
    }
    Ok(vec![
        Measurement::at_most("function hessian asymmetry", function, 1e-6),
        Measurement::at_most("map hessian asymmetry", map, 1e-6),
        Measurement::at_most("mixed partial asymmetry", mixed, 1e-5),
    ])
}

fn curvature_identities(rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut pullback = 0.0f64;
    for _ in 0..10 {
        let phi = map_into(rng, sphere());
        let sigma = gen::random_field(rng, plane(), vec![Slot::along(&phi, Variance::Vector)], 1.0);
        let x = small_point(rng, 2, 0.3);
        let (u, w) = (gen::vector(rng, 2), gen::vector(rng, 2));
        let (l, r) = pullback_curvature_check(&phi, &sigma, &x, &u, &w)?;
        pullback = pullback.max(max_abs_diff(&l, &r));
    }
    let (s, h) = (sphere(), half_plane());
    let (mut ks, mut kh) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (p, q) = (gen::sphere_point(rng), gen::half_plane_point(rng));
        let (u, w) = (gen::vector(rng, 2), gen::vector(rng, 2));
        let k = s.sectional_curvature_of(&p, &s.lowered_curvature_at(&p)?, &u, &w)?;
        ks = ks.max((k - 1.0).abs());
        let k = h.sectional_curvature_of(&q, &h.lowered_curvature_at(&q)?, &u, &w)?;
        kh = kh.max((k + 1.0).abs());
    }
    Ok(vec![
        Measurement::at_most("pullback curvature identity", pullback, 1e-5),
        Measurement::at_most("|K_sphere - 1|", ks, 1e-8),
        Measurement::at_most("|K_half-plane + 1|", kh, 1e-8),
    ])
}

fn geodesics(_: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let s = RiemannianManifold::<f64>::sphere2();
    let g = solve_geodesic(&s, &[PI / 2.0, 0.0], &[1.0, 0.0], PI / 2.0 - 0.2, 1e-3)?;
    let meridian = g
        .times
        .iter()
        .zip(&g.curve.values)
        .map(|(t, x)| (x[0] - PI / 2.0 - t).abs().max(x[1].abs()))
        .fold(0.0, f64::max);
    let h = RiemannianManifold::<f64>::half_plane();
    let g = solve_geodesic(&h, &[0.0, 1.0], &[1.0, 0.0], 2.5, 1e-3)?;
    let semicircle =
        g.curve.values.iter().map(|x| ((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs()).fold(0.0, f64::max);
    let sa = sphere();
    let g = solve_geodesic(&sa, &[PI / 2.0 - 0.3, 0.0], &[0.2, 0.9], PI, 1e-3)?;
    let p = kinetic_interval(sa, 0.0, PI, g.times.len() - 1, Boundary::Fixed)?;
    let drift = relative_drift(&hamiltonian(&p, &g.curve)?);
    Ok(vec![
        Measurement::at_most("meridian error", meridian, 1e-5),
        Measurement::at_most("semicircle error", semicircle, 1e-5),
        Measurement::at_most("hamiltonian relative drift", drift, 1e-8),
    ])
}

fn kinetic_interval(s: Manifold, a: f64, b: f64, n: usize, boundary: Boundary) -> Result<EnergyProblem<f64>> {
    EnergyProblem::new(Domain::Interval { a, b, n }, Arc::new(Kinetic::new(line(), s)), boundary)
}

/// `sin⁴(π(t−a)/(b−a))·w(t)`: vanishes to fourth order at both ends.
fn bump_field(p: &EnergyProblem<f64>, a: f64, b: f64, w: fn(f64) -> [f64; 2]) -> Result<VariationField<f64>> {
    VariationField::from_fn(p, move |x: &[f64]| {
        let s = (PI * (x[0] - a) / (b - a)).sin().powi(4);
        let d = w(x[0]);
        Ok(vec![s * d[0], s * d[1]])
    })
}

fn first_variations(_: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let dirs: [fn(f64) -> [f64; 2]; 3] = [|_| [1.0, 0.0], |t| [0.3, (2.0 * t).cos()], |t| [t - 0.5, 0.7]];
    let (a, b) = (0.0, 1.5);
    let p = kinetic_interval(sphere(), a, b, 200, Boundary::Fixed)?;
    let bent = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0))?;
    let mut relative = 0.0f64;
    for w in dirs {
        let fv = first_variation(&p, &bent, &bump_field(&p, a, b, w)?)?;
        relative = relative.max((fv.formula - fv.fd).abs() / fv.fd.abs());
    }
    let (ca, cb) = (-1.0, 1.2);
    let p = kinetic_interval(sphere(), ca, cb, 200, Boundary::Fixed)?;
    let critical = FieldConfiguration::from_map(&p, great_circle(line(), 0.4, 1.0))?;
    let mut at_critical = 0.0f64;
    for w in dirs {
        let fv = first_variation(&p, &critical, &bump_field(&p, ca, cb, w)?)?;
        at_critical = at_critical.max(fv.formula.abs()).max(fv.fd.abs());
    }
    let p = kinetic_interval(sphere(), a, b, 400, Boundary::Free)?;
    let bent = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0))?;
    let field = VariationField::from_fn(&p, |x: &[f64]| {
        let bump = ((x[0] - 0.8) / 0.7).max(0.0).powi(4);
        Ok(vec![0.5 * bump, bump])
    })?;
    let fv = first_variation(&p, &bent, &field)?;
    Ok(vec![
        Measurement::at_most("non-critical relative error", relative, 1e-4),
        Measurement::at_most("|first variation| at geodesic", at_critical, 1e-6),
        Measurement::at_most("free-boundary relative error", (fv.formula - fv.fd).abs() / fv.fd.abs(), 1e-4),
    ])
}

fn residuals(rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let map = great_circle(line(), 0.5, 1.0);
    let max_res = |n: usize| -> Result<f64> {
        let p = kinetic_interval(sphere(), -1.0, 1.2, n, Boundary::Fixed)?;
        let phi = FieldConfiguration::from_map(&p, map.clone())?.sampled();
        Ok(euler_lagrange_residual(&p, &phi)?.max_interior())
    };
    let (r2, r3) = (max_res(64)?, max_res(128)?);
    let ratio = r2 / r3;

    let s = sphere();
    let m = plane();
    let lin = small_point(rng, 4, 0.5);
    let phi_map = gen::random_map(rng, "phi", m.clone(), s.clone(), vec![0.0, 0.0], vec![PI / 2.0, 0.0], lin, 0.2);
    let domain = Domain::Rectangle { x: (-0.5, 0.5, 8), y: (-0.5, 0.5, 8) };
    let p = EnergyProblem::new(domain, Arc::new(Kinetic::new(m, s.clone())), Boundary::Fixed)?;
    let phi = FieldConfiguration::from_map(&p, phi_map.clone())?;
    let res = euler_lagrange_residual(&p, &phi)?;
    let tau = tension_field(&phi_map);
    let mut tension = 0.0f64;
    for (node, r) in &res.interior {
        let lowered = linalg::matvec(&s.metric_at(&phi.values[*node])?, &tau.components(&p.coords(*node))?);
        // the residual is the negated lowered tension
        tension = tension.max((0..2).map(|k| (r[k] + lowered[k]).abs()).fold(0.0, f64::max));
    }
    Ok(vec![
        Measurement::at_most("|refinement ratio - 4|", (ratio - 4.0).abs(), 0.5),
        Measurement::at_most("residual + lowered tension", tension, 1e-5),
    ])
}

fn harmonic_flow(_: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let t2 = Arc::new(RiemannianManifold::flat_torus2());
    let (lo, hi, n) = (0.5, 2.5, 16);
    let domain = Domain::Rectangle { x: (lo, hi, n), y: (lo, hi, n) };
    let p = EnergyProblem::new(domain, Arc::new(Kinetic::new(t2.clone(), t2)), Boundary::Fixed)?;
    let bump = perturbed_torus_identity(lo, hi, 0.1);
    let phi0 = FieldConfiguration::from_values((0..p.nodes()).map(|k| bump(&p.coords(k))).collect());
    let h = (hi - lo) / n as f64;
    let torus = gradient_flow_harmonic(&p, &phi0, 5000, 0.1 * h * h)?;
    let final_tension = torus.history.last().copied().unwrap_or(f64::INFINITY);

    let s = sphere();
    let (x, y) = ([1.2, 0.1], [1.7, 0.9]);
    let n = 64;
    let p = kinetic_interval(s.clone(), 0.0, 1.0, n, Boundary::Fixed)?;
    let values = (0..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            vec![x[0] + t * (y[0] - x[0]) + 0.1 * (PI * t).sin(), x[1] + t * (y[1] - x[1])]
        })
        .collect();
    let h = 1.0 / n as f64;
    let flow = gradient_flow_harmonic(&p, &FieldConfiguration::from_values(values), 15000, 0.4 * h * h)?;
    let v0 = shoot_geodesic(&s, &x, &y, 1.0, 1000)?;
    let exact = solve_geodesic(&s, &x, &v0, 1.0, 1.0 / (16 * n) as f64)?;
    let err = (0..=n).map(|k| max_abs_diff(&flow.field.values[k], &exact.curve.values[16 * k])).fold(0.0, f64::max);
    Ok(vec![
        Measurement::at_most("torus sup tension", final_tension, 1e-6),
        Measurement::at_most("interval flow vs shooting", err, 1e-4),
    ])
}

fn index_setup(len: f64, n: usize) -> Result<(EnergyProblem<f64>, FieldConfiguration<f64>)> {
    let p = kinetic_interval(sphere(), -len / 2.0, len / 2.0, n, Boundary::Fixed)?;
    let phi = FieldConfiguration::from_map(&p, great_circle(line(), 0.3, 1.0))?;
    Ok((p, phi))
}

fn lowest_eigenvalue(len: f64) -> Result<f64> {
    let (p, phi) = index_setup(len, 64)?;
    Ok(index_form_spectrum(&p, &phi, 4)?[0])
}

fn second_variations(_: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut value = 0.0f64;
    let mut signs = Vec::new();
    let mut relative = 0.0f64;
    for len in [PI / 2.0, PI, 1.5 * PI] {
        let (p, phi) = index_setup(len, 64)?;
        let mode = normal_mode(&p, &phi, 1)?;
        let sv = second_variation(&p, &phi, &mode, &mode)?;
        value = value.max((sv.formula - (PI * PI / (2.0 * len) - len / 2.0)).abs());
        signs.push(sv.formula);
        if sv.fd.abs() > 1e-2 {
            relative = relative.max((sv.formula - sv.fd).abs() / sv.fd.abs());
        }
    }
    // sign pattern (+, 0, −): the middle value is zero to the value tolerance
    let pattern = signs[0] > 1e-4 && signs[1].abs() <= 1e-4 && signs[2] < -1e-4;
    // secant iteration on the lowest eigenvalue as a function of length
    let (mut l0, mut l1) = (0.9 * PI, 1.1 * PI);
    let (mut f0, mut f1) = (lowest_eigenvalue(l0)?, lowest_eigenvalue(l1)?);
    for _ in 0..20 {
        if (l1 - l0).abs() < 1e-9 || f1 == f0 {
            break;
        }
        let l2 = l1 - f1 * (l1 - l0) / (f1 - f0);
        (l0, f0) = (l1, f1);
        l1 = l2;
        f1 = lowest_eigenvalue(l1)?;
    }
    let (a, b) = (-0.8, 0.9);
    let p = kinetic_interval(sphere(), a, b, 64, Boundary::Fixed)?;
    let phi = FieldConfiguration::from_map(&p, great_circle(line(), 0.4, 1.3))?;
    let u = bump_field(&p, a, b, |t| [1.0, t])?;
    let v = bump_field(&p, a, b, |t| [t.cos(), -0.5])?;
    let uv = second_variation(&p, &phi, &u, &v)?;
    relative = relative.max((uv.formula - uv.fd).abs() / uv.fd.abs());
    Ok(vec![
        Measurement::at_most("index form vs closed form", value, 1e-4),
        Measurement::at_least("sign pattern (+,0,-)", f64::from(u8::from(pattern)), 1.0),
        Measurement::at_most("|zero crossing - pi|", (l1 - PI).abs(), 1e-3),
        Measurement::at_most("formula vs mixed fd (relative)", relative, 1e-3),
    ])
}

fn degenerate_map(_: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let i: Manifold = Arc::new(RiemannianManifold::euclidean(1).renamed("I"));
    let phi = SmoothMap::constant("phi", i.clone(), sphere(), vec![1.0, 0.5]);
    let sigma =
        TensorField::new(i, vec![Slot::along(&phi, Variance::Vector)], |t: &[f64]| Ok(vec![t[0].cos(), t[0].sin()]));
    let (mut derivative, mut base_motion, mut exact) = (f64::INFINITY, 0.0f64, 0.0f64);
    for t in [0.1, 0.7, 1.9] {
        let d = sigma.covariant_derivative().components(&[t])?;
        let corr = sigma.connection_terms(&[t], &sigma.components(&[t])?)?;
        derivative = derivative.min(max_abs(&d));
        base_motion = base_motion.max(max_abs(&corr));
        exact = exact.max(max_abs_diff(&d, &[-t.sin(), t.cos()]));
    }
    Ok(vec![
        Measurement::at_least("min |pullback derivative|", derivative, 0.5),
        Measurement::at_most("base-motion term", base_motion, 0.0),
        Measurement::at_most("vs fiber derivative", exact, 1e-9),
    ])
}

fn random_type(rng: &mut ChaCha8Rng, depth: usize) -> BundleType {
    let atoms = [
        BundleType::tangent("M"),
        BundleType::cotangent("M"),
        BundleType::line("M"),
        BundleType::pullback("f", BundleType::tangent("N")),
        BundleType::pullback("f", BundleType::cotangent("N")),
    ];
    if depth == 0 || rng.gen_bool(0.3) {
        return atoms[rng.gen_range(0..atoms.len())].clone();
    }
    match rng.gen_range(0..4) {
        0 => BundleType::tensor(random_type(rng, depth - 1), random_type(rng, depth - 1)),
        1 => BundleType::sum(random_type(rng, depth - 1), random_type(rng, depth - 1)),
        2 => BundleType::dual(random_type(rng, depth - 1)),
        _ => BundleType::pullback("id_M", random_type(rng, depth - 1)),
    }
}

fn type_normalization(rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut env = Environment::new();
    let bundle = |r: std::result::Result<(), crate::bundle::BundleError>| r.map_err(|e| Error::usage(e.message));
    bundle(env.declare_manifold("M", 2))?;
    bundle(env.declare_manifold("N", 3))?;
    bundle(env.declare_map("f", "M", "N"))?;
    let (mut not_idempotent, mut not_involutive, mut rank_changed) = (0usize, 0usize, 0usize);
    for _ in 0..500 {
        let t = random_type(rng, 4);
        let n = normalize(&t, &env).map_err(|e| Error::usage(e.message))?;
        if normalize(&n, &env).ok().as_ref() != Some(&n) {
            not_idempotent += 1;
        }
        if normalize(&BundleType::dual(BundleType::dual(t.clone())), &env).ok().as_ref() != Some(&n) {
            not_involutive += 1;
        }
        if t.rank(&env).ok() != n.rank(&env).ok() {
            rank_changed += 1;
        }
    }
    Ok(vec![
        Measurement::at_most("normalize not idempotent", not_idempotent as f64, 0.0),
        Measurement::at_most("double dual not identity", not_involutive as f64, 0.0),
        Measurement::at_most("normalization changed rank", rank_changed as f64, 0.0),
    ])
}
