//! Random well-typed expressions over a fixed two-manifold environment, with
//! numeric bindings for every declared symbol.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bundle::{BundleType, Telescope};
use crate::dsl::ast::render_cycles;
use crate::dsl::{check_source, parse, EvalContext, ExprKind, Symbol, TypedExpr};
use crate::error::{Error, Result};
use crate::manifolds::RiemannianManifold;
use crate::tensor::{Permutation, TypedTensor};

use super::gen;

/// Declarations shared by every generated expression. `M` is the round
/// sphere, `N` the hyperbolic half-plane, `f: M → N` a random smooth map.
pub const ENVIRONMENT: &str = "\
manifold(M, 2)
manifold(N, 2)
map(f, M, N)
metric(g, M)
metric(h, N)
field(X, tangent(M))
field(alpha, cotangent(M))
field(A, hom(tangent(M), tangent(M)))
field(Y, pullback(f, tangent(N)))
field(beta, pullback(f, cotangent(N)))
field(Z, tangent(N))
field(S, otimes(cotangent(N), cotangent(N)))
";

const ATOMS: &[&str] = &["X", "alpha", "A", "Y", "beta", "Z", "S", "g", "h", "id_M", "id_N", "dmap(f)"];

/// Context with the environment declared and all symbols bound to random
/// analytic data.
pub fn context(rng: &mut impl Rng) -> Result<EvalContext<f64>> {
    let report = check_source(ENVIRONMENT, Telescope::Mid);
    if !report.ok() {
        return Err(Error::usage(format!("environment does not check: {:?}", report.diagnostics)));
    }
    let m = Arc::new(RiemannianManifold::sphere2().renamed("M"));
    let n = Arc::new(RiemannianManifold::half_plane().renamed("N"));
    let linear: Vec<f64> = gen::vector(rng, 4).iter().map(|v| 0.2 * v).collect();
    let f = gen::random_map(rng, "f", m.clone(), n.clone(), vec![1.5, 0.0], vec![0.0, 2.0], linear, 0.1);
    let mut ctx = EvalContext::new(report.checker)
        .with_geometry("M", (*m).clone())?
        .with_geometry("N", (*n).clone())?
        .bind_map("f", f)?;
    for name in ["X", "alpha", "A", "Y", "beta", "Z", "S"] {
        let ty = match ctx.checker().symbols.get(name) {
            Some(Symbol::Field(t)) => t.clone(),
            _ => unreachable!("declared above"),
        };
        let slots = ctx.slots_for(&ty)?;
        let base = if ty.base_space(&ctx.checker().env).map_err(|e| Error::usage(e.message))?.as_single() == Some("N") {
            ctx.geometry("N")?
        } else {
            ctx.geometry("M")?
        };
        let field = gen::random_field(rng, base, slots, 0.5);
        ctx = ctx.bind_field(name, field)?;
    }
    Ok(ctx)
}

/// A point in the chart of the manifold `base`.
pub fn point_on(rng: &mut impl Rng, base: &str) -> Vec<f64> {
    match base {
        "N" => gen::half_plane_point(rng),
        _ => gen::sphere_point(rng),
    }
}

/// Name of the single base of a type, if it has one.
pub fn base_name(ctx: &EvalContext<f64>, ty: &BundleType) -> Option<String> {
    ty.base_space(&ctx.checker().env).ok()?.as_single().map(str::to_string)
}

fn random_cycles(rng: &mut impl Rng, rank: usize) -> Vec<Vec<usize>> {
    let mut images: Vec<usize> = (0..rank).collect();
    images.shuffle(rng);
    Permutation::from_images(images).map(|p| p.cycles()).unwrap_or_default()
}

fn cov_depth(e: &TypedExpr) -> usize {
    let own = usize::from(matches!(e.expr.kind, ExprKind::Cov(_)));
    own + e.children.iter().map(cov_depth).max().unwrap_or(0)
}

/// `count` distinct compound expressions that typecheck in [`ENVIRONMENT`]
/// and denote sections over a single base (so they can be evaluated).
/// Candidates are grown bottom-up from the atoms and kept when they check;
/// ranks stay at most four and covariant derivatives nest at most twice.
pub fn well_typed(rng: &mut impl Rng, ctx: &EvalContext<f64>, count: usize) -> Vec<TypedExpr> {
    let checker = ctx.checker();
    let mut pool: Vec<TypedExpr> =
        ATOMS.iter().map(|s| checker.check(&parse(s).expect("atoms parse")).expect("atoms check")).collect();
    let mut seen: HashSet<String> = ATOMS.iter().map(|s| s.to_string()).collect();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < 200 * count.max(1) {
        attempts += 1;
        let a = pool.choose(rng).expect("nonempty").clone();
        let b = pool.choose(rng).expect("nonempty").clone();
        let src = match rng.gen_range(0..9) {
            0 | 1 => format!("pair({}, {}, {})", a.expr, b.expr, rng.gen_range(1..=2)),
            2 => format!("trace({})", a.expr),
            3 => {
                let rank = a.ty.factors().len();
                if rank < 2 {
                    continue;
                }
                format!("permute({}, {})", a.expr, render_cycles(&random_cycles(rng, rank)))
            }
            4 => format!("otimes({}, {})", a.expr, b.expr),
            5 => format!("boxtimes({}, {})", a.expr, b.expr),
            6 => format!("pullback(f, {})", a.expr),
            7 => format!("cov({})", a.expr),
            _ => format!("dual({})", a.expr),
        };
        if !seen.insert(src.clone()) {
            continue;
        }
        let Ok(expr) = parse(&src) else { continue };
        let Ok(typed) = checker.check(&expr) else { continue };
        if typed.ty.factors().len() > 4 || cov_depth(&typed) > 2 || base_name(ctx, &typed.ty).is_none() {
            continue;
        }
        if ctx.slots_for(&typed.ty).is_err() {
            continue;
        }
        pool.push(typed.clone());
        out.push(typed);
    }
    out
}

/// Evaluates at a random point of the expression's base.
pub fn evaluate_somewhere(rng: &mut impl Rng, ctx: &EvalContext<f64>, e: &TypedExpr) -> Result<TypedTensor<f64>> {
    let base = base_name(ctx, &e.ty).ok_or_else(|| Error::usage("expression has no single base"))?;
    let x = point_on(rng, &base);
    ctx.evaluate(e, &x)
}

/// Outcome of the soundness sweep.
#[derive(Debug, Clone, Default)]
pub struct Soundness {
    pub generated: usize,
    pub evaluated: usize,
    pub tag_mismatches: Vec<String>,
    pub other_failures: Vec<String>,
}

/// Generates and evaluates `count` well-typed expressions.
pub fn soundness(rng: &mut impl Rng, count: usize) -> Result<Soundness> {
    let ctx = context(rng)?;
    let exprs = well_typed(rng, &ctx, count);
    let mut out = Soundness { generated: exprs.len(), ..Default::default() };
    for e in &exprs {
        match evaluate_somewhere(rng, &ctx, e) {
            Ok(_) => out.evaluated += 1,
            Err(err @ Error::TagMismatch { .. }) => out.tag_mismatches.push(format!("{}: {err}", e.expr)),
            Err(err) => out.other_failures.push(format!("{}: {err}", e.expr)),
        }
    }
    Ok(out)
}
