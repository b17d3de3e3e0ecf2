use std::time::Instant;

use bundletc::bundle::{BundleType, Telescope, TypeErrorKind};
use bundletc::covariant::{Slot, TensorField};
use bundletc::dsl::{check_source, parse, parse_program, CheckReport, EvalContext, ExprKind};
use bundletc::manifolds::RiemannianManifold;
use bundletc::verify::exprs;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn checked(src: &str) -> CheckReport {
    check_source(src, Telescope::Mid)
}

#[test]
fn parses_tangent_map_pairing() {
    let e = parse("pair(dmap(phi), X, 1)").unwrap();
    let ExprKind::Pair(a, b, 1) = &e.kind else { panic!("{e:?}") };
    assert!(matches!(&a.kind, ExprKind::Dmap(g) if g.name == "phi"));
    assert!(matches!(&b.kind, ExprKind::Var(v) if v == "X"));
    assert_eq!((e.span.start, e.span.end), (0, 21));
}

#[test]
fn parses_transposition() {
    let e = parse("permute(A, (2 3))").unwrap();
    let ExprKind::Permute(a, cycles) = &e.kind else { panic!("{e:?}") };
    assert!(matches!(&a.kind, ExprKind::Var(v) if v == "A"));
    assert_eq!(cycles, &vec![vec![2, 3]]);
}

#[test]
fn unbalanced_input_reports_end_of_input() {
    let err = parse("pair(A").unwrap_err();
    assert_eq!(err.span.start, 6);
    assert_eq!(err.expected, vec!["','".to_string(), "')'".to_string()]);
    assert!(err.message.contains("end of input"), "{}", err.message);
}

#[test]
fn parse_errors_recover_at_next_line() {
    let (program, errors) = parse_program("manifold(M, 2)\npair(A\nfield(X, tangent(M))\n");
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].span.line, 3);
    assert_eq!(program.forms.len(), 2);
}

const COMPOSITION: &str = "\
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

#[test]
fn composition_in_the_right_order_checks() {
    let r = checked(&format!("{COMPOSITION}pair(B, A, 1)\n"));
    assert!(r.ok(), "{:?}", r.diagnostics);
    let expected = BundleType::tensor(
        BundleType::pullback("w", BundleType::tangent("W")),
        BundleType::pullback("u", BundleType::cotangent("U")),
    );
    assert_eq!(r.typed[0].ty, expected);
}

#[test]
fn composition_in_the_wrong_order_is_a_space_mismatch() {
    let r = checked(&format!("{COMPOSITION}pair(A, B, 1)\n"));
    assert_eq!(r.type_errors.len(), 1);
    let e = &r.type_errors[0];
    assert_eq!(e.kind, TypeErrorKind::SpaceMismatch);
    assert_eq!(e.span.line, 10);
    let msg = e.render(&r.checker.env, Telescope::Mid);
    assert!(msg.contains("expected u*TU, found w*TW"), "{msg}");
    assert_eq!(r.diagnostics[0].render("comp.btc"), format!("comp.btc:10:1: SpaceMismatch: {msg}"));
}

#[test]
fn metric_against_covector_is_a_valence_error() {
    let src = "manifold(V, 3)\nmetric(g, V)\nfield(alpha, cotangent(V))\npair(g, alpha, 1)\n";
    let r = checked(src);
    assert_eq!(r.type_errors.len(), 1);
    assert_eq!(r.type_errors[0].kind, TypeErrorKind::ValenceError);
}

#[test]
fn unknown_symbols_are_reported() {
    let r = checked("manifold(V, 3)\ntrace(Q)\n");
    assert_eq!(r.type_errors[0].kind, TypeErrorKind::UnknownSymbol);
    assert_eq!((r.type_errors[0].span.line, r.type_errors[0].span.col), (2, 7));
}

#[test]
fn telescope_levels_change_decoration() {
    let r = checked(&format!("{COMPOSITION}pair(A, B, 1)\n"));
    let e = &r.type_errors[0];
    let high = e.render(&r.checker.env, Telescope::High);
    let low = e.render(&r.checker.env, Telescope::Low);
    assert!(high.contains("expected u*T(U:2), found w*T(W:4)"), "{high}");
    assert!(low.contains("expected TU, found TW"), "{low}");
}

fn flat_context(src: &str) -> (CheckReport, EvalContext<f64>) {
    let r = checked(src);
    assert!(r.ok(), "{:?}", r.diagnostics);
    let ctx = EvalContext::new(r.checker.clone());
    (r, ctx)
}

#[test]
fn trace_of_identity_is_dimension() {
    let (r, ctx) = flat_context("manifold(V, 3)\ntrace(id_V)\n");
    let v = ctx.evaluate(&r.typed[0], &[0.1, 0.2, 0.3]).unwrap();
    assert_eq!(v.value().unwrap(), 3.0);
}

#[test]
fn dual_basis_pairing_vanishes() {
    let (r, ctx) =
        flat_context("manifold(V, 2)\nfield(alpha, cotangent(V))\nfield(v, tangent(V))\npair(alpha, v, 1)\n");
    let base = ctx.geometry("V").unwrap();
    let alpha = TensorField::constant(base.clone(), vec![Slot::covector(base.clone())], vec![1.0, 0.0]).unwrap();
    let v = TensorField::constant(base.clone(), vec![Slot::vector(base.clone())], vec![0.0, 1.0]).unwrap();
    let ctx = ctx.bind_field("alpha", alpha).unwrap().bind_field("v", v).unwrap();
    assert_eq!(ctx.evaluate(&r.typed[0], &[0.0, 0.0]).unwrap().value().unwrap(), 0.0);
}

#[test]
fn double_contraction_gives_frobenius_norm() {
    let src = "manifold(V, 3)
field(A, otimes(cotangent(V), cotangent(V)))
field(k, otimes(otimes(tangent(V), tangent(V)), otimes(tangent(V), tangent(V))))
pair(pair(A, k, 2), A, 2)
";
    let (r, ctx) = flat_context(src);
    let base = ctx.geometry("V").unwrap();
    let a: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64).collect();
    let mut k = vec![0.0; 81];
    for i in 0..3 {
        for j in 0..3 {
            k[((i * 3 + j) * 3 + i) * 3 + j] = 1.0;
        }
    }
    let cov = || Slot::covector(base.clone());
    let vec = || Slot::vector(base.clone());
    let ctx = ctx
        .bind_field("A", TensorField::constant(base.clone(), vec![cov(), cov()], a.clone()).unwrap())
        .unwrap()
        .bind_field("k", TensorField::constant(base.clone(), vec![vec(), vec(), vec(), vec()], k).unwrap())
        .unwrap();
    let got = ctx.evaluate(&r.typed[0], &[0.0; 3]).unwrap().value().unwrap();
    let want: f64 = a.iter().map(|x| x * x).sum();
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
}

#[test]
fn bindings_must_match_declared_types() {
    let (_, ctx) = flat_context("manifold(V, 2)\nfield(v, tangent(V))\n");
    let base = ctx.geometry("V").unwrap();
    let wrong = TensorField::constant(base.clone(), vec![Slot::covector(base)], vec![1.0, 0.0]).unwrap();
    assert!(ctx.bind_field("v", wrong).is_err());
}

#[test]
fn covariant_derivative_of_metric_vanishes_on_sphere() {
    let (r, ctx) = flat_context("manifold(S, 2)\nmetric(g, S)\ncov(g)\n");
    let ctx = ctx.with_geometry("S", RiemannianManifold::sphere2()).unwrap();
    let v = ctx.evaluate(&r.typed[0], &[1.0, 0.4]).unwrap();
    assert!(v.max_abs() < 1e-7, "{}", v.max_abs());
}

#[test]
fn random_well_typed_expressions_never_mismatch_tags() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = exprs::soundness(&mut rng, 1000).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(s.generated, 1000);
    assert!(s.tag_mismatches.is_empty(), "{:?}", &s.tag_mismatches[..s.tag_mismatches.len().min(5)]);
    assert!(s.other_failures.is_empty(), "{:?}", &s.other_failures[..s.other_failures.len().min(5)]);
    assert!(elapsed < 5.0 || cfg!(debug_assertions), "took {elapsed:.2}s");
}

#[test]
fn evaluated_tags_follow_the_static_type() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ctx = exprs::context(&mut rng).unwrap();
    for e in exprs::well_typed(&mut rng, &ctx, 50) {
        let base = exprs::base_name(&ctx, &e.ty).unwrap();
        let x = exprs::point_on(&mut rng, &base);
        let v = ctx.evaluate(&e, &x).unwrap();
        assert_eq!(v.tags(), &ctx.expected_tags(&e, &x).unwrap()[..], "{}", e.expr);
    }
}

#[test]
fn products_over_different_bases_do_not_evaluate() {
    let (r, ctx) = flat_context("manifold(M, 2)\nmanifold(N, 1)\notimes(id_M, id_N)\n");
    assert!(ctx.evaluate(&r.typed[0], &[0.0, 0.0]).is_err());
}

fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof!["[a-z][a-z0-9_]{0,4}".prop_map(|s| s), "[a-z]{1,3}".prop_map(|s| format!("dmap({s})")),];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, n)| format!("pair({a}, {b}, {n})")),
            inner.clone().prop_map(|a| format!("trace({a})")),
            (inner.clone(), prop::collection::vec(1usize..5, 0..4)).prop_map(|(a, c)| {
                let cycle = if c.is_empty() {
                    "()".to_string()
                } else {
                    format!("({})", c.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" "))
                };
                format!("permute({a}, {cycle})")
            }),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("otimes({a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("boxtimes({a}, {b})")),
            inner.clone().prop_map(|a| format!("pullback(f, {a})")),
            inner.clone().prop_map(|a| format!("cov({a})")),
            inner.prop_map(|a| format!("dual({a})")),
        ]
    })
}

proptest! {
    #[test]
    fn render_then_parse_is_identity(src in arb_expr()) {
        let mut e = parse(&src).unwrap();
        let mut again = parse(&e.to_string()).unwrap();
        e.erase_spans();
        again.erase_spans();
        prop_assert_eq!(e, again);
    }

    #[test]
    fn parse_errors_lie_within_the_input(src in "[a-z(), 0-9#\n]{0,40}") {
        if let Err(e) = parse(&src) {
            prop_assert!(e.span.start <= src.len() && e.span.end <= src.len());
            prop_assert!(e.span.start <= e.span.end);
        }
    }

    #[test]
    fn type_errors_lie_within_the_input(src in arb_expr()) {
        let full = format!("{COMPOSITION}{src}\n");
        let r = checked(&full);
        for e in &r.type_errors {
            prop_assert!(e.span.start <= e.span.end && e.span.end <= full.len());
        }
        for d in &r.diagnostics {
            prop_assert!(d.span.line >= 1 && d.span.line <= full.lines().count() + 1);
        }
    }

    #[test]
    fn well_typed_roots_keep_their_type_after_round_trip(seed in 0u64..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ctx = exprs::context(&mut rng).unwrap();
        for e in exprs::well_typed(&mut rng, &ctx, 5) {
            let again = ctx.checker().check(&parse(&e.expr.to_string()).unwrap()).unwrap();
            prop_assert_eq!(&again.ty, &e.ty);
        }
    }
}
