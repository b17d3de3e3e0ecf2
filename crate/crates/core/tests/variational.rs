use std::f64::consts::PI;
use std::sync::Arc;

use bundletc::covariant::tension_field;
use bundletc::manifolds::{RiemannianManifold, SmoothMap};
use bundletc::variational::*;
use bundletc::verify::fixtures::{bent_equator, great_circle, line, perturbed_torus_identity, sphere};
use bundletc::Error;

fn kinetic(m: Arc<RiemannianManifold<f64>>, s: Arc<RiemannianManifold<f64>>) -> Arc<dyn Lagrangian<f64>> {
    Arc::new(Kinetic::new(m, s))
}

fn interval_problem(
    s: Arc<RiemannianManifold<f64>>,
    a: f64,
    b: f64,
    n: usize,
    boundary: Boundary,
) -> EnergyProblem<f64> {
    EnergyProblem::new(Domain::Interval { a, b, n }, kinetic(line(), s), boundary).unwrap()
}

/// `sin⁴(π(t−a)/(b−a))·w(t)` with a smooth direction `w`. The fourth-order
/// zero at the ends keeps trapezoid error of the integrated-by-parts form at
/// O(h⁴).
fn bump_field(p: &EnergyProblem<f64>, a: f64, b: f64, w: fn(f64) -> [f64; 2]) -> VariationField<f64> {
    VariationField::from_fn(p, move |x: &[f64]| {
        let s = (PI * (x[0] - a) / (b - a)).sin().powi(4);
        let d = w(x[0]);
        Ok(vec![s * d[0], s * d[1]])
    })
    .unwrap()
}

#[test]
fn straight_line_energy_is_exact() {
    let e2 = Arc::new(RiemannianManifold::euclidean(2));
    let p = interval_problem(e2.clone(), 0.0, 1.0, 10, Boundary::Fixed);
    let c = 1.7;
    let map =
        SmoothMap::new("line", line(), e2, move |t: &[f64]| vec![c * t[0], 0.0]).with_jacobian(move |_| vec![c, 0.0]);
    let phi = FieldConfiguration::from_map(&p, map).unwrap();
    assert!((energy(&p, &phi).unwrap() - 0.5 * c * c).abs() < 1e-12);
    // stencils are exact on linear data as well
    assert!((energy(&p, &phi.sampled()).unwrap() - 0.5 * c * c).abs() < 1e-12);
}

#[test]
fn sphere_box_energy_is_the_area() {
    let s = sphere();
    let (lo, hi) = (0.2, PI - 0.2);
    let domain = Domain::Rectangle { x: (lo, hi, 400), y: (0.0, 2.0 * PI - 0.2, 16) };
    let p = EnergyProblem::new(domain, kinetic(s.clone(), s.clone()), Boundary::Fixed).unwrap();
    let phi = FieldConfiguration::from_map(&p, SmoothMap::identity(s)).unwrap();
    let exact = 2.0 * (0.2f64).cos() * (2.0 * PI - 0.2);
    let e = energy(&p, &phi).unwrap();
    assert!((e - exact).abs() < 1e-4, "energy {e} vs area {exact}");
}

#[test]
fn energy_refinement_is_second_order() {
    let s = sphere();
    let energy_at = |n: usize| {
        let p = interval_problem(s.clone(), 0.0, 1.0, n, Boundary::Fixed);
        let phi = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
        energy(&p, &phi).unwrap()
    };
    let (e1, e2, e4) = (energy_at(16), energy_at(32), energy_at(64));
    let ratio = (e1 - e2) / (e2 - e4);
    assert!((ratio - 4.0).abs() < 0.3, "refinement ratio {ratio}");
}

#[test]
fn first_variation_vanishes_on_critical_geodesics() {
    let (a, b) = (-1.0, 1.2);
    let p = interval_problem(sphere(), a, b, 200, Boundary::Fixed);
    let phi = FieldConfiguration::from_map(&p, great_circle(line(), 0.4, 1.0)).unwrap();
    let dirs: [fn(f64) -> [f64; 2]; 3] = [|_| [1.0, 0.0], |t| [0.3, t.cos()], |t| [t * t, -0.5 * t]];
    for w in dirs {
        let field = bump_field(&p, a, b, w);
        let fv = first_variation(&p, &phi, &field).unwrap();
        assert!(fv.formula.abs() < 1e-6, "formula {:e}", fv.formula);
        assert!(fv.fd.abs() < 1e-6, "fd {:e}", fv.fd);
    }
}

#[test]
fn first_variation_matches_fd_on_bent_curves() {
    let (a, b) = (0.0, 1.5);
    let p = interval_problem(sphere(), a, b, 200, Boundary::Fixed);
    let phi = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
    let dirs: [fn(f64) -> [f64; 2]; 3] = [|_| [1.0, 0.0], |t| [0.3, (2.0 * t).cos()], |t| [t - 0.5, 0.7]];
    for w in dirs {
        let field = bump_field(&p, a, b, w);
        let fv = first_variation(&p, &phi, &field).unwrap();
        let rel = (fv.formula - fv.fd).abs() / fv.fd.abs();
        assert!(rel < 1e-4, "formula {} fd {} rel {rel:e}", fv.formula, fv.fd);
    }
}

#[test]
fn free_boundary_term_reproduces_fd() {
    let (a, b) = (0.0, 1.5);
    let p = interval_problem(sphere(), a, b, 400, Boundary::Free);
    let phi = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
    // supported near the right endpoint, nonzero there
    let field = VariationField::from_fn(&p, move |x: &[f64]| {
        let s = ((x[0] - 0.8) / 0.7).max(0.0);
        let bump = s * s * s * s;
        Ok(vec![0.5 * bump, bump])
    })
    .unwrap();
    let fv = first_variation(&p, &phi, &field).unwrap();
    let interior_only = {
        let fixed = EnergyProblem { boundary: Boundary::Fixed, ..p.clone() };
        let mut inner = field.clone();
        let last = inner.values.len() - 1;
        inner.values[last] = vec![0.0, 0.0];
        inner.analytic = None;
        first_variation_formula(&fixed, &phi, &inner).unwrap()
    };
    let rel = (fv.formula - fv.fd).abs() / fv.fd.abs();
    assert!(rel < 1e-4, "formula {} fd {} rel {rel:e}", fv.formula, fv.fd);
    // the boundary integral carries a visible share of the value
    assert!((fv.formula - interior_only).abs() > 1e-2 * fv.fd.abs());
}

#[test]
fn fixed_problems_reject_boundary_variations() {
    let p = interval_problem(sphere(), 0.0, 1.0, 16, Boundary::Fixed);
    let phi = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
    let field = VariationField::from_fn(&p, |_| Ok(vec![1.0, 0.0])).unwrap();
    assert!(matches!(first_variation(&p, &phi, &field), Err(Error::NotAdmissible { .. })));
}

#[test]
fn integration_by_parts_holds_discretely() {
    let (a, b) = (0.0, 1.5);
    for boundary in [Boundary::Fixed, Boundary::Free] {
        let p = interval_problem(sphere(), a, b, 400, boundary);
        let phi = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
        let field = if boundary == Boundary::Fixed {
            bump_field(&p, a, b, |t| [t.sin(), 1.0])
        } else {
            VariationField::from_fn(&p, |x: &[f64]| Ok(vec![x[0].sin(), 1.0 + x[0]])).unwrap()
        };
        let weak = first_variation_weak(&p, &phi, &field).unwrap();
        let strong = first_variation_formula(&p, &phi, &field).unwrap();
        assert!((weak - strong).abs() < 1e-4 * weak.abs().max(1.0), "{weak} vs {strong}");
    }
}

#[test]
fn first_variation_is_linear() {
    let (a, b) = (0.0, 1.5);
    let p = interval_problem(sphere(), a, b, 64, Boundary::Fixed);
    let phi = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
    let u = bump_field(&p, a, b, |t| [1.0, t]);
    let v = bump_field(&p, a, b, |t| [t.cos(), -1.0]);
    let (al, be) = (0.7, -1.3);
    let w = u.combine(al, &v, be);
    let fu = first_variation_formula(&p, &phi, &u).unwrap();
    let fv = first_variation_formula(&p, &phi, &v).unwrap();
    let fw = first_variation_formula(&p, &phi, &w).unwrap();
    assert!((fw - (al * fu + be * fv)).abs() < 1e-8);
}

#[test]
fn variation_commutes_with_material_derivative() {
    let (a, b) = (0.0, 1.5);
    let p = interval_problem(sphere(), a, b, 32, Boundary::Fixed);
    let phi = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
    let field = bump_field(&p, a, b, |t| [t.sin(), 1.0]);
    for node in [3, 11, 20, 29] {
        let lhs = material_variation(&p, &phi, &field, node).unwrap();
        let rhs = field.covariant_derivative(&p, &phi, node).unwrap();
        let err = bundletc::scalar::max_abs_diff(&lhs, &rhs);
        assert!(err < 1e-5, "node {node}: {lhs:?} vs {rhs:?}");
    }
}

#[test]
fn kinetic_residual_is_lowered_geodesic_defect() {
    let p = interval_problem(sphere(), 0.0, 1.5, 32, Boundary::Fixed);
    let map = bent_equator(line(), 0.3, 2.0);
    let phi = FieldConfiguration::from_map(&p, map.clone()).unwrap();
    let res = euler_lagrange_residual(&p, &phi).unwrap();
    let s = sphere();
    for (node, r) in &res.interior {
        let t = p.coords(*node);
        let (x, v, acc) = (map.eval(&t).unwrap(), map.jacobian_at(&t).unwrap(), map.hessian_at(&t).unwrap());
        let geo = s.geodesic_acceleration(&x, &v).unwrap();
        let defect: Vec<f64> = (0..2).map(|k| acc[k] - geo[k]).collect();
        let lowered = bundletc::linalg::matvec(&s.metric_at(&x).unwrap(), &defect);
        // the residual is minus the lowered defect h(φ'' + Γ(φ', φ'))
        for k in 0..2 {
            assert!((r[k] + lowered[k]).abs() < 1e-6, "node {node}: {r:?} vs {lowered:?}");
        }
    }
}

#[test]
fn residual_converges_at_second_order_on_great_circles() {
    let (a, b) = (-1.0, 1.2);
    let map = great_circle(line(), 0.5, 1.0);
    let max_res = |n: usize| {
        let p = interval_problem(sphere(), a, b, n, Boundary::Fixed);
        let phi = FieldConfiguration::from_map(&p, map.clone()).unwrap().sampled();
        euler_lagrange_residual(&p, &phi).unwrap().max_interior()
    };
    let (r1, r2, r3) = (max_res(32), max_res(64), max_res(128));
    let (q1, q2) = (r1 / r2, r2 / r3);
    assert!((q2 - 4.0).abs() < 0.5, "ratios {q1} {q2} from {r1:e} {r2:e} {r3:e}");
}

#[test]
fn harmonic_residual_is_minus_lowered_tension() {
    let s = sphere();
    let m = Arc::new(RiemannianManifold::euclidean(2).renamed("M"));
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    let phi_map = bundletc::verify::gen::random_map(
        &mut rng,
        "phi",
        m.clone(),
        s.clone(),
        vec![0.0, 0.0],
        vec![PI / 2.0, 0.0],
        vec![0.4, 0.1, -0.2, 0.5],
        0.2,
    );
    let domain = Domain::Rectangle { x: (-0.5, 0.5, 8), y: (-0.5, 0.5, 8) };
    let p = EnergyProblem::new(domain, kinetic(m, s.clone()), Boundary::Fixed).unwrap();
    let phi = FieldConfiguration::from_map(&p, phi_map.clone()).unwrap();
    let res = euler_lagrange_residual(&p, &phi).unwrap();
    let tau = tension_field(&phi_map);
    for (node, r) in &res.interior {
        let x = p.coords(*node);
        let lowered = bundletc::linalg::matvec(&s.metric_at(&phi.values[*node]).unwrap(), &tau.components(&x).unwrap());
        for k in 0..2 {
            assert!((r[k] + lowered[k]).abs() < 1e-5, "{r:?} vs {lowered:?}");
        }
    }
}

#[test]
fn geodesics_match_closed_forms() {
    let e = RiemannianManifold::<f64>::euclidean(2);
    let g = solve_geodesic(&e, &[0.1, -0.2], &[0.3, 0.4], 2.0, 1e-3).unwrap();
    for (t, x) in g.times.iter().zip(&g.curve.values) {
        assert!((x[0] - 0.1 - 0.3 * t).abs() < 1e-12 && (x[1] + 0.2 - 0.4 * t).abs() < 1e-12);
    }

    let s = RiemannianManifold::<f64>::sphere2();
    let t_end = PI / 2.0 - 0.2;
    let g = solve_geodesic(&s, &[PI / 2.0, 0.0], &[1.0, 0.0], t_end, 1e-3).unwrap();
    let err = g
        .times
        .iter()
        .zip(&g.curve.values)
        .map(|(t, x)| (x[0] - PI / 2.0 - t).abs().max(x[1].abs()))
        .fold(0.0, f64::max);
    assert!(err < 1e-5, "meridian error {err:e}");

    let h = RiemannianManifold::<f64>::half_plane();
    let g = solve_geodesic(&h, &[0.0, 1.0], &[1.0, 0.0], 2.5, 1e-3).unwrap();
    let err = g.curve.values.iter().map(|x| ((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs()).fold(0.0, f64::max);
    assert!(err < 1e-5, "semicircle error {err:e}");
}

#[test]
fn chart_exit_is_reported() {
    let s = RiemannianManifold::<f64>::sphere2();
    let r = solve_geodesic(&s, &[PI / 2.0, 0.0], &[1.0, 0.0], 3.0, 1e-3);
    match r {
        Err(Error::ChartExit { time, .. }) => assert!((time - PI / 2.0).abs() < 1e-2, "exit at {time}"),
        other => panic!("expected a chart exit, got {other:?}"),
    }
}

#[test]
fn hamiltonian_is_conserved_on_geodesics_only() {
    let s = sphere();
    let g = solve_geodesic(&s, &[PI / 2.0 - 0.3, 0.0], &[0.2, 0.9], PI, 1e-3).unwrap();
    let n = g.times.len() - 1;
    let p = interval_problem(s.clone(), 0.0, PI, n, Boundary::Fixed);
    let h = hamiltonian(&p, &g.curve).unwrap();
    let speed2 = 0.04 + 0.81 * (PI / 2.0 - 0.3f64).sin().powi(2);
    assert!((h[0] - 0.5 * speed2).abs() < 1e-12);
    assert!(relative_drift(&h) < 1e-8, "drift {:e}", relative_drift(&h));

    let p = interval_problem(s, 0.0, 1.5, 64, Boundary::Fixed);
    let bent = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
    assert!(relative_drift(&hamiltonian(&p, &bent).unwrap()) > 1e-3);
}

#[test]
fn hamiltonian_requires_an_interval() {
    let s = sphere();
    let domain = Domain::Rectangle { x: (1.0, 2.0, 8), y: (0.0, 1.0, 8) };
    let p = EnergyProblem::new(domain, kinetic(s.clone(), s.clone()), Boundary::Fixed).unwrap();
    let phi = FieldConfiguration::from_map(&p, SmoothMap::identity(s)).unwrap();
    assert!(matches!(hamiltonian(&p, &phi), Err(Error::DomainNotInterval)));
}

#[test]
fn straight_line_hamiltonian_is_half_speed_squared() {
    let e = Arc::new(RiemannianManifold::euclidean(2));
    let g = solve_geodesic(&e, &[0.0, 0.0], &[0.6, -0.8], 1.0, 0.01).unwrap();
    let p = interval_problem(e, 0.0, 1.0, 100, Boundary::Fixed);
    assert!(hamiltonian(&p, &g.curve).unwrap().iter().all(|h| (h - 0.5).abs() < 1e-15));
}

fn index_problem(len: f64, n: usize) -> (EnergyProblem<f64>, FieldConfiguration<f64>) {
    let p = interval_problem(sphere(), -len / 2.0, len / 2.0, n, Boundary::Fixed);
    let phi = FieldConfiguration::from_map(&p, great_circle(line(), 0.3, 1.0)).unwrap();
    (p, phi)
}

#[test]
fn index_form_matches_closed_form() {
    for len in [PI / 2.0, PI, 1.5 * PI] {
        let (p, phi) = index_problem(len, 64);
        let mode = normal_mode(&p, &phi, 1).unwrap();
        let sv = second_variation(&p, &phi, &mode, &mode).unwrap();
        let exact = PI * PI / (2.0 * len) - len / 2.0;
        assert!((sv.formula - exact).abs() < 1e-4, "len {len}: {} vs {exact}", sv.formula);
        let scale = sv.fd.abs().max(1e-2);
        assert!((sv.formula - sv.fd).abs() < 1e-3 * scale, "len {len}: formula {} fd {}", sv.formula, sv.fd);
    }
}

#[test]
fn index_form_spectrum_sign_pattern() {
    let (p, phi) = index_problem(PI / 2.0, 64);
    let ev = index_form_spectrum(&p, &phi, 4).unwrap();
    assert!(ev.iter().all(|&e| e > 0.0), "{ev:?}");
    let (p, phi) = index_problem(PI, 64);
    let ev = index_form_spectrum(&p, &phi, 4).unwrap();
    assert!(ev[0].abs() < 1e-3 && ev[1] > 0.1, "{ev:?}");
    let (p, phi) = index_problem(1.5 * PI, 64);
    let ev = index_form_spectrum(&p, &phi, 4).unwrap();
    assert!(ev[0] < -0.1 && ev[1] > 0.1, "{ev:?}");
}

#[test]
fn second_variation_is_symmetric_and_matches_fd() {
    let (a, b) = (-0.8, 0.9);
    let p = interval_problem(sphere(), a, b, 64, Boundary::Fixed);
    let phi = FieldConfiguration::from_map(&p, great_circle(line(), 0.4, 1.3)).unwrap();
    let u = bump_field(&p, a, b, |t| [1.0, t]);
    let v = bump_field(&p, a, b, |t| [t.cos(), -0.5]);
    let uv = second_variation(&p, &phi, &u, &v).unwrap();
    let vu = second_variation(&p, &phi, &v, &u).unwrap();
    assert!((uv.formula - vu.formula).abs() < 1e-6);
    assert!((uv.formula - uv.fd).abs() < 1e-3 * uv.fd.abs(), "{uv:?}");
}

#[test]
fn flat_target_second_variation_has_no_curvature_term() {
    let e = Arc::new(RiemannianManifold::euclidean(2));
    let (a, b) = (0.0, 1.0);
    let p = interval_problem(e.clone(), a, b, 64, Boundary::Fixed);
    let map = SmoothMap::new("line", line(), e, |t: &[f64]| vec![t[0], 2.0 * t[0]])
        .with_jacobian(|_| vec![1.0, 2.0])
        .with_hessian(|_| vec![0.0, 0.0]);
    let phi = FieldConfiguration::from_map(&p, map).unwrap();
    let u = bump_field(&p, a, b, |t| [1.0, t]);
    let v = bump_field(&p, a, b, |t| [t.cos(), -0.5]);
    let sv = second_variation(&p, &phi, &u, &v).unwrap();
    assert!((sv.formula - sv.fd).abs() < 1e-6, "{sv:?}");
}

#[test]
fn second_variation_requires_a_critical_point() {
    let p = interval_problem(sphere(), 0.0, 1.5, 32, Boundary::Fixed);
    let phi = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
    let u = bump_field(&p, 0.0, 1.5, |_| [1.0, 0.0]);
    assert!(matches!(second_variation(&p, &phi, &u, &u), Err(Error::NotCritical { .. })));
}

#[test]
fn anisotropic_and_potential_lagrangians_match_fd() {
    let s = sphere();
    let (a, b) = (0.0, 1.2);
    let domain = Domain::Interval { a, b, n: 200 };
    let lags: Vec<Arc<dyn Lagrangian<f64>>> = vec![
        Arc::new(Anisotropic::new(line(), s.clone(), vec![2.5]).unwrap()),
        Arc::new(KineticMinusPotential::new(line(), s.clone(), Potential::quadratic(0.7, vec![1.2, 0.4]))),
    ];
    for lag in lags {
        let p = EnergyProblem::new(domain.clone(), lag, Boundary::Fixed).unwrap();
        let phi = FieldConfiguration::from_map(&p, bent_equator(line(), 0.3, 2.0)).unwrap();
        let field = bump_field(&p, a, b, |t| [1.0, t]);
        let fv = first_variation(&p, &phi, &field).unwrap();
        assert!((fv.formula - fv.fd).abs() < 1e-4 * fv.fd.abs(), "{fv:?}");
    }
}

#[test]
fn potential_second_variation_matches_fd_at_a_critical_point() {
    // the constant map at the potential minimum is critical
    let s = sphere();
    let (a, b) = (0.0, 1.0);
    let c = vec![1.2, 0.4];
    let lag = Arc::new(KineticMinusPotential::new(line(), s.clone(), Potential::quadratic(-0.7, c.clone())));
    let p = EnergyProblem::new(Domain::Interval { a, b, n: 64 }, lag, Boundary::Fixed).unwrap();
    let phi = FieldConfiguration::from_map(&p, SmoothMap::constant("c", line(), s, c)).unwrap();
    let u = bump_field(&p, a, b, |t| [1.0, t]);
    let v = bump_field(&p, a, b, |t| [t.cos(), -0.5]);
    let sv = second_variation(&p, &phi, &u, &v).unwrap();
    assert!((sv.formula - sv.fd).abs() < 1e-3 * sv.fd.abs(), "{sv:?}");
}

#[test]
fn flat_torus_flow_reaches_harmonic_map() {
    let t2 = Arc::new(RiemannianManifold::flat_torus2());
    let (lo, hi) = (0.5, 2.5);
    let n = 16;
    let domain = Domain::Rectangle { x: (lo, hi, n), y: (lo, hi, n) };
    let p = EnergyProblem::new(domain, kinetic(t2.clone(), t2), Boundary::Fixed).unwrap();
    let bump = perturbed_torus_identity(lo, hi, 0.1);
    let values = (0..p.nodes()).map(|k| bump(&p.coords(k))).collect();
    let phi0 = FieldConfiguration::from_values(values);
    let h = (hi - lo) / n as f64;
    let out = gradient_flow_harmonic(&p, &phi0, 5000, 0.1 * h * h).unwrap();
    let last = *out.history.last().unwrap();
    assert!(last < 1e-6, "final tension {last:e}");
    // monotone down to the roundoff floor of the stencils
    assert!(out.history.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-10));
}

#[test]
fn harmonic_maps_are_flow_fixed_points() {
    let t2 = Arc::new(RiemannianManifold::flat_torus2());
    let domain = Domain::Rectangle { x: (0.0, 1.0, 8), y: (0.0, 1.0, 8) };
    let p = EnergyProblem::new(domain, kinetic(t2.clone(), t2.clone()), Boundary::Fixed).unwrap();
    let phi0 = FieldConfiguration::from_map(&p, SmoothMap::identity(t2)).unwrap();
    let out = gradient_flow_harmonic(&p, &phi0, 1, 1e-3).unwrap();
    let moved = out
        .field
        .values
        .iter()
        .zip(&phi0.values)
        .map(|(a, b)| bundletc::scalar::max_abs_diff(a, b))
        .fold(0.0, f64::max);
    assert!(moved < 1e-8);
}

#[test]
fn interval_flow_converges_to_the_shooting_geodesic() {
    let s = sphere();
    let (x, y) = ([1.2, 0.1], [1.7, 0.9]);
    let n = 64;
    let p = interval_problem(s.clone(), 0.0, 1.0, n, Boundary::Fixed);
    let values: Vec<Vec<f64>> = (0..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            let bend = 0.1 * (PI * t).sin();
            vec![x[0] + t * (y[0] - x[0]) + bend, x[1] + t * (y[1] - x[1])]
        })
        .collect();
    let h = 1.0 / n as f64;
    let out = gradient_flow_harmonic(&p, &FieldConfiguration::from_values(values), 15000, 0.4 * h * h).unwrap();
    let v0 = shoot_geodesic(&s, &x, &y, 1.0, 1000).unwrap();
    let exact = solve_geodesic(&s, &x, &v0, 1.0, 1.0 / (16 * n) as f64).unwrap();
    let err = (0..=n)
        .map(|k| bundletc::scalar::max_abs_diff(&out.field.values[k], &exact.curve.values[16 * k]))
        .fold(0.0, f64::max);
    assert!(err < 1e-4, "flow vs shooting {err:e}");
}

#[test]
fn flow_divergence_is_detected() {
    let t2 = Arc::new(RiemannianManifold::flat_torus2());
    let domain = Domain::Rectangle { x: (0.5, 2.5, 8), y: (0.5, 2.5, 8) };
    let p = EnergyProblem::new(domain, kinetic(t2.clone(), t2), Boundary::Fixed).unwrap();
    let bump = perturbed_torus_identity(0.5, 2.5, 0.1);
    let phi0 = FieldConfiguration::from_values((0..p.nodes()).map(|k| bump(&p.coords(k))).collect());
    // far beyond the explicit stability limit
    assert!(matches!(gradient_flow_harmonic(&p, &phi0, 200, 1.0), Err(Error::Divergence { .. })));
}
