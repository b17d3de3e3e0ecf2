use std::f64::consts::PI;
use std::sync::Arc;

use bundletc::covariant::{
    covariant_hessian, covariant_hessian_formula, curvature_operator, pullback_curvature_check, riemann_action,
    tangent_map, tension_field, ConnectionMapData, Slot, TensorField,
};
use bundletc::manifolds::{RiemannianManifold, SmoothMap};
use bundletc::scalar::{max_abs, max_abs_diff};
use bundletc::tensor::{Permutation, Variance};
use bundletc::verify::gen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type M = Arc<RiemannianManifold<f64>>;

fn sphere() -> M {
    Arc::new(RiemannianManifold::sphere2())
}

fn half_plane() -> M {
    Arc::new(RiemannianManifold::half_plane())
}

fn plane() -> M {
    Arc::new(RiemannianManifold::euclidean(2).renamed("M"))
}

/// A map from a neighbourhood of the origin of `M` into the sphere.
fn map_into_sphere(rng: &mut ChaCha8Rng, domain: M) -> SmoothMap<f64> {
    let lin = gen::vector(rng, 4).iter().map(|v| 0.4 * v).collect();
    gen::random_map(rng, "phi", domain, sphere(), vec![0.0, 0.0], vec![PI / 2.0, 0.3], lin, 0.2)
}

fn map_into_half_plane(rng: &mut ChaCha8Rng, domain: M) -> SmoothMap<f64> {
    let lin = gen::vector(rng, 4).iter().map(|v| 0.3 * v).collect();
    gen::random_map(rng, "phi", domain, half_plane(), vec![0.0, 0.0], vec![0.2, 1.5], lin, 0.2)
}

#[test]
fn pullback_chain_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let target = if trial % 2 == 0 { sphere() } else { half_plane() };
        let phi =
            if trial % 2 == 0 { map_into_sphere(&mut rng, plane()) } else { map_into_half_plane(&mut rng, plane()) };
        let variances = [Variance::Vector, Variance::Covector];
        let e = gen::random_field(&mut rng, target.clone(), gen::base_slots(&target, &variances), 1.0);
        let lhs = e.pullback(&phi).unwrap().covariant_derivative();
        let rhs = e.covariant_derivative().pullback(&phi).unwrap().contract(&tangent_map(&phi), 1).unwrap();
        let x = gen::vector(&mut rng, 2).iter().map(|v| 0.3 * v).collect::<Vec<_>>();
        let (a, b) = (lhs.at(&x).unwrap(), rhs.at(&x).unwrap());
        worst = worst.max(a.max_abs_diff(&b).unwrap());
    }
    assert!(worst < 1e-6, "pullback chain rule error {worst:e}");
}

#[test]
fn permutation_fields_are_parallel() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = sphere();
    let variances = [Variance::Vector, Variance::Covector, Variance::Vector];
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = gen::random_field(&mut rng, s.clone(), gen::base_slots(&s, &variances), 1.0);
        let images = {
            let mut v = vec![0, 1, 2];
            for i in (1..3).rev() {
                v.swap(i, rng.gen_range(0..=i));
            }
            v
        };
        let sigma = Permutation::from_images(images).unwrap();
        let lhs = x.permute(&sigma).unwrap().covariant_derivative();
        let rhs = x.covariant_derivative().permute(&sigma.extend(4)).unwrap();
        let p = gen::sphere_point(&mut rng);
        worst = worst.max(lhs.at(&p).unwrap().max_abs_diff(&rhs.at(&p).unwrap()).unwrap());
    }
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn hessian_of_map_is_symmetric_and_matches_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = sphere();
    for _ in 0..10 {
        let lin = gen::vector(&mut rng, 4).iter().map(|v| 0.2 * v).collect::<Vec<_>>();
        let mut l = lin.clone();
        l[0] += 1.0;
        l[3] += 1.0;
        let phi =
            gen::random_map(&mut rng, "phi", s.clone(), s.clone(), vec![PI / 2.0, 0.0], vec![PI / 2.0, 0.0], l, 0.1)
                .without_exact_derivatives();
        let x = vec![PI / 2.0 + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let h = covariant_hessian(&phi);
        let t = h.at(&x).unwrap();
        let swapped = h.permute(&Permutation::from_cycles(3, &[vec![2, 3]]).unwrap()).unwrap().at(&x).unwrap();
        assert!(t.max_abs_diff(&swapped).unwrap() < 1e-6);
        let f = covariant_hessian_formula(&phi, &x).unwrap();
        assert!(max_abs_diff(t.data(), &f) < 1e-6);
    }
}

#[test]
fn hessian_of_function_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = half_plane();
    let c: Vec<f64> = gen::vector(&mut rng, 6);
    let f = TensorField::scalar(h.clone(), move |x: &[f64]| {
        Ok(c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] * x[1] + c[5] * x[1].powi(3))
    });
    let d2 = f.covariant_derivative().covariant_derivative();
    for _ in 0..5 {
        let x = gen::half_plane_point(&mut rng);
        let v = d2.components(&x).unwrap();
        assert!((v[1] - v[2]).abs() < 1e-6, "{:e}", (v[1] - v[2]).abs());
    }
}

#[test]
fn curvature_operator_matches_riemann_tensor() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let s = sphere();
    for _ in 0..5 {
        let v = gen::random_field(&mut rng, s.clone(), vec![Slot::vector(s.clone())], 1.0);
        let x = gen::sphere_point(&mut rng);
        let lhs = curvature_operator(&v, &x, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let rhs: Vec<f64> = riemann_action(&s, &x, &v.components(&x).unwrap(), &[1.0, 0.0], &[0.0, 1.0])
            .unwrap()
            .iter()
            .map(|r| -r)
            .collect();
        assert!(max_abs_diff(lhs.data(), &rhs) < 1e-6, "{:?} vs {:?}", lhs.data(), rhs);
    }
}

#[test]
fn functions_have_flat_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = sphere();
    let f = gen::random_field(&mut rng, s.clone(), Vec::new(), 1.0);
    let x = gen::sphere_point(&mut rng);
    let r = curvature_operator(&f, &x, &[0.3, 1.0], &[-0.7, 0.2]).unwrap();
    assert!(r.max_abs() < 1e-6);
}

#[test]
fn pullback_curvature_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let phi = map_into_sphere(&mut rng, plane());
        let sigma = gen::random_field(&mut rng, plane(), vec![Slot::along(&phi, Variance::Vector)], 1.0);
        let x = gen::vector(&mut rng, 2).iter().map(|v| 0.3 * v).collect::<Vec<_>>();
        let (u, w) = (gen::vector(&mut rng, 2), gen::vector(&mut rng, 2));
        let (l, r) = pullback_curvature_check(&phi, &sigma, &x, &u, &w).unwrap();
        worst = worst.max(max_abs_diff(&l, &r));
    }
    assert!(worst < 1e-5, "{worst:e}");
}

#[test]
fn covariant_hessian_chain_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let s = sphere();
    for _ in 0..5 {
        let phi = map_into_sphere(&mut rng, plane());
        let e = gen::random_field(&mut rng, s.clone(), vec![Slot::vector(s.clone())], 1.0);
        let lhs = e.pullback(&phi).unwrap().covariant_derivative().covariant_derivative();
        let dphi = tangent_map(&phi);
        let first = e
            .covariant_derivative()
            .covariant_derivative()
            .pullback(&phi)
            .unwrap()
            .contract(&dphi.parallel_product(&dphi).unwrap(), 2)
            .unwrap();
        let second = e.covariant_derivative().pullback(&phi).unwrap().contract(&covariant_hessian(&phi), 1).unwrap();
        let rhs = first.add(&second).unwrap();
        let x = gen::vector(&mut rng, 2).iter().map(|v| 0.3 * v).collect::<Vec<_>>();
        let err = lhs.at(&x).unwrap().max_abs_diff(&rhs.at(&x).unwrap()).unwrap();
        assert!(err < 1e-5, "{err:e}");
    }
}

#[test]
fn mixed_partials_are_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let interval = RiemannianManifold::euclidean(1).renamed("I");
    let domain: M = Arc::new(RiemannianManifold::product(&RiemannianManifold::half_plane(), &interval));
    let lin = gen::vector(&mut rng, 6).iter().map(|v| 0.3 * v).collect();
    let psi = gen::random_map(&mut rng, "psi", domain, sphere(), vec![0.0, 1.0, 0.0], vec![PI / 2.0, 0.0], lin, 0.2)
        .without_exact_derivatives();
    let h = covariant_hessian(&psi);
    for _ in 0..5 {
        let x = vec![rng.gen_range(-0.3..0.3), rng.gen_range(0.8..1.2), rng.gen_range(-0.3..0.3)];
        let c = h.components(&x).unwrap(); // [a][j][i]
        for a in 0..2 {
            for j in 0..2 {
                // ψ_{,MI}[a][j] vs ψ_{,IM}[a][j]
                let mi = c[(a * 3 + j) * 3 + 2];
                let im = c[(a * 3 + 2) * 3 + j];
                assert!((mi - im).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn evaluation_commutes_with_uninvolved_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let s = sphere();
    let interval = RiemannianManifold::euclidean(1).renamed("J");
    let prod: M = Arc::new(RiemannianManifold::product(&RiemannianManifold::sphere2(), &interval));
    let family = gen::random_field(&mut rng, prod.clone(), gen::base_slots(&prod, &[]), 1.0);
    // slice j = 0 as a function on S
    let fam = family.clone();
    let slice = TensorField::scalar(s.clone(), move |x: &[f64]| Ok(fam.components(&[x[0], x[1], 0.0])?[0]));
    let x = gen::sphere_point(&mut rng);
    let d_slice = slice.covariant_derivative().components(&x).unwrap();
    let d_family = family.covariant_derivative().components(&[x[0], x[1], 0.0]).unwrap();
    assert!(max_abs_diff(&d_slice, &d_family[..2]) < 1e-6);
}

#[test]
fn tension_examples() {
    let t = Arc::new(RiemannianManifold::flat_torus2());
    let id = SmoothMap::identity(t);
    assert!(max_abs(&tension_field(&id).components(&[0.3, 4.0]).unwrap()) < 1e-12);

    // Laplace-Beltrami of log y on the half-plane: y²(∂ₓ² + ∂ᵧ²) log y = −1
    let h = half_plane();
    let line: M = Arc::new(RiemannianManifold::euclidean(1).renamed("R"));
    let f = SmoothMap::new("f", h.clone(), line, |x: &[f64]| vec![x[1].ln()]);
    let v = tension_field(&f).components(&[0.4, 1.7]).unwrap();
    assert!((v[0] + 1.0).abs() < 1e-6, "{}", v[0]);
}

#[test]
fn stopped_curve_with_rotating_vector() {
    // φ(t) = p constant; σ(t) rotates in the fiber. The base-motion term vanishes
    // while the pullback derivative equals the plain fiber derivative.
    let i: M = Arc::new(RiemannianManifold::euclidean(1).renamed("I"));
    let s = sphere();
    let p = vec![1.0, 0.5];
    let phi = SmoothMap::constant("phi", i.clone(), s.clone(), p.clone());
    let sigma =
        TensorField::new(i, vec![Slot::along(&phi, Variance::Vector)], |t: &[f64]| Ok(vec![t[0].cos(), t[0].sin()]));
    let t = 0.7;
    let d = sigma.covariant_derivative().components(&[t]).unwrap();
    let corr = sigma.connection_terms(&[t], &sigma.components(&[t]).unwrap()).unwrap();
    assert!(max_abs(&corr) == 0.0);
    assert!(max_abs_diff(&d, &[-t.sin(), t.cos()]) < 1e-9);
    assert!(max_abs(&d) > 0.5);
}

#[test]
fn kinetic_partials_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (s, m) = (sphere(), half_plane());
    let conn = ConnectionMapData::new(s.clone(), m.clone());
    let (s2, m2) = (s.clone(), m.clone());
    let kinetic = move |x: &[f64], p: &[f64], a: &[f64]| -> bundletc::Result<f64> {
        let h = s2.metric_at(p)?;
        let gi = m2.inverse_metric_at(x)?;
        let mut v = 0.0;
        for (ai, bj) in (0..2).flat_map(|a| (0..2).map(move |b| (a, b))) {
            for i in 0..2 {
                for j in 0..2 {
                    v += 0.5 * h[ai * 2 + bj] * gi[i * 2 + j] * a[ai * 2 + i] * a[bj * 2 + j];
                }
            }
        }
        Ok(v)
    };
    for _ in 0..5 {
        let (p, x, a) = (gen::sphere_point(&mut rng), gen::half_plane_point(&mut rng), gen::vector(&mut rng, 4));
        let d = conn.partial_covariant_derivatives(&kinetic, &x, &p, &a).unwrap();
        assert!(max_abs(&d.sigma) < 1e-5 && max_abs(&d.mu) < 1e-5, "{:?} {:?}", d.sigma, d.mu);
        let (h, gi) = (s.metric_at(&p).unwrap(), m.inverse_metric_at(&x).unwrap());
        let mut ak = vec![0.0; 4];
        for b in 0..2 {
            for j in 0..2 {
                for a2 in 0..2 {
                    for i in 0..2 {
                        ak[b * 2 + j] += a[a2 * 2 + i] * h[a2 * 2 + b] * gi[i * 2 + j];
                    }
                }
            }
        }
        assert!(max_abs_diff(&d.v, &ak) < 1e-6);
    }
}
