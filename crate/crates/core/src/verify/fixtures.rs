//! Closed-form curves and maps with known variational behaviour.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::manifolds::{RiemannianManifold, SmoothMap};

pub type Manifold = Arc<RiemannianManifold<f64>>;

/// The parameter line, as a one-dimensional Euclidean domain.
pub fn line() -> Manifold {
    Arc::new(RiemannianManifold::euclidean(1).renamed("I"))
}

pub fn sphere() -> Manifold {
    Arc::new(RiemannianManifold::sphere2())
}

/// Great circle `t ↦ cos(st)e₁ + sin(st)e₂` on the unit sphere, with
/// `e₁ = (1,0,0)` and `e₂ = (0, cos α, sin α)`, in `(θ, φ)` coordinates.
/// Stays in the chart for `|st| < π`.
pub fn great_circle(domain: Manifold, tilt: f64, speed: f64) -> SmoothMap<f64> {
    let (sa, ca) = tilt.sin_cos();
    let s = speed;
    let pos = move |t: f64| {
        let (su, cu) = (s * t).sin_cos();
        (cu, su * ca, su * sa)
    };
    let vel = move |t: f64| {
        let (su, cu) = (s * t).sin_cos();
        (-s * su, s * cu * ca, s * cu * sa)
    };
    SmoothMap::new("circle", domain, sphere(), move |t: &[f64]| {
        let (x, y, z) = pos(t[0]);
        vec![z.acos(), y.atan2(x)]
    })
    .with_jacobian(move |t: &[f64]| {
        let (x, y, z) = pos(t[0]);
        let (xd, yd, zd) = vel(t[0]);
        let w = (1.0 - z * z).sqrt();
        vec![-zd / w, (x * yd - y * xd) / (x * x + y * y)]
    })
    .with_hessian(move |t: &[f64]| {
        let (x, y, z) = pos(t[0]);
        let (xd, yd, zd) = vel(t[0]);
        let w2 = 1.0 - z * z;
        let zdd = -s * s * z;
        let th = -(zdd * w2 + z * zd * zd) / (w2 * w2.sqrt());
        let r2 = x * x + y * y;
        let ph = -s * ca * (2.0 * x * xd + 2.0 * y * yd) / (r2 * r2);
        vec![th, ph]
    })
}

/// Curve `t ↦ (π/2 + a sin(ωt), t)` on the sphere: a bent, non-critical
/// perturbation of the equator.
pub fn bent_equator(domain: Manifold, amplitude: f64, omega: f64) -> SmoothMap<f64> {
    SmoothMap::new("bent", domain, sphere(), move |t: &[f64]| vec![FRAC_PI_2 + amplitude * (omega * t[0]).sin(), t[0]])
        .with_jacobian(move |t: &[f64]| vec![amplitude * omega * (omega * t[0]).cos(), 1.0])
        .with_hessian(move |t: &[f64]| vec![-amplitude * omega * omega * (omega * t[0]).sin(), 0.0])
}

/// Identity of the flat torus plus a bump vanishing on the boundary of the
/// square `[lo, hi]²`.
pub fn perturbed_torus_identity(lo: f64, hi: f64, amplitude: f64) -> impl Fn(&[f64]) -> Vec<f64> {
    let k = std::f64::consts::PI / (hi - lo);
    move |x: &[f64]| {
        let b = (k * (x[0] - lo)).sin() * (k * (x[1] - lo)).sin();
        vec![x[0] + amplitude * b, x[1] - 0.5 * amplitude * b * b]
    }
}
