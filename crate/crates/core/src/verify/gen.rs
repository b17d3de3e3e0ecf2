//! Random analytic test data: trigonometric maps and fields with
//! controlled amplitude, used by the verification suites.

use std::sync::Arc;

use rand::Rng;

use crate::covariant::{Slot, TensorField};
use crate::manifolds::{RiemannianManifold, SmoothMap};
use crate::tensor::Variance;

/// `x ↦ Σₖ aₖ sin(bₖ·x + cₖ)` per output component.
#[derive(Clone, Debug)]
pub struct TrigSeries {
    n_in: usize,
    n_out: usize,
    amp: Vec<f64>,
    freq: Vec<f64>,
    phase: Vec<f64>,
    terms: usize,
}

impl TrigSeries {
    pub fn random(rng: &mut impl Rng, n_in: usize, n_out: usize, terms: usize, amplitude: f64) -> Self {
        let k = n_out * terms;
        TrigSeries {
            n_in,
            n_out,
            amp: (0..k).map(|_| amplitude * rng.gen_range(-1.0..1.0) / terms as f64).collect(),
            freq: (0..k * n_in).map(|_| rng.gen_range(-1.5..1.5)).collect(),
            phase: (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
            terms,
        }
    }

    fn arg(&self, t: usize, x: &[f64]) -> f64 {
        self.phase[t] + (0..self.n_in).map(|i| self.freq[t * self.n_in + i] * x[i]).sum::<f64>()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|a| {
                (0..self.terms)
                    .map(|k| {
                        let t = a * self.terms + k;
                        self.amp[t] * self.arg(t, x).sin()
                    })
                    .sum()
            })
            .collect()
    }

    /// Layout `[a][i]`.
    pub fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_in;
        let mut out = vec![0.0; self.n_out * n];
        for a in 0..self.n_out {
            for k in 0..self.terms {
                let t = a * self.terms + k;
                let c = self.amp[t] * self.arg(t, x).cos();
                for i in 0..n {
                    out[a * n + i] += c * self.freq[t * n + i];
                }
            }
        }
        out
    }

    /// Layout `[a][i][j]`.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_in;
        let mut out = vec![0.0; self.n_out * n * n];
        for a in 0..self.n_out {
            for k in 0..self.terms {
                let t = a * self.terms + k;
                let s = -self.amp[t] * self.arg(t, x).sin();
                for i in 0..n {
                    for j in 0..n {
                        out[(a * n + i) * n + j] += s * self.freq[t * n + i] * self.freq[t * n + j];
                    }
                }
            }
        }
        out
    }
}

/// A random map `x ↦ center + A(x − x₀) + trig(x)` with exact derivatives.
/// `linear` is the coordinate matrix `A`, laid out `[a][i]`.
#[allow(clippy::too_many_arguments)]
pub fn random_map(
    rng: &mut impl Rng,
    name: &str,
    domain: Arc<RiemannianManifold<f64>>,
    target: Arc<RiemannianManifold<f64>>,
    x0: Vec<f64>,
    center: Vec<f64>,
    linear: Vec<f64>,
    amplitude: f64,
) -> SmoothMap<f64> {
    let (n, m) = (domain.dim(), target.dim());
    let trig = TrigSeries::random(rng, n, m, 3, amplitude);
    let (t1, t2, t3) = (trig.clone(), trig.clone(), trig);
    let lin = linear.clone();
    SmoothMap::new(name, domain, target, move |x: &[f64]| {
        let w = t1.eval(x);
        (0..m).map(|a| center[a] + w[a] + (0..n).map(|i| lin[a * n + i] * (x[i] - x0[i])).sum::<f64>()).collect()
    })
    .with_jacobian(move |x: &[f64]| {
        let mut j = t2.jacobian(x);
        for (v, l) in j.iter_mut().zip(&linear) {
            *v += l;
        }
        j
    })
    .with_hessian(move |x: &[f64]| t3.hessian(x))
}

/// A random field with the given slots, trigonometric components, no exact
/// partials.
pub fn random_field(
    rng: &mut impl Rng,
    base: Arc<RiemannianManifold<f64>>,
    slots: Vec<Slot<f64>>,
    amplitude: f64,
) -> TensorField<f64> {
    let size: usize = slots.iter().map(Slot::dim).product();
    let trig = TrigSeries::random(rng, base.dim(), size, 3, amplitude);
    let offset: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
    TensorField::new(base, slots, move |x: &[f64]| Ok(trig.eval(x).iter().zip(&offset).map(|(a, b)| a + b).collect()))
}

/// Random slots of the given variances over a base manifold.
pub fn base_slots(base: &Arc<RiemannianManifold<f64>>, variances: &[Variance]) -> Vec<Slot<f64>> {
    variances.iter().map(|&v| Slot { manifold: base.clone(), map: None, variance: v }).collect()
}

/// A point of the sphere chart kept away from the poles.
pub fn sphere_point(rng: &mut impl Rng) -> Vec<f64> {
    vec![rng.gen_range(0.5..std::f64::consts::PI - 0.5), rng.gen_range(-3.0..3.0)]
}

/// A point of the half-plane chart.
pub fn half_plane_point(rng: &mut impl Rng) -> Vec<f64> {
    vec![rng.gen_range(-2.0..2.0), rng.gen_range(0.5..2.5)]
}

/// A random vector with entries in `[-1, 1)`.
pub fn vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
