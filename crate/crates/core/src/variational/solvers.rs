//! Geodesic integration, shooting, and the harmonic-map gradient flow.

use crate::error::{Error, Result};
use crate::linalg;
use crate::manifolds::RiemannianManifold;
use crate::scalar::{lit, scaled, Real};

use super::problem::{Boundary, EnergyProblem, FieldConfiguration};

/// A sampled geodesic with its velocities stored as Jacobians.
#[derive(Clone, Debug)]
pub struct GeodesicCurve<T> {
    pub times: Vec<T>,
    pub curve: FieldConfiguration<T>,
}

/// RK4 integration of `φ″ᵏ = −Γᵏᵢⱼφ′ⁱφ′ʲ` on `[0, t]` with step close to `h`.
pub fn solve_geodesic<T: Real>(s: &RiemannianManifold<T>, x0: &[T], v0: &[T], t: T, h: T) -> Result<GeodesicCurve<T>> {
    if !(h > T::zero()) || !(t > T::zero()) {
        return Err(Error::usage("geodesic time and step must be positive"));
    }
    if x0.len() != s.dim() || v0.len() != s.dim() {
        return Err(Error::usage(format!("initial data must have {} components", s.dim())));
    }
    let steps = (t / h).round().to_usize().unwrap_or(1).max(1);
    let states = s.geodesic_states(x0, v0, t, steps)?;
    let dt = t / T::from_usize(steps).expect("step count");
    let times = (0..=steps).map(|k| dt * T::from_usize(k).expect("index")).collect();
    let (values, vels): (Vec<_>, Vec<_>) = states.into_iter().unzip();
    Ok(GeodesicCurve { times, curve: FieldConfiguration::from_values(values).with_jacobians(vels) })
}

/// Initial velocity of the geodesic from `x` reaching `y` at time `t`, by
/// Newton iteration on the endpoint map with a difference Jacobian.
pub fn shoot_geodesic<T: Real>(s: &RiemannianManifold<T>, x: &[T], y: &[T], t: T, steps: usize) -> Result<Vec<T>> {
    let n = s.dim();
    let endpoint = |v: &[T]| s.exp_map_steps(x, v, t, steps);
    let mut v: Vec<T> = x.iter().zip(y).map(|(&a, &b)| (b - a) / t).collect();
    let tol: T = scaled(1e-12, 1.0);
    let dv: T = scaled(1e-7, 0.5);
    let mut res = T::infinity();
    for _ in 0..50 {
        let e = endpoint(&v)?;
        let r: Vec<T> = e.iter().zip(y).map(|(&a, &b)| a - b).collect();
        res = r.iter().fold(T::zero(), |m, c| m.max(c.abs()));
        if res < tol {
            return Ok(v);
        }
        let mut jac = vec![T::zero(); n * n];
        for k in 0..n {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[k] += dv;
            vm[k] -= dv;
            let (ep, em) = (endpoint(&vp)?, endpoint(&vm)?);
            for a in 0..n {
                jac[a * n + k] = (ep[a] - em[a]) / (dv + dv);
            }
        }
        let step = linalg::matvec(&linalg::inverse(&jac, n)?, &r);
        v.iter_mut().zip(step).for_each(|(vi, d)| *vi -= d);
    }
    if res < scaled(1e-9, 1.0) {
        return Ok(v);
    }
    Err(Error::ShootingFailed { residual: res.as_f64() })
}

/// `τᵃ = gⁱʲ(∂ᵢ∂ⱼφᵃ − Γᵏᵢⱼ ∂ₖφᵃ + Γᵃ_bc ∂ᵢφᵇ ∂ⱼφᶜ)` at an interior node
/// from grid stencils.
pub fn discrete_tension<T: Real>(p: &EnergyProblem<T>, phi: &FieldConfiguration<T>, node: usize) -> Result<Vec<T>> {
    let (ns, nm) = (p.s().dim(), p.m().dim());
    let x = p.coords(node);
    let s = &phi.values[node];
    let d1 = p.grid.jacobian(&phi.values, node);
    let d2 = p.grid.second_derivatives(&phi.values, node);
    let gi = p.m().inverse_metric_at(&x)?;
    let gm_m = p.m().christoffel_at(&x)?;
    let gm_s = p.s().christoffel_at(s)?;
    Ok((0..ns)
        .map(|a| {
            let mut t = T::zero();
            for i in 0..nm {
                for j in 0..nm {
                    let mut h = d2[(a * nm + i) * nm + j];
                    for k in 0..nm {
                        h -= gm_m[(k * nm + i) * nm + j] * d1[a * nm + k];
                    }
                    for b in 0..ns {
                        for c in 0..ns {
                            h += gm_s[(a * ns + b) * ns + c] * d1[b * nm + i] * d1[c * nm + j];
                        }
                    }
                    t += gi[i * nm + j] * h;
                }
            }
            t
        })
        .collect())
}

/// Largest `|τ|_h` over interior nodes.
pub fn sup_tension<T: Real>(p: &EnergyProblem<T>, phi: &FieldConfiguration<T>) -> Result<T> {
    let mut m = T::zero();
    for node in (0..p.nodes()).filter(|&k| !p.grid.is_boundary(k)) {
        let t = discrete_tension(p, phi, node)?;
        m = m.max(p.s().norm(&phi.values[node], &t)?);
    }
    Ok(m)
}

#[derive(Clone, Debug)]
pub struct FlowResult<T> {
    pub field: FieldConfiguration<T>,
    /// Sup tension norm before each step and after the last one.
    pub history: Vec<T>,
}

/// Forward-Euler flow `φ ← exp(φ, dt·τ)` at interior nodes with the
/// boundary held fixed. Aborts when the tension grows tenfold.
pub fn gradient_flow_harmonic<T: Real>(
    p: &EnergyProblem<T>,
    phi0: &FieldConfiguration<T>,
    steps: usize,
    dt: T,
) -> Result<FlowResult<T>> {
    if p.boundary != Boundary::Fixed {
        return Err(Error::usage("the harmonic flow needs a fixed boundary"));
    }
    if !(dt > T::zero()) {
        return Err(Error::usage("flow step must be positive"));
    }
    phi0.check(p)?;
    let mut field = phi0.sampled();
    let initial = sup_tension(p, &field)?;
    let mut history = vec![initial];
    let ten: T = lit(10.0);
    let interior: Vec<usize> = (0..p.nodes()).filter(|&k| !p.grid.is_boundary(k)).collect();
    for step in 0..steps {
        let updates = interior
            .iter()
            .map(|&node| {
                let t = discrete_tension(p, &field, node)?;
                p.s().exp_map_steps(&field.values[node], &t, dt, 1)
            })
            .collect::<Result<Vec<_>>>()?;
        for (&node, v) in interior.iter().zip(updates) {
            field.values[node] = v;
        }
        let current = sup_tension(p, &field)?;
        history.push(current);
        if !current.is_finite() || current > ten * initial.max(lit(1e-10)) {
            return Err(Error::Divergence { step: step + 1, initial: initial.as_f64(), current: current.as_f64() });
        }
    }
    Ok(FlowResult { field, history })
}
