//! Second variation at critical configurations and the index-form spectrum.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{lit, scaled, Real};

use super::first::{check_admissible, energy, euler_lagrange_residual, local, vary};
use super::lagrangian::{partials_of, second_partials_of};
use super::problem::{Domain, EnergyProblem, FieldConfiguration, VariationField};

/// Step of the mixed central-difference oracle.
pub const SECOND_VARIATION_STEP: f64 = 1e-3;

/// Fails with `NotCritical` unless the interior Euler-Lagrange residual is
/// below the problem's tolerance.
pub fn require_critical<T: Real>(p: &EnergyProblem<T>, phi: &FieldConfiguration<T>) -> Result<()> {
    let r = euler_lagrange_residual(p, phi)?.max_interior();
    if !(r < p.critical_tolerance) {
        return Err(Error::NotCritical { residual: r.as_f64() });
    }
    Ok(())
}

/// Integrand of the second variation at one node:
/// `A·L_σσ·B + A·L_σv·∇B + ∇A·L_vσ·B + ∇A·L_vv·∇B` plus the curvature term
/// `L_{,v}{}_a^k R^a_{bcd} Aᵇ Bᶜ ∂ₖφᵈ` (standard Riemann convention).
fn integrand<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    a: &VariationField<T>,
    b: &VariationField<T>,
    node: usize,
) -> Result<T> {
    let (ns, nm) = (p.s().dim(), p.m().dim());
    let (x, s, j) = local(p, phi, node)?;
    let lag = p.lagrangian.as_ref();
    let sp = second_partials_of(lag, &x, &s, &j)?;
    let pd = partials_of(lag, &x, &s, &j)?;
    let (av, bv) = (&a.values[node], &b.values[node]);
    let da = a.covariant_derivative(p, phi, node)?;
    let db = b.covariant_derivative(p, phi, node)?;
    let nf = ns * nm;
    let mut v = T::zero();
    for q in 0..ns {
        for r in 0..ns {
            v += av[q] * sp.ss[q * ns + r] * bv[r];
        }
        for f in 0..nf {
            v += av[q] * sp.sv[q * nf + f] * db[f];
        }
    }
    for e in 0..nf {
        for r in 0..ns {
            v += da[e] * sp.vs[e * ns + r] * bv[r];
        }
        for f in 0..nf {
            v += da[e] * sp.vv[e * nf + f] * db[f];
        }
    }
    let rm = p.s().curvature_at(&s)?;
    for q in 0..ns {
        for k in 0..nm {
            let pk = pd.v[q * nm + k];
            if pk == T::zero() {
                continue;
            }
            for bb in 0..ns {
                for c in 0..ns {
                    for d in 0..ns {
                        v += pk * rm[((q * ns + bb) * ns + c) * ns + d] * av[bb] * bv[c] * j[d * nm + k];
                    }
                }
            }
        }
    }
    Ok(v)
}

/// Assembled bilinear form, without the criticality check.
pub fn second_variation_form<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    a: &VariationField<T>,
    b: &VariationField<T>,
) -> Result<T> {
    check_admissible(p, a)?;
    check_admissible(p, b)?;
    let mut total = T::zero();
    for node in 0..p.nodes() {
        total += integrand(p, phi, a, b, node)? * p.volume_weight(node)?;
    }
    Ok(total)
}

/// `∂²/∂i∂j 𝓛(exp(φ, iA + jB))` at 0 by a mixed central difference.
pub fn second_variation_fd<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    a: &VariationField<T>,
    b: &VariationField<T>,
    step: T,
) -> Result<T> {
    let e = |si: T, sj: T| -> Result<T> { energy(p, &vary(p, phi, &[(si * step, a), (sj * step, b)])?) };
    let one = T::one();
    let four: T = lit(4.0);
    Ok((e(one, one)? - e(one, -one)? - e(-one, one)? + e(-one, -one)?) / (four * step * step))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondVariation<T> {
    pub formula: T,
    pub fd: T,
}

pub fn second_variation<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    a: &VariationField<T>,
    b: &VariationField<T>,
) -> Result<SecondVariation<T>> {
    require_critical(p, phi)?;
    Ok(SecondVariation {
        formula: second_variation_form(p, phi, a, b)?,
        fd: second_variation_fd(p, phi, a, b, scaled(SECOND_VARIATION_STEP, 0.25))?,
    })
}

/// Unit normal `N ∝ h⁻¹ε(v)` to a velocity on a 2-dimensional target.
pub fn unit_normal<T: Real>(p: &EnergyProblem<T>, s: &[T], v: &[T]) -> Result<Vec<T>> {
    if p.s().dim() != 2 {
        return Err(Error::usage("normal fields need a 2-dimensional target"));
    }
    let hi = p.s().inverse_metric_at(s)?;
    // ε_bc v^c with ε_01 = 1; the √det h factor is removed by normalizing
    let w = [v[1], -v[0]];
    let n = vec![hi[0] * w[0] + hi[1] * w[1], hi[2] * w[0] + hi[3] * w[1]];
    let len = p.s().norm(s, &n)?;
    if len == T::zero() {
        return Err(Error::usage("normal of a stopped curve is undefined"));
    }
    Ok(n.into_iter().map(|c| c / len).collect())
}

/// `sin(mπ(t−a)/ℓ)·N` along a critical curve, with its exact covariant
/// derivative (the unit normal of a geodesic in a surface is parallel).
pub fn normal_mode<T: Real>(p: &EnergyProblem<T>, phi: &FieldConfiguration<T>, m: usize) -> Result<VariationField<T>> {
    let (a, len) = match p.domain {
        Domain::Interval { a, b, .. } => (a, b - a),
        _ => return Err(Error::DomainNotInterval),
    };
    let k = T::from_usize(m).expect("mode") * T::PI() / len;
    let mut values = Vec::with_capacity(p.nodes());
    let mut derivs = Vec::with_capacity(p.nodes());
    for node in 0..p.nodes() {
        let t = p.coords(node)[0];
        let n = unit_normal(p, &phi.values[node], &phi.jacobian(p, node)?)?;
        let (sn, cs) = ((k * (t - a)).sin(), (k * (t - a)).cos());
        // pin the endpoints to exact zeros
        let sn = if node == 0 || node + 1 == p.nodes() { T::zero() } else { sn };
        values.push(n.iter().map(|&c| sn * c).collect());
        derivs.push(n.iter().map(|&c| k * cs * c).collect());
    }
    let mut field = VariationField::from_values(values).with_derivatives(derivs);
    if let Some(map) = phi.map.clone() {
        let p2 = p.clone();
        field.analytic = Some(Arc::new(move |x: &[T]| {
            let (s, v) = (map.eval(x)?, map.jacobian_at(x)?);
            let n = unit_normal(&p2, &s, &v)?;
            let sn = (k * (x[0] - a)).sin();
            Ok(n.into_iter().map(|c| sn * c).collect())
        }));
    }
    Ok(field)
}

/// Eigenvalues (ascending) of the second-variation Gram matrix on the first
/// `k` normal modes of a critical curve.
pub fn index_form_spectrum<T: Real>(p: &EnergyProblem<T>, phi: &FieldConfiguration<T>, k: usize) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::usage("basis size must be positive"));
    }
    require_critical(p, phi)?;
    let basis = (1..=k).map(|m| normal_mode(p, phi, m)).collect::<Result<Vec<_>>>()?;
    let mut gram = vec![T::zero(); k * k];
    for i in 0..k {
        for j in i..k {
            let v = second_variation_form(p, phi, &basis[i], &basis[j])?;
            gram[i * k + j] = v;
            gram[j * k + i] = v;
        }
    }
    Ok(linalg::symmetric_eigenvalues(&gram, k))
}
