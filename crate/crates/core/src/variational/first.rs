//! Energy, first variation, Euler-Lagrange residuals and the Hamiltonian.

use crate::error::{Error, Result};
use crate::manifolds::{fd_step, gradient_fd, SmoothMap};
use crate::scalar::{lit, scaled, Real};

use super::lagrangian::partials_of;
use super::problem::{Boundary, BoundaryNode, EnergyProblem, FieldConfiguration, VariationField};

/// Steps used to realize variations `exp(φ, εA)`; fixed so the family is
/// smooth in `ε`.
pub const VARIATION_EXP_STEPS: usize = 8;
/// Central-difference step for the first-variation oracle.
pub const FIRST_VARIATION_STEP: f64 = 1e-4;

/// `(x, φ(x), ∇∘φ(x))` at a node.
pub(crate) fn local<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    node: usize,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    Ok((p.coords(node), phi.values[node].clone(), phi.jacobian(p, node)?))
}

/// Trapezoid quadrature of `L(x, φ, ∇∘φ)·√det g`.
pub fn energy<T: Real>(p: &EnergyProblem<T>, phi: &FieldConfiguration<T>) -> Result<T> {
    phi.check(p)?;
    let mut e = T::zero();
    for node in 0..p.nodes() {
        let (x, s, a) = local(p, phi, node)?;
        e += p.lagrangian.value(&x, &s, &a)? * p.volume_weight(node)?;
    }
    Ok(e)
}

/// `√det g · L_{,v}` at coordinates, from the analytic map.
fn flux_of_map<T: Real>(p: &EnergyProblem<T>, map: &SmoothMap<T>, x: &[T]) -> Result<Vec<T>> {
    let (s, a) = (map.eval(x)?, map.jacobian_at(x)?);
    let pd = partials_of(p.lagrangian.as_ref(), x, &s, &a)?;
    let vol = p.m().volume_density_at(x)?;
    Ok(pd.v.into_iter().map(|v| v * vol).collect())
}

/// `L_{,σ} − div_M L_{,v}` at every node, all pulled back along `φ`.
///
/// With an analytic map the divergence differentiates the exact flux;
/// otherwise it uses grid stencils on the sampled flux.
pub fn residual_field<T: Real>(p: &EnergyProblem<T>, phi: &FieldConfiguration<T>) -> Result<Vec<Vec<T>>> {
    phi.check(p)?;
    let (ns, nm) = (p.s().dim(), p.m().dim());
    let lag = p.lagrangian.as_ref();
    let stencil_flux: Option<Vec<Vec<T>>> = match &phi.map {
        Some(_) => None,
        None => Some(
            (0..p.nodes())
                .map(|node| {
                    let (x, s, a) = local(p, phi, node)?;
                    let vol = p.m().volume_density_at(&x)?;
                    Ok(partials_of(lag, &x, &s, &a)?.v.into_iter().map(|v| v * vol).collect())
                })
                .collect::<Result<_>>()?,
        ),
    };
    (0..p.nodes())
        .map(|node| {
            let (x, s, a) = local(p, phi, node)?;
            let pd = partials_of(lag, &x, &s, &a)?;
            let dq = match (&phi.map, &stencil_flux) {
                (Some(map), _) => {
                    let f = |y: &[T]| flux_of_map(p, map, y);
                    gradient_fd(&f, &x, fd_step(0))?
                }
                (None, Some(q)) => p.grid.jacobian(q, node),
                (None, None) => unreachable!("flux source is always set"),
            };
            let vol = p.m().volume_density_at(&x)?;
            let gm = p.s().christoffel_at(&s)?;
            Ok((0..ns)
                .map(|c| {
                    let mut div = T::zero();
                    for i in 0..nm {
                        div += dq[(c * nm + i) * nm + i];
                    }
                    div /= vol;
                    for b in 0..ns {
                        for i in 0..nm {
                            for e in 0..ns {
                                div -= gm[(e * ns + b) * ns + c] * a[b * nm + i] * pd.v[e * nm + i];
                            }
                        }
                    }
                    pd.sigma[c] - div
                })
                .collect())
        })
        .collect()
}

/// Euler-Lagrange residual split into interior values and boundary
/// conormal values `L_{,v}·ν`, both covectors along `φ`.
#[derive(Clone, Debug)]
pub struct EulerLagrangeResidual<T> {
    pub interior: Vec<(usize, Vec<T>)>,
    pub boundary: Vec<(BoundaryNode<T>, Vec<T>)>,
}

impl<T: Real> EulerLagrangeResidual<T> {
    pub fn max_interior(&self) -> T {
        self.interior.iter().flat_map(|(_, r)| r.iter().map(|v| v.abs())).fold(T::zero(), T::max)
    }

    pub fn max_boundary(&self) -> T {
        self.boundary.iter().flat_map(|(_, r)| r.iter().map(|v| v.abs())).fold(T::zero(), T::max)
    }
}

/// `L_{,v}` contracted with the unit outward conormal at a boundary entry.
pub fn boundary_flux<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    b: &BoundaryNode<T>,
) -> Result<Vec<T>> {
    let (ns, nm) = (p.s().dim(), p.m().dim());
    let (x, s, a) = local(p, phi, b.node)?;
    let pd = partials_of(p.lagrangian.as_ref(), &x, &s, &a)?;
    let (nu, _) = p.conormal(b)?;
    Ok((0..ns).map(|c| (0..nm).map(|i| pd.v[c * nm + i] * nu[i]).sum()).collect())
}

pub fn euler_lagrange_residual<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
) -> Result<EulerLagrangeResidual<T>> {
    let field = residual_field(p, phi)?;
    let interior = field.into_iter().enumerate().filter(|(k, _)| !p.grid.is_boundary(*k)).collect();
    let boundary = p
        .grid
        .boundary_nodes()
        .into_iter()
        .map(|b| {
            let r = boundary_flux(p, phi, &b)?;
            Ok((b, r))
        })
        .collect::<Result<_>>()?;
    Ok(EulerLagrangeResidual { interior, boundary })
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Rejects variations that are nonzero on the boundary of a fixed problem.
pub fn check_admissible<T: Real>(p: &EnergyProblem<T>, a: &VariationField<T>) -> Result<()> {
    if a.values.len() != p.nodes() {
        return Err(Error::usage(format!("variation has {} nodes, grid has {}", a.values.len(), p.nodes())));
    }
    if p.boundary == Boundary::Fixed {
        let m = a.boundary_magnitude(p);
        if m > lit(1e-12) {
            return Err(Error::NotAdmissible { magnitude: m.as_f64() });
        }
    }
    Ok(())
}

/// `∫ A·(L_{,σ} − div L_{,v}) dV + ∮ A·L_{,v}·ν dV̄`, the boundary
/// integral only for free problems.
pub fn first_variation_formula<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    a: &VariationField<T>,
) -> Result<T> {
    check_admissible(p, a)?;
    let res = residual_field(p, phi)?;
    let mut total = T::zero();
    for (node, r) in res.iter().enumerate() {
        total += dot(&a.values[node], r) * p.volume_weight(node)?;
    }
    if p.boundary == Boundary::Free {
        for b in p.grid.boundary_nodes() {
            let (_, w) = p.conormal(&b)?;
            total += dot(&a.values[b.node], &boundary_flux(p, phi, &b)?) * w;
        }
    }
    Ok(total)
}

/// `∫ (L_{,σ}·A + L_{,v}:∇A) dV`, the form before integration by parts.
pub fn first_variation_weak<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    a: &VariationField<T>,
) -> Result<T> {
    check_admissible(p, a)?;
    let mut total = T::zero();
    for node in 0..p.nodes() {
        let (x, s, j) = local(p, phi, node)?;
        let pd = partials_of(p.lagrangian.as_ref(), &x, &s, &j)?;
        let da = a.covariant_derivative(p, phi, node)?;
        total += (dot(&pd.sigma, &a.values[node]) + dot(&pd.v, &da)) * p.volume_weight(node)?;
    }
    Ok(total)
}

/// `x ↦ exp(φ(x), Σ cₖ Aₖ(x))`, analytic when `φ` and every `Aₖ` are.
pub fn vary<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    terms: &[(T, &VariationField<T>)],
) -> Result<FieldConfiguration<T>> {
    let s = p.s().clone();
    let analytic: Option<Vec<_>> = terms.iter().map(|(c, f)| f.analytic.clone().map(|g| (*c, g))).collect();
    if let (Some(map), Some(fs)) = (&phi.map, analytic) {
        let inner = map.clone();
        let target = s.clone();
        let varied = SmoothMap::new(&format!("{}_varied", map.name()), p.m().clone(), s, move |x: &[T]| {
            let base = match inner.eval(x) {
                Ok(v) => v,
                Err(_) => return vec![T::nan(); target.dim()],
            };
            let mut dir = vec![T::zero(); target.dim()];
            for (c, f) in &fs {
                match f(x) {
                    Ok(v) => dir.iter_mut().zip(v).for_each(|(d, v)| *d += *c * v),
                    Err(_) => return vec![T::nan(); target.dim()],
                }
            }
            target
                .exp_map_steps(&base, &dir, T::one(), VARIATION_EXP_STEPS)
                .unwrap_or_else(|_| vec![T::nan(); target.dim()])
        });
        // chart failures surface as NaN above; report them as a chart exit
        let cfg = FieldConfiguration::from_map(p, varied).map_err(|e| chart_exit(p, e))?;
        if cfg.values.iter().flatten().any(|v| v.is_nan()) {
            return Err(chart_exit(p, Error::usage("")));
        }
        return Ok(cfg);
    }
    let values = (0..p.nodes())
        .map(|node| {
            let mut dir = vec![T::zero(); s.dim()];
            for (c, f) in terms {
                dir.iter_mut().zip(&f.values[node]).for_each(|(d, &v)| *d += *c * v);
            }
            s.exp_map_steps(&phi.values[node], &dir, T::one(), VARIATION_EXP_STEPS)
        })
        .collect::<Result<_>>()?;
    Ok(FieldConfiguration::from_values(values))
}

fn chart_exit<T: Real>(p: &EnergyProblem<T>, e: Error) -> Error {
    match e {
        Error::OutOfChart { .. } | Error::Usage(_) => {
            Error::ChartExit { manifold: p.s().name().to_string(), time: 1.0 }
        }
        other => other,
    }
}

/// Central difference of the energy along `ε ↦ exp(φ, εA)`.
pub fn first_variation_fd<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    a: &VariationField<T>,
    eps: T,
) -> Result<T> {
    let ep = energy(p, &vary(p, phi, &[(eps, a)])?)?;
    let em = energy(p, &vary(p, phi, &[(-eps, a)])?)?;
    Ok((ep - em) / (eps + eps))
}

/// Closed-form first variation and its finite-difference oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstVariation<T> {
    pub formula: T,
    pub fd: T,
}

pub fn first_variation<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    a: &VariationField<T>,
) -> Result<FirstVariation<T>> {
    Ok(FirstVariation {
        formula: first_variation_formula(p, phi, a)?,
        fd: first_variation_fd(p, phi, a, scaled(FIRST_VARIATION_STEP, 1.0 / 3.0))?,
    })
}

/// Vertical part of `∂_ε (∇∘Φ_ε)` at `ε = 0` for `Φ_ε = exp(φ, εA)`:
/// `∂_ε ∂ᵢΦᵃ + Γᵃ_bc Aᵇ ∂ᵢφᶜ`. Equals `∇A` when variation and material
/// derivatives commute.
pub fn material_variation<T: Real>(
    p: &EnergyProblem<T>,
    phi: &FieldConfiguration<T>,
    a: &VariationField<T>,
    node: usize,
) -> Result<Vec<T>> {
    let eps: T = scaled(FIRST_VARIATION_STEP, 1.0 / 3.0);
    let jp = vary(p, phi, &[(eps, a)])?.jacobian(p, node)?;
    let jm = vary(p, phi, &[(-eps, a)])?.jacobian(p, node)?;
    let (ns, nm) = (p.s().dim(), p.m().dim());
    let j = phi.jacobian(p, node)?;
    let gm = p.s().christoffel_at(&phi.values[node])?;
    let av = &a.values[node];
    Ok((0..ns * nm)
        .map(|k| {
            let (q, i) = (k / nm, k % nm);
            let mut v = (jp[k] - jm[k]) / (eps + eps);
            for b in 0..ns {
                for c in 0..ns {
                    v += gm[(q * ns + b) * ns + c] * av[b] * j[c * nm + i];
                }
            }
            v
        })
        .collect())
}

/// `H = L_{,v}:∇∘φ − L` at every node of an interval problem.
pub fn hamiltonian<T: Real>(p: &EnergyProblem<T>, phi: &FieldConfiguration<T>) -> Result<Vec<T>> {
    if p.grid.dim() != 1 {
        return Err(Error::DomainNotInterval);
    }
    phi.check(p)?;
    let lag = p.lagrangian.as_ref();
    (0..p.nodes())
        .map(|node| {
            let (x, s, a) = local(p, phi, node)?;
            let pd = partials_of(lag, &x, &s, &a)?;
            let mu = pd.mu.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if mu > lit(1e-6) {
                return Err(Error::NonAutonomousLagrangian { magnitude: mu.as_f64() });
            }
            Ok(dot(&pd.v, &a) - lag.value(&x, &s, &a)?)
        })
        .collect()
}

/// `max |H − H(0)| / |H(0)|`.
pub fn relative_drift<T: Real>(h: &[T]) -> T {
    let h0 = h.first().copied().unwrap_or_else(T::zero);
    let scale = if h0 == T::zero() { T::one() } else { h0.abs() };
    h.iter().fold(T::zero(), |m, &v| m.max((v - h0).abs())) / scale
}
