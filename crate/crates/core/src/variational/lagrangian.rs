//! First-order Lagrangians on `E = TS ⊗ T*M` with their partial covariant
//! derivatives.
//!
//! Fiber elements `A` are laid out `[a][i]` (`a` on `S`, `i` on `M`).

use std::sync::Arc;

use crate::covariant::{ConnectionMapData, PartialDerivatives};
use crate::error::{Error, Result};
use crate::manifolds::RiemannianManifold;
use crate::scalar::Real;

/// Exact second partial covariant derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondPartials<T> {
    /// `L_{,σσ}`, laid out `[a][b]`.
    pub ss: Vec<T>,
    /// `L_{,σv}`, laid out `[a][b][j]`: pairs `A^a` with `(∇B)^b_j`.
    pub sv: Vec<T>,
    /// `L_{,vσ}`, laid out `[a][i][b]`: pairs `(∇A)^a_i` with `B^b`.
    pub vs: Vec<T>,
    /// `L_{,vv}`, laid out `[a][i][b][j]`.
    pub vv: Vec<T>,
}

pub trait Lagrangian<T: Real>: Send + Sync {
    fn name(&self) -> &str;
    fn domain(&self) -> &Arc<RiemannianManifold<T>>;
    fn target(&self) -> &Arc<RiemannianManifold<T>>;
    fn value(&self, x: &[T], s: &[T], a: &[T]) -> Result<T>;

    /// Exact `(L_{,σ}, L_{,μ}, L_{,v})`, when known.
    fn partials(&self, _x: &[T], _s: &[T], _a: &[T]) -> Result<Option<PartialDerivatives<T>>> {
        Ok(None)
    }

    /// Exact second partials, when known.
    fn second_partials(&self, _x: &[T], _s: &[T], _a: &[T]) -> Result<Option<SecondPartials<T>>> {
        Ok(None)
    }
}

/// Exact partials if the Lagrangian provides them, else the numeric
/// partial covariant derivatives.
pub fn partials_of<T: Real>(l: &dyn Lagrangian<T>, x: &[T], s: &[T], a: &[T]) -> Result<PartialDerivatives<T>> {
    if let Some(p) = l.partials(x, s, a)? {
        return Ok(p);
    }
    numeric_partials(l, x, s, a)
}

/// Partials through the connection map, ignoring exact data.
pub fn numeric_partials<T: Real>(l: &dyn Lagrangian<T>, x: &[T], s: &[T], a: &[T]) -> Result<PartialDerivatives<T>> {
    let conn = ConnectionMapData::new(l.target().clone(), l.domain().clone());
    let f = |x: &[T], s: &[T], a: &[T]| l.value(x, s, a);
    conn.partial_covariant_derivatives(&f, x, s, a)
}

pub fn second_partials_of<T: Real>(l: &dyn Lagrangian<T>, x: &[T], s: &[T], a: &[T]) -> Result<SecondPartials<T>> {
    l.second_partials(x, s, a)?.ok_or_else(|| Error::MissingSecondPartials(l.name().to_string()))
}

/// `½ h_ab(s) Q^ij A^a_i A^b_j` for a symmetric `Q`.
fn quadratic<T: Real>(h: &[T], q: &[T], a: &[T], ns: usize, nm: usize) -> T {
    let mut v = T::zero();
    for p in 0..ns {
        for b in 0..ns {
            let hpb = h[p * ns + b];
            for i in 0..nm {
                for j in 0..nm {
                    v += hpb * q[i * nm + j] * a[p * nm + i] * a[b * nm + j];
                }
            }
        }
    }
    v * T::lit(0.5)
}

/// `h_ab Q^ij A^a_i`, laid out `[b][j]`.
fn quadratic_gradient<T: Real>(h: &[T], q: &[T], a: &[T], ns: usize, nm: usize) -> Vec<T> {
    let mut out = vec![T::zero(); ns * nm];
    for b in 0..ns {
        for j in 0..nm {
            let mut v = T::zero();
            for p in 0..ns {
                for i in 0..nm {
                    v += h[p * ns + b] * q[i * nm + j] * a[p * nm + i];
                }
            }
            out[b * nm + j] = v;
        }
    }
    out
}

/// `h ⊠ Q`, laid out `[a][i][b][j]`.
fn box_product<T: Real>(h: &[T], q: &[T], ns: usize, nm: usize) -> Vec<T> {
    let mut out = vec![T::zero(); ns * nm * ns * nm];
    for a in 0..ns {
        for i in 0..nm {
            for b in 0..ns {
                for j in 0..nm {
                    out[((a * nm + i) * ns + b) * nm + j] = h[a * ns + b] * q[i * nm + j];
                }
            }
        }
    }
    out
}

/// Dirichlet energy density `½|A|²_k` with `k = h ⊠ g⁻¹`.
#[derive(Clone, Debug)]
pub struct Kinetic<T> {
    domain: Arc<RiemannianManifold<T>>,
    target: Arc<RiemannianManifold<T>>,
}

impl<T: Real> Kinetic<T> {
    pub fn new(domain: Arc<RiemannianManifold<T>>, target: Arc<RiemannianManifold<T>>) -> Self {
        Kinetic { domain, target }
    }
}

impl<T: Real> Lagrangian<T> for Kinetic<T> {
    fn name(&self) -> &str {
        "kinetic"
    }
    fn domain(&self) -> &Arc<RiemannianManifold<T>> {
        &self.domain
    }
    fn target(&self) -> &Arc<RiemannianManifold<T>> {
        &self.target
    }

    fn value(&self, x: &[T], s: &[T], a: &[T]) -> Result<T> {
        let (h, gi) = (self.target.metric_at(s)?, self.domain.inverse_metric_at(x)?);
        Ok(quadratic(&h, &gi, a, self.target.dim(), self.domain.dim()))
    }

    fn partials(&self, x: &[T], s: &[T], a: &[T]) -> Result<Option<PartialDerivatives<T>>> {
        let (ns, nm) = (self.target.dim(), self.domain.dim());
        let (h, gi) = (self.target.metric_at(s)?, self.domain.inverse_metric_at(x)?);
        Ok(Some(PartialDerivatives {
            sigma: vec![T::zero(); ns],
            mu: vec![T::zero(); nm],
            v: quadratic_gradient(&h, &gi, a, ns, nm),
        }))
    }

    fn second_partials(&self, x: &[T], s: &[T], _a: &[T]) -> Result<Option<SecondPartials<T>>> {
        let (ns, nm) = (self.target.dim(), self.domain.dim());
        let (h, gi) = (self.target.metric_at(s)?, self.domain.inverse_metric_at(x)?);
        Ok(Some(SecondPartials {
            ss: vec![T::zero(); ns * ns],
            sv: vec![T::zero(); ns * ns * nm],
            vs: vec![T::zero(); ns * nm * ns],
            vv: box_product(&h, &gi, ns, nm),
        }))
    }
}

pub type CoordScalar<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type CoordVector<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// A potential `V: S → ℝ` with exact coordinate gradient and Hessian.
#[derive(Clone)]
pub struct Potential<T> {
    pub value: CoordScalar<T>,
    /// `∂_a V`.
    pub gradient: CoordVector<T>,
    /// `∂_a ∂_b V`, laid out `[a][b]`.
    pub hessian: CoordVector<T>,
}

impl<T: Real> Potential<T> {
    /// `½ k |s − c|²` in coordinates.
    pub fn quadratic(stiffness: T, center: Vec<T>) -> Self {
        let (c1, c2) = (center.clone(), center);
        let n = c1.len();
        Potential {
            value: Arc::new(move |s: &[T]| {
                stiffness * T::lit(0.5) * s.iter().zip(&c1).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>()
            }),
            gradient: Arc::new(move |s: &[T]| s.iter().zip(&c2).map(|(&a, &b)| stiffness * (a - b)).collect()),
            hessian: Arc::new(move |_| {
                let mut h = vec![T::zero(); n * n];
                for i in 0..n {
                    h[i * n + i] = stiffness;
                }
                h
            }),
        }
    }
}

/// `½|A|²_k − V(s)`.
#[derive(Clone)]
pub struct KineticMinusPotential<T> {
    kinetic: Kinetic<T>,
    potential: Potential<T>,
}

impl<T: Real> KineticMinusPotential<T> {
    pub fn new(
        domain: Arc<RiemannianManifold<T>>,
        target: Arc<RiemannianManifold<T>>,
        potential: Potential<T>,
    ) -> Self {
        KineticMinusPotential { kinetic: Kinetic::new(domain, target), potential }
    }
}

impl<T: Real> Lagrangian<T> for KineticMinusPotential<T> {
    fn name(&self) -> &str {
        "kinetic_potential"
    }
    fn domain(&self) -> &Arc<RiemannianManifold<T>> {
        &self.kinetic.domain
    }
    fn target(&self) -> &Arc<RiemannianManifold<T>> {
        &self.kinetic.target
    }

    fn value(&self, x: &[T], s: &[T], a: &[T]) -> Result<T> {
        Ok(self.kinetic.value(x, s, a)? - (self.potential.value)(s))
    }

    fn partials(&self, x: &[T], s: &[T], a: &[T]) -> Result<Option<PartialDerivatives<T>>> {
        let mut p = self.kinetic.partials(x, s, a)?.expect("kinetic partials are exact");
        p.sigma = (self.potential.gradient)(s).into_iter().map(|g| -g).collect();
        Ok(Some(p))
    }

    fn second_partials(&self, x: &[T], s: &[T], a: &[T]) -> Result<Option<SecondPartials<T>>> {
        let mut sp = self.kinetic.second_partials(x, s, a)?.expect("kinetic second partials are exact");
        let n = self.kinetic.target.dim();
        let gm = self.kinetic.target.christoffel_at(s)?;
        let (dv, hv) = ((self.potential.gradient)(s), (self.potential.hessian)(s));
        // covariant Hessian ∂²V − Γᵏ_ab ∂ₖV, negated
        for a in 0..n {
            for b in 0..n {
                let corr: T = (0..n).map(|k| gm[(k * n + a) * n + b] * dv[k]).sum();
                sp.ss[a * n + b] = -(hv[a * n + b] - corr);
            }
        }
        Ok(Some(sp))
    }
}

/// `½ h_ab(s) Q^ij A^a_i A^b_j` for a constant symmetric positive-definite
/// coordinate matrix `Q` on `M`.
#[derive(Clone, Debug)]
pub struct Anisotropic<T> {
    domain: Arc<RiemannianManifold<T>>,
    target: Arc<RiemannianManifold<T>>,
    q: Vec<T>,
}

impl<T: Real> Anisotropic<T> {
    pub fn new(domain: Arc<RiemannianManifold<T>>, target: Arc<RiemannianManifold<T>>, q: Vec<T>) -> Result<Self> {
        let n = domain.dim();
        if q.len() != n * n {
            return Err(Error::usage(format!("anisotropy matrix needs {} entries", n * n)));
        }
        if crate::linalg::asymmetry(&q, n) > T::lit(1e-12) {
            return Err(Error::usage("anisotropy matrix must be symmetric"));
        }
        if crate::linalg::symmetric_eigenvalues(&q, n)[0] <= T::zero() {
            return Err(Error::usage("anisotropy matrix must be positive definite"));
        }
        Ok(Anisotropic { domain, target, q })
    }
}

impl<T: Real> Lagrangian<T> for Anisotropic<T> {
    fn name(&self) -> &str {
        "anisotropic"
    }
    fn domain(&self) -> &Arc<RiemannianManifold<T>> {
        &self.domain
    }
    fn target(&self) -> &Arc<RiemannianManifold<T>> {
        &self.target
    }

    fn value(&self, _x: &[T], s: &[T], a: &[T]) -> Result<T> {
        let h = self.target.metric_at(s)?;
        Ok(quadratic(&h, &self.q, a, self.target.dim(), self.domain.dim()))
    }

    fn partials(&self, x: &[T], s: &[T], a: &[T]) -> Result<Option<PartialDerivatives<T>>> {
        let (ns, nm) = (self.target.dim(), self.domain.dim());
        let h = self.target.metric_at(s)?;
        let v = quadratic_gradient(&h, &self.q, a, ns, nm);
        // L_{,μ} pairs L_v with the transport correction δA^p_i = Γᵏ_ci A^p_k
        let gm = self.domain.christoffel_at(x)?;
        let mu = (0..nm)
            .map(|c| {
                let mut m = T::zero();
                for p in 0..ns {
                    for i in 0..nm {
                        for k in 0..nm {
                            m += gm[(k * nm + c) * nm + i] * a[p * nm + k] * v[p * nm + i];
                        }
                    }
                }
                m
            })
            .collect();
        Ok(Some(PartialDerivatives { sigma: vec![T::zero(); ns], mu, v }))
    }

    fn second_partials(&self, _x: &[T], s: &[T], _a: &[T]) -> Result<Option<SecondPartials<T>>> {
        let (ns, nm) = (self.target.dim(), self.domain.dim());
        let h = self.target.metric_at(s)?;
        Ok(Some(SecondPartials {
            ss: vec![T::zero(); ns * ns],
            sv: vec![T::zero(); ns * ns * nm],
            vs: vec![T::zero(); ns * nm * ns],
            vv: box_product(&h, &self.q, ns, nm),
        }))
    }
}
