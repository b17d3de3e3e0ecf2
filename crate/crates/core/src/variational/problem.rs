//! Discretized energy problems: uniform grids over a chart of `M`, field
//! configurations `φ: M → S` and variation fields along them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::manifolds::{RiemannianManifold, SmoothMap};
use crate::scalar::{lit, scaled, Real};

use super::lagrangian::Lagrangian;

/// Integration domain in coordinates of `M`; `n` counts intervals.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain<T> {
    Interval { a: T, b: T, n: usize },
    Rectangle { x: (T, T, usize), y: (T, T, usize) },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Variations vanish on the boundary and boundary integrals drop out.
    Fixed,
    /// Boundary integrals are evaluated with the unit outward conormal.
    Free,
}

/// Uniform tensor-product grid; node `k` has multi-index in row-major order.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    shape: Vec<usize>,
    lo: Vec<T>,
    step: Vec<T>,
}

/// One boundary quadrature entry: a node on the face normal to `axis`.
#[derive(Clone, Debug)]
pub struct BoundaryNode<T> {
    pub node: usize,
    pub axis: usize,
    /// `+1` on the upper face, `−1` on the lower one.
    pub sign: T,
    /// Coordinate trapezoid weight along the face (1 on an interval).
    pub weight: T,
}

impl<T: Real> Grid<T> {
    pub fn new(domain: &Domain<T>) -> Result<Self> {
        let axes: Vec<(T, T, usize)> = match *domain {
            Domain::Interval { a, b, n } => vec![(a, b, n)],
            Domain::Rectangle { x, y } => vec![x, y],
        };
        for &(a, b, n) in &axes {
            if n < 8 {
                return Err(Error::usage(format!("grids need at least 8 intervals per axis, got {n}")));
            }
            if !(b > a) {
                return Err(Error::usage("grid bounds must satisfy a < b"));
            }
        }
        Ok(Grid {
            shape: axes.iter().map(|&(_, _, n)| n + 1).collect(),
            lo: axes.iter().map(|&(a, _, _)| a).collect(),
            step: axes.iter().map(|&(a, b, n)| (b - a) / T::from_usize(n).expect("grid size")).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn step(&self) -> &[T] {
        &self.step
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi(&self, node: usize) -> Vec<usize> {
        let mut rest = node;
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = rest % self.shape[k];
            rest /= self.shape[k];
        }
        out
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn coords(&self, node: usize) -> Vec<T> {
        self.multi(node)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.lo[k] + self.step[k] * T::from_usize(i).expect("index"))
            .collect()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.multi(node).iter().zip(&self.shape).any(|(&i, &n)| i == 0 || i + 1 == n)
    }

    /// Trapezoid weight in coordinates (without the volume density).
    pub fn weight(&self, node: usize) -> T {
        let half: T = lit(0.5);
        self.multi(node)
            .iter()
            .enumerate()
            .map(|(k, &i)| if i == 0 || i + 1 == self.shape[k] { self.step[k] * half } else { self.step[k] })
            .fold(T::one(), |a, b| a * b)
    }

    /// Boundary quadrature: every node on every face, with trapezoid weights
    /// along the face.
    pub fn boundary_nodes(&self) -> Vec<BoundaryNode<T>> {
        let half: T = lit(0.5);
        let mut out = Vec::new();
        for node in 0..self.len() {
            let m = self.multi(node);
            for axis in 0..self.dim() {
                let sign = if m[axis] == 0 {
                    -T::one()
                } else if m[axis] + 1 == self.shape[axis] {
                    T::one()
                } else {
                    continue;
                };
                let weight = (0..self.dim())
                    .filter(|&k| k != axis)
                    .map(|k| if m[k] == 0 || m[k] + 1 == self.shape[k] { self.step[k] * half } else { self.step[k] })
                    .fold(T::one(), |a, b| a * b);
                out.push(BoundaryNode { node, axis, sign, weight });
            }
        }
        out
    }

    /// Derivative of node data along `axis`: central in the interior and a
    /// one-sided four-point stencil at the ends whose leading error term
    /// `h²f'''/6` matches the central one.
    pub fn derivative(&self, values: &[Vec<T>], node: usize, axis: usize) -> Vec<T> {
        let m = self.multi(node);
        let n = self.shape[axis];
        let h = self.step[axis];
        let at = |i: usize| {
            let mut mm = m.clone();
            mm[axis] = i;
            &values[self.flat(&mm)]
        };
        let i = m[axis];
        let comps = values[node].len();
        let (c, idx, sign): (Vec<T>, Vec<usize>, T) = if i > 0 && i + 1 < n {
            (vec![lit(-0.5), lit(0.5)], vec![i - 1, i + 1], T::one())
        } else if i == 0 {
            (vec![lit(-2.0), lit(3.5), lit(-2.0), lit(0.5)], vec![0, 1, 2, 3], T::one())
        } else {
            (vec![lit(-2.0), lit(3.5), lit(-2.0), lit(0.5)], vec![n - 1, n - 2, n - 3, n - 4], -T::one())
        };
        (0..comps)
            .map(|a| {
                let s: T = c.iter().zip(&idx).map(|(&w, &k)| w * at(k)[a]).sum();
                sign * s / h
            })
            .collect()
    }

    /// Coordinate Jacobian of node data, laid out `[a][i]`.
    pub fn jacobian(&self, values: &[Vec<T>], node: usize) -> Vec<T> {
        let d = self.dim();
        let cols: Vec<Vec<T>> = (0..d).map(|k| self.derivative(values, node, k)).collect();
        let m = values[node].len();
        let mut out = vec![T::zero(); m * d];
        for (k, col) in cols.iter().enumerate() {
            for a in 0..m {
                out[a * d + k] = col[a];
            }
        }
        out
    }

    /// Second partials at an interior node, laid out `[a][i][j]`.
    pub fn second_derivatives(&self, values: &[Vec<T>], node: usize) -> Vec<T> {
        let d = self.dim();
        let m = self.multi(node);
        let comps = values[node].len();
        let mut out = vec![T::zero(); comps * d * d];
        let shifted = |di: &[(usize, isize)]| {
            let mut mm = m.clone();
            for &(k, s) in di {
                mm[k] = (mm[k] as isize + s) as usize;
            }
            &values[self.flat(&mm)]
        };
        let two: T = lit(2.0);
        let four: T = lit(4.0);
        for i in 0..d {
            for j in i..d {
                for a in 0..comps {
                    let v = if i == j {
                        let h = self.step[i];
                        (shifted(&[(i, 1)])[a] - two * values[node][a] + shifted(&[(i, -1)])[a]) / (h * h)
                    } else {
                        (shifted(&[(i, 1), (j, 1)])[a]
                            - shifted(&[(i, 1), (j, -1)])[a]
                            - shifted(&[(i, -1), (j, 1)])[a]
                            + shifted(&[(i, -1), (j, -1)])[a])
                            / (four * self.step[i] * self.step[j])
                    };
                    out[(a * d + i) * d + j] = v;
                    out[(a * d + j) * d + i] = v;
                }
            }
        }
        out
    }
}

/// An energy functional `𝓛(φ) = ∫_M L(∇∘φ) dV_g` over a grid.
#[derive(Clone)]
pub struct EnergyProblem<T: Real> {
    pub domain: Domain<T>,
    pub grid: Grid<T>,
    pub lagrangian: Arc<dyn Lagrangian<T>>,
    pub boundary: Boundary,
    /// Largest Euler-Lagrange residual accepted as critical.
    pub critical_tolerance: T,
}

impl<T: Real> std::fmt::Debug for EnergyProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnergyProblem")
            .field("domain", &self.domain)
            .field("lagrangian", &self.lagrangian.name())
            .field("boundary", &self.boundary)
            .finish()
    }
}

impl<T: Real> EnergyProblem<T> {
    pub fn new(domain: Domain<T>, lagrangian: Arc<dyn Lagrangian<T>>, boundary: Boundary) -> Result<Self> {
        let grid = Grid::new(&domain)?;
        let m = lagrangian.domain();
        if m.dim() != grid.dim() {
            return Err(Error::usage(format!(
                "domain grid is {}-dimensional but {} has dimension {}",
                grid.dim(),
                m.name(),
                m.dim()
            )));
        }
        for node in 0..grid.len() {
            m.check(&grid.coords(node))?;
        }
        Ok(EnergyProblem { domain, grid, lagrangian, boundary, critical_tolerance: scaled(1e-5, 1.0 / 3.0) })
    }

    pub fn with_critical_tolerance(mut self, tol: T) -> Self {
        self.critical_tolerance = tol;
        self
    }

    pub fn m(&self) -> &Arc<RiemannianManifold<T>> {
        self.lagrangian.domain()
    }

    pub fn s(&self) -> &Arc<RiemannianManifold<T>> {
        self.lagrangian.target()
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn coords(&self, node: usize) -> Vec<T> {
        self.grid.coords(node)
    }

    /// Quadrature weight times `√det g`.
    pub fn volume_weight(&self, node: usize) -> Result<T> {
        Ok(self.grid.weight(node) * self.m().volume_density_at(&self.coords(node))?)
    }

    /// Unit outward conormal `ν` (a covector on `M`) and boundary volume
    /// weight for a boundary quadrature entry.
    pub fn conormal(&self, b: &BoundaryNode<T>) -> Result<(Vec<T>, T)> {
        let x = self.coords(b.node);
        let n = self.m().dim();
        let g = self.m().metric_at(&x)?;
        let gi = self.m().inverse_metric_at(&x)?;
        let mut nu = vec![T::zero(); n];
        nu[b.axis] = b.sign / gi[b.axis * n + b.axis].sqrt();
        let dens = (0..n).filter(|&k| k != b.axis).map(|k| g[k * n + k].sqrt()).fold(T::one(), |a, c| a * c);
        Ok((nu, b.weight * dens))
    }
}

/// Sampled map `φ: M → S`; derivatives come from the analytic map when
/// present, then from stored Jacobians, then from grid stencils.
#[derive(Clone, Debug)]
pub struct FieldConfiguration<T> {
    pub values: Vec<Vec<T>>,
    pub jacobians: Option<Vec<Vec<T>>>,
    pub map: Option<SmoothMap<T>>,
}

impl<T: Real> FieldConfiguration<T> {
    pub fn from_values(values: Vec<Vec<T>>) -> Self {
        FieldConfiguration { values, jacobians: None, map: None }
    }

    pub fn from_map(p: &EnergyProblem<T>, map: SmoothMap<T>) -> Result<Self> {
        let values = (0..p.nodes()).map(|k| map.eval(&p.coords(k))).collect::<Result<_>>()?;
        Ok(FieldConfiguration { values, jacobians: None, map: Some(map) })
    }

    pub fn with_jacobians(mut self, jacobians: Vec<Vec<T>>) -> Self {
        self.jacobians = Some(jacobians);
        self
    }

    /// Drops analytic and stored derivative data, leaving grid stencils.
    pub fn sampled(&self) -> Self {
        FieldConfiguration::from_values(self.values.clone())
    }

    pub fn check(&self, p: &EnergyProblem<T>) -> Result<()> {
        if self.values.len() != p.nodes() {
            return Err(Error::usage(format!("configuration has {} nodes, grid has {}", self.values.len(), p.nodes())));
        }
        for v in &self.values {
            p.s().check(v)?;
        }
        Ok(())
    }

    /// `∂ᵢφᵃ` at a node, laid out `[a][i]`.
    pub fn jacobian(&self, p: &EnergyProblem<T>, node: usize) -> Result<Vec<T>> {
        if let Some(m) = &self.map {
            return m.jacobian_at(&p.coords(node));
        }
        if let Some(j) = &self.jacobians {
            return Ok(j[node].clone());
        }
        Ok(p.grid.jacobian(&self.values, node))
    }
}

/// Coordinate closure for a vector field along `φ`.
pub type VectorFn<T> = Arc<dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync>;

/// A vector field `A` along `φ`: `A(x) ∈ T_{φ(x)}S`.
#[derive(Clone)]
pub struct VariationField<T> {
    pub values: Vec<Vec<T>>,
    /// Exact covariant derivative `∇A` at each node, laid out `[a][i]`.
    pub derivatives: Option<Vec<Vec<T>>>,
    pub analytic: Option<VectorFn<T>>,
}

impl<T> std::fmt::Debug for VariationField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VariationField")
            .field("nodes", &self.values.len())
            .field("stored_derivatives", &self.derivatives.is_some())
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl<T: Real> VariationField<T> {
    pub fn from_values(values: Vec<Vec<T>>) -> Self {
        VariationField { values, derivatives: None, analytic: None }
    }

    pub fn from_fn(p: &EnergyProblem<T>, f: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static) -> Result<Self> {
        let values = (0..p.nodes()).map(|k| f(&p.coords(k))).collect::<Result<_>>()?;
        Ok(VariationField { values, derivatives: None, analytic: Some(Arc::new(f)) })
    }

    pub fn with_derivatives(mut self, d: Vec<Vec<T>>) -> Self {
        self.derivatives = Some(d);
        self
    }

    /// `αA + βB`, keeping whatever derivative data both carry.
    pub fn combine(&self, alpha: T, other: &VariationField<T>, beta: T) -> VariationField<T> {
        let lin = |u: &[Vec<T>], v: &[Vec<T>]| -> Vec<Vec<T>> {
            u.iter().zip(v).map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| alpha * x + beta * y).collect()).collect()
        };
        VariationField {
            values: lin(&self.values, &other.values),
            derivatives: match (&self.derivatives, &other.derivatives) {
                (Some(a), Some(b)) => Some(lin(a, b)),
                _ => None,
            },
            analytic: match (&self.analytic, &other.analytic) {
                (Some(f), Some(g)) => {
                    let (f, g) = (f.clone(), g.clone());
                    Some(Arc::new(move |x: &[T]| {
                        Ok(f(x)?.iter().zip(g(x)?).map(|(&a, b)| alpha * a + beta * b).collect())
                    }) as VectorFn<T>)
                }
                _ => None,
            },
        }
    }

    /// Largest component magnitude on the boundary.
    pub fn boundary_magnitude(&self, p: &EnergyProblem<T>) -> T {
        (0..p.nodes())
            .filter(|&k| p.grid.is_boundary(k))
            .flat_map(|k| self.values[k].iter().map(|v| v.abs()))
            .fold(T::zero(), T::max)
    }

    /// `(∇A)^a_i = ∂ᵢAᵃ + Γ^a_bc(φ) Aᵇ ∂ᵢφᶜ` at a node.
    pub fn covariant_derivative(
        &self,
        p: &EnergyProblem<T>,
        phi: &FieldConfiguration<T>,
        node: usize,
    ) -> Result<Vec<T>> {
        if let Some(d) = &self.derivatives {
            return Ok(d[node].clone());
        }
        let x = p.coords(node);
        let partial = match &self.analytic {
            Some(f) => {
                let g = |y: &[T]| f(y);
                crate::manifolds::gradient_fd(&g, &x, crate::manifolds::fd_step(0))?
            }
            None => p.grid.jacobian(&self.values, node),
        };
        let (ns, nm) = (p.s().dim(), p.m().dim());
        let gm = p.s().christoffel_at(&phi.values[node])?;
        let j = phi.jacobian(p, node)?;
        let a = &self.values[node];
        let mut out = partial;
        for q in 0..ns {
            for i in 0..nm {
                let mut v = T::zero();
                for b in 0..ns {
                    for c in 0..ns {
                        v += gm[(q * ns + b) * ns + c] * a[b] * j[c * nm + i];
                    }
                }
                out[q * nm + i] += v;
            }
        }
        Ok(out)
    }
}
