//! Tensor fields, sections along maps, and their covariant derivatives.
//!
//! A field over a base manifold `M` is a callable returning component data
//! for a list of axis slots. Each slot is a tangent or cotangent factor of
//! some manifold `N`, optionally pulled back along a map `f: M → N`. The
//! covariant derivative adds one Christoffel correction per slot:
//!
//! * vector factor: `+ Γ_N^a_bc(f(x)) ∂ᵢf^c σ^b`
//! * covector factor: `− Γ_N^b_ca(f(x)) ∂ᵢf^c σ_b`
//!
//! which covers fields on `M`, sections along maps, and mixed two-point
//! tensors with one routine.

use std::fmt;
use std::sync::Arc;

use crate::bundle::{Base, BundleType};
use crate::error::{Error, Result};
use crate::linalg;
use crate::manifolds::{fd_step, gradient_fd, RiemannianManifold, SmoothMap};
use crate::scalar::{scaled, Real};
use crate::tensor::{for_each_index, AxisTag, Permutation, TypedTensor, Variance};

/// Component function of a field: base coordinates to flattened data.
pub type FieldFn<T> = Arc<dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync>;

/// One tensor factor of a field.
#[derive(Clone)]
pub struct Slot<T> {
    pub manifold: Arc<RiemannianManifold<T>>,
    /// `None` means the factor lives over the base point itself.
    pub map: Option<SmoothMap<T>>,
    pub variance: Variance,
}

impl<T> fmt::Debug for Slot<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.map.as_ref().map(|m| format!("{}*", m.name())).unwrap_or_default(),
            if self.variance == Variance::Vector { "T" } else { "T*" },
            self.manifold.name()
        )
    }
}

impl<T: Real> Slot<T> {
    pub fn vector(manifold: Arc<RiemannianManifold<T>>) -> Self {
        Slot { manifold, map: None, variance: Variance::Vector }
    }

    pub fn covector(manifold: Arc<RiemannianManifold<T>>) -> Self {
        Slot { manifold, map: None, variance: Variance::Covector }
    }

    /// A factor of `f*TN` (or `f*T*N`), `N` the codomain of `f`.
    pub fn along(map: &SmoothMap<T>, variance: Variance) -> Self {
        Slot { manifold: map.codomain().clone(), map: Some(map.clone()), variance }
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    /// Point of `N` over which the fiber sits.
    pub fn fiber_point(&self, x: &[T]) -> Result<Vec<T>> {
        match &self.map {
            Some(f) => f.eval(x),
            None => Ok(x.to_vec()),
        }
    }

    /// `∂ᵢf^c`, laid out `[c][i]`.
    fn jacobian(&self, x: &[T]) -> Result<Vec<T>> {
        match &self.map {
            Some(f) => f.jacobian_at(x),
            None => Ok(linalg::identity(x.len())),
        }
    }

    pub fn tag(&self, x: &[T]) -> Result<AxisTag> {
        let p = self.fiber_point(x)?;
        Ok(match self.variance {
            Variance::Vector => self.manifold.vector_tag(&p),
            Variance::Covector => self.manifold.covector_tag(&p),
        })
    }

    pub fn btype(&self) -> BundleType {
        let atom = match self.variance {
            Variance::Vector => BundleType::tangent(self.manifold.name()),
            Variance::Covector => BundleType::cotangent(self.manifold.name()),
        };
        match &self.map {
            Some(f) => BundleType::pullback(f.name(), atom),
            None => atom,
        }
    }

    /// The same factor pulled back along `psi` (whose codomain is the old base).
    fn pulled_back(&self, psi: &SmoothMap<T>) -> Result<Self> {
        let map = match &self.map {
            None => psi.clone(),
            Some(f) => SmoothMap::compose(f, psi, &format!("{}∘{}", f.name(), psi.name()))?,
        };
        Ok(Slot { manifold: self.manifold.clone(), map: Some(map), variance: self.variance })
    }
}

/// A smooth section of a tensor bundle over `base`, given in coordinates.
#[derive(Clone)]
pub struct TensorField<T> {
    base: Arc<RiemannianManifold<T>>,
    slots: Vec<Slot<T>>,
    eval: FieldFn<T>,
    /// Exact first partials, laid out `[component][direction]`.
    partials: Option<FieldFn<T>>,
    /// Number of finite differences already folded into `eval`.
    depth: usize,
}

/// A section of `φ*F`: a field whose slots are pulled back along `φ`.
pub type SectionAlongMap<T> = TensorField<T>;
/// The tangent map `∇∘φ` as a section of `φ*TS ⊗ T*M`.
pub type TwoPointField<T> = TensorField<T>;

impl<T> fmt::Debug for TensorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField")
            .field("base", &self.base.name())
            .field("slots", &self.slots)
            .field("exact_partials", &self.partials.is_some())
            .field("depth", &self.depth)
            .finish()
    }
}

fn tensor_at<T: Real>(tags: Vec<AxisTag>, data: Vec<T>) -> Result<TypedTensor<T>> {
    TypedTensor::new(tags, data)
}

/// Splits `[comp][dir]` partial data into one component vector per direction.
fn split_dirs<T: Real>(p: &[T], n: usize) -> Vec<Vec<T>> {
    let m = p.len() / n;
    (0..n).map(|i| (0..m).map(|c| p[c * n + i]).collect()).collect()
}

fn join_dirs<T: Real>(cols: &[Vec<T>]) -> Vec<T> {
    let n = cols.len();
    let m = cols.first().map_or(0, Vec::len);
    let mut out = vec![T::zero(); m * n];
    for (i, col) in cols.iter().enumerate() {
        for (c, &v) in col.iter().enumerate() {
            out[c * n + i] = v;
        }
    }
    out
}

impl<T: Real> TensorField<T> {
    pub fn new(
        base: Arc<RiemannianManifold<T>>,
        slots: Vec<Slot<T>>,
        eval: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Self {
        TensorField { base, slots, eval: Arc::new(eval), partials: None, depth: 0 }
    }

    /// Attaches exact partials `∂ᵢσ`, laid out `[component][i]`.
    pub fn with_partials(mut self, f: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static) -> Self {
        self.partials = Some(Arc::new(f));
        self
    }

    pub fn without_partials(mut self) -> Self {
        self.partials = None;
        self
    }

    pub fn scalar(base: Arc<RiemannianManifold<T>>, f: impl Fn(&[T]) -> Result<T> + Send + Sync + 'static) -> Self {
        TensorField::new(base, Vec::new(), move |x: &[T]| Ok(vec![f(x)?]))
    }

    /// Constant components in the coordinate frames of each slot.
    pub fn constant(base: Arc<RiemannianManifold<T>>, slots: Vec<Slot<T>>, data: Vec<T>) -> Result<Self> {
        let size: usize = slots.iter().map(Slot::dim).product();
        if size != data.len() {
            return Err(Error::usage(format!("constant field needs {size} components, got {}", data.len())));
        }
        let n = base.dim();
        let zeros = vec![T::zero(); size * n];
        Ok(TensorField::new(base, slots, move |_| Ok(data.clone())).with_partials(move |_| Ok(zeros.clone())))
    }

    /// The identity endomorphism of `TM`.
    pub fn identity(base: Arc<RiemannianManifold<T>>) -> Self {
        let n = base.dim();
        let slots = vec![Slot::vector(base.clone()), Slot::covector(base.clone())];
        TensorField::constant(base, slots, linalg::identity(n)).expect("sizes agree")
    }

    /// The metric of the base as a field in `T*M ⊗ T*M`.
    pub fn metric(base: Arc<RiemannianManifold<T>>) -> Self {
        let m = base.clone();
        let slots = vec![Slot::covector(base.clone()), Slot::covector(base.clone())];
        TensorField::new(base, slots, move |x: &[T]| m.metric_at(x))
    }

    pub fn base(&self) -> &Arc<RiemannianManifold<T>> {
        &self.base
    }

    pub fn slots(&self) -> &[Slot<T>] {
        &self.slots
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.slots.iter().map(Slot::dim).collect()
    }

    pub fn size(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn has_exact_partials(&self) -> bool {
        self.partials.is_some()
    }

    /// Normalized bundle type of the field.
    pub fn btype(&self) -> BundleType {
        match self.slots.split_last() {
            None => BundleType::Line(Base::single(self.base.name())),
            Some((last, init)) => init.iter().rev().fold(last.btype(), |acc, s| BundleType::tensor(s.btype(), acc)),
        }
    }

    pub fn tags(&self, x: &[T]) -> Result<Vec<AxisTag>> {
        self.slots.iter().map(|s| s.tag(x)).collect()
    }

    pub fn components(&self, x: &[T]) -> Result<Vec<T>> {
        self.base.check(x)?;
        let data = (self.eval)(x)?;
        debug_assert_eq!(data.len(), self.size());
        Ok(data)
    }

    pub fn at(&self, x: &[T]) -> Result<TypedTensor<T>> {
        tensor_at(self.tags(x)?, self.components(x)?)
    }

    /// Plain coordinate partials `∂ᵢσ`, laid out `[component][i]`.
    pub fn partials_at(&self, x: &[T]) -> Result<Vec<T>> {
        self.base.check(x)?;
        match &self.partials {
            Some(p) => p(x),
            None => {
                let f = |y: &[T]| (self.eval)(y);
                gradient_fd(&f, x, fd_step(self.depth))
            }
        }
    }

    /// Christoffel corrections `Σ_slots (±Γ·∂f·σ)`, laid out `[component][i]`.
    pub fn connection_terms(&self, x: &[T], comps: &[T]) -> Result<Vec<T>> {
        let n = self.base.dim();
        let dims = self.dims();
        let size = comps.len();
        let mut out = vec![T::zero(); size * n];
        let strides: Vec<usize> = (0..dims.len()).map(|k| dims[k + 1..].iter().product()).collect();
        for (s, slot) in self.slots.iter().enumerate() {
            let d = slot.dim();
            let p = slot.fiber_point(x)?;
            let gm = slot.manifold.christoffel_at(&p)?;
            let jac = slot.jacobian(x)?;
            // contracted Γ·∂f: g[a][b][i] = Σ_c Γ^a_bc ∂ᵢf^c
            let mut gj = vec![T::zero(); d * d * n];
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        let gabc = gm[(a * d + b) * d + c];
                        if gabc == T::zero() {
                            continue;
                        }
                        for i in 0..n {
                            gj[(a * d + b) * n + i] += gabc * jac[c * n + i];
                        }
                    }
                }
            }
            let stride = strides[s];
            for_each_index(&dims, |idx| {
                let flat: usize = idx.iter().zip(&strides).map(|(a, b)| a * b).sum();
                let a = idx[s];
                let base_flat = flat - a * stride;
                for i in 0..n {
                    let mut acc = T::zero();
                    for b in 0..d {
                        let other = comps[base_flat + b * stride];
                        match slot.variance {
                            Variance::Vector => acc += gj[(a * d + b) * n + i] * other,
                            Variance::Covector => acc -= gj[(b * d + a) * n + i] * other,
                        }
                    }
                    out[flat * n + i] += acc;
                }
            });
        }
        Ok(out)
    }

    /// `∇σ`, of type `F ⊗ T*M`; the derivative direction is the last axis.
    pub fn covariant_derivative(&self) -> TensorField<T> {
        let me = self.clone();
        let mut slots = self.slots.clone();
        slots.push(Slot::covector(self.base.clone()));
        let depth = if self.partials.is_some() { self.depth } else { self.depth + 1 };
        TensorField {
            base: self.base.clone(),
            slots,
            eval: Arc::new(move |x: &[T]| {
                let comps = me.components(x)?;
                let mut d = me.partials_at(x)?;
                let corr = me.connection_terms(x, &comps)?;
                for (v, c) in d.iter_mut().zip(corr) {
                    *v += c;
                }
                Ok(d)
            }),
            partials: None,
            depth,
        }
    }

    /// `ψ*σ`, a field over the domain of `ψ`.
    pub fn pullback(&self, psi: &SmoothMap<T>) -> Result<TensorField<T>> {
        if psi.codomain().name() != self.base.name() {
            return Err(Error::usage(format!(
                "cannot pull a field over {} back along {}: {} → {}",
                self.base.name(),
                psi.name(),
                psi.domain().name(),
                psi.codomain().name()
            )));
        }
        let slots = self.slots.iter().map(|s| s.pulled_back(psi)).collect::<Result<Vec<_>>>()?;
        let (e1, p1) = (self.eval.clone(), psi.clone());
        let mut out = TensorField {
            base: psi.domain().clone(),
            slots,
            eval: Arc::new(move |x: &[T]| e1(&p1.eval(x)?)),
            partials: None,
            depth: self.depth,
        };
        if let Some(pf) = self.partials.clone() {
            if psi.has_exact_jacobian() {
                let p2 = psi.clone();
                let k = self.base.dim();
                let n = psi.domain().dim();
                out.partials = Some(Arc::new(move |x: &[T]| {
                    let y = p2.eval(x)?;
                    let dp = pf(&y)?;
                    let j = p2.jacobian_at(x)?;
                    let m = dp.len() / k;
                    let mut res = vec![T::zero(); m * n];
                    for c in 0..m {
                        for i in 0..n {
                            res[c * n + i] = (0..k).map(|q| dp[c * k + q] * j[q * n + i]).sum();
                        }
                    }
                    Ok(res)
                }));
            }
        }
        Ok(out)
    }

    fn same_base(&self, other: &TensorField<T>) -> Result<()> {
        if self.base.name() != other.base.name() {
            return Err(Error::usage(format!(
                "fields live over different bases {} and {}",
                self.base.name(),
                other.base.name()
            )));
        }
        Ok(())
    }

    /// Pointwise bilinear combination with product-rule partials.
    fn bilinear(
        &self,
        other: &TensorField<T>,
        slots: Vec<Slot<T>>,
        op: impl Fn(&TypedTensor<T>, &TypedTensor<T>) -> Result<TypedTensor<T>> + Send + Sync + 'static,
    ) -> Result<TensorField<T>> {
        self.same_base(other)?;
        let op = Arc::new(op);
        let (a, b) = (self.clone(), other.clone());
        let op1 = op.clone();
        let mut out = TensorField {
            base: self.base.clone(),
            slots,
            eval: Arc::new(move |x: &[T]| {
                let r = op1(&a.at(x)?, &b.at(x)?)?;
                Ok(r.into_data())
            }),
            partials: None,
            depth: self.depth.max(other.depth),
        };
        if self.partials.is_some() && other.partials.is_some() {
            let (a, b) = (self.clone(), other.clone());
            let n = self.base.dim();
            out.partials = Some(Arc::new(move |x: &[T]| {
                let (ta, tb) = (a.at(x)?, b.at(x)?);
                let (pa, pb) = (split_dirs(&a.partials_at(x)?, n), split_dirs(&b.partials_at(x)?, n));
                let mut cols = Vec::with_capacity(n);
                for i in 0..n {
                    let da = TypedTensor::new(ta.tags().to_vec(), pa[i].clone())?;
                    let db = TypedTensor::new(tb.tags().to_vec(), pb[i].clone())?;
                    let v = op(&da, &tb)?.add(&op(&ta, &db)?)?;
                    cols.push(v.into_data());
                }
                Ok(join_dirs(&cols))
            }));
        }
        Ok(out)
    }

    /// Pointwise unary linear operation, applied to partials too.
    fn linear(
        &self,
        slots: Vec<Slot<T>>,
        op: impl Fn(&TypedTensor<T>) -> Result<TypedTensor<T>> + Send + Sync + 'static,
    ) -> TensorField<T> {
        let op = Arc::new(op);
        let a = self.clone();
        let op1 = op.clone();
        let mut out = TensorField {
            base: self.base.clone(),
            slots,
            eval: Arc::new(move |x: &[T]| Ok(op1(&a.at(x)?)?.into_data())),
            partials: None,
            depth: self.depth,
        };
        if self.partials.is_some() {
            let a = self.clone();
            let n = self.base.dim();
            out.partials = Some(Arc::new(move |x: &[T]| {
                let tags = a.tags(x)?;
                let cols = split_dirs(&a.partials_at(x)?, n)
                    .into_iter()
                    .map(|c| Ok(op(&TypedTensor::new(tags.clone(), c)?)?.into_data()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(join_dirs(&cols))
            }));
        }
        out
    }

    /// Pointwise `self ·ⁿ other`.
    pub fn contract(&self, other: &TensorField<T>, n: usize) -> Result<TensorField<T>> {
        if n > self.rank() || n > other.rank() {
            return Err(Error::usage("contraction order exceeds a field rank"));
        }
        let mut slots = self.slots[..self.rank() - n].to_vec();
        slots.extend(other.slots[n..].iter().cloned());
        self.bilinear(other, slots, move |a, b| a.contract(b, n))
    }

    pub fn outer(&self, other: &TensorField<T>) -> Result<TensorField<T>> {
        let mut slots = self.slots.clone();
        slots.extend(other.slots.iter().cloned());
        self.bilinear(other, slots, |a, b| Ok(a.outer(b)))
    }

    /// `A ⊠ B` splitting each operand in half.
    pub fn parallel_product(&self, other: &TensorField<T>) -> Result<TensorField<T>> {
        if self.rank() % 2 == 1 || other.rank() % 2 == 1 {
            return Err(Error::usage("parallel product of an odd-rank field needs an explicit split"));
        }
        let (ha, hb) = (self.rank() / 2, other.rank() / 2);
        let mut slots = self.slots[..ha].to_vec();
        slots.extend(other.slots[..hb].iter().cloned());
        slots.extend(self.slots[ha..].iter().cloned());
        slots.extend(other.slots[hb..].iter().cloned());
        self.bilinear(other, slots, |a, b| a.parallel_product(b))
    }

    pub fn permute(&self, sigma: &Permutation) -> Result<TensorField<T>> {
        if sigma.len() != self.rank() {
            return Err(Error::usage("permutation size differs from field rank"));
        }
        let inv = sigma.inverse();
        let slots = (0..self.rank()).map(|p| self.slots[inv.image(p)].clone()).collect();
        let s = sigma.clone();
        Ok(self.linear(slots, move |t| t.permute(&s)))
    }

    /// Trace over axes `a < b`, which must pair.
    pub fn trace_axes(&self, a: usize, b: usize) -> Result<TensorField<T>> {
        if a >= b || b >= self.rank() {
            return Err(Error::usage("trace axes out of order or range"));
        }
        let slots = self.slots.iter().enumerate().filter(|(k, _)| *k != a && *k != b).map(|(_, s)| s.clone()).collect();
        Ok(self.linear(slots, move |t| t.trace_axes(a, b)))
    }

    pub fn scale(&self, c: T) -> TensorField<T> {
        self.linear(self.slots.clone(), move |t| Ok(t.scale(c)))
    }

    pub fn add(&self, other: &TensorField<T>) -> Result<TensorField<T>> {
        self.same_base(other)?;
        let (a, b) = (self.clone(), other.clone());
        let mut out = TensorField {
            base: self.base.clone(),
            slots: self.slots.clone(),
            eval: Arc::new(move |x: &[T]| Ok(a.at(x)?.add(&b.at(x)?)?.into_data())),
            partials: None,
            depth: self.depth.max(other.depth),
        };
        if let (Some(pa), Some(pb)) = (self.partials.clone(), other.partials.clone()) {
            out.partials = Some(Arc::new(move |x: &[T]| Ok(pa(x)?.iter().zip(pb(x)?).map(|(&u, v)| u + v).collect())));
        }
        Ok(out)
    }

    /// `div T = tr ∇T` over a trailing `TM` factor.
    pub fn divergence(&self) -> Result<TensorField<T>> {
        let last = self.slots.last().ok_or_else(|| Error::usage("divergence needs a trailing tangent factor"))?;
        if last.variance != Variance::Vector || last.map.is_some() || last.manifold.name() != self.base.name() {
            return Err(Error::usage("divergence needs a trailing tangent factor of the base"));
        }
        let r = self.rank();
        self.covariant_derivative().trace_axes(r - 1, r)
    }
}

/// `∇∘φ`, the Jacobian typed as a section of `φ*TS ⊗ T*M`.
pub fn tangent_map<T: Real>(phi: &SmoothMap<T>) -> TwoPointField<T> {
    let (p1, p2) = (phi.clone(), phi.clone());
    let slots = vec![Slot::along(phi, Variance::Vector), Slot::covector(phi.domain().clone())];
    // ∂ᵢ(∂ⱼφᵃ) has layout [a][j][i], which is the symmetric Hessian layout
    TensorField::new(phi.domain().clone(), slots, move |x: &[T]| p1.jacobian_at(x))
        .with_partials(move |x: &[T]| p2.hessian_at(x))
}

/// `∇²φ`, of type `φ*TS ⊗ T*M ⊗ T*M`, laid out `[a][j][i]` with `i` the
/// outer derivative direction.
pub fn covariant_hessian<T: Real>(phi: &SmoothMap<T>) -> SectionAlongMap<T> {
    tangent_map(phi).covariant_derivative()
}

/// Coordinate formula `∂ᵢ∂ⱼφᵃ + Γ_S^a_bc ∂ᵢφᵇ ∂ⱼφᶜ − Γ_M^k_ij ∂ₖφᵃ`.
pub fn covariant_hessian_formula<T: Real>(phi: &SmoothMap<T>, x: &[T]) -> Result<Vec<T>> {
    let (n, m) = (phi.domain().dim(), phi.codomain().dim());
    let y = phi.eval(x)?;
    let (j, h) = (phi.jacobian_at(x)?, phi.hessian_at(x)?);
    let (gs, gm) = (phi.codomain().christoffel_at(&y)?, phi.domain().christoffel_at(x)?);
    let mut out = h;
    for a in 0..m {
        for i in 0..n {
            for jj in 0..n {
                let mut v = T::zero();
                for b in 0..m {
                    for c in 0..m {
                        v += gs[(a * m + b) * m + c] * j[b * n + i] * j[c * n + jj];
                    }
                }
                for k in 0..n {
                    v -= gm[(k * n + i) * n + jj] * j[a * n + k];
                }
                out[(a * n + i) * n + jj] += v;
            }
        }
    }
    Ok(out)
}

/// Tension field `Δφ = g^ij (∇²φ)_ij`, a section of `φ*TS`.
pub fn tension_field<T: Real>(phi: &SmoothMap<T>) -> SectionAlongMap<T> {
    let hess = covariant_hessian(phi);
    let m = phi.domain().clone();
    let (n, k) = (phi.domain().dim(), phi.codomain().dim());
    TensorField::new(phi.domain().clone(), vec![Slot::along(phi, Variance::Vector)], move |x: &[T]| {
        let h = hess.components(x)?;
        let gi = m.inverse_metric_at(x)?;
        Ok((0..k)
            .map(|a| {
                let mut s = T::zero();
                for i in 0..n {
                    for j in 0..n {
                        s += gi[i * n + j] * h[(a * n + j) * n + i];
                    }
                }
                s
            })
            .collect())
    })
}

/// `R^E(X,Y)σ = ∇²σ : (X⊗Y − Y⊗X)` at `x`.
pub fn curvature_operator<T: Real>(sigma: &TensorField<T>, x: &[T], u: &[T], w: &[T]) -> Result<TypedTensor<T>> {
    let n = sigma.base().dim();
    let d2 = sigma.covariant_derivative().covariant_derivative().components(x)?;
    let size = sigma.size();
    let out: Vec<T> = (0..size)
        .map(|c| {
            let mut s = T::zero();
            for j in 0..n {
                for i in 0..n {
                    s += d2[(c * n + j) * n + i] * (u[j] * w[i] - w[j] * u[i]);
                }
            }
            s
        })
        .collect();
    TypedTensor::new(sigma.tags(x)?, out)
}

/// `Rˡ_bjk σᵇ uʲ wᵏ`, the standard curvature endomorphism acting on a vector.
pub fn riemann_action<T: Real>(m: &RiemannianManifold<T>, p: &[T], sigma: &[T], u: &[T], w: &[T]) -> Result<Vec<T>> {
    let n = m.dim();
    let r = m.curvature_at(p)?;
    Ok((0..n)
        .map(|l| {
            let mut s = T::zero();
            for b in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        s += r[((l * n + b) * n + j) * n + k] * sigma[b] * u[j] * w[k];
                    }
                }
            }
            s
        })
        .collect())
}

/// Both sides of the pullback curvature identity for a section `σ` of `φ*TS`:
/// `∇²σ:(X⊗Y − Y⊗X)` and `−R_S(∇∘φ·X, ∇∘φ·Y)σ`.
pub fn pullback_curvature_check<T: Real>(
    phi: &SmoothMap<T>,
    sigma: &SectionAlongMap<T>,
    x: &[T],
    u: &[T],
    w: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    let lhs = curvature_operator(sigma, x, u, w)?.into_data();
    let y = phi.eval(x)?;
    let j = phi.jacobian_at(x)?;
    let (ju, jw) = (linalg::matvec(&j, u), linalg::matvec(&j, w));
    let s = sigma.components(x)?;
    let rhs = riemann_action(phi.codomain(), &y, &s, &ju, &jw)?.into_iter().map(|v| -v).collect();
    Ok((lhs, rhs))
}

/// Coordinate realization of the connection map of `E = TS ⊗ T*M` over
/// `S × M`, induced by the Levi-Civita connections of both factors.
#[derive(Clone, Debug)]
pub struct ConnectionMapData<T> {
    pub target: Arc<RiemannianManifold<T>>,
    pub domain: Arc<RiemannianManifold<T>>,
}

/// A first-order Lagrangian `L(x, s, A)` in coordinates.
pub type LagrangianFn<'a, T> = dyn Fn(&[T], &[T], &[T]) -> Result<T> + 'a;

/// Partial covariant derivatives of a function on `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialDerivatives<T> {
    /// `L_{,σ}`, a covector on `S`.
    pub sigma: Vec<T>,
    /// `L_{,μ}`, a covector on `M`.
    pub mu: Vec<T>,
    /// `L_{,v}`, an element of `E* = T*S ⊗ TM`, laid out `[a][i]`.
    pub v: Vec<T>,
}

impl<T: Real> ConnectionMapData<T> {
    pub fn new(target: Arc<RiemannianManifold<T>>, domain: Arc<RiemannianManifold<T>>) -> Self {
        ConnectionMapData { target, domain }
    }

    /// `v(ṡ, ẋ, Ȧ) = Ȧ^a_i + Γ_S^a_cb ṡᶜ A^b_i − Γ_M^k_ci ẋᶜ A^a_k`.
    pub fn connection_map(&self, s: &[T], x: &[T], a: &[T], sdot: &[T], xdot: &[T], adot: &[T]) -> Result<Vec<T>> {
        let (ns, nm) = (self.target.dim(), self.domain.dim());
        let gs = self.target.christoffel_at(s)?;
        let gm = self.domain.christoffel_at(x)?;
        let mut out = adot.to_vec();
        for p in 0..ns {
            for i in 0..nm {
                let mut v = T::zero();
                for c in 0..ns {
                    for b in 0..ns {
                        v += gs[(p * ns + c) * ns + b] * sdot[c] * a[b * nm + i];
                    }
                }
                for c in 0..nm {
                    for k in 0..nm {
                        v -= gm[(k * nm + c) * nm + i] * xdot[c] * a[p * nm + k];
                    }
                }
                out[p * nm + i] += v;
            }
        }
        Ok(out)
    }

    /// Fiber element transported to first order along `ε·e_c` in `S`.
    fn transport_s(&self, s: &[T], a: &[T], c: usize, eps: T) -> Result<(Vec<T>, Vec<T>)> {
        let (ns, nm) = (self.target.dim(), self.domain.dim());
        let gs = self.target.christoffel_at(s)?;
        let mut s2 = s.to_vec();
        s2[c] += eps;
        let mut a2 = a.to_vec();
        for p in 0..ns {
            for i in 0..nm {
                let v: T = (0..ns).map(|b| gs[(p * ns + c) * ns + b] * a[b * nm + i]).sum();
                a2[p * nm + i] -= eps * v;
            }
        }
        Ok((s2, a2))
    }

    /// Fiber element transported to first order along `ε·e_c` in `M`.
    fn transport_x(&self, x: &[T], a: &[T], c: usize, eps: T) -> Result<(Vec<T>, Vec<T>)> {
        let (ns, nm) = (self.target.dim(), self.domain.dim());
        let gm = self.domain.christoffel_at(x)?;
        let mut x2 = x.to_vec();
        x2[c] += eps;
        let mut a2 = a.to_vec();
        for p in 0..ns {
            for i in 0..nm {
                let v: T = (0..nm).map(|k| gm[(k * nm + c) * nm + i] * a[p * nm + k]).sum();
                a2[p * nm + i] += eps * v;
            }
        }
        Ok((x2, a2))
    }

    /// `L_{,σ}`, `L_{,μ}` by central differences along transported curves and
    /// `L_{,v}` by fiber differences, step `ε = 1e-4`.
    pub fn partial_covariant_derivatives(
        &self,
        l: &LagrangianFn<'_, T>,
        x: &[T],
        s: &[T],
        a: &[T],
    ) -> Result<PartialDerivatives<T>> {
        let eps: T = scaled(1e-4, 1.0 / 3.0);
        let two_eps = eps + eps;
        let (ns, nm) = (self.target.dim(), self.domain.dim());
        let mut sigma = vec![T::zero(); ns];
        for (c, out) in sigma.iter_mut().enumerate() {
            let (sp, ap) = self.transport_s(s, a, c, eps)?;
            let (sm, am) = self.transport_s(s, a, c, -eps)?;
            *out = (l(x, &sp, &ap)? - l(x, &sm, &am)?) / two_eps;
        }
        let mut mu = vec![T::zero(); nm];
        for (c, out) in mu.iter_mut().enumerate() {
            let (xp, ap) = self.transport_x(x, a, c, eps)?;
            let (xm, am) = self.transport_x(x, a, c, -eps)?;
            *out = (l(&xp, s, &ap)? - l(&xm, s, &am)?) / two_eps;
        }
        let mut v = vec![T::zero(); ns * nm];
        for (k, out) in v.iter_mut().enumerate() {
            let mut ap = a.to_vec();
            let mut am = a.to_vec();
            ap[k] += eps;
            am[k] -= eps;
            *out = (l(x, s, &ap)? - l(x, s, &am)?) / two_eps;
        }
        Ok(PartialDerivatives { sigma, mu, v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::max_abs_diff;

    fn sphere() -> Arc<RiemannianManifold<f64>> {
        Arc::new(RiemannianManifold::sphere2())
    }

    #[test]
    fn identity_tangent_map() {
        let s = sphere();
        let id = SmoothMap::identity(s.clone());
        let t = tangent_map(&id).at(&[1.0, 0.5]).unwrap();
        assert_eq!(t.data(), &[1.0, 0.0, 0.0, 1.0]);
        assert!(t.tags()[0].pairs_with(&t.tags()[1]));
    }

    #[test]
    fn metric_is_parallel() {
        for m in [sphere(), Arc::new(RiemannianManifold::half_plane())] {
            let g = TensorField::metric(m);
            let d = g.covariant_derivative().components(&[1.1, 0.6]).unwrap();
            assert!(crate::scalar::max_abs(&d) < 1e-8);
        }
    }

    #[test]
    fn radial_divergence_is_two() {
        let e = Arc::new(RiemannianManifold::<f64>::euclidean(2));
        let x = TensorField::new(e.clone(), vec![Slot::vector(e)], |p: &[f64]| Ok(p.to_vec()));
        let d = x.divergence().unwrap().components(&[0.3, -2.0]).unwrap();
        assert!((d[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn hessian_matches_formula_on_sphere_map() {
        let s = sphere();
        let phi = SmoothMap::new("phi", s.clone(), s.clone(), |x: &[f64]| {
            vec![x[0] + 0.1 * x[1].sin(), x[1] + 0.2 * x[0] * x[0]]
        });
        let x = [1.2, 0.4];
        let h = covariant_hessian(&phi).components(&x).unwrap();
        let f = covariant_hessian_formula(&phi, &x).unwrap();
        assert!(max_abs_diff(&h, &f) < 1e-6);
    }

    #[test]
    fn identity_of_sphere_is_harmonic() {
        let s = sphere();
        let id = SmoothMap::identity(s);
        let t = tension_field(&id).components(&[0.8, 1.0]).unwrap();
        assert!(crate::scalar::max_abs(&t) < 1e-12);
    }

    #[test]
    fn connection_map_inverts_vertical_lift() {
        let c = ConnectionMapData::new(sphere(), Arc::new(RiemannianManifold::half_plane()));
        let a = [0.3, -0.2, 1.0, 0.5];
        let b = [1.0, 2.0, -1.0, 0.25];
        let v = c.connection_map(&[1.0, 0.2], &[0.0, 1.5], &a, &[0.0, 0.0], &[0.0, 0.0], &b).unwrap();
        assert_eq!(v, b.to_vec());
    }

    #[test]
    fn base_only_function_has_no_fiber_derivative() {
        let c = ConnectionMapData::new(sphere(), Arc::new(RiemannianManifold::euclidean(1)));
        let l = |_x: &[f64], s: &[f64], _a: &[f64]| Ok(s[0].cos());
        let p = c.partial_covariant_derivatives(&l, &[0.0], &[1.0, 0.0], &[0.5, 0.1]).unwrap();
        assert_eq!(p.v, vec![0.0, 0.0]);
    }
}
