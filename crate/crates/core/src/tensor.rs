//! Pointwise strongly typed multilinear algebra.
//!
//! A [`TypedTensor`] is a dense row-major array whose axes each carry an
//! [`AxisTag`]: the fiber space the axis belongs to (including the base point
//! for bundle fibers), its dimension, and whether it is a vector or covector
//! slot. Every contraction checks tags, so pairing a covector at one point
//! with a vector at another is a runtime error rather than a silent number.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{lit, Real};

/// Relative tolerance used when comparing the base points of two fiber tags.
const POINT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variance {
    Vector,
    Covector,
}

impl Variance {
    pub fn flip(self) -> Self {
        match self {
            Variance::Vector => Variance::Covector,
            Variance::Covector => Variance::Vector,
        }
    }
}

/// Identity of a fiber space: a symbolic name plus, for bundle fibers, the
/// coordinates of the base point the fiber sits over.
#[derive(Debug, Clone)]
pub struct SpaceId {
    name: Arc<str>,
    point: Option<Arc<[f64]>>,
}

impl SpaceId {
    /// An abstract vector space with no base point.
    pub fn abstract_space(name: &str) -> Self {
        SpaceId { name: name.into(), point: None }
    }

    /// The fiber of a bundle named `name` over the point `point`.
    pub fn fiber<T: Real>(name: &str, point: &[T]) -> Self {
        SpaceId { name: name.into(), point: Some(point.iter().map(|x| x.as_f64()).collect()) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn point(&self) -> Option<&[f64]> {
        self.point.as_deref()
    }
}

impl PartialEq for SpaceId {
    fn eq(&self, other: &Self) -> bool {
        if self.name != other.name {
            return false;
        }
        match (&self.point, &other.point) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b.iter())
                        .all(|(x, y)| (x - y).abs() <= POINT_TOLERANCE * (1.0 + x.abs().max(y.abs())))
            }
            _ => false,
        }
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.point {
            None => write!(f, "{}", self.name),
            Some(p) => {
                write!(f, "{}@(", self.name)?;
                for (i, x) in p.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x:.6}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisTag {
    pub space: SpaceId,
    pub dim: usize,
    pub variance: Variance,
}

impl AxisTag {
    pub fn vector(space: SpaceId, dim: usize) -> Self {
        AxisTag { space, dim, variance: Variance::Vector }
    }

    pub fn covector(space: SpaceId, dim: usize) -> Self {
        AxisTag { space, dim, variance: Variance::Covector }
    }

    pub fn dual(&self) -> Self {
        AxisTag { space: self.space.clone(), dim: self.dim, variance: self.variance.flip() }
    }

    /// Natural pairing is defined only between a space and its dual.
    pub fn pairs_with(&self, other: &AxisTag) -> bool {
        self.space == other.space && self.dim == other.dim && self.variance != other.variance
    }
}

impl fmt::Display for AxisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variance {
            Variance::Vector => write!(f, "{}[{}]", self.space, self.dim),
            Variance::Covector => write!(f, "{}*[{}]", self.space, self.dim),
        }
    }
}

/// A permutation of tensor factors acting on the right.
///
/// Stored in one-line form with zero-based images: factor `i` of `A` lands in
/// position `images[i]` of `A^σ`. Products are read left to right, so
/// `σ.then(τ)` is the permutation `στ` with `(A^σ)^τ = A^{στ}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    /// Builds from zero-based images, validating bijectivity.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::usage(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    /// Builds a permutation of `n` factors from one-based cycles, multiplied
    /// left to right: `[[1,2],[2,3]]` is `(1 2)(2 3) = (1 3 2)`.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut acc = Permutation::identity(n);
        for cycle in cycles {
            let mut images: Vec<usize> = (0..n).collect();
            let mut seen = vec![false; n];
            for (k, &c) in cycle.iter().enumerate() {
                if c == 0 || c > n {
                    return Err(Error::usage(format!("cycle entry {c} outside 1..={n}")));
                }
                if seen[c - 1] {
                    return Err(Error::usage(format!("cycle repeats entry {c}")));
                }
                seen[c - 1] = true;
                let next = cycle[(k + 1) % cycle.len()];
                images[c - 1] = next - 1;
            }
            acc = acc.then(&Permutation { images });
        }
        Ok(acc)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    /// The product `self · other`: first apply `self`, then `other`.
    pub fn then(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "permutation sizes differ");
        Permutation { images: self.images.iter().map(|&i| other.images[i]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Extends to `n` factors, fixing the extra trailing ones.
    pub fn extend(&self, n: usize) -> Permutation {
        assert!(n >= self.len());
        let mut images = self.images.clone();
        images.extend(self.len()..n);
        Permutation { images }
    }

    /// Disjoint one-based cycles, fixed points omitted.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] || self.images[start] == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i + 1);
                i = self.images[i];
            }
            out.push(cycle);
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            write!(f, "(")?;
            for (k, x) in c.iter().enumerate() {
                if k > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Dense tensor with tagged axes.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedTensor<T> {
    tags: Vec<AxisTag>,
    data: Vec<T>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Iterates all multi-indices of `dims` in row-major order.
pub(crate) fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; dims.len()];
    loop {
        f(&idx);
        let mut k = dims.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

impl<T: Real> TypedTensor<T> {
    pub fn new(tags: Vec<AxisTag>, data: Vec<T>) -> Result<Self> {
        let expected: usize = tags.iter().map(|t| t.dim).product();
        if data.len() != expected {
            return Err(Error::usage(format!("tensor data has {} entries but tags require {expected}", data.len())));
        }
        Ok(TypedTensor { tags, data })
    }

    pub fn zeros(tags: Vec<AxisTag>) -> Self {
        let n = tags.iter().map(|t| t.dim).product();
        TypedTensor { tags, data: vec![T::zero(); n] }
    }

    pub fn scalar(value: T) -> Self {
        TypedTensor { tags: Vec::new(), data: vec![value] }
    }

    pub fn from_fn(tags: Vec<AxisTag>, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let dims: Vec<usize> = tags.iter().map(|t| t.dim).collect();
        let mut data = Vec::with_capacity(dims.iter().product());
        for_each_index(&dims, |i| data.push(f(i)));
        TypedTensor { tags, data }
    }

    /// The identity map of `space` as a tensor in `V ⊗ V*`.
    pub fn identity(space: SpaceId, dim: usize) -> Self {
        Self::from_fn(vec![AxisTag::vector(space.clone(), dim), AxisTag::covector(space, dim)], |i| {
            if i[0] == i[1] {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    pub fn tags(&self) -> &[AxisTag] {
        &self.tags
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn rank(&self) -> usize {
        self.tags.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.tags.iter().map(|t| t.dim).collect()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        let dims = self.dims();
        let s = strides(&dims);
        idx.iter().zip(&s).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> T {
        assert_eq!(idx.len(), self.rank(), "index rank mismatch");
        self.data[self.offset(idx)]
    }

    /// Value of a rank-0 tensor.
    pub fn value(&self) -> Result<T> {
        if self.rank() != 0 {
            return Err(Error::usage(format!("expected a scalar, found a rank-{} tensor", self.rank())));
        }
        Ok(self.data[0])
    }

    /// Replaces the tags, keeping data. Dimensions must agree.
    pub fn with_tags(self, tags: Vec<AxisTag>) -> Result<Self> {
        let dims: Vec<usize> = tags.iter().map(|t| t.dim).collect();
        if dims != self.dims() {
            return Err(Error::usage(format!("retagging changes dimensions {:?} -> {dims:?}", self.dims())));
        }
        Ok(TypedTensor { tags, data: self.data })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        TypedTensor { tags: self.tags.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|x| x * c)
    }

    fn check_same_tags(&self, other: &Self) -> Result<()> {
        if self.rank() != other.rank() {
            return Err(Error::usage(format!(
                "rank {} and rank {} tensors cannot be combined",
                self.rank(),
                other.rank()
            )));
        }
        for (k, (a, b)) in self.tags.iter().zip(&other.tags).enumerate() {
            if a != b {
                return Err(Error::TagMismatch { left_axis: k, right_axis: k, left: a.clone(), right: b.clone() });
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_tags(other)?;
        Ok(TypedTensor {
            tags: self.tags.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_tags(other)?;
        Ok(TypedTensor {
            tags: self.tags.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    /// Largest entrywise difference between identically tagged tensors.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same_tags(other)?;
        Ok(crate::scalar::max_abs_diff(&self.data, &other.data))
    }

    pub fn max_abs(&self) -> T {
        crate::scalar::max_abs(&self.data)
    }

    /// Tensor (outer) product `self ⊗ other`.
    pub fn outer(&self, other: &Self) -> Self {
        let mut tags = self.tags.clone();
        tags.extend(other.tags.iter().cloned());
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for &a in &self.data {
            for &b in &other.data {
                data.push(a * b);
            }
        }
        TypedTensor { tags, data }
    }

    /// n-fold natural pairing `self ·ⁿ other`: the last `n` axes of `self`
    /// against the first `n` axes of `other`, in order.
    pub fn contract(&self, other: &Self, n: usize) -> Result<Self> {
        if n > self.rank() || n > other.rank() {
            return Err(Error::usage(format!(
                "cannot contract {n} axes of rank-{} and rank-{} tensors",
                self.rank(),
                other.rank()
            )));
        }
        let ra = self.rank() - n;
        for k in 0..n {
            let l = &self.tags[ra + k];
            let r = &other.tags[k];
            if !l.pairs_with(r) {
                return Err(Error::TagMismatch { left_axis: ra + k, right_axis: k, left: l.clone(), right: r.clone() });
            }
        }
        let outer_a: usize = self.tags[..ra].iter().map(|t| t.dim).product();
        let inner: usize = self.tags[ra..].iter().map(|t| t.dim).product();
        let outer_b: usize = other.tags[n..].iter().map(|t| t.dim).product();
        let mut data = vec![T::zero(); outer_a * outer_b];
        for i in 0..outer_a {
            for k in 0..inner {
                let a = self.data[i * inner + k];
                if a == T::zero() {
                    continue;
                }
                let row = &other.data[k * outer_b..(k + 1) * outer_b];
                let out = &mut data[i * outer_b..(i + 1) * outer_b];
                for (o, &b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        let mut tags = self.tags[..ra].to_vec();
        tags.extend(other.tags[n..].iter().cloned());
        Ok(TypedTensor { tags, data })
    }

    /// Natural trace of a rank-2 tensor whose two axes are mutually dual.
    pub fn trace(&self) -> Result<T> {
        if self.rank() != 2 {
            return Err(Error::usage(format!("trace needs a rank-2 tensor, found rank {}", self.rank())));
        }
        if !self.tags[0].pairs_with(&self.tags[1]) {
            return Err(Error::TagMismatch {
                left_axis: 0,
                right_axis: 1,
                left: self.tags[0].clone(),
                right: self.tags[1].clone(),
            });
        }
        let n = self.tags[0].dim;
        Ok((0..n).map(|i| self.data[i * n + i]).sum())
    }

    /// Traces axes `a` and `b` (which must be dual to each other) and returns
    /// the remaining tensor.
    pub fn trace_axes(&self, a: usize, b: usize) -> Result<Self> {
        if a == b || a >= self.rank() || b >= self.rank() {
            return Err(Error::usage(format!("invalid trace axes ({a}, {b})")));
        }
        if !self.tags[a].pairs_with(&self.tags[b]) {
            return Err(Error::TagMismatch {
                left_axis: a,
                right_axis: b,
                left: self.tags[a].clone(),
                right: self.tags[b].clone(),
            });
        }
        let keep: Vec<usize> = (0..self.rank()).filter(|&k| k != a && k != b).collect();
        let tags: Vec<AxisTag> = keep.iter().map(|&k| self.tags[k].clone()).collect();
        let n = self.tags[a].dim;
        let mut full = vec![0usize; self.rank()];
        Ok(Self::from_fn(tags, |idx| {
            for (slot, &k) in idx.iter().zip(&keep) {
                full[k] = *slot;
            }
            let mut s = T::zero();
            for i in 0..n {
                full[a] = i;
                full[b] = i;
                s += self.get(&full);
            }
            s
        }))
    }

    /// Right action of a permutation: factor `i` moves to position `σ(i)`.
    pub fn permute(&self, sigma: &Permutation) -> Result<Self> {
        if sigma.len() != self.rank() {
            return Err(Error::usage(format!(
                "permutation of {} factors applied to a rank-{} tensor",
                sigma.len(),
                self.rank()
            )));
        }
        if sigma.is_identity() {
            return Ok(self.clone());
        }
        let r = self.rank();
        let mut tags = self.tags.clone();
        for i in 0..r {
            tags[sigma.image(i)] = self.tags[i].clone();
        }
        let out_dims: Vec<usize> = tags.iter().map(|t| t.dim).collect();
        let out_strides = strides(&out_dims);
        let mut data = vec![T::zero(); self.data.len()];
        let mut pos = 0;
        for_each_index(&self.dims(), |idx| {
            let mut off = 0;
            for i in 0..r {
                off += idx[i] * out_strides[sigma.image(i)];
            }
            data[off] = self.data[pos];
            pos += 1;
        });
        Ok(TypedTensor { tags, data })
    }

    /// Parallel tensor product `A ⊠ B` with explicit splits: `A` is read as
    /// `(first split_a factors) ⊗ (rest)`, likewise `B`, and the result is
    /// `(A_front ⊗ B_front) ⊗ (A_back ⊗ B_back)`.
    pub fn parallel_product_split(&self, split_a: usize, other: &Self, split_b: usize) -> Result<Self> {
        if split_a > self.rank() || split_b > other.rank() {
            return Err(Error::usage("parallel product split exceeds operand rank"));
        }
        let ra = self.rank();
        let rb = other.rank();
        // factors: A_front (0..sa), A_back (sa..ra), B_front (ra..ra+sb), B_back
        let mut images = vec![0; ra + rb];
        for i in 0..split_a {
            images[i] = i;
        }
        for j in 0..split_b {
            images[ra + j] = split_a + j;
        }
        for i in split_a..ra {
            images[i] = split_b + i;
        }
        for j in split_b..rb {
            images[ra + j] = ra + j;
        }
        let sigma = Permutation::from_images(images)?;
        self.outer(other).permute(&sigma)
    }

    /// Parallel tensor product with the default even split. Odd-rank operands
    /// need [`TypedTensor::parallel_product_split`].
    pub fn parallel_product(&self, other: &Self) -> Result<Self> {
        if !self.rank().is_multiple_of(2) || !other.rank().is_multiple_of(2) {
            return Err(Error::usage("parallel product of an odd-rank operand needs an explicit split"));
        }
        self.parallel_product_split(self.rank() / 2, other, other.rank() / 2)
    }

    /// The adjoint `W ⊗ V* → V* ⊗ W`, i.e. the transpose.
    pub fn adjoint(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::usage("adjoint is defined for rank-2 tensors"));
        }
        self.permute(&Permutation::from_images(vec![1, 0])?)
    }

    /// Raw matrix of a rank-2 tensor (row = first axis).
    pub fn matrix(&self) -> Result<(usize, usize, &[T])> {
        if self.rank() != 2 {
            return Err(Error::usage("matrix view needs a rank-2 tensor"));
        }
        Ok((self.tags[0].dim, self.tags[1].dim, &self.data))
    }
}

/// The permutation tensor of `σ` acting on `factors`, of type
/// `V₁*⊗…⊗Vₙ*⊗V_{σ⁻¹(1)}⊗…⊗V_{σ⁻¹(n)}`, so that `A^σ = A ·ⁿ σ`.
pub fn permutation_tensor<T: Real>(factors: &[AxisTag], sigma: &Permutation) -> Result<TypedTensor<T>> {
    let n = factors.len();
    if sigma.len() != n {
        return Err(Error::usage("permutation size differs from factor count"));
    }
    let inv = sigma.inverse();
    let mut tags: Vec<AxisTag> = factors.iter().map(|t| t.dual()).collect();
    tags.extend((0..n).map(|p| factors[inv.image(p)].clone()));
    Ok(TypedTensor::from_fn(tags, |idx| {
        // entry is 1 when output slot σ(i) carries the same index as input slot i
        let ok = (0..n).all(|i| idx[i] == idx[n + sigma.image(i)]);
        if ok {
            T::one()
        } else {
            T::zero()
        }
    }))
}

/// Induced inner product `k = h ⊠ g⁻¹` on `W ⊗ V*`, of type `W*⊗V⊗W*⊗V`.
pub fn induced_inner_product<T: Real>(h: &TypedTensor<T>, g_inv: &TypedTensor<T>) -> Result<TypedTensor<T>> {
    for (name, m) in [("h", h), ("g_inv", g_inv)] {
        let (r, c, data) = m.matrix()?;
        if r != c {
            return Err(Error::usage(format!("{name} is not square")));
        }
        let scale = crate::scalar::max_abs(data).max(T::one());
        if linalg::asymmetry(data, r) > scale * lit(1e-12) {
            return Err(Error::usage(format!("{name} is not symmetric")));
        }
    }
    if h.tags()[0].variance != Variance::Covector || g_inv.tags()[0].variance != Variance::Vector {
        return Err(Error::usage("induced inner product needs h in W*⊗W* and g⁻¹ in V⊗V"));
    }
    h.parallel_product(g_inv)
}

/// Derivative of matrix inversion at `A ∈ V⊗V*`: `−(A⁻¹⊗A⁻¹)^(2 3 4)`,
/// so that `Di(A) : B = −A⁻¹ B A⁻¹`.
pub fn inversion_derivative<T: Real>(a: &TypedTensor<T>) -> Result<TypedTensor<T>> {
    let (r, c, data) = a.matrix()?;
    if r != c || !a.tags()[0].pairs_with(&a.tags()[1]) {
        return Err(Error::usage("inversion derivative needs an endomorphism in V⊗V*"));
    }
    let inv = linalg::inverse(data, r)?;
    let cond = linalg::condition_estimate(data, &inv);
    if cond > lit(1e12) {
        return Err(Error::SingularMatrix { condition: cond.as_f64() });
    }
    let a_inv = TypedTensor::new(a.tags().to_vec(), inv)?;
    let sigma = Permutation::from_cycles(4, &[vec![2, 3, 4]])?;
    Ok(a_inv.outer(&a_inv).permute(&sigma)?.scale(-T::one()))
}

/// Matrix inverse of a rank-2 tensor, keeping its tags.
pub fn matrix_inverse<T: Real>(a: &TypedTensor<T>) -> Result<TypedTensor<T>> {
    let (r, c, data) = a.matrix()?;
    if r != c {
        return Err(Error::usage("inverse of a non-square tensor"));
    }
    TypedTensor::new(a.tags().to_vec(), linalg::inverse(data, r)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v() -> SpaceId {
        SpaceId::abstract_space("V")
    }
    fn w() -> SpaceId {
        SpaceId::abstract_space("W")
    }

    fn vt(n: usize) -> AxisTag {
        AxisTag::vector(v(), n)
    }
    fn vc(n: usize) -> AxisTag {
        AxisTag::covector(v(), n)
    }

    #[test]
    fn matrix_vector_product() {
        let a = TypedTensor::new(vec![vt(2), vc(2)], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = TypedTensor::new(vec![vt(2)], vec![5.0, 6.0]).unwrap();
        let y = a.contract(&x, 1).unwrap();
        assert_eq!(y.data(), &[17.0, 39.0]);
        assert_eq!(y.tags(), &[vt(2)]);
    }

    #[test]
    fn dual_basis_pairing() {
        let alpha = TypedTensor::new(vec![vc(2)], vec![1.0, 0.0]).unwrap();
        let x = TypedTensor::new(vec![vt(2)], vec![0.0, 1.0]).unwrap();
        assert_eq!(alpha.contract(&x, 1).unwrap().value().unwrap(), 0.0);
    }

    #[test]
    fn incompatible_valence_is_tag_mismatch() {
        let a = TypedTensor::<f64>::zeros(vec![vt(2), AxisTag::covector(w(), 2)]);
        let b = TypedTensor::<f64>::zeros(vec![vt(2), AxisTag::vector(w(), 2)]);
        match a.contract(&b, 1) {
            Err(Error::TagMismatch { left, right, .. }) => {
                assert_eq!(left, AxisTag::covector(w(), 2));
                assert_eq!(right, vt(2));
            }
            other => panic!("expected TagMismatch, got {other:?}"),
        }
    }

    #[test]
    fn trace_examples() {
        let id = TypedTensor::<f64>::identity(v(), 4);
        assert_eq!(id.trace().unwrap(), 4.0);
        let alpha = TypedTensor::new(vec![vc(2)], vec![1.0, 2.0]).unwrap();
        let x = TypedTensor::new(vec![vt(2)], vec![3.0, 4.0]).unwrap();
        assert_eq!(alpha.outer(&x).trace().unwrap(), 11.0);
    }

    #[test]
    fn trace_is_pairing_with_identity() {
        // tr A = Id_{V*} ·_{V*⊗V} A with A ∈ V*⊗V
        let a = TypedTensor::new(vec![vc(3), vt(3)], (1..=9).map(f64::from).collect()).unwrap();
        let id_dual = TypedTensor::from_fn(vec![vt(3), vc(3)], |i| if i[0] == i[1] { 1.0 } else { 0.0 });
        let via_pairing = id_dual.contract(&a, 2).unwrap().value().unwrap();
        assert_eq!(via_pairing, a.trace().unwrap());
        assert_eq!(via_pairing, 15.0);
    }

    #[test]
    fn permutation_moves_factor_two_to_three() {
        // (2 3 4) on v1⊗v2⊗v3⊗v4 gives v1⊗v4⊗v2⊗v3
        let sigma = Permutation::from_cycles(4, &[vec![2, 3, 4]]).unwrap();
        let names = ["A", "B", "C", "D"];
        let tags: Vec<AxisTag> = names.iter().map(|n| AxisTag::vector(SpaceId::abstract_space(n), 1)).collect();
        let t = TypedTensor::new(tags, vec![1.0]).unwrap().permute(&sigma).unwrap();
        let got: Vec<&str> = t.tags().iter().map(|t| t.space.name()).collect();
        assert_eq!(got, ["A", "D", "B", "C"]);
    }

    #[test]
    fn products_read_left_to_right() {
        let a = Permutation::from_cycles(3, &[vec![1, 2]]).unwrap();
        let b = Permutation::from_cycles(3, &[vec![2, 3]]).unwrap();
        let expected = Permutation::from_cycles(3, &[vec![1, 3, 2]]).unwrap();
        assert_eq!(a.then(&b), expected);
        assert_eq!(Permutation::from_cycles(3, &[vec![1, 2], vec![2, 3]]).unwrap(), expected);
        assert_eq!(expected.to_string(), "(1 3 2)");
    }

    #[test]
    fn permutation_tensor_realizes_right_action() {
        let tags = vec![
            AxisTag::vector(SpaceId::abstract_space("U"), 2),
            AxisTag::vector(SpaceId::abstract_space("V"), 3),
            AxisTag::vector(SpaceId::abstract_space("W"), 2),
        ];
        let b = TypedTensor::from_fn(tags.clone(), |i| (i[0] * 100 + i[1] * 10 + i[2]) as f64);
        let sigma = Permutation::from_cycles(3, &[vec![1, 3, 2]]).unwrap();
        let p = permutation_tensor::<f64>(&tags, &sigma).unwrap();
        let via = b.contract(&p, 3).unwrap();
        assert_eq!(via, b.permute(&sigma).unwrap());
    }

    #[test]
    fn adjoint_is_transpose() {
        let a = TypedTensor::new(vec![AxisTag::vector(w(), 2), vc(2)], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let t = a.adjoint().unwrap();
        assert_eq!(t.data(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(t.tags()[0], vc(2));
        assert_eq!(t.adjoint().unwrap(), a);
    }

    #[test]
    fn adjoint_via_star_tensor() {
        // * = (1 2) as a 4-tensor in W*⊗V⊗V*⊗W, A* = * : A
        let wt = AxisTag::vector(w(), 2);
        let a = TypedTensor::new(vec![wt.clone(), vc(2)], vec![1.0, -2.0, 0.5, 4.0]).unwrap();
        let sigma = Permutation::from_cycles(2, &[vec![1, 2]]).unwrap();
        let star = permutation_tensor::<f64>(&[wt, vc(2)], &sigma).unwrap();
        assert_eq!(star.tags()[0], AxisTag::covector(w(), 2));
        assert_eq!(star.tags()[1], vt(2));
        let via = a.contract(&star, 2).unwrap();
        assert_eq!(via, a.adjoint().unwrap());
    }

    #[test]
    fn parallel_product_of_simple_tensors() {
        let u = AxisTag::vector(SpaceId::abstract_space("U"), 1);
        let al = AxisTag::covector(SpaceId::abstract_space("V"), 1);
        let wv = AxisTag::vector(SpaceId::abstract_space("W"), 1);
        let be = AxisTag::covector(SpaceId::abstract_space("X"), 1);
        let a = TypedTensor::new(vec![u.clone(), al.clone()], vec![2.0]).unwrap();
        let b = TypedTensor::new(vec![wv.clone(), be.clone()], vec![3.0]).unwrap();
        let p = a.parallel_product(&b).unwrap();
        assert_eq!(p.tags(), &[u, wv, al, be]);
        assert_eq!(p.data(), &[6.0]);
    }

    #[test]
    fn odd_rank_parallel_product_needs_split() {
        let a = TypedTensor::<f64>::zeros(vec![vt(2)]);
        let b = TypedTensor::<f64>::zeros(vec![vt(2), vc(2)]);
        assert!(matches!(a.parallel_product(&b), Err(Error::Usage(_))));
        assert_eq!(a.parallel_product_split(1, &b, 1).unwrap().rank(), 3);
    }

    #[test]
    fn identity_boxtimes_identity_acts_trivially() {
        let id = TypedTensor::<f64>::identity(v(), 2);
        let k = id.parallel_product(&id).unwrap();
        let c = TypedTensor::new(vec![vt(2), vt(2)], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(k.contract(&c, 2).unwrap(), c);
    }

    #[test]
    fn inversion_derivative_at_identity_negates() {
        let id = TypedTensor::<f64>::identity(v(), 2);
        let di = inversion_derivative(&id).unwrap();
        let b = TypedTensor::new(vec![vt(2), vc(2)], vec![0.3, -1.0, 2.0, 0.7]).unwrap();
        let got = di.contract(&b, 2).unwrap();
        assert!(got.max_abs_diff(&b.scale(-1.0)).unwrap() < 1e-15);
    }

    #[test]
    fn inversion_derivative_rejects_singular() {
        let a = TypedTensor::new(vec![vt(2), vc(2)], vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(inversion_derivative(&a), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn induced_inner_product_rejects_asymmetric() {
        let h = TypedTensor::new(vec![vc(2), vc(2)], vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        let gi = TypedTensor::new(vec![vt(2), vt(2)], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(induced_inner_product(&h, &gi), Err(Error::Usage(_))));
    }

    #[test]
    fn fiber_tags_distinguish_base_points() {
        let p = SpaceId::fiber("TM", &[0.0, 1.0]);
        let q = SpaceId::fiber("TM", &[0.0, 1.5]);
        let a = TypedTensor::new(vec![AxisTag::covector(p, 2)], vec![1.0, 0.0]).unwrap();
        let b = TypedTensor::new(vec![AxisTag::vector(q, 2)], vec![1.0, 0.0]).unwrap();
        assert!(matches!(a.contract(&b, 1), Err(Error::TagMismatch { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let a = TypedTensor::<f32>::new(vec![vt(2), vc(2)], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = TypedTensor::<f32>::new(vec![vt(2)], vec![5.0, 6.0]).unwrap();
        assert_eq!(a.contract(&x, 1).unwrap().data(), &[17.0f32, 39.0]);
    }
}
