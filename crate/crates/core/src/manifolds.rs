//! Single-chart Riemannian manifolds, smooth maps between them, and the
//! built-in zoo.
//!
//! Index layouts (row-major, `n = dim`):
//! * metric `g[i][j]`;
//! * metric derivatives `dg[k][i][j] = ∂ₖ g_ij`;
//! * Christoffel symbols `gamma[k][i][j] = Γᵏ_ij`;
//! * curvature `r[l][i][j][k] = Rˡ_ijk`, the coefficient of `R(∂ⱼ,∂ₖ)∂ᵢ`
//!   for `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{lit, scaled, Real};
use crate::tensor::{AxisTag, SpaceId, TypedTensor};

/// Coordinate function `ℝⁿ → ℝᵐ` (flattened output).
pub type CoordFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
/// Chart-domain predicate.
pub type ChartFn<T> = Arc<dyn Fn(&[T]) -> bool + Send + Sync>;

/// Default central-difference step for first derivatives.
pub const FD_STEP: f64 = 1e-5;
/// Default step when differentiating data that is itself a finite difference.
pub const FD_STEP_NESTED: f64 = 1e-4;
/// Default geodesic integration step.
pub const GEODESIC_STEP: f64 = 1e-3;

/// Step used for a derivative of order `depth + 1`.
pub fn fd_step<T: Real>(depth: usize) -> T {
    if depth == 0 {
        scaled(FD_STEP, 1.0 / 3.0)
    } else {
        scaled(FD_STEP_NESTED, 0.25)
    }
}

/// Central difference of a vector-valued function along coordinate `i`.
pub fn central_diff<T: Real>(f: &dyn Fn(&[T]) -> Result<Vec<T>>, x: &[T], i: usize, h: T) -> Result<Vec<T>> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    let fp = f(&xp)?;
    let fm = f(&xm)?;
    let two_h = h + h;
    Ok(fp.iter().zip(&fm).map(|(&a, &b)| (a - b) / two_h).collect())
}

/// All first partials, laid out `[component][direction]`.
pub fn gradient_fd<T: Real>(f: &dyn Fn(&[T]) -> Result<Vec<T>>, x: &[T], h: T) -> Result<Vec<T>> {
    let n = x.len();
    let cols: Vec<Vec<T>> = (0..n).map(|i| central_diff(f, x, i, h)).collect::<Result<_>>()?;
    let m = cols.first().map_or(0, Vec::len);
    let mut out = vec![T::zero(); m * n];
    for (i, col) in cols.iter().enumerate() {
        for (a, &v) in col.iter().enumerate() {
            out[a * n + i] = v;
        }
    }
    Ok(out)
}

#[derive(Clone)]
pub struct RiemannianManifold<T> {
    name: String,
    dim: usize,
    chart: ChartFn<T>,
    metric: CoordFn<T>,
    metric_derivs: Option<CoordFn<T>>,
    christoffel: Option<CoordFn<T>>,
    curvature: Option<CoordFn<T>>,
    geodesic_step: T,
}

impl<T> fmt::Debug for RiemannianManifold<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RiemannianManifold")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("exact_christoffel", &self.christoffel.is_some())
            .field("exact_curvature", &self.curvature.is_some())
            .finish()
    }
}

fn diag<T: Real>(entries: &[T]) -> Vec<T> {
    let n = entries.len();
    let mut g = vec![T::zero(); n * n];
    for (i, &e) in entries.iter().enumerate() {
        g[i * n + i] = e;
    }
    g
}

/// `Rˡ_ijk = K(δˡⱼ g_ki − δˡₖ g_ji)` for constant sectional curvature `K`.
fn constant_curvature<T: Real>(g: &[T], n: usize, k: T) -> Vec<T> {
    let mut r = vec![T::zero(); n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for kk in 0..n {
                    let mut v = T::zero();
                    if l == j {
                        v += g[kk * n + i];
                    }
                    if l == kk {
                        v -= g[j * n + i];
                    }
                    r[((l * n + i) * n + j) * n + kk] = k * v;
                }
            }
        }
    }
    r
}

impl<T> RiemannianManifold<T> {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl<T: Real> RiemannianManifold<T> {
    /// A manifold given by a metric on a chart; derived data is computed by
    /// finite differences unless exact versions are attached.
    pub fn new(
        name: &str,
        dim: usize,
        chart: impl Fn(&[T]) -> bool + Send + Sync + 'static,
        metric: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        assert!(dim >= 1, "manifold dimension must be positive");
        RiemannianManifold {
            name: name.to_string(),
            dim,
            chart: Arc::new(chart),
            metric: Arc::new(metric),
            metric_derivs: None,
            christoffel: None,
            curvature: None,
            geodesic_step: lit(GEODESIC_STEP),
        }
    }

    pub fn with_metric_derivs(mut self, f: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.metric_derivs = Some(Arc::new(f));
        self
    }

    pub fn with_christoffel(mut self, f: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.christoffel = Some(Arc::new(f));
        self
    }

    pub fn with_curvature(mut self, f: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.curvature = Some(Arc::new(f));
        self
    }

    /// Drops all exact derived data, forcing finite differences.
    pub fn without_exact_data(mut self) -> Self {
        self.metric_derivs = None;
        self.christoffel = None;
        self.curvature = None;
        self
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn with_geodesic_step(mut self, h: T) -> Self {
        self.geodesic_step = h;
        self
    }

    /// Flat `ℝⁿ`.
    pub fn euclidean(n: usize) -> Self {
        let nn = n;
        RiemannianManifold::new(&format!("R{n}"), n, |_| true, move |_| diag(&vec![T::one(); nn]))
            .with_metric_derivs(move |_| vec![T::zero(); nn * nn * nn])
            .with_christoffel(move |_| vec![T::zero(); nn * nn * nn])
            .with_curvature(move |_| vec![T::zero(); nn * nn * nn * nn])
    }

    /// Round sphere of radius `r` in the chart `(θ, φ)`, `θ ∈ (0, π)`.
    pub fn sphere2_radius(r: T) -> Self {
        let r2 = r * r;
        RiemannianManifold::new(
            "S2",
            2,
            |x: &[T]| x[0] > T::zero() && x[0] < T::PI(),
            move |x: &[T]| {
                let s = x[0].sin();
                diag(&[r2, r2 * s * s])
            },
        )
        .with_metric_derivs(move |x: &[T]| {
            let (s, c) = x[0].sin_cos();
            let mut d = vec![T::zero(); 8];
            d[3] = lit::<T>(2.0) * r2 * s * c; // ∂θ g_φφ
            d
        })
        .with_christoffel(|x: &[T]| {
            let (s, c) = x[0].sin_cos();
            let mut gm = vec![T::zero(); 8];
            gm[3] = -s * c; // Γ^θ_φφ
            gm[5] = c / s; // Γ^φ_θφ
            gm[6] = c / s; // Γ^φ_φθ
            gm
        })
        .with_curvature(move |x: &[T]| {
            let s = x[0].sin();
            constant_curvature(&diag(&[r2, r2 * s * s]), 2, T::one() / r2)
        })
    }

    pub fn sphere2() -> Self {
        Self::sphere2_radius(T::one())
    }

    /// Hyperbolic upper half-plane, `g = (dx² + dy²)/y²`.
    pub fn half_plane() -> Self {
        RiemannianManifold::new(
            "H2",
            2,
            |x: &[T]| x[1] > T::zero(),
            |x: &[T]| {
                let w = T::one() / (x[1] * x[1]);
                diag(&[w, w])
            },
        )
        .with_metric_derivs(|x: &[T]| {
            let d = lit::<T>(-2.0) / (x[1] * x[1] * x[1]);
            let mut out = vec![T::zero(); 8];
            out[4] = d; // ∂y g_xx
            out[7] = d; // ∂y g_yy
            out
        })
        .with_christoffel(|x: &[T]| {
            let w = T::one() / x[1];
            let mut gm = vec![T::zero(); 8];
            gm[1] = -w; // Γ^x_xy
            gm[2] = -w; // Γ^x_yx
            gm[4] = w; // Γ^y_xx
            gm[7] = -w; // Γ^y_yy
            gm
        })
        .with_curvature(|x: &[T]| {
            let w = T::one() / (x[1] * x[1]);
            constant_curvature(&diag(&[w, w]), 2, -T::one())
        })
    }

    /// Flat torus in its periodic chart; wrapping is left to maps.
    pub fn flat_torus2() -> Self {
        Self::euclidean(2).renamed("T2")
    }

    /// Riemannian product with the block metric.
    pub fn product(a: &RiemannianManifold<T>, b: &RiemannianManifold<T>) -> Self {
        let (na, nb) = (a.dim, b.dim);
        let n = na + nb;
        let (ca, cb) = (a.chart.clone(), b.chart.clone());
        let (ga, gb) = (a.metric.clone(), b.metric.clone());
        let mut m = RiemannianManifold::new(
            &format!("{}x{}", a.name, b.name),
            n,
            move |x: &[T]| ca(&x[..na]) && cb(&x[na..]),
            move |x: &[T]| {
                let (pa, pb) = (ga(&x[..na]), gb(&x[na..]));
                let mut g = vec![T::zero(); n * n];
                for i in 0..na {
                    for j in 0..na {
                        g[i * n + j] = pa[i * na + j];
                    }
                }
                for i in 0..nb {
                    for j in 0..nb {
                        g[(na + i) * n + na + j] = pb[i * nb + j];
                    }
                }
                g
            },
        );
        // block-diagonal embedding of a rank-3 array
        fn embed3<T: Real>(pa: &[T], pb: &[T], na: usize, nb: usize) -> Vec<T> {
            let n = na + nb;
            let mut out = vec![T::zero(); n * n * n];
            for k in 0..na {
                for i in 0..na {
                    for j in 0..na {
                        out[(k * n + i) * n + j] = pa[(k * na + i) * na + j];
                    }
                }
            }
            for k in 0..nb {
                for i in 0..nb {
                    for j in 0..nb {
                        out[((na + k) * n + na + i) * n + na + j] = pb[(k * nb + i) * nb + j];
                    }
                }
            }
            out
        }
        if let (Some(da), Some(db)) = (a.metric_derivs.clone(), b.metric_derivs.clone()) {
            m = m.with_metric_derivs(move |x: &[T]| embed3(&da(&x[..na]), &db(&x[na..]), na, nb));
        }
        if let (Some(da), Some(db)) = (a.christoffel.clone(), b.christoffel.clone()) {
            m = m.with_christoffel(move |x: &[T]| embed3(&da(&x[..na]), &db(&x[na..]), na, nb));
        }
        if let (Some(ra), Some(rb)) = (a.curvature.clone(), b.curvature.clone()) {
            m = m.with_curvature(move |x: &[T]| {
                let (pa, pb) = (ra(&x[..na]), rb(&x[na..]));
                let mut out = vec![T::zero(); n * n * n * n];
                for l in 0..na {
                    for i in 0..na {
                        for j in 0..na {
                            for k in 0..na {
                                out[((l * n + i) * n + j) * n + k] = pa[((l * na + i) * na + j) * na + k];
                            }
                        }
                    }
                }
                for l in 0..nb {
                    for i in 0..nb {
                        for j in 0..nb {
                            for k in 0..nb {
                                out[(((na + l) * n + na + i) * n + na + j) * n + na + k] =
                                    pb[((l * nb + i) * nb + j) * nb + k];
                            }
                        }
                    }
                }
                out
            });
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_exact_christoffel(&self) -> bool {
        self.christoffel.is_some()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim && x.iter().all(|v| v.is_finite()) && (self.chart)(x)
    }

    pub fn check(&self, x: &[T]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfChart { manifold: self.name.clone(), point: x.iter().map(|v| v.as_f64()).collect() })
        }
    }

    /// Space identity of the tangent fiber at `x`.
    pub fn tangent_space(&self, x: &[T]) -> SpaceId {
        SpaceId::fiber(&format!("T{}", self.name), x)
    }

    pub fn vector_tag(&self, x: &[T]) -> AxisTag {
        AxisTag::vector(self.tangent_space(x), self.dim)
    }

    pub fn covector_tag(&self, x: &[T]) -> AxisTag {
        AxisTag::covector(self.tangent_space(x), self.dim)
    }

    pub fn metric_at(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        Ok((self.metric)(x))
    }

    pub fn inverse_metric_at(&self, x: &[T]) -> Result<Vec<T>> {
        linalg::inverse(&self.metric_at(x)?, self.dim)
    }

    /// `√det g`.
    pub fn volume_density_at(&self, x: &[T]) -> Result<T> {
        Ok(linalg::determinant(&self.metric_at(x)?, self.dim).sqrt())
    }

    /// The metric as a tensor in `T*ₓ ⊗ T*ₓ`.
    pub fn metric_tensor(&self, x: &[T]) -> Result<TypedTensor<T>> {
        TypedTensor::new(vec![self.covector_tag(x), self.covector_tag(x)], self.metric_at(x)?)
    }

    pub fn inverse_metric_tensor(&self, x: &[T]) -> Result<TypedTensor<T>> {
        TypedTensor::new(vec![self.vector_tag(x), self.vector_tag(x)], self.inverse_metric_at(x)?)
    }

    /// `∂ₖ g_ij`, exact when available.
    pub fn metric_derivs_at(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        match &self.metric_derivs {
            Some(f) => Ok(f(x)),
            None => self.metric_derivs_fd(x),
        }
    }

    /// `∂ₖ g_ij` by central differences of the metric.
    pub fn metric_derivs_fd(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.dim;
        let metric = |y: &[T]| self.metric_at(y);
        let grad = gradient_fd(&metric, x, lit(FD_STEP))?; // [ij][k]
        let mut out = vec![T::zero(); n * n * n];
        for ij in 0..n * n {
            for k in 0..n {
                out[k * n * n + ij] = grad[ij * n + k];
            }
        }
        Ok(out)
    }

    fn christoffel_from_derivs(&self, x: &[T], dg: &[T]) -> Result<Vec<T>> {
        let n = self.dim;
        let gi = self.inverse_metric_at(x)?;
        let half: T = lit(0.5);
        let mut out = vec![T::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = T::zero();
                    for l in 0..n {
                        let term = dg[(i * n + j) * n + l] + dg[(j * n + i) * n + l] - dg[(l * n + i) * n + j];
                        s += gi[k * n + l] * term;
                    }
                    out[(k * n + i) * n + j] = half * s;
                }
            }
        }
        Ok(out)
    }

    /// `Γᵏ_ij`, exact when available.
    pub fn christoffel_at(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        match &self.christoffel {
            Some(f) => Ok(f(x)),
            None => {
                let dg = self.metric_derivs_at(x)?;
                self.christoffel_from_derivs(x, &dg)
            }
        }
    }

    /// `Γᵏ_ij` from central differences of the metric, ignoring exact data.
    pub fn christoffel_fd_at(&self, x: &[T]) -> Result<Vec<T>> {
        let dg = self.metric_derivs_fd(x)?;
        self.christoffel_from_derivs(x, &dg)
    }

    /// `∂ₘ Γᵏ_ij`, laid out `[k][i][j][m]`.
    pub fn christoffel_derivs_at(&self, x: &[T]) -> Result<Vec<T>> {
        let depth = usize::from(self.christoffel.is_none());
        let f = |y: &[T]| self.christoffel_at(y);
        gradient_fd(&f, x, fd_step(depth))
    }

    /// Curvature computed from the Christoffel symbols and their derivatives.
    pub fn curvature_from_christoffel_at(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.dim;
        let gm = self.christoffel_at(x)?;
        let dgm = self.christoffel_derivs_at(x)?;
        let g = |k: usize, i: usize, j: usize| gm[(k * n + i) * n + j];
        let dg = |k: usize, i: usize, j: usize, m: usize| dgm[((k * n + i) * n + j) * n + m];
        let mut r = vec![T::zero(); n * n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut v = dg(l, k, i, j) - dg(l, j, i, k);
                        for m in 0..n {
                            v += g(l, j, m) * g(m, k, i) - g(l, k, m) * g(m, j, i);
                        }
                        r[((l * n + i) * n + j) * n + k] = v;
                    }
                }
            }
        }
        Ok(r)
    }

    /// `Rˡ_ijk`, exact when available.
    pub fn curvature_at(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        match &self.curvature {
            Some(f) => Ok(f(x)),
            None => self.curvature_from_christoffel_at(x),
        }
    }

    /// `R_lijk = g_lm Rᵐ_ijk`.
    pub fn lower_curvature(&self, x: &[T], r: &[T]) -> Result<Vec<T>> {
        let n = self.dim;
        let g = self.metric_at(x)?;
        let n3 = n * n * n;
        let mut out = vec![T::zero(); n * n3];
        for l in 0..n {
            for rest in 0..n3 {
                let mut s = T::zero();
                for m in 0..n {
                    s += g[l * n + m] * r[m * n3 + rest];
                }
                out[l * n3 + rest] = s;
            }
        }
        Ok(out)
    }

    pub fn lowered_curvature_at(&self, x: &[T]) -> Result<Vec<T>> {
        let r = self.curvature_at(x)?;
        self.lower_curvature(x, &r)
    }

    /// Sectional curvature of the plane spanned by `u` and `v`.
    pub fn sectional_curvature_of(&self, x: &[T], r_lowered: &[T], u: &[T], v: &[T]) -> Result<T> {
        let n = self.dim;
        let g = self.metric_at(x)?;
        let mut num = T::zero();
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        num += r_lowered[((l * n + i) * n + j) * n + k] * u[l] * v[i] * u[j] * v[k];
                    }
                }
            }
        }
        let (uu, vv, uv) = (linalg::bilinear(&g, u, u), linalg::bilinear(&g, v, v), linalg::bilinear(&g, u, v));
        Ok(num / (uu * vv - uv * uv))
    }

    /// Sectional curvature of the first two coordinate directions.
    pub fn sectional_curvature_at(&self, x: &[T]) -> Result<T> {
        if self.dim < 2 {
            return Err(Error::usage("sectional curvature needs dimension at least 2"));
        }
        let mut e0 = vec![T::zero(); self.dim];
        let mut e1 = vec![T::zero(); self.dim];
        e0[0] = T::one();
        e1[1] = T::one();
        let rl = self.lowered_curvature_at(x)?;
        self.sectional_curvature_of(x, &rl, &e0, &e1)
    }

    /// Geodesic acceleration `−Γᵏ_ij vⁱ vʲ`.
    pub fn geodesic_acceleration(&self, x: &[T], v: &[T]) -> Result<Vec<T>> {
        let n = self.dim;
        let gm = self.christoffel_at(x)?;
        Ok((0..n)
            .map(|k| {
                let mut s = T::zero();
                for i in 0..n {
                    for j in 0..n {
                        s += gm[(k * n + i) * n + j] * v[i] * v[j];
                    }
                }
                -s
            })
            .collect())
    }

    fn rk4_step(&self, x: &[T], v: &[T], h: T) -> Result<(Vec<T>, Vec<T>)> {
        let n = self.dim;
        let half: T = lit(0.5);
        let axpy = |a: &[T], s: T, b: &[T]| -> Vec<T> { a.iter().zip(b).map(|(&p, &q)| p + s * q).collect() };
        let k1x = v.to_vec();
        let k1v = self.geodesic_acceleration(x, v)?;
        let x2 = axpy(x, half * h, &k1x);
        let v2 = axpy(v, half * h, &k1v);
        self.check(&x2)?;
        let k2v = self.geodesic_acceleration(&x2, &v2)?;
        let x3 = axpy(x, half * h, &v2);
        let v3 = axpy(v, half * h, &k2v);
        self.check(&x3)?;
        let k3v = self.geodesic_acceleration(&x3, &v3)?;
        let x4 = axpy(x, h, &v3);
        let v4 = axpy(v, h, &k3v);
        self.check(&x4)?;
        let k4v = self.geodesic_acceleration(&x4, &v4)?;
        let sixth = h / lit(6.0);
        let two: T = lit(2.0);
        let xn = (0..n).map(|i| x[i] + sixth * (k1x[i] + two * v2[i] + two * v3[i] + v4[i])).collect();
        let vn = (0..n).map(|i| v[i] + sixth * (k1v[i] + two * k2v[i] + two * k3v[i] + k4v[i])).collect();
        Ok((xn, vn))
    }

    /// Geodesic states `(position, velocity)` at `steps + 1` equally spaced
    /// times in `[0, t]`.
    pub fn geodesic_states(&self, x: &[T], v: &[T], t: T, steps: usize) -> Result<Vec<(Vec<T>, Vec<T>)>> {
        self.check(x)?;
        let steps = steps.max(1);
        let h = t / T::from_usize(steps).expect("step count");
        let mut out = Vec::with_capacity(steps + 1);
        out.push((x.to_vec(), v.to_vec()));
        for s in 0..steps {
            let (xc, vc) = out.last().expect("nonempty");
            let next = self.rk4_step(xc, vc, h).map_err(|e| self.chart_exit(e, h, s))?;
            if !self.contains(&next.0) {
                return Err(self.chart_exit(Error::usage(""), h, s + 1));
            }
            out.push(next);
        }
        Ok(out)
    }

    fn chart_exit(&self, e: Error, h: T, step: usize) -> Error {
        match e {
            Error::OutOfChart { .. } | Error::Usage(_) => {
                Error::ChartExit { manifold: self.name.clone(), time: h.as_f64() * step as f64 }
            }
            other => other,
        }
    }

    /// `exp_x(t v)` integrated with the configured step.
    pub fn exp_map(&self, x: &[T], v: &[T], t: T) -> Result<Vec<T>> {
        let steps = (t.abs() / self.geodesic_step).ceil().to_usize().unwrap_or(1).max(1);
        self.exp_map_steps(x, v, t, steps)
    }

    /// `exp_x(t v)` with a fixed number of steps, smooth in `(x, v, t)`.
    pub fn exp_map_steps(&self, x: &[T], v: &[T], t: T, steps: usize) -> Result<Vec<T>> {
        if t == T::zero() {
            self.check(x)?;
            return Ok(x.to_vec());
        }
        let states = self.geodesic_states(x, v, t, steps)?;
        Ok(states.last().expect("nonempty").0.clone())
    }

    /// `|v|_g` at `x`.
    pub fn norm(&self, x: &[T], v: &[T]) -> Result<T> {
        Ok(linalg::bilinear(&self.metric_at(x)?, v, v).sqrt())
    }

    /// Central differences of the metric-compatibility residual
    /// `∂ₖg_ij − Γˡ_ki g_lj − Γˡ_kj g_il`.
    pub fn metric_compatibility_defect(&self, x: &[T]) -> Result<T> {
        let n = self.dim;
        let dg = self.metric_derivs_fd(x)?;
        let gm = self.christoffel_at(x)?;
        let g = self.metric_at(x)?;
        let mut worst = T::zero();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = dg[(k * n + i) * n + j];
                    for l in 0..n {
                        v -= gm[(l * n + k) * n + i] * g[l * n + j] + gm[(l * n + k) * n + j] * g[i * n + l];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Looks up a zoo manifold by name.
pub fn zoo<T: Real>(name: &str, params: &[f64]) -> Result<RiemannianManifold<T>> {
    match name.to_ascii_lowercase().as_str() {
        "euclidean" => {
            let n = params.first().copied().unwrap_or(2.0);
            if n < 1.0 || n.fract() != 0.0 {
                return Err(Error::usage(format!("euclidean dimension must be a positive integer, got {n}")));
            }
            Ok(RiemannianManifold::euclidean(n as usize))
        }
        "sphere2" => {
            let r = params.first().copied().unwrap_or(1.0);
            if r <= 0.0 {
                return Err(Error::usage("sphere radius must be positive"));
            }
            Ok(RiemannianManifold::sphere2_radius(lit(r)))
        }
        "halfplane" => Ok(RiemannianManifold::half_plane()),
        "flattorus2" => Ok(RiemannianManifold::flat_torus2()),
        other => Err(Error::usage(format!("unknown manifold `{other}` (euclidean, sphere2, halfplane, flattorus2)"))),
    }
}

/// A smooth map between chart domains.
#[derive(Clone)]
pub struct SmoothMap<T> {
    name: String,
    domain: Arc<RiemannianManifold<T>>,
    codomain: Arc<RiemannianManifold<T>>,
    forward: CoordFn<T>,
    jacobian: Option<CoordFn<T>>,
    hessian: Option<CoordFn<T>>,
}

impl<T> fmt::Debug for SmoothMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("name", &self.name)
            .field("domain", &self.domain.name)
            .field("codomain", &self.codomain.name)
            .field("exact_jacobian", &self.jacobian.is_some())
            .field("exact_hessian", &self.hessian.is_some())
            .finish()
    }
}

impl<T> SmoothMap<T> {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl<T: Real> SmoothMap<T> {
    pub fn new(
        name: &str,
        domain: Arc<RiemannianManifold<T>>,
        codomain: Arc<RiemannianManifold<T>>,
        forward: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        SmoothMap {
            name: name.to_string(),
            domain,
            codomain,
            forward: Arc::new(forward),
            jacobian: None,
            hessian: None,
        }
    }

    /// Exact Jacobian, laid out `[a][i] = ∂ᵢφᵃ`.
    pub fn with_jacobian(mut self, f: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(f));
        self
    }

    /// Exact second derivatives, laid out `[a][i][j] = ∂ᵢ∂ⱼφᵃ`.
    pub fn with_hessian(mut self, f: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(f));
        self
    }

    pub fn without_exact_derivatives(mut self) -> Self {
        self.jacobian = None;
        self.hessian = None;
        self
    }

    pub fn identity(m: Arc<RiemannianManifold<T>>) -> Self {
        let n = m.dim();
        SmoothMap::new(&format!("id_{}", m.name()), m.clone(), m, |x: &[T]| x.to_vec())
            .with_jacobian(move |_| linalg::identity(n))
            .with_hessian(move |_| vec![T::zero(); n * n * n])
    }

    pub fn constant(
        name: &str,
        domain: Arc<RiemannianManifold<T>>,
        codomain: Arc<RiemannianManifold<T>>,
        value: Vec<T>,
    ) -> Self {
        let (n, m) = (domain.dim(), codomain.dim());
        SmoothMap::new(name, domain, codomain, move |_| value.clone())
            .with_jacobian(move |_| vec![T::zero(); m * n])
            .with_hessian(move |_| vec![T::zero(); m * n * n])
    }

    /// Unit-parameter geodesic `t ↦ exp(x0, t v0)` on an interval domain,
    /// integrated with a fixed number of steps so it is smooth in `t`.
    pub fn geodesic(
        name: &str,
        interval: Arc<RiemannianManifold<T>>,
        target: Arc<RiemannianManifold<T>>,
        x0: Vec<T>,
        v0: Vec<T>,
        steps: usize,
    ) -> Self {
        assert_eq!(interval.dim(), 1, "geodesic domain must be one-dimensional");
        let state = {
            let target = target.clone();
            let (x0, v0) = (x0.clone(), v0.clone());
            move |t: T| -> Option<(Vec<T>, Vec<T>)> {
                target.geodesic_states(&x0, &v0, t, steps).ok().and_then(|s| s.last().cloned())
            }
        };
        let nan = |k: usize| vec![T::nan(); k];
        let m = target.dim();
        let (s1, s2, s3) = (state.clone(), state.clone(), state);
        let tg = target.clone();
        SmoothMap::new(name, interval, target, move |t: &[T]| s1(t[0]).map_or_else(|| nan(m), |s| s.0))
            .with_jacobian(move |t: &[T]| s2(t[0]).map_or_else(|| nan(m), |s| s.1))
            .with_hessian(move |t: &[T]| {
                s3(t[0]).and_then(|(x, v)| tg.geodesic_acceleration(&x, &v).ok()).unwrap_or_else(|| nan(m))
            })
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn domain(&self) -> &Arc<RiemannianManifold<T>> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<RiemannianManifold<T>> {
        &self.codomain
    }

    pub fn has_exact_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn has_exact_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        self.domain.check(x)?;
        let y = (self.forward)(x);
        self.codomain.check(&y)?;
        Ok(y)
    }

    /// `∂ᵢφᵃ`, laid out `[a][i]`.
    pub fn jacobian_at(&self, x: &[T]) -> Result<Vec<T>> {
        match &self.jacobian {
            Some(j) => {
                self.domain.check(x)?;
                Ok(j(x))
            }
            None => {
                self.domain.check(x)?;
                let f = |y: &[T]| Ok((self.forward)(y));
                gradient_fd(&f, x, fd_step(0))
            }
        }
    }

    /// `∂ᵢ∂ⱼφᵃ`, laid out `[a][i][j]`.
    pub fn hessian_at(&self, x: &[T]) -> Result<Vec<T>> {
        self.domain.check(x)?;
        if let Some(h) = &self.hessian {
            return Ok(h(x));
        }
        if let Some(j) = &self.jacobian {
            let f = |y: &[T]| Ok(j(y));
            return gradient_fd(&f, x, fd_step(0));
        }
        let n = self.domain.dim();
        let m = self.codomain.dim();
        let h: T = fd_step(1);
        let four_h2 = lit::<T>(4.0) * h * h;
        let mut out = vec![T::zero(); m * n * n];
        for i in 0..n {
            for j in i..n {
                let at = |si: T, sj: T| {
                    let mut y = x.to_vec();
                    y[i] += si * h;
                    y[j] += sj * h;
                    (self.forward)(&y)
                };
                let (pp, pm, mp, mm) = (
                    at(T::one(), T::one()),
                    at(T::one(), -T::one()),
                    at(-T::one(), T::one()),
                    at(-T::one(), -T::one()),
                );
                for a in 0..m {
                    let v = (pp[a] - pm[a] - mp[a] + mm[a]) / four_h2;
                    out[(a * n + i) * n + j] = v;
                    out[(a * n + j) * n + i] = v;
                }
            }
        }
        Ok(out)
    }

    /// `outer ∘ inner`, with exact derivatives when both factors have them.
    pub fn compose(outer: &SmoothMap<T>, inner: &SmoothMap<T>, name: &str) -> Result<SmoothMap<T>> {
        if inner.codomain.name() != outer.domain.name() {
            return Err(Error::usage(format!(
                "cannot compose {} after {}: {} ≠ {}",
                outer.name,
                inner.name,
                inner.codomain.name(),
                outer.domain.name()
            )));
        }
        let (fo, fi) = (outer.forward.clone(), inner.forward.clone());
        let mut out = SmoothMap::new(name, inner.domain.clone(), outer.codomain.clone(), move |x: &[T]| fo(&fi(x)));
        let n = inner.domain.dim();
        let k = inner.codomain.dim();
        let m = outer.codomain.dim();
        if let (Some(jo), Some(ji)) = (outer.jacobian.clone(), inner.jacobian.clone()) {
            let fi = inner.forward.clone();
            out = out.with_jacobian(move |x: &[T]| {
                let (a, b) = (jo(&fi(x)), ji(x));
                let mut j = vec![T::zero(); m * n];
                for p in 0..m {
                    for i in 0..n {
                        j[p * n + i] = (0..k).map(|c| a[p * k + c] * b[c * n + i]).sum();
                    }
                }
                j
            });
            if let (Some(ho), Some(hi)) = (outer.hessian.clone(), inner.hessian.clone()) {
                let (jo, ji, fi) = (
                    outer.jacobian.clone().expect("checked"),
                    inner.jacobian.clone().expect("checked"),
                    inner.forward.clone(),
                );
                out = out.with_hessian(move |x: &[T]| {
                    let y = fi(x);
                    let (a, b, ha, hb) = (jo(&y), ji(x), ho(&y), hi(x));
                    let mut h = vec![T::zero(); m * n * n];
                    for p in 0..m {
                        for i in 0..n {
                            for j in 0..n {
                                let mut s = T::zero();
                                for c in 0..k {
                                    s += a[p * k + c] * hb[(c * n + i) * n + j];
                                    for d in 0..k {
                                        s += ha[(p * k + c) * k + d] * b[c * n + i] * b[d * n + j];
                                    }
                                }
                                h[(p * n + i) * n + j] = s;
                            }
                        }
                    }
                    h
                });
            }
        }
        Ok(out)
    }
}
