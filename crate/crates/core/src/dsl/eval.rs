//! Numeric evaluation of typed expressions as tensor fields.

use std::collections::HashMap;
use std::sync::Arc;

use crate::bundle::BundleType;
use crate::covariant::{tangent_map, Slot, TensorField};
use crate::error::{Error, Result};
use crate::manifolds::{RiemannianManifold, SmoothMap};
use crate::scalar::Real;
use crate::tensor::{AxisTag, Permutation, TypedTensor, Variance};

use super::ast::ExprKind;
use super::typecheck::{Checker, Symbol, TypedExpr};

/// Geometry and bindings for the symbols of a checked program. Manifolds
/// without an explicit geometry are flat coordinate spaces.
#[derive(Clone)]
pub struct EvalContext<T: Real> {
    checker: Checker,
    geometries: HashMap<String, Arc<RiemannianManifold<T>>>,
    maps: HashMap<String, SmoothMap<T>>,
    fields: HashMap<String, TensorField<T>>,
}

impl<T: Real> EvalContext<T> {
    pub fn new(checker: Checker) -> Self {
        let geometries = checker
            .env
            .manifolds()
            .map(|m| (m.name.clone(), Arc::new(RiemannianManifold::euclidean(m.dim).renamed(&m.name))))
            .collect();
        EvalContext { checker, geometries, maps: HashMap::new(), fields: HashMap::new() }
    }

    pub fn checker(&self) -> &Checker {
        &self.checker
    }

    /// Uses `geometry` (renamed to the declared name) for manifold `name`.
    pub fn with_geometry(mut self, name: &str, geometry: RiemannianManifold<T>) -> Result<Self> {
        let decl = self.checker.env.manifold(name).map_err(|e| Error::Unbound(e.message))?;
        if decl.dim != geometry.dim() {
            return Err(Error::usage(format!(
                "`{name}` is declared with dimension {}, geometry has {}",
                decl.dim,
                geometry.dim()
            )));
        }
        self.geometries.insert(name.to_string(), Arc::new(geometry.renamed(name)));
        Ok(self)
    }

    pub fn geometry(&self, name: &str) -> Result<Arc<RiemannianManifold<T>>> {
        self.geometries.get(name).cloned().ok_or_else(|| Error::Unbound(format!("manifold `{name}`")))
    }

    /// Binds a declared map; its domain and codomain must be the context's
    /// geometries for the declared manifolds.
    pub fn bind_map(mut self, name: &str, map: SmoothMap<T>) -> Result<Self> {
        let decl = self.checker.env.map(name).map_err(|e| Error::Unbound(e.message))?;
        if map.domain().name() != decl.domain || map.codomain().name() != decl.codomain {
            return Err(Error::usage(format!(
                "`{name}` is declared {} → {}, bound map runs {} → {}",
                decl.domain,
                decl.codomain,
                map.domain().name(),
                map.codomain().name()
            )));
        }
        self.maps.insert(name.to_string(), map.renamed(name));
        Ok(self)
    }

    pub fn map(&self, name: &str) -> Result<SmoothMap<T>> {
        if let Some(m) = self.maps.get(name) {
            return Ok(m.clone());
        }
        if let Some(m) = self.checker.env.identity_of(name) {
            return Ok(SmoothMap::identity(self.geometry(m)?).renamed(name));
        }
        if let Ok(decl) = self.checker.env.map(name) {
            // a declared composition can be assembled from its factors
            for other in self.checker.env.maps() {
                for inner in self.checker.env.maps() {
                    if self.checker.env.composition(&other.name, &inner.name) == Some(decl.name.as_str()) {
                        let (o, i) = (self.map(&other.name)?, self.map(&inner.name)?);
                        return SmoothMap::compose(&o, &i, name);
                    }
                }
            }
        }
        Err(Error::Unbound(format!("map `{name}`")))
    }

    /// Binds a declared field; its slots must match the declared type.
    pub fn bind_field(mut self, name: &str, field: TensorField<T>) -> Result<Self> {
        let ty = match self.checker.symbols.get(name) {
            Some(Symbol::Field(t)) => t.clone(),
            _ => return Err(Error::Unbound(format!("field `{name}`"))),
        };
        let want = self.slots_for(&ty)?;
        let same = want.len() == field.slots().len()
            && want.iter().zip(field.slots()).all(|(a, b)| {
                a.variance == b.variance
                    && a.manifold.name() == b.manifold.name()
                    && a.map.as_ref().map(|m| m.name().to_string()) == b.map.as_ref().map(|m| m.name().to_string())
            });
        if !same || field.base().name() != self.base_of(&ty)?.name() {
            return Err(Error::usage(format!("binding for `{name}` does not match its declared type")));
        }
        self.fields.insert(name.to_string(), field);
        Ok(self)
    }

    fn base_of(&self, ty: &BundleType) -> Result<Arc<RiemannianManifold<T>>> {
        let base = ty.base_space(&self.checker.env).map_err(|e| Error::usage(e.message))?;
        match base.as_single() {
            Some(m) => self.geometry(m),
            None => Err(Error::usage(format!("sections over the product {base} cannot be evaluated"))),
        }
    }

    /// Slots realizing a normalized type.
    pub fn slots_for(&self, ty: &BundleType) -> Result<Vec<Slot<T>>> {
        ty.factors().iter().map(|f| self.slot(f)).collect()
    }

    fn slot(&self, f: &BundleType) -> Result<Slot<T>> {
        match f {
            BundleType::Tangent(m) => Ok(Slot::vector(self.geometry(m)?)),
            BundleType::Cotangent(m) => Ok(Slot::covector(self.geometry(m)?)),
            BundleType::Pullback(g, inner) => {
                let outer = self.slot(inner)?;
                let psi = self.map(g)?;
                let map = match &outer.map {
                    None => psi,
                    Some(h) => SmoothMap::compose(h, &psi, &format!("{}∘{}", h.name(), g))?,
                };
                Ok(Slot { manifold: outer.manifold, map: Some(map), variance: outer.variance })
            }
            other => Err(Error::usage(format!(
                "factor {} cannot be evaluated (only tangent, cotangent and their pullbacks)",
                other.render(&self.checker.env, Default::default())
            ))),
        }
    }

    /// The field an expression denotes.
    pub fn field(&self, t: &TypedExpr) -> Result<TensorField<T>> {
        if matches!(t.ty, BundleType::TensorFull(..) | BundleType::SumFull(..) | BundleType::SumShared(..)) {
            return Err(Error::usage("sums and products over different bases cannot be evaluated"));
        }
        let child = |k: usize| self.field(&t.children[k]);
        match &t.expr.kind {
            ExprKind::Var(name) => match self.checker.symbols.get(name) {
                Some(Symbol::Field(_)) => {
                    self.fields.get(name).cloned().ok_or_else(|| Error::Unbound(format!("field `{name}`")))
                }
                Some(Symbol::Metric(m)) => Ok(TensorField::metric(self.geometry(m)?)),
                None => match self.checker.env.identity_of(name) {
                    Some(m) => Ok(TensorField::identity(self.geometry(m)?)),
                    None => Err(Error::Unbound(format!("symbol `{name}`"))),
                },
            },
            ExprKind::Pair(_, _, n) => child(0)?.contract(&child(1)?, *n),
            ExprKind::Trace(_) => child(0)?.trace_axes(0, 1),
            ExprKind::Permute(_, cycles) => {
                let a = child(0)?;
                let sigma = Permutation::from_cycles(a.rank(), cycles)?;
                a.permute(&sigma)
            }
            ExprKind::Otimes(..) => child(0)?.outer(&child(1)?),
            ExprKind::Boxtimes(..) => child(0)?.parallel_product(&child(1)?),
            ExprKind::Pullback(g, _) => child(0)?.pullback(&self.map(&g.name)?),
            ExprKind::Cov(_) => Ok(child(0)?.covariant_derivative()),
            ExprKind::Dmap(g) => Ok(tangent_map(&self.map(&g.name)?)),
            ExprKind::Dual(_) => child(0)?.permute(&Permutation::from_images(vec![1, 0])?),
        }
    }

    /// Axis tags the static type of `t` predicts at `x`.
    pub fn expected_tags(&self, t: &TypedExpr, x: &[T]) -> Result<Vec<AxisTag>> {
        self.slots_for(&t.ty)?.iter().map(|s| s.tag(x)).collect()
    }

    /// Value of an expression at coordinates of its base. The result's tags
    /// are checked against the static type; a disagreement is a binding bug
    /// and surfaces as `TagMismatch`.
    pub fn evaluate(&self, t: &TypedExpr, x: &[T]) -> Result<TypedTensor<T>> {
        let value = self.field(t)?.at(x)?;
        let want = self.expected_tags(t, x)?;
        if want.len() != value.rank() {
            return Err(Error::usage(format!(
                "value has {} axes where the type predicts {}",
                value.rank(),
                want.len()
            )));
        }
        for (k, (w, got)) in want.iter().zip(value.tags()).enumerate() {
            if w != got {
                return Err(Error::TagMismatch { left_axis: k, right_axis: k, left: w.clone(), right: got.clone() });
            }
        }
        Ok(value)
    }
}

/// Variance of a normalized factor, looking through pullbacks.
pub fn factor_variance(f: &BundleType) -> Option<Variance> {
    match f {
        BundleType::Tangent(_) => Some(Variance::Vector),
        BundleType::Cotangent(_) => Some(Variance::Covector),
        BundleType::Pullback(_, inner) => factor_variance(inner),
        _ => None,
    }
}
