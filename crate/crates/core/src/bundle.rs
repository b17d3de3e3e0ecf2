//! Bundle-type expressions and their canonical identifications.
//!
//! Types are trees over tangent, cotangent and trivial line bundles, closed
//! under pullback, duals, tensor products and direct sums. Two types are equal
//! exactly when their normal forms are structurally equal; every canonical
//! isomorphism the engine applies silently is one rewrite in [`normalize`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

/// Verbosity of rendered types and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Telescope {
    /// Every base space, pullback and dimension spelled out.
    High,
    #[default]
    Mid,
    /// Pullbacks and bases suppressed; only the fiber shape remains.
    Low,
}

impl std::str::FromStr for Telescope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(Telescope::High),
            "mid" => Ok(Telescope::Mid),
            "low" => Ok(Telescope::Low),
            other => Err(format!("unknown telescope level `{other}` (high|mid|low)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeErrorKind {
    ValenceError,
    SpaceMismatch,
    BaseMismatch,
    UnknownSymbol,
    Malformed,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeErrorKind::ValenceError => "ValenceError",
            TypeErrorKind::SpaceMismatch => "SpaceMismatch",
            TypeErrorKind::BaseMismatch => "BaseMismatch",
            TypeErrorKind::UnknownSymbol => "UnknownSymbol",
            TypeErrorKind::Malformed => "Malformed",
        };
        f.write_str(s)
    }
}

/// A typing failure. `path` lists child indices from the root of the
/// offending type expression down to the node that failed.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{kind}: {message}")]
pub struct BundleError {
    pub kind: TypeErrorKind,
    pub message: String,
    pub path: Vec<usize>,
    pub expected: Option<BundleType>,
    pub found: Option<BundleType>,
}

impl BundleError {
    pub fn new(kind: TypeErrorKind, message: impl Into<String>) -> Self {
        BundleError { kind, message: message.into(), path: Vec::new(), expected: None, found: None }
    }

    fn at(mut self, child: usize) -> Self {
        self.path.insert(0, child);
        self
    }

    fn with_types(mut self, expected: &BundleType, found: &BundleType) -> Self {
        self.expected = Some(expected.clone());
        self.found = Some(found.clone());
        self
    }
}

type BResult<T> = Result<T, BundleError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifoldId {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapId {
    pub name: String,
    pub domain: String,
    pub codomain: String,
}

/// A base space: one manifold or a formal product, kept sorted by name so that
/// `S×M` and `M×S` coincide.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Base(Vec<String>);

impl Base {
    pub fn single(name: &str) -> Self {
        Base(vec![name.to_string()])
    }

    pub fn product(names: &[&str]) -> Self {
        let mut v: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        v.sort();
        v.dedup();
        Base(v)
    }

    pub fn manifolds(&self) -> &[String] {
        &self.0
    }

    pub fn as_single(&self) -> Option<&str> {
        match self.0.as_slice() {
            [one] => Some(one),
            _ => None,
        }
    }

    pub fn join(&self, other: &Base) -> Base {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        v.sort();
        v.dedup();
        Base(v)
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("×"))
    }
}

/// Declared manifolds, maps and map compositions.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    manifolds: BTreeMap<String, ManifoldId>,
    maps: BTreeMap<String, MapId>,
    /// (outer, inner) -> name of outer∘inner
    compositions: HashMap<(String, String), String>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_manifold(&mut self, name: &str, dim: usize) -> BResult<()> {
        if dim == 0 {
            return Err(BundleError::new(
                TypeErrorKind::Malformed,
                format!("manifold `{name}` must have dimension at least 1"),
            ));
        }
        if self.manifolds.contains_key(name) || self.maps.contains_key(name) {
            return Err(BundleError::new(TypeErrorKind::Malformed, format!("`{name}` is already declared")));
        }
        self.manifolds.insert(name.to_string(), ManifoldId { name: name.to_string(), dim });
        Ok(())
    }

    pub fn declare_map(&mut self, name: &str, domain: &str, codomain: &str) -> BResult<()> {
        for m in [domain, codomain] {
            if !self.manifolds.contains_key(m) {
                return Err(BundleError::new(
                    TypeErrorKind::UnknownSymbol,
                    format!("unknown manifold `{m}` in declaration of `{name}`"),
                ));
            }
        }
        if self.maps.contains_key(name) || self.manifolds.contains_key(name) || self.identity_of(name).is_some() {
            return Err(BundleError::new(TypeErrorKind::Malformed, format!("`{name}` is already declared")));
        }
        self.maps.insert(
            name.to_string(),
            MapId { name: name.to_string(), domain: domain.to_string(), codomain: codomain.to_string() },
        );
        Ok(())
    }

    /// Registers `name = outer ∘ inner`, declaring `name` as a map if needed.
    pub fn declare_composition(&mut self, name: &str, outer: &str, inner: &str) -> BResult<()> {
        let o = self.map(outer)?;
        let i = self.map(inner)?;
        if i.codomain != o.domain {
            return Err(BundleError::new(
                TypeErrorKind::BaseMismatch,
                format!(
                    "cannot compose `{outer}`: {} → {} after `{inner}`: {} → {}",
                    o.domain, o.codomain, i.domain, i.codomain
                ),
            ));
        }
        match self.maps.get(name) {
            Some(existing) if existing.domain != i.domain || existing.codomain != o.codomain => {
                return Err(BundleError::new(
                    TypeErrorKind::BaseMismatch,
                    format!("`{name}` is declared with a different signature"),
                ));
            }
            Some(_) => {}
            None => self.declare_map(name, &i.domain, &o.codomain)?,
        }
        self.compositions.insert((outer.to_string(), inner.to_string()), name.to_string());
        Ok(())
    }

    pub fn manifold(&self, name: &str) -> BResult<&ManifoldId> {
        self.manifolds
            .get(name)
            .ok_or_else(|| BundleError::new(TypeErrorKind::UnknownSymbol, format!("unknown manifold `{name}`")))
    }

    pub fn manifolds(&self) -> impl Iterator<Item = &ManifoldId> {
        self.manifolds.values()
    }

    pub fn maps(&self) -> impl Iterator<Item = &MapId> {
        self.maps.values()
    }

    /// `id_M` is implicitly declared for every manifold `M`.
    pub fn identity_of(&self, map: &str) -> Option<&str> {
        let m = map.strip_prefix("id_")?;
        self.manifolds.get(m).map(|m| m.name.as_str())
    }

    pub fn map(&self, name: &str) -> BResult<MapId> {
        if let Some(m) = self.maps.get(name) {
            return Ok(m.clone());
        }
        if let Some(m) = self.identity_of(name) {
            return Ok(MapId { name: name.to_string(), domain: m.to_string(), codomain: m.to_string() });
        }
        Err(BundleError::new(TypeErrorKind::UnknownSymbol, format!("unknown map `{name}`")))
    }

    pub fn composition(&self, outer: &str, inner: &str) -> Option<&str> {
        self.compositions.get(&(outer.to_string(), inner.to_string())).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BundleType {
    Tangent(String),
    Cotangent(String),
    /// The trivial ℝ bundle over a base.
    Line(Base),
    Pullback(String, Box<BundleType>),
    TensorShared(Box<BundleType>, Box<BundleType>),
    TensorFull(Box<BundleType>, Box<BundleType>),
    SumShared(Box<BundleType>, Box<BundleType>),
    SumFull(Box<BundleType>, Box<BundleType>),
    Dual(Box<BundleType>),
}

use BundleType as B;

impl BundleType {
    pub fn tangent(m: &str) -> Self {
        B::Tangent(m.to_string())
    }

    pub fn cotangent(m: &str) -> Self {
        B::Cotangent(m.to_string())
    }

    pub fn line(m: &str) -> Self {
        B::Line(Base::single(m))
    }

    pub fn pullback(f: &str, inner: BundleType) -> Self {
        B::Pullback(f.to_string(), Box::new(inner))
    }

    pub fn tensor(a: BundleType, b: BundleType) -> Self {
        B::TensorShared(Box::new(a), Box::new(b))
    }

    pub fn tensor_full(a: BundleType, b: BundleType) -> Self {
        B::TensorFull(Box::new(a), Box::new(b))
    }

    pub fn sum(a: BundleType, b: BundleType) -> Self {
        B::SumShared(Box::new(a), Box::new(b))
    }

    pub fn sum_full(a: BundleType, b: BundleType) -> Self {
        B::SumFull(Box::new(a), Box::new(b))
    }

    pub fn dual(a: BundleType) -> Self {
        B::Dual(Box::new(a))
    }

    /// `Hom(from, to) = to ⊗ from*`, over a shared base.
    pub fn hom(from: BundleType, to: BundleType) -> Self {
        B::tensor(to, B::dual(from))
    }

    /// Base space, checking well-formedness along the way.
    pub fn base_space(&self, env: &Environment) -> BResult<Base> {
        match self {
            B::Tangent(m) | B::Cotangent(m) => {
                env.manifold(m)?;
                Ok(Base::single(m))
            }
            B::Line(base) => {
                if base.0.is_empty() {
                    return Err(BundleError::new(TypeErrorKind::Malformed, "line bundle with empty base"));
                }
                for m in &base.0 {
                    env.manifold(m)?;
                }
                Ok(base.clone())
            }
            B::Pullback(f, inner) => {
                let map = env.map(f)?;
                let b = inner.base_space(env).map_err(|e| e.at(0))?;
                if b.as_single() != Some(map.codomain.as_str()) {
                    return Err(BundleError::new(
                        TypeErrorKind::BaseMismatch,
                        format!("cannot pull back a bundle over {b} along `{f}`: {} → {}", map.domain, map.codomain),
                    ));
                }
                Ok(Base::single(&map.domain))
            }
            B::TensorShared(a, b) | B::SumShared(a, b) => {
                let ba = a.base_space(env).map_err(|e| e.at(0))?;
                let bb = b.base_space(env).map_err(|e| e.at(1))?;
                if ba != bb {
                    return Err(BundleError::new(
                        TypeErrorKind::BaseMismatch,
                        format!("shared product needs equal bases, found {ba} and {bb}"),
                    ));
                }
                Ok(ba)
            }
            B::TensorFull(a, b) | B::SumFull(a, b) => {
                let ba = a.base_space(env).map_err(|e| e.at(0))?;
                let bb = b.base_space(env).map_err(|e| e.at(1))?;
                Ok(ba.join(&bb))
            }
            B::Dual(a) => a.base_space(env).map_err(|e| e.at(0)),
        }
    }

    /// Fiber dimension.
    pub fn rank(&self, env: &Environment) -> BResult<usize> {
        self.base_space(env)?;
        self.rank_unchecked(env)
    }

    fn rank_unchecked(&self, env: &Environment) -> BResult<usize> {
        Ok(match self {
            B::Tangent(m) | B::Cotangent(m) => env.manifold(m)?.dim,
            B::Line(_) => 1,
            B::Pullback(_, f) | B::Dual(f) => f.rank_unchecked(env)?,
            B::TensorShared(a, b) | B::TensorFull(a, b) => a.rank_unchecked(env)? * b.rank_unchecked(env)?,
            B::SumShared(a, b) | B::SumFull(a, b) => a.rank_unchecked(env)? + b.rank_unchecked(env)?,
        })
    }

    pub fn is_tensor(&self) -> bool {
        matches!(self, B::TensorShared(..) | B::TensorFull(..))
    }

    /// Tensor factors of a normalized type, in order. The line bundle has none.
    pub fn factors(&self) -> Vec<BundleType> {
        match self {
            B::TensorShared(a, b) | B::TensorFull(a, b) => {
                let mut v = a.factors();
                v.extend(b.factors());
                v
            }
            B::Line(_) => Vec::new(),
            other => vec![other.clone()],
        }
    }

    /// Renders at the given verbosity.
    pub fn render(&self, env: &Environment, level: Telescope) -> String {
        match self {
            B::Tangent(m) => match level {
                Telescope::High => format!("T({m}:{})", env.manifold(m).map(|x| x.dim).unwrap_or(0)),
                _ => format!("T{m}"),
            },
            B::Cotangent(m) => match level {
                Telescope::High => format!("T*({m}:{})", env.manifold(m).map(|x| x.dim).unwrap_or(0)),
                _ => format!("T*{m}"),
            },
            B::Line(base) => format!("ℝ_{base}"),
            B::Pullback(f, inner) => match level {
                Telescope::Low => inner.render(env, level),
                _ => format!("{f}*{}", inner.render_operand(env, level)),
            },
            B::TensorShared(a, b) | B::TensorFull(a, b) => {
                let op = match (level, self.base_space(env)) {
                    (Telescope::High, Ok(base)) => format!(" ⊗_{base} "),
                    _ => " ⊗ ".to_string(),
                };
                format!("{}{op}{}", a.render_operand(env, level), b.render_operand(env, level))
            }
            B::SumShared(a, b) | B::SumFull(a, b) => {
                let op = match (level, self.base_space(env)) {
                    (Telescope::High, Ok(base)) => format!(" ⊕_{base} "),
                    _ => " ⊕ ".to_string(),
                };
                format!("{}{op}{}", a.render_operand(env, level), b.render_operand(env, level))
            }
            B::Dual(a) => format!("{}*", a.render_operand(env, level)),
        }
    }

    fn render_operand(&self, env: &Environment, level: Telescope) -> String {
        match self {
            B::TensorShared(..) | B::TensorFull(..) | B::SumShared(..) | B::SumFull(..) => {
                format!("({})", self.render(env, level))
            }
            _ => self.render(env, level),
        }
    }
}

/// Canonical form under the silent identifications:
///
/// * `F** → F`, `(TM)* → T*M`, `(T*M)* → TM`, `ℝ* → ℝ`, and duals distribute
///   over tensor products and sums;
/// * `id*F → F`, `ψ*φ*F → (φ∘ψ)*F` when the composition is declared,
///   pullback distributes over shared tensor products and sums, and commutes
///   with duals; `f*ℝ_N = ℝ_M`;
/// * tensor products are right-associated, the shared line bundle is their
///   unit, and the shared/full flavor is decided by the operand bases.
pub fn normalize(b: &BundleType, env: &Environment) -> BResult<BundleType> {
    b.base_space(env)?;
    Ok(norm(b, env))
}

fn norm(b: &BundleType, env: &Environment) -> BundleType {
    match b {
        B::Tangent(_) | B::Cotangent(_) | B::Line(_) => b.clone(),
        B::Dual(inner) => dual_of(&norm(inner, env)),
        B::Pullback(f, inner) => pull(f, &norm(inner, env), env),
        B::TensorShared(x, y) | B::TensorFull(x, y) => tensor_of(norm(x, env), norm(y, env), env),
        B::SumShared(x, y) | B::SumFull(x, y) => sum_of(norm(x, env), norm(y, env), env),
    }
}

fn base_unchecked(b: &BundleType, env: &Environment) -> Base {
    b.base_space(env).expect("normal forms of well-formed types are well-formed")
}

fn dual_of(b: &BundleType) -> BundleType {
    match b {
        B::Tangent(m) => {
            log::debug!("rewrite: (T{m})* → T*{m}");
            B::Cotangent(m.clone())
        }
        B::Cotangent(m) => {
            log::debug!("rewrite: (T*{m})* → T{m}");
            B::Tangent(m.clone())
        }
        B::Line(base) => B::Line(base.clone()),
        B::Pullback(f, inner) => B::Pullback(f.clone(), Box::new(dual_of(inner))),
        B::TensorShared(x, y) => B::TensorShared(Box::new(dual_of(x)), Box::new(dual_of(y))),
        B::TensorFull(x, y) => B::TensorFull(Box::new(dual_of(x)), Box::new(dual_of(y))),
        B::SumShared(x, y) => B::SumShared(Box::new(dual_of(x)), Box::new(dual_of(y))),
        B::SumFull(x, y) => B::SumFull(Box::new(dual_of(x)), Box::new(dual_of(y))),
        // normal forms never contain Dual
        B::Dual(inner) => (**inner).clone(),
    }
}

fn pull(f: &str, b: &BundleType, env: &Environment) -> BundleType {
    if env.identity_of(f).is_some() {
        log::debug!("rewrite: {f}*F → F");
        return b.clone();
    }
    let map = env.map(f).expect("checked by base_space");
    match b {
        B::TensorShared(x, y) => {
            log::debug!("rewrite: {f}*(F ⊗ G) → {f}*F ⊗ {f}*G");
            tensor_of(pull(f, x, env), pull(f, y, env), env)
        }
        B::SumShared(x, y) => sum_of(pull(f, x, env), pull(f, y, env), env),
        B::Line(_) => B::Line(Base::single(&map.domain)),
        B::Pullback(g, inner) => match env.composition(g, f) {
            Some(h) => {
                log::debug!("rewrite: {f}*{g}*F → ({g}∘{f})*F = {h}*F");
                pull(h, inner, env)
            }
            None => B::Pullback(f.to_string(), Box::new(b.clone())),
        },
        other => B::Pullback(f.to_string(), Box::new(other.clone())),
    }
}

fn tensor_of(a: BundleType, b: BundleType, env: &Environment) -> BundleType {
    let ba = base_unchecked(&a, env);
    let bb = base_unchecked(&b, env);
    if let B::Line(lb) = &a {
        if *lb == bb {
            return b;
        }
    }
    if let B::Line(lb) = &b {
        if *lb == ba {
            return a;
        }
    }
    match a {
        B::TensorShared(a1, a2) | B::TensorFull(a1, a2) => {
            let rest = tensor_of(*a2, b, env);
            tensor_of(*a1, rest, env)
        }
        a => {
            if ba == bb {
                B::TensorShared(Box::new(a), Box::new(b))
            } else {
                B::TensorFull(Box::new(a), Box::new(b))
            }
        }
    }
}

fn sum_of(a: BundleType, b: BundleType, env: &Environment) -> BundleType {
    if base_unchecked(&a, env) == base_unchecked(&b, env) {
        B::SumShared(Box::new(a), Box::new(b))
    } else {
        B::SumFull(Box::new(a), Box::new(b))
    }
}

/// Rebuilds a normalized tensor type from factors; `base` is used for the
/// empty (scalar) case.
pub fn from_factors(factors: &[BundleType], base: &Base, env: &Environment) -> BundleType {
    match factors.split_last() {
        None => B::Line(base.clone()),
        Some((last, init)) => init.iter().rev().fold(last.clone(), |acc, f| tensor_of(f.clone(), acc, env)),
    }
}

/// Classifies why factor `left` cannot pair with factor `right`.
fn pairing_failure(left: &BundleType, right: &BundleType) -> Option<BundleError> {
    if dual_of(left) == *right {
        return None;
    }
    let kind = if left == right { TypeErrorKind::ValenceError } else { TypeErrorKind::SpaceMismatch };
    Some(BundleError::new(kind, "factors do not pair").with_types(&dual_of(left), right))
}

/// Type of the n-fold natural pairing `left ·ⁿ right`.
pub fn contract_type(left: &BundleType, right: &BundleType, n: usize, env: &Environment) -> BResult<BundleType> {
    let l = normalize(left, env).map_err(|e| e.at(0))?;
    let r = normalize(right, env).map_err(|e| e.at(1))?;
    let fl = l.factors();
    let fr = r.factors();
    if fl.len() < n || fr.len() < n {
        return Err(BundleError::new(
            TypeErrorKind::ValenceError,
            format!("a {n}-fold pairing needs {n} factors on each side, found {} and {}", fl.len(), fr.len()),
        ));
    }
    let bl = l.base_space(env)?;
    let br = r.base_space(env)?;
    if bl != br {
        return Err(BundleError::new(TypeErrorKind::BaseMismatch, format!("operands live over {bl} and {br}")));
    }
    let keep = fl.len() - n;
    for k in 0..n {
        if let Some(err) = pairing_failure(&fl[keep + k], &fr[k]) {
            return Err(err);
        }
    }
    let mut rest: Vec<BundleType> = fl[..keep].to_vec();
    rest.extend(fr[n..].iter().cloned());
    Ok(from_factors(&rest, &bl, env))
}

/// Whether factor `a` pairs with factor `b` (both normalized).
pub fn factors_pair(a: &BundleType, b: &BundleType) -> bool {
    dual_of(a) == *b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> Environment {
        let mut e = Environment::new();
        e.declare_manifold("L", 1).unwrap();
        e.declare_manifold("M", 2).unwrap();
        e.declare_manifold("N", 3).unwrap();
        e.declare_manifold("S", 2).unwrap();
        e.declare_map("phi", "M", "N").unwrap();
        e.declare_map("psi", "L", "M").unwrap();
        e.declare_map("f", "M", "S").unwrap();
        e.declare_composition("chi", "phi", "psi").unwrap();
        e
    }

    #[test]
    fn base_space_examples() {
        let e = env();
        assert_eq!(B::tangent("M").base_space(&e).unwrap(), Base::single("M"));
        let pb = B::pullback("f", B::tangent("S"));
        assert_eq!(pb.base_space(&e).unwrap(), Base::single("M"));
        let full = B::tensor_full(B::tangent("S"), B::cotangent("M"));
        assert_eq!(full.base_space(&e).unwrap(), Base::product(&["S", "M"]));
        assert_eq!(full.base_space(&e).unwrap().to_string(), "M×S");
    }

    #[test]
    fn shared_product_rejects_unequal_bases() {
        let e = env();
        let bad = B::tensor(B::tangent("S"), B::cotangent("M"));
        let err = bad.base_space(&e).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::BaseMismatch);
    }

    #[test]
    fn malformed_pullback_reports_path() {
        let e = env();
        let bad = B::tensor(B::tangent("M"), B::pullback("f", B::tangent("N")));
        let err = bad.base_space(&e).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::BaseMismatch);
        assert_eq!(err.path, vec![1]);
    }

    #[test]
    fn rank_rules() {
        let e = env();
        assert_eq!(B::tangent("N").rank(&e).unwrap(), 3);
        let t = B::tensor(B::pullback("phi", B::tangent("N")), B::cotangent("M"));
        assert_eq!(t.rank(&e).unwrap(), 6);
        assert_eq!(B::sum(B::tangent("M"), B::line("M")).rank(&e).unwrap(), 3);
        assert_eq!(B::line("M").rank(&e).unwrap(), 1);
    }

    #[test]
    fn identity_pullback_vanishes() {
        let e = env();
        let b = B::pullback("id_M", B::tangent("M"));
        assert_eq!(normalize(&b, &e).unwrap(), B::tangent("M"));
    }

    #[test]
    fn pullbacks_compose_when_declared() {
        let e = env();
        let nested = B::pullback("psi", B::pullback("phi", B::tangent("N")));
        assert_eq!(normalize(&nested, &e).unwrap(), B::pullback("chi", B::tangent("N")));
    }

    #[test]
    fn undeclared_composition_is_kept() {
        let mut e = env();
        e.declare_map("g", "S", "M").unwrap();
        let nested = B::pullback("g", B::pullback("phi", B::tangent("N")));
        assert_eq!(normalize(&nested, &e).unwrap(), nested);
    }

    #[test]
    fn double_dual_and_dual_of_tangent() {
        let e = env();
        let b = B::dual(B::dual(B::cotangent("M")));
        assert_eq!(normalize(&b, &e).unwrap(), B::cotangent("M"));
        assert_eq!(normalize(&B::dual(B::tangent("M")), &e).unwrap(), B::cotangent("M"));
    }

    #[test]
    fn pullback_distributes_over_tensor() {
        let e = env();
        let b = B::pullback("phi", B::tensor(B::tangent("N"), B::cotangent("N")));
        let expected = B::tensor(B::pullback("phi", B::tangent("N")), B::pullback("phi", B::cotangent("N")));
        assert_eq!(normalize(&b, &e).unwrap(), expected);
    }

    #[test]
    fn contraction_typing() {
        let e = env();
        let hom = B::tensor(B::pullback("f", B::tangent("S")), B::cotangent("M"));
        assert_eq!(contract_type(&hom, &B::tangent("M"), 1, &e).unwrap(), B::pullback("f", B::tangent("S")));
        assert_eq!(contract_type(&B::cotangent("M"), &B::tangent("M"), 1, &e).unwrap(), B::line("M"));
    }

    #[test]
    fn composition_order_matters() {
        let e = env();
        // U = TM, V = phi*TN, W = f*TS, all over M
        let u = B::tangent("M");
        let v = B::pullback("phi", B::tangent("N"));
        let w = B::pullback("f", B::tangent("S"));
        let a = B::hom(u.clone(), v.clone());
        let b = B::hom(v, w.clone());
        let ba = contract_type(&b, &a, 1, &e).unwrap();
        assert_eq!(ba, normalize(&B::hom(u, w), &e).unwrap());
        let err = contract_type(&a, &b, 1, &e).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::SpaceMismatch);
    }

    #[test]
    fn metric_against_covector_is_valence_error() {
        let e = env();
        let g = B::tensor(B::cotangent("M"), B::cotangent("M"));
        let err = contract_type(&g, &B::cotangent("M"), 1, &e).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::ValenceError);
    }

    #[test]
    fn insufficient_factors_is_valence_error() {
        let e = env();
        let err = contract_type(&B::tangent("M"), &B::cotangent("M"), 2, &e).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::ValenceError);
    }

    #[test]
    fn full_tensor_contraction_keeps_product_base() {
        let e = env();
        let big_e = B::tensor_full(B::tangent("S"), B::cotangent("M"));
        let k = B::tensor(B::dual(big_e.clone()), B::dual(big_e.clone()));
        let ak = contract_type(&big_e, &k, 2, &e).unwrap();
        assert_eq!(ak, normalize(&B::dual(big_e.clone()), &e).unwrap());
        let scalar = contract_type(&ak, &big_e, 2, &e).unwrap();
        assert_eq!(scalar, B::Line(Base::product(&["S", "M"])));
    }

    #[test]
    fn render_levels() {
        let e = env();
        let t = B::tensor(B::pullback("phi", B::tangent("N")), B::cotangent("M"));
        assert_eq!(t.render(&e, Telescope::Mid), "phi*TN ⊗ T*M");
        assert_eq!(t.render(&e, Telescope::Low), "TN ⊗ T*M");
        assert_eq!(t.render(&e, Telescope::High), "phi*T(N:3) ⊗_M T*(M:2)");
    }
}
