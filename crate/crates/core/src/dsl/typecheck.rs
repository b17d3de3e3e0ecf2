//! Static typing of expressions against declared manifolds, maps and fields.

use std::collections::BTreeMap;
use std::fmt;

use crate::bundle::{
    contract_type, factors_pair, from_factors, normalize, BundleError, BundleType, Environment, Telescope,
    TypeErrorKind,
};
use crate::tensor::Permutation;

use super::ast::*;
use super::parser::{parse_program, ParseError};

/// A typing failure located in the source.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
    pub message: String,
    pub expected: Option<BundleType>,
    pub found: Option<BundleType>,
}

impl TypeError {
    fn new(kind: TypeErrorKind, span: Span, message: impl Into<String>) -> Self {
        TypeError { kind, span, message: message.into(), expected: None, found: None }
    }

    fn from_bundle(e: BundleError, span: Span) -> Self {
        TypeError { kind: e.kind, span, message: e.message, expected: e.expected, found: e.found }
    }

    /// Message with expected/found types rendered at the given verbosity.
    pub fn render(&self, env: &Environment, level: Telescope) -> String {
        match (&self.expected, &self.found) {
            (Some(e), Some(f)) => {
                format!("{} (expected {}, found {})", self.message, e.render(env, level), f.render(env, level))
            }
            _ => self.message.clone(),
        }
    }
}

/// A symbol usable in expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum Symbol {
    Field(BundleType),
    /// The metric of a manifold.
    Metric(String),
}

/// Expression annotated with the normalized type of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedExpr {
    pub expr: Expr,
    pub ty: BundleType,
    pub children: Vec<TypedExpr>,
}

/// Declarations in scope.
#[derive(Debug, Clone, Default)]
pub struct Checker {
    pub env: Environment,
    pub symbols: BTreeMap<String, Symbol>,
}

impl Checker {
    pub fn new() -> Self {
        Self::default()
    }

    fn taken(&self, name: &str) -> bool {
        self.symbols.contains_key(name) || self.env.manifold(name).is_ok() || self.env.map(name).is_ok()
    }

    fn fresh(&self, id: &Ident) -> Result<(), TypeError> {
        if self.taken(&id.name) {
            return Err(TypeError::new(
                TypeErrorKind::Malformed,
                id.span,
                format!("`{}` is already declared", id.name),
            ));
        }
        Ok(())
    }

    /// Resolves a type expression to its normal form.
    pub fn resolve_type(&self, t: &TypeExpr) -> Result<BundleType, TypeError> {
        let raw = self.raw_type(t)?;
        normalize(&raw, &self.env).map_err(|e| TypeError::from_bundle(e, t.span))
    }

    fn raw_type(&self, t: &TypeExpr) -> Result<BundleType, TypeError> {
        let manifold =
            |m: &Ident| self.env.manifold(&m.name).map(|_| ()).map_err(|e| TypeError::from_bundle(e, m.span));
        Ok(match &t.kind {
            TypeExprKind::Tangent(m) => {
                manifold(m)?;
                BundleType::tangent(&m.name)
            }
            TypeExprKind::Cotangent(m) => {
                manifold(m)?;
                BundleType::cotangent(&m.name)
            }
            TypeExprKind::Line(m) => {
                manifold(m)?;
                BundleType::line(&m.name)
            }
            TypeExprKind::Pullback(f, inner) => {
                self.env.map(&f.name).map_err(|e| TypeError::from_bundle(e, f.span))?;
                let i = self.raw_type(inner)?;
                let ty = BundleType::pullback(&f.name, i);
                ty.base_space(&self.env).map_err(|e| TypeError::from_bundle(e, t.span))?;
                ty
            }
            TypeExprKind::Otimes(a, b) => self.shared(t, BundleType::tensor(self.raw_type(a)?, self.raw_type(b)?))?,
            TypeExprKind::Oplus(a, b) => self.shared(t, BundleType::sum(self.raw_type(a)?, self.raw_type(b)?))?,
            TypeExprKind::OtimesFull(a, b) => BundleType::tensor_full(self.raw_type(a)?, self.raw_type(b)?),
            TypeExprKind::OplusFull(a, b) => BundleType::sum_full(self.raw_type(a)?, self.raw_type(b)?),
            TypeExprKind::Dual(a) => BundleType::dual(self.raw_type(a)?),
            TypeExprKind::Hom(a, b) => self.shared(t, BundleType::hom(self.raw_type(a)?, self.raw_type(b)?))?,
        })
    }

    fn shared(&self, t: &TypeExpr, ty: BundleType) -> Result<BundleType, TypeError> {
        ty.base_space(&self.env).map_err(|e| TypeError::from_bundle(e, t.span))?;
        Ok(ty)
    }

    /// Applies a declaration; expressions are checked and returned.
    pub fn form(&mut self, f: &Form) -> Result<Option<TypedExpr>, TypeError> {
        match f {
            Form::Manifold { name, dim, span } => {
                self.fresh(name)?;
                self.env.declare_manifold(&name.name, *dim).map_err(|e| TypeError::from_bundle(e, *span))?;
            }
            Form::Map { name, domain, codomain, compose, span } => {
                for m in [domain, codomain] {
                    self.env.manifold(&m.name).map_err(|e| TypeError::from_bundle(e, m.span))?;
                }
                self.fresh(name)?;
                match compose {
                    None => self
                        .env
                        .declare_map(&name.name, &domain.name, &codomain.name)
                        .map_err(|e| TypeError::from_bundle(e, *span))?,
                    Some((outer, inner)) => {
                        for g in [outer, inner] {
                            self.env.map(&g.name).map_err(|e| TypeError::from_bundle(e, g.span))?;
                        }
                        let (o, i) = (self.env.map(&outer.name).unwrap(), self.env.map(&inner.name).unwrap());
                        if i.domain != domain.name || o.codomain != codomain.name {
                            return Err(TypeError::new(
                                TypeErrorKind::BaseMismatch,
                                *span,
                                format!(
                                    "`{}∘{}` runs {} → {}, not {} → {}",
                                    outer.name, inner.name, i.domain, o.codomain, domain.name, codomain.name
                                ),
                            ));
                        }
                        self.env
                            .declare_composition(&name.name, &outer.name, &inner.name)
                            .map_err(|e| TypeError::from_bundle(e, *span))?;
                    }
                }
            }
            Form::Metric { name, manifold, .. } => {
                self.env.manifold(&manifold.name).map_err(|e| TypeError::from_bundle(e, manifold.span))?;
                self.fresh(name)?;
                self.symbols.insert(name.name.clone(), Symbol::Metric(manifold.name.clone()));
            }
            Form::Field { name, ty, .. } => {
                let t = self.resolve_type(ty)?;
                self.fresh(name)?;
                self.symbols.insert(name.name.clone(), Symbol::Field(t));
            }
            Form::Expr(e) => return self.check(e).map(Some),
        }
        Ok(None)
    }

    /// Type of a symbol, including the implicit identities `id_M`.
    pub fn symbol_type(&self, name: &str) -> Option<BundleType> {
        match self.symbols.get(name) {
            Some(Symbol::Field(t)) => Some(t.clone()),
            Some(Symbol::Metric(m)) => Some(BundleType::tensor(BundleType::cotangent(m), BundleType::cotangent(m))),
            None => {
                self.env.identity_of(name).map(|m| BundleType::tensor(BundleType::tangent(m), BundleType::cotangent(m)))
            }
        }
    }

    pub fn check(&self, e: &Expr) -> Result<TypedExpr, TypeError> {
        let env = &self.env;
        let span = e.span;
        fn lift<X>(r: Result<X, BundleError>, span: Span) -> Result<X, TypeError> {
            r.map_err(|err| TypeError::from_bundle(err, span))
        }
        let bundle = |r| lift(r, span);
        let base_of = |t: &BundleType| lift(t.base_space(env), span);
        let (ty, children) = match &e.kind {
            ExprKind::Var(name) => {
                let ty = self.symbol_type(name).ok_or_else(|| {
                    TypeError::new(TypeErrorKind::UnknownSymbol, e.span, format!("unknown symbol `{name}`"))
                })?;
                (ty, Vec::new())
            }
            ExprKind::Pair(a, b, n) => {
                let (ta, tb) = (self.check(a)?, self.check(b)?);
                let ty = bundle(contract_type(&ta.ty, &tb.ty, *n, env))?;
                (ty, vec![ta, tb])
            }
            ExprKind::Trace(a) => {
                let ta = self.check(a)?;
                let fs = ta.ty.factors();
                if fs.len() != 2 {
                    return Err(TypeError::new(
                        TypeErrorKind::ValenceError,
                        e.span,
                        format!("trace needs exactly two factors, found {}", fs.len()),
                    ));
                }
                if !factors_pair(&fs[0], &fs[1]) {
                    let kind = if fs[0] == fs[1] { TypeErrorKind::ValenceError } else { TypeErrorKind::SpaceMismatch };
                    let mut err = TypeError::new(kind, e.span, "trace of factors that do not pair");
                    err.expected = Some(normalize(&BundleType::dual(fs[0].clone()), env).unwrap_or(fs[0].clone()));
                    err.found = Some(fs[1].clone());
                    return Err(err);
                }
                let base = base_of(&ta.ty)?;
                (BundleType::Line(base), vec![ta])
            }
            ExprKind::Permute(a, cycles) => {
                let ta = self.check(a)?;
                let fs = ta.ty.factors();
                let degree = cycles.iter().flatten().copied().max().unwrap_or(0);
                if degree > fs.len() {
                    return Err(TypeError::new(
                        TypeErrorKind::ValenceError,
                        e.span,
                        format!("permutation moves factor {degree} of a {}-factor type", fs.len()),
                    ));
                }
                let sigma = Permutation::from_cycles(fs.len(), cycles)
                    .map_err(|err| TypeError::new(TypeErrorKind::Malformed, e.span, err.to_string()))?;
                let mut out = fs.clone();
                for (i, f) in fs.into_iter().enumerate() {
                    out[sigma.image(i)] = f;
                }
                let base = base_of(&ta.ty)?;
                (from_factors(&out, &base, env), vec![ta])
            }
            ExprKind::Otimes(a, b) => {
                let (ta, tb) = (self.check(a)?, self.check(b)?);
                let ty = bundle(normalize(&BundleType::tensor_full(ta.ty.clone(), tb.ty.clone()), env))?;
                (ty, vec![ta, tb])
            }
            ExprKind::Boxtimes(a, b) => {
                let (ta, tb) = (self.check(a)?, self.check(b)?);
                let (fa, fb) = (ta.ty.factors(), tb.ty.factors());
                if fa.len() % 2 != 0 || fb.len() % 2 != 0 {
                    return Err(TypeError::new(
                        TypeErrorKind::ValenceError,
                        e.span,
                        format!("parallel product needs even valence, found {} and {}", fa.len(), fb.len()),
                    ));
                }
                let (ba, bb) = (base_of(&ta.ty)?, base_of(&tb.ty)?);
                if ba != bb {
                    return Err(TypeError::new(
                        TypeErrorKind::BaseMismatch,
                        e.span,
                        format!("parallel product of sections over {ba} and {bb}"),
                    ));
                }
                let (ha, hb) = (fa.len() / 2, fb.len() / 2);
                let out: Vec<BundleType> =
                    [&fa[..ha], &fb[..hb], &fa[ha..], &fb[hb..]].iter().flat_map(|s| s.iter().cloned()).collect();
                (from_factors(&out, &ba, env), vec![ta, tb])
            }
            ExprKind::Pullback(f, a) => {
                let ta = self.check(a)?;
                env.map(&f.name).map_err(|err| TypeError::from_bundle(err, f.span))?;
                let ty = bundle(normalize(&BundleType::pullback(&f.name, ta.ty.clone()), env))?;
                (ty, vec![ta])
            }
            ExprKind::Cov(a) => {
                let ta = self.check(a)?;
                let base = base_of(&ta.ty)?;
                let m = base.as_single().ok_or_else(|| {
                    TypeError::new(
                        TypeErrorKind::BaseMismatch,
                        e.span,
                        format!("covariant derivative of a section over the product {base}"),
                    )
                })?;
                let ty = bundle(normalize(&BundleType::tensor(ta.ty.clone(), BundleType::cotangent(m)), env))?;
                (ty, vec![ta])
            }
            ExprKind::Dmap(f) => {
                let m = env.map(&f.name).map_err(|err| TypeError::from_bundle(err, f.span))?;
                let ty = BundleType::tensor(
                    BundleType::pullback(&f.name, BundleType::tangent(&m.codomain)),
                    BundleType::cotangent(&m.domain),
                );
                (bundle(normalize(&ty, env))?, Vec::new())
            }
            ExprKind::Dual(a) => {
                let ta = self.check(a)?;
                let fs = ta.ty.factors();
                if fs.len() != 2 {
                    return Err(TypeError::new(
                        TypeErrorKind::ValenceError,
                        e.span,
                        format!("adjoint needs exactly two factors, found {}", fs.len()),
                    ));
                }
                let base = base_of(&ta.ty)?;
                (from_factors(&[fs[1].clone(), fs[0].clone()], &base, env), vec![ta])
            }
        };
        Ok(TypedExpr { expr: e.clone(), ty, children })
    }
}

/// A located problem in a source file.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub span: Span,
    pub kind: String,
    pub message: String,
}

impl Diagnostic {
    pub fn from_parse(e: &ParseError) -> Self {
        Diagnostic { span: e.span, kind: "ParseError".into(), message: e.message.clone() }
    }

    pub fn from_type(e: &TypeError, env: &Environment, level: Telescope) -> Self {
        Diagnostic { span: e.span, kind: e.kind.to_string(), message: e.render(env, level) }
    }

    /// `file:line:col: kind: message`.
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: {}: {}", self.span.line, self.span.col, self.kind, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.span.line, self.span.col, self.kind, self.message)
    }
}

/// Outcome of checking a whole file.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub program: Program,
    pub checker: Checker,
    /// Successfully typed top-level expressions.
    pub typed: Vec<TypedExpr>,
    pub diagnostics: Vec<Diagnostic>,
    /// Typing failures with their structured data.
    pub type_errors: Vec<TypeError>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Parses and checks a file, continuing past errors.
pub fn check_source(src: &str, level: Telescope) -> CheckReport {
    let (program, parse_errors) = parse_program(src);
    let mut diagnostics: Vec<Diagnostic> = parse_errors.iter().map(Diagnostic::from_parse).collect();
    let mut checker = Checker::new();
    let mut typed = Vec::new();
    let mut type_errors = Vec::new();
    for form in &program.forms {
        match checker.form(form) {
            Ok(Some(t)) => typed.push(t),
            Ok(None) => {}
            Err(e) => {
                diagnostics.push(Diagnostic::from_type(&e, &checker.env, level));
                type_errors.push(e);
            }
        }
    }
    diagnostics.sort_by_key(|d| (d.span.line, d.span.col));
    CheckReport { program, checker, typed, diagnostics, type_errors }
}
