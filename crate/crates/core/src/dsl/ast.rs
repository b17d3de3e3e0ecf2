//! Syntax trees of the expression language and their canonical rendering.

use std::fmt;

/// Byte range plus the 1-based line and column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

impl Span {
    /// Smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        if other.end <= self.start {
            return Span { start: other.start, end: self.end, line: other.line, col: other.col };
        }
        Span { end: other.end.max(self.end), ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExprKind {
    Tangent(Ident),
    Cotangent(Ident),
    Line(Ident),
    Pullback(Ident, Box<TypeExpr>),
    Otimes(Box<TypeExpr>, Box<TypeExpr>),
    OtimesFull(Box<TypeExpr>, Box<TypeExpr>),
    Oplus(Box<TypeExpr>, Box<TypeExpr>),
    OplusFull(Box<TypeExpr>, Box<TypeExpr>),
    Dual(Box<TypeExpr>),
    /// `hom(from, to)`.
    Hom(Box<TypeExpr>, Box<TypeExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeExpr {
    pub kind: TypeExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    /// `pair(a, b, n)`: the n-fold contraction.
    Pair(Box<Expr>, Box<Expr>, usize),
    Trace(Box<Expr>),
    /// One-based disjoint cycles; empty for the identity.
    Permute(Box<Expr>, Vec<Vec<usize>>),
    Otimes(Box<Expr>, Box<Expr>),
    Boxtimes(Box<Expr>, Box<Expr>),
    Pullback(Ident, Box<Expr>),
    Cov(Box<Expr>),
    Dmap(Ident),
    Dual(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Form {
    Manifold {
        name: Ident,
        dim: usize,
        span: Span,
    },
    /// `map(f, M, N)` or `map(h, M, N, compose(outer, inner))`.
    Map {
        name: Ident,
        domain: Ident,
        codomain: Ident,
        compose: Option<(Ident, Ident)>,
        span: Span,
    },
    Metric {
        name: Ident,
        manifold: Ident,
        span: Span,
    },
    Field {
        name: Ident,
        ty: TypeExpr,
        span: Span,
    },
    Expr(Expr),
}

impl Form {
    pub fn span(&self) -> Span {
        match self {
            Form::Manifold { span, .. }
            | Form::Map { span, .. }
            | Form::Metric { span, .. }
            | Form::Field { span, .. } => *span,
            Form::Expr(e) => e.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub forms: Vec<Form>,
}

fn erase(s: &mut Span) {
    *s = Span::default();
}

impl Ident {
    fn erase_spans(&mut self) {
        erase(&mut self.span);
    }
}

impl TypeExpr {
    pub fn erase_spans(&mut self) {
        erase(&mut self.span);
        match &mut self.kind {
            TypeExprKind::Tangent(i) | TypeExprKind::Cotangent(i) | TypeExprKind::Line(i) => i.erase_spans(),
            TypeExprKind::Pullback(i, t) => {
                i.erase_spans();
                t.erase_spans();
            }
            TypeExprKind::Otimes(a, b)
            | TypeExprKind::OtimesFull(a, b)
            | TypeExprKind::Oplus(a, b)
            | TypeExprKind::OplusFull(a, b)
            | TypeExprKind::Hom(a, b) => {
                a.erase_spans();
                b.erase_spans();
            }
            TypeExprKind::Dual(a) => a.erase_spans(),
        }
    }
}

impl Expr {
    pub fn erase_spans(&mut self) {
        erase(&mut self.span);
        match &mut self.kind {
            ExprKind::Var(_) => {}
            ExprKind::Pair(a, b, _) | ExprKind::Otimes(a, b) | ExprKind::Boxtimes(a, b) => {
                a.erase_spans();
                b.erase_spans();
            }
            ExprKind::Trace(a) | ExprKind::Permute(a, _) | ExprKind::Cov(a) | ExprKind::Dual(a) => a.erase_spans(),
            ExprKind::Pullback(i, a) => {
                i.erase_spans();
                a.erase_spans();
            }
            ExprKind::Dmap(i) => i.erase_spans(),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + match &self.kind {
            ExprKind::Var(_) | ExprKind::Dmap(_) => 0,
            ExprKind::Pair(a, b, _) | ExprKind::Otimes(a, b) | ExprKind::Boxtimes(a, b) => a.size() + b.size(),
            ExprKind::Trace(a)
            | ExprKind::Permute(a, _)
            | ExprKind::Cov(a)
            | ExprKind::Dual(a)
            | ExprKind::Pullback(_, a) => a.size(),
        }
    }
}

impl Form {
    pub fn erase_spans(&mut self) {
        match self {
            Form::Manifold { name, span, .. } => {
                name.erase_spans();
                erase(span);
            }
            Form::Map { name, domain, codomain, compose, span } => {
                for i in [name, domain, codomain] {
                    i.erase_spans();
                }
                if let Some((a, b)) = compose {
                    a.erase_spans();
                    b.erase_spans();
                }
                erase(span);
            }
            Form::Metric { name, manifold, span } => {
                name.erase_spans();
                manifold.erase_spans();
                erase(span);
            }
            Form::Field { name, ty, span } => {
                name.erase_spans();
                ty.erase_spans();
                erase(span);
            }
            Form::Expr(e) => e.erase_spans(),
        }
    }
}

impl Program {
    pub fn erase_spans(&mut self) {
        self.forms.iter_mut().for_each(Form::erase_spans);
    }
}

/// Cycle notation, `()` for the identity.
pub fn render_cycles(cycles: &[Vec<usize>]) -> String {
    if cycles.is_empty() {
        return "()".to_string();
    }
    cycles.iter().map(|c| format!("({})", c.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" "))).collect()
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TypeExprKind::Tangent(m) => write!(f, "tangent({})", m.name),
            TypeExprKind::Cotangent(m) => write!(f, "cotangent({})", m.name),
            TypeExprKind::Line(m) => write!(f, "line({})", m.name),
            TypeExprKind::Pullback(g, t) => write!(f, "pullback({}, {t})", g.name),
            TypeExprKind::Otimes(a, b) => write!(f, "otimes({a}, {b})"),
            TypeExprKind::OtimesFull(a, b) => write!(f, "otimes_full({a}, {b})"),
            TypeExprKind::Oplus(a, b) => write!(f, "oplus({a}, {b})"),
            TypeExprKind::OplusFull(a, b) => write!(f, "oplus_full({a}, {b})"),
            TypeExprKind::Dual(a) => write!(f, "dual({a})"),
            TypeExprKind::Hom(a, b) => write!(f, "hom({a}, {b})"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Var(v) => f.write_str(v),
            ExprKind::Pair(a, b, n) => write!(f, "pair({a}, {b}, {n})"),
            ExprKind::Trace(a) => write!(f, "trace({a})"),
            ExprKind::Permute(a, c) => write!(f, "permute({a}, {})", render_cycles(c)),
            ExprKind::Otimes(a, b) => write!(f, "otimes({a}, {b})"),
            ExprKind::Boxtimes(a, b) => write!(f, "boxtimes({a}, {b})"),
            ExprKind::Pullback(g, a) => write!(f, "pullback({}, {a})", g.name),
            ExprKind::Cov(a) => write!(f, "cov({a})"),
            ExprKind::Dmap(g) => write!(f, "dmap({})", g.name),
            ExprKind::Dual(a) => write!(f, "dual({a})"),
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Form::Manifold { name, dim, .. } => write!(f, "manifold({}, {dim})", name.name),
            Form::Map { name, domain, codomain, compose, .. } => {
                write!(f, "map({}, {}, {}", name.name, domain.name, codomain.name)?;
                if let Some((a, b)) = compose {
                    write!(f, ", compose({}, {})", a.name, b.name)?;
                }
                f.write_str(")")
            }
            Form::Metric { name, manifold, .. } => write!(f, "metric({}, {})", name.name, manifold.name),
            Form::Field { name, ty, .. } => write!(f, "field({}, {ty})", name.name),
            Form::Expr(e) => write!(f, "{e}"),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for form in &self.forms {
            writeln!(f, "{form}")?;
        }
        Ok(())
    }
}
