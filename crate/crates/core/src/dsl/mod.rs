//! A small prefix-call language for bundle-typed tensor expressions:
//! parsing with source spans, static typing against declared manifolds,
//! maps and fields, and numeric evaluation.

pub mod ast;
pub mod eval;
pub mod parser;
pub mod typecheck;

pub use ast::{Expr, ExprKind, Form, Ident, Program, Span, TypeExpr, TypeExprKind};
pub use eval::EvalContext;
pub use parser::{parse, parse_program, parse_type, ParseError};
pub use typecheck::{check_source, CheckReport, Checker, Diagnostic, Symbol, TypeError, TypedExpr};
