//! Tokenizer and recursive-descent parser.
//!
//! Every form is a prefix call `name(arg, ...)`. Arguments are parsed into
//! a generic term tree first and lowered by keyword afterwards, so that the
//! expected-token sets stay small and uniform. `#` starts a line comment.

use std::fmt;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(usize),
    LParen,
    RParen,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    /// Token descriptions that would have been accepted; empty for errors
    /// found after a form was read (bad arity, unknown keyword).
    pub expected: Vec<String>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ParseError {}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut it = src.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        let span_at = |end: usize| Span { start: i, end, line, col };
        if c == '\n' {
            it.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            it.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while let Some(&(_, c)) = it.peek() {
                if c == '\n' {
                    break;
                }
                it.next();
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            it.next();
            out.push(Token { tok, span: span_at(i + 1) });
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || c.is_alphabetic() || c == '_' {
            let start_col = col;
            let mut end = i;
            let mut text = String::new();
            while let Some(&(j, d)) = it.peek() {
                if d.is_alphanumeric() || d == '_' {
                    text.push(d);
                    end = j + d.len_utf8();
                    col += 1;
                    it.next();
                } else {
                    break;
                }
            }
            let span = Span { start: i, end, line, col: start_col };
            let tok = if c.is_ascii_digit() {
                match text.parse() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => {
                        return Err(ParseError {
                            span,
                            expected: vec!["integer".into()],
                            message: format!("malformed integer `{text}`"),
                        })
                    }
                }
            } else {
                Tok::Ident(text)
            };
            out.push(Token { tok, span });
            continue;
        }
        return Err(ParseError {
            span: span_at(i + c.len_utf8()),
            expected: vec!["identifier".into(), "integer".into(), "'('".into(), "')'".into(), "','".into()],
            message: format!("unexpected character `{c}`"),
        });
    }
    let end = src.len();
    out.push(Token { tok: Tok::Eof, span: Span { start: end, end, line, col } });
    Ok(out)
}

/// Generic call-syntax tree before keyword lowering.
#[derive(Debug, Clone)]
enum Term {
    Ident(Ident),
    Int(usize, Span),
    Call(Ident, Vec<Term>, Span),
    Cycles(Vec<Vec<usize>>, Span),
}

impl Term {
    fn span(&self) -> Span {
        match self {
            Term::Ident(i) => i.span,
            Term::Int(_, s) | Term::Call(_, _, s) | Term::Cycles(_, s) => *s,
        }
    }

    fn describe(&self) -> String {
        match self {
            Term::Ident(i) => format!("identifier `{}`", i.name),
            Term::Int(n, _) => format!("integer `{n}`"),
            Term::Call(f, _, _) => format!("call `{}(...)`", f.name),
            Term::Cycles(..) => "a permutation".to_string(),
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn quote(s: &[&str]) -> Vec<String> {
    s.iter().map(|t| t.to_string()).collect()
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError {
            span: t.span,
            expected: quote(expected),
            message: format!("expected {}, found {}", expected.join(" or "), t.tok),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(name) => {
                self.bump();
                let id = Ident { name, span: t.span };
                if self.peek().tok != Tok::LParen {
                    return Ok(Term::Ident(id));
                }
                self.bump();
                let mut args = Vec::new();
                if self.peek().tok == Tok::RParen {
                    let end = self.bump().span;
                    return Ok(Term::Call(id, args, t.span.to(end)));
                }
                loop {
                    args.push(self.term()?);
                    match self.peek().tok {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RParen => {
                            let end = self.bump().span;
                            return Ok(Term::Call(id, args, t.span.to(end)));
                        }
                        _ => return Err(self.error(&["','", "')'"])),
                    }
                }
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Term::Int(n, t.span))
            }
            Tok::LParen => self.cycles(),
            _ => Err(self.error(&["identifier", "integer", "'('"])),
        }
    }

    /// `(a b c)(d e)...` or `()`.
    fn cycles(&mut self) -> Result<Term, ParseError> {
        let start = self.peek().span;
        let mut end = start;
        let mut cycles = Vec::new();
        while self.peek().tok == Tok::LParen {
            self.bump();
            let mut cycle = Vec::new();
            loop {
                match self.peek().tok {
                    Tok::Int(k) => {
                        self.bump();
                        cycle.push(k);
                    }
                    Tok::RParen => {
                        end = self.bump().span;
                        break;
                    }
                    _ => return Err(self.error(&["integer", "')'"])),
                }
            }
            if !cycle.is_empty() {
                cycles.push(cycle);
            }
        }
        Ok(Term::Cycles(cycles, start.to(end)))
    }
}

fn malformed(span: Span, message: String) -> ParseError {
    ParseError { span, expected: Vec::new(), message }
}

fn arity(name: &Ident, args: &[Term], n: usize, span: Span) -> Result<(), ParseError> {
    if args.len() != n {
        return Err(malformed(
            span,
            format!("`{}` takes {n} argument{}, found {}", name.name, if n == 1 { "" } else { "s" }, args.len()),
        ));
    }
    Ok(())
}

fn ident(t: &Term, what: &str) -> Result<Ident, ParseError> {
    match t {
        Term::Ident(i) => Ok(i.clone()),
        other => Err(ParseError {
            span: other.span(),
            expected: vec![format!("{what} name")],
            message: format!("expected {what} name, found {}", other.describe()),
        }),
    }
}

fn integer(t: &Term) -> Result<usize, ParseError> {
    match t {
        Term::Int(n, _) => Ok(*n),
        other => Err(ParseError {
            span: other.span(),
            expected: vec!["integer".into()],
            message: format!("expected integer, found {}", other.describe()),
        }),
    }
}

const EXPR_KEYWORDS: &str = "pair, trace, permute, otimes, boxtimes, pullback, cov, dmap, dual";
const TYPE_KEYWORDS: &str = "tangent, cotangent, line, pullback, otimes, otimes_full, oplus, oplus_full, dual, hom";

fn lower_expr(t: &Term) -> Result<Expr, ParseError> {
    let (f, args, span) = match t {
        Term::Ident(i) => return Ok(Expr { kind: ExprKind::Var(i.name.clone()), span: i.span }),
        Term::Call(f, args, span) => (f, args, *span),
        other => {
            return Err(ParseError {
                span: other.span(),
                expected: vec!["expression".into()],
                message: format!("expected expression, found {}", other.describe()),
            })
        }
    };
    let sub = |k: usize| lower_expr(&args[k]).map(Box::new);
    let kind = match f.name.as_str() {
        "pair" => {
            arity(f, args, 3, span)?;
            ExprKind::Pair(sub(0)?, sub(1)?, integer(&args[2])?)
        }
        "trace" => {
            arity(f, args, 1, span)?;
            ExprKind::Trace(sub(0)?)
        }
        "permute" => {
            arity(f, args, 2, span)?;
            match &args[1] {
                Term::Cycles(c, _) => ExprKind::Permute(sub(0)?, c.clone()),
                other => {
                    return Err(ParseError {
                        span: other.span(),
                        expected: vec!["permutation".into()],
                        message: format!("expected a permutation in cycle notation, found {}", other.describe()),
                    })
                }
            }
        }
        "otimes" => {
            arity(f, args, 2, span)?;
            ExprKind::Otimes(sub(0)?, sub(1)?)
        }
        "boxtimes" => {
            arity(f, args, 2, span)?;
            ExprKind::Boxtimes(sub(0)?, sub(1)?)
        }
        "pullback" => {
            arity(f, args, 2, span)?;
            ExprKind::Pullback(ident(&args[0], "map")?, sub(1)?)
        }
        "cov" => {
            arity(f, args, 1, span)?;
            ExprKind::Cov(sub(0)?)
        }
        "dmap" => {
            arity(f, args, 1, span)?;
            ExprKind::Dmap(ident(&args[0], "map")?)
        }
        "dual" => {
            arity(f, args, 1, span)?;
            ExprKind::Dual(sub(0)?)
        }
        other => {
            return Err(malformed(f.span, format!("unknown operation `{other}` (expected one of {EXPR_KEYWORDS})")))
        }
    };
    Ok(Expr { kind, span })
}

fn lower_type(t: &Term) -> Result<TypeExpr, ParseError> {
    let (f, args, span) = match t {
        Term::Call(f, args, span) => (f, args, *span),
        other => {
            return Err(ParseError {
                span: other.span(),
                expected: vec!["bundle type".into()],
                message: format!("expected a bundle type, found {}", other.describe()),
            })
        }
    };
    let sub = |k: usize| lower_type(&args[k]).map(Box::new);
    let kind = match f.name.as_str() {
        "tangent" | "cotangent" | "line" => {
            arity(f, args, 1, span)?;
            let m = ident(&args[0], "manifold")?;
            match f.name.as_str() {
                "tangent" => TypeExprKind::Tangent(m),
                "cotangent" => TypeExprKind::Cotangent(m),
                _ => TypeExprKind::Line(m),
            }
        }
        "pullback" => {
            arity(f, args, 2, span)?;
            TypeExprKind::Pullback(ident(&args[0], "map")?, sub(1)?)
        }
        "otimes" | "otimes_full" | "oplus" | "oplus_full" | "hom" => {
            arity(f, args, 2, span)?;
            let (a, b) = (sub(0)?, sub(1)?);
            match f.name.as_str() {
                "otimes" => TypeExprKind::Otimes(a, b),
                "otimes_full" => TypeExprKind::OtimesFull(a, b),
                "oplus" => TypeExprKind::Oplus(a, b),
                "oplus_full" => TypeExprKind::OplusFull(a, b),
                _ => TypeExprKind::Hom(a, b),
            }
        }
        "dual" => {
            arity(f, args, 1, span)?;
            TypeExprKind::Dual(sub(0)?)
        }
        other => {
            return Err(malformed(f.span, format!("unknown bundle type `{other}` (expected one of {TYPE_KEYWORDS})")))
        }
    };
    Ok(TypeExpr { kind, span })
}

fn lower_form(t: &Term) -> Result<Form, ParseError> {
    if let Term::Call(f, args, span) = t {
        let span = *span;
        match f.name.as_str() {
            "manifold" => {
                arity(f, args, 2, span)?;
                return Ok(Form::Manifold { name: ident(&args[0], "manifold")?, dim: integer(&args[1])?, span });
            }
            "map" => {
                if args.len() != 3 && args.len() != 4 {
                    return Err(malformed(span, format!("`map` takes 3 or 4 arguments, found {}", args.len())));
                }
                let compose = match args.get(3) {
                    None => None,
                    Some(Term::Call(c, cargs, cspan)) if c.name == "compose" => {
                        arity(c, cargs, 2, *cspan)?;
                        Some((ident(&cargs[0], "map")?, ident(&cargs[1], "map")?))
                    }
                    Some(other) => {
                        return Err(ParseError {
                            span: other.span(),
                            expected: vec!["compose(...)".into()],
                            message: format!("expected `compose(outer, inner)`, found {}", other.describe()),
                        })
                    }
                };
                return Ok(Form::Map {
                    name: ident(&args[0], "map")?,
                    domain: ident(&args[1], "manifold")?,
                    codomain: ident(&args[2], "manifold")?,
                    compose,
                    span,
                });
            }
            "metric" => {
                arity(f, args, 2, span)?;
                return Ok(Form::Metric {
                    name: ident(&args[0], "metric")?,
                    manifold: ident(&args[1], "manifold")?,
                    span,
                });
            }
            "field" => {
                arity(f, args, 2, span)?;
                return Ok(Form::Field { name: ident(&args[0], "field")?, ty: lower_type(&args[1])?, span });
            }
            _ => {}
        }
    }
    lower_expr(t).map(Form::Expr)
}

/// Parses a single expression; trailing input is an error.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let t = p.term()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    lower_expr(&t)
}

/// Parses a single bundle type.
pub fn parse_type(src: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let t = p.term()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    lower_type(&t)
}

/// Parses a whole file, recovering at the next line after each error so
/// that later forms are still checked.
pub fn parse_program(src: &str) -> (Program, Vec<ParseError>) {
    let toks = match tokenize(src) {
        Ok(t) => t,
        Err(e) => return (Program::default(), vec![e]),
    };
    let mut p = Parser { toks, pos: 0 };
    let mut prog = Program::default();
    let mut errors = Vec::new();
    while p.peek().tok != Tok::Eof {
        let start = p.pos;
        match p.term().and_then(|t| lower_form(&t)) {
            Ok(f) => prog.forms.push(f),
            Err(e) => {
                let line = e.span.line;
                // a form left open at the end of a line resumes at the
                // token that opens the next one
                let opens_line = p.pos > start && p.toks[p.pos - 1].span.line < line;
                errors.push(e);
                if opens_line {
                    continue;
                }
                if p.pos == start {
                    p.bump();
                }
                while p.peek().tok != Tok::Eof && p.peek().span.line <= line {
                    p.bump();
                }
            }
        }
    }
    (prog, errors)
}
