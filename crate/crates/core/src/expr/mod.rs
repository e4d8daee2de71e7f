//! Closed-form expression language for scalar fields.
//!
//! The grammar covers real literals, coordinate identifiers, the constant
//! `pi`, unary minus, the binary operators `+ - * / ^` (with `^` binding
//! tightest and right-associative), and the functions
//! `sin cos tan exp log sqrt atan2`. Parsed trees are immutable; evaluation
//! is generic over a scalar type so the same tree evaluates to plain `f64`,
//! to first-order dual numbers (exact gradients), or to nested duals
//! (exact second derivatives for the Jacobi defect).

mod dual;
mod eval;
mod lexer;
mod parser;

pub use dual::{Dual, Scalar};
pub use eval::{eval, eval_gradient, eval_hessian, HessianOutput};

use std::fmt;

use serde::Serialize;

/// Byte range of a node in the original source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    fn merge(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

/// Binary operators, in increasing precedence order `+ -` < `* /` < `^`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Built-in functions. All take one argument except `atan2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Atan2,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan2 => "atan2",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "tan" => Some(Func::Tan),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            "atan2" => Some(Func::Atan2),
            _ => None,
        }
    }
}

/// Identifiers that may not be used as coordinate or parameter names.
pub const RESERVED_WORDS: &[&str] = &["pi", "sin", "cos", "tan", "exp", "log", "sqrt", "atan2"];

#[derive(Debug, Clone)]
pub enum ExprKind {
    Num(f64),
    Pi,
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// A parsed expression tree. Nodes carry byte spans of the source so that
/// evaluation-domain errors can point at the offending subexpression.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

/// Structural equality; spans are ignored so that a pretty-printed and
/// re-parsed tree compares equal to the original.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Num(a), ExprKind::Num(b)) => a == b,
            (ExprKind::Pi, ExprKind::Pi) => true,
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a == b,
            (ExprKind::Bin(op_a, la, ra), ExprKind::Bin(op_b, lb, rb)) => {
                op_a == op_b && la == lb && ra == rb
            }
            (ExprKind::Call(fa, args_a), ExprKind::Call(fb, args_b)) => {
                fa == fb && args_a == args_b
            }
            _ => false,
        }
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ExprError> {
        parser::parse(source)
    }

    /// Identifiers appearing in the tree, in first-occurrence order.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            ExprKind::Var(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            ExprKind::Neg(inner) => inner.collect_identifiers(out),
            ExprKind::Bin(_, lhs, rhs) => {
                lhs.collect_identifiers(out);
                rhs.collect_identifiers(out);
            }
            ExprKind::Call(_, args) => {
                for a in args {
                    a.collect_identifiers(out);
                }
            }
            ExprKind::Num(_) | ExprKind::Pi => {}
        }
    }

    /// True when the tree contains no identifiers.
    pub fn is_constant(&self) -> bool {
        self.identifiers().is_empty()
    }

    /// Resolve identifiers against an ordered name list.
    pub fn compile(&self, names: &[String]) -> Result<Compiled, ExprError> {
        let kind = match &self.kind {
            ExprKind::Num(x) => CompiledKind::Num(*x),
            ExprKind::Pi => CompiledKind::Num(std::f64::consts::PI),
            ExprKind::Var(name) => {
                let slot = names.iter().position(|n| n == name).ok_or_else(|| {
                    ExprError::UnknownIdentifier {
                        name: name.clone(),
                        offset: self.span.start,
                    }
                })?;
                CompiledKind::Var(slot)
            }
            ExprKind::Neg(inner) => CompiledKind::Neg(Box::new(inner.compile(names)?)),
            ExprKind::Bin(op, lhs, rhs) => CompiledKind::Bin(
                *op,
                Box::new(lhs.compile(names)?),
                Box::new(rhs.compile(names)?),
            ),
            ExprKind::Call(func, args) => {
                let compiled = args
                    .iter()
                    .map(|a| a.compile(names))
                    .collect::<Result<Vec<_>, _>>()?;
                CompiledKind::Call(*func, compiled)
            }
        };
        Ok(Compiled {
            kind,
            span: self.span,
        })
    }

    /// Minimal-parenthesis source form; re-parsing it reproduces the tree.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        self.write_pretty(&mut out, 0);
        out
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            ExprKind::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            ExprKind::Neg(_) => 3,
            ExprKind::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn write_pretty(&self, out: &mut String, min_prec: u8) {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            out.push('(');
        }
        match &self.kind {
            ExprKind::Num(x) => out.push_str(&format!("{:?}", x)),
            ExprKind::Pi => out.push_str("pi"),
            ExprKind::Var(name) => out.push_str(name),
            ExprKind::Neg(inner) => {
                out.push('-');
                inner.write_pretty(out, 3);
            }
            ExprKind::Bin(op, lhs, rhs) => {
                let (lp, rp) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    // Right-associative; the parser admits unary minus and
                    // nested powers on the right without parentheses.
                    BinOp::Pow => (5, 3),
                };
                lhs.write_pretty(out, lp);
                out.push_str(op.symbol());
                rhs.write_pretty(out, rp);
            }
            ExprKind::Call(func, args) => {
                out.push_str(func.name());
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    a.write_pretty(out, 0);
                }
                out.push(')');
            }
        }
        if parens {
            out.push(')');
        }
    }

    /// Builds the linear combination `sum_i coeffs[i] * terms[i]` as a
    /// parser-shaped tree (negative coefficients become unary minus).
    pub fn linear_combination(coeffs: &[f64], terms: &[Expr]) -> Expr {
        assert_eq!(coeffs.len(), terms.len());
        let span = Span::new(0, 0);
        let mut acc: Option<Expr> = None;
        for (&c, term) in coeffs.iter().zip(terms) {
            if c == 0.0 {
                continue;
            }
            let coeff = Expr {
                kind: ExprKind::Num(c.abs()),
                span,
            };
            let product = Expr {
                kind: ExprKind::Bin(BinOp::Mul, Box::new(coeff), Box::new(term.clone())),
                span,
            };
            acc = Some(match acc {
                None if c < 0.0 => Expr {
                    kind: ExprKind::Neg(Box::new(product)),
                    span,
                },
                None => product,
                Some(prev) => {
                    let op = if c < 0.0 { BinOp::Sub } else { BinOp::Add };
                    Expr {
                        kind: ExprKind::Bin(op, Box::new(prev), Box::new(product)),
                        span,
                    }
                }
            });
        }
        acc.unwrap_or(Expr {
            kind: ExprKind::Num(0.0),
            span,
        })
    }

    /// Builds `lhs + coeff * rhs` as a parser-shaped tree.
    pub fn plus_scaled(lhs: &Expr, coeff: f64, rhs: &Expr) -> Expr {
        let span = Span::new(0, 0);
        let scaled = Expr {
            kind: ExprKind::Bin(
                BinOp::Mul,
                Box::new(Expr {
                    kind: ExprKind::Num(coeff.abs()),
                    span,
                }),
                Box::new(rhs.clone()),
            ),
            span,
        };
        let op = if coeff < 0.0 { BinOp::Sub } else { BinOp::Add };
        Expr {
            kind: ExprKind::Bin(op, Box::new(lhs.clone()), Box::new(scaled)),
            span,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

/// An expression with identifiers resolved to environment slots.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub(crate) kind: CompiledKind,
    pub(crate) span: Span,
}

#[derive(Debug, Clone)]
pub(crate) enum CompiledKind {
    Num(f64),
    Var(usize),
    Neg(Box<Compiled>),
    Bin(BinOp, Box<Compiled>, Box<Compiled>),
    Call(Func, Vec<Compiled>),
}

/// Parse- and bind-time failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: found {found}, expected {}", expected.join(" or "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("`{name}` takes {expected} argument(s), found {found} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("numeric literal at byte {offset} does not fit in a double")]
    BadLiteral { offset: usize },
}

/// What went out of domain during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainFault {
    DivByZero,
    LogNonPositive,
    SqrtNegative,
    SqrtZeroDerivative,
    Atan2Origin,
    PowDomain,
}

impl DomainFault {
    fn describe(self) -> &'static str {
        match self {
            DomainFault::DivByZero => "division by zero",
            DomainFault::LogNonPositive => "log of a non-positive value",
            DomainFault::SqrtNegative => "sqrt of a negative value",
            DomainFault::SqrtZeroDerivative => "sqrt derivative at zero",
            DomainFault::Atan2Origin => "atan2 at the origin",
            DomainFault::PowDomain => "power with non-positive base and non-integer exponent",
        }
    }
}

/// Evaluation-domain failure, located by the span of the subexpression.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{} at bytes {}..{}", fault.describe(), span.start, span.end)]
pub struct EvalError {
    pub fault: DomainFault,
    pub span: Span,
}

impl EvalError {
    /// Reformats the error with the subexpression snippet from `source`.
    pub fn in_source(&self, source: &str) -> String {
        let snippet = source
            .get(self.span.start..self.span.end)
            .unwrap_or("<out of range>");
        format!("{} in `{}`", self.fault.describe(), snippet)
    }
}
