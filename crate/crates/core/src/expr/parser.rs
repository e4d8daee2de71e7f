//! Precedence-climbing parser.
//!
//! Precedence: `^` (right-associative) over unary `-` over `* /` over
//! `+ -`, the last two left-associative. `-x^2` parses as `-(x^2)` and
//! `2^3^2` as `2^(3^2)`.

use super::lexer::{tokenize, Lexed, Tok};
use super::{BinOp, Expr, ExprError, ExprKind, Func, Span};

pub(crate) fn parse(source: &str) -> Result<Expr, ExprError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.parse_binary(1)?;
    parser.expect_end()?;
    Ok(expr)
}

struct Parser {
    tokens: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Lexed {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Lexed {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &[&str]) -> ExprError {
        let here = self.peek();
        ExprError::Syntax {
            offset: here.start,
            found: here.tok.describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect_end(&self) -> Result<(), ExprError> {
        if matches!(self.peek().tok, Tok::End) {
            Ok(())
        } else {
            Err(self.error_here(&["an operator", "end of input"]))
        }
    }

    fn parse_binary(&mut self, min_prec: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            let prec = match op {
                BinOp::Add | BinOp::Sub => 1,
                _ => 2,
            };
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.parse_binary(prec + 1)?;
            let span = lhs.span.merge(rhs.span);
            lhs = Expr {
                kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<Expr, ExprError> {
        if matches!(self.peek().tok, Tok::Minus) {
            let minus = self.advance();
            let inner = self.parse_prefix()?;
            let span = Span::new(minus.start, inner.span.end);
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ExprError> {
        let base = self.parse_atom()?;
        if matches!(self.peek().tok, Tok::Caret) {
            self.advance();
            // Exponent at prefix level: right associativity, and `2^-3`
            // needs no parentheses.
            let exponent = self.parse_prefix()?;
            let span = base.span.merge(exponent.span);
            return Ok(Expr {
                kind: ExprKind::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)),
                span,
            });
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ExprError> {
        let here = self.peek().clone();
        match here.tok {
            Tok::Num(value) => {
                self.advance();
                Ok(Expr {
                    kind: ExprKind::Num(value),
                    span: Span::new(here.start, here.end),
                })
            }
            Tok::Ident(ref name) => {
                self.advance();
                if matches!(self.peek().tok, Tok::LParen) {
                    let func = Func::from_name(name).ok_or_else(|| ExprError::UnknownFunction {
                        name: name.clone(),
                        offset: here.start,
                    })?;
                    self.advance();
                    let mut args = vec![self.parse_binary(1)?];
                    while matches!(self.peek().tok, Tok::Comma) {
                        self.advance();
                        args.push(self.parse_binary(1)?);
                    }
                    let close = self.peek().clone();
                    if !matches!(close.tok, Tok::RParen) {
                        return Err(self.error_here(&["`,`", "`)`"]));
                    }
                    self.advance();
                    if args.len() != func.arity() {
                        return Err(ExprError::Arity {
                            name: func.name().into(),
                            expected: func.arity(),
                            found: args.len(),
                            offset: here.start,
                        });
                    }
                    Ok(Expr {
                        kind: ExprKind::Call(func, args),
                        span: Span::new(here.start, close.end),
                    })
                } else if name == "pi" {
                    Ok(Expr {
                        kind: ExprKind::Pi,
                        span: Span::new(here.start, here.end),
                    })
                } else if Func::from_name(name).is_some() {
                    Err(ExprError::Syntax {
                        offset: here.start,
                        found: format!("function `{}` without arguments", name),
                        expected: vec!["`(`".into()],
                    })
                } else {
                    Ok(Expr {
                        kind: ExprKind::Var(name.clone()),
                        span: Span::new(here.start, here.end),
                    })
                }
            }
            Tok::LParen => {
                self.advance();
                let inner = self.parse_binary(1)?;
                if !matches!(self.peek().tok, Tok::RParen) {
                    return Err(self.error_here(&["an operator", "`)`"]));
                }
                let close = self.advance();
                Ok(Expr {
                    kind: inner.kind,
                    span: Span::new(here.start, close.end),
                })
            }
            _ => Err(self.error_here(&["a number", "an identifier", "`(`", "`-`"])),
        }
    }
}
