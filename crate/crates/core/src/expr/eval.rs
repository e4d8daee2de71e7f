//! Generic evaluation of compiled expressions.

use super::dual::{Dual, Scalar};
use super::{BinOp, Compiled, CompiledKind, DomainFault, EvalError, Func};

/// Evaluates `expr` over any scalar type. `env` supplies one scalar per
/// resolved identifier slot.
pub fn eval<S: Scalar>(expr: &Compiled, env: &[S]) -> Result<S, EvalError> {
    match &expr.kind {
        CompiledKind::Num(x) => Ok(S::from_f64(*x)),
        CompiledKind::Var(slot) => Ok(env[*slot].clone()),
        CompiledKind::Neg(inner) => Ok(eval(inner, env)?.neg()),
        CompiledKind::Bin(op, lhs, rhs) => {
            let a = eval(lhs, env)?;
            match op {
                BinOp::Add => Ok(a.add(&eval(rhs, env)?)),
                BinOp::Sub => Ok(a.sub(&eval(rhs, env)?)),
                BinOp::Mul => Ok(a.mul(&eval(rhs, env)?)),
                BinOp::Div => {
                    let b = eval(rhs, env)?;
                    if b.primal() == 0.0 {
                        return Err(EvalError {
                            fault: DomainFault::DivByZero,
                            span: expr.span,
                        });
                    }
                    Ok(a.div(&b))
                }
                BinOp::Pow => {
                    let b = eval(rhs, env)?;
                    pow(expr, a, b)
                }
            }
        }
        CompiledKind::Call(func, args) => {
            let a = eval(&args[0], env)?;
            match func {
                Func::Sin => Ok(a.sin()),
                Func::Cos => Ok(a.cos()),
                Func::Tan => Ok(a.tan()),
                Func::Exp => Ok(a.exp()),
                Func::Log => {
                    if a.primal() <= 0.0 {
                        return Err(EvalError {
                            fault: DomainFault::LogNonPositive,
                            span: expr.span,
                        });
                    }
                    Ok(a.ln())
                }
                Func::Sqrt => {
                    if a.primal() < 0.0 {
                        return Err(EvalError {
                            fault: DomainFault::SqrtNegative,
                            span: expr.span,
                        });
                    }
                    if a.primal() == 0.0 && !a.is_constant() {
                        return Err(EvalError {
                            fault: DomainFault::SqrtZeroDerivative,
                            span: expr.span,
                        });
                    }
                    Ok(a.sqrt())
                }
                Func::Atan2 => {
                    let x = eval(&args[1], env)?;
                    if a.primal() == 0.0 && x.primal() == 0.0 {
                        return Err(EvalError {
                            fault: DomainFault::Atan2Origin,
                            span: expr.span,
                        });
                    }
                    Ok(a.atan2(&x))
                }
            }
        }
    }
}

/// `a^b`. Constant integer exponents use exact binary exponentiation, which
/// keeps negative bases and their derivatives well-defined; everything else
/// goes through `exp(b ln a)` and needs a positive base.
fn pow<S: Scalar>(expr: &Compiled, a: S, b: S) -> Result<S, EvalError> {
    let bp = b.primal();
    if b.is_constant() && bp.fract() == 0.0 && bp.abs() <= 2_147_483_647.0 {
        let n = bp as i64;
        if n < 0 && a.primal() == 0.0 {
            return Err(EvalError {
                fault: DomainFault::DivByZero,
                span: expr.span,
            });
        }
        return Ok(powi(&a, n));
    }
    if a.primal() <= 0.0 {
        return Err(EvalError {
            fault: DomainFault::PowDomain,
            span: expr.span,
        });
    }
    Ok(b.mul(&a.ln()).exp())
}

fn powi<S: Scalar>(base: &S, n: i64) -> S {
    if n == 0 {
        return S::from_f64(1.0);
    }
    let mut result = S::from_f64(1.0);
    let mut factor = base.clone();
    let mut k = n.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            result = result.mul(&factor);
        }
        k >>= 1;
        if k > 0 {
            factor = factor.mul(&factor);
        }
    }
    if n < 0 {
        S::from_f64(1.0).div(&result)
    } else {
        result
    }
}

/// Value and exact first-order gradient at `coords`.
pub fn eval_gradient(expr: &Compiled, coords: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
    let width = coords.len();
    let env: Vec<Dual<f64>> = coords
        .iter()
        .enumerate()
        .map(|(i, &x)| Dual::variable(x, i, width))
        .collect();
    let out = eval(expr, &env)?;
    let mut grad = vec![0.0; width];
    for (i, p) in out.partials.iter().enumerate() {
        grad[i] = *p;
    }
    Ok((out.value, grad))
}

/// Value, gradient, and Hessian rows.
pub type HessianOutput = (f64, Vec<f64>, Vec<Vec<f64>>);

/// Value, gradient, and exact Hessian at `coords`, from one nested-dual pass.
pub fn eval_hessian(expr: &Compiled, coords: &[f64]) -> Result<HessianOutput, EvalError> {
    let width = coords.len();
    let env: Vec<Dual<Dual<f64>>> = coords
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let value = Dual::variable(x, i, width);
            let mut partials = vec![Dual::constant(0.0, width); width];
            partials[i] = Dual::constant(1.0, width);
            Dual { value, partials }
        })
        .collect();
    let out = eval(expr, &env)?;
    let value = out.value.value;
    let mut grad = vec![0.0; width];
    for (i, p) in out.value.partials.iter().enumerate() {
        grad[i] = *p;
    }
    let mut hess = vec![vec![0.0; width]; width];
    for (i, row) in out.partials.iter().enumerate() {
        for (j, h) in row.partials.iter().enumerate() {
            hess[i][j] = *h;
        }
    }
    Ok((value, grad, hess))
}
