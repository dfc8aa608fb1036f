use thiserror::Error;

use super::{BinOp, Func, Node};

/// Why an expression could not be evaluated at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero raised to negative power {0}")]
    ZeroNegativePower(f64),
    #[error("non-integer power {exponent} of non-positive base {base}")]
    PowerDomain { base: f64, exponent: f64 },
    #[error("non-finite intermediate result")]
    NonFinite,
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("expected {expected} coordinate(s), got {found}")]
    PointArity { expected: usize, found: usize },
    #[error("argument {0} outside the function's domain")]
    OutOfRange(f64),
}

pub(super) fn eval_node(node: &Node, point: &[f64]) -> Result<f64, EvalError> {
    let value = match node {
        Node::Const(c) => return Ok(*c),
        Node::Var(i) => return Ok(point[*i]),
        Node::Neg(a) => -eval_node(a, point)?,
        Node::Binary(op, a, b) => {
            let x = eval_node(a, point)?;
            let y = eval_node(b, point)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x / y
                }
                BinOp::Pow => power(x, y)?,
            }
        }
        Node::Call(f, args) => {
            let x = eval_node(&args[0], point)?;
            match f {
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(EvalError::LogDomain(x));
                    }
                    x.ln()
                }
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Abs => x.abs(),
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(EvalError::SqrtDomain(x));
                    }
                    x.sqrt()
                }
                Func::Sign => sign(x),
                Func::Min => x.min(eval_node(&args[1], point)?),
                Func::Max => x.max(eval_node(&args[1], point)?),
            }
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite)
    }
}

/// `sign(0) = 0`.
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Integer exponents use repeated squaring so that negative bases are
/// allowed; anything else requires a positive base.
pub(crate) fn power(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if exponent.fract() == 0.0 && exponent.abs() < 9.0e18 {
        let n = exponent as i64;
        if n < 0 && base == 0.0 {
            return Err(EvalError::ZeroNegativePower(exponent));
        }
        let mut k = n.unsigned_abs();
        let mut acc = 1.0;
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                acc *= sq;
            }
            k >>= 1;
            if k > 0 {
                sq *= sq;
            }
        }
        return Ok(if n < 0 { 1.0 / acc } else { acc });
    }
    if base <= 0.0 {
        return Err(EvalError::PowerDomain { base, exponent });
    }
    Ok(base.powf(exponent))
}
