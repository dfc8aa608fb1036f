use thiserror::Error;

use super::{eval, BinOp, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("`{0}` is not differentiable")]
    NotDifferentiable(&'static str),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

fn constant(node: &Node) -> Option<f64> {
    match node {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

// Constructors below fold constants and drop additive/multiplicative
// identities; nothing else is simplified.

fn add(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => Node::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Node::binary(BinOp::Add, a, b),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => Node::Const(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Node::binary(BinOp::Sub, a, b),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => Node::Const(x * y),
        (Some(x), _) if x == 0.0 => Node::Const(0.0),
        (_, Some(y)) if y == 0.0 => Node::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Node::binary(BinOp::Mul, a, b),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) if y != 0.0 => Node::Const(x / y),
        (Some(x), _) if x == 0.0 => Node::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Node::binary(BinOp::Div, a, b),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    if let (Some(x), Some(y)) = (constant(&a), constant(&b)) {
        if let Ok(v) = eval::power(x, y) {
            if v.is_finite() {
                return Node::Const(v);
            }
        }
    }
    Node::binary(BinOp::Pow, a, b)
}

fn call(f: Func, a: Node) -> Node {
    Node::Call(f, vec![a])
}

pub(super) fn derivative(node: &Node, wrt: usize) -> Result<Node, DiffError> {
    if !node.depends_on(wrt) {
        return Ok(Node::Const(0.0));
    }
    Ok(match node {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(i) => Node::Const(if *i == wrt { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(derivative(a, wrt)?),
        Node::Binary(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => add(derivative(a, wrt)?, derivative(b, wrt)?),
                BinOp::Sub => sub(derivative(a, wrt)?, derivative(b, wrt)?),
                BinOp::Mul => add(mul(derivative(a, wrt)?, b.clone()), mul(a.clone(), derivative(b, wrt)?)),
                BinOp::Div => div(
                    sub(mul(derivative(a, wrt)?, b.clone()), mul(a.clone(), derivative(b, wrt)?)),
                    pow(b.clone(), Node::Const(2.0)),
                ),
                BinOp::Pow => power_rule(a, b, wrt)?,
            }
        }
        Node::Call(f, args) => {
            let a = &args[0];
            let da = derivative(a, wrt)?;
            match f {
                Func::Exp => mul(call(Func::Exp, a.clone()), da),
                Func::Log => div(da, a.clone()),
                Func::Sin => mul(call(Func::Cos, a.clone()), da),
                Func::Cos => mul(neg(call(Func::Sin, a.clone())), da),
                // abs'(0) = 0 through sign(0) = 0
                Func::Abs => mul(call(Func::Sign, a.clone()), da),
                Func::Sqrt => div(da, mul(Node::Const(2.0), call(Func::Sqrt, a.clone()))),
                Func::Sign => Node::Const(0.0),
                Func::Min | Func::Max => return Err(DiffError::NotDifferentiable(f.name())),
            }
        }
    })
}

fn power_rule(base: &Node, exponent: &Node, wrt: usize) -> Result<Node, DiffError> {
    if !exponent.depends_on(wrt) {
        // c * a^(c-1) * a'
        let reduced = match constant(exponent) {
            Some(c) => Node::Const(c - 1.0),
            None => sub(exponent.clone(), Node::Const(1.0)),
        };
        return Ok(mul(
            mul(exponent.clone(), pow(base.clone(), reduced)),
            derivative(base, wrt)?,
        ));
    }
    let whole = Node::binary(BinOp::Pow, base.clone(), exponent.clone());
    if !base.depends_on(wrt) {
        // a^b * log(a) * b'
        return Ok(mul(
            mul(whole, call(Func::Log, base.clone())),
            derivative(exponent, wrt)?,
        ));
    }
    // a^b * (b' log(a) + b a'/a)
    let inner = add(
        mul(derivative(exponent, wrt)?, call(Func::Log, base.clone())),
        div(mul(exponent.clone(), derivative(base, wrt)?), base.clone()),
    );
    Ok(mul(whole, inner))
}
