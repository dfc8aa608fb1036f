//! A small scalar expression language.
//!
//! Expressions are parsed from text over an ordered list of variable names,
//! evaluated in double precision and differentiated symbolically. The
//! grammar is
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := unary ("^" factor)? ;
//! unary  := "-" unary | atom ;
//! atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")" ;
//! ```
//!
//! Note that unary minus binds tighter than `^`, so `-x^2` is `(-x)^2`.
//! Recognised functions are `exp`, `log` (natural), `sin`, `cos`, `abs`,
//! `sqrt`, `min`, `max` and `sign`; `sign` exists so that derivatives of
//! `abs` can be rendered and parsed back.

mod diff;
mod eval;
mod parser;

use std::collections::HashMap;
use std::fmt;

pub use diff::DiffError;
pub use eval::EvalError;
pub use parser::ParseError;

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => PREC_SUM,
            BinOp::Mul | BinOp::Div => PREC_PRODUCT,
            BinOp::Pow => PREC_POWER,
        }
    }
}

/// Built-in functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
    Sqrt,
    Sign,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Abs,
        Func::Sqrt,
        Func::Sign,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Sign => "sign",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// A node of the expression tree. Variables are indices into the owning
/// [`Expression`]'s variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_POWER: u8 = 3;
const PREC_UNARY: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Node {
    pub fn binary(op: BinOp, lhs: Node, rhs: Node) -> Node {
        Node::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Const(c) if c.is_sign_negative() => PREC_ATOM,
            Node::Const(_) | Node::Var(_) | Node::Call(..) => PREC_ATOM,
            Node::Neg(_) => PREC_UNARY,
            Node::Binary(op, ..) => op.precedence(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) => 1 + a.size(),
            Node::Binary(_, a, b) => 1 + a.size() + b.size(),
            Node::Call(_, args) => 1 + args.iter().map(Node::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) => 1 + a.depth(),
            Node::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
            Node::Call(_, args) => 1 + args.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(i) => *i == var,
            Node::Neg(a) => a.depends_on(var),
            Node::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
            Node::Call(_, args) => args.iter().any(|a| a.depends_on(var)),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) => a.max_var(),
            Node::Binary(_, a, b) => a.max_var().max(b.max_var()),
            Node::Call(_, args) => args.iter().filter_map(Node::max_var).max(),
        }
    }

    fn arity_ok(&self) -> bool {
        match self {
            Node::Const(c) => c.is_finite(),
            Node::Var(_) => true,
            Node::Neg(a) => a.arity_ok(),
            Node::Binary(_, a, b) => a.arity_ok() && b.arity_ok(),
            Node::Call(f, args) => args.len() == f.arity() && args.iter().all(Node::arity_ok),
        }
    }

    fn render(&self, vars: &[String], out: &mut String) {
        match self {
            Node::Const(c) => {
                if c.is_sign_negative() && *c != 0.0 {
                    out.push_str("(-");
                    out.push_str(&format_number(-c));
                    out.push(')');
                } else {
                    out.push_str(&format_number(c.abs()));
                }
            }
            Node::Var(i) => out.push_str(&vars[*i]),
            Node::Neg(a) => {
                out.push('-');
                a.render_child(vars, PREC_UNARY, out);
            }
            Node::Binary(op, a, b) => {
                let (left_min, right_min) = match op {
                    BinOp::Add | BinOp::Sub => (PREC_SUM, PREC_PRODUCT),
                    BinOp::Mul | BinOp::Div => (PREC_PRODUCT, PREC_POWER),
                    BinOp::Pow => (PREC_UNARY, PREC_POWER),
                };
                a.render_child(vars, left_min, out);
                match op {
                    BinOp::Add | BinOp::Sub => {
                        out.push(' ');
                        out.push_str(op.symbol());
                        out.push(' ');
                    }
                    _ => out.push_str(op.symbol()),
                }
                b.render_child(vars, right_min, out);
            }
            Node::Call(f, args) => {
                out.push_str(f.name());
                out.push('(');
                for (k, arg) in args.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    arg.render(vars, out);
                }
                out.push(')');
            }
        }
    }

    fn render_child(&self, vars: &[String], min_prec: u8, out: &mut String) {
        if self.precedence() < min_prec {
            out.push('(');
            self.render(vars, out);
            out.push(')');
        } else {
            self.render(vars, out);
        }
    }

    fn sexpr(&self, vars: &[String], out: &mut String) {
        match self {
            Node::Const(c) => out.push_str(&format_number(*c)),
            Node::Var(i) => out.push_str(&vars[*i]),
            Node::Neg(a) => {
                out.push_str("(neg ");
                a.sexpr(vars, out);
                out.push(')');
            }
            Node::Binary(op, a, b) => {
                out.push('(');
                out.push_str(op.symbol());
                out.push(' ');
                a.sexpr(vars, out);
                out.push(' ');
                b.sexpr(vars, out);
                out.push(')');
            }
            Node::Call(f, args) => {
                out.push('(');
                out.push_str(f.name());
                for arg in args {
                    out.push(' ');
                    arg.sexpr(vars, out);
                }
                out.push(')');
            }
        }
    }
}

/// Shortest text that parses back to the same `f64`.
fn format_number(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c:?}")
    }
}

/// A parsed expression together with its declared variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    vars: Vec<String>,
}

impl Expression {
    /// Parses `source` over the given ordered variable names.
    pub fn parse(source: &str, variables: &[&str]) -> Result<Self, ParseError> {
        let vars = parser::validate_variables(variables)?;
        let root = parser::Parser::new(source, &vars)?.parse()?;
        Ok(Expression { root, vars })
    }

    /// Builds an expression from a tree, checking variable indices and arity.
    pub fn from_node(root: Node, variables: &[&str]) -> Result<Self, ParseError> {
        let vars = parser::validate_variables(variables)?;
        if let Some(max) = root.max_var() {
            if max >= vars.len() {
                return Err(ParseError::Variables(format!(
                    "variable index {max} out of range for {} declared variables",
                    vars.len()
                )));
            }
        }
        if !root.arity_ok() {
            return Err(ParseError::Variables(
                "malformed tree: function arity or constant".into(),
            ));
        }
        Ok(Expression { root, vars })
    }

    pub fn constant(value: f64, variables: &[&str]) -> Result<Self, ParseError> {
        Expression::from_node(Node::Const(value), variables)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn depends_on(&self, name: &str) -> bool {
        self.variable_index(name).is_some_and(|i| self.root.depends_on(i))
    }

    /// Evaluates at a point given positionally, in declared variable order.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() != self.vars.len() {
            return Err(EvalError::PointArity {
                expected: self.vars.len(),
                found: point.len(),
            });
        }
        eval::eval_node(&self.root, point)
    }

    /// Evaluates at a point given by name. Every declared variable must be bound.
    pub fn evaluate(&self, point: &HashMap<&str, f64>) -> Result<f64, EvalError> {
        let values = self
            .vars
            .iter()
            .map(|name| {
                point
                    .get(name.as_str())
                    .copied()
                    .ok_or_else(|| EvalError::UnboundVariable(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        eval::eval_node(&self.root, &values)
    }

    /// Symbolic derivative with respect to `wrt`.
    pub fn differentiate(&self, wrt: &str) -> Result<Expression, DiffError> {
        let index = self
            .variable_index(wrt)
            .ok_or_else(|| DiffError::UnknownVariable(wrt.to_string()))?;
        let root = diff::derivative(&self.root, index)?;
        Ok(Expression {
            root,
            vars: self.vars.clone(),
        })
    }

    /// S-expression dump of the tree.
    pub fn ast_string(&self) -> String {
        let mut out = String::new();
        self.root.sexpr(&self.vars, &mut out);
        out
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.root.render(&self.vars, &mut out);
        f.write_str(&out)
    }
}
