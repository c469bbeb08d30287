//! Nonlinear expressions over named real variables.
//!
//! An [`Expr`] is an immutable tree built from constants, variables, a closed
//! set of unary functions and five binary operators. Expressions come from
//! [`parse`], are evaluated pointwise with [`Expr::evaluate`] and render back
//! to source text through [`std::fmt::Display`].

mod parser;
mod print;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use parser::{parse, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl UnaryOp {
    /// Named functions callable as `name(arg)`. `Neg` is prefix `-` only.
    pub const FUNCTIONS: [UnaryOp; 6] = [
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sqrt,
        UnaryOp::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn from_function_name(name: &str) -> Option<UnaryOp> {
        Self::FUNCTIONS.into_iter().find(|op| op.name() == name)
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            UnaryOp::Neg => -x,
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => x.ln(),
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Pow => "pow",
        }
    }

    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    pub fn apply(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            BinaryOp::Add => lhs + rhs,
            BinaryOp::Sub => lhs - rhs,
            BinaryOp::Mul => lhs * rhs,
            BinaryOp::Div => lhs / rhs,
            BinaryOp::Pow => lhs.powf(rhs),
        }
    }
}

/// Abstract syntax tree of a nonlinear expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    Variable(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Constant(value)
    }

    /// Panics if `name` is not a valid identifier.
    pub fn var(name: &str) -> Expr {
        assert!(is_identifier(name), "invalid variable name {name:?}");
        Expr::Variable(name.to_owned())
    }

    pub fn unary(op: UnaryOp, child: Expr) -> Expr {
        Expr::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Distinct variable names in order of first appearance (left to right).
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Constant(_) => {}
            Expr::Variable(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Expr::Unary(_, child) => child.collect_variables(out),
            Expr::Binary(_, lhs, rhs) => {
                lhs.collect_variables(out);
                rhs.collect_variables(out);
            }
        }
    }

    /// Evaluates with variable values supplied by `lookup`.
    ///
    /// Non-finite results are returned as ordinary values.
    pub fn eval_with<F>(&self, lookup: &F) -> Result<f64, EvalError>
    where
        F: Fn(&str) -> Option<f64>,
    {
        match self {
            Expr::Constant(v) => Ok(*v),
            Expr::Variable(name) => {
                lookup(name).ok_or_else(|| EvalError::UnboundVariable(name.clone()))
            }
            Expr::Unary(op, child) => Ok(op.apply(child.eval_with(lookup)?)),
            Expr::Binary(op, lhs, rhs) => {
                Ok(op.apply(lhs.eval_with(lookup)?, rhs.eval_with(lookup)?))
            }
        }
    }

    pub fn evaluate(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_with(&|name| bindings.get(name).copied())
    }

    /// Returns `(a, b)` when the tree is exactly `a * b` with distinct variables.
    pub fn as_two_variable_product(&self) -> Option<(&str, &str)> {
        match self {
            Expr::Binary(BinaryOp::Mul, lhs, rhs) => match (lhs.as_ref(), rhs.as_ref()) {
                (Expr::Variable(a), Expr::Variable(b)) if a != b => Some((a, b)),
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(f, self)
    }
}

/// Minimal-parentheses rendering that re-parses to the same tree.
pub fn pretty_print(e: &Expr) -> String {
    e.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_times_y() -> Expr {
        Expr::binary(BinaryOp::Mul, Expr::var("x"), Expr::var("y"))
    }

    #[test]
    fn evaluate_product() {
        let bindings = HashMap::from([("x".to_string(), 2.0), ("y".to_string(), 5.0)]);
        assert_eq!(x_times_y().evaluate(&bindings).unwrap(), 10.0);
    }

    #[test]
    fn evaluate_sin_and_log_zero() {
        let at_zero = HashMap::from([("x".to_string(), 0.0)]);
        let sin = Expr::unary(UnaryOp::Sin, Expr::var("x"));
        assert_eq!(sin.evaluate(&at_zero).unwrap(), 0.0);
        let log = Expr::unary(UnaryOp::Log, Expr::var("x"));
        assert_eq!(log.evaluate(&at_zero).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn nan_is_a_value() {
        let b = HashMap::from([("x".to_string(), -1.0)]);
        let e = Expr::unary(UnaryOp::Sqrt, Expr::var("x"));
        assert!(e.evaluate(&b).unwrap().is_nan());
    }

    #[test]
    fn unbound_variable() {
        let b = HashMap::from([("x".to_string(), 1.0)]);
        assert_eq!(
            x_times_y().evaluate(&b),
            Err(EvalError::UnboundVariable("y".into()))
        );
    }

    #[test]
    fn variables_first_appearance() {
        assert_eq!(x_times_y().variables(), vec!["x", "y"]);
        let e = Expr::binary(
            BinaryOp::Add,
            Expr::unary(UnaryOp::Sin, Expr::var("x")),
            Expr::var("x"),
        );
        assert_eq!(e.variables(), vec!["x"]);
        assert!(Expr::constant(3.0).variables().is_empty());
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("x"));
        assert!(is_identifier("_a1"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("1a"));
        assert!(!is_identifier("a-b"));
    }

    #[test]
    fn product_shape_detection() {
        assert_eq!(x_times_y().as_two_variable_product(), Some(("x", "y")));
        let xx = Expr::binary(BinaryOp::Mul, Expr::var("x"), Expr::var("x"));
        assert_eq!(xx.as_two_variable_product(), None);
        let cx = Expr::binary(BinaryOp::Mul, Expr::constant(2.0), Expr::var("x"));
        assert_eq!(cx.as_two_variable_product(), None);
    }
}
