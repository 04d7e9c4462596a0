//! Arithmetic expressions over chart coordinates.
//!
//! Grammar (lowest to highest precedence, binary operators left-associative):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' ['-' | '+'] INTEGER)?
//! atom    := NUMBER | IDENT | '(' sum ')'
//! ```
//!
//! Exponents are integer literals in `[-8, 8]`.

mod jet;
mod parse;

use std::fmt;
use std::sync::Arc;

pub use jet::Jet2;
pub use parse::parse_expression;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_EXPONENT: i32 = 8;
/// `|den| < DIV_FLOOR · (1 + |num|)` is a division-by-zero error.
pub const DIV_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Coord(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

/// A parsed scalar field: an expression tree plus the coordinate names of the
/// chart it was written against.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    node: Node,
    names: Arc<[String]>,
}

impl Expression {
    pub fn new(node: Node, names: Arc<[String]>) -> Result<Self> {
        check_node(&node, names.len())?;
        Ok(Self { node, names })
    }

    pub fn constant(value: f64, names: Arc<[String]>) -> Self {
        Self {
            node: Node::Const(value),
            names,
        }
    }

    pub fn zero(names: Arc<[String]>) -> Self {
        Self::constant(0.0, names)
    }

    pub fn coord(index: usize, names: Arc<[String]>) -> Self {
        assert!(index < names.len(), "coordinate index out of range");
        Self {
            node: Node::Coord(index),
            names,
        }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node, Node::Const(c) if c == 0.0)
    }

    pub fn powi(self, k: i32) -> Self {
        assert!((-MAX_EXPONENT..=MAX_EXPONENT).contains(&k));
        let node = match (&self.node, k) {
            (_, 1) => self.node,
            (Node::Const(c), _) if k >= 0 => Node::Const(c.powi(k)),
            _ => Node::Pow(Box::new(self.node), k),
        };
        Self {
            node,
            names: self.names,
        }
    }

    /// Evaluates the expression and its first and second derivatives.
    pub fn eval_jet2<T: Scalar>(&self, coords: &[T]) -> Result<Jet2<T>> {
        if coords.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "expression over {} coordinates evaluated at {} values",
                self.dim(),
                coords.len()
            )));
        }
        let jet = self.eval_node(&self.node, coords)?;
        if !jet.is_finite() {
            return Err(Error::NonFinite {
                subexpr: self.to_string(),
            });
        }
        Ok(jet)
    }

    /// Value only.
    pub fn eval<T: Scalar>(&self, coords: &[T]) -> Result<T> {
        Ok(self.eval_jet2(coords)?.value)
    }

    fn eval_node<T: Scalar>(&self, node: &Node, x: &[T]) -> Result<Jet2<T>> {
        let n = x.len();
        Ok(match node {
            Node::Const(c) => Jet2::constant(n, T::lit(*c)),
            Node::Coord(i) => Jet2::variable(n, *i, x[*i]),
            Node::Neg(a) => self.eval_node(a, x)?.neg(),
            Node::Add(a, b) => self.eval_node(a, x)?.add(&self.eval_node(b, x)?),
            Node::Sub(a, b) => self.eval_node(a, x)?.sub(&self.eval_node(b, x)?),
            Node::Mul(a, b) => self.eval_node(a, x)?.mul(&self.eval_node(b, x)?),
            Node::Div(a, b) => {
                let num = self.eval_node(a, x)?;
                let den = self.eval_node(b, x)?;
                self.check_denominator(b, den.value, num.value)?;
                num.div(&den)
            }
            Node::Pow(a, k) => {
                let base = self.eval_node(a, x)?;
                if *k < 0 {
                    let mag = base.value.powi(-k);
                    self.check_denominator(node, mag, T::one())?;
                }
                base.powi(*k)
            }
        })
    }

    /// Symbolic `∂/∂x_i`, simplified only through the zero and one rules of
    /// the arithmetic operators.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.dim(), "coordinate index out of range");
        self.sub_expr(&self.node).partial_node(i)
    }

    fn sub_expr(&self, node: &Node) -> Self {
        Self {
            node: node.clone(),
            names: self.names.clone(),
        }
    }

    fn partial_node(&self, i: usize) -> Self {
        let names = self.names.clone();
        match &self.node {
            Node::Const(_) => Self::zero(names),
            Node::Coord(j) => Self::constant(if *j == i { 1.0 } else { 0.0 }, names),
            Node::Neg(a) => -self.sub_expr(a).partial_node(i),
            Node::Add(a, b) => self.sub_expr(a).partial_node(i) + self.sub_expr(b).partial_node(i),
            Node::Sub(a, b) => self.sub_expr(a).partial_node(i) - self.sub_expr(b).partial_node(i),
            Node::Mul(a, b) => {
                let (ea, eb) = (self.sub_expr(a), self.sub_expr(b));
                ea.partial_node(i) * eb.clone() + ea * eb.partial_node(i)
            }
            Node::Div(a, b) => {
                let (ea, eb) = (self.sub_expr(a), self.sub_expr(b));
                let num = ea.partial_node(i) * eb.clone() - ea * eb.partial_node(i);
                if num.is_zero() {
                    return Self::zero(names);
                }
                num / eb.powi(2)
            }
            Node::Pow(a, k) => {
                let ea = self.sub_expr(a);
                let da = ea.partial_node(i);
                if *k == 0 || da.is_zero() {
                    return Self::zero(names);
                }
                Self::constant(*k as f64, names) * ea.powi(k - 1) * da
            }
        }
    }

    fn check_denominator<T: Scalar>(&self, den: &Node, value: T, num: T) -> Result<()> {
        let floor = T::lit(DIV_FLOOR) * (T::one() + num.abs());
        if value.abs() < floor || !value.is_finite() {
            return Err(Error::DivisionByZero {
                subexpr: Printer(den, &self.names).to_string(),
                value: value.to_f64_lossy(),
            });
        }
        Ok(())
    }

    fn combine(self, rhs: Self, op: impl FnOnce(Box<Node>, Box<Node>) -> Node) -> Self {
        assert_eq!(self.names, rhs.names, "expressions over different charts");
        Self {
            node: op(Box::new(self.node), Box::new(rhs.node)),
            names: self.names,
        }
    }
}

fn check_node(node: &Node, n: usize) -> Result<()> {
    match node {
        Node::Const(c) if !c.is_finite() => Err(Error::Dimension(format!(
            "non-finite constant {c}"
        ))),
        Node::Const(_) => Ok(()),
        Node::Coord(i) if *i >= n => Err(Error::Dimension(format!(
            "coordinate index {i} on a {n}-dimensional chart"
        ))),
        Node::Coord(_) => Ok(()),
        Node::Neg(a) => check_node(a, n),
        Node::Pow(a, k) => {
            if k.abs() > MAX_EXPONENT {
                return Err(Error::ExponentRange {
                    exponent: *k as i64,
                    offset: 0,
                });
            }
            check_node(a, n)
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            check_node(a, n)?;
            check_node(b, n)
        }
    }
}

impl std::ops::Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Self) -> Self {
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return rhs;
        }
        self.combine(rhs, Node::Add)
    }
}

impl std::ops::Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Self) -> Self {
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return -rhs;
        }
        self.combine(rhs, Node::Sub)
    }
}

impl std::ops::Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Self) -> Self {
        let one = |e: &Expression| matches!(e.node, Node::Const(c) if c == 1.0);
        if self.is_zero() || rhs.is_zero() {
            return Expression::zero(self.names);
        }
        if one(&self) {
            return rhs;
        }
        if one(&rhs) {
            return self;
        }
        self.combine(rhs, Node::Mul)
    }
}

impl std::ops::Div for Expression {
    type Output = Expression;
    fn div(self, rhs: Self) -> Self {
        self.combine(rhs, Node::Div)
    }
}

impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Self {
        let node = match self.node {
            Node::Const(0.0) => Node::Const(0.0),
            Node::Neg(inner) => *inner,
            other => Node::Neg(Box::new(other)),
        };
        Self {
            node,
            names: self.names,
        }
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

struct Printer<'a>(&'a Node, &'a [String]);

impl Printer<'_> {
    fn write(&self, f: &mut fmt::Formatter<'_>, node: &Node, min: u8) -> fmt::Result {
        let names = self.1;
        let prec = match node {
            Node::Const(c) if c.is_sign_negative() => PREC_UNARY,
            Node::Const(_) | Node::Coord(_) => PREC_ATOM,
            Node::Add(..) | Node::Sub(..) => PREC_SUM,
            Node::Mul(..) | Node::Div(..) => PREC_PRODUCT,
            Node::Neg(_) => PREC_UNARY,
            Node::Pow(..) => PREC_POWER,
        };
        let paren = prec < min;
        if paren {
            f.write_str("(")?;
        }
        match node {
            Node::Const(c) => write!(f, "{c}")?,
            Node::Coord(i) => f.write_str(&names[*i])?,
            Node::Neg(a) => {
                f.write_str("-")?;
                self.write(f, a, PREC_UNARY)?;
            }
            Node::Add(a, b) | Node::Sub(a, b) => {
                self.write(f, a, PREC_SUM)?;
                f.write_str(if matches!(node, Node::Add(..)) { "+" } else { "-" })?;
                self.write(f, b, PREC_PRODUCT)?;
            }
            Node::Mul(a, b) | Node::Div(a, b) => {
                self.write(f, a, PREC_PRODUCT)?;
                f.write_str(if matches!(node, Node::Mul(..)) { "*" } else { "/" })?;
                self.write(f, b, PREC_UNARY)?;
            }
            Node::Pow(a, k) => {
                self.write(f, a, PREC_ATOM)?;
                write!(f, "^{k}")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.0, 0)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer(&self.node, &self.names).fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> Arc<[String]> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn xyz() -> Arc<[String]> {
        names(&["x", "y", "z"])
    }

    #[test]
    fn symbolic_partial_matches_jet() {
        let e = parse_expression("(x^2*y - 3)/(1 + z^2) - y^-2", &xyz()).unwrap();
        let at = [0.7_f64, -1.3, 0.4];
        let j = e.eval_jet2(&at).unwrap();
        for i in 0..3 {
            let d = e.partial(i);
            let dj = d.eval_jet2(&at).unwrap();
            assert!((dj.value - j.gradient[i]).abs() < 1e-12, "{d}");
            for k in 0..3 {
                assert!((dj.gradient[k] - j.hess(i, k)).abs() < 1e-11);
            }
        }
        assert!(parse_expression("7", &xyz()).unwrap().partial(0).is_zero());
    }

    #[test]
    fn monomial_jet() {
        let e = parse_expression("x^2", &names(&["x"])).unwrap();
        let j = e.eval_jet2(&[3.0_f64]).unwrap();
        assert_eq!((j.value, j.gradient[0], j.hessian[0]), (9.0, 6.0, 2.0));
    }

    #[test]
    fn connection_coefficient_at_one() {
        let e = parse_expression("(4*x^3+1)/(2*x)", &xyz()).unwrap();
        assert_eq!(e.eval(&[1.0_f64, 0.0, 0.0]).unwrap(), 2.5);
    }

    #[test]
    fn pole_is_an_error() {
        let e = parse_expression("1/x", &xyz()).unwrap();
        match e.eval_jet2(&[0.0_f64, 1.0, 1.0]) {
            Err(Error::DivisionByZero { subexpr, .. }) => assert_eq!(subexpr, "x"),
            other => panic!("expected division error, got {other:?}"),
        }
        let e = parse_expression("x^-2", &xyz()).unwrap();
        assert!(matches!(
            e.eval_jet2(&[0.0_f64, 0.0, 0.0]),
            Err(Error::DivisionByZero { .. })
        ));
    }

    #[test]
    fn printing_keeps_structure() {
        for text in [
            "x-(y-z)",
            "x/(y*z)",
            "-x^2",
            "(-x)^2",
            "--x",
            "x*-y",
            "(x^2)^3",
            "x^-3",
            "(4*x^3+1)/(2*x)",
            "0.5*x+1e-7",
        ] {
            let e = parse_expression(text, &xyz()).unwrap();
            let printed = e.to_string();
            assert_eq!(parse_expression(&printed, &xyz()).unwrap(), e, "{text} -> {printed}");
        }
    }

    #[test]
    fn builders_fold_trivial_terms() {
        let x = Expression::coord(0, xyz());
        let zero = Expression::zero(xyz());
        let one = Expression::constant(1.0, xyz());
        assert_eq!((x.clone() * one).to_string(), "x");
        assert!((x.clone() * zero.clone()).is_zero());
        assert_eq!((zero - x).to_string(), "-x");
    }

    #[test]
    fn f32_evaluation() {
        let e = parse_expression("x^4+x", &xyz()).unwrap();
        let j = e.eval_jet2(&[2.0_f32, 0.0, 0.0]).unwrap();
        assert_eq!(j.value, 18.0);
        assert_eq!(j.gradient[0], 33.0);
        assert_eq!(j.hess(0, 0), 48.0);
    }
}
