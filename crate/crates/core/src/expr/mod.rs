//! Closed-form real expressions in one variable `x` with late-bound named
//! parameters.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" unary)?
//! atom  := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `2^3^2` is `2^(3^2)`. Numbers are decimals with an
//! optional exponent; identifiers match `[a-zA-Z_][a-zA-Z0-9_]*`. The
//! identifier `x` is the variable, `pi` and `e` are constants, anything
//! else is a parameter. Functions: `exp ln tan atan sin cos sqrt abs`.

mod dual;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

pub use dual::Dual;

use crate::error::{Error, Result};

/// Named parameter bindings, e.g. `c = 1`.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Tan,
    Atan,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Exp,
        Func::Ln,
        Func::Tan,
        Func::Atan,
        Func::Sin,
        Func::Cos,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

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
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const NEG_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

/// Expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(Constant),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parses `text`; identifiers other than `x`, `pi`, `e` become parameters.
    pub fn parse(text: &str) -> Result<Expr> {
        parse::Parser::new(text, None)?.parse()
    }

    /// Parses `text`, rejecting identifiers outside `x`, `pi`, `e` and `params`.
    pub fn parse_with_params(text: &str, params: &[&str]) -> Result<Expr> {
        parse::Parser::new(text, Some(params))?.parse()
    }

    /// Names of all parameters referenced by the expression.
    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Param(name) = e {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        });
        out
    }

    fn walk(&self, visit: &mut impl FnMut(&Expr)) {
        visit(self);
        match self {
            Expr::Neg(a) | Expr::Call(_, a) => a.walk(visit),
            Expr::Binary(_, a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            _ => {}
        }
    }

    pub fn eval(&self, x: f64, params: &Params) -> Result<f64> {
        let v = self.eval_generic::<f64>(x, params)?;
        finite(v)
    }

    /// Exact point derivative by forward-mode dual numbers.
    pub fn derivative_at(&self, x: f64, params: &Params) -> Result<f64> {
        Ok(self.eval_dual(Dual::variable(x), params)?.eps)
    }

    pub fn eval_dual(&self, x: Dual, params: &Params) -> Result<Dual> {
        let v = self.eval_generic::<Dual>(x, params)?;
        finite(v.re)?;
        if !v.eps.is_finite() {
            return Err(Error::Domain(format!(
                "derivative undefined at x = {}",
                x.re
            )));
        }
        Ok(v)
    }

    fn eval_generic<T: Scalar>(&self, x: T, params: &Params) -> Result<T> {
        Ok(match self {
            Expr::Num(v) => T::constant(*v),
            Expr::Var => x,
            Expr::Const(c) => T::constant(c.value()),
            Expr::Param(name) => T::constant(
                *params
                    .get(name)
                    .ok_or_else(|| Error::UnboundParameter(name.clone()))?,
            ),
            Expr::Neg(a) => a.eval_generic(x, params)?.neg(),
            Expr::Binary(op, a, b) => {
                let a = a.eval_generic(x, params)?;
                let b = b.eval_generic(x, params)?;
                match op {
                    BinOp::Add => a.add(b),
                    BinOp::Sub => a.sub(b),
                    BinOp::Mul => a.mul(b),
                    BinOp::Div => {
                        if b.value() == 0.0 {
                            return Err(Error::Domain("division by zero".into()));
                        }
                        a.div(b)
                    }
                    BinOp::Pow => {
                        let v = a.pow(b);
                        if v.value().is_nan() {
                            return Err(Error::Domain(format!(
                                "{}^{} is undefined",
                                a.value(),
                                b.value()
                            )));
                        }
                        v
                    }
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval_generic(x, params)?;
                let v = a.value();
                match f {
                    Func::Ln if v <= 0.0 => {
                        return Err(Error::Domain(format!("ln of non-positive {v}")))
                    }
                    Func::Sqrt if v < 0.0 => {
                        return Err(Error::Domain(format!("sqrt of negative {v}")))
                    }
                    Func::Tan if v.cos() == 0.0 => {
                        return Err(Error::Domain(format!("tan pole at {v}")))
                    }
                    _ => {}
                }
                a.apply(*f)?
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => NEG_PRECEDENCE,
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Binary(op, _, _) => op.precedence(),
            _ => ATOM_PRECEDENCE,
        }
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("non-finite result {v}")))
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min: u8) -> fmt::Result {
    if child.precedence() < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var => f.write_str("x"),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Param(name) => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, NEG_PRECEDENCE)
            }
            Expr::Binary(BinOp::Pow, a, b) => {
                write_child(f, a, ATOM_PRECEDENCE)?;
                f.write_str("^")?;
                write_child(f, b, NEG_PRECEDENCE)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                write_child(f, a, p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, b, p + 1)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

/// Arithmetic shared by plain and dual evaluation.
trait Scalar: Copy {
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn div(self, rhs: Self) -> Self;
    fn neg(self) -> Self;
    fn pow(self, rhs: Self) -> Self;
    fn apply(self, f: Func) -> Result<Self>;
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn pow(self, rhs: Self) -> Self {
        self.powf(rhs)
    }
    fn apply(self, f: Func) -> Result<Self> {
        Ok(match f {
            Func::Exp => self.exp(),
            Func::Ln => self.ln(),
            Func::Tan => self.tan(),
            Func::Atan => self.atan(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Sqrt => self.sqrt(),
            Func::Abs => self.abs(),
        })
    }
}

impl Scalar for Dual {
    fn constant(v: f64) -> Self {
        Dual::constant(v)
    }
    fn value(self) -> f64 {
        self.re
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn pow(self, rhs: Self) -> Self {
        Dual::pow(self, rhs)
    }
    fn apply(self, f: Func) -> Result<Self> {
        let nondiff = |what: &str| {
            Err(Error::Domain(format!(
                "{what} is not differentiable at {}",
                self.re
            )))
        };
        match f {
            Func::Abs if self.re == 0.0 && self.eps != 0.0 => nondiff("abs"),
            Func::Sqrt if self.re == 0.0 && self.eps != 0.0 => nondiff("sqrt"),
            Func::Exp => Ok(self.exp()),
            Func::Ln => Ok(self.ln()),
            Func::Tan => Ok(self.tan()),
            Func::Atan => Ok(self.atan()),
            Func::Sin => Ok(self.sin()),
            Func::Cos => Ok(self.cos()),
            Func::Sqrt => Ok(self.sqrt()),
            Func::Abs => Ok(self.abs()),
        }
    }
}
