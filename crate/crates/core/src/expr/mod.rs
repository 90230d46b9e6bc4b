//! Scalar expression language for user-supplied `f(x,y,z)`, `phi(t)`, `Phi(t)`.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?        right associative
//! primary := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)` and `2^-1` is `0.5`.

mod diff;
mod parser;

use std::fmt;

use thiserror::Error;

pub use parser::{parse, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    Z,
    R,
    Theta,
    T,
}

impl Var {
    pub const ALL: [Var; 6] = [Var::X, Var::Y, Var::Z, Var::R, Var::Theta, Var::T];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::R => "r",
            Var::Theta => "theta",
            Var::T => "t",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == s)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Tanh,
    Atan,
}

impl Func {
    pub const ALL: [Func; 8] =
        [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Sqrt, Func::Tanh, Func::Atan];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    fn apply(self, a: f64) -> Result<f64, ExprError> {
        let v = match self {
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => a.tan(),
            Func::Exp => a.exp(),
            Func::Ln => {
                if a <= 0.0 {
                    return Err(ExprError::Domain(format!("ln of non-positive value {a}")));
                }
                a.ln()
            }
            Func::Sqrt => {
                if a < 0.0 {
                    return Err(ExprError::Domain(format!("sqrt of negative value {a}")));
                }
                a.sqrt()
            }
            Func::Tanh => a.tanh(),
            Func::Atan => a.atan(),
        };
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
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

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unbound variable `{}`", .0.name())]
    UnboundVariable(Var),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Values for the free variables of an expression.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Bindings([Option<f64>; 6]);

impl Bindings {
    pub fn new() -> Self {
        Bindings([None; 6])
    }

    pub fn with(mut self, v: Var, value: f64) -> Self {
        self.0[v.slot()] = Some(value);
        self
    }

    pub fn set(&mut self, v: Var, value: f64) {
        self.0[v.slot()] = Some(value);
    }

    pub fn get(&self, v: Var) -> Option<f64> {
        self.0[v.slot()]
    }

    /// Only `t` bound; the usual case for `phi(t)` and `Phi(t)`.
    pub fn t(value: f64) -> Self {
        Bindings::new().with(Var::T, value)
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    pub fn evaluate(&self, b: &Bindings) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(v) => b.get(*v).ok_or(ExprError::UnboundVariable(*v))?,
            Expr::Neg(a) => -a.evaluate(b)?,
            Expr::Call(f, a) => f.apply(a.evaluate(b)?)?,
            Expr::Bin(op, l, r) => {
                let x = l.evaluate(b)?;
                let y = r.evaluate(b)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(ExprError::Domain("division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => x.powf(y),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain(format!("non-finite result from `{self}`")))
        }
    }

    /// Convenience for single-variable expressions in `t`.
    pub fn eval_t(&self, t: f64) -> Result<f64, ExprError> {
        self.evaluate(&Bindings::t(t))
    }

    /// Exact symbolic derivative with respect to `v`.
    pub fn differentiate(&self, v: Var) -> Expr {
        diff::differentiate(self, v)
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Bin(_, l, r) => l.depends_on(v) || r.depends_on(v),
        }
    }

    pub fn free_vars(&self) -> Vec<Var> {
        Var::ALL.into_iter().filter(|v| self.depends_on(*v)).collect()
    }

    /// Binding strength when printed: primaries 5, powers 4, unary minus 3.
    fn print_precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
            Expr::Num(_) | Expr::Pi | Expr::Var(_) | Expr::Call(..) => 5,
            Expr::Neg(_) => 3,
            Expr::Bin(op, ..) => op.precedence(),
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Pi => f.write_str("pi"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_wrapped(f, a, a.print_precedence() < 3)
            }
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                let (wrap_l, wrap_r) = if *op == BinOp::Pow {
                    // Right associative; the base must be a primary, the
                    // exponent may be anything that parses as `unary`.
                    (l.print_precedence() < 5, r.print_precedence() < 3)
                } else {
                    (l.print_precedence() < p, r.print_precedence() <= p)
                };
                write_wrapped(f, l, wrap_l)?;
                write!(f, " {} ", op.symbol())?;
                write_wrapped(f, r, wrap_r)
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
