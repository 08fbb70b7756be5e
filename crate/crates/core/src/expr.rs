//! Scalar functions of one variable: constants, small arithmetic
//! expressions in `u` (`1/u`, `a*u+b`, `sqrt(1-u^2)`), or tabulated data.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::interp::HermiteTable;
use crate::jet::{Scalar, Taylor3};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

/// A parsed expression in the single variable `u`.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { s: src.as_bytes(), i: 0 };
        let root = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Self { source: src.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval<T: Scalar>(&self, u: T) -> T {
        eval(&self.root, u)
    }
}

fn eval<T: Scalar>(n: &Node, u: T) -> T {
    match n {
        Node::Num(x) => T::cst(*x),
        Node::Var => u,
        Node::Neg(a) => -eval(a, u),
        Node::Bin(op, a, b) => {
            if let (Op::Pow, Node::Num(p)) = (op, b.as_ref()) {
                let base = eval(a, u);
                return if p.fract() == 0.0 && p.abs() <= 64.0 { base.powi(*p as i32) } else { base.powf(*p) };
            }
            let (x, y) = (eval(a, u), eval(b, u));
            match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => x * y,
                Op::Div => x / y,
                Op::Pow => (y * x.ln()).exp(),
            }
        }
        Node::Call(f, a) => {
            let x = eval(a, u);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => x.ln(),
                Func::Sqrt => x.sqrt(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
            }
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("expression {:?} at offset {}: {msg}", String::from_utf8_lossy(self.s), self.i))
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { Op::Add } else { Op::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.i += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { Op::Mul } else { Op::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.i += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.i;
                while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
                    self.i += 1;
                }
                if self.i < self.s.len() && (self.s[self.i] == b'e' || self.s[self.i] == b'E') {
                    let save = self.i;
                    self.i += 1;
                    if self.i < self.s.len() && (self.s[self.i] == b'+' || self.s[self.i] == b'-') {
                        self.i += 1;
                    }
                    let digits = self.i;
                    while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                        self.i += 1;
                    }
                    if self.i == digits {
                        self.i = save;
                    }
                }
                let text = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                text.parse().map(Node::Num).map_err(|_| self.err("bad number"))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.i;
                while self.i < self.s.len() && self.s[self.i].is_ascii_alphanumeric() {
                    self.i += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                let func = match name {
                    "u" => return Ok(Node::Var),
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "e" => return Ok(Node::Num(std::f64::consts::E)),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "log" | "ln" => Func::Log,
                    "sqrt" => Func::Sqrt,
                    "sinh" => Func::Sinh,
                    "cosh" => Func::Cosh,
                    _ => return Err(self.err(&format!("unknown identifier '{name}'"))),
                };
                if self.peek() != Some(b'(') {
                    return Err(self.err("expected '(' after function name"));
                }
                self.i += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.i += 1;
                Ok(Node::Call(func, Box::new(arg)))
            }
            _ => Err(self.err("expected a number, 'u', a function or '('")),
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A scalar function of one variable with derivatives up to order three.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarFn {
    Const(f64),
    Expr(Expr),
    Table(HermiteTable),
}

impl ScalarFn {
    pub fn parse(src: &str) -> Result<Self> {
        match src.trim().parse::<f64>() {
            Ok(c) => Ok(ScalarFn::Const(c)),
            Err(_) => Expr::parse(src).map(ScalarFn::Expr),
        }
    }

    pub fn constant(c: f64) -> Self {
        ScalarFn::Const(c)
    }

    /// `[f, f', f'', f''']` at `u`.
    pub fn eval(&self, u: f64) -> Result<Taylor3> {
        let t = match self {
            ScalarFn::Const(c) => Taylor3::constant(*c),
            ScalarFn::Expr(e) => e.eval(Taylor3::var(u)),
            ScalarFn::Table(t) => t.eval(0, u)?,
        };
        if t.0.iter().all(|x| x.is_finite()) {
            Ok(t)
        } else {
            Err(Error::Precondition(format!("function not finite at u = {u}")))
        }
    }

    pub fn value(&self, u: f64) -> Result<f64> {
        self.eval(u).map(|t| t.d(0))
    }

    /// True when the function is identically zero by construction.
    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarFn::Const(c) if *c == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_sample_inputs() {
        let k = Expr::parse("1/u").unwrap();
        let t = k.eval(Taylor3::var(2.0));
        assert_relative_eq!(t.d(0), 0.5);
        assert_relative_eq!(t.d(1), -0.25);
        assert_relative_eq!(t.d(2), 0.25);
        let lin = Expr::parse("0.5*u + 2").unwrap();
        assert_relative_eq!(lin.eval(3.0), 3.5);
    }

    #[test]
    fn precedence_and_power() {
        let e = Expr::parse("-u^2 + 2*u*(3 - u)/4").unwrap();
        let u = 1.7f64;
        assert_relative_eq!(e.eval(u), -u * u + 2.0 * u * (3.0 - u) / 4.0, epsilon = 1e-14);
        let f = Expr::parse("sqrt(1 - u^2)").unwrap();
        assert_relative_eq!(f.eval(0.6), 0.8, epsilon = 1e-14);
        let g = Expr::parse("2^u").unwrap();
        assert_relative_eq!(g.eval(Taylor3::var(1.5)).d(1), 2f64.powf(1.5) * 2f64.ln(), epsilon = 1e-13);
        assert_relative_eq!(Expr::parse("1e-3*u").unwrap().eval(2.0), 2e-3);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1/", "foo(u)", "u u", "(u", "sin u"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn scalar_fn_json_forms() {
        let c: ScalarFn = serde_json::from_str("1.5").unwrap();
        assert_eq!(c, ScalarFn::Const(1.5));
        let e: ScalarFn = serde_json::from_str("\"1/u\"").unwrap();
        assert_relative_eq!(e.value(4.0).unwrap(), 0.25);
        assert_eq!(serde_json::to_string(&e).unwrap(), "\"1/u\"");
        assert!(serde_json::from_str::<ScalarFn>("\"1/\"").is_err());
    }
}
