//! Forward-mode truncated Taylor arithmetic.
//!
//! Two number types are provided:
//!
//! - [`Dual2`]: a value with first and second partials in two variables
//!   `(u, v)`. Surface parametrizations written over `Dual2` produce their
//!   exact second-order jet.
//! - [`Taylor3`]: a value with the first three derivatives in one variable.
//!   Curves and scalar function specs are evaluated over it.
//!
//! Both implement [`Scalar`], so formulas (and parsed expressions) can be
//! written once and evaluated on either type or on plain `f64`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the analytic formulas in this crate.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    fn value(&self) -> f64;

    /// Apply a univariate function given its value and first three
    /// derivatives at `self.value()`.
    fn lift(self, f: [f64; 4]) -> Self;

    fn sin(self) -> Self {
        let x = self.value();
        let (s, c) = x.sin_cos();
        self.lift([s, c, -s, -c])
    }
    fn cos(self) -> Self {
        let x = self.value();
        let (s, c) = x.sin_cos();
        self.lift([c, -s, -c, s])
    }
    fn exp(self) -> Self {
        let e = self.value().exp();
        self.lift([e; 4])
    }
    fn ln(self) -> Self {
        let x = self.value();
        self.lift([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }
    fn sqrt(self) -> Self {
        let x = self.value();
        let s = x.sqrt();
        self.lift([s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)])
    }
    fn sinh(self) -> Self {
        let x = self.value();
        let (s, c) = (x.sinh(), x.cosh());
        self.lift([s, c, s, c])
    }
    fn cosh(self) -> Self {
        let x = self.value();
        let (s, c) = (x.sinh(), x.cosh());
        self.lift([c, s, c, s])
    }
    fn recip(self) -> Self {
        let x = self.value();
        let r = 1.0 / x;
        self.lift([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }
    /// Real power `x^p`.
    fn powf(self, p: f64) -> Self {
        let x = self.value();
        if p == 0.0 {
            return Self::cst(1.0);
        }
        let f0 = x.powf(p);
        let f1 = p * x.powf(p - 1.0);
        let f2 = p * (p - 1.0) * x.powf(p - 2.0);
        let f3 = p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0);
        self.lift([f0, f1, f2, f3])
    }
    /// Integer power by repeated multiplication (exact for negative bases).
    fn powi(self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn lift(self, f: [f64; 4]) -> Self {
        f[0]
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// Value with first and second partial derivatives in `(u, v)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub du: f64,
    pub dv: f64,
    pub duu: f64,
    pub duv: f64,
    pub dvv: f64,
}

impl Dual2 {
    pub fn var_u(u: f64) -> Self {
        Self { v: u, du: 1.0, ..Default::default() }
    }
    pub fn var_v(v: f64) -> Self {
        Self { v, dv: 1.0, ..Default::default() }
    }
    pub fn constant(x: f64) -> Self {
        Self { v: x, ..Default::default() }
    }
}

impl Scalar for Dual2 {
    fn cst(x: f64) -> Self {
        Self::constant(x)
    }
    fn value(&self) -> f64 {
        self.v
    }
    // Faa di Bruno truncated at order two.
    fn lift(self, f: [f64; 4]) -> Self {
        Self {
            v: f[0],
            du: f[1] * self.du,
            dv: f[1] * self.dv,
            duu: f[2] * self.du * self.du + f[1] * self.duu,
            duv: f[2] * self.du * self.dv + f[1] * self.duv,
            dvv: f[2] * self.dv * self.dv + f[1] * self.dvv,
        }
    }
}

impl Add for Dual2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            du: self.du + o.du,
            dv: self.dv + o.dv,
            duu: self.duu + o.duu,
            duv: self.duv + o.duv,
            dvv: self.dvv + o.dvv,
        }
    }
}

impl Sub for Dual2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Dual2 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul for Dual2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            du: self.du * o.v + self.v * o.du,
            dv: self.dv * o.v + self.v * o.dv,
            duu: self.duu * o.v + 2.0 * self.du * o.du + self.v * o.duu,
            duv: self.duv * o.v + self.du * o.dv + self.dv * o.du + self.v * o.duv,
            dvv: self.dvv * o.v + 2.0 * self.dv * o.dv + self.v * o.dvv,
        }
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Add<f64> for Dual2 {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl Sub<f64> for Dual2 {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Dual2 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self {
            v: self.v * c,
            du: self.du * c,
            dv: self.dv * c,
            duu: self.duu * c,
            duv: self.duv * c,
            dvv: self.dvv * c,
        }
    }
}

impl Div<f64> for Dual2 {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        self * (1.0 / c)
    }
}

/// Value and first three derivatives of a function of one variable.
///
/// Stored as plain derivatives `[f, f', f'', f''']`, not Taylor coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Taylor3(pub [f64; 4]);

impl Taylor3 {
    pub fn var(x: f64) -> Self {
        Self([x, 1.0, 0.0, 0.0])
    }
    pub fn constant(x: f64) -> Self {
        Self([x, 0.0, 0.0, 0.0])
    }
    pub fn d(&self, k: usize) -> f64 {
        self.0[k]
    }
}

impl Scalar for Taylor3 {
    fn cst(x: f64) -> Self {
        Self::constant(x)
    }
    fn value(&self) -> f64 {
        self.0[0]
    }
    fn lift(self, f: [f64; 4]) -> Self {
        let [_, g1, g2, g3] = self.0;
        Self([
            f[0],
            f[1] * g1,
            f[2] * g1 * g1 + f[1] * g2,
            f[3] * g1 * g1 * g1 + 3.0 * f[2] * g1 * g2 + f[1] * g3,
        ])
    }
}

impl Add for Taylor3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|k| self.0[k] + o.0[k]))
    }
}

impl Sub for Taylor3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|k| self.0[k] - o.0[k]))
    }
}

impl Neg for Taylor3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|x| -x))
    }
}

impl Mul for Taylor3 {
    type Output = Self;
    // Leibniz rule.
    fn mul(self, o: Self) -> Self {
        let [a0, a1, a2, a3] = self.0;
        let [b0, b1, b2, b3] = o.0;
        Self([
            a0 * b0,
            a1 * b0 + a0 * b1,
            a2 * b0 + 2.0 * a1 * b1 + a0 * b2,
            a3 * b0 + 3.0 * a2 * b1 + 3.0 * a1 * b2 + a0 * b3,
        ])
    }
}

impl Div for Taylor3 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Add<f64> for Taylor3 {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.0[0] += c;
        self
    }
}

impl Sub<f64> for Taylor3 {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.0[0] -= c;
        self
    }
}

impl Mul<f64> for Taylor3 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self(self.0.map(|x| x * c))
    }
}

impl Div<f64> for Taylor3 {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        self * (1.0 / c)
    }
}
