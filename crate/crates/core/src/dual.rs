//! Second-order forward-mode differentiation in one variable.
//!
//! The spectral series are written once against [`Scalar`] and evaluated
//! either on plain `f64` or on [`Dual2`], which carries the value together
//! with its first and second derivative in the Hurst index.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::special;

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn gamma(self) -> Self;
    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn gamma(self) -> Self {
        special::gamma(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// Value with first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual2 {
    pub fn var(x: f64) -> Self {
        Dual2 { v: x, d1: 1.0, d2: 0.0 }
    }

    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Dual2 {
            v: f,
            d1: df * self.d1,
            d2: d2f * self.d1 * self.d1 + df * self.d2,
        }
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, o: Dual2) -> Dual2 {
        Dual2 { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, o: Dual2) -> Dual2 {
        Dual2 { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        Dual2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    fn div(self, o: Dual2) -> Dual2 {
        self * o.recip()
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2 { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Add<f64> for Dual2 {
    type Output = Dual2;
    fn add(self, o: f64) -> Dual2 {
        Dual2 { v: self.v + o, ..self }
    }
}

impl Mul<f64> for Dual2 {
    type Output = Dual2;
    fn mul(self, o: f64) -> Dual2 {
        Dual2 { v: self.v * o, d1: self.d1 * o, d2: self.d2 * o }
    }
}

impl Scalar for Dual2 {
    fn cst(x: f64) -> Self {
        Dual2 { v: x, d1: 0.0, d2: 0.0 }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn gamma(self) -> Self {
        let g = special::gamma(self.v);
        let psi = special::digamma(self.v);
        let psi1 = special::trigamma(self.v);
        self.chain(g, g * psi, g * (psi * psi + psi1))
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}
