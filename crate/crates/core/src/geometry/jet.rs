//! Second-order forward-mode differentiation in two variables.
//!
//! A [`Jet2`] carries a value together with its gradient and Hessian with
//! respect to the two parameter coordinates. Evaluating a closed-form metric
//! on jets yields exact [`MetricDerivatives`](super::MetricDerivatives)
//! without any step-size choice.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by closed-form metric expressions.
///
/// Implemented for `f64` and for [`Jet2`], so a metric written once over
/// `T: Scalar` can be evaluated plainly or differentiated.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Value, gradient `[d/dx1, d/dx2]` and Hessian `[d11, d12, d22]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [f64; 3],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 2], h: [0.0; 3] }
    }

    /// The first coordinate, seeded with unit gradient along x1.
    pub fn var1(v: f64) -> Self {
        Self { v, g: [1.0, 0.0], h: [0.0; 3] }
    }

    /// The second coordinate, seeded with unit gradient along x2.
    pub fn var2(v: f64) -> Self {
        Self { v, g: [0.0, 1.0], h: [0.0; 3] }
    }

    /// Chain rule for a scalar function with derivatives `d1`, `d2` at `self.v`.
    fn chain(self, f: f64, d1: f64, d2: f64) -> Self {
        let [a, b] = self.g;
        Self {
            v: f,
            g: [d1 * a, d1 * b],
            h: [d1 * self.h[0] + d2 * a * a, d1 * self.h[1] + d2 * a * b, d1 * self.h[2] + d2 * b * b],
        }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, g: [-self.g[0], -self.g[1]], h: [-self.h[0], -self.h[1], -self.h[2]] }
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Self {
            v: a.v * b.v,
            g: [a.v * b.g[0] + b.v * a.g[0], a.v * b.g[1] + b.v * a.g[1]],
            h: [
                a.h[0] * b.v + 2.0 * a.g[0] * b.g[0] + a.v * b.h[0],
                a.h[1] * b.v + a.g[0] * b.g[1] + a.g[1] * b.g[0] + a.v * b.h[1],
                a.h[2] * b.v + 2.0 * a.g[1] * b.g[1] + a.v * b.h[2],
            ],
        }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Jet2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Scalar for Jet2 {
    fn cst(x: f64) -> Self {
        Self::constant(x)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }
    fn powi(self, n: i32) -> Self {
        let x = self.v;
        let nf = f64::from(n);
        let d2 = if n == 0 || n == 1 { 0.0 } else { nf * (nf - 1.0) * x.powi(n - 2) };
        let d1 = if n == 0 { 0.0 } else { nf * x.powi(n - 1) };
        self.chain(x.powi(n), d1, d2)
    }
}
