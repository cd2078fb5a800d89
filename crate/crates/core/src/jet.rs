//! Second-order truncated Taylor arithmetic in a fixed number of variables.
//!
//! A [`Jet`] carries a value, its gradient and its (symmetric) Hessian, and
//! propagates them exactly through arithmetic and elementary functions.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `vars x vars`.
    pub hess: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, vars: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; vars],
            hess: vec![0.0; vars * vars],
        }
    }

    /// The coordinate function `x_i` evaluated at `value`.
    pub fn variable(value: f64, i: usize, vars: usize) -> Self {
        let mut j = Self::constant(value, vars);
        j.grad[i] = 1.0;
        j
    }

    pub fn vars(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.vars() + j]
    }

    /// Applies a scalar function with derivatives `(f, f', f'')` at `self.value`.
    pub fn chain(&self, f: f64, d1: f64, d2: f64) -> Self {
        let n = self.vars();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = d1 * self.hess[i * n + j] + d2 * self.grad[i] * self.grad[j];
            }
        }
        Self {
            value: f,
            grad: self.grad.iter().map(|g| d1 * g).collect(),
            hess,
        }
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn powf(&self, a: f64) -> Self {
        let v = self.value;
        let p = v.powf(a);
        self.chain(p, a * p / v, a * (a - 1.0) * p / (v * v))
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            value: self.value * s,
            grad: self.grad.iter().map(|g| g * s).collect(),
            hess: self.hess.iter().map(|h| h * s).collect(),
        }
    }

    pub fn add_const(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.value += c;
        out
    }

    /// `sum_k coeffs[k] * jets[k]`.
    pub fn linear_combination(coeffs: &[f64], jets: &[Jet]) -> Self {
        let vars = jets[0].vars();
        let mut out = Self::constant(0.0, vars);
        for (c, j) in coeffs.iter().zip(jets) {
            if *c == 0.0 {
                continue;
            }
            out.value += c * j.value;
            for (o, g) in out.grad.iter_mut().zip(&j.grad) {
                *o += c * g;
            }
            for (o, h) in out.hess.iter_mut().zip(&j.hess) {
                *o += c * h;
            }
        }
        out
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value + rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value - rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.vars();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = self.value * rhs.hess[i * n + j]
                    + rhs.value * self.hess[i * n + j]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
            }
        }
        Jet {
            value: self.value * rhs.value,
            grad: self
                .grad
                .iter()
                .zip(&rhs.grad)
                .map(|(a, b)| self.value * b + rhs.value * a)
                .collect(),
            hess,
        }
    }
}

impl Div for &Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Jet) -> Jet {
        self * &rhs.recip()
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

/// Dot product of two jet vectors.
pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = &a[0] * &b[0];
    for (x, y) in a.iter().zip(b).skip(1) {
        acc = &acc + &(x * y);
    }
    acc
}
