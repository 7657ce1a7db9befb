//! Forward-mode dual cells.
//!
//! `Dual<S>` carries a value and one derivative slot per seed direction.
//! Nesting (`Dual<Dual<f64>>`) yields second-derivative slots, and so on,
//! which is how every Jacobian and Hessian in the crate is produced.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Real-like number the field evaluators are generic over.
pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    /// Innermost real value.
    fn re(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn tanh(&self) -> Self;
    /// Power with a constant real exponent.
    fn powf(&self, e: f64) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn scale(&self, k: f64) -> Self {
        self.clone() * Self::cst(k)
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }
    fn powf(&self, e: f64) -> Self {
        if e.fract() == 0.0 && e.abs() <= 64.0 {
            self.powi(e as i32)
        } else {
            f64::powf(*self, e)
        }
    }
}

/// A dual cell over `S`. An empty `d` means all slots are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<S> {
    pub v: S,
    pub d: Vec<S>,
}

impl<S: Scalar> Dual<S> {
    pub fn constant(v: S) -> Self {
        Dual { v, d: Vec::new() }
    }

    /// Seed direction `i` out of `n`.
    pub fn var(v: S, i: usize, n: usize) -> Self {
        let mut d = vec![S::zero(); n];
        d[i] = S::cst(1.0);
        Dual { v, d }
    }

    pub fn deriv(&self, i: usize) -> S {
        self.d.get(i).cloned().unwrap_or_else(S::zero)
    }

    fn chain(&self, fv: S, dfv: S) -> Self {
        Dual {
            v: fv,
            d: self.d.iter().map(|x| x.clone() * dfv.clone()).collect(),
        }
    }
}

/// Lift a point into dual cells, one seed per coordinate.
pub fn seed<S: Scalar>(x: &[S]) -> Vec<Dual<S>> {
    let n = x.len();
    x.iter()
        .enumerate()
        .map(|(i, xi)| Dual::var(xi.clone(), i, n))
        .collect()
}

fn zip_with<S: Scalar>(a: &[S], b: &[S], f: impl Fn(S, S) -> S) -> Vec<S> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(S::zero);
            let y = b.get(i).cloned().unwrap_or_else(S::zero);
            f(x, y)
        })
        .collect()
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let d = if o.d.is_empty() {
            self.d
        } else if self.d.is_empty() {
            o.d
        } else {
            zip_with(&self.d, &o.d, |x, y| x + y)
        };
        Dual { v: self.v + o.v, d }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let d = if o.d.is_empty() {
            self.d
        } else {
            zip_with(&self.d, &o.d, |x, y| x - y)
        };
        Dual { v: self.v - o.v, d }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let d = match (self.d.is_empty(), o.d.is_empty()) {
            (true, true) => Vec::new(),
            (false, true) => self.d.iter().map(|x| x.clone() * o.v.clone()).collect(),
            (true, false) => o.d.iter().map(|y| self.v.clone() * y.clone()).collect(),
            (false, false) => {
                let (av, bv) = (self.v.clone(), o.v.clone());
                zip_with(&self.d, &o.d, |x, y| x * bv.clone() + av.clone() * y)
            }
        };
        Dual { v: self.v * o.v, d }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.v.clone() / o.v.clone();
        let d = if o.d.is_empty() {
            self.d.iter().map(|x| x.clone() / o.v.clone()).collect()
        } else {
            let (qq, bv) = (q.clone(), o.v.clone());
            zip_with(&self.d, &o.d, |x, y| (x - qq.clone() * y) / bv.clone())
        };
        Dual { v: q, d }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            v: -self.v,
            d: self.d.into_iter().map(|x| -x).collect(),
        }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn cst(v: f64) -> Self {
        Dual::constant(S::cst(v))
    }
    fn re(&self) -> f64 {
        self.v.re()
    }
    fn sin(&self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e.clone(), e)
    }
    fn ln(&self) -> Self {
        self.chain(self.v.ln(), S::cst(1.0) / self.v.clone())
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s.clone(), S::cst(0.5) / s)
    }
    fn abs(&self) -> Self {
        let r = self.v.re();
        let sign = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.v.abs(), S::cst(sign))
    }
    fn tanh(&self) -> Self {
        let t = self.v.tanh();
        self.chain(t.clone(), S::cst(1.0) - t.clone() * t)
    }
    fn powf(&self, e: f64) -> Self {
        if e == 0.0 {
            return Dual::constant(S::cst(1.0));
        }
        self.chain(self.v.powf(e), self.v.powf(e - 1.0).scale(e))
    }
}

/// Value and gradient of `f` at `x`.
pub fn gradient<S, F>(f: F, x: &[S]) -> crate::Result<(S, Vec<S>)>
where
    S: Scalar,
    F: FnOnce(&[Dual<S>]) -> crate::Result<Dual<S>>,
{
    let out = f(&seed(x))?;
    let g = (0..x.len()).map(|i| out.deriv(i)).collect();
    Ok((out.v, g))
}

/// Value and Jacobian (row k = gradient of component k) of `f` at `x`.
pub fn jacobian<S, F>(f: F, x: &[S]) -> crate::Result<(Vec<S>, Vec<Vec<S>>)>
where
    S: Scalar,
    F: FnOnce(&[Dual<S>]) -> crate::Result<Vec<Dual<S>>>,
{
    let out = f(&seed(x))?;
    let n = x.len();
    let vals = out.iter().map(|c| c.v.clone()).collect();
    let jac = out
        .iter()
        .map(|c| (0..n).map(|i| c.deriv(i)).collect())
        .collect();
    Ok((vals, jac))
}

/// Symmetrized Hessian of `f` at `x` through nested cells.
pub fn hessian<S, F>(f: F, x: &[S]) -> crate::Result<(S, Vec<S>, Vec<Vec<S>>)>
where
    S: Scalar,
    F: FnOnce(&[Dual<Dual<S>>]) -> crate::Result<Dual<Dual<S>>>,
{
    let n = x.len();
    let inner = seed(x);
    let outer: Vec<Dual<Dual<S>>> = inner
        .into_iter()
        .enumerate()
        .map(|(i, xi)| {
            let mut d = vec![Dual::<S>::cst(0.0); n];
            d[i] = Dual::cst(1.0);
            Dual { v: xi, d }
        })
        .collect();
    let out = f(&outer)?;
    let value = out.v.v.clone();
    let grad: Vec<S> = (0..n).map(|i| out.v.deriv(i)).collect();
    let raw: Vec<Vec<S>> = (0..n)
        .map(|i| (0..n).map(|j| out.deriv(i).deriv(j)).collect())
        .collect();
    let mut h = raw.clone();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                h[i][j] = (raw[i][j].clone() + raw[j][i].clone()).scale(0.5);
            }
        }
    }
    Ok((value, grad, h))
}
