//! Forward-mode dual numbers with dense tangent vectors.
//!
//! `Jet<T>` carries a value and one tangent per seeded variable. Nesting
//! (`Jet<Jet<f64>>`) yields exact second derivatives; deeper nesting gives
//! higher orders when an oracle needs to differentiate a gradient.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by plain reals and dual numbers.
///
/// Loss evaluators are written once against this trait and evaluated either
/// on `f64` (values only) or on nested jets (exact derivatives).
pub trait Real:
    Clone + fmt::Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    /// Innermost real value.
    fn re(&self) -> f64;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn recip(&self) -> Self;

    fn scale(&self, k: f64) -> Self {
        self.clone() * Self::cst(k)
    }

    fn add_cst(&self, k: f64) -> Self {
        self.clone() + Self::cst(k)
    }

    /// Logistic function, evaluated on the stable branch for the sign of the
    /// argument.
    fn sigmoid(&self) -> Self {
        if self.re() >= 0.0 {
            (-self.clone()).exp().add_cst(1.0).recip()
        } else {
            let e = self.exp();
            e.clone() / e.add_cst(1.0)
        }
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn is_finite(&self) -> bool;
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// First-order forward-mode dual number over `T`.
///
/// An empty tangent vector stands for the zero tangent, so constants never
/// need to know how many variables are seeded.
#[derive(Clone, PartialEq)]
pub struct Jet<T> {
    pub v: T,
    pub d: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        Jet { v, d: Vec::new() }
    }

    /// The `index`-th of `n` independent variables, with value `v`.
    pub fn variable(v: T, index: usize, n: usize) -> Self {
        let mut d = vec![T::cst(0.0); n];
        d[index] = T::cst(1.0);
        Jet { v, d }
    }

    /// Tangent component `i`, zero when absent.
    pub fn tangent(&self, i: usize) -> T {
        self.d.get(i).cloned().unwrap_or_else(|| T::cst(0.0))
    }

    /// Apply a scalar function given its value and derivative at `self.v`.
    fn chain(&self, fv: T, dfv: T) -> Self {
        Jet {
            v: fv,
            d: self.d.iter().map(|t| dfv.clone() * t.clone()).collect(),
        }
    }
}

fn zip_tangents<T: Real>(a: &[T], b: &[T], f: impl Fn(&T, &T) -> T) -> Vec<T> {
    let zero = T::cst(0.0);
    let n = a.len().max(b.len());
    (0..n).map(|i| f(a.get(i).unwrap_or(&zero), b.get(i).unwrap_or(&zero))).collect()
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let d = if rhs.d.is_empty() {
            self.d
        } else if self.d.is_empty() {
            rhs.d
        } else {
            zip_tangents(&self.d, &rhs.d, |a, b| a.clone() + b.clone())
        };
        Jet { v: self.v + rhs.v, d }
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let d = if rhs.d.is_empty() {
            self.d
        } else {
            zip_tangents(&self.d, &rhs.d, |a, b| a.clone() - b.clone())
        };
        Jet { v: self.v - rhs.v, d }
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let d = match (self.d.is_empty(), rhs.d.is_empty()) {
            (true, true) => Vec::new(),
            (false, true) => self.d.into_iter().map(|a| a * rhs.v.clone()).collect(),
            (true, false) => rhs.d.into_iter().map(|b| self.v.clone() * b).collect(),
            (false, false) => zip_tangents(&self.d, &rhs.d, |a, b| a.clone() * rhs.v.clone() + self.v.clone() * b.clone()),
        };
        Jet { v: self.v * rhs.v, d }
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet {
            v: -self.v,
            d: self.d.into_iter().map(|t| -t).collect(),
        }
    }
}

impl<T: Real> Real for Jet<T> {
    fn cst(v: f64) -> Self {
        Jet::constant(T::cst(v))
    }

    fn re(&self) -> f64 {
        self.v.re()
    }

    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e.clone(), e)
    }

    fn ln(&self) -> Self {
        self.chain(self.v.ln(), self.v.recip())
    }

    fn recip(&self) -> Self {
        let r = self.v.recip();
        let dr = -(r.clone() * r.clone());
        self.chain(r, dr)
    }

    fn scale(&self, k: f64) -> Self {
        Jet {
            v: self.v.scale(k),
            d: self.d.iter().map(|t| t.scale(k)).collect(),
        }
    }

    fn add_cst(&self, k: f64) -> Self {
        Jet {
            v: self.v.add_cst(k),
            d: self.d.clone(),
        }
    }

    fn sigmoid(&self) -> Self {
        let s = self.v.sigmoid();
        let ds = s.clone() * (-s.clone()).add_cst(1.0);
        self.chain(s, ds)
    }

    fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d.iter().all(Real::is_finite)
    }
}

impl<T: fmt::Debug> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet({:?}; {:?})", self.v, self.d)
    }
}

/// Second-order jet over `n` variables: value, gradient and Hessian.
pub type Jet2 = Jet<Jet<f64>>;

/// Seed variable `index` of `n` for exact second-order evaluation.
pub fn seed2(v: f64, index: usize, n: usize) -> Jet2 {
    let inner = Jet::variable(v, index, n);
    let mut d = vec![Jet::constant(0.0); n];
    d[index] = Jet::constant(1.0);
    Jet { v: inner, d }
}

/// Split a second-order jet into (value, gradient, row-major Hessian).
pub fn unpack2(j: &Jet2, n: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let value = j.v.v;
    let grad: Vec<f64> = (0..n).map(|i| j.v.tangent(i)).collect();
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        let row = j.tangent(i);
        for k in 0..n {
            hess[i * n + k] = row.tangent(k);
        }
    }
    (value, grad, hess)
}
