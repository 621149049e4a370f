//! Exact first- and second-order derivatives of two-player games, plus a
//! finite-difference verifier that serves as the independent check.
//!
//! Block convention: `hess[i][j]` of a loss is `∇_ij L`, a `d_i × d_j` matrix
//! whose rows follow the first differentiation block.

mod dual;

pub use dual::{seed2, unpack2, Jet, Jet2, Real};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::games::GameDefinition;

/// Value, block gradients and block Hessians of one loss.
#[derive(Clone, Debug, PartialEq)]
pub struct LossDerivs {
    pub value: f64,
    /// `grad[i]` = ∇_i L
    pub grad: [DVector<f64>; 2],
    /// `hess[i][j]` = ∇_ij L
    pub hess: [[DMatrix<f64>; 2]; 2],
}

impl LossDerivs {
    fn from_joint(value: f64, grad: &[f64], hess: &[f64], d1: usize) -> Self {
        let n = grad.len();
        let d2 = n - d1;
        let ranges = [(0, d1), (d1, d2)];
        let g = |b: usize| DVector::from_column_slice(&grad[ranges[b].0..ranges[b].0 + ranges[b].1]);
        let h = |a: usize, b: usize| {
            let (ra, na) = ranges[a];
            let (rb, nb) = ranges[b];
            DMatrix::from_fn(na, nb, |r, c| hess[(ra + r) * n + rb + c])
        };
        LossDerivs {
            value,
            grad: [g(0), g(1)],
            hess: [[h(0, 0), h(0, 1)], [h(1, 0), h(1, 1)]],
        }
    }

    /// `self + k·other`, block by block.
    pub fn plus_scaled(&self, other: &LossDerivs, k: f64) -> LossDerivs {
        LossDerivs {
            value: self.value + k * other.value,
            grad: [0, 1].map(|i| &self.grad[i] + &other.grad[i] * k),
            hess: [0, 1].map(|i| [0, 1].map(|j| &self.hess[i][j] + &other.hess[i][j] * k)),
        }
    }
}

/// Derivatives of both losses at one joint parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeBundle {
    /// `loss[k]` holds the derivatives of L_{k+1}.
    pub loss: [LossDerivs; 2],
}

impl DerivativeBundle {
    pub fn dims(&self) -> (usize, usize) {
        (self.loss[0].grad[0].len(), self.loss[0].grad[1].len())
    }

    pub fn values(&self) -> [f64; 2] {
        [self.loss[0].value, self.loss[1].value]
    }

    /// ∇_block L_{loss+1}
    pub fn grad(&self, loss: usize, block: usize) -> &DVector<f64> {
        &self.loss[loss].grad[block]
    }

    /// ∇_{ij} L_{loss+1}
    pub fn hess(&self, loss: usize, i: usize, j: usize) -> &DMatrix<f64> {
        &self.loss[loss].hess[i][j]
    }

    /// Simultaneous gradient ξ = (∇1 L1, ∇2 L2).
    pub fn xi(&self) -> DVector<f64> {
        stack(self.grad(0, 0), self.grad(1, 1))
    }
}

pub(crate) fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

fn check_dims(game: &GameDefinition, theta1: &[f64], theta2: &[f64]) -> Result<()> {
    let (d1, d2) = game.dims();
    if theta1.len() != d1 || theta2.len() != d2 {
        return Err(Error::Config(format!(
            "{} expects parameter blocks of length ({d1}, {d2}), got ({}, {})",
            game.name,
            theta1.len(),
            theta2.len()
        )));
    }
    if let Some(bad) = theta1.iter().chain(theta2).find(|v| !v.is_finite()) {
        return Err(Error::Config(format!("non-finite parameter {bad}")));
    }
    Ok(())
}

/// Exact values, gradients and second-order blocks of both losses.
pub fn eval_bundle(game: &GameDefinition, theta1: &[f64], theta2: &[f64]) -> Result<DerivativeBundle> {
    check_dims(game, theta1, theta2)?;
    let (d1, d2) = game.dims();
    let n = d1 + d2;
    let x1: Vec<Jet2> = theta1.iter().enumerate().map(|(i, &v)| seed2(v, i, n)).collect();
    let x2: Vec<Jet2> = theta2.iter().enumerate().map(|(i, &v)| seed2(v, d1 + i, n)).collect();
    let [l1, l2] = game.losses(&x1, &x2)?;
    let mut out = Vec::with_capacity(2);
    for (k, l) in [l1, l2].iter().enumerate() {
        if !l.is_finite() {
            return Err(Error::Evaluation { player: k + 1 });
        }
        let (v, g, h) = unpack2(l, n);
        out.push(LossDerivs::from_joint(v, &g, &h, d1));
    }
    let l2 = out.pop().unwrap();
    let l1 = out.pop().unwrap();
    Ok(DerivativeBundle { loss: [l1, l2] })
}

/// Finite-difference comparison of one derivative block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCheck {
    pub name: String,
    pub max_abs: f64,
    pub max_rel: f64,
    /// Largest magnitude entry of the exact block.
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub blocks: Vec<BlockCheck>,
    pub tol: f64,
    pub passed: bool,
}

impl VerificationReport {
    pub fn worst_abs(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_abs).fold(0.0, f64::max)
    }
}

/// Compare every block of [`eval_bundle`] against central differences of the
/// plain loss evaluator.
///
/// Gradients use step `step`; second-order blocks use `sqrt(step)`, which
/// balances truncation against the `eps/h²` rounding of the four-point
/// stencil. A block passes when its worst absolute error is strictly below
/// `tol`.
pub fn fd_verify(game: &GameDefinition, theta1: &[f64], theta2: &[f64], step: f64, tol: f64) -> Result<VerificationReport> {
    if step <= 0.0 || tol < 0.0 {
        return Err(Error::Config(format!("fd_verify needs step > 0 and tol >= 0 (got {step}, {tol})")));
    }
    let bundle = eval_bundle(game, theta1, theta2)?;
    let (d1, d2) = game.dims();
    let n = d1 + d2;
    let joint: Vec<f64> = theta1.iter().chain(theta2).copied().collect();
    let f = |x: &[f64]| -> Result<[f64; 2]> { game.eval(&x[..d1], &x[d1..]) };
    let shifted = |moves: &[(usize, f64)]| -> Result<[f64; 2]> {
        let mut x = joint.clone();
        for &(i, dx) in moves {
            x[i] += dx;
        }
        f(&x)
    };

    let mut fd_grad = vec![[0.0; 2]; n];
    for (i, g) in fd_grad.iter_mut().enumerate() {
        let p = shifted(&[(i, step)])?;
        let m = shifted(&[(i, -step)])?;
        *g = [0, 1].map(|k| (p[k] - m[k]) / (2.0 * step));
    }
    let h = step.sqrt();
    let centre = f(&joint)?;
    let mut fd_hess = vec![[0.0; 2]; n * n];
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                let p = shifted(&[(i, h)])?;
                let m = shifted(&[(i, -h)])?;
                [0, 1].map(|k| (p[k] - 2.0 * centre[k] + m[k]) / (h * h))
            } else {
                let pp = shifted(&[(i, h), (j, h)])?;
                let pm = shifted(&[(i, h), (j, -h)])?;
                let mp = shifted(&[(i, -h), (j, h)])?;
                let mm = shifted(&[(i, -h), (j, -h)])?;
                [0, 1].map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h * h))
            };
            fd_hess[i * n + j] = v;
            fd_hess[j * n + i] = v;
        }
    }

    let offset = [0, d1];
    let dims = [d1, d2];
    let mut blocks = Vec::new();
    for k in 0..2 {
        for b in 0..2 {
            let exact = bundle.grad(k, b);
            let approx = DVector::from_fn(dims[b], |r, _| fd_grad[offset[b] + r][k]);
            blocks.push(compare(format!("grad{}_L{}", b + 1, k + 1), exact.as_slice(), approx.as_slice()));
        }
        for a in 0..2 {
            for b in 0..2 {
                let exact = bundle.hess(k, a, b);
                let approx = DMatrix::from_fn(dims[a], dims[b], |r, c| fd_hess[(offset[a] + r) * n + offset[b] + c][k]);
                blocks.push(compare(
                    format!("hess{}{}_L{}", a + 1, b + 1, k + 1),
                    exact.as_slice(),
                    approx.as_slice(),
                ));
            }
        }
    }
    let passed = blocks.iter().all(|b| b.max_abs < tol);
    Ok(VerificationReport { blocks, tol, passed })
}

fn compare(name: String, exact: &[f64], approx: &[f64]) -> BlockCheck {
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for (e, a) in exact.iter().zip(approx) {
        let err = (e - a).abs();
        max_abs = max_abs.max(err);
        max_rel = max_rel.max(err / e.abs().max(1e-300));
        norm = norm.max(e.abs());
    }
    BlockCheck {
        name,
        max_abs,
        max_rel,
        norm,
    }
}
