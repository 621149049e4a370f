//! Update directions of the second-order learners, computed from a
//! [`DerivativeBundle`] of whatever losses the learner is optimizing.

use nalgebra::{DMatrix, DVector};

use crate::derivkit::{stack, DerivativeBundle};
use crate::error::{Error, Result};

/// Quantities of the SOS dual criterion at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SosDiagnostics {
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub xi_norm: f64,
}

/// Pieces shared by LookAhead, LOLA and SOS.
#[derive(Clone, Debug)]
pub struct ShapingTerms {
    pub xi: DVector<f64>,
    /// ξ0 = (I − αH_o)ξ
    pub xi0: DVector<f64>,
    /// χ = (χ1, χ2) = ((∇21 L2)ᵀ ∇2 L1, (∇12 L1)ᵀ ∇1 L2)
    pub chi: DVector<f64>,
}

pub fn shaping_terms(bundle: &DerivativeBundle, alpha: f64) -> ShapingTerms {
    let g11 = bundle.grad(0, 0);
    let g21 = bundle.grad(0, 1);
    let g12 = bundle.grad(1, 0);
    let g22 = bundle.grad(1, 1);
    let h12_1 = bundle.hess(0, 0, 1);
    let h21_2 = bundle.hess(1, 1, 0);

    let xi = stack(g11, g22);
    let ho_xi = stack(&(h12_1 * g22), &(h21_2 * g11));
    let xi0 = &xi - ho_xi * alpha;
    let chi = stack(&(h21_2.transpose() * g21), &(h12_1.transpose() * g12));
    ShapingTerms { xi, xi0, chi }
}

/// LookAhead direction (I − αH_o)ξ.
pub fn lookahead_direction(bundle: &DerivativeBundle, alpha: f64) -> DVector<f64> {
    shaping_terms(bundle, alpha).xi0
}

/// LOLA direction (I − αH_o)ξ − αχ.
pub fn lola_direction(bundle: &DerivativeBundle, alpha: f64) -> DVector<f64> {
    let t = shaping_terms(bundle, alpha);
    t.xi0 - t.chi * alpha
}

/// ξ0 − pαχ for a caller-chosen interpolation weight `p`.
pub fn interpolated_direction(bundle: &DerivativeBundle, alpha: f64, p: f64) -> DVector<f64> {
    let t = shaping_terms(bundle, alpha);
    t.xi0 - t.chi * (p * alpha)
}

/// SOS direction ξ_p with `p` chosen by the two-part criterion:
/// `p1` keeps the shaping term from opposing LookAhead, `p2` shrinks `p`
/// quadratically near fixed points.
pub fn sos_direction(bundle: &DerivativeBundle, alpha: f64, a: f64, b: f64) -> (DVector<f64>, SosDiagnostics) {
    let t = shaping_terms(bundle, alpha);
    let shaping = &t.chi * (-alpha);
    let inner = shaping.dot(&t.xi0);
    let p1 = if inner >= 0.0 {
        // a zero inner product would divide by zero in the other branch
        1.0
    } else {
        f64::min(1.0, -a * t.xi0.norm_squared() / inner)
    };
    let xi_norm = t.xi.norm();
    let p2 = if xi_norm < b { xi_norm * xi_norm } else { 1.0 };
    let p = p1.min(p2);
    let dir = t.xi0 + shaping * p;
    (dir, SosDiagnostics { p, p1, p2, xi_norm })
}

/// CGD step Δθ = −β·M⁻¹ξ with M = [[I, α∇12 L1], [α∇21 L2, I]].
pub fn cgd_step(bundle: &DerivativeBundle, alpha: f64, beta: f64) -> Result<DVector<f64>> {
    let (d1, d2) = bundle.dims();
    let n = d1 + d2;
    let mut m = DMatrix::<f64>::identity(n, n);
    m.view_mut((0, d1), (d1, d2)).copy_from(&(bundle.hess(0, 0, 1) * alpha));
    m.view_mut((d1, 0), (d2, d1)).copy_from(&(bundle.hess(1, 1, 0) * alpha));

    let sv = m.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(Error::Singular { condition });
    }
    let solved = m.lu().solve(&bundle.xi()).ok_or(Error::Singular { condition })?;
    Ok(solved * -beta)
}
