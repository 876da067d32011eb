//! Functional calculus on Hermitian matrices.

use super::eigh::{eigh, EigDecomp};
use super::herm::HermMatrix;
use super::matrix::CMatrix;
use super::{EPS_DK, EPS_POS};
use crate::error::{Error, Result};

/// `f(a)` through the spectral decomposition of `a`.
pub fn mat_fn(a: &HermMatrix, f: impl Fn(f64) -> f64) -> Result<HermMatrix> {
    Ok(eigh(a)?.apply(f))
}

pub fn mat_exp(a: &HermMatrix) -> Result<HermMatrix> {
    mat_fn(a, f64::exp)
}

pub fn mat_log(a: &HermMatrix) -> Result<HermMatrix> {
    let e = eigh(a)?;
    log_from_eig(&e)
}

pub fn mat_inv(a: &HermMatrix) -> Result<HermMatrix> {
    let e = eigh(a)?;
    check_positive(&e)?;
    Ok(e.apply(|l| 1.0 / l))
}

/// Strict positivity guard: `λ_min > EPS_POS·max(1, λ_max)`.
pub fn check_positive(e: &EigDecomp) -> Result<()> {
    let floor = EPS_POS * e.lambda_max().max(1.0);
    let lambda_min = e.lambda_min();
    if !(lambda_min > floor) {
        return Err(Error::NotPositive { lambda_min, floor });
    }
    Ok(())
}

pub fn log_from_eig(e: &EigDecomp) -> Result<HermMatrix> {
    check_positive(e)?;
    Ok(e.apply(f64::ln))
}

/// `log(a / s)`; equals `log a − (log s)·1` with the scalar part removed exactly.
pub fn log_scaled_from_eig(e: &EigDecomp, s: f64) -> Result<HermMatrix> {
    check_positive(e)?;
    Ok(e.apply(|l| (l / s).ln()))
}

/// `Σ log λ_j`, i.e. `log det c` without forming the determinant.
pub fn log_det(c: &HermMatrix) -> Result<f64> {
    let e = eigh(c)?;
    log_det_from_eig(&e)
}

pub fn log_det_from_eig(e: &EigDecomp) -> Result<f64> {
    check_positive(e)?;
    Ok(e.values.iter().map(|l| l.ln()).sum())
}

/// First divided difference of `log` used by the Daleckii–Krein formula.
pub fn log_divided_difference(lj: f64, lk: f64) -> f64 {
    if (lj - lk).abs() > EPS_DK * (lj + lk) {
        (lj / lk).ln() / (lj - lk)
    } else {
        2.0 / (lj + lk)
    }
}

/// Fréchet derivative of `log` at `c` in direction `h`.
pub fn frechet_log(c: &HermMatrix, h: &HermMatrix) -> Result<HermMatrix> {
    c.check_dim(h)?;
    let e = eigh(c)?;
    frechet_log_from_eig(&e, h)
}

pub fn frechet_log_from_eig(e: &EigDecomp, h: &CMatrix) -> Result<HermMatrix> {
    Ok(HermMatrix::from_hermitian_part(&frechet_log_raw(e, h)?))
}

/// [`frechet_log_from_eig`] before projection onto the Hermitian part.
pub fn frechet_log_raw(e: &EigDecomp, h: &CMatrix) -> Result<CMatrix> {
    check_positive(e)?;
    let n = e.dim();
    let mut ht = e.to_eigenbasis(h);
    for j in 0..n {
        for k in 0..n {
            ht[(j, k)] *= log_divided_difference(e.values[j], e.values[k]);
        }
    }
    Ok(e.from_eigenbasis(&ht))
}
