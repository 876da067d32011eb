use std::ops::Deref;

use super::matrix::CMatrix;
use super::ETA_HERM;
use crate::error::{Error, Result};

/// A complex matrix known to be Hermitian.
///
/// Construction validates the input against [`ETA_HERM`] (relative to the
/// largest entry) and then stores the exact Hermitian part `(a + a*)/2`, so
/// downstream code can rely on exact self-adjointness.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix(CMatrix);

impl HermMatrix {
    pub fn new(a: CMatrix) -> Result<Self> {
        let tol = ETA_HERM * a.max_abs().max(1.0);
        let defect = a.hermitian_defect();
        if !(defect <= tol) {
            return Err(Error::NotHermitian { defect, tol });
        }
        Ok(HermMatrix(a.hermitian_part()))
    }

    /// Symmetrises without validating. For values that are Hermitian up to
    /// arithmetic drift by construction.
    pub fn from_hermitian_part(a: &CMatrix) -> Self {
        HermMatrix(a.hermitian_part())
    }

    pub fn identity(n: usize) -> Self {
        HermMatrix(CMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        HermMatrix(CMatrix::zeros(n))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        HermMatrix(CMatrix::from_real_diag(diag))
    }

    pub fn as_cmatrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_cmatrix(self) -> CMatrix {
        self.0
    }

    /// Real trace.
    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, alpha: f64) -> HermMatrix {
        HermMatrix(self.0.scale(alpha))
    }

    pub fn add(&self, other: &HermMatrix) -> HermMatrix {
        HermMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermMatrix) -> HermMatrix {
        HermMatrix(&self.0 - &other.0)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &HermMatrix) -> HermMatrix {
        let mut out = self.0.clone();
        out.axpy(alpha, &other.0);
        HermMatrix(out)
    }

    /// `self + alpha·1`.
    pub fn shift(&self, alpha: f64) -> HermMatrix {
        let mut out = self.0.clone();
        for j in 0..out.dim() {
            out[(j, j)].re += alpha;
        }
        HermMatrix(out)
    }
}

impl Deref for HermMatrix {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

impl From<HermMatrix> for CMatrix {
    fn from(h: HermMatrix) -> CMatrix {
        h.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::C64;

    #[test]
    fn rejects_non_hermitian() {
        let a = CMatrix::unit(2, 0, 1);
        assert!(matches!(HermMatrix::new(a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn absorbs_small_drift() {
        let mut a = CMatrix::from_real_rows(&[&[1.0, 0.5], &[0.5, 2.0]]);
        a[(0, 1)] += C64::new(1e-13, 0.0);
        a[(1, 1)] += C64::new(0.0, 1e-13);
        let h = HermMatrix::new(a).unwrap();
        assert_eq!(h.hermitian_defect(), 0.0);
        assert_eq!(h[(1, 1)].im, 0.0);
    }
}
