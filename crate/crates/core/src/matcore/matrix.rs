use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, C64::new(1.0, 0.0))
    }

    pub fn scalar(n: usize, alpha: C64) -> Self {
        let mut m = Self::zeros(n);
        for j in 0..n {
            m[(j, j)] = alpha;
        }
        m
    }

    /// Elementary matrix `e_{jk}` (zero-based indices).
    pub fn unit(n: usize, j: usize, k: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(j, k)] = C64::new(1.0, 0.0);
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                data.push(f(j, k));
            }
        }
        CMatrix { n, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (j, &d) in diag.iter().enumerate() {
            m[(j, j)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds from row-major entries; `entries.len()` must be a perfect square.
    pub fn from_row_major(entries: Vec<C64>) -> Result<Self> {
        let n = (entries.len() as f64).sqrt().round() as usize;
        if n * n != entries.len() {
            return Err(Error::Validation(format!(
                "entry count {} is not a perfect square",
                entries.len()
            )));
        }
        Ok(CMatrix { n, data: entries })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |j, k| C64::new(rows[j][k], 0.0))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn check_dim(&self, other: &CMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(())
    }

    /// Matrix product, failing on a dimension mismatch.
    pub fn mul(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_dim(other)?;
        Ok(self.matmul(other))
    }

    fn matmul(&self, other: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for j in 0..n {
            let row = &self.data[j * n..(j + 1) * n];
            let dst = &mut out.data[j * n..(j + 1) * n];
            for (l, &a) in row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let src = &other.data[l * n..(l + 1) * n];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |j, k| self[(k, j)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |j, k| self[(k, j)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|j| self[(j, j)]).sum()
    }

    /// Hilbert–Schmidt inner product `tr(a* b)`.
    pub fn hs_inner(&self, other: &CMatrix) -> Result<C64> {
        self.check_dim(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    /// Hilbert–Schmidt (Frobenius) norm.
    pub fn norm_hs(&self) -> f64 {
        self.norm_hs_sqr().sqrt()
    }

    pub fn norm_hs_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `‖self - other‖₂` in the Hilbert–Schmidt norm.
    pub fn dist_hs(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|a_jk - conj(a_kj)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in j..n {
                worst = worst.max((self[(j, k)] - self[(k, j)].conj()).norm());
            }
        }
        worst
    }

    /// `(a + a*)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        let n = self.n;
        let mut out = self.clone();
        for j in 0..n {
            out[(j, j)] = C64::new(self[(j, j)].re, 0.0);
            for k in (j + 1)..n {
                let z = (self[(j, k)] + self[(k, j)].conj()) * 0.5;
                out[(j, k)] = z;
                out[(k, j)] = z.conj();
            }
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> CMatrix {
        self.map(|z| z * alpha)
    }

    pub fn scale_c(&self, alpha: C64) -> CMatrix {
        self.map(|z| z * alpha)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    /// `self + alpha * other` in place.
    pub fn axpy(&mut self, alpha: f64, other: &CMatrix) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * alpha;
        }
    }

    /// Commutator `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        }
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, mut e: u32) -> CMatrix {
        let mut base = self.clone();
        let mut acc = CMatrix::identity(self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Column-stacked vectorisation in row-major order: index `j*n + k`.
    pub fn vec(&self) -> Vec<C64> {
        self.data.clone()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.n;
        (0..n).all(|j| (0..n).all(|k| j == k || self[(j, k)] == C64::new(0.0, 0.0)))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (j, k): (usize, usize)) -> &C64 {
        &self.data[j * self.n + k]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut C64 {
        &mut self.data[j * self.n + k]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        self.matmul(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.n, self.n)?;
        for j in 0..self.n {
            write!(f, "  ")?;
            for k in 0..self.n {
                let z = self[(j, k)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_is_neutral() {
        let a = CMatrix::from_fn(3, |j, k| c(j as f64 - 0.5 * k as f64, (j * k) as f64));
        assert_eq!(CMatrix::identity(3).mul(&a).unwrap(), a);
        assert_eq!(a.mul(&CMatrix::identity(3)).unwrap(), a);
    }

    #[test]
    fn unit_matrix_algebra() {
        let e12 = CMatrix::unit(2, 0, 1);
        let e21 = CMatrix::unit(2, 1, 0);
        assert_eq!(e12.mul(&e21).unwrap(), CMatrix::unit(2, 0, 0));
    }

    #[test]
    fn clock_times_shift_n2() {
        let u = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let v = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let expected = CMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert_eq!(u.mul(&v).unwrap(), expected);
    }

    #[test]
    fn mul_dimension_mismatch() {
        let err = CMatrix::zeros(2).mul(&CMatrix::zeros(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 3 });
        assert!(CMatrix::zeros(2).hs_inner(&CMatrix::zeros(3)).is_err());
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(CMatrix::identity(4).adjoint(), CMatrix::identity(4));
        let a = CMatrix::unit(2, 0, 1).scale_c(c(0.0, 1.0));
        let b = CMatrix::unit(2, 1, 0).scale_c(c(0.0, -1.0));
        assert_eq!(a.adjoint(), b);
    }

    #[test]
    fn trace_and_inner_examples() {
        assert_eq!(CMatrix::identity(5).trace(), c(5.0, 0.0));
        assert_eq!(CMatrix::unit(3, 0, 1).trace(), c(0.0, 0.0));
        let one = CMatrix::identity(3);
        assert_eq!(one.hs_inner(&one).unwrap(), c(3.0, 0.0));
        let e12 = CMatrix::unit(3, 0, 1);
        assert_eq!(e12.hs_inner(&e12).unwrap(), c(1.0, 0.0));
        assert_eq!(CMatrix::zeros(3).hs_inner(&CMatrix::zeros(3)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn from_row_major_rejects_non_square() {
        assert!(CMatrix::from_row_major(vec![c(1.0, 0.0); 5]).is_err());
        assert_eq!(CMatrix::from_row_major(vec![c(1.0, 0.0); 9]).unwrap().dim(), 3);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let a = CMatrix::from_fn(3, |j, k| c(0.1 * j as f64, 0.2 * k as f64 - 0.1));
        let direct = &(&(&a * &a) * &a) * &(&a * &a);
        assert!(a.powi(5).max_abs_diff(&direct) < 1e-14);
        assert_eq!(a.powi(0), CMatrix::identity(3));
    }
}
