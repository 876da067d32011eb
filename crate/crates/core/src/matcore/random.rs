//! Seeded random matrix ensembles.

use rand::Rng;
use rand_distr::StandardNormal;

use super::herm::HermMatrix;
use super::matrix::{CMatrix, C64};

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with independent standard complex Gaussian entries (`E|z|² = 1`).
pub fn random_cmatrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, |_, _| C64::new(normal(rng) * s, normal(rng) * s))
}

/// Gaussian Hermitian matrix: real diagonal with standard deviation `spread`,
/// complex off-diagonal entries with `E|h_jk|² = spread²`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> HermMatrix {
    let s = spread * std::f64::consts::FRAC_1_SQRT_2;
    let mut h = CMatrix::zeros(n);
    for j in 0..n {
        h[(j, j)] = C64::new(normal(rng) * spread, 0.0);
        for k in (j + 1)..n {
            let z = C64::new(normal(rng) * s, normal(rng) * s);
            h[(j, k)] = z;
            h[(k, j)] = z.conj();
        }
    }
    HermMatrix::from_hermitian_part(&h)
}

/// Haar-ish unitary from Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_cmatrix(rng, n);
    let mut cols: Vec<Vec<C64>> = (0..n).map(|k| (0..n).map(|j| g[(j, k)]).collect()).collect();
    for k in 0..n {
        for _ in 0..2 {
            for p in 0..k {
                let proj: C64 = (0..n).map(|j| cols[p][j].conj() * cols[k][j]).sum();
                for j in 0..n {
                    let d = cols[p][j] * proj;
                    cols[k][j] -= d;
                }
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[k].iter_mut() {
            *z /= norm;
        }
    }
    CMatrix::from_fn(n, |j, k| cols[k][j])
}
