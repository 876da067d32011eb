//! Cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies a real plane rotation, so the whole update is a
//! single unitary similarity `a ← V* a V` touching rows and columns `p, q`.
//!
//! Nearly scalar inputs are decomposed through `a − s·1` with `s` the mean of
//! the diagonal. Eigenvectors are unchanged by the shift, and the convergence
//! threshold is then relative to the deviation from a scalar matrix, which
//! keeps nearly-flat matrices resolvable.

use super::herm::HermMatrix;
use super::matrix::{CMatrix, C64};
use super::{EPS_EIG, MAX_SWEEPS};

/// Pivot size, relative to `√|a_pp·a_qq|`, treated as converged.
const EPS_REL: f64 = 4.0 * f64::EPSILON;
use crate::error::{Error, Result};

/// Spectral decomposition `a = U·diag(λ)·U*` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors.
    pub vectors: CMatrix,
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.values.last().expect("empty decomposition")
    }

    /// `U·diag(f(λ))·U*`, re-Hermitised.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermMatrix {
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        self.with_values(&fl)
    }

    /// `U·diag(d)·U*` for arbitrary real `d`.
    pub fn with_values(&self, d: &[f64]) -> HermMatrix {
        let n = self.dim();
        let u = &self.vectors;
        let mut ud = u.clone();
        for j in 0..n {
            for k in 0..n {
                ud[(j, k)] *= d[k];
            }
        }
        HermMatrix::from_hermitian_part(&(&ud * &u.adjoint()))
    }

    /// `U·diag(f(λ))·U*` for a complex-valued `f`; not Hermitian in general.
    pub fn apply_complex(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.dim();
        let u = &self.vectors;
        let fl: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let ud = CMatrix::from_fn(n, |j, k| u[(j, k)] * fl[k]);
        &ud * &u.adjoint()
    }

    /// `U*·a·U`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &(&self.vectors.adjoint() * a) * &self.vectors
    }

    /// `U·a·U*`.
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &(&self.vectors * a) * &self.vectors.adjoint()
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                s += a[(j, k)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn negligible(a: &CMatrix, p: usize, q: usize, floor: f64) -> bool {
    let apq = a[(p, q)].norm();
    apq <= floor || apq <= EPS_REL * (a[(p, p)].re * a[(q, q)].re).abs().sqrt()
}

/// Every pivot is negligible next to its diagonal pair (or to `floor`).
fn relatively_diagonal(a: &CMatrix, floor: f64) -> bool {
    let n = a.dim();
    (0..n).all(|p| ((p + 1)..n).all(|q| negligible(a, p, q, floor)))
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Sweeps stop once the off-diagonal mass is below `EPS_EIG·‖a‖₂` and every
/// pivot is negligible relative to its diagonal pair, which resolves small
/// eigenvalues of positive matrices to high relative accuracy.
pub fn eigh(a: &HermMatrix) -> Result<EigDecomp> {
    let n = a.dim();
    let mean = (0..n).map(|j| a[(j, j)].re).sum::<f64>() / n as f64;
    let deviation = a.shift(-mean).norm_hs();
    // Shift only near-scalar inputs: every eigenvalue then stays within a
    // factor two of the mean, so the shift costs no relative accuracy.
    let shift = if deviation <= 0.5 * mean.abs() { mean } else { 0.0 };
    let mut w: CMatrix = a.shift(-shift).into();
    // eigenvectors are accumulated as rows so rotations touch contiguous memory
    let mut ut = CMatrix::identity(n);

    let scale = w.norm_hs();
    let target = EPS_EIG * scale;
    let floor = f64::EPSILON * f64::EPSILON * scale;
    let mut sweeps = 0;
    loop {
        let residual = off_diagonal_norm(&w);
        if residual <= target && (relatively_diagonal(&w, floor) || sweeps == MAX_SWEEPS) {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual: residual / scale });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if !negligible(&w, p, q, floor) {
                    rotate(&mut w, &mut ut, p, q);
                }
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|j| w[(j, j)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i] + shift).collect();
    let vectors = CMatrix::from_fn(n, |j, k| ut[(order[k], j)]);
    Ok(EigDecomp { values, vectors })
}

/// Annihilates `w[p][q]` with the unitary `V = diag(1, e^{-iφ})·G(θ)`.
fn rotate(w: &mut CMatrix, ut: &mut CMatrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let n = w.dim();
    let app = w[(p, p)].re;
    let aqq = w[(q, q)].re;
    let phase = apq / r;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau == 0.0 { 1.0 } else { tau.signum() / (tau.abs() + tau.hypot(1.0)) };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;

    // V_pp = c, V_pq = s, V_qp = −s·e^{−iφ}, V_qq = c·e^{−iφ}
    let vpp = C64::new(c, 0.0);
    let vpq = C64::new(s, 0.0);
    let vqp = -phase.conj() * s;
    let vqq = phase.conj() * c;

    // W ← V*·W·V. Rows p, q change by the left factor only (outside the
    // 2×2 block); columns p, q follow by Hermitian symmetry.
    let d = w.as_mut_slice();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let apk = d[p * n + k];
        let aqk = d[q * n + k];
        let np = vpp.conj() * apk + vqp.conj() * aqk;
        let nq = vpq.conj() * apk + vqq.conj() * aqk;
        d[p * n + k] = np;
        d[q * n + k] = nq;
        d[k * n + p] = np.conj();
        d[k * n + q] = nq.conj();
    }
    let bv_pp = vpp * app + apq * vqp;
    let bv_qp = apq.conj() * vpp + vqp * aqq;
    let bv_pq = vpq * app + apq * vqq;
    let bv_qq = apq.conj() * vpq + vqq * aqq;
    d[p * n + p] = C64::new((vpp.conj() * bv_pp + vqp.conj() * bv_qp).re, 0.0);
    d[q * n + q] = C64::new((vpq.conj() * bv_pq + vqq.conj() * bv_qq).re, 0.0);
    d[p * n + q] = C64::new(0.0, 0.0);
    d[q * n + p] = C64::new(0.0, 0.0);

    // U ← U·V, stored transposed
    let (rp, rq) = if p < q {
        let (lo, hi) = ut.as_mut_slice().split_at_mut(q * n);
        (&mut lo[p * n..(p + 1) * n], &mut hi[..n])
    } else {
        unreachable!("pivots are visited with p < q")
    };
    for (up, uq) in rp.iter_mut().zip(rq.iter_mut()) {
        let (a, b) = (*up, *uq);
        *up = a * vpp + b * vqp;
        *uq = a * vpq + b * vqq;
    }
}
