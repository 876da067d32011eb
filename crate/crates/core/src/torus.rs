//! The fuzzy torus: clock and shift generators, position matrices and the
//! derivations and Laplacian built from them.

use std::f64::consts::PI;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::matcore::{eigh, CMatrix, HermMatrix, C64, EPS_FN};

/// How the position matrix `x` (with `u = exp(2πi·x/n)`) is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum XChoice {
    /// `x = diag(0, m, 2m, …, (n−1)m)`.
    Standard,
    /// The standard diagonal reduced modulo `n`.
    ModN,
    /// A user-supplied Hermitian matrix, validated against `u`.
    Custom(HermMatrix),
}

impl XChoice {
    pub fn label(&self) -> &'static str {
        match self {
            XChoice::Standard => "standard",
            XChoice::ModN => "mod-n",
            XChoice::Custom(_) => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusParams {
    pub n: usize,
    pub m: usize,
    pub x_choice: XChoice,
}

impl TorusParams {
    pub fn new(n: usize, m: usize) -> Self {
        TorusParams { n, m, x_choice: XChoice::Standard }
    }

    pub fn with_x_choice(mut self, x_choice: XChoice) -> Self {
        self.x_choice = x_choice;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let TorusParams { n, m, .. } = *self;
        if n < 2 {
            return Err(Error::Parameter(format!("n must be at least 2 (got {n})")));
        }
        if m == 0 || m >= n {
            return Err(Error::Parameter(format!("m must lie in 1..={} (got {m})", n - 1)));
        }
        if m.gcd(&n) != 1 {
            return Err(Error::Parameter(format!(
                "m and n must be coprime (gcd({m}, {n}) = {})",
                m.gcd(&n)
            )));
        }
        Ok(())
    }
}

/// All `m` in `1..n` coprime to `n`.
pub fn coprime_residues(n: usize) -> Vec<usize> {
    (1..n).filter(|m| m.gcd(&n) == 1).collect()
}

/// Linear derivations on `M_n` with an associated Laplacian `δ₁² + δ₂²`.
///
/// [`FuzzyTorus`] is the canonical implementation; the property suites are
/// written against this trait so alternative (or deliberately broken)
/// derivations can be checked by the same code.
pub trait Derivations: Sync {
    fn dim(&self) -> usize;
    fn delta1(&self, a: &CMatrix) -> Result<CMatrix>;
    fn delta2(&self, a: &CMatrix) -> Result<CMatrix>;

    fn laplacian(&self, a: &CMatrix) -> Result<CMatrix> {
        let d1 = self.delta1(&self.delta1(a)?)?;
        let d2 = self.delta2(&self.delta2(a)?)?;
        Ok(&d1 + &d2)
    }
}

/// The fuzzy torus geometry for one choice of `(n, m, x)`.
#[derive(Clone, Debug)]
pub struct FuzzyTorus {
    params: TorusParams,
    q: C64,
    u: CMatrix,
    v: CMatrix,
    f: CMatrix,
    x: HermMatrix,
    y: HermMatrix,
    /// Diagonal of `x` when `x` is exactly diagonal.
    x_diag: Option<Vec<f64>>,
    /// `(x_j − x_k)²` when `x` is diagonal.
    x_gap_sqr: Option<CMatrix>,
    lap_bound: f64,
}

/// `exp(2πi·k/n)` with `k` reduced mod `n` first.
fn root_of_unity(k: i64, n: usize) -> C64 {
    let r = k.rem_euclid(n as i64) as f64;
    C64::from_polar(1.0, 2.0 * PI * r / n as f64)
}

/// `exp(2πi·a/n)` for Hermitian `a`.
pub fn unitary_exp(a: &HermMatrix, n: usize) -> Result<CMatrix> {
    let e = eigh(a)?;
    Ok(e.apply_complex(|l| C64::from_polar(1.0, 2.0 * PI * l / n as f64)))
}

impl FuzzyTorus {
    pub fn build(params: TorusParams) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let m = params.m as i64;
        let q = root_of_unity(m, n);
        let u = CMatrix::from_fn(n, |j, k| if j == k { root_of_unity(m * j as i64, n) } else { C64::new(0.0, 0.0) });
        let v = CMatrix::from_fn(n, |j, k| if k == (j + 1) % n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let inv_sqrt_n = 1.0 / (n as f64).sqrt();
        let f = CMatrix::from_fn(n, |j, k| root_of_unity(-m * (j * k) as i64, n) * inv_sqrt_n);

        let x = match &params.x_choice {
            XChoice::Standard => {
                HermMatrix::from_real_diag(&(0..n).map(|j| (j as i64 * m) as f64).collect::<Vec<_>>())
            }
            XChoice::ModN => HermMatrix::from_real_diag(
                &(0..n).map(|j| ((j as i64 * m) % n as i64) as f64).collect::<Vec<_>>(),
            ),
            XChoice::Custom(x) => {
                if x.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: x.dim() });
                }
                let defect = unitary_exp(x, n)?.dist_hs(&u);
                if defect > EPS_FN * n as f64 {
                    return Err(Error::Validation(format!(
                        "custom x does not satisfy exp(2πi·x/n) = u (defect {defect:.3e})"
                    )));
                }
                x.clone()
            }
        };
        let y = HermMatrix::from_hermitian_part(&(&(&f.adjoint() * &x) * &f));

        let x_diag = x.is_diagonal().then(|| (0..n).map(|j| x[(j, j)].re).collect::<Vec<f64>>());
        let x_gap_sqr = x_diag
            .as_ref()
            .map(|d| CMatrix::from_fn(n, |j, k| C64::new((d[j] - d[k]).powi(2), 0.0)));
        let spread = match &x_diag {
            Some(d) => {
                let hi = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
                hi - lo
            }
            None => {
                let e = eigh(&x)?;
                e.lambda_max() - e.lambda_min()
            }
        };
        // y is unitarily similar to x, so ad_x² and ad_y² share the bound.
        let lap_bound = 2.0 * spread * spread;

        Ok(FuzzyTorus { params, q, u, v, f, x, y, x_diag, x_gap_sqr, lap_bound })
    }

    pub fn params(&self) -> &TorusParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn q(&self) -> C64 {
        self.q
    }

    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    /// The Fourier matrix `F_jk = q^{−jk}/√n`.
    pub fn fourier(&self) -> &CMatrix {
        &self.f
    }

    pub fn x(&self) -> &HermMatrix {
        &self.x
    }

    pub fn y(&self) -> &HermMatrix {
        &self.y
    }

    /// Upper bound on the largest eigenvalue of the Laplacian.
    pub fn laplacian_bound(&self) -> f64 {
        self.lap_bound
    }

    fn check(&self, a: &CMatrix) -> Result<()> {
        if a.dim() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: a.dim() });
        }
        Ok(())
    }

    /// Laplacian without the dimension check; fast path for diagonal `x`
    /// using `δ₁² a = F*·[x,[x, F a F*]]·F`.
    pub(crate) fn laplacian_unchecked(&self, a: &CMatrix) -> CMatrix {
        match &self.x_gap_sqr {
            Some(g) => {
                let f = &self.f;
                let fs = f.adjoint();
                let b = &(f * a) * &fs;
                let inner = &(&fs * &b.hadamard(g)) * f;
                &a.hadamard(g) + &inner
            }
            None => {
                let d1 = {
                    let t = self.y.commutator(a);
                    self.y.commutator(&t)
                };
                let d2 = {
                    let t = self.x.commutator(a);
                    self.x.commutator(&t)
                };
                &d1 + &d2
            }
        }
    }

    /// Dense `n²×n²` matrix of the Laplacian in the basis `e_jk` (index
    /// `j·n + k`), assembled from `ad_z = z⊗1 − 1⊗zᵀ`.
    pub fn laplacian_superop(&self) -> HermMatrix {
        let n = self.n();
        let ad = |z: &CMatrix| {
            CMatrix::from_fn(n * n, |r, c| {
                let (j, k) = (r / n, r % n);
                let (l, p) = (c / n, c % n);
                let mut val = C64::new(0.0, 0.0);
                if k == p {
                    val += z[(j, l)];
                }
                if j == l {
                    val -= z[(p, k)];
                }
                val
            })
        };
        let ady = ad(&self.y);
        let adx = ad(&self.x);
        let s = &(&ady * &ady) + &(&adx * &adx);
        HermMatrix::from_hermitian_part(&s)
    }
}

impl Derivations for FuzzyTorus {
    fn dim(&self) -> usize {
        self.n()
    }

    /// `δ₁ a = [y, a]`.
    fn delta1(&self, a: &CMatrix) -> Result<CMatrix> {
        self.check(a)?;
        Ok(self.y.commutator(a))
    }

    /// `δ₂ a = −[x, a] = a·x − x·a`.
    fn delta2(&self, a: &CMatrix) -> Result<CMatrix> {
        self.check(a)?;
        Ok(match &self.x_diag {
            Some(d) => CMatrix::from_fn(self.n(), |j, k| a[(j, k)] * (d[k] - d[j])),
            None => a.commutator(&self.x),
        })
    }

    fn laplacian(&self, a: &CMatrix) -> Result<CMatrix> {
        self.check(a)?;
        Ok(self.laplacian_unchecked(a))
    }
}

/// Apply a superoperator matrix to `vec(a)`.
pub fn superop_apply(s: &CMatrix, a: &CMatrix) -> CMatrix {
    let n = a.dim();
    assert_eq!(s.dim(), n * n, "superoperator dimension mismatch");
    let va = a.as_slice();
    CMatrix::from_fn(n, |j, k| {
        let r = j * n + k;
        (0..n * n).map(|c| s[(r, c)] * va[c]).sum()
    })
}

/// Spectral summary of the Laplacian superoperator.
#[derive(Clone, Debug)]
pub struct LaplacianSpectrum {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Number of eigenvalues below `threshold`.
    pub kernel_dim: usize,
    pub threshold: f64,
    /// Smallest eigenvalue above the threshold.
    pub gap: f64,
    /// Unit-norm eigenvector of the smallest eigenvalue, reshaped to `n×n`.
    pub ground_state: CMatrix,
}

impl FuzzyTorus {
    pub fn laplacian_spectrum(&self) -> Result<LaplacianSpectrum> {
        let n = self.n();
        let s = self.laplacian_superop();
        let e = eigh(&s)?;
        let lmax = e.lambda_max().abs().max(1.0);
        let threshold = 1e-8 * lmax;
        let kernel_dim = e.values.iter().filter(|&&l| l.abs() <= threshold).count();
        let gap = e.values.iter().cloned().find(|&l| l > threshold).unwrap_or(f64::INFINITY);
        let ground_state = CMatrix::from_fn(n, |j, k| e.vectors[(j * n + k, 0)]);
        Ok(LaplacianSpectrum { eigenvalues: e.values, kernel_dim, threshold, gap, ground_state })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::random::random_cmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn torus(n: usize, m: usize) -> FuzzyTorus {
        FuzzyTorus::build(TorusParams::new(n, m)).unwrap()
    }

    #[test]
    fn n2_matrices() {
        let t = torus(2, 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(t.u().max_abs_diff(&CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])) < 1e-15);
        assert_eq!(*t.v(), CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert!(t.fourier().max_abs_diff(&CMatrix::from_real_rows(&[&[h, h], &[h, -h]])) < 1e-15);
        assert_eq!(**t.x(), CMatrix::from_real_diag(&[0.0, 1.0]));
        let y = CMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        assert!(t.y().max_abs_diff(&y) < 1e-15);
    }

    #[test]
    fn n3_m2_commutation_entrywise() {
        let t = torus(3, 2);
        let q = C64::from_polar(1.0, 4.0 * PI / 3.0);
        let vu = t.v() * t.u();
        let uv = (t.u() * t.v()).scale_c(q);
        for j in 0..3 {
            for k in 0..3 {
                assert!((vu[(j, k)] - uv[(j, k)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn coprimality_gate() {
        let err = FuzzyTorus::build(TorusParams::new(4, 2)).unwrap_err();
        assert!(matches!(err, Error::Parameter(ref s) if s.contains("coprime")));
        assert!(FuzzyTorus::build(TorusParams::new(1, 1)).is_err());
        assert!(FuzzyTorus::build(TorusParams::new(5, 5)).is_err());
        assert!(FuzzyTorus::build(TorusParams::new(5, 0)).is_err());
    }

    #[test]
    fn mod_n_entries() {
        let t = FuzzyTorus::build(TorusParams::new(5, 3).with_x_choice(XChoice::ModN)).unwrap();
        let d: Vec<f64> = (0..5).map(|j| t.x()[(j, j)].re).collect();
        assert_eq!(d, vec![0.0, 3.0, 1.0, 4.0, 2.0]);
    }

    #[test]
    fn custom_x_validated() {
        let good = HermMatrix::from_real_diag(&[3.0, 4.0, -1.0]);
        assert!(FuzzyTorus::build(TorusParams::new(3, 1).with_x_choice(XChoice::Custom(good))).is_ok());
        let bad = HermMatrix::from_real_diag(&[0.0, 1.5, 2.0]);
        let err = FuzzyTorus::build(TorusParams::new(3, 1).with_x_choice(XChoice::Custom(bad))).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn derivations_kill_identity() {
        let t = torus(5, 2);
        let one = CMatrix::identity(5);
        assert_eq!(t.delta1(&one).unwrap().max_abs(), 0.0);
        assert_eq!(t.delta2(&one).unwrap().max_abs(), 0.0);
        assert!(t.laplacian(&one.scale(3.0)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn worked_derivation_formulas() {
        for (n, m) in [(2, 1), (5, 2), (7, 3), (12, 5)] {
            let t = torus(n, m);
            let mf = m as f64;
            let mn = (m * n) as f64;
            let expect2 = &t.v().scale(mf) - &CMatrix::unit(n, n - 1, 0).scale(mn);
            assert!(t.delta2(t.v()).unwrap().max_abs_diff(&expect2) < 1e-10);
            let f = t.fourier();
            let corr = &(&f.adjoint() * &CMatrix::unit(n, 0, n - 1)) * f;
            let expect1 = &t.u().scale(mf) - &corr.scale(mn);
            assert!(t.delta1(t.u()).unwrap().max_abs_diff(&expect1) < 1e-10);
            assert!(t.delta1(t.v()).unwrap().max_abs() < 1e-10);
            assert!(t.delta2(t.u()).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn fast_laplacian_matches_commutators() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (n, m) in [(3, 2), (8, 3)] {
            let t = torus(n, m);
            let a = random_cmatrix(&mut rng, n);
            let y = t.y();
            let x = t.x();
            let slow = &y.commutator(&y.commutator(&a)) + &x.commutator(&x.commutator(&a));
            let fast = t.laplacian(&a).unwrap();
            assert!(fast.dist_hs(&slow) < 1e-11 * slow.norm_hs());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let t = torus(3, 1);
        assert!(t.delta1(&CMatrix::zeros(4)).is_err());
        assert!(t.delta2(&CMatrix::zeros(4)).is_err());
        assert!(t.laplacian(&CMatrix::zeros(2)).is_err());
    }

    #[test]
    fn superop_consistent_with_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = torus(4, 3);
        let s = t.laplacian_superop();
        let a = random_cmatrix(&mut rng, 4);
        let lhs = superop_apply(&s, &a);
        let rhs = t.laplacian(&a).unwrap();
        assert!(lhs.dist_hs(&rhs) < 1e-11 * rhs.norm_hs());
    }

    #[test]
    fn superop_kernel_is_identity_line() {
        let t = torus(3, 1);
        let spec = t.laplacian_spectrum().unwrap();
        assert_eq!(spec.kernel_dim, 1);
        assert!(spec.gap > 0.5);
        assert!(spec.eigenvalues.iter().all(|&l| l >= -EPS_FN));
        // ground state ∝ 1/√n · identity, up to phase
        let g = &spec.ground_state;
        let phase = g[(0, 0)] / g[(0, 0)].norm();
        let aligned = g.scale_c(phase.conj());
        assert!(aligned.dist_hs(&CMatrix::identity(3).scale(1.0 / 3f64.sqrt())) < 1e-8);
        let bound = t.laplacian_bound();
        assert!(*spec.eigenvalues.last().unwrap() <= bound * (1.0 + 1e-12));
    }
}
