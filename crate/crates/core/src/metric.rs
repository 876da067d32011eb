//! Noncommutative metrics: strictly positive Hermitian matrices.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::random::random_hermitian;
use crate::matcore::{
    check_positive, eigh, log_det_from_eig, log_from_eig, mat_exp, mat_inv, CMatrix, EigDecomp,
    HermMatrix, C64,
};
use crate::torus::FuzzyTorus;

/// A strictly positive Hermitian matrix together with its spectral
/// decomposition.
#[derive(Clone, Debug)]
pub struct Metric {
    c: HermMatrix,
    eig: EigDecomp,
}

impl Metric {
    pub fn new(c: HermMatrix) -> Result<Self> {
        let eig = eigh(&c)?;
        check_positive(&eig)?;
        Ok(Metric { c, eig })
    }

    pub fn c(&self) -> &HermMatrix {
        &self.c
    }

    pub fn eig(&self) -> &EigDecomp {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn trace(&self) -> f64 {
        self.c.trace_re()
    }

    /// `τ(c)/n`, the level of the flat metric this one flows to.
    pub fn c_infinity(&self) -> f64 {
        self.trace() / self.dim() as f64
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig.lambda_min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.lambda_max()
    }

    pub fn log(&self) -> HermMatrix {
        log_from_eig(&self.eig).expect("metric is strictly positive")
    }

    pub fn log_det(&self) -> f64 {
        log_det_from_eig(&self.eig).expect("metric is strictly positive")
    }

    pub fn inverse(&self) -> HermMatrix {
        self.eig.apply(|l| 1.0 / l)
    }

    /// `‖c − α·1‖₂²`.
    pub fn dist_to_scalar_sqr(&self, alpha: f64) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                let mut z = self.c[(j, k)];
                if j == k {
                    z.re -= alpha;
                }
                s += z.norm_sqr();
            }
        }
        s
    }

    pub fn scaled(&self, kappa: f64) -> Result<Metric> {
        if !(kappa > 0.0) {
            return Err(Error::Parameter(format!("scale factor must be positive (got {kappa})")));
        }
        let eig = EigDecomp {
            values: self.eig.values.iter().map(|l| l * kappa).collect(),
            vectors: self.eig.vectors.clone(),
        };
        Ok(Metric { c: self.c.scale(kappa), eig })
    }
}

/// The flat metric `α·1`.
pub fn flat(n: usize, alpha: f64) -> Result<Metric> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("flat level must be positive (got {alpha})")));
    }
    Metric::new(HermMatrix::identity(n).scale(alpha))
}

/// Matrix analogue of the cigar metric, `(M·1 + x² + y²)⁻¹`.
pub fn cigar(t: &FuzzyTorus, mass: f64) -> Result<Metric> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::Parameter(format!("cigar mass must be positive (got {mass})")));
    }
    let x = t.x();
    let y = t.y();
    let base = &(x.as_cmatrix() * x.as_cmatrix()) + &(y.as_cmatrix() * y.as_cmatrix());
    let g = HermMatrix::from_hermitian_part(&base).shift(mass);
    Metric::new(mat_inv(&g)?)
}

/// `exp(h)` for a seeded Gaussian Hermitian `h` with entry scale `spread`.
pub fn random_metric(n: usize, spread: f64, seed: u64) -> Result<Metric> {
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::Parameter(format!("spread must be non-negative (got {spread})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hermitian(&mut rng, n, spread);
    Metric::new(mat_exp(&h)?)
}

/// `diag(1, 2, …, n)`.
pub fn ladder(n: usize) -> Result<Metric> {
    Metric::new(HermMatrix::from_real_diag(&(1..=n).map(|j| j as f64).collect::<Vec<_>>()))
}

/// Rescales to unit trace: returns `(κ·c, κ)` with `κ = 1/τ(c)`.
pub fn normalize_density(c: &Metric) -> (Metric, f64) {
    let kappa = 1.0 / c.trace();
    let rho = c.scaled(kappa).expect("trace of a metric is positive");
    (rho, kappa)
}

/// On-disk metric: `{"n": int, "entries": [[re, im], …]}`, row-major.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct MetricFile {
    pub n: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MetricFile {
    pub fn from_matrix(a: &CMatrix) -> Self {
        MetricFile { n: a.dim(), entries: a.as_slice().iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.entries.len() != self.n * self.n {
            return Err(Error::Validation(format!(
                "metric file declares n = {} but holds {} entries (expected {})",
                self.n,
                self.entries.len(),
                self.n * self.n
            )));
        }
        if self.entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("metric file contains non-finite entries".into()));
        }
        CMatrix::from_row_major(self.entries.iter().map(|&[re, im]| C64::new(re, im)).collect())
    }

    /// Validates Hermiticity and strict positivity.
    pub fn to_metric(&self) -> Result<Metric> {
        let a = self.to_matrix()?;
        let h = HermMatrix::new(a).map_err(|e| Error::Validation(format!("Hermiticity violated: {e}")))?;
        Metric::new(h).map_err(|e| match e {
            Error::NotPositive { .. } => Error::Validation(e.to_string()),
            other => other,
        })
    }
}

impl Metric {
    pub fn to_file(&self) -> MetricFile {
        MetricFile::from_matrix(self.c.as_cmatrix())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("metric serialises")
    }

    pub fn from_json(s: &str) -> Result<Metric> {
        let file: MetricFile =
            serde_json::from_str(s).map_err(|e| Error::Validation(format!("malformed metric JSON: {e}")))?;
        file.to_metric()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Metric> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Metric::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::EPS_FN;
    use crate::torus::{Derivations, TorusParams};

    #[test]
    fn flat_examples() {
        assert_eq!(*flat(2, 1.0).unwrap().c().as_cmatrix(), CMatrix::identity(2));
        assert_eq!(
            *flat(3, 2.5).unwrap().c().as_cmatrix(),
            CMatrix::from_real_diag(&[2.5, 2.5, 2.5])
        );
        assert!(flat(3, 0.0).is_err());
        assert!(flat(3, -1.0).is_err());
        let t = FuzzyTorus::build(TorusParams::new(5, 2)).unwrap();
        let l = flat(5, 3.7).unwrap().log();
        assert!(t.laplacian(&l).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn cigar_n2() {
        // M + x² + y² = [[1.5, −0.5], [−0.5, 2.5]], det 3.5
        let t = FuzzyTorus::build(TorusParams::new(2, 1)).unwrap();
        let c = cigar(&t, 1.0).unwrap();
        let want = CMatrix::from_real_rows(&[&[2.5, 0.5], &[0.5, 1.5]]).scale(1.0 / 3.5);
        assert!(c.c().max_abs_diff(&want) < 1e-15);
        assert!(cigar(&t, 0.0).is_err());
    }

    #[test]
    fn cigar_inverts_its_generator() {
        for (n, m, mass) in [(3, 1, 0.1), (7, 3, 2.0), (13, 5, 0.5)] {
            let t = FuzzyTorus::build(TorusParams::new(n, m)).unwrap();
            let c = cigar(&t, mass).unwrap();
            assert!(c.lambda_min() > 0.0);
            let x = t.x().as_cmatrix();
            let y = t.y().as_cmatrix();
            let g = HermMatrix::from_hermitian_part(&(&(x * x) + &(y * y))).shift(mass);
            let prod = g.as_cmatrix() * c.c().as_cmatrix();
            assert!(prod.dist_hs(&CMatrix::identity(n)) <= EPS_FN);
        }
    }

    #[test]
    fn random_metric_properties() {
        let a = random_metric(6, 0.8, 42).unwrap();
        let b = random_metric(6, 0.8, 42).unwrap();
        assert_eq!(a.c(), b.c());
        assert_ne!(a.c(), random_metric(6, 0.8, 43).unwrap().c());
        assert!(a.lambda_min() > 0.0);
        assert_eq!(*random_metric(4, 0.0, 1).unwrap().c().as_cmatrix(), CMatrix::identity(4));
    }

    #[test]
    fn density_normalisation() {
        let (rho, kappa) = normalize_density(&flat(4, 2.0).unwrap());
        assert!(rho.c().max_abs_diff(&CMatrix::identity(4).scale(0.25)) < 1e-16);
        assert!((kappa - 1.0 / 8.0).abs() < 1e-16);

        let c = random_metric(5, 1.0, 7).unwrap();
        let (rho, _) = normalize_density(&c);
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        let (rho2, kappa2) = normalize_density(&rho);
        assert!((kappa2 - 1.0).abs() < 1e-14);
        assert!(rho2.c().max_abs_diff(rho.c()) < 1e-15);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let c = random_metric(4, 1.3, 5).unwrap();
        let back = Metric::from_json(&c.to_json()).unwrap();
        assert_eq!(back.c(), c.c());
    }

    #[test]
    fn json_rejects_invalid_metrics() {
        let neg = r#"{"n": 2, "entries": [[1,0],[0,0],[0,0],[-1,0]]}"#;
        let err = Metric::from_json(neg).unwrap_err();
        assert!(err.to_string().contains("strict positivity"), "{err}");
        let nonherm = r#"{"n": 2, "entries": [[1,0],[0.5,0],[0,0],[1,0]]}"#;
        let err = Metric::from_json(nonherm).unwrap_err();
        assert!(err.to_string().contains("Hermiticity"), "{err}");
        let short = r#"{"n": 2, "entries": [[1,0],[0,0],[0,0]]}"#;
        assert!(Metric::from_json(short).is_err());
        assert!(Metric::from_json("{").is_err());
    }
}
