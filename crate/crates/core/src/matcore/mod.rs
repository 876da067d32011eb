//! Dense complex matrix algebra and Hermitian functional calculus.

mod eigh;
mod funcalc;
mod herm;
mod matrix;
pub mod random;

pub use eigh::{eigh, EigDecomp};
pub use funcalc::{
    check_positive, frechet_log, frechet_log_from_eig, frechet_log_raw, log_det, log_det_from_eig,
    log_divided_difference, log_from_eig, log_scaled_from_eig, mat_exp, mat_fn, mat_inv, mat_log,
};
pub use herm::HermMatrix;
pub use matrix::{CMatrix, C64};

/// Relative self-adjointness tolerance for [`HermMatrix`] validation.
pub const ETA_HERM: f64 = 1e-10;
/// Jacobi convergence: off-diagonal mass relative to the input norm.
pub const EPS_EIG: f64 = 1e-12;
/// Maximum number of cyclic Jacobi sweeps.
pub const MAX_SWEEPS: usize = 64;
/// Relative strict-positivity floor for `log` and inverse.
pub const EPS_POS: f64 = 1e-13;
/// Relative eigenvalue gap below which the divided difference of `log`
/// switches to its confluent form.
pub const EPS_DK: f64 = 1e-8;
/// Default functional-calculus tolerance.
pub const EPS_FN: f64 = 1e-10;

#[cfg(test)]
pub(crate) mod testing {
    pub use super::random::{random_hermitian, random_unitary};
}
