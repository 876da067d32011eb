//! Noncommutative Ricci flow `dc/dt = −Δ log c` and the quantities tracked
//! along it: scalar curvature, von Neumann entropy, log-determinant rate.

mod config;
mod integrate;

pub use config::FlowConfig;
pub use integrate::{
    integrate, integrate_with, rk4_step, step, DiagRecord, FlowState, FlowTrace, StepError,
    StateSummary, Termination, Violations, STABILITY_FACTOR,
};

use crate::error::{Error, Result};
use crate::matcore::{frechet_log_from_eig, log_scaled_from_eig, HermMatrix, EPS_FN};
use crate::metric::Metric;
use crate::torus::FuzzyTorus;

/// `−Δ log c`.
///
/// Evaluated as `−Δ log(c/s)` with `s = τ(c)/n`: the Laplacian kills the
/// scalar `log s·1`, and dropping it before the functional calculus keeps the
/// result accurate when `c` is close to flat.
pub fn rhs(t: &FuzzyTorus, c: &Metric) -> HermMatrix {
    let l = log_scaled_from_eig(c.eig(), c.c_infinity()).expect("metric is strictly positive");
    HermMatrix::from_hermitian_part(&-&t.laplacian_unchecked(&l))
}

/// Scalar curvature `R = −(d/dt) log c`, via the Fréchet derivative of `log`
/// applied to the flow velocity.
pub fn scalar_curvature(t: &FuzzyTorus, c: &Metric) -> HermMatrix {
    curvature_from_rhs(c, &rhs(t, c))
}

pub(crate) fn curvature_from_rhs(c: &Metric, velocity: &HermMatrix) -> HermMatrix {
    frechet_log_from_eig(c.eig(), velocity)
        .expect("metric is strictly positive")
        .scale(-1.0)
}

/// Von Neumann entropy of `c/τ(c)`.
pub fn entropy(c: &Metric) -> f64 {
    let tr = c.trace();
    -c.eig()
        .values
        .iter()
        .map(|&l| l / tr)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// `τ(c⁻¹·dc/dt)`, the analytic rate of `log det c` along the flow.
pub fn log_det_rate(t: &FuzzyTorus, c: &Metric) -> f64 {
    let v = rhs(t, c);
    (c.inverse().as_cmatrix() * v.as_cmatrix()).trace().re
}

/// Analytic and finite-difference entropy production at a density matrix.
#[derive(Clone, Copy, Debug)]
pub struct EntropyRate {
    /// Central difference `(S(c(δt)) − S(c(−δt)))/(2δt)` from two RK4 micro-steps.
    pub numeric: f64,
    /// `τ(l·Δl)` with `l = log c`.
    pub analytic: f64,
}

impl EntropyRate {
    pub fn relative_gap(&self) -> f64 {
        (self.numeric - self.analytic).abs() / self.analytic.abs().max(f64::MIN_POSITIVE)
    }
}

/// Compares `dS/dt` with `τ(l·Δl)`; `c` must have unit trace.
pub fn entropy_rate_check(t: &FuzzyTorus, c: &Metric, dt: f64) -> Result<EntropyRate> {
    if (c.trace() - 1.0).abs() > EPS_FN {
        return Err(Error::Validation(format!(
            "entropy rate needs a density matrix (trace {})",
            c.trace()
        )));
    }
    let l = log_scaled_from_eig(c.eig(), c.c_infinity())?;
    let dl = t.laplacian_unchecked(&l);
    let analytic = l.hs_inner(&dl)?.re;

    let (bwd, fwd) = micro_steps(t, c, dt)?;
    let numeric = (entropy(&fwd) - entropy(&bwd)) / (2.0 * dt);
    Ok(EntropyRate { numeric, analytic })
}

/// Fraction of the fastest relaxation time used by finite-difference checks.
pub const FD_FRACTION: f64 = 3e-4;

/// Time step for finite-difference oracles at `c`: [`FD_FRACTION`] of
/// `λ_min(c)/‖Δ‖`, the time scale of the stiffest mode. An absolute step
/// would not survive the `c ↦ κc, t ↦ κt` covariance of the flow.
pub fn fd_step(t: &FuzzyTorus, c: &Metric) -> f64 {
    FD_FRACTION * c.lambda_min() / t.laplacian_bound()
}

/// The flow through `c` at times `−dt` and `+dt`, one RK4 step each way.
pub fn micro_steps(t: &FuzzyTorus, c: &Metric, dt: f64) -> Result<(Metric, Metric)> {
    let k1 = rhs(t, c);
    let bwd = Metric::new(rk4_step(t, c, &k1, -dt)?)?;
    let fwd = Metric::new(rk4_step(t, c, &k1, dt)?)?;
    Ok((bwd, fwd))
}
