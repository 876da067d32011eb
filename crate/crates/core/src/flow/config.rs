use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integration controls for [`integrate`](super::integrate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub t0: f64,
    pub t_max: f64,
    /// Initial step; `None` means `1e-3/‖rhs(c₀)‖₂` clamped to `[h_min, h_max]`.
    pub h_init: Option<f64>,
    /// Accepted local error per step (step-doubling estimate, HS norm).
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Converged once `‖c − c_∞·1‖₂ < conv_tol`.
    pub conv_tol: f64,
    /// Reject a step when `λ_min(c_new) ≤ guard·c_∞` (or half the initial
    /// `λ_min`, if that is smaller).
    pub guard: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            t0: 0.0,
            t_max: 1e3,
            h_init: None,
            atol: 1e-9,
            h_min: 1e-12,
            h_max: 1.0,
            conv_tol: 1e-8,
            guard: 1e-6,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if !(self.t_max > self.t0) {
            return bad(format!("t_max ({}) must exceed t0 ({})", self.t_max, self.t0));
        }
        for (name, v) in [
            ("atol", self.atol),
            ("h_min", self.h_min),
            ("h_max", self.h_max),
            ("conv_tol", self.conv_tol),
            ("guard", self.guard),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite (got {v})"));
            }
        }
        if self.h_min > self.h_max {
            return bad(format!("h_min ({}) exceeds h_max ({})", self.h_min, self.h_max));
        }
        if let Some(h) = self.h_init {
            if !(h >= self.h_min && h <= self.h_max) {
                return bad(format!(
                    "h_init ({h}) must lie in [h_min, h_max] = [{}, {}]",
                    self.h_min, self.h_max
                ));
            }
        }
        Ok(())
    }

    /// The same controls expressed for the metric `κ·c` run on time `κ·t`.
    ///
    /// The flow is covariant under `c ↦ κc, t ↦ κt`; scaling the tolerances
    /// alongside keeps the step pattern identical.
    pub fn rescaled(&self, kappa: f64) -> FlowConfig {
        FlowConfig {
            t0: self.t0 * kappa,
            t_max: self.t_max * kappa,
            h_init: self.h_init.map(|h| h * kappa),
            atol: self.atol * kappa,
            h_min: self.h_min * kappa,
            h_max: self.h_max * kappa,
            conv_tol: self.conv_tol * kappa,
            guard: self.guard,
        }
    }
}
