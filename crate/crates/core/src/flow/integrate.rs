//! Adaptive RK4 integration of the flow with step-doubling error control.

use serde::{Deserialize, Serialize};

use super::{curvature_from_rhs, entropy, rhs, FlowConfig};
use crate::error::{Error, Result};
use crate::matcore::HermMatrix;
use crate::metric::Metric;
use crate::torus::{FuzzyTorus, TorusParams};

/// Steps are capped at `STABILITY_FACTOR·λ_min(c)/‖Δ‖`. The linearised flow
/// at `c` has spectrum in `[−‖Δ‖/λ_min, 0]`; the accepted state is two RK4
/// half steps, each inside the real stability interval `|hλ| ≤ 2.78`.
pub const STABILITY_FACTOR: f64 = 5.0;

/// Diagnostics recorded for every accepted state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub trace_c: f64,
    pub log_det_c: f64,
    /// Von Neumann entropy of `c/τ(c)`.
    pub entropy: f64,
    /// `‖c − c_∞·1‖₂²`.
    pub dist_flat: f64,
    /// `‖R‖₂`.
    pub curvature_norm: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub step_used: f64,
}

/// A point on the flow with its velocity and scalar curvature.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub c: Metric,
    /// `dc/dt = −Δ log c` at this state.
    pub velocity: HermMatrix,
    /// Scalar curvature `R = −(d/dt) log c`.
    pub curvature: HermMatrix,
    pub c_inf: f64,
    pub diag: DiagRecord,
}

impl FlowState {
    pub fn new(t_geom: &FuzzyTorus, t: f64, c: Metric, c_inf: f64, step_used: f64) -> Self {
        let velocity = rhs(t_geom, &c);
        let curvature = curvature_from_rhs(&c, &velocity);
        let diag = DiagRecord {
            trace_c: c.trace(),
            log_det_c: c.log_det(),
            entropy: entropy(&c),
            dist_flat: c.dist_to_scalar_sqr(c_inf),
            curvature_norm: curvature.norm_hs(),
            lambda_min: c.lambda_min(),
            lambda_max: c.lambda_max(),
            step_used,
        };
        FlowState { t, c, velocity, curvature, c_inf, diag }
    }

    pub fn summary(&self) -> StateSummary {
        StateSummary { t: self.t, diag: self.diag }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub t: f64,
    #[serde(flatten)]
    pub diag: DiagRecord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    Horizon,
    StepUnderflow,
}

/// Accepted steps on which a monotone quantity moved the wrong way by more
/// than the step tolerance allows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violations {
    pub log_det: u32,
    pub entropy: u32,
    pub dist_flat: u32,
}

impl Violations {
    pub fn total(&self) -> u32 {
        self.log_det + self.entropy + self.dist_flat
    }
}

#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub params: TorusParams,
    pub config: FlowConfig,
    pub initial: Metric,
    pub c_infinity: f64,
    /// One entry per accepted state, starting with the initial one.
    pub states: Vec<StateSummary>,
    pub termination: Termination,
    pub violations: Violations,
    pub rejected_steps: u32,
    pub final_state: FlowState,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepError {
    /// The candidate left the positivity guard; retry with a smaller step.
    Positivity { lambda_min: f64, floor: f64 },
}

/// One classical RK4 step of size `h` from `c` with precomputed `k1 = rhs(c)`.
/// Fails when an intermediate stage is not strictly positive.
pub fn rk4_step(t: &FuzzyTorus, c: &Metric, k1: &HermMatrix, h: f64) -> Result<HermMatrix> {
    let stage = |base: &HermMatrix, dir: &HermMatrix, a: f64| -> Result<HermMatrix> {
        let m = Metric::new(base.add_scaled(a, dir))?;
        Ok(rhs(t, &m))
    };
    let c0 = c.c();
    let k2 = stage(c0, k1, 0.5 * h)?;
    let k3 = stage(c0, &k2, 0.5 * h)?;
    let k4 = stage(c0, &k3, h)?;
    let mut incr = k1.add_scaled(2.0, &k2).add_scaled(2.0, &k3).add(&k4);
    incr = incr.scale(h / 6.0);
    Ok(c0.add(&incr))
}

/// One step-doubling RK4 step: a full step of size `h` against two half
/// steps. Returns the two-half-step state and the Richardson error estimate
/// `‖c_full − c_half²‖₂/15`. The candidate is rejected unless
/// `λ_min > floor`.
pub fn step(
    t: &FuzzyTorus,
    state: &FlowState,
    h: f64,
    floor: f64,
) -> std::result::Result<(FlowState, f64), StepError> {
    let positivity = |e: Error| match e {
        Error::NotPositive { lambda_min, floor } => StepError::Positivity { lambda_min, floor },
        other => panic!("unexpected numerical failure in flow step: {other}"),
    };
    let full = rk4_step(t, &state.c, &state.velocity, h).map_err(positivity)?;
    let half1 = rk4_step(t, &state.c, &state.velocity, 0.5 * h).map_err(positivity)?;
    let mid = Metric::new(half1).map_err(positivity)?;
    let k1_mid = rhs(t, &mid);
    let half2 = rk4_step(t, &mid, &k1_mid, 0.5 * h).map_err(positivity)?;

    let err = full.dist_hs(&half2) / 15.0;
    let next = Metric::new(half2).map_err(positivity)?;
    if !(next.lambda_min() > floor) {
        return Err(StepError::Positivity { lambda_min: next.lambda_min(), floor });
    }
    Ok((FlowState::new(t, state.t + h, next, state.c_inf, h), err))
}

pub fn integrate(t: &FuzzyTorus, c0: &Metric, config: &FlowConfig) -> Result<FlowTrace> {
    integrate_with(t, c0, config, |_| {})
}

/// Integrates from `c0`, calling `observer` on every accepted state
/// (including the initial one).
pub fn integrate_with(
    t: &FuzzyTorus,
    c0: &Metric,
    config: &FlowConfig,
    mut observer: impl FnMut(&FlowState),
) -> Result<FlowTrace> {
    config.validate()?;
    if c0.dim() != t.n() {
        return Err(Error::DimensionMismatch { expected: t.n(), got: c0.dim() });
    }
    let c_inf = c0.c_infinity();
    let conv = config.conv_tol * config.conv_tol;
    let lap_bound = t.laplacian_bound();
    // An initial metric may already sit below guard·c_∞; the guard then
    // protects half its smallest eigenvalue instead.
    let floor = (config.guard * c_inf).min(0.5 * c0.lambda_min());

    let mut state = FlowState::new(t, config.t0, c0.clone(), c_inf, 0.0);
    observer(&state);
    let mut states = vec![state.summary()];
    let mut violations = Violations::default();
    let mut rejected = 0u32;

    let mut h = match config.h_init {
        Some(h) => h,
        None => {
            let v = state.velocity.norm_hs();
            if v > 0.0 { 1e-3 / v } else { config.h_max }
        }
    }
    .clamp(config.h_min, config.h_max);

    let termination = loop {
        if state.diag.dist_flat < conv {
            break Termination::Converged;
        }
        let remaining = config.t_max - state.t;
        if remaining <= 0.0 {
            break Termination::Horizon;
        }
        let cap = STABILITY_FACTOR * state.diag.lambda_min / lap_bound;
        let mut h_try = h.min(config.h_max).min(cap);
        let last = h_try >= remaining;
        if last {
            h_try = remaining;
        } else if h_try < config.h_min {
            break Termination::StepUnderflow;
        }

        match step(t, &state, h_try, floor) {
            Ok((next, err)) if err <= config.atol => {
                count_violations(&state.diag, &next.diag, config.atol, &mut violations);
                let factor = if err > 0.0 { 0.9 * (config.atol / err).powf(0.2) } else { 5.0 };
                if !last {
                    h = h_try * factor.clamp(0.2, 5.0);
                }
                state = next;
                if last {
                    // land exactly on the horizon
                    state.t = config.t_max;
                }
                observer(&state);
                states.push(state.summary());
            }
            Ok((_, err)) => {
                rejected += 1;
                h = h_try * (0.9 * (config.atol / err).powf(0.2)).max(0.2);
                if h < config.h_min {
                    break Termination::StepUnderflow;
                }
            }
            Err(StepError::Positivity { .. }) => {
                rejected += 1;
                h = 0.5 * h_try;
                if h < config.h_min {
                    break Termination::StepUnderflow;
                }
            }
        }
    };

    Ok(FlowTrace {
        params: t.params().clone(),
        config: config.clone(),
        initial: c0.clone(),
        c_infinity: c_inf,
        states,
        termination,
        violations,
        rejected_steps: rejected,
        final_state: state,
    })
}

fn count_violations(prev: &DiagRecord, next: &DiagRecord, atol: f64, v: &mut Violations) {
    if prev.log_det_c - next.log_det_c > atol {
        v.log_det += 1;
    }
    if prev.entropy - next.entropy > atol {
        v.entropy += 1;
    }
    // a state error of HS size atol moves ‖c − c_∞‖² by at most 2‖c − c_∞‖·atol + atol²
    if next.dist_flat - prev.dist_flat > atol * (2.0 * prev.dist_flat.sqrt() + atol) {
        v.dist_flat += 1;
    }
}
