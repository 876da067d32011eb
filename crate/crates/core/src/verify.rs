//! Seeded property suites: the derivation identities, positivity of the
//! Laplacian and of `τ(e^a Δa)`, and the invariants along integrated flows.
//!
//! Every suite reports one [`PropertyCheck`] per property with the worst
//! residual seen over all cases. The derivation and positivity suites are
//! generic over [`Derivations`] so a deliberately broken implementation can
//! be run through the same code.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{
    entropy, entropy_rate_check, fd_step, integrate_with, log_det_rate, micro_steps, FlowConfig,
    FlowState, FlowTrace, Termination,
};
use crate::matcore::random::{random_cmatrix, random_hermitian};
use crate::matcore::{eigh, frechet_log_raw, mat_exp, CMatrix, HermMatrix, C64, EPS_FN};
use crate::metric::{cigar, flat, ladder, normalize_density, random_metric, Metric};
use crate::torus::{coprime_residues, Derivations, FuzzyTorus, TorusParams, XChoice};

/// `|τ(c·R)| ≤ EPS_CURV·‖c‖₂‖R‖₂`, and the flatness threshold on `‖R‖₂`.
pub const EPS_CURV: f64 = 1e-8;
/// Finite-difference comparisons are made only where the estimated rounding
/// floor of the difference quotient is below this fraction of the tolerance.
pub const FD_FLOOR_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Bound {
    /// Worst case is the maximum; passes when `≤`.
    AtMost(f64),
    /// Worst case is the minimum; passes when `≥`.
    AtLeast(f64),
    /// Worst case is the minimum; passes when `>`.
    Above(f64),
    /// Every case must hit the value exactly.
    Equals(f64),
}

/// Worst residual of one property over all cases.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyCheck {
    pub property: String,
    pub cases: usize,
    pub worst: f64,
    pub bound: Bound,
    /// For `Equals`, whether any case differed.
    mismatch: bool,
}

impl PropertyCheck {
    pub fn new(property: impl Into<String>, bound: Bound) -> Self {
        let worst = match bound {
            Bound::AtMost(_) => f64::NEG_INFINITY,
            Bound::AtLeast(_) | Bound::Above(_) => f64::INFINITY,
            Bound::Equals(v) => v,
        };
        PropertyCheck { property: property.into(), cases: 0, worst, bound, mismatch: false }
    }

    pub fn record(&mut self, v: f64) {
        self.cases += 1;
        if v.is_nan() || self.worst.is_nan() {
            self.worst = f64::NAN;
            return;
        }
        match self.bound {
            Bound::AtMost(_) => self.worst = self.worst.max(v),
            Bound::AtLeast(_) | Bound::Above(_) => self.worst = self.worst.min(v),
            Bound::Equals(target) => {
                if v != target {
                    self.mismatch = true;
                    self.worst = v;
                }
            }
        }
    }

    pub fn merge(&mut self, other: &PropertyCheck) {
        debug_assert_eq!(self.bound, other.bound);
        if other.cases == 0 {
            return;
        }
        let cases = self.cases;
        if other.mismatch && !self.mismatch {
            self.mismatch = true;
            self.worst = other.worst;
        } else if !matches!(self.bound, Bound::Equals(_)) {
            self.record(other.worst);
        }
        self.cases = cases + other.cases;
    }

    pub fn passed(&self) -> bool {
        if self.cases == 0 || self.worst.is_nan() {
            return false;
        }
        match self.bound {
            Bound::AtMost(t) => self.worst <= t,
            Bound::AtLeast(t) => self.worst >= t,
            Bound::Above(t) => self.worst > t,
            Bound::Equals(_) => !self.mismatch,
        }
    }
}

impl fmt::Display for PropertyCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (rel, limit) = match self.bound {
            Bound::AtMost(t) => ("<=", t),
            Bound::AtLeast(t) => (">=", t),
            Bound::Above(t) => (">", t),
            Bound::Equals(t) => ("==", t),
        };
        write!(
            f,
            "{} {:<44} worst {:>11.4e} (need {rel} {limit:.1e}, {} cases)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.property,
            self.worst,
            self.cases
        )
    }
}

/// Named group of checks, e.g. one suite on one `(n, m)`.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub label: String,
    pub checks: Vec<PropertyCheck>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(PropertyCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// Folds another report's checks in, matching by property name.
    pub fn absorb(&mut self, other: &[PropertyCheck]) {
        for c in other {
            match self.checks.iter_mut().find(|x| x.property == c.property) {
                Some(x) => x.merge(c),
                None => self.checks.push(c.clone()),
            }
        }
    }
}

/// Deterministic per-case generator.
pub fn case_rng(seed: u64, n: usize, m: usize, case: usize) -> ChaCha8Rng {
    let mix = seed
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (m as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (case as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    ChaCha8Rng::seed_from_u64(mix)
}

fn unit_random(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = random_cmatrix(rng, n);
    let s = 1.0 / a.norm_hs();
    a.scale(s)
}

fn fold(mut checks: Vec<PropertyCheck>, rows: Vec<Vec<f64>>) -> Vec<PropertyCheck> {
    for row in rows {
        for (c, v) in checks.iter_mut().zip(row) {
            c.record(v);
        }
    }
    checks
}

/// Derivation identities on `cases` pairs of unit-norm random matrices:
/// `δ_μ 1 = 0`, integration by parts, Hermiticity of `δ_μ` for the
/// Hilbert–Schmidt product, `(δa)* = −δ(a*)`, the Leibniz rule, positivity
/// of `δ_μ²` and `Δ`, `⟨a, δ²a⟩ = ‖δa‖²` and `τ(Δa) = 0`.
pub fn derivation_suite<D: Derivations + ?Sized>(
    d: &D,
    cases: usize,
    seed: u64,
    tag: (usize, usize),
) -> Result<Vec<PropertyCheck>> {
    let n = d.dim();
    let mut kills = PropertyCheck::new("derivations kill the identity", Bound::AtMost(EPS_FN));
    let one = CMatrix::identity(n);
    kills.record(d.delta1(&one)?.max_abs().max(d.delta2(&one)?.max_abs()));

    let rows: Vec<Vec<f64>> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = case_rng(seed, tag.0, tag.1, case);
            let a = unit_random(&mut rng, n);
            let b = unit_random(&mut rng, n);
            derivation_case(d, &a, &b)
        })
        .collect::<Result<_>>()?;

    let checks = vec![
        PropertyCheck::new("integration by parts", Bound::AtMost(EPS_FN)),
        PropertyCheck::new("derivations Hermitian (HS product)", Bound::AtMost(EPS_FN)),
        PropertyCheck::new("adjoint anticommutes with derivations", Bound::AtMost(EPS_FN)),
        PropertyCheck::new("Leibniz rule", Bound::AtMost(EPS_FN)),
        PropertyCheck::new("<a, d^2 a> and <a, Lap a> nonnegative", Bound::AtLeast(-EPS_FN)),
        PropertyCheck::new("<a, Lap a> real", Bound::AtMost(EPS_FN)),
        PropertyCheck::new("<a, d^2 a> = |da|^2", Bound::AtMost(EPS_FN)),
        PropertyCheck::new("Laplacian trace-free", Bound::AtMost(EPS_FN)),
    ];
    let mut out = vec![kills];
    out.extend(fold(checks, rows));
    Ok(out)
}

fn derivation_case<D: Derivations + ?Sized>(d: &D, a: &CMatrix, b: &CMatrix) -> Result<Vec<f64>> {
    let tr = |x: &CMatrix, y: &CMatrix| -> Result<C64> { Ok(x.mul(y)?.trace()) };
    let mut parts = 0.0f64;
    let mut herm = 0.0f64;
    let mut adj = 0.0f64;
    let mut leibniz = 0.0f64;
    let mut pos = f64::INFINITY;
    let mut square = 0.0f64;
    let ab = a.mul(b)?;
    for mu in 0..2 {
        let delta = |x: &CMatrix| if mu == 0 { d.delta1(x) } else { d.delta2(x) };
        let da = delta(a)?;
        let db = delta(b)?;
        parts = parts.max((tr(a, &db)? + tr(b, &da)?).norm());
        herm = herm.max((a.hs_inner(&db)? - da.hs_inner(b)?).norm());
        adj = adj.max((&da.adjoint() + &delta(&a.adjoint())?).max_abs());
        let rhs = &da.mul(b)? + &a.mul(&db)?;
        leibniz = leibniz.max(delta(&ab)?.max_abs_diff(&rhs));
        let dda = delta(&da)?;
        let q = a.hs_inner(&dda)?;
        pos = pos.min(q.re);
        let norm2 = da.norm_hs_sqr();
        square = square.max((q - C64::new(norm2, 0.0)).norm() / norm2.max(1.0));
    }
    let lap = d.laplacian(a)?;
    let q = a.hs_inner(&lap)?;
    pos = pos.min(q.re);
    let imag = q.im.abs() / q.re.abs().max(1.0);
    let trace = lap.trace().norm();
    Ok(vec![parts, herm, adj, leibniz, pos, imag, square, trace])
}

/// Matrix of `a ↦ Δa` in the basis `e_jk` (index `j·n + k`), assembled one
/// column at a time from the derivations.
pub fn superop_of<D: Derivations + ?Sized>(d: &D) -> Result<CMatrix> {
    let n = d.dim();
    let mut s = CMatrix::zeros(n * n);
    for col in 0..n * n {
        let img = d.laplacian(&CMatrix::unit(n, col / n, col % n))?;
        for (row, z) in img.as_slice().iter().enumerate() {
            s[(row, col)] = *z;
        }
    }
    Ok(s)
}

/// Spectral properties of the Laplacian superoperator: Hermitian and
/// positive semidefinite, kernel exactly the scalars, and the resulting
/// bound `‖a − τ(a)/n·1‖₂ ≤ (‖δ₁a‖₂ + ‖δ₂a‖₂)/√gap` on random `a`.
pub fn kernel_suite<D: Derivations + ?Sized>(
    d: &D,
    cases: usize,
    seed: u64,
    tag: (usize, usize),
) -> Result<Vec<PropertyCheck>> {
    let n = d.dim();
    let s = superop_of(d)?;
    let mut herm = PropertyCheck::new("superoperator Hermitian", Bound::AtMost(EPS_FN));
    herm.record(s.hermitian_defect() / s.max_abs().max(1.0));

    let e = eigh(&HermMatrix::from_hermitian_part(&s))?;
    let lmax = e.lambda_max().abs().max(1.0);
    let threshold = 1e-8 * lmax;
    let kernel_dim = e.values.iter().filter(|l| l.abs() <= threshold).count();
    let gap = e.values.iter().copied().find(|&l| l > threshold).unwrap_or(f64::INFINITY);

    let mut nonneg = PropertyCheck::new("superoperator spectrum nonnegative", Bound::AtLeast(-EPS_FN));
    nonneg.record(e.lambda_min());
    let mut kdim = PropertyCheck::new("kernel dimension", Bound::Equals(1.0));
    kdim.record(kernel_dim as f64);
    // the threshold grows with n, so report the ratio to keep merged checks comparable
    let mut gap_check = PropertyCheck::new("spectral gap / kernel threshold", Bound::Above(1.0));
    gap_check.record(if gap.is_finite() { gap / threshold } else { 0.0 });
    let mut ident = PropertyCheck::new("kernel spanned by identity", Bound::AtLeast(1.0 - 1e-8));
    let overlap: C64 = (0..n).map(|j| e.vectors[(j * n + j, 0)]).sum::<C64>() / (n as f64).sqrt();
    ident.record(overlap.norm());

    let mut coercive = PropertyCheck::new("kernel characterisation bound", Bound::AtMost(1.0 + 1e-8));
    let sqrt_gap = gap.sqrt();
    for case in 0..cases {
        let mut rng = case_rng(seed ^ 0x5EED, tag.0, tag.1, case);
        let a = unit_random(&mut rng, n);
        let tr = a.trace() / n as f64;
        let mut centred = a.clone();
        for j in 0..n {
            centred[(j, j)] -= tr;
        }
        let grad = d.delta1(&a)?.norm_hs() + d.delta2(&a)?.norm_hs();
        coercive.record(centred.norm_hs() * sqrt_gap / grad);
    }
    Ok(vec![herm, nonneg, kdim, gap_check, ident, coercive])
}

/// `τ(e^a Δa) ≥ 0` on random Hermitian `a` (strictly, by a margin of ten
/// times the tolerance), with equality on scalars.
pub fn exp_positivity_suite<D: Derivations + ?Sized>(
    d: &D,
    cases: usize,
    seed: u64,
    tag: (usize, usize),
) -> Result<Vec<PropertyCheck>> {
    let n = d.dim();
    let rows: Vec<Vec<f64>> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = case_rng(seed ^ 0xE4B, tag.0, tag.1, case);
            let a = random_hermitian(&mut rng, n, 0.5);
            let alpha: f64 = rng.random_range(-3.0..3.0);
            let scalar = HermMatrix::identity(n).scale(alpha);
            let v = exp_pairing(d, &a)?;
            let vs = exp_pairing(d, &scalar)?;
            Ok(vec![v, vs.abs(), v])
        })
        .collect::<Result<_>>()?;
    Ok(fold(
        vec![
            PropertyCheck::new("tau(e^a Lap a) nonnegative", Bound::AtLeast(-EPS_FN)),
            PropertyCheck::new("tau(e^a Lap a) vanishes on scalars", Bound::AtMost(EPS_FN)),
            PropertyCheck::new("tau(e^a Lap a) strict off scalars", Bound::Above(10.0 * EPS_FN)),
        ],
        rows,
    ))
}

/// `τ(e^a·Δa)`.
pub fn exp_pairing<D: Derivations + ?Sized>(d: &D, a: &HermMatrix) -> Result<f64> {
    let ea = mat_exp(a)?;
    let lap = d.laplacian(a)?;
    Ok(ea.mul(&lap)?.trace().re)
}

/// Initial metrics used by the flow suites.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialMetric {
    Flat(f64),
    Cigar(f64),
    Random { spread: f64, seed: u64 },
    Ladder,
}

impl InitialMetric {
    pub fn build(&self, t: &FuzzyTorus) -> Result<Metric> {
        match *self {
            InitialMetric::Flat(alpha) => flat(t.n(), alpha),
            InitialMetric::Cigar(mass) => cigar(t, mass),
            InitialMetric::Random { spread, seed } => random_metric(t.n(), spread, seed),
            InitialMetric::Ladder => ladder(t.n()),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            InitialMetric::Flat(alpha) => format!("flat {alpha}"),
            InitialMetric::Cigar(mass) => format!("cigar M={mass}"),
            InitialMetric::Random { spread, seed } => format!("random spread={spread} seed={seed}"),
            InitialMetric::Ladder => "diag ladder".into(),
        }
    }
}

/// The five initial metrics of the flow suite.
pub fn flow_corpus() -> Vec<InitialMetric> {
    vec![
        InitialMetric::Cigar(0.1),
        InitialMetric::Cigar(1.0),
        InitialMetric::Random { spread: 0.5, seed: 1 },
        InitialMetric::Random { spread: 2.0, seed: 1 },
        InitialMetric::Ladder,
    ]
}

/// Default controls with the horizon and the step ceiling stretched by the
/// flat level `c_∞`: the flow is covariant under `c ↦ κc, t ↦ κt`, so its
/// relaxation time grows linearly with the scale of the metric.
pub fn suite_config(c0: &Metric) -> FlowConfig {
    let scale = c0.c_infinity().max(1.0);
    FlowConfig { t_max: 1e4 * scale, h_max: scale, ..FlowConfig::default() }
}

/// Rounding floor of a central difference quotient of a quantity of size
/// `magnitude`, relative to the `rate` it estimates. `κ(c)` accounts for the
/// representation error of an ill-conditioned metric.
fn fd_floor(c: &Metric, magnitude: f64, dt: f64, rate: f64) -> f64 {
    let kappa = c.lambda_max() / c.lambda_min();
    f64::EPSILON * (magnitude + c.dim() as f64 * kappa) / (dt * rate.abs())
}

/// Outcome of a checked flow.
pub struct FlowReport {
    pub trace: FlowTrace,
    pub checks: Vec<PropertyCheck>,
}

/// Which optional per-state checks a flow suite performs.
#[derive(Clone, Copy, Debug)]
pub struct FlowChecks {
    /// Compare the analytic log-det rate with a central difference.
    pub log_det_rate: bool,
    /// Compare the Fréchet curvature with a central difference of `log c`.
    pub curvature_fd: bool,
    /// Perform finite-difference comparisons on every `stride`-th state.
    pub stride: usize,
}

impl Default for FlowChecks {
    fn default() -> Self {
        FlowChecks { log_det_rate: true, curvature_fd: false, stride: 1 }
    }
}

/// Integrates from `c0` and checks the flow invariants: convergence to
/// `c_∞·1`, trace conservation, the monotone quantities, eigenvalue
/// confinement, and the curvature identities at every accepted state.
pub fn flow_suite(
    t: &FuzzyTorus,
    c0: &Metric,
    config: &FlowConfig,
    opts: FlowChecks,
) -> Result<FlowReport> {
    let n = t.n() as f64;
    let c_inf = c0.c_infinity();
    let tr0 = c0.trace();

    let mut drift = PropertyCheck::new("relative trace drift", Bound::AtMost(1e-9));
    let mut confine = PropertyCheck::new("lambda_max <= n c_inf (1 + 1e-6)", Bound::AtMost(1.0 + 1e-6));
    let mut positive = PropertyCheck::new("lambda_min / c_inf positive", Bound::Above(0.0));
    let mut zero_avg = PropertyCheck::new("curvature zero average |tau(cR)|", Bound::AtMost(EPS_CURV));
    let mut r_herm = PropertyCheck::new("curvature Hermitian (relative)", Bound::AtMost(1e-12));
    let mut dk_sym = PropertyCheck::new("unsymmetrised Frechet log Hermitian", Bound::AtMost(1e-9));
    let mut ld_rate = PropertyCheck::new("log-det rate identity (relative)", Bound::AtMost(1e-6));
    let mut r_fd = PropertyCheck::new("curvature vs time difference (relative)", Bound::AtMost(1e-5));
    let mut failure: Option<Error> = None;
    let mut index = 0usize;

    let trace = integrate_with(t, c0, config, |s: &FlowState| {
        let c = &s.c;
        drift.record((s.diag.trace_c - tr0).abs() / tr0);
        confine.record(s.diag.lambda_max / (n * c_inf));
        positive.record(s.diag.lambda_min / c_inf);

        let r = &s.curvature;
        let rn = r.norm_hs();
        let avg = c.c().mul(r).map(|p| p.trace().norm()).unwrap_or(f64::NAN);
        zero_avg.record(if rn > 0.0 { avg / (c.c().norm_hs() * rn) } else { avg });

        let sample = index % opts.stride.max(1) == 0;
        index += 1;
        let raw = match frechet_log_raw(c.eig(), &s.velocity) {
            Ok(m) => m,
            Err(e) => {
                failure.get_or_insert(e);
                return;
            }
        };
        let scale = rn.max(f64::MIN_POSITIVE);
        r_herm.record(r.hermitian_defect() / scale);
        dk_sym.record(raw.hermitian_defect() / scale);

        if !(sample && (opts.log_det_rate || opts.curvature_fd)) {
            return;
        }
        let dt = fd_step(t, c);
        let (bwd, fwd) = match micro_steps(t, c, dt) {
            Ok(p) => p,
            Err(e) => {
                failure.get_or_insert(e);
                return;
            }
        };
        if opts.log_det_rate {
            let analytic = log_det_rate(t, c);
            let floor = fd_floor(c, c.log_det().abs(), dt, analytic);
            if analytic != 0.0 && floor <= FD_FLOOR_FRACTION * 1e-6 {
                let numeric = (fwd.log_det() - bwd.log_det()) / (2.0 * dt);
                ld_rate.record((numeric - analytic).abs() / analytic.abs());
            }
        }
        if opts.curvature_fd && rn > 0.0 {
            let floor = fd_floor(c, c.log().norm_hs() * n.sqrt(), dt, rn);
            if floor <= FD_FLOOR_FRACTION * 1e-5 {
                let diff = &fwd.log().into_cmatrix() - &bwd.log().into_cmatrix();
                let numeric = diff.scale(-1.0 / (2.0 * dt));
                r_fd.record(numeric.dist_hs(r) / rn);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let last = trace.states.last().expect("trace holds the initial state");
    let conv2 = config.conv_tol * config.conv_tol;
    let converged = converged_check(&trace, conv2);
    let mut terminal = PropertyCheck::new("terminal |c - c_inf 1|_2 / conv_tol", Bound::AtMost(1.0));
    let target = CMatrix::identity(t.n()).scale(c_inf);
    terminal.record(trace.final_state.c.c().dist_hs(&target) / config.conv_tol);
    let mut v_ld = PropertyCheck::new("log-det monotonicity violations", Bound::Equals(0.0));
    v_ld.record(trace.violations.log_det as f64);
    let mut v_s = PropertyCheck::new("entropy monotonicity violations", Bound::Equals(0.0));
    v_s.record(trace.violations.entropy as f64);
    let mut v_d = PropertyCheck::new("dist_flat monotonicity violations", Bound::Equals(0.0));
    v_d.record(trace.violations.dist_flat as f64);

    let first = &trace.states[0].diag;
    let mut strict = PropertyCheck::new("log det strictly increases while non-flat", Bound::Above(0.0));
    if first.dist_flat > conv2 {
        strict.record(last.diag.log_det_c - first.log_det_c);
    } else {
        strict.record(f64::MIN_POSITIVE);
    }

    let mut checks = vec![converged, terminal, drift, v_ld, v_s, v_d, strict, confine, positive];
    checks.extend([zero_avg, r_herm, dk_sym]);
    if opts.log_det_rate {
        checks.push(ld_rate);
    }
    if opts.curvature_fd {
        checks.push(r_fd);
    }
    Ok(FlowReport { trace, checks })
}

/// Entropy checks for the flow of the density matrix `c0/τ(c0)`: entropy
/// never decreases, `τ(lΔl)` is positive off the flat metric and matches the
/// central difference of `S`, and the terminal entropy is `log n`.
///
/// `config` holds the controls for the flow of `c0` itself; they are carried
/// over to the density matrix with the same rescaling of time.
pub fn density_suite(t: &FuzzyTorus, c0: &Metric, config: &FlowConfig, stride: usize) -> Result<FlowReport> {
    let (rho, kappa) = normalize_density(c0);
    let config = &config.rescaled(kappa);
    let n = t.n() as f64;
    let conv2 = config.conv_tol * config.conv_tol;
    let mut unit = PropertyCheck::new("density trace stays 1", Bound::AtMost(1e-9));
    let mut positive = PropertyCheck::new("tau(l Lap l) positive off flat", Bound::Above(0.0));
    let mut agree = PropertyCheck::new("entropy rate vs time difference", Bound::AtMost(1e-4));
    let mut failure: Option<Error> = None;
    let mut index = 0usize;

    let trace = integrate_with(t, &rho, config, |s: &FlowState| {
        unit.record((s.diag.trace_c - 1.0).abs());
        let sample = index % stride.max(1) == 0;
        index += 1;
        if s.diag.dist_flat <= conv2 || !sample {
            return;
        }
        // renormalise away the O(ε) trace drift so the check's precondition holds
        let c = match s.c.scaled(1.0 / s.c.trace()) {
            Ok(c) => c,
            Err(e) => {
                failure.get_or_insert(e);
                return;
            }
        };
        let dt = fd_step(t, &c);
        match entropy_rate_check(t, &c, dt) {
            Ok(rate) => {
                positive.record(rate.analytic);
                let floor = fd_floor(&c, entropy(&c), dt, rate.analytic);
                if floor <= FD_FLOOR_FRACTION * 1e-4 {
                    agree.record(rate.relative_gap());
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let converged = converged_check(&trace, conv2);
    let last = trace.states.last().expect("trace holds the initial state");
    let mut violations = PropertyCheck::new("entropy monotonicity violations", Bound::Equals(0.0));
    violations.record(trace.violations.entropy as f64);
    let mut terminal = PropertyCheck::new("terminal entropy vs log n", Bound::AtMost(1e-8));
    terminal.record((last.diag.entropy - n.ln()).abs());
    Ok(FlowReport { trace, checks: vec![converged, unit, violations, positive, agree, terminal] })
}

/// Terminal `dist_flat` relative to `conv_tol²`; infinite unless the run converged.
fn converged_check(trace: &FlowTrace, conv2: f64) -> PropertyCheck {
    let mut c = PropertyCheck::new("converged: dist_flat / conv_tol^2 < 1", Bound::AtMost(1.0));
    let last = trace.states.last().expect("trace holds the initial state");
    c.record(if trace.termination == Termination::Converged { last.diag.dist_flat / conv2 } else { f64::INFINITY });
    c
}

/// Flat metrics have vanishing curvature and non-flat ones do not.
pub fn flatness_suite(t: &FuzzyTorus, flats: &[Metric], others: &[Metric], conv_tol: f64) -> Vec<PropertyCheck> {
    let conv2 = conv_tol * conv_tol;
    let mut flat_r = PropertyCheck::new("flat metrics: |R|_2 <= 1e-8", Bound::AtMost(EPS_CURV));
    let mut flat_d = PropertyCheck::new("flat metrics: dist_flat <= conv_tol^2", Bound::AtMost(conv2));
    for c in flats {
        flat_r.record(crate::flow::scalar_curvature(t, c).norm_hs());
        flat_d.record(c.dist_to_scalar_sqr(c.c_infinity()));
    }
    let mut other_r = PropertyCheck::new("non-flat metrics: |R|_2 > 1e-8", Bound::Above(EPS_CURV));
    let mut other_d = PropertyCheck::new("non-flat metrics: dist_flat > conv_tol^2", Bound::Above(conv2));
    for c in others {
        other_r.record(crate::flow::scalar_curvature(t, c).norm_hs());
        other_d.record(c.dist_to_scalar_sqr(c.c_infinity()));
    }
    vec![flat_r, flat_d, other_r, other_d]
}

/// What `verify` runs.
#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub n_values: Vec<usize>,
    pub x_choice: XChoice,
    /// Random cases per `(n, m)` for the algebraic suites.
    pub seeds: usize,
    /// Random initial metrics per `(n, m)` for the flow suites (a cigar is
    /// always added).
    pub flow_seeds: usize,
    pub superop: bool,
    pub base_seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            n_values: (2..=8).collect(),
            x_choice: XChoice::Standard,
            seeds: 50,
            flow_seeds: 1,
            superop: false,
            base_seed: 0,
        }
    }
}

/// Runs every suite on every coprime `(n, m)` with `n` in `n_values`;
/// one report per suite and pair.
pub fn run(opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    let mut reports = Vec::new();
    for &n in &opts.n_values {
        for m in coprime_residues(n) {
            let t = FuzzyTorus::build(TorusParams::new(n, m).with_x_choice(opts.x_choice.clone()))?;
            let tag = format!("n={n} m={m} x={}", opts.x_choice.label());
            let seed = opts.base_seed;
            reports.push(SuiteReport {
                label: format!("derivations [{tag}]"),
                checks: derivation_suite(&t, opts.seeds, seed, (n, m))?,
            });
            if opts.superop {
                reports.push(SuiteReport {
                    label: format!("laplacian kernel [{tag}]"),
                    checks: kernel_suite(&t, opts.seeds, seed, (n, m))?,
                });
            }
            reports.push(SuiteReport {
                label: format!("exp positivity [{tag}]"),
                checks: exp_positivity_suite(&t, opts.seeds, seed, (n, m))?,
            });

            let mut metrics = vec![InitialMetric::Cigar(1.0)];
            metrics.extend((0..opts.flow_seeds as u64).map(|k| InitialMetric::Random {
                spread: 0.5,
                seed: seed.wrapping_add(k),
            }));
            let mut flow = SuiteReport { label: format!("flow invariants [{tag}]"), checks: vec![] };
            let mut dens = SuiteReport { label: format!("entropy [{tag}]"), checks: vec![] };
            for init in &metrics {
                let c0 = init.build(&t)?;
                let cfg = suite_config(&c0);
                flow.absorb(&flow_suite(&t, &c0, &cfg, FlowChecks::default())?.checks);
                dens.absorb(&density_suite(&t, &c0, &cfg, 1)?.checks);
            }
            reports.push(flow);
            reports.push(dens);
        }
    }
    Ok(reports)
}
