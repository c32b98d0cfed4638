//! Moreau adaptive descent loops.
//!
//! Both solvers iterate
//!
//! ```text
//! gᵏ     = ∇u(xᵏ, t_k)            (exact grid prox, or sampled viscous estimate)
//! xᵏ⁺¹   = xᵏ − α t_k gᵏ
//! t_k+1  = TimeStep(t_k, gᵏ, gᵏ⁻¹)
//! ```
//!
//! without any projection. The first iteration has no previous gradient and
//! keeps `t₂ = t₁`.
//!
//! A run stops at the first of: the benchmark target `f(xᵏ) ≤ f* + tol` is
//! met; `‖gᵏ‖ ≤ grad_tolerance` with `t_k = T` for [`STALL_ITERS`]
//! consecutive iterations; `max_iters` iterations.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::{estimate_gradient, ewma_update, GridSpec, GridTable, SamplerConfig};
use crate::schedule::{time_step, TimeStepParams};
use crate::{dist_sq, norm, Error, GammaSpec, Objective, Result};

/// Consecutive small-gradient iterations at `t = T` before a run is
/// declared stationary.
pub const STALL_ITERS: usize = 5;

/// What to do when `α` violates `α ∈ (1 − √η₋, 1 + √η₋)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPolicy {
    #[default]
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Step size `α`.
    pub alpha: f64,
    /// Initial time `t₁`.
    pub t1: f64,
    pub schedule: TimeStepParams,
    /// Sampling parameters, used by HJ-MAD only.
    pub sampler: SamplerConfig,
    /// EWMA weight on past gradients; 0 disables averaging.
    pub ewma_beta: f64,
    pub max_iters: usize,
    /// Stop once `f(xᵏ) ≤ f* + tol` (objectives with a known optimum only).
    pub target_tolerance: Option<f64>,
    pub grad_tolerance: f64,
    pub seed: u64,
    pub alpha_policy: AlphaPolicy,
    /// Count the per-iteration `f(xᵏ)` evaluations made for the trace as part
    /// of the algorithm's cost.
    pub count_trace_evals: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let schedule = TimeStepParams::default();
        SolverConfig {
            alpha: 1.0,
            t1: schedule.t_max / 10.0,
            schedule,
            sampler: SamplerConfig::default(),
            ewma_beta: 0.0,
            max_iters: 10_000,
            target_tolerance: Some(5e-2),
            grad_tolerance: 1e-6,
            seed: 0,
            alpha_policy: AlphaPolicy::Warn,
            count_trace_evals: false,
        }
    }
}

impl SolverConfig {
    /// Open interval `(1 − √η₋, 1 + √η₋)` of admissible step sizes.
    pub fn alpha_range(&self) -> (f64, f64) {
        let r = self.schedule.eta_minus.sqrt();
        (1.0 - r, 1.0 + r)
    }

    pub fn alpha_admissible(&self) -> bool {
        let (lo, hi) = self.alpha_range();
        lo < self.alpha && self.alpha < hi
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.sampler.validate()?;
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.schedule.tau <= self.t1 && self.t1 <= self.schedule.t_max) {
            return Err(Error::invalid(format!(
                "t1 = {} must lie in [tau, T] = [{}, {}]",
                self.t1, self.schedule.tau, self.schedule.t_max
            )));
        }
        if !(0.0..1.0).contains(&self.ewma_beta) {
            return Err(Error::invalid(format!(
                "ewma_beta must lie in [0, 1), got {}",
                self.ewma_beta
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if matches!(self.target_tolerance, Some(tol) if !(tol >= 0.0)) {
            return Err(Error::invalid("target_tolerance must be nonnegative"));
        }
        if !(self.grad_tolerance >= 0.0) {
            return Err(Error::invalid("grad_tolerance must be nonnegative"));
        }
        if !self.alpha_admissible() {
            let (lo, hi) = self.alpha_range();
            let msg = format!(
                "alpha = {} outside ({lo:.4}, {hi:.4}); descent is not guaranteed",
                self.alpha
            );
            match self.alpha_policy {
                AlphaPolicy::Warn => warn!("{msg}"),
                AlphaPolicy::Error => return Err(Error::InvalidArgument(msg)),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub f_x: f64,
    pub t: f64,
    pub g_norm: f64,
    /// Envelope value at `(xᵏ, t_k)`: exact for MAD, the sampled viscous
    /// estimate for HJ-MAD.
    pub u_est: f64,
    pub cum_evals: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    GradSmallAtT,
    MaxIters,
    /// Baseline gradient descent hit its gradient tolerance.
    Stationary,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::TargetReached => "target_reached",
            StopReason::GradSmallAtT => "grad_small_at_T",
            StopReason::MaxIters => "max_iters",
            StopReason::Stationary => "stationary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<IterateRecord>,
    pub stop_reason: StopReason,
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Uncounted evaluations made only to fill in `f_x`.
    pub trace_evals: u64,
}

impl Trace {
    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("trace has at least one record")
    }

    /// Algorithmic evaluations at the first record meeting `f ≤ level`.
    pub fn evals_to_reach(&self, level: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.f_x <= level)
            .map(|r| r.cum_evals)
    }
}

/// Accumulates records and the incumbent.
pub(crate) struct TraceBuilder {
    records: Vec<IterateRecord>,
    best: Option<(Vec<f64>, f64)>,
    trace_evals: u64,
}

impl TraceBuilder {
    pub(crate) fn new() -> Self {
        TraceBuilder {
            records: Vec::new(),
            best: None,
            trace_evals: 0,
        }
    }

    pub(crate) fn push(&mut self, rec: IterateRecord) {
        if self.best.as_ref().is_none_or(|(_, f)| rec.f_x < *f) {
            self.best = Some((rec.x.clone(), rec.f_x));
        }
        self.records.push(rec);
    }

    pub(crate) fn add_trace_eval(&mut self) {
        self.trace_evals += 1;
    }

    pub(crate) fn finish(self, stop_reason: StopReason) -> Trace {
        let (best_x, best_f) = self.best.unwrap_or((Vec::new(), f64::INFINITY));
        Trace {
            records: self.records,
            stop_reason,
            best_x,
            best_f,
            trace_evals: self.trace_evals,
        }
    }

    /// Wraps `err` together with the partial trace.
    pub(crate) fn fail(self, err: Error) -> Error {
        Error::Solver {
            source: Box::new(err),
            trace: Box::new(self.finish(StopReason::MaxIters)),
        }
    }
}

fn target_level(obj: &Objective, cfg: &SolverConfig) -> Option<f64> {
    let tol = cfg.target_tolerance?;
    obj.known_optimum().map(|o| o.value + tol)
}

/// `f(xᵏ)` for the trace, counted only if the config says so.
fn trace_value(obj: &Objective, x: &[f64], count: bool, tb: &mut TraceBuilder) -> Result<f64> {
    if count {
        obj.evaluate(x)
    } else {
        tb.add_trace_eval();
        obj.evaluate_uncounted(x)
    }
}

/// Shared loop of both solvers; `gradient` returns `(gᵏ, u(xᵏ, t_k))`.
/// `cum_evals` counts from `start_evals`.
fn descend<G>(
    obj: &Objective,
    x1: &[f64],
    cfg: &SolverConfig,
    start_evals: u64,
    mut gradient: G,
) -> Result<Trace>
where
    G: FnMut(&[f64], f64) -> Result<(Vec<f64>, f64)>,
{
    cfg.validate()?;
    if x1.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x1.len(),
        });
    }
    let target = target_level(obj, cfg);
    let params = &cfg.schedule;

    let mut tb = TraceBuilder::new();
    let mut x = x1.to_vec();
    let mut t = cfg.t1;
    let mut g_avg: Option<Vec<f64>> = None;
    let mut prev_norm: Option<f64> = None;
    let mut stalled = 0;

    for k in 1..=cfg.max_iters {
        let (raw, u) = match gradient(&x, t) {
            Ok(v) => v,
            Err(e) => return Err(tb.fail(e)),
        };
        let g = if cfg.ewma_beta > 0.0 {
            ewma_update(g_avg.as_deref(), &raw, cfg.ewma_beta)?
        } else {
            raw
        };
        let g_norm = norm(&g);
        let f_x = match trace_value(obj, &x, cfg.count_trace_evals, &mut tb) {
            Ok(v) => v,
            Err(e) => return Err(tb.fail(e)),
        };
        tb.push(IterateRecord {
            k,
            x: x.clone(),
            f_x,
            t,
            g_norm,
            u_est: u,
            cum_evals: obj.evaluations() - start_evals,
        });

        if target.is_some_and(|level| f_x <= level) {
            return Ok(tb.finish(StopReason::TargetReached));
        }
        if g_norm <= cfg.grad_tolerance && t == params.t_max {
            stalled += 1;
            if stalled >= STALL_ITERS {
                return Ok(tb.finish(StopReason::GradSmallAtT));
            }
        } else {
            stalled = 0;
        }

        let step = cfg.alpha * t;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(tb.fail(Error::NonFiniteIterate { k }));
        }
        t = match prev_norm {
            None => t,
            Some(q) => time_step(t, g_norm, q, params)?,
        };
        prev_norm = Some(g_norm);
        if cfg.ewma_beta > 0.0 {
            g_avg = Some(g);
        }
    }
    Ok(tb.finish(StopReason::MaxIters))
}

/// Moreau adaptive descent with the proximal point computed exactly on
/// `grid`. The objective is tabulated on the grid once per run; those
/// evaluations are part of `cum_evals`.
pub fn run_mad(obj: &Objective, x1: &[f64], cfg: &SolverConfig, grid: &GridSpec) -> Result<Trace> {
    cfg.validate()?;
    let start_evals = obj.evaluations();
    let table = GridTable::build(obj, grid)?;
    descend(obj, x1, cfg, start_evals, |x, t| {
        let (z, u) = table.prox(x, t)?;
        let g = x.iter().zip(&z).map(|(xi, zi)| (xi - zi) / t).collect();
        Ok((g, u))
    })
}

/// Hamilton-Jacobi Moreau adaptive descent: the envelope gradient is the
/// sampled viscous estimate. Deterministic in `cfg.seed`.
pub fn run_hj_mad(obj: &Objective, x1: &[f64], cfg: &SolverConfig) -> Result<Trace> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    descend(obj, x1, cfg, obj.evaluations(), |x, t| {
        let est = estimate_gradient(obj, x, t, &cfg.sampler, &mut rng)?;
        Ok((est.g, est.envelope_value))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the parameter conditions under which MAD is guaranteed to reach
/// the global minimum. Never fails; violations are reported.
pub fn check_assumptions(
    obj: &Objective,
    x1: &[f64],
    cfg: &SolverConfig,
    gamma: GammaSpec,
) -> AssumptionReport {
    let (lo, hi) = cfg.alpha_range();
    let p = &cfg.schedule;
    let mut checks = vec![
        AssumptionCheck {
            name: "alpha",
            passed: cfg.alpha_admissible(),
            detail: format!("alpha = {} in ({lo:.6}, {hi:.6})", cfg.alpha),
        },
        AssumptionCheck {
            name: "time_bounds",
            passed: p.tau <= cfg.t1 && cfg.t1 <= p.t_max,
            detail: format!("tau = {} <= t1 = {} <= T = {}", p.tau, cfg.t1, p.t_max),
        },
    ];
    let t1_check = match obj.known_optimum() {
        Some(opt) if opt.x.len() == x1.len() => {
            let bound = dist_sq(&opt.x, x1) / (2.0 * gamma.gamma());
            AssumptionCheck {
                name: "t1_reach",
                passed: cfg.t1 >= bound,
                detail: format!("t1 = {} >= |x* - x1|^2 / (2 gamma) = {bound}", cfg.t1),
            }
        }
        _ => AssumptionCheck {
            name: "t1_reach",
            passed: false,
            detail: "no known optimum of matching dimension".into(),
        },
    };
    checks.push(t1_check);
    AssumptionReport { checks }
}
