//! Comparison methods: finite-difference gradient descent (a purely local
//! method) and pure random search.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::solver::{IterateRecord, StopReason, Trace, TraceBuilder};
use crate::{norm, BoxDomain, Error, Objective, Result};

/// GD stops once the finite-difference gradient norm drops below this.
pub const GD_GRAD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    GdFd,
    Prs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub step_size: f64,
    /// Finite-difference step `h`.
    pub fd_step: f64,
    /// Maximum number of counted evaluations.
    pub budget: u64,
    pub seed: u64,
    /// Sampling box for PRS; the objective's default domain when absent.
    pub domain: Option<BoxDomain>,
    pub target_tolerance: Option<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            method: BaselineMethod::GdFd,
            step_size: 0.5,
            fd_step: 1e-5,
            budget: 100_000,
            seed: 0,
            domain: None,
            target_tolerance: Some(5e-2),
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::invalid("fd_step must be positive"));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::invalid("step_size must be positive"));
        }
        Ok(())
    }
}

fn target_level(obj: &Objective, tol: Option<f64>) -> Option<f64> {
    Some(obj.known_optimum()?.value + tol?)
}

/// Dispatches on `cfg.method`. `x1` is ignored by PRS.
pub fn run_baseline(obj: &Objective, x1: &[f64], cfg: &BaselineConfig) -> Result<Trace> {
    match cfg.method {
        BaselineMethod::GdFd => run_gd_fd(obj, x1, cfg),
        BaselineMethod::Prs => run_prs(obj, cfg),
    }
}

/// Gradient descent with central-difference gradients (`2n` evaluations per
/// step). Records carry the step size in the `t` column.
pub fn run_gd_fd(obj: &Objective, x1: &[f64], cfg: &BaselineConfig) -> Result<Trace> {
    cfg.validate()?;
    let dim = obj.dim();
    if x1.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x1.len(),
        });
    }
    let start = obj.evaluations();
    let target = target_level(obj, cfg.target_tolerance);
    let per_step = 2 * dim as u64;
    let h = cfg.fd_step;

    let mut tb = TraceBuilder::new();
    let mut x = x1.to_vec();
    let mut probe = x.clone();
    let mut k = 0;
    loop {
        k += 1;
        let used = obj.evaluations() - start;
        if used + per_step > cfg.budget {
            if k == 1 {
                return Err(Error::invalid(format!(
                    "budget {} below one gradient ({per_step} evaluations)",
                    cfg.budget
                )));
            }
            return Ok(tb.finish(StopReason::MaxIters));
        }
        let mut g = vec![0.0; dim];
        for i in 0..dim {
            probe[i] = x[i] + h;
            let up = obj.evaluate(&probe)?;
            probe[i] = x[i] - h;
            let down = obj.evaluate(&probe)?;
            probe[i] = x[i];
            g[i] = (up - down) / (2.0 * h);
        }
        tb.add_trace_eval();
        let f_x = obj.evaluate_uncounted(&x)?;
        if !f_x.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(tb.fail(Error::NonFinite {
                point: x.clone(),
                value: f_x,
            }));
        }
        let g_norm = norm(&g);
        tb.push(IterateRecord {
            k,
            x: x.clone(),
            f_x,
            t: cfg.step_size,
            g_norm,
            u_est: f_x,
            cum_evals: obj.evaluations() - start,
        });
        if target.is_some_and(|level| f_x <= level) {
            return Ok(tb.finish(StopReason::TargetReached));
        }
        if g_norm <= GD_GRAD_TOLERANCE {
            return Ok(tb.finish(StopReason::Stationary));
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= cfg.step_size * gi;
        }
        probe.copy_from_slice(&x);
    }
}

/// Pure random search: i.i.d. uniform samples from the domain, one record per
/// sample; the incumbent is `best_x` / `best_f`.
pub fn run_prs(obj: &Objective, cfg: &BaselineConfig) -> Result<Trace> {
    cfg.validate()?;
    let domain = cfg
        .domain
        .as_ref()
        .or(obj.default_domain())
        .ok_or_else(|| Error::invalid("random search needs a domain"))?;
    if domain.dim() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: domain.dim(),
        });
    }
    let target = target_level(obj, cfg.target_tolerance);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tb = TraceBuilder::new();
    for k in 1..=cfg.budget {
        let x = domain.sample_uniform(&mut rng);
        let f_x = obj.evaluate(&x)?;
        tb.push(IterateRecord {
            k: k as usize,
            x,
            f_x,
            t: 0.0,
            g_norm: 0.0,
            u_est: f_x,
            cum_evals: k,
        });
        if target.is_some_and(|level| f_x <= level) {
            return Ok(tb.finish(StopReason::TargetReached));
        }
    }
    Ok(tb.finish(StopReason::MaxIters))
}
