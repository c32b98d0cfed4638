//! Flat `key = value` configuration with the `paper-defaults` profile as the
//! base layer.
//!
//! A config file holds one `key = value` pair per line; `#` starts a comment
//! and values may be quoted. Keys mirror the solver fields:
//!
//! ```text
//! alpha = 1.0
//! t1 = 10            # defaults to T_max / 10
//! tau = 0.1
//! T_max = 100
//! eta_minus = 0.5
//! eta_plus = 2.0
//! theta = 0.9
//! delta = 0.1
//! delta_ts = 0.1     # defaults to delta
//! n_samples = 100
//! variance_mode = viscosity_consistent
//! ewma_beta = 0
//! max_iters = 1000000
//! max_evals = 1000000
//! target_tolerance = 0.05   # "none" disables the target stop
//! grad_tolerance = 1e-6
//! alpha_policy = warn
//! count_trace_evals = false
//! step_size = 0.5    # gd
//! fd_step = 1e-5     # gd
//! ```
//!
//! Command-line overrides are applied after the file, so flags win.

use std::path::Path;

use hjmad::baselines::{BaselineConfig, BaselineMethod};
use hjmad::envelope::{SamplerConfig, VarianceMode};
use hjmad::schedule::TimeStepParams;
use hjmad::solver::{AlphaPolicy, SolverConfig};
use serde::Serialize;

use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub alpha: f64,
    /// Explicit initial time; `T_max / 10` when unset.
    pub t1: Option<f64>,
    pub tau: f64,
    pub t_max: f64,
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub theta: f64,
    pub delta: f64,
    /// Time-step threshold; follows `delta` when unset.
    pub delta_ts: Option<f64>,
    pub n_samples: usize,
    pub variance_mode: VarianceMode,
    pub ewma_beta: f64,
    pub max_iters: usize,
    /// Evaluation budget per run.
    pub max_evals: u64,
    pub target_tolerance: Option<f64>,
    pub grad_tolerance: f64,
    pub alpha_policy: AlphaPolicy,
    pub count_trace_evals: bool,
    pub step_size: f64,
    pub fd_step: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings::paper_defaults()
    }
}

impl Settings {
    /// 100 samples per gradient, target `f* + 5·10⁻²`, `δ = 0.1`, `α = 1`,
    /// `η₋ = 0.5`, `η₊ = 2`, `θ = 0.9`, `T = 100`, `τ = T/1000`, `t₁ = T/10`.
    pub fn paper_defaults() -> Self {
        Settings {
            alpha: 1.0,
            t1: None,
            tau: 0.1,
            t_max: 100.0,
            eta_minus: 0.5,
            eta_plus: 2.0,
            theta: 0.9,
            delta: 0.1,
            delta_ts: None,
            n_samples: 100,
            variance_mode: VarianceMode::ViscosityConsistent,
            ewma_beta: 0.0,
            max_iters: 1_000_000,
            max_evals: 1_000_000,
            target_tolerance: Some(5e-2),
            grad_tolerance: 1e-6,
            alpha_policy: AlphaPolicy::Warn,
            count_trace_evals: false,
            step_size: 0.5,
            fd_step: 1e-5,
        }
    }

    pub fn profile(name: &str) -> Result<Self, BenchError> {
        match name {
            "paper-defaults" | "paper_defaults" => Ok(Settings::paper_defaults()),
            other => Err(BenchError::Usage(format!("unknown profile `{other}`"))),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        let value = value.trim().trim_matches('"').trim_matches('\'');
        match key.trim() {
            "alpha" => self.alpha = num(key, value)?,
            "t1" => self.t1 = Some(num(key, value)?),
            "tau" => self.tau = num(key, value)?,
            "T_max" | "T" | "t_max" => self.t_max = num(key, value)?,
            "eta_minus" => self.eta_minus = num(key, value)?,
            "eta_plus" => self.eta_plus = num(key, value)?,
            "theta" => self.theta = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "delta_ts" => self.delta_ts = Some(num(key, value)?),
            "n_samples" => self.n_samples = num(key, value)?,
            "variance_mode" => {
                self.variance_mode = value
                    .parse()
                    .map_err(|e: hjmad::Error| BenchError::Usage(e.to_string()))?
            }
            "ewma_beta" => self.ewma_beta = num(key, value)?,
            "max_iters" => self.max_iters = num(key, value)?,
            "max_evals" | "budget" => self.max_evals = num::<f64>(key, value)? as u64,
            "target_tolerance" => {
                self.target_tolerance = match value {
                    "none" | "off" => None,
                    v => Some(num(key, v)?),
                }
            }
            "grad_tolerance" => self.grad_tolerance = num(key, value)?,
            "alpha_policy" => {
                self.alpha_policy = match value {
                    "warn" => AlphaPolicy::Warn,
                    "error" => AlphaPolicy::Error,
                    v => {
                        return Err(BenchError::Usage(format!(
                            "alpha_policy must be warn or error, got `{v}`"
                        )))
                    }
                }
            }
            "count_trace_evals" => self.count_trace_evals = num(key, value)?,
            "step_size" => self.step_size = num(key, value)?,
            "fd_step" => self.fd_step = num(key, value)?,
            other => return Err(BenchError::Usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), BenchError> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| BenchError::Usage(format!("override `{kv}` is not key=value")))?;
        self.set(k, v)
    }

    pub fn apply_str(&mut self, text: &str) -> Result<(), BenchError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                BenchError::Usage(format!("config line {}: expected key = value", lineno + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_str(&text)
    }

    pub fn solver_config(&self, seed: u64) -> Result<SolverConfig, BenchError> {
        let cfg = SolverConfig {
            alpha: self.alpha,
            t1: self.t1.unwrap_or(self.t_max / 10.0),
            schedule: TimeStepParams {
                eta_minus: self.eta_minus,
                eta_plus: self.eta_plus,
                theta: self.theta,
                delta_ts: self.delta_ts.unwrap_or(self.delta),
                tau: self.tau,
                t_max: self.t_max,
            },
            sampler: SamplerConfig {
                n_samples: self.n_samples,
                delta: self.delta,
                variance_mode: self.variance_mode,
            },
            ewma_beta: self.ewma_beta,
            max_iters: self.max_iters,
            target_tolerance: self.target_tolerance,
            grad_tolerance: self.grad_tolerance,
            seed,
            alpha_policy: self.alpha_policy,
            count_trace_evals: self.count_trace_evals,
        };
        cfg.validate()
            .map_err(|e| BenchError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    /// Solver config for HJ-MAD with the evaluation budget folded into
    /// `max_iters`.
    pub fn hj_mad_config(&self, seed: u64) -> Result<SolverConfig, BenchError> {
        let mut cfg = self.solver_config(seed)?;
        let per_iter = self.n_samples as u64 + u64::from(self.count_trace_evals);
        let by_budget = (self.max_evals / per_iter).max(1);
        cfg.max_iters = cfg.max_iters.min(by_budget as usize);
        Ok(cfg)
    }

    pub fn baseline_config(
        &self,
        method: BaselineMethod,
        seed: u64,
    ) -> Result<BaselineConfig, BenchError> {
        let cfg = BaselineConfig {
            method,
            step_size: self.step_size,
            fd_step: self.fd_step,
            budget: self.max_evals,
            seed,
            domain: None,
            target_tolerance: self.target_tolerance,
        };
        cfg.validate()
            .map_err(|e| BenchError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, BenchError> {
    value
        .parse()
        .map_err(|_| BenchError::Usage(format!("invalid value `{value}` for `{key}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_defaults_profile() {
        let s = Settings::profile("paper-defaults").unwrap();
        let cfg = s.solver_config(3).unwrap();
        assert_eq!(cfg.sampler.n_samples, 100);
        assert_eq!(cfg.sampler.variance_mode, VarianceMode::ViscosityConsistent);
        assert_eq!(cfg.target_tolerance, Some(0.05));
        assert_eq!(cfg.t1, cfg.schedule.t_max / 10.0);
        assert_eq!(cfg.schedule.delta_ts, cfg.sampler.delta);
        assert_eq!(
            (
                cfg.schedule.eta_minus,
                cfg.schedule.eta_plus,
                cfg.schedule.theta
            ),
            (0.5, 2.0, 0.9)
        );
        assert_eq!((cfg.alpha, cfg.sampler.delta), (1.0, 0.1));
        assert_eq!(cfg.seed, 3);
        assert!(Settings::profile("fast").is_err());
    }

    #[test]
    fn file_then_overrides() {
        let mut s = Settings::paper_defaults();
        s.apply_str("# comment\nalpha = 0.8\n\nT_max = 50   # trailing\nvariance_mode = \"paper_literal\"\n")
            .unwrap();
        s.apply_override("alpha=1.2").unwrap();
        assert_eq!(s.alpha, 1.2);
        assert_eq!(s.t_max, 50.0);
        assert_eq!(s.variance_mode, VarianceMode::PaperLiteral);
        assert_eq!(s.solver_config(0).unwrap().t1, 5.0);
    }

    #[test]
    fn delta_ts_follows_delta_unless_set() {
        let mut s = Settings::paper_defaults();
        s.set("delta", "0.3").unwrap();
        assert_eq!(s.solver_config(0).unwrap().schedule.delta_ts, 0.3);
        s.set("delta_ts", "0.01").unwrap();
        assert_eq!(s.solver_config(0).unwrap().schedule.delta_ts, 0.01);
    }

    #[test]
    fn bad_keys_and_values_are_usage_errors() {
        let mut s = Settings::paper_defaults();
        assert!(matches!(s.set("nope", "1"), Err(BenchError::Usage(_))));
        assert!(matches!(s.set("alpha", "abc"), Err(BenchError::Usage(_))));
        assert!(matches!(
            s.apply_override("alpha"),
            Err(BenchError::Usage(_))
        ));
        assert!(matches!(s.apply_str("alpha 1"), Err(BenchError::Usage(_))));
        s.set("tau", "500").unwrap();
        assert!(matches!(s.solver_config(0), Err(BenchError::Usage(_))));
    }

    #[test]
    fn budget_caps_iterations() {
        let mut s = Settings::paper_defaults();
        s.set("max_evals", "1.2e6").unwrap();
        assert_eq!(s.hj_mad_config(0).unwrap().max_iters, 12_000);
        s.set("target_tolerance", "none").unwrap();
        assert_eq!(s.target_tolerance, None);
    }
}
