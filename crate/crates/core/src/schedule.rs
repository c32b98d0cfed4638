//! Adaptive time-step rule.
//!
//! ```text
//! TimeStep(t, p, q) = min(η₊ t, T)   if ‖p‖ ≤ θ‖q‖ + δ
//!                     max(η₋ t, τ)   otherwise
//! ```
//!
//! with `p` the current and `q` the previous envelope gradient. Time grows
//! when the gradient stalls and shrinks when it is large, in the manner of a
//! trust-region radius.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStepParams {
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub theta: f64,
    /// Additive threshold on the gradient norm. Independent of the viscosity
    /// even though both are usually set to the same value.
    pub delta_ts: f64,
    /// Time floor `τ`.
    pub tau: f64,
    /// Time ceiling `T`.
    pub t_max: f64,
}

impl Default for TimeStepParams {
    fn default() -> Self {
        TimeStepParams {
            eta_minus: 0.5,
            eta_plus: 2.0,
            theta: 0.9,
            delta_ts: 0.1,
            tau: 0.1,
            t_max: 100.0,
        }
    }
}

impl TimeStepParams {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        if !(0.0 < p.eta_minus && p.eta_minus < 1.0) {
            return Err(Error::invalid(format!(
                "eta_minus must lie in (0, 1), got {}",
                p.eta_minus
            )));
        }
        if !(p.eta_plus > 1.0 && p.eta_plus.is_finite()) {
            return Err(Error::invalid(format!(
                "eta_plus must exceed 1, got {}",
                p.eta_plus
            )));
        }
        if !(0.0 < p.theta && p.theta < 1.0) {
            return Err(Error::invalid(format!(
                "theta must lie in (0, 1), got {}",
                p.theta
            )));
        }
        if !(p.delta_ts >= 0.0 && p.delta_ts.is_finite()) {
            return Err(Error::invalid(format!(
                "delta_ts must be nonnegative, got {}",
                p.delta_ts
            )));
        }
        if !(0.0 < p.tau && p.tau <= p.t_max && p.t_max.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < tau <= T, got tau={} T={}",
                p.tau, p.t_max
            )));
        }
        Ok(())
    }

    /// Pins the time at `t`: `τ = T = t`, so every step returns `t`.
    pub fn constant(t: f64) -> Self {
        TimeStepParams {
            tau: t,
            t_max: t,
            ..Default::default()
        }
    }
}

/// One application of the time-step rule. `t` must already lie in `[τ, T]`;
/// the result always does.
pub fn time_step(t: f64, p_norm: f64, q_norm: f64, params: &TimeStepParams) -> Result<f64> {
    if !(params.tau <= t && t <= params.t_max) {
        return Err(Error::invalid(format!(
            "time {t} outside [{}, {}]",
            params.tau, params.t_max
        )));
    }
    if p_norm <= params.theta * q_norm + params.delta_ts {
        Ok((params.eta_plus * t).min(params.t_max))
    } else {
        Ok((params.eta_minus * t).max(params.tau))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> TimeStepParams {
        TimeStepParams {
            eta_minus: 0.5,
            eta_plus: 2.0,
            theta: 0.9,
            delta_ts: 1e-3,
            tau: 0.1,
            t_max: 10.0,
        }
    }

    #[test]
    fn grow_branch() {
        assert_eq!(time_step(1.0, 0.0, 5.0, &params()).unwrap(), 2.0);
    }

    #[test]
    fn shrink_branch() {
        assert_eq!(time_step(1.0, 5.0, 1.0, &params()).unwrap(), 0.5);
    }

    #[test]
    fn clamps() {
        assert_eq!(time_step(8.0, 0.0, 0.0, &params()).unwrap(), 10.0);
        assert_eq!(time_step(0.15, 5.0, 0.0, &params()).unwrap(), 0.1);
        assert_eq!(time_step(10.0, 0.0, 0.0, &params()).unwrap(), 10.0);
        assert_eq!(time_step(0.1, 5.0, 0.0, &params()).unwrap(), 0.1);
    }

    #[test]
    fn boundary_of_condition_grows() {
        // ‖p‖ = θ‖q‖ + δ exactly
        let p = TimeStepParams {
            delta_ts: 0.5,
            ..params()
        };
        assert_eq!(time_step(1.0, 0.9 * 2.0 + 0.5, 2.0, &p).unwrap(), 2.0);
    }

    #[test]
    fn out_of_range_time_is_an_error() {
        assert!(time_step(20.0, 0.0, 0.0, &params()).is_err());
        assert!(time_step(0.01, 0.0, 0.0, &params()).is_err());
    }

    #[test]
    fn validation() {
        assert!(params().validate().is_ok());
        assert!(TimeStepParams {
            eta_minus: 1.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(TimeStepParams {
            eta_plus: 1.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(TimeStepParams {
            theta: 0.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(TimeStepParams {
            tau: 20.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(TimeStepParams {
            delta_ts: -1.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(TimeStepParams::constant(1.0).validate().is_ok());
    }

    fn valid_params() -> impl Strategy<Value = TimeStepParams> {
        (
            0.01f64..0.99,
            1.01f64..10.0,
            0.01f64..0.99,
            0.0f64..1.0,
            1e-4f64..1.0,
            1.0f64..1e3,
        )
            .prop_map(
                |(eta_minus, eta_plus, theta, delta_ts, tau, span)| TimeStepParams {
                    eta_minus,
                    eta_plus,
                    theta,
                    delta_ts,
                    tau,
                    t_max: tau * span,
                },
            )
    }

    proptest! {
        #[test]
        fn output_stays_in_range_and_branches_are_monotone(
            p in valid_params(),
            frac in 0.0f64..=1.0,
            p_norm in 0.0f64..100.0,
            q_norm in 0.0f64..100.0,
        ) {
            let t = (p.tau + frac * (p.t_max - p.tau)).clamp(p.tau, p.t_max);
            let next = time_step(t, p_norm, q_norm, &p).unwrap();
            prop_assert!(p.tau <= next && next <= p.t_max);
            if p_norm <= p.theta * q_norm + p.delta_ts {
                prop_assert!(next >= t);
            } else {
                prop_assert!(next <= t);
            }
        }

        #[test]
        fn endpoints_are_fixed(p in valid_params()) {
            prop_assert_eq!(time_step(p.t_max, 0.0, 0.0, &p).unwrap(), p.t_max);
            prop_assert_eq!(time_step(p.tau, 1e9, 0.0, &p).unwrap(), p.tau);
        }
    }
}
