//! Zero-order global minimization by gradient descent on Moreau envelopes
//! with an adaptive smoothing time.
//!
//! Two solvers are provided:
//!
//! * [`solver::run_mad`] uses an exact proximal point computed by brute force
//!   over a grid. It is a reference method for one- and two-dimensional
//!   problems and is what the descent and boundedness properties are checked
//!   against.
//! * [`solver::run_hj_mad`] replaces the proximal point by a Monte-Carlo
//!   estimate of the gradient of the viscous envelope
//!   `u^δ(x, t) = -δ log E[exp(-f(y)/δ)]`, `y ~ N(x, s²I)`, which only needs
//!   function values and works in any dimension.
//!
//! The time `t` is grown when the envelope gradient stalls (to see past local
//! minima) and shrunk when it is large (to follow the local landscape), see
//! [`schedule::time_step`].
//!
//! ```
//! use hjmad::{objectives, solver::{run_hj_mad, SolverConfig}};
//!
//! let obj = objectives::lookup("griewank", 2).unwrap();
//! let cfg = SolverConfig::default();
//! let trace = run_hj_mad(&obj, &[20.0, -15.0], &cfg).unwrap();
//! assert!(trace.best_f <= trace.records[0].f_x);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod envelope;
mod error;
pub mod objectives;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use objectives::{BoxDomain, GammaSpec, Objective, Optimum};
pub use solver::{IterateRecord, StopReason, Trace};

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
