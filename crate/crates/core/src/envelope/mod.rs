//! Moreau envelope machinery.
//!
//! The Moreau envelope of `f` with time `t` is
//!
//! ```text
//! u(x, t) = min_z f(z) + ‖z − x‖² / (2t)
//! ```
//!
//! and its gradient, where it exists, is `(x − prox_{tf}(x)) / t`. Adding
//! viscosity `δ` and applying the Cole-Hopf transform gives the smoothed
//! envelope
//!
//! ```text
//! u^δ(x, t) = −δ log E_{y ~ N(x, s²I)} [exp(−f(y)/δ)]
//! ∇u^δ(x, t) = (δ / s²) (x − E_w[y]),   w ∝ exp(−f(y)/δ)
//! ```
//!
//! which [`estimate_gradient`] approximates by sampling. The exact oracles in
//! [`grid`] and [`quadrature`] evaluate the same quantities deterministically
//! in one or two dimensions and are what the estimator is validated against.

pub mod grid;
pub mod quadrature;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Objective, Result};

pub use grid::{exact_envelope_grid, exact_prox_grid, GridSpec, GridTable};
pub use quadrature::{quadrature_envelope_value, quadrature_gradient_oracle};

/// Batches at least this large are evaluated on the rayon pool.
const PARALLEL_MIN_SAMPLES: usize = 4096;

/// Variance `s²` of the Gaussian the samples are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// `s² = 2t`: the heat kernel `(4πt)^{-n/2} exp(−‖x‖²/4t)`.
    PaperLiteral,
    /// `s² = δt`: the heat kernel of `u_t + ½‖Du‖² = (δ/2)Δu`. Only this
    /// choice recovers `(x − prox)/t` as `δ → 0`.
    #[default]
    ViscosityConsistent,
}

impl VarianceMode {
    pub fn variance(self, t: f64, delta: f64) -> f64 {
        match self {
            VarianceMode::PaperLiteral => 2.0 * t,
            VarianceMode::ViscosityConsistent => delta * t,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VarianceMode::PaperLiteral => "paper_literal",
            VarianceMode::ViscosityConsistent => "viscosity_consistent",
        }
    }
}

impl std::str::FromStr for VarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_literal" | "paper-literal" => Ok(VarianceMode::PaperLiteral),
            "viscosity_consistent" | "viscosity-consistent" => {
                Ok(VarianceMode::ViscosityConsistent)
            }
            other => Err(Error::invalid(format!("unknown variance mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_samples: usize,
    /// Viscosity `δ`, also the softmin temperature.
    pub delta: f64,
    pub variance_mode: VarianceMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_samples: 100,
            delta: 0.1,
            variance_mode: VarianceMode::ViscosityConsistent,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Monte-Carlo estimate of `∇u^δ(x, t)` with sampling diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub g: Vec<f64>,
    /// Estimate of `u^δ(x, t)`.
    pub envelope_value: f64,
    /// Effective sample size `1 / Σ w̄ᵢ²`, in `[1, n_samples]`.
    pub ess: f64,
    /// Largest normalized weight.
    pub max_weight: f64,
    /// Per-coordinate standard error of `g` from the delta method for the
    /// self-normalized weighted mean.
    pub std_error: Vec<f64>,
}

/// Samples `y ~ N(x, s²I)` and forms the softmin-weighted gradient estimate.
///
/// Weights are taken relative to the smallest sampled value, so neither
/// `exp(−f/δ)` nor its mean is ever formed directly. The random draws and the
/// weighted reduction run in index order; only the objective evaluations are
/// parallel, so the result depends only on the inputs and the RNG state.
pub fn estimate_gradient<R: Rng + ?Sized>(
    obj: &Objective,
    x: &[f64],
    t: f64,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<GradientEstimate> {
    cfg.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be positive, got {t}")));
    }
    let dim = obj.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }

    let n = cfg.n_samples;
    let var = cfg.variance_mode.variance(t, cfg.delta);
    let sd = var.sqrt();

    let mut ys = Vec::with_capacity(n * dim);
    for _ in 0..n {
        for &xi in x {
            let z: f64 = rng.sample(StandardNormal);
            ys.push(xi + sd * z);
        }
    }

    let fs: Vec<f64> = if n >= PARALLEL_MIN_SAMPLES {
        ys.par_chunks_exact(dim)
            .map(|y| obj.eval_unchecked(y))
            .collect()
    } else {
        ys.chunks_exact(dim)
            .map(|y| obj.eval_unchecked(y))
            .collect()
    };

    if let Some(i) = fs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            point: ys[i * dim..(i + 1) * dim].to_vec(),
            value: fs[i],
        });
    }

    let m = fs.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = fs.iter().map(|f| (-(f - m) / cfg.delta).exp()).collect();
    let total: f64 = weights.iter().sum();

    let mut mean = vec![0.0; dim];
    let mut sum_sq = 0.0;
    let mut max_weight = 0.0f64;
    for (w, y) in weights.iter().zip(ys.chunks_exact(dim)) {
        let wn = w / total;
        sum_sq += wn * wn;
        max_weight = max_weight.max(wn);
        for (acc, yi) in mean.iter_mut().zip(y) {
            *acc += wn * yi;
        }
    }

    let mut spread = vec![0.0; dim];
    for (w, y) in weights.iter().zip(ys.chunks_exact(dim)) {
        let wn = w / total;
        for ((acc, yi), mi) in spread.iter_mut().zip(y).zip(&mean) {
            *acc += wn * wn * (yi - mi) * (yi - mi);
        }
    }

    let scale = cfg.delta / var;
    let g = x
        .iter()
        .zip(&mean)
        .map(|(xi, mi)| scale * (xi - mi))
        .collect();
    let std_error = spread.iter().map(|s| scale * s.sqrt()).collect();
    let envelope_value = m - cfg.delta * (total / n as f64).ln();

    Ok(GradientEstimate {
        g,
        envelope_value,
        ess: (1.0 / sum_sq).clamp(1.0, n as f64),
        max_weight,
        std_error,
    })
}

/// Monte-Carlo estimate of `u^δ(x, t)`. Draws the same samples as
/// [`estimate_gradient`] for the same RNG state.
pub fn smoothed_envelope_value<R: Rng + ?Sized>(
    obj: &Objective,
    x: &[f64],
    t: f64,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<f64> {
    estimate_gradient(obj, x, t, cfg, rng).map(|e| e.envelope_value)
}

/// Exponentially weighted moving average of gradient estimates. An absent
/// average is initialized with `g`.
pub fn ewma_update(g_avg: Option<&[f64]>, g: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::invalid(format!(
            "ewma beta must lie in [0, 1), got {beta}"
        )));
    }
    match g_avg {
        None => Ok(g.to_vec()),
        Some(avg) if avg.len() != g.len() => Err(Error::DimensionMismatch {
            expected: avg.len(),
            got: g.len(),
        }),
        Some(avg) => Ok(avg
            .iter()
            .zip(g)
            .map(|(a, gi)| beta * a + (1.0 - beta) * gi)
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::lookup;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, delta: f64, mode: VarianceMode) -> SamplerConfig {
        SamplerConfig {
            n_samples: n,
            delta,
            variance_mode: mode,
        }
    }

    #[test]
    fn ewma_examples() {
        assert_eq!(ewma_update(None, &[1.0, 2.0], 0.9).unwrap(), vec![1.0, 2.0]);
        let v = ewma_update(Some(&[0.0, 0.0]), &[1.0, 2.0], 0.9).unwrap();
        assert!((v[0] - 0.1).abs() < 1e-15 && (v[1] - 0.2).abs() < 1e-15);
        assert_eq!(
            ewma_update(Some(&[5.0, 5.0]), &[1.0, 2.0], 0.0).unwrap(),
            vec![1.0, 2.0]
        );
        assert!(ewma_update(None, &[1.0], 1.0).is_err());
        assert!(ewma_update(None, &[1.0], -0.1).is_err());
        assert!(ewma_update(Some(&[1.0]), &[1.0, 2.0], 0.5).is_err());
    }

    #[test]
    fn rejects_bad_time_and_config() {
        let q = lookup("quadratic", 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = SamplerConfig::default();
        assert!(matches!(
            estimate_gradient(&q, &[1.0], 0.0, &c, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
        assert!(estimate_gradient(&q, &[1.0], -1.0, &c, &mut rng).is_err());
        assert!(estimate_gradient(
            &q,
            &[1.0],
            1.0,
            &cfg(0, 0.1, VarianceMode::default()),
            &mut rng
        )
        .is_err());
        assert!(estimate_gradient(
            &q,
            &[1.0],
            1.0,
            &cfg(10, 0.0, VarianceMode::default()),
            &mut rng
        )
        .is_err());
        assert_eq!(q.evaluations(), 0);
    }

    #[test]
    fn non_finite_sample_reports_point() {
        let obj = Objective::new(
            "blowup",
            1,
            |x: &[f64]| if x[0] > 0.0 { f64::NAN } else { 0.0 },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        match estimate_gradient(&obj, &[0.0], 1.0, &SamplerConfig::default(), &mut rng) {
            Err(Error::NonFinite { point, value }) => {
                assert!(point[0] > 0.0);
                assert!(value.is_nan());
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn counts_one_evaluation_per_sample() {
        let g = lookup("griewank", 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        estimate_gradient(
            &g,
            &[1.0, 2.0],
            0.5,
            &cfg(137, 0.1, VarianceMode::default()),
            &mut rng,
        )
        .unwrap();
        estimate_gradient(
            &g,
            &[1.0, 2.0],
            0.5,
            &cfg(5000, 0.1, VarianceMode::default()),
            &mut rng,
        )
        .unwrap();
        assert_eq!(g.evaluations(), 5137);
    }

    #[test]
    fn constant_objective_envelope_is_exact() {
        let c = 3.25;
        let obj = Objective::new("const", 2, move |_: &[f64]| c);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in [
            VarianceMode::PaperLiteral,
            VarianceMode::ViscosityConsistent,
        ] {
            let est =
                estimate_gradient(&obj, &[1.0, -4.0], 2.0, &cfg(64, 0.3, mode), &mut rng).unwrap();
            assert_eq!(est.envelope_value, c);
            assert_eq!(est.ess, 64.0);
            assert!((est.max_weight - 1.0 / 64.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_objective_gradient_has_zero_mean() {
        let obj = Objective::new("const", 1, |_: &[f64]| 1.0);
        let c = cfg(50, 0.5, VarianceMode::ViscosityConsistent);
        let reps = 4000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for seed in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = estimate_gradient(&obj, &[0.7], 1.0, &c, &mut rng)
                .unwrap()
                .g[0];
            sum += g;
            sum_sq += g * g;
        }
        let mean = sum / reps as f64;
        let sd = (sum_sq / reps as f64 - mean * mean).sqrt();
        assert!(
            mean.abs() < 4.0 * sd / (reps as f64).sqrt(),
            "mean {mean} sd {sd}"
        );
    }

    #[test]
    fn weights_are_normalized_and_diagnostics_in_range() {
        let g = lookup("rastrigin", 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &(delta, t) in &[(0.01, 5.0), (0.1, 1.0), (10.0, 0.1)] {
            let n = 300;
            let est = estimate_gradient(
                &g,
                &[2.5, -1.2],
                t,
                &cfg(n, delta, VarianceMode::default()),
                &mut rng,
            )
            .unwrap();
            assert!(est.ess >= 1.0 && est.ess <= n as f64);
            assert!(est.max_weight > 0.0 && est.max_weight <= 1.0);
            assert!(est.max_weight * n as f64 >= 1.0 - 1e-12);
            assert!(est.g.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn same_rng_state_gives_same_estimate() {
        let g = lookup("ackley", 3).unwrap();
        let c = cfg(10_000, 0.1, VarianceMode::default());
        let a = estimate_gradient(
            &g,
            &[1.0, 2.0, 3.0],
            1.0,
            &c,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        let b = estimate_gradient(
            &g,
            &[1.0, 2.0, 3.0],
            1.0,
            &c,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn smoothed_value_matches_estimate() {
        let g = lookup("griewank", 1).unwrap();
        let c = cfg(500, 0.2, VarianceMode::default());
        let est =
            estimate_gradient(&g, &[3.0], 0.5, &c, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let val = smoothed_envelope_value(&g, &[3.0], 0.5, &c, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap();
        assert_eq!(est.envelope_value, val);
    }

    #[test]
    fn quadratic_envelope_value_at_origin() {
        // ∫ N(y; 0, δt) exp(−y²/2δ) dy = (1 + t)^{−1/2}, so u^δ(0, t) = (δ/2) log(1 + t).
        let q = lookup("quadratic", 1).unwrap();
        let (delta, t) = (0.5, 1.0);
        let c = cfg(200_000, delta, VarianceMode::ViscosityConsistent);
        let v =
            smoothed_envelope_value(&q, &[0.0], t, &c, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let exact = 0.5 * delta * (1.0f64 + t).ln();
        assert!((v - exact).abs() < 5e-3, "{v} vs {exact}");
    }

    #[test]
    fn griewank_small_time_envelope_near_zero_at_origin() {
        let g = lookup("griewank", 1).unwrap();
        let c = cfg(20_000, 0.01, VarianceMode::default());
        let v = smoothed_envelope_value(&g, &[0.0], 0.01, &c, &mut ChaCha8Rng::seed_from_u64(8))
            .unwrap();
        let q = quadrature_envelope_value(&g, &[0.0], 0.01, 0.01, VarianceMode::default(), 4001)
            .unwrap();
        assert!(v.abs() < 1e-3 && q.abs() < 1e-3, "{v} {q}");
    }
}
