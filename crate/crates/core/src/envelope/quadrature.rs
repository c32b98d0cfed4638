//! Deterministic evaluation of the viscous envelope by dense quadrature.
//!
//! With `y = x + s z` the smoothed envelope is
//! `u^δ(x, t) = −δ log ∫ φ(z) exp(−f(x + s z)/δ) dz`, integrated here by the
//! trapezoid rule on `[−Z, Z]ᵈ` in log-sum-exp form. The gradient is a
//! central finite difference of that value, so it shares nothing with the
//! sampling estimator beyond the integral it targets.

use super::VarianceMode;
use crate::{norm, Error, Objective, Result};

/// Half-width of the integration box in standard-normal units. The Gaussian
/// factor there is `exp(−128)`, small enough to absorb `exp(f/δ)` ratios of
/// up to `e⁶⁰` without leaking mass past the boundary.
const Z_MAX: f64 = 16.0;

/// Quadrature estimate of `u^δ(x, t)` with `quad_points` nodes per axis.
pub fn quadrature_envelope_value(
    obj: &Objective,
    x: &[f64],
    t: f64,
    delta: f64,
    mode: VarianceMode,
    quad_points: usize,
) -> Result<f64> {
    check_args(obj, x, t, delta, quad_points)?;
    let sd = mode.variance(t, delta).sqrt();
    let m = (quad_points - 1) as f64;
    let step = 2.0 * Z_MAX / m;
    // log of trapezoid weight times the standard normal density, per axis
    let axis: Vec<(f64, f64)> = (0..quad_points)
        .map(|i| {
            let z = Z_MAX * ((2.0 * i as f64 - m) / m);
            let w = if i == 0 || i == quad_points - 1 {
                0.5 * step
            } else {
                step
            };
            (
                z,
                w.ln() - 0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln(),
            )
        })
        .collect();

    let mut log_terms = Vec::with_capacity(quad_points.pow(obj.dim() as u32));
    let mut y = vec![0.0; obj.dim()];
    match obj.dim() {
        1 => {
            for &(z, lw) in &axis {
                y[0] = x[0] + sd * z;
                log_terms.push(lw - finite(obj, &y)? / delta);
            }
        }
        _ => {
            for &(z0, lw0) in &axis {
                for &(z1, lw1) in &axis {
                    y[0] = x[0] + sd * z0;
                    y[1] = x[1] + sd * z1;
                    log_terms.push(lw0 + lw1 - finite(obj, &y)? / delta);
                }
            }
        }
    }
    let peak = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_terms.iter().map(|l| (l - peak).exp()).sum();
    Ok(-delta * (peak + sum.ln()))
}

/// Gradient of [`quadrature_envelope_value`] in `x` by central differences
/// with step `1e-5·max(1, ‖x‖)`.
pub fn quadrature_gradient_oracle(
    obj: &Objective,
    x: &[f64],
    t: f64,
    delta: f64,
    mode: VarianceMode,
    quad_points: usize,
) -> Result<Vec<f64>> {
    check_args(obj, x, t, delta, quad_points)?;
    let h = 1e-5 * norm(x).max(1.0);
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = quadrature_envelope_value(obj, &probe, t, delta, mode, quad_points)?;
        probe[i] = x[i] - h;
        let down = quadrature_envelope_value(obj, &probe, t, delta, mode, quad_points)?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

fn finite(obj: &Objective, y: &[f64]) -> Result<f64> {
    let v = obj.evaluate(y)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            point: y.to_vec(),
            value: v,
        })
    }
}

fn check_args(obj: &Objective, x: &[f64], t: f64, delta: f64, quad_points: usize) -> Result<()> {
    if obj.dim() > 2 {
        return Err(Error::UnsupportedDimension(obj.dim()));
    }
    if x.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x.len(),
        });
    }
    if !(t > 0.0) || !(delta > 0.0) {
        return Err(Error::invalid("time and delta must be positive"));
    }
    if quad_points < 3 {
        return Err(Error::invalid(
            "quadrature needs at least 3 points per axis",
        ));
    }
    Ok(())
}
