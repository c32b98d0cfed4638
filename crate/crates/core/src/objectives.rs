//! Benchmark objectives and the counting wrapper every solver evaluates
//! through.
//!
//! The nonconvex benchmarks follow the usual Virtual Library of Simulation
//! Experiments definitions and are defined for any dimension:
//!
//! | id           | f(x)                                                                      | domain              | x*       | f* |
//! |--------------|---------------------------------------------------------------------------|---------------------|----------|----|
//! | `griewank`   | `1 + Σ xᵢ²/4000 − Π cos(xᵢ/√i)`                                           | `[−600, 600]ⁿ`      | 0        | 0  |
//! | `drop-wave`  | `−(1 + cos(12‖x‖)) / (½‖x‖² + 2)`                                         | `[−5.12, 5.12]ⁿ`    | 0        | −1 |
//! | `alpine-n1`  | `Σ |xᵢ sin xᵢ + 0.1 xᵢ|`                                                  | `[−10, 10]ⁿ`        | 0        | 0  |
//! | `ackley`     | `−20 exp(−0.2 √(‖x‖²/n)) − exp(Σ cos(2πxᵢ)/n) + 20 + e`                   | `[−32.768, 32.768]ⁿ`| 0        | 0  |
//! | `levy`       | `sin²(πw₁) + Σᵢ₌₁ⁿ⁻¹ (wᵢ−1)²[1+10 sin²(πwᵢ+1)] + (wₙ−1)²[1+sin²(2πwₙ)]`, `wᵢ = 1 + (xᵢ−1)/4` | `[−10, 10]ⁿ` | 1 | 0 |
//! | `rastrigin`  | `10n + Σ (xᵢ² − 10 cos(2πxᵢ))`                                            | `[−5.12, 5.12]ⁿ`    | 0        | 0  |
//! | `quadratic`  | `½‖x‖²`                                                                   | `[−10, 10]ⁿ`        | 0        | 0  |
//! | `double-well`| `Σ (xᵢ² − 1)²`                                                            | `[−2, 2]ⁿ`          | 1        | 0  |
//!
//! The last two have closed-form proximal points and envelopes and exist for
//! the oracle tests.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

type Func = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::invalid("box must have at least one dimension"));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
        {
            return Err(Error::invalid(
                "box bounds must be finite with lower < upper",
            ));
        }
        Ok(BoxDomain { lower, upper })
    }

    /// The cube `[lo, hi]ⁿ`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        BoxDomain {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| *l <= *xi && *xi <= *u)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect()
    }

    /// Volume of the box.
    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }
}

/// A known global minimizer and its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Level-set margin `γ`: every critical point with `f ≤ inf f + γ` is a global
/// minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSpec {
    gamma: f64,
}

impl GammaSpec {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(GammaSpec { gamma })
        } else {
            Err(Error::invalid(format!(
                "gamma must be positive, got {gamma}"
            )))
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// A black-box objective with an exact evaluation counter.
///
/// The counter is atomic so that samples may be evaluated from several
/// threads; every counted evaluation increments it by one.
pub struct Objective {
    id: String,
    dim: usize,
    func: Arc<Func>,
    counter: AtomicU64,
    optimum: Option<Optimum>,
    domain: Option<BoxDomain>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("evaluations", &self.evaluations())
            .field("optimum", &self.optimum)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Clone for Objective {
    /// Clones share the function but start with a fresh counter.
    fn clone(&self) -> Self {
        Objective {
            id: self.id.clone(),
            dim: self.dim,
            func: Arc::clone(&self.func),
            counter: AtomicU64::new(0),
            optimum: self.optimum.clone(),
            domain: self.domain.clone(),
        }
    }
}

impl Objective {
    pub fn new<F>(id: impl Into<String>, dim: usize, func: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!(dim > 0, "objective dimension must be positive");
        Objective {
            id: id.into(),
            dim,
            func: Arc::new(func),
            counter: AtomicU64::new(0),
            optimum: None,
            domain: None,
        }
    }

    pub fn with_optimum(mut self, x: Vec<f64>, value: f64) -> Self {
        assert_eq!(x.len(), self.dim, "optimum dimension");
        self.optimum = Some(Optimum { x, value });
        self
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        assert_eq!(domain.dim(), self.dim, "domain dimension");
        self.domain = Some(domain);
        self
    }

    /// The same function shifted by a constant, `f + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let func = Arc::clone(&self.func);
        Objective {
            id: format!("{}+{c}", self.id),
            dim: self.dim,
            func: Arc::new(move |x: &[f64]| func(x) + c),
            counter: AtomicU64::new(0),
            optimum: self.optimum.as_ref().map(|o| Optimum {
                x: o.x.clone(),
                value: o.value + c,
            }),
            domain: self.domain.clone(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Counted evaluation of `f(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.counter.fetch_add(1, Ordering::Relaxed);
        Ok((self.func)(x))
    }

    /// Evaluates a batch of points stored back to back in `points`,
    /// incrementing the counter by the batch size.
    pub fn evaluate_batch(&self, points: &[f64]) -> Result<Vec<f64>> {
        if !points.len().is_multiple_of(self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: points.len() % self.dim,
            });
        }
        let n = points.len() / self.dim;
        self.counter.fetch_add(n as u64, Ordering::Relaxed);
        Ok(points
            .chunks_exact(self.dim)
            .map(|p| (self.func)(p))
            .collect())
    }

    /// Evaluation that does not touch the counter. Used for trace
    /// bookkeeping that is not part of an algorithm's cost.
    pub fn evaluate_uncounted(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok((self.func)(x))
    }

    /// Counted evaluation without the dimension check, for hot loops that
    /// have already validated their input.
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.counter.fetch_add(1, Ordering::Relaxed);
        (self.func)(x)
    }

    pub fn evaluations(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    pub fn known_optimum(&self) -> Option<&Optimum> {
        self.optimum.as_ref()
    }

    pub fn default_domain(&self) -> Option<&BoxDomain> {
        self.domain.as_ref()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            })
        }
    }
}

/// The registered benchmark functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Griewank,
    DropWave,
    AlpineN1,
    Ackley,
    Levy,
    Rastrigin,
    Quadratic,
    DoubleWell,
}

impl Benchmark {
    pub const ALL: [Benchmark; 8] = [
        Benchmark::Griewank,
        Benchmark::DropWave,
        Benchmark::AlpineN1,
        Benchmark::Ackley,
        Benchmark::Levy,
        Benchmark::Rastrigin,
        Benchmark::Quadratic,
        Benchmark::DoubleWell,
    ];

    /// The six nonconvex benchmarks of the comparison table.
    pub const NONCONVEX: [Benchmark; 6] = [
        Benchmark::Griewank,
        Benchmark::DropWave,
        Benchmark::AlpineN1,
        Benchmark::Ackley,
        Benchmark::Levy,
        Benchmark::Rastrigin,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Benchmark::Griewank => "griewank",
            Benchmark::DropWave => "drop-wave",
            Benchmark::AlpineN1 => "alpine-n1",
            Benchmark::Ackley => "ackley",
            Benchmark::Levy => "levy",
            Benchmark::Rastrigin => "rastrigin",
            Benchmark::Quadratic => "quadratic",
            Benchmark::DoubleWell => "double-well",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        let norm = id.to_ascii_lowercase().replace('_', "-");
        Benchmark::ALL
            .into_iter()
            .find(|b| b.id() == norm)
            .ok_or_else(|| Error::UnknownObjective(id.to_string()))
    }

    pub fn default_dim(self) -> usize {
        match self {
            Benchmark::Quadratic | Benchmark::DoubleWell => 1,
            _ => 2,
        }
    }

    fn bounds(self) -> (f64, f64) {
        match self {
            Benchmark::Griewank => (-600.0, 600.0),
            Benchmark::DropWave | Benchmark::Rastrigin => (-5.12, 5.12),
            Benchmark::AlpineN1 | Benchmark::Levy | Benchmark::Quadratic => (-10.0, 10.0),
            Benchmark::Ackley => (-32.768, 32.768),
            Benchmark::DoubleWell => (-2.0, 2.0),
        }
    }

    fn minimizer(self, dim: usize) -> Optimum {
        match self {
            Benchmark::Levy | Benchmark::DoubleWell => Optimum {
                x: vec![1.0; dim],
                value: 0.0,
            },
            Benchmark::DropWave => Optimum {
                x: vec![0.0; dim],
                value: -1.0,
            },
            _ => Optimum {
                x: vec![0.0; dim],
                value: 0.0,
            },
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Benchmark::Griewank => griewank(x),
            Benchmark::DropWave => drop_wave(x),
            Benchmark::AlpineN1 => alpine_n1(x),
            Benchmark::Ackley => ackley(x),
            Benchmark::Levy => levy(x),
            Benchmark::Rastrigin => rastrigin(x),
            Benchmark::Quadratic => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Benchmark::DoubleWell => x.iter().map(|v| (v * v - 1.0).powi(2)).sum(),
        }
    }

    pub fn build(self, dim: usize) -> Result<Objective> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let (lo, hi) = self.bounds();
        let opt = self.minimizer(dim);
        Ok(
            Objective::new(self.id(), dim, move |x: &[f64]| self.value(x))
                .with_optimum(opt.x, opt.value)
                .with_domain(BoxDomain::cube(dim, lo, hi)),
        )
    }
}

/// Looks up a registered benchmark by id (`griewank`, `drop-wave`, ...).
pub fn lookup(id: &str, dim: usize) -> Result<Objective> {
    Benchmark::from_id(id)?.build(dim)
}

pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    1.0 + sum - prod
}

pub fn drop_wave(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    -(1.0 + (12.0 * r2.sqrt()).cos()) / (0.5 * r2 + 2.0)
}

pub fn alpine_n1(x: &[f64]) -> f64 {
    x.iter().map(|v| (v * v.sin() + 0.1 * v).abs()).sum()
}

pub fn ackley(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let cos_sum: f64 = x.iter().map(|v| (2.0 * PI * v).cos()).sum();
    -20.0 * (-0.2 * (r2 / n).sqrt()).exp() - (cos_sum / n).exp() + 20.0 + E
}

pub fn levy(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let n = w.len();
    let head = (PI * w[0]).sin().powi(2);
    let mid: f64 = w[..n - 1]
        .iter()
        .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
        .sum();
    let last = w[n - 1];
    let tail = (last - 1.0).powi(2) * (1.0 + (2.0 * PI * last).sin().powi(2));
    head + mid + tail
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn griewank_values() {
        let g = lookup("griewank", 2).unwrap();
        assert_eq!(g.evaluate(&[0.0, 0.0]).unwrap(), 0.0);
        // 1 + 100²/4000 − cos(100), high-precision reference
        let v = g.evaluate(&[100.0, 0.0]).unwrap();
        assert!((v - 2.637_681_127_712_316).abs() < 1e-12, "{v}");
        assert_eq!(g.evaluations(), 2);
    }

    #[test]
    fn quadratic_value() {
        let q = lookup("quadratic", 1).unwrap();
        assert_eq!(q.evaluate(&[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected_and_not_counted() {
        let g = lookup("griewank", 2).unwrap();
        assert!(matches!(
            g.evaluate(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert_eq!(g.evaluations(), 0);
    }

    #[test]
    fn unknown_id() {
        assert!(matches!(lookup("foo", 2), Err(Error::UnknownObjective(_))));
        assert_eq!(
            Benchmark::from_id("Drop_Wave").unwrap(),
            Benchmark::DropWave
        );
    }

    #[test]
    fn optima_evaluate_to_stored_value() {
        for b in Benchmark::ALL {
            for dim in [1, 2, 5] {
                let obj = b.build(dim).unwrap();
                let opt = obj.known_optimum().unwrap().clone();
                let v = obj.evaluate(&opt.x).unwrap();
                assert!((v - opt.value).abs() <= 1e-12, "{} dim {dim}: {v}", b.id());
                assert!(obj.default_domain().unwrap().contains(&opt.x));
            }
        }
    }

    #[test]
    fn default_domains() {
        let g = lookup("griewank", 3).unwrap();
        assert_eq!(
            g.default_domain().unwrap(),
            &BoxDomain::cube(3, -600.0, 600.0)
        );
        let r = lookup("rastrigin", 2).unwrap();
        assert_eq!(
            r.default_domain().unwrap(),
            &BoxDomain::cube(2, -5.12, 5.12)
        );
        let q = lookup("quadratic", 1).unwrap();
        assert_eq!(
            q.default_domain().unwrap(),
            &BoxDomain::cube(1, -10.0, 10.0)
        );
    }

    #[test]
    fn optimum_is_a_lower_bound_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for b in Benchmark::ALL {
            let obj = b.build(b.default_dim()).unwrap();
            let fstar = obj.known_optimum().unwrap().value;
            let dom = obj.default_domain().unwrap().clone();
            for _ in 0..1000 {
                let x = dom.sample_uniform(&mut rng);
                assert!(
                    obj.evaluate(&x).unwrap() >= fstar - 1e-9,
                    "{} at {x:?}",
                    b.id()
                );
            }
            assert_eq!(obj.evaluations(), 1000);
        }
    }

    #[test]
    fn batch_counts_each_point() {
        let q = lookup("quadratic", 2).unwrap();
        let vals = q.evaluate_batch(&[1.0, 0.0, 0.0, 2.0, 1.0, 1.0]).unwrap();
        assert_eq!(vals, vec![0.5, 2.0, 1.0]);
        assert_eq!(q.evaluations(), 3);
        q.evaluate_uncounted(&[0.0, 0.0]).unwrap();
        assert_eq!(q.evaluations(), 3);
    }

    #[test]
    fn counter_is_exact_under_concurrency() {
        let g = lookup("griewank", 2).unwrap();
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    for i in 0..1000 {
                        g.evaluate(&[i as f64, 1.0]).unwrap();
                    }
                });
            }
        });
        assert_eq!(g.evaluations(), 8000);
    }

    #[test]
    fn gamma_must_be_positive() {
        assert!(GammaSpec::new(0.0).is_err());
        assert!(GammaSpec::new(-1.0).is_err());
        assert_eq!(GammaSpec::new(2.5).unwrap().gamma(), 2.5);
    }

    #[test]
    fn shifted_objective_adds_constant() {
        let q = lookup("quadratic", 1).unwrap().shifted(3.0);
        assert_eq!(q.evaluate(&[2.0]).unwrap(), 5.0);
        assert_eq!(q.known_optimum().unwrap().value, 3.0);
    }
}
