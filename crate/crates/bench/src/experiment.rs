//! Seeded multi-run experiments.
//!
//! Seed `s` drives both the optimizer and the start point; the start point is
//! drawn from stream 1 of a ChaCha8 generator seeded with `s`, the optimizer
//! uses stream 0, so the two never share draws. Seeds run in parallel, each
//! writing its own trace file, and the summary is reduced in seed order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hjmad::baselines::{run_baseline, BaselineMethod};
use hjmad::envelope::GridSpec;
use hjmad::objectives::{lookup, Benchmark};
use hjmad::solver::{run_hj_mad, run_mad};
use hjmad::{Objective, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::config::Settings;
use crate::trace_io::write_trace_csv;
use crate::BenchError;

/// Success level used when the settings disable the target stop.
const DEFAULT_SUCCESS_TOLERANCE: f64 = 5e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    HjMad,
    Mad,
    Gd,
    Prs,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::HjMad, Method::Mad, Method::Gd, Method::Prs];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::HjMad => "hj-mad",
            Method::Mad => "mad",
            Method::Gd => "gd",
            Method::Prs => "prs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "hj-mad" | "hjmad" => Ok(Method::HjMad),
            "mad" => Ok(Method::Mad),
            "gd" | "gd-fd" => Ok(Method::Gd),
            "prs" => Ok(Method::Prs),
            _ => Err(BenchError::Usage(format!(
                "unknown method `{s}` (expected hj-mad, mad, gd or prs)"
            ))),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// How each seed picks its starting point.
#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec {
    Point(Vec<f64>),
    /// Uniform in the objective's default domain.
    Uniform,
    /// Uniform direction and uniform radius in `[r_min, r_max]` around the
    /// known minimizer.
    Annulus {
        r_min: f64,
        r_max: f64,
    },
    /// Uniform in the box `center ± half_width`.
    Jitter {
        center: Vec<f64>,
        half_width: f64,
    },
}

impl FromStr for StartSpec {
    type Err = BenchError;

    /// Accepts `uniform`, `annulus:RMIN:RMAX`, `jitter:X0,X1,...:W` or a
    /// comma-separated point.
    fn from_str(s: &str) -> Result<Self, BenchError> {
        let bad = || BenchError::Usage(format!("cannot parse start `{s}`"));
        let point = |p: &str| -> Result<Vec<f64>, BenchError> {
            p.split(',')
                .map(|v| v.trim().parse().map_err(|_| bad()))
                .collect()
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["uniform"] => Ok(StartSpec::Uniform),
            ["annulus", lo, hi] => {
                let r_min: f64 = lo.parse().map_err(|_| bad())?;
                let r_max: f64 = hi.parse().map_err(|_| bad())?;
                if !(0.0 <= r_min && r_min <= r_max && r_max.is_finite()) {
                    return Err(bad());
                }
                Ok(StartSpec::Annulus { r_min, r_max })
            }
            ["jitter", c, w] => {
                let half_width: f64 = w.parse().map_err(|_| bad())?;
                if !(half_width >= 0.0 && half_width.is_finite()) {
                    return Err(bad());
                }
                Ok(StartSpec::Jitter {
                    center: point(c)?,
                    half_width,
                })
            }
            [p] => Ok(StartSpec::Point(point(p)?)),
            _ => Err(bad()),
        }
    }
}

impl StartSpec {
    fn validate(&self, obj: &Objective) -> Result<(), BenchError> {
        let dim = obj.dim();
        let check = |n: usize| {
            if n == dim {
                Ok(())
            } else {
                Err(BenchError::Usage(format!(
                    "start point has dimension {n}, objective has {dim}"
                )))
            }
        };
        match self {
            StartSpec::Point(p) => check(p.len()),
            StartSpec::Jitter { center, .. } => check(center.len()),
            StartSpec::Uniform if obj.default_domain().is_none() => Err(BenchError::Usage(
                format!("`{}` has no domain to sample from", obj.id()),
            )),
            StartSpec::Annulus { .. } if obj.known_optimum().is_none() => Err(BenchError::Usage(
                format!("`{}` has no known minimizer", obj.id()),
            )),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, obj: &Objective, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        match self {
            StartSpec::Point(p) => p.clone(),
            StartSpec::Uniform => obj
                .default_domain()
                .expect("validated")
                .sample_uniform(&mut rng),
            StartSpec::Annulus { r_min, r_max } => {
                let centre = &obj.known_optimum().expect("validated").x;
                let mut dir: Vec<f64> =
                    (0..obj.dim()).map(|_| rng.sample(StandardNormal)).collect();
                let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let r = r_min + (r_max - r_min) * rng.random::<f64>();
                for (d, c) in dir.iter_mut().zip(centre) {
                    *d = c + r * *d / len;
                }
                dir
            }
            StartSpec::Jitter { center, half_width } => center
                .iter()
                .map(|c| c + half_width * (2.0 * rng.random::<f64>() - 1.0))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub function: String,
    pub dim: usize,
    pub method: Method,
    pub start: StartSpec,
    pub settings: Settings,
    pub n_seeds: usize,
    pub seed0: u64,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn new(
        function: impl Into<String>,
        dim: usize,
        method: Method,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        ExperimentSpec {
            function: function.into(),
            dim,
            method,
            start: StartSpec::Uniform,
            settings: Settings::paper_defaults(),
            n_seeds: 10,
            seed0: 0,
            out_dir: out_dir.into(),
        }
    }

    pub fn trace_path(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!(
            "trace_{}_{}_seed{seed}.csv",
            self.function, self.method
        ))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.out_dir
            .join(format!("summary_{}_{}.json", self.function, self.method))
    }

    fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n_seeds as u64).map(move |i| self.seed0 + i)
    }

    /// Everything that can be checked without running or touching the disk.
    pub fn validate(&self) -> Result<Objective, BenchError> {
        let obj = lookup(&self.function, self.dim).map_err(|e| BenchError::Usage(e.to_string()))?;
        if self.n_seeds == 0 {
            return Err(BenchError::Usage("need at least one seed".into()));
        }
        if obj.known_optimum().is_none() {
            return Err(BenchError::Usage(format!(
                "`{}` has no known optimum",
                self.function
            )));
        }
        if self.method == Method::Mad && self.dim > 2 {
            return Err(BenchError::Usage(
                "mad supports dimension 1 or 2 only".into(),
            ));
        }
        self.start.validate(&obj)?;
        match self.method {
            Method::HjMad | Method::Mad => self.settings.hj_mad_config(self.seed0).map(drop)?,
            Method::Gd => self
                .settings
                .baseline_config(BaselineMethod::GdFd, self.seed0)
                .map(drop)?,
            Method::Prs => self
                .settings
                .baseline_config(BaselineMethod::Prs, self.seed0)
                .map(drop)?,
        }
        Ok(obj)
    }

    fn run_seed(&self, seed: u64) -> Result<Trace, BenchError> {
        // Fresh objective per seed so evaluation counters never mix.
        let obj = lookup(&self.function, self.dim).map_err(|e| BenchError::Usage(e.to_string()))?;
        let x1 = self.start.sample(&obj, seed);
        let s = &self.settings;
        let result = match self.method {
            Method::HjMad => run_hj_mad(&obj, &x1, &s.hj_mad_config(seed)?),
            Method::Mad => {
                let cfg = s.solver_config(seed)?;
                let grid = GridSpec::around(&obj, &x1, s.t_max, s.delta)
                    .map_err(|e| BenchError::Usage(e.to_string()))?;
                run_mad(&obj, &x1, &cfg, &grid)
            }
            Method::Gd => run_baseline(&obj, &x1, &s.baseline_config(BaselineMethod::GdFd, seed)?),
            Method::Prs => run_baseline(&obj, &x1, &s.baseline_config(BaselineMethod::Prs, seed)?),
        };
        result.map_err(|e| {
            if e.is_numerical() {
                BenchError::Numerical { seed, source: e }
            } else {
                BenchError::Usage(e.to_string())
            }
        })
    }
}

/// Evaluation counts from the published comparison table for 2-D problems,
/// as printed (`N` marks non-convergence).
pub fn published_evals(function: &str, method: Method) -> Option<&'static str> {
    let b = Benchmark::from_id(function).ok()?;
    let hj = match b {
        Benchmark::Griewank => ("114.4K", "460K"),
        Benchmark::DropWave => ("11.5K", "52.5K"),
        Benchmark::AlpineN1 => ("14K", "755.6K"),
        Benchmark::Ackley => ("44.2K", "243.2K"),
        Benchmark::Levy => ("21.4K", "N"),
        Benchmark::Rastrigin => ("132.7K", "660.2K"),
        _ => return None,
    };
    match method {
        Method::HjMad => Some(hj.0),
        Method::Prs => Some(hj.1),
        _ => None,
    }
}

fn serialize_evals<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("N"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    pub start: Vec<f64>,
    pub success: bool,
    pub evals_to_success: Option<u64>,
    pub total_evals: u64,
    pub iterations: usize,
    pub stop_reason: &'static str,
    pub best_f: f64,
    pub final_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub function: String,
    pub method: Method,
    pub dim: usize,
    pub n_seeds: usize,
    pub successes: usize,
    /// Averaged over successful seeds; `"N"` in JSON when there are none.
    #[serde(serialize_with = "serialize_evals")]
    pub mean_evals_to_success: Option<f64>,
    /// Mean over seeds of the best objective value found.
    pub mean_final_f: f64,
    /// Mean over seeds of the distance from the best point to the minimizer.
    pub mean_final_distance: f64,
    pub published_evals: Option<&'static str>,
    pub settings: Settings,
    pub seeds: Vec<SeedResult>,
}

impl SummaryRow {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.n_seeds as f64
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, BenchError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BENCH_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            BenchError::Usage(format!(
                "BENCH_THREADS must be a positive integer, got `{v}`"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| BenchError::Usage(format!("cannot start thread pool: {e}")))
}

fn create_dir(path: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs every seed, writes one trace CSV per seed plus the summary JSON,
/// and returns the summary.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<SummaryRow, BenchError> {
    let obj = spec.validate()?;
    let optimum = obj.known_optimum().expect("validated").clone();
    let tol = spec
        .settings
        .target_tolerance
        .unwrap_or(DEFAULT_SUCCESS_TOLERANCE);
    let level = optimum.value + tol;
    create_dir(&spec.out_dir)?;

    let pool = thread_pool()?;
    let seeds: Vec<u64> = spec.seeds().collect();
    let results: Vec<Result<SeedResult, BenchError>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let trace = spec.run_seed(seed)?;
                write_trace_csv(&trace, &spec.trace_path(seed))?;
                let evals_to_success = trace.evals_to_reach(level);
                log::info!(
                    "{} {} seed {seed}: {} after {} iterations, best f {:.3e}",
                    spec.function,
                    spec.method,
                    trace.stop_reason.as_str(),
                    trace.records.len(),
                    trace.best_f
                );
                Ok(SeedResult {
                    seed,
                    start: trace.records[0].x.clone(),
                    success: evals_to_success.is_some(),
                    evals_to_success,
                    total_evals: trace.last().cum_evals,
                    iterations: trace.records.len(),
                    stop_reason: trace.stop_reason.as_str(),
                    best_f: trace.best_f,
                    final_distance: distance(&trace.best_x, &optimum.x),
                })
            })
            .collect()
    });
    let seeds: Vec<SeedResult> = results.into_iter().collect::<Result<_, _>>()?;

    let n = seeds.len() as f64;
    let hits: Vec<u64> = seeds.iter().filter_map(|s| s.evals_to_success).collect();
    let row = SummaryRow {
        function: spec.function.clone(),
        method: spec.method,
        dim: spec.dim,
        n_seeds: seeds.len(),
        successes: hits.len(),
        mean_evals_to_success: (!hits.is_empty())
            .then(|| hits.iter().map(|&e| e as f64).sum::<f64>() / hits.len() as f64),
        mean_final_f: seeds.iter().map(|s| s.best_f).sum::<f64>() / n,
        mean_final_distance: seeds.iter().map(|s| s.final_distance).sum::<f64>() / n,
        published_evals: published_evals(&spec.function, spec.method),
        settings: spec.settings.clone(),
        seeds,
    };
    let path = spec.summary_path();
    let mut json = serde_json::to_string_pretty(&row).expect("summary serializes");
    json.push('\n');
    std::fs::write(&path, json).map_err(|source| BenchError::Io { path, source })?;
    Ok(row)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
