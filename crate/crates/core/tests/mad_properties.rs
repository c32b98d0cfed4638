use hjmad::envelope::{GridSpec, GridTable};
use hjmad::objectives::Benchmark;
use hjmad::solver::{run_hj_mad, run_mad, SolverConfig};
use hjmad::StopReason;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mad_config() -> SolverConfig {
    SolverConfig {
        target_tolerance: None,
        max_iters: 200,
        ..Default::default()
    }
}

/// Starts drawn from the default domain, with the grid sized for time `T`.
fn starts(b: Benchmark, seed: u64) -> Vec<f64> {
    let obj = b.build(1).unwrap();
    let d = obj.default_domain().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10)
        .map(|_| rng.random_range(d.lower[0]..d.upper[0]))
        .collect()
}

#[test]
fn exact_envelope_decreases_along_mad_iterates() {
    let cfg = mad_config();
    for b in Benchmark::ALL {
        let obj = b.build(1).unwrap();
        for x1 in starts(b, 1) {
            let grid =
                GridSpec::around(&obj, &[x1], cfg.schedule.t_max, cfg.sampler.delta).unwrap();
            let trace = run_mad(&obj, &[x1], &cfg, &grid).unwrap();
            for w in trace.records.windows(2) {
                assert!(
                    w[1].u_est <= w[0].u_est + 1e-12,
                    "{} from {x1}: u went {} -> {} at k={}",
                    b.id(),
                    w[0].u_est,
                    w[1].u_est,
                    w[1].k
                );
            }
        }
    }
}

#[test]
fn mad_iterates_stay_in_the_sublevel_box() {
    let cfg = mad_config();
    let t_max = cfg.schedule.t_max;
    for b in [
        Benchmark::Griewank,
        Benchmark::DoubleWell,
        Benchmark::Levy,
        Benchmark::Rastrigin,
    ] {
        let obj = b.build(1).unwrap();
        for x1 in starts(b, 2).into_iter().take(4) {
            let grid = GridSpec::around(&obj, &[x1], t_max, cfg.sampler.delta).unwrap();
            let table = GridTable::build(&obj, &grid).unwrap();
            let level = table.envelope(&[x1], cfg.t1).unwrap();
            let inside: Vec<f64> = grid
                .axis_nodes(0)
                .into_iter()
                .filter(|&z| table.envelope(&[z], t_max).unwrap() <= level)
                .collect();
            let h = grid.max_spacing();
            let lo = inside.iter().copied().fold(f64::INFINITY, f64::min) - h;
            let hi = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max) + h;
            let trace = run_mad(&obj, &[x1], &cfg, &grid).unwrap();
            for r in &trace.records {
                assert!(
                    lo <= r.x[0] && r.x[0] <= hi,
                    "{} from {x1}: x={} outside [{lo}, {hi}]",
                    b.id(),
                    r.x[0]
                );
            }
        }
    }
}

#[test]
fn mad_stops_at_a_grid_prox_fixed_point() {
    let cfg = mad_config();
    let t_max = cfg.schedule.t_max;
    let mut stopped = 0;
    for b in Benchmark::ALL {
        let obj = b.build(1).unwrap();
        for x1 in starts(b, 3).into_iter().take(3) {
            let grid = GridSpec::around(&obj, &[x1], t_max, cfg.sampler.delta).unwrap();
            let trace = run_mad(&obj, &[x1], &cfg, &grid).unwrap();
            if trace.stop_reason != StopReason::GradSmallAtT {
                continue;
            }
            stopped += 1;
            let table = GridTable::build(&obj, &grid).unwrap();
            let x = &trace.last().x;
            let (z, _) = table.prox(x, t_max).unwrap();
            assert!(
                (x[0] - z[0]).abs() <= 2.0 * grid.max_spacing(),
                "{}: {x:?} vs {z:?}",
                b.id()
            );
        }
    }
    assert!(
        stopped >= 12,
        "only {stopped} runs stopped on the gradient test"
    );
}

#[test]
fn mad_evaluations_are_the_grid_table() {
    let obj = Benchmark::Griewank.build(1).unwrap();
    let cfg = mad_config();
    let grid = GridSpec::around(&obj, &[37.0], cfg.schedule.t_max, cfg.sampler.delta).unwrap();
    let trace = run_mad(&obj, &[37.0], &cfg, &grid).unwrap();
    assert_eq!(trace.last().cum_evals, grid.points_per_axis() as u64);
    assert_eq!(obj.evaluations(), trace.last().cum_evals);
}

#[test]
fn hj_mad_traces_are_reproducible_and_fully_counted() {
    let obj = Benchmark::Ackley.build(2).unwrap();
    let cfg = SolverConfig {
        seed: 9,
        max_iters: 300,
        ..Default::default()
    };
    let a = run_hj_mad(&obj, &[20.0, -11.0], &cfg).unwrap();
    let used = obj.evaluations();
    let b = run_hj_mad(&obj, &[20.0, -11.0], &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.last().cum_evals, used);
    assert_eq!(
        a.last().cum_evals,
        a.records.len() as u64 * cfg.sampler.n_samples as u64
    );
}
