use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hjmad::objectives::Benchmark;
use hjmad_bench::{run_experiment, BenchError, ExperimentSpec, Method, Settings, StartSpec};

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Run HJ-MAD, MAD and baseline benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one function/method pair over several seeds.
    Run(RunArgs),
    /// Print registered functions with domains and optima.
    List,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    function: String,
    /// Defaults to the function's standard dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// hj-mad, mad, gd or prs.
    #[arg(long, default_value = "hj-mad")]
    method: String,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed0: u64,
    /// Flat key = value file applied on top of the profile.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "paper-defaults")]
    profile: String,
    #[arg(long)]
    out: PathBuf,
    /// `uniform`, `annulus:RMIN:RMAX`, `jitter:X0,X1:W` or `X0,X1,...`.
    #[arg(long, default_value = "uniform")]
    start: String,
    /// Config override, repeatable; applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn build_spec(args: RunArgs) -> Result<ExperimentSpec, BenchError> {
    let method: Method = args.method.parse()?;
    let dim = match args.dim {
        Some(d) => d,
        None => Benchmark::from_id(&args.function)
            .map_err(|e| BenchError::Usage(e.to_string()))?
            .default_dim(),
    };
    let mut settings = Settings::profile(&args.profile)?;
    if let Some(path) = &args.config {
        settings.apply_file(path)?;
    }
    for kv in &args.overrides {
        settings.apply_override(kv)?;
    }
    Ok(ExperimentSpec {
        function: args.function,
        dim,
        method,
        start: args.start.parse::<StartSpec>()?,
        settings,
        n_seeds: args.seeds,
        seed0: args.seed0,
        out_dir: args.out,
    })
}

fn list() {
    println!(
        "{:<12} {:>3}  {:<24} {:<16} f*",
        "id", "dim", "domain", "x*"
    );
    for b in Benchmark::ALL {
        let dim = b.default_dim();
        let obj = b.build(dim).expect("registered benchmark builds");
        let domain = obj
            .default_domain()
            .map(|d| format!("[{}, {}]^{dim}", d.lower[0], d.upper[0]))
            .unwrap_or_default();
        let (x, f) = obj
            .known_optimum()
            .map(|o| (format!("{:?}", o.x), o.value.to_string()))
            .unwrap_or_default();
        println!("{:<12} {:>3}  {:<24} {:<16} {f}", b.id(), dim, domain, x);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::List => {
            list();
            Ok(())
        }
        Command::Run(args) => build_spec(args).and_then(|spec| {
            let row = run_experiment(&spec)?;
            let mean = row
                .mean_evals_to_success
                .map_or_else(|| "N".to_string(), |m| format!("{m:.0}"));
            println!(
                "{} {} dim={} successes={}/{} mean_evals={} mean_best_f={:.4e} published={}",
                row.function,
                row.method,
                row.dim,
                row.successes,
                row.n_seeds,
                mean,
                row.mean_final_f,
                row.published_evals.unwrap_or("-"),
            );
            println!("summary: {}", spec.summary_path().display());
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
