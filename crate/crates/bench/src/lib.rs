//! Benchmark harness for the `hjmad` optimizers: flat config files, seeded
//! multi-run experiments, trace CSVs and JSON summaries.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod experiment;
pub mod trace_io;

pub use config::Settings;
pub use experiment::{
    published_evals, run_experiment, ExperimentSpec, Method, StartSpec, SummaryRow,
};
pub use trace_io::{read_trace_csv, write_trace_csv};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("seed {seed}: {source}")]
    Numerical {
        seed: u64,
        #[source]
        source: hjmad::Error,
    },
}

impl BenchError {
    /// Process exit code: 2 usage, 3 I/O, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 2,
            BenchError::Io { .. } => 3,
            BenchError::Numerical { .. } => 4,
        }
    }
}
