//! Trace CSV files.
//!
//! Header `k,t,f,gnorm,u_est,cum_evals,x0,...,x{n-1}`, one row per iterate,
//! LF line endings. Reals are written in scientific notation with 17
//! significant digits, which round-trips every `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hjmad::{IterateRecord, Trace};

use crate::BenchError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn header(dim: usize) -> String {
    let mut h = String::from("k,t,f,gnorm,u_est,cum_evals");
    for i in 0..dim {
        h.push_str(&format!(",x{i}"));
    }
    h
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv(trace: &Trace, path: &Path) -> Result<(), BenchError> {
    let first = trace
        .records
        .first()
        .ok_or_else(|| BenchError::Usage("cannot write an empty trace".into()))?;
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut out = header(first.x.len());
    out.push('\n');
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            r.k,
            real(r.t),
            real(r.f_x),
            real(r.g_norm),
            real(r.u_est),
            r.cum_evals
        ));
        for xi in &r.x {
            out.push(',');
            out.push_str(&real(*xi));
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Parses a file written by [`write_trace_csv`] back into records.
pub fn read_trace_csv(path: &Path) -> Result<Vec<IterateRecord>, BenchError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |msg: String| BenchError::Usage(format!("{}: {msg}", path.display()));
    let head = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .map_err(io_err(path))?;
    let cols = head.split(',').count();
    if cols < 7 || head != header(cols - 6) {
        return Err(bad(format!("unexpected header `{head}`")));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line.map_err(io_err(path))?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(bad(format!("expected {cols} fields, got {}", fields.len())));
        }
        let f = |i: usize| -> Result<f64, BenchError> {
            fields[i]
                .parse()
                .map_err(|_| bad(format!("bad number `{}`", fields[i])))
        };
        records.push(IterateRecord {
            k: fields[0]
                .parse()
                .map_err(|_| bad(format!("bad k `{}`", fields[0])))?,
            t: f(1)?,
            f_x: f(2)?,
            g_norm: f(3)?,
            u_est: f(4)?,
            cum_evals: fields[5]
                .parse()
                .map_err(|_| bad(format!("bad count `{}`", fields[5])))?,
            x: (6..cols).map(f).collect::<Result<_, _>>()?,
        });
    }
    Ok(records)
}
