//! Size and timing sweep over the scalar benchmark family.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;

use crate::conic::{solve, SolverConfig};
use crate::error::{Error, Result};
use crate::lqc::{Controller, LqcModel, LqcSpec};

/// One CSV row. Column order is fixed by field order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub build_ms: f64,
    pub solve_ms: f64,
    pub iterations: usize,
    pub objective: f64,
    pub n_soc_blocks: usize,
    pub lmi_dim: usize,
}

pub const CSV_HEADER: &str = "N,build_ms,solve_ms,iterations,objective,n_soc_blocks,lmi_dim";

/// Default sweep `10, 15, …, 50`.
pub fn default_horizons() -> Vec<usize> {
    (10..=50).step_by(5).collect()
}

/// Builds and solves the robust scalar problem of horizon `n` from
/// `x₀ = −1` `reps` times. Build and solve are timed separately and averaged.
pub fn bench_horizon(n: usize, reps: usize, config: &SolverConfig) -> Result<BenchRecord> {
    if reps == 0 {
        return Err(Error::InvalidSpec("repetitions must be at least 1".into()));
    }
    let x0 = DVector::from_element(1, -1.0);
    let (mut build_ms, mut solve_ms) = (0.0, 0.0);
    let mut last = None;
    for _ in 0..reps {
        let t0 = Instant::now();
        let prog = LqcModel::new(LqcSpec::scalar_benchmark(n))?.build(&x0, &Controller::Robust)?;
        let t1 = Instant::now();
        let sol = solve(&prog.program, config);
        let t2 = Instant::now();
        build_ms += (t1 - t0).as_secs_f64() * 1e3;
        solve_ms += (t2 - t1).as_secs_f64() * 1e3;
        if !sol.is_optimal() {
            return Err(Error::Solver {
                status: sol.status,
                step: None,
            });
        }
        last = Some((prog, sol));
    }
    let (prog, sol) = last.expect("reps >= 1");
    Ok(BenchRecord {
        n,
        build_ms: build_ms / reps as f64,
        solve_ms: solve_ms / reps as f64,
        iterations: sol.iterations,
        objective: sol.objective,
        n_soc_blocks: prog.num_soc_blocks(),
        lmi_dim: prog.lmi_dim(),
    })
}

/// Runs every horizon, one after another when `serial`, otherwise one
/// thread per horizon. Rows come back in the order of `horizons`.
pub fn run_bench(
    horizons: &[usize],
    reps: usize,
    serial: bool,
    config: &SolverConfig,
) -> Result<Vec<BenchRecord>> {
    if horizons.is_empty() {
        return Err(Error::InvalidSpec("horizon list is empty".into()));
    }
    if serial {
        return horizons
            .iter()
            .map(|&n| bench_horizon(n, reps, config))
            .collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = horizons
            .iter()
            .map(|&n| scope.spawn(move || bench_horizon(n, reps, config)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench thread panicked"))
            .collect()
    })
}

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_field_order() {
        let rec = bench_horizon(2, 1, &SolverConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn rejects_empty_inputs() {
        let cfg = SolverConfig::default();
        assert!(run_bench(&[], 1, true, &cfg).is_err());
        assert!(bench_horizon(3, 0, &cfg).is_err());
    }
}
