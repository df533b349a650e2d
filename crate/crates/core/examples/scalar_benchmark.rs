//! Program sizes and timings for the scalar benchmark family, written as CSV
//! to stdout. Pass horizons as arguments to override the default sweep.

use robust_socp::bench::{default_horizons, run_bench, write_csv};
use robust_socp::conic::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let horizons = if args.is_empty() {
        default_horizons()
    } else {
        args
    };
    let rows = run_bench(&horizons, 3, true, &SolverConfig::default())?;
    write_csv(&rows, std::io::stdout())?;
    Ok(())
}
