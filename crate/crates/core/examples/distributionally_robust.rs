//! Distributionally robust control: the expected cost is maximized over all
//! distributions on the disturbance ball whose first moments obey
//! `E[Hw] ≤ μ`. Tightening `μ` moves the value from the robust worst case
//! toward the nominal cost.

use nalgebra::{DMatrix, DVector};
use robust_socp::conic::SolverConfig;
use robust_socp::lqc::{AmbiguitySpec, Controller, LqcModel, LqcSpec};

fn main() -> robust_socp::Result<()> {
    let horizon = 3;
    let x0 = DVector::from_element(1, -1.0);
    let model = LqcModel::new(LqcSpec::scalar_benchmark(horizon))?;
    let cfg = SolverConfig::default();
    let robust = model.build(&x0, &Controller::Robust)?.solve(&cfg)?;
    println!("robust worst case              {:.6}", robust.objective);

    // bound the mean of every coordinate from both sides
    let h = DMatrix::from_fn(2 * horizon, horizon, |i, j| match i {
        _ if i == j => 1.0,
        _ if i == j + horizon => -1.0,
        _ => 0.0,
    });
    for bound in [0.1, 0.05, 0.02, 0.0] {
        let amb = AmbiguitySpec {
            h: h.clone(),
            mu: DVector::from_element(2 * horizon, bound),
        };
        let dr = model
            .build(&x0, &Controller::Dr(amb.clone()))?
            .solve(&cfg)?;
        let drr = model.build(&x0, &Controller::DrRegret(amb))?.solve(&cfg)?;
        println!(
            "|E[w_k]| ≤ {bound:<5} cost {:.6}  regret {:.6}  β = {:?}",
            dr.objective,
            drr.objective,
            dr.beta
                .iter()
                .map(|b| format!("{b:.3}"))
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}
