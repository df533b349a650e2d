//! Worst-case regret against a clairvoyant controller that knows the
//! disturbance in advance, compared with the robust plan.

use nalgebra::DVector;
use robust_socp::conic::SolverConfig;
use robust_socp::lqc::{Controller, LqcModel, LqcSpec};
use robust_socp::oracle;

fn main() -> robust_socp::Result<()> {
    let x0 = DVector::from_element(1, -1.0);
    let cfg = SolverConfig::default();
    for horizon in [1, 4, 10] {
        let model = LqcModel::new(LqcSpec::scalar_benchmark(horizon))?;
        let cost = model.compact_cost(&x0);
        let gamma = model.spec().gamma;

        let regret = model.build(&x0, &Controller::Regret)?.solve(&cfg)?;
        let robust = model.build(&x0, &Controller::Robust)?.solve(&cfg)?;
        let regret_of_robust = oracle::worst_case_regret(&cost, &robust.u, gamma)?.value;
        let cost_of_regret = oracle::worst_case_cost(&cost, &regret.u, gamma)?.value;

        println!("N = {horizon:2}");
        println!(
            "  regret plan: regret {:.6}, worst-case cost {cost_of_regret:.6}",
            regret.objective
        );
        println!(
            "  robust plan: regret {regret_of_robust:.6}, worst-case cost {:.6}",
            robust.objective
        );
    }
    Ok(())
}
