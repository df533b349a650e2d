//! Robust finite-horizon control of the scalar benchmark system: solve the
//! min-max program, then confirm its value with the exact ball oracle and
//! by sampling disturbances.

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::SeedableRng;
use robust_socp::conic::SolverConfig;
use robust_socp::lqc::{Controller, LqcModel, LqcSpec};
use robust_socp::oracle;

fn main() -> robust_socp::Result<()> {
    let x0 = DVector::from_element(1, -1.0);
    for horizon in [1, 5, 20] {
        let model = LqcModel::new(LqcSpec::scalar_benchmark(horizon))?;
        let prog = model.build(&x0, &Controller::Robust)?;
        let plan = prog.solve(&SolverConfig::default())?;

        let cost = model.compact_cost(&x0);
        let exact = oracle::worst_case_cost(&cost, &plan.u, model.spec().gamma)?;
        let mut rng = StdRng::seed_from_u64(1);
        let sampled = (0..10_000)
            .map(|_| {
                cost.cost(
                    &plan.u,
                    &oracle::sample_ball(&mut rng, horizon, model.spec().gamma),
                )
            })
            .fold(f64::NEG_INFINITY, f64::max);

        println!(
            "N = {horizon:2}: worst case {:.9}, oracle {:.9}, best of 10⁴ samples {sampled:.9}",
            plan.objective, exact.value
        );
        println!(
            "        u₀ = {:.6}, λ = {:.4}, {} cone-Q blocks, {} iterations",
            plan.u[0],
            plan.lambda,
            prog.num_soc_blocks(),
            plan.iterations
        );
        let sdp = model.robust_sdp_data(&x0);
        println!(
            "        LMI certificate holds: {}",
            sdp.check_plan(&plan, 1e-6)
        );
    }
    Ok(())
}
