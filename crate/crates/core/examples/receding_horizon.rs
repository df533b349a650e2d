//! Closed-loop receding-horizon simulation: re-solve from every observed
//! state, apply the first input, and let a random disturbance act.

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::SeedableRng;
use robust_socp::conic::SolverConfig;
use robust_socp::lqc::{receding_horizon_simulate, Controller, LqcModel, LqcSpec};
use robust_socp::oracle::sample_ball;

fn main() -> robust_socp::Result<()> {
    let spec = LqcSpec::scalar_benchmark(8);
    let per_step = spec.nw();
    let model = LqcModel::new(spec)?;
    let mut rng = StdRng::seed_from_u64(3);
    let steps = 15;
    let disturbances: Vec<DVector<f64>> = (0..steps)
        .map(|_| sample_ball(&mut rng, per_step, 0.1))
        .collect();

    for controller in [Controller::Robust, Controller::Regret] {
        let traj = receding_horizon_simulate(
            &model,
            &DVector::from_element(1, -1.0),
            &disturbances,
            &controller,
            steps,
            &SolverConfig::default(),
        )?;
        println!("{}:", controller.name());
        for (k, (x, u)) in traj.states.iter().zip(&traj.inputs).enumerate() {
            let s = &traj.stats[k];
            println!(
                "  k = {k:2}  x = {:+.4}  u = {:+.4}  plan value {:.5}  solve {:.2} ms",
                x[0], u[0], s.objective, s.solve_ms
            );
        }
        println!("  final x = {:+.4}", traj.states[steps][0]);
    }
    Ok(())
}
