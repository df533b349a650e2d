use std::time::Instant;

use nalgebra::DVector;

use super::{Controller, LqcModel};
use crate::conic::{SolveStatus, SolverConfig};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct StepStats {
    pub status: SolveStatus,
    pub objective: f64,
    pub iterations: usize,
    pub build_ms: f64,
    pub solve_ms: f64,
}

/// Closed-loop record: `states[k]` is the state before step `k`, so there
/// is one more state than inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub stats: Vec<StepStats>,
}

/// Re-solves the horizon problem from each observed state, applies the
/// first input block and advances the plant with the first-step matrices
/// `A₀, B₀, C₀`.
pub fn receding_horizon_simulate(
    model: &LqcModel,
    x0: &DVector<f64>,
    disturbances: &[DVector<f64>],
    controller: &Controller,
    steps: usize,
    config: &SolverConfig,
) -> Result<Trajectory> {
    let spec = model.spec();
    if disturbances.len() < steps {
        return Err(Error::DimensionMismatch {
            context: "disturbance sequence length".into(),
            expected: steps,
            got: disturbances.len(),
        });
    }
    let nu = spec.nu();
    let (a, b, c) = (&spec.a[0], &spec.b[0], &spec.c[0]);
    let mut x = x0.clone();
    let mut traj = Trajectory {
        states: vec![x.clone()],
        inputs: Vec::with_capacity(steps),
        stats: Vec::with_capacity(steps),
    };
    for (k, w) in disturbances.iter().take(steps).enumerate() {
        if w.len() != spec.nw() {
            return Err(Error::DimensionMismatch {
                context: format!("disturbance at step {k}"),
                expected: spec.nw(),
                got: w.len(),
            });
        }
        let start = Instant::now();
        let prog = model.build(&x, controller)?;
        let build_ms = start.elapsed().as_secs_f64() * 1e3;
        let start = Instant::now();
        let plan = prog.solve(config).map_err(|e| match e {
            Error::Solver { status, .. } => Error::Solver {
                status,
                step: Some(k),
            },
            other => other,
        })?;
        let solve_ms = start.elapsed().as_secs_f64() * 1e3;
        let u0 = plan.u.rows(0, nu).into_owned();
        x = a * &x + b * &u0 + c * w;
        traj.inputs.push(u0);
        traj.states.push(x.clone());
        traj.stats.push(StepStats {
            status: plan.status,
            objective: plan.objective,
            iterations: plan.iterations,
            build_ms,
            solve_ms,
        });
    }
    Ok(traj)
}
