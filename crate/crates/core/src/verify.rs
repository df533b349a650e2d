//! Independent checks of a solved plan.

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::lqc::{ControlPlan, Controller, LqcModel};
use crate::mpc::{MpcModel, MpcSolution};
use crate::oracle;
use crate::slemma::{check_psd, DEFAULT_PSD_TOL};

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Measured violation; `passed` is `residual <= tol` except for the PSD
    /// checks, which use [`check_psd`] and report the scaled negative part
    /// of the smallest eigenvalue.
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    fn le(name: &'static str, residual: f64, tol: f64) -> Check {
        Check {
            name,
            residual,
            tol,
            passed: residual <= tol,
        }
    }

    fn psd(name: &'static str, m: &nalgebra::DMatrix<f64>, tol: f64) -> Check {
        let residual = (-linalg::min_eigenvalue(m)).max(0.0) / (1.0 + m.norm());
        Check {
            name,
            residual,
            tol,
            passed: check_psd(m, tol),
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub const FEAS_TOL: f64 = 1e-6;
pub const ORACLE_REL_TOL: f64 = 1e-5;
pub const NUM_SAMPLES: usize = 10_000;
pub const BOUNDARY_SAMPLES: usize = 1_000;
pub const BOUNDARY_TOL: f64 = 1e-7;

/// Checks an LQC plan without trusting the solver: input feasibility, the
/// multiplier sign, the multiplier LMIs, the exact worst case at `u` and a
/// sampled lower bound on it.
pub fn verify_lqc(
    model: &LqcModel,
    x0: &DVector<f64>,
    controller: &Controller,
    plan: &ControlPlan,
) -> Result<Vec<Check>> {
    let spec = model.spec();
    if x0.len() != spec.nx() {
        return Err(Error::DimensionMismatch {
            context: "initial state".into(),
            expected: spec.nx(),
            got: x0.len(),
        });
    }
    let cost = model.compact_cost(x0);
    let gamma = spec.gamma;
    let mut checks = Vec::new();

    let shape_ok = plan.u.len() == spec.num_inputs();
    checks.push(Check::le(
        "input_dimension",
        if shape_ok { 0.0 } else { 1.0 },
        0.0,
    ));
    if !shape_ok {
        return Ok(checks);
    }
    checks.push(Check::le(
        "input_feasibility",
        spec.input_set.max_violation(&plan.u).max(0.0),
        FEAS_TOL,
    ));
    checks.push(Check::le(
        "multiplier_nonneg",
        (-plan.lambda).max(0.0),
        1e-8,
    ));
    if !plan.beta.is_empty() {
        checks.push(Check::le(
            "moment_dual_nonneg",
            (-plan.beta.min()).max(0.0),
            1e-8,
        ));
    }

    let prog = model.build(x0, controller)?;
    if plan.beta.len() == prog.beta.len() {
        checks.push(Check::psd(
            "classical_lmi_psd",
            &prog.classical_lmi(plan),
            DEFAULT_PSD_TOL,
        ));
    } else {
        checks.push(Check::le("moment_dual_dimension", 1.0, 0.0));
    }
    if *controller == Controller::Robust {
        let sdp = model.robust_sdp_data(x0);
        let m = sdp.assemble(&sdp.y_of_u(&plan.u), plan.lambda, sdp.certificate_z(plan));
        checks.push(Check::psd("sdp_lmi_psd", &m, DEFAULT_PSD_TOL));
    }

    let regret = matches!(controller, Controller::Regret | Controller::DrRegret(_));
    let exact = if regret {
        oracle::worst_case_regret(&cost, &plan.u, gamma)?
    } else {
        oracle::worst_case_cost(&cost, &plan.u, gamma)?
    };
    let scale = 1.0 + exact.value.abs();
    match controller {
        Controller::Robust | Controller::Regret => checks.push(Check::le(
            "oracle_worst_case_match",
            (plan.objective - exact.value).abs() / scale,
            ORACLE_REL_TOL,
        )),
        // an expectation never exceeds the worst point of the support
        Controller::Dr(_) | Controller::DrRegret(_) => checks.push(Check::le(
            "oracle_upper_bound",
            ((plan.objective - exact.value) / scale).max(0.0),
            ORACLE_REL_TOL,
        )),
    }

    if matches!(controller, Controller::Robust | Controller::Regret) {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..NUM_SAMPLES {
            let w = oracle::sample_ball(&mut rng, cost.c.len(), gamma);
            let mut value = cost.cost(&plan.u, &w);
            if regret {
                value -= oracle::closed_form_inner_min(&cost, &w)?.1;
            }
            worst = worst.max(value);
        }
        let scale = 1.0 + plan.objective.abs();
        checks.push(Check::le(
            "sampled_bound",
            ((worst - plan.objective) / scale).max(0.0),
            FEAS_TOL,
        ));
    }
    Ok(checks)
}

/// Checks an MPC solution: dynamics, constraints along the horizon,
/// terminal membership and, by sampling the terminal ellipsoid's boundary,
/// invariance under `A + BK` and containment in both polyhedra.
pub fn verify_mpc(
    model: &MpcModel,
    x_init: &DVector<f64>,
    sol: &MpcSolution,
) -> Result<Vec<Check>> {
    let s = model.spec();
    let n = s.horizon;
    let mut checks = Vec::new();
    let shape_ok = sol.states.len() == n + 1
        && sol.inputs.len() == n
        && sol.states.iter().all(|x| x.len() == s.nx())
        && sol.inputs.iter().all(|u| u.len() == s.nu())
        && sol.center.len() == s.nx()
        && x_init.len() == s.nx();
    checks.push(Check::le(
        "trajectory_shape",
        if shape_ok { 0.0 } else { 1.0 },
        0.0,
    ));
    if !shape_ok {
        return Ok(checks);
    }

    let mut dyn_res = (&sol.states[0] - x_init).amax();
    let mut state_res = 0.0_f64;
    let mut input_res = 0.0_f64;
    for k in 0..n {
        let next = &s.a * &sol.states[k] + &s.b * &sol.inputs[k];
        dyn_res = dyn_res.max((next - &sol.states[k + 1]).amax());
        input_res = input_res.max((&s.g * &sol.inputs[k] - &s.h).max());
        if k >= 1 {
            state_res = state_res.max((&s.e * &sol.states[k] - &s.f).max());
        }
    }
    checks.push(Check::le("dynamics", dyn_res, FEAS_TOL));
    checks.push(Check::le("state_constraints", state_res.max(0.0), FEAS_TOL));
    checks.push(Check::le("input_constraints", input_res.max(0.0), FEAS_TOL));
    checks.push(Check::le("radius_nonneg", (-sol.radius).max(0.0), 1e-9));

    let td = model.terminal_diag()?;
    let dist = (&td.p_sqrt * (&sol.states[n] - &sol.center)).norm();
    checks.push(Check::le(
        "terminal_membership",
        (dist - sol.radius).max(0.0),
        FEAS_TOL,
    ));

    let acl = s.a_cl();
    let gk = &s.g * &s.k;
    let r = sol.radius.max(0.0);
    let mut rng = StdRng::seed_from_u64(0x7e57);
    let (mut inv, mut cx, mut cu) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..BOUNDARY_SAMPLES {
        let d = oracle::sample_sphere(&mut rng, s.nx(), r);
        let x = &sol.center + &td.p_inv_sqrt * d;
        let next = (&td.p_sqrt * (&acl * &x - &sol.center)).norm();
        inv = inv.max(next - r);
        cx = cx.max((&s.e * &x - &s.f).max());
        cu = cu.max((&gk * &x - &s.h).max());
    }
    checks.push(Check::le("boundary_invariance", inv.max(0.0), BOUNDARY_TOL));
    checks.push(Check::le(
        "boundary_state_containment",
        cx.max(0.0),
        BOUNDARY_TOL,
    ));
    checks.push(Check::le(
        "boundary_input_containment",
        cu.max(0.0),
        BOUNDARY_TOL,
    ));
    Ok(checks)
}
