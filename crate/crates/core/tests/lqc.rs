//! Prediction, compact cost and the min-max control programs against
//! rollouts, grids and the ball oracle.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use robust_socp::conic::{SolveStatus, SolverConfig};
use robust_socp::lqc::{
    build_compact_cost, build_prediction_matrices, build_robust_sdp_data,
    receding_horizon_simulate, AmbiguitySpec, Controller, LqcModel, LqcSpec, Polyhedron,
};
use robust_socp::oracle::{self, rollout_cost, rollout_states, sample_ball};
use robust_socp::slemma::check_psd;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn solve(model: &LqcModel, x0: &DVector<f64>, ctrl: &Controller) -> robust_socp::lqc::ControlPlan {
    model.build(x0, ctrl).unwrap().solve(&cfg()).unwrap()
}

fn scalar_grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step).round() as i64;
    (0..=n).map(move |i| lo + i as f64 * step)
}

#[test]
fn stacked_states_match_rollout() {
    let mut rng = StdRng::seed_from_u64(1);
    let spec = random_lqc_dims(&mut rng, 3, 2, 2, 5, false);
    let p = build_prediction_matrices(&spec).unwrap();
    for _ in 0..20 {
        let x0 = rand_vec(&mut rng, 3, 1.0);
        let u = rand_vec(&mut rng, 10, 1.0);
        let w = rand_vec(&mut rng, 10, 1.0);
        let stacked = p.states(&x0, &u, &w);
        for (k, xk) in rollout_states(&spec, &x0, &u, &w).iter().enumerate() {
            let diff = (stacked.rows(3 * k, 3) - xk).amax();
            assert!(diff <= 1e-12 * (1.0 + xk.amax()), "step {k}: {diff}");
        }
    }
}

#[test]
fn prediction_is_block_lower_triangular() {
    let mut rng = StdRng::seed_from_u64(2);
    let spec = random_lqc_dims(&mut rng, 2, 3, 2, 4, false);
    let p = build_prediction_matrices(&spec).unwrap();
    for k in 0..4 {
        for j in (k + 1)..4 {
            assert_eq!(p.g.view((2 * k, 3 * j), (2, 3)).norm(), 0.0);
            assert_eq!(p.h.view((2 * k, 2 * j), (2, 2)).norm(), 0.0);
        }
    }
}

#[test]
fn compact_cost_matches_rollout() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..100 {
        let spec = random_lqc(&mut rng, 4, 10, false);
        let model = LqcModel::new(spec.clone()).unwrap();
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        let cost = model.compact_cost(&x0);
        let u = rand_vec(&mut rng, spec.num_inputs(), 1.0);
        let w = rand_vec(&mut rng, spec.num_disturbances(), 1.0);
        let j = rollout_cost(&spec, &x0, &u, &w);
        assert!((cost.cost(&u, &w) - j).abs() <= 1e-9 * (1.0 + j.abs()));
        assert!(linalg_min_eig(&cost.cbar) >= -1e-10 * (1.0 + cost.cbar.norm()));
    }
}

fn linalg_min_eig(m: &DMatrix<f64>) -> f64 {
    robust_socp::linalg::min_eigenvalue(m)
}

#[test]
fn scalar_robust_single_step() {
    let spec = LqcSpec::scalar_benchmark(1);
    let model = LqcModel::new(spec).unwrap();
    let plan = solve(&model, &scalar_x0(), &Controller::Robust);
    assert!((plan.u[0] - 0.4).abs() < 1e-6, "u* = {}", plan.u[0]);
    assert!(
        (plan.objective - 0.601).abs() < 1e-6,
        "J = {}",
        plan.objective
    );

    // min over u, max over w, both on a 1e-4 grid
    let cost = model.compact_cost(&scalar_x0());
    let mut best = (f64::INFINITY, 0.0);
    for u in scalar_grid(-0.4, 0.4, 1e-4) {
        let uv = DVector::from_element(1, u);
        let worst = scalar_grid(-0.1, 0.1, 1e-4)
            .map(|w| cost.cost(&uv, &DVector::from_element(1, w)))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst < best.0 {
            best = (worst, u);
        }
    }
    assert!((best.1 - 0.4).abs() < 1e-9);
    assert!((best.0 - plan.objective).abs() < 1e-6);
}

#[test]
fn vanishing_uncertainty_is_nominal() {
    let mut spec = LqcSpec::scalar_benchmark(3);
    spec.gamma = 1e-8;
    let model = LqcModel::new(spec.clone()).unwrap();
    let plan = solve(&model, &scalar_x0(), &Controller::Robust);
    // nominal problem: minimize the w = 0 quadratic over the box
    let mut b = robust_socp::conic::ProgramBuilder::new();
    let cost = model.compact_cost(&scalar_x0());
    let u = b.add_vars(3);
    let l = robust_socp::conic::QuadraticObjective::pd_factor(&cost.bbar).unwrap();
    let shift = l.transpose().lu().solve(&cost.b).unwrap();
    robust_socp::conic::QuadraticObjective::add(&mut b, &l, &u, &shift);
    b.add_objective(cost.constant() - shift.norm_squared());
    for &v in &u {
        b.add_le(v, 0.4);
        b.add_le(-v, 0.4);
    }
    let nominal = robust_socp::conic::solve(&b.build().unwrap(), &cfg());
    assert_eq!(nominal.status, SolveStatus::Optimal);
    assert!((plan.objective - nominal.objective).abs() < 1e-5);
}

#[test]
fn robust_matches_ball_oracle() {
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..30 {
        let spec = random_lqc(&mut rng, 3, 6, true);
        let model = LqcModel::new(spec.clone()).unwrap();
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        let plan = solve(&model, &x0, &Controller::Robust);
        let cost = model.compact_cost(&x0);
        let oracle = oracle::worst_case_cost(&cost, &plan.u, spec.gamma).unwrap();
        assert!(rel_err(plan.objective, oracle.value) < 1e-5);
        assert!(spec.input_set.max_violation(&plan.u) <= 1e-7);
    }
}

#[test]
fn certified_value_bounds_sampled_cost() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..10 {
        let spec = random_lqc(&mut rng, 2, 4, true);
        let model = LqcModel::new(spec.clone()).unwrap();
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        // any input, not only the optimal one
        let u = rand_vec(&mut rng, spec.num_inputs(), 1.0);
        let prog = model.build_fixed(&x0, &Controller::Robust, &u).unwrap();
        let plan = prog.solve(&cfg()).unwrap();
        let cost = model.compact_cost(&x0);
        let nw = spec.num_disturbances();
        for _ in 0..10_000 {
            let w = sample_ball(&mut rng, nw, spec.gamma);
            assert!(cost.cost(&u, &w) <= plan.objective + 1e-7 * (1.0 + plan.objective.abs()));
        }
    }
}

#[test]
fn robust_certificates_are_psd() {
    let mut rng = StdRng::seed_from_u64(6);
    for _ in 0..20 {
        let spec = random_lqc(&mut rng, 3, 5, true);
        let model = LqcModel::new(spec.clone()).unwrap();
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        let prog = model.build(&x0, &Controller::Robust).unwrap();
        let plan = prog.solve(&cfg()).unwrap();
        assert!(check_psd(&prog.classical_lmi(&plan), 1e-6));
        let sdp = model.robust_sdp_data(&x0);
        assert!(sdp.check_plan(&plan, 1e-6));
        let y = sdp.y_of_u(&plan.u);
        assert!((sdp.u_of_y(&y) - &plan.u).amax() < 1e-9 * (1.0 + plan.u.amax()));
        assert_eq!(prog.num_soc_blocks(), spec.num_disturbances());
        assert_eq!(
            prog.lmi_dim(),
            spec.num_inputs() + spec.num_disturbances() + 1
        );
        // a negative multiplier is never a certificate
        let mut bad = plan.clone();
        bad.lambda = -plan.lambda.abs() - 1.0;
        assert!(!check_psd(&prog.classical_lmi(&bad), 1e-6));
    }
}

#[test]
fn scalar_sdp_data() {
    let sdp = build_robust_sdp_data(&LqcSpec::scalar_benchmark(1), &scalar_x0()).unwrap();
    let expect = -0.9 - 0.9 * (-0.9) / 1.9;
    assert!((sdp.h[0] - expect).abs() < 1e-15);
    assert!((sdp.f[(0, 0)] - 0.9 / 1.9f64.sqrt()).abs() < 1e-15);
}

#[test]
fn sdp_data_without_coupling() {
    // x₀ = 0, no linear terms and Q = 0 give b = 0 and D = 0
    let mut spec = LqcSpec::scalar_benchmark(2);
    for q in &mut spec.q {
        q.fill(0.0);
    }
    let sdp = build_robust_sdp_data(&spec, &DVector::zeros(1)).unwrap();
    let cost = build_compact_cost(&spec, &DVector::zeros(1)).unwrap();
    assert_eq!(sdp.h, cost.c);
    assert_eq!(sdp.f.norm(), 0.0);
}

#[test]
fn scalar_regret_matches_nested_grid() {
    let model = LqcModel::new(LqcSpec::scalar_benchmark(1)).unwrap();
    let plan = solve(&model, &scalar_x0(), &Controller::Regret);
    let cost = model.compact_cost(&scalar_x0());
    let mut best = f64::INFINITY;
    for u in scalar_grid(-0.4, 0.4, 1e-3) {
        let uv = DVector::from_element(1, u);
        let worst = scalar_grid(-0.1, 0.1, 1e-4)
            .map(|w| {
                let wv = DVector::from_element(1, w);
                let (_, vmin) = oracle::closed_form_inner_min(&cost, &wv).unwrap();
                cost.cost(&uv, &wv) - vmin
            })
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.min(worst);
    }
    assert!(
        (plan.objective - best).abs() < 1e-4,
        "{} vs {}",
        plan.objective,
        best
    );
    assert!((plan.u[0] - 0.4).abs() < 1e-6);
}

#[test]
fn regret_is_nonnegative_and_exact() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..30 {
        let spec = random_lqc(&mut rng, 3, 5, true);
        let model = LqcModel::new(spec.clone()).unwrap();
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        let regret = solve(&model, &x0, &Controller::Regret);
        assert!(regret.objective >= -1e-8);
        let cost = model.compact_cost(&x0);
        let oracle = oracle::worst_case_regret(&cost, &regret.u, spec.gamma).unwrap();
        assert!(rel_err(regret.objective, oracle.value) < 1e-5);
        // regret never exceeds the worst-case cost minus the best clairvoyant cost
        let robust = solve(&model, &x0, &Controller::Robust);
        // min_w min_v J(v, w) in closed form: a quadratic in w over the ball
        let bi = cost.bbar.clone().cholesky().unwrap().inverse();
        let kq = &cost.cbar - cost.d.transpose() * &bi * &cost.d;
        let kl = &cost.c - cost.d.transpose() * &bi * &cost.b;
        let kc = cost.constant() - cost.b.dot(&(&bi * &cost.b));
        let vmin = kc
            - oracle::max_quad_over_ball(&(-kq), &(-kl), spec.gamma)
                .unwrap()
                .value;
        assert!(
            regret.objective <= robust.objective - vmin + 1e-6 * (1.0 + robust.objective.abs())
        );
    }
}

#[test]
fn regret_vanishes_without_uncertainty_or_constraints() {
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..5 {
        let mut spec = random_lqc(&mut rng, 2, 4, false);
        spec.gamma = 1e-8;
        let model = LqcModel::new(spec.clone()).unwrap();
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        let plan = solve(&model, &x0, &Controller::Regret);
        assert!(plan.objective <= 1e-6 && plan.objective >= -1e-8);
        let amb = AmbiguitySpec::support_only(spec.num_disturbances());
        let dr = solve(&model, &x0, &Controller::DrRegret(amb));
        assert!(dr.objective <= 1e-6);
    }
}

#[test]
fn dr_without_moments_is_robust() {
    let mut rng = StdRng::seed_from_u64(9);
    for _ in 0..10 {
        let spec = random_lqc(&mut rng, 3, 4, true);
        let model = LqcModel::new(spec.clone()).unwrap();
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        let nw = spec.num_disturbances();
        let robust = solve(&model, &x0, &Controller::Robust);
        let dr = solve(
            &model,
            &x0,
            &Controller::Dr(AmbiguitySpec::support_only(nw)),
        );
        assert!((dr.objective - robust.objective).abs() <= 1e-6 * (1.0 + robust.objective.abs()));
        let regret = solve(&model, &x0, &Controller::Regret);
        let drr = solve(
            &model,
            &x0,
            &Controller::DrRegret(AmbiguitySpec::support_only(nw)),
        );
        assert!((drr.objective - regret.objective).abs() <= 1e-6 * (1.0 + regret.objective.abs()));

        // inactive moment bounds
        let m = 2;
        let amb = AmbiguitySpec {
            h: rand_mat(&mut rng, m, nw, 1.0),
            mu: DVector::from_element(m, 1e6),
        };
        let dr = solve(&model, &x0, &Controller::Dr(amb.clone()));
        assert!(dr.beta.amax() < 1e-6);
        assert!((dr.objective - robust.objective).abs() <= 1e-6 * (1.0 + robust.objective.abs()));
        let drr = solve(&model, &x0, &Controller::DrRegret(amb));
        assert!((drr.objective - regret.objective).abs() <= 1e-6 * (1.0 + regret.objective.abs()));
    }
}

#[test]
fn dr_never_exceeds_robust() {
    let mut rng = StdRng::seed_from_u64(10);
    for _ in 0..15 {
        let spec = random_lqc(&mut rng, 3, 4, true);
        let model = LqcModel::new(spec.clone()).unwrap();
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        let nw = spec.num_disturbances();
        let m = 3;
        let amb = AmbiguitySpec {
            h: rand_mat(&mut rng, m, nw, 1.0),
            // μ ≥ 0 keeps the point mass at w = 0 admissible
            mu: rand_vec(&mut rng, m, 0.1).abs(),
        };
        let robust = solve(&model, &x0, &Controller::Robust);
        let dr = solve(&model, &x0, &Controller::Dr(amb));
        assert!(dr.objective <= robust.objective + 1e-8 * (1.0 + robust.objective.abs()));
        assert!(dr.beta.min() >= -1e-8);
    }
}

#[test]
fn scalar_dr_matches_two_point_search() {
    let model = LqcModel::new(LqcSpec::scalar_benchmark(1)).unwrap();
    let amb = AmbiguitySpec {
        h: DMatrix::from_element(1, 1, 1.0),
        mu: DVector::from_element(1, 0.0),
    };
    let dr = solve(&model, &scalar_x0(), &Controller::Dr(amb));
    let robust = solve(&model, &scalar_x0(), &Controller::Robust);
    assert!(dr.objective <= robust.objective + 1e-8);

    // sup over two-point distributions on a w-grid with mean ≤ 0
    let cost = model.compact_cost(&scalar_x0());
    let ws: Vec<f64> = scalar_grid(-0.1, 0.1, 2e-3).collect();
    let sup_at = |u: f64| -> f64 {
        let uv = DVector::from_element(1, u);
        let j: Vec<f64> = ws
            .iter()
            .map(|&w| cost.cost(&uv, &DVector::from_element(1, w)))
            .collect();
        let mut best = f64::NEG_INFINITY;
        for (a, &wa) in ws.iter().enumerate() {
            for (b, &wb) in ws.iter().enumerate().skip(a) {
                // weight p on wb, 1 − p on wa; the mean constraint bounds p
                let pmax = if wb <= 0.0 {
                    1.0
                } else if wa > 0.0 {
                    continue;
                } else {
                    (-wa / (wb - wa)).min(1.0)
                };
                for p in [0.0, pmax] {
                    best = best.max(p * j[b] + (1.0 - p) * j[a]);
                }
            }
        }
        best
    };
    let oracle_at_u = sup_at(dr.u[0]);
    assert!((oracle_at_u - dr.objective).abs() < 1e-6);
    let grid_min = scalar_grid(-0.4, 0.4, 1e-2)
        .map(sup_at)
        .fold(f64::INFINITY, f64::min);
    assert!(dr.objective <= grid_min + 1e-8);
}

#[test]
fn receding_horizon_at_origin_stays_put() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let mut spec = LqcSpec::time_invariant(
        3,
        one.clone(),
        one.clone(),
        one.clone(),
        one.clone(),
        one,
        0.1,
        Polyhedron::box_set(3, -1.0, 1.0),
    );
    spec.gamma = 0.1;
    let model = LqcModel::new(spec).unwrap();
    let w = vec![DVector::zeros(1); 5];
    // with w = 0 applied, the robust plan at x = 0 is u = 0 by symmetry
    let traj = receding_horizon_simulate(
        &model,
        &DVector::zeros(1),
        &w,
        &Controller::Robust,
        5,
        &cfg(),
    )
    .unwrap();
    for (x, u) in traj.states.iter().zip(&traj.inputs) {
        assert!(x[0].abs() < 1e-7 && u[0].abs() < 1e-7);
    }
    assert_eq!(traj.states.len(), 6);
}

#[test]
fn receding_horizon_matches_manual_resolve() {
    let spec = LqcSpec::scalar_benchmark(5);
    let model = LqcModel::new(spec.clone()).unwrap();
    let w = vec![DVector::from_element(1, -0.1); 10];
    let traj = receding_horizon_simulate(&model, &scalar_x0(), &w, &Controller::Robust, 10, &cfg())
        .unwrap();
    let mut x = scalar_x0();
    for (k, wk) in w.iter().enumerate() {
        let fresh = LqcModel::new(spec.clone()).unwrap();
        let plan = solve(&fresh, &x, &Controller::Robust);
        assert!((plan.u[0] - traj.inputs[k][0]).abs() < 1e-9);
        assert!((plan.objective - traj.stats[k].objective).abs() < 1e-9);
        x = &spec.a[0] * &x + &spec.b[0] * plan.u.rows(0, 1) + &spec.c[0] * wk;
        assert!((x[0] - traj.states[k + 1][0]).abs() < 1e-9);
    }
}

#[test]
fn open_loop_cost_within_step_zero_bound() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..10 {
        let spec = random_lqc(&mut rng, 2, 4, true);
        let model = LqcModel::new(spec.clone()).unwrap();
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        let plan = solve(&model, &x0, &Controller::Robust);
        for _ in 0..200 {
            let w = sample_ball(&mut rng, spec.num_disturbances(), spec.gamma);
            let realized = rollout_cost(&spec, &x0, &plan.u, &w);
            assert!(realized <= plan.objective + 1e-7 * (1.0 + plan.objective.abs()));
        }
    }
}

#[test]
fn receding_horizon_reports_dimension_errors() {
    let model = LqcModel::new(LqcSpec::scalar_benchmark(2)).unwrap();
    let w = vec![DVector::zeros(2)];
    assert!(
        receding_horizon_simulate(&model, &scalar_x0(), &w, &Controller::Robust, 1, &cfg())
            .is_err()
    );
    assert!(
        receding_horizon_simulate(&model, &scalar_x0(), &[], &Controller::Robust, 1, &cfg())
            .is_err()
    );
}

#[test]
fn dr_rejects_wrong_moment_width() {
    let model = LqcModel::new(LqcSpec::scalar_benchmark(2)).unwrap();
    let amb = AmbiguitySpec {
        h: DMatrix::zeros(1, 3),
        mu: DVector::zeros(1),
    };
    assert!(matches!(
        model.build(&scalar_x0(), &Controller::Dr(amb)),
        Err(robust_socp::Error::DimensionMismatch { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn only_b_and_c_depend_on_x0(seed in 0u64..1000, s in -2.0f64..2.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let spec = random_lqc(&mut rng, 3, 4, false);
        let x0 = rand_vec(&mut rng, spec.nx(), 1.0);
        let c1 = build_compact_cost(&spec, &x0).unwrap();
        let c2 = build_compact_cost(&spec, &(x0 * s)).unwrap();
        prop_assert_eq!(&c1.cbar, &c2.cbar);
        prop_assert_eq!(&c1.bbar, &c2.bbar);
        prop_assert_eq!(&c1.d, &c2.d);
        prop_assert_eq!(&c1.abar, &c2.abar);
        prop_assert_eq!(&c1.a, &c2.a);
    }
}
