//! MPC for a double integrator with an online-reconfigurable ellipsoidal
//! terminal set, compared with a fixed set centered at the origin.

use nalgebra::{DMatrix, DVector};
use robust_socp::conic::SolverConfig;
use robust_socp::mpc::{lqr, MpcModel, MpcSpec, TerminalSet};

fn main() -> robust_socp::Result<()> {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let b = DMatrix::from_column_slice(2, 1, &[0.5, 1.0]);
    let q = DMatrix::identity(2, 2);
    let r = DMatrix::identity(1, 1);
    let (k, p) = lqr(&a, &b, &q, &r)?;
    println!("LQR gain K = {:?}", k.as_slice());

    // |x₁| ≤ 5, |x₂| ≤ 2, |u| ≤ 1
    let e = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
    let f = DVector::from_vec(vec![5.0, 5.0, 2.0, 2.0]);
    let g = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
    let h = DVector::from_vec(vec![1.0, 1.0]);
    for horizon in [5, 2, 1] {
        let spec = MpcSpec {
            a: a.clone(),
            b: b.clone(),
            e: e.clone(),
            f: f.clone(),
            g: g.clone(),
            h: h.clone(),
            k: k.clone(),
            p: p.clone(),
            horizon,
            q: q.clone(),
            r: r.clone(),
            q_f: p.clone(),
        };
        let model = MpcModel::new(spec)?;
        let cfg = SolverConfig::default();
        let fixed = TerminalSet::Fixed {
            center: DVector::zeros(2),
            radius: model.centered_radius()?,
        };
        println!("horizon {horizon}");
        for x_init in [[-4.5, 1.0], [3.0, -1.5], [4.5, -2.0]] {
            let x_init = DVector::from_row_slice(&x_init);
            print!("  x₀ = ({:+.1}, {:+.1})  ", x_init[0], x_init[1]);
            match model
                .build(&x_init, &TerminalSet::Reconfigurable)?
                .solve(&cfg)
            {
                Ok(sol) => print!(
                    "reconfigurable cost {:9.4} (center ({:+.3}, {:+.3}), radius {:.3})  ",
                    sol.objective, sol.center[0], sol.center[1], sol.radius
                ),
                Err(e) => print!("reconfigurable: {e}  "),
            }
            match model.build(&x_init, &fixed)?.solve(&cfg) {
                Ok(fs) => println!("fixed cost {:9.4}", fs.objective),
                Err(e) => println!("fixed: {e}"),
            }
        }
    }
    Ok(())
}
