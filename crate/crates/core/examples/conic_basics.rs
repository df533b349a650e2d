//! Minimize a linear function over a disc intersected with a half-plane,
//! then read the solution, duals and residuals.

use robust_socp::conic::{hyperbolic_to_soc, solve, LinExpr, ProgramBuilder, SolverConfig};

fn main() -> robust_socp::Result<()> {
    let mut pb = ProgramBuilder::new();
    let x = pb.add_vars(2);

    // ‖(x₀, x₁)‖ ≤ 1
    pb.add_soc(1.0, vec![x[0].into(), x[1].into()]);
    // x₀ + x₁ ≥ 0.5
    pb.add_le(0.5, LinExpr::sum(&x));
    // x₀² ≤ s · 1 through a rotated cone, with s paid for in the objective
    let s = pb.add_var();
    hyperbolic_to_soc(&mut pb, x[0], s, 1.0);

    pb.add_objective(LinExpr::dot(&[1.0, 2.0], &x) + s * 0.5);
    let prog = pb.build()?;
    let sol = solve(&prog, &SolverConfig::default());

    println!("status      {:?}", sol.status);
    println!("x           ({:.6}, {:.6})", sol.x[0], sol.x[1]);
    println!(
        "objective   {:.9} (dual {:.9})",
        sol.objective, sol.dual_objective
    );
    println!("iterations  {}", sol.iterations);
    println!("violation   {:.1e}", prog.max_violation(&sol.x));
    Ok(())
}
