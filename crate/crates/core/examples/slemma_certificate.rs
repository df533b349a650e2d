//! A robust quadratic implication certified two ways: the second-order cone
//! block built from a simultaneous diagonalization, and the classical
//! multiplier LMI checked at the solver's multiplier.

use nalgebra::{DMatrix, DVector};
use robust_socp::conic::{solve, LinExpr, ProgramBuilder, SolverConfig};
use robust_socp::linalg;
use robust_socp::slemma::{
    assemble_classical_lmi, check_psd, emit_simplified_slemma, simultaneous_diagonalize, QuadForm,
    DEFAULT_PSD_TOL,
};

fn main() -> robust_socp::Result<()> {
    // inner set: the ellipse 1 − zᵀAz ≥ 0
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let inner = QuadForm::new(-&a, DVector::zeros(2), 1.0)?;

    // outer: f − zᵀMz − 2eᵀz ≥ 0 must hold on the whole ellipse; find the
    // smallest such f
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -0.5]);
    let e_vec = DVector::from_vec(vec![0.4, -0.2]);

    let sd = simultaneous_diagonalize(&a, &m)?;
    let (ra, rd) = sd.residuals(&a, &m);
    println!(
        "diagonalization residuals {ra:.1e} {rd:.1e}, δ = {:?}",
        sd.delta.as_slice()
    );

    let mut pb = ProgramBuilder::new();
    let f = pb.add_var();
    let e: Vec<LinExpr> = (-&e_vec).iter().map(|&v| LinExpr::constant(v)).collect();
    let block = emit_simplified_slemma(&mut pb, &inner, &(-&m), &e, &f.into(), &sd)?;
    pb.add_objective(f);
    let sol = solve(&pb.build()?, &SolverConfig::default());

    let f_star = sol.x[f.0];
    let lambda = sol.x[block.lambda.0];
    println!(
        "{:?}: smallest f = {f_star:.9}, λ = {lambda:.9}",
        sol.status
    );

    let lmi = assemble_classical_lmi(&inner, &(-&m), &(-&e_vec), f_star, lambda);
    println!(
        "classical LMI min eigenvalue {:.2e}, PSD: {}",
        linalg::min_eigenvalue(&lmi),
        check_psd(&lmi, DEFAULT_PSD_TOL)
    );
    let shaved = assemble_classical_lmi(&inner, &(-&m), &(-&e_vec), f_star - 1e-3, lambda);
    println!(
        "with f lowered by 1e-3, PSD: {}",
        check_psd(&shaved, DEFAULT_PSD_TOL)
    );
    Ok(())
}
