//! The exact maximizer of an indefinite quadratic over a ball, compared with
//! a lattice search, including a hard case where the linear term misses the
//! top eigenvector.

use nalgebra::{DMatrix, DVector};
use robust_socp::oracle::{ball_lattice, max_quad_over_ball};

fn report(name: &str, c: DMatrix<f64>, h: DVector<f64>, gamma: f64) -> robust_socp::Result<()> {
    let r = max_quad_over_ball(&c, &h, gamma)?;
    let grid = ball_lattice(2, gamma, gamma / 400.0)
        .iter()
        .map(|w| (w.transpose() * &c * w)[0] + 2.0 * h.dot(w))
        .fold(f64::NEG_INFINITY, f64::max);
    let kkt = ((DMatrix::identity(2, 2) * r.multiplier - &c) * &r.w_star - &h).norm();
    println!(
        "{name:<10} max {:.9} at ({:+.5}, {:+.5}), ν = {:.5}, hard case {}, KKT {kkt:.1e}, lattice {grid:.9}",
        r.value, r.w_star[0], r.w_star[1], r.multiplier, r.hard_case
    );
    Ok(())
}

fn main() -> robust_socp::Result<()> {
    let saddle = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
    report(
        "saddle",
        saddle.clone(),
        DVector::from_vec(vec![0.3, 0.2]),
        1.0,
    )?;
    report("hard", saddle, DVector::from_vec(vec![0.0, 0.5]), 1.0)?;
    report(
        "concave",
        -DMatrix::identity(2, 2) * 2.0,
        DVector::from_vec(vec![0.2, -0.1]),
        1.0,
    )?;
    report(
        "linear",
        DMatrix::zeros(2, 2),
        DVector::from_vec(vec![3.0, 4.0]),
        0.5,
    )?;
    Ok(())
}
