//! Hyperbolic and quadratic-over-linear constraints written as
//! second-order cone blocks.

use nalgebra::{DMatrix, DVector};

use super::{BlockId, LinExpr, ProgramBuilder, Var};
use crate::error::Result;
use crate::linalg;

/// Emits `x² ≤ y·z, y ≥ 0, z ≥ 0` as `‖(2x, y − z)‖₂ ≤ y + z`.
pub fn hyperbolic_to_soc(
    program: &mut ProgramBuilder,
    x: impl Into<LinExpr>,
    y: impl Into<LinExpr>,
    z: impl Into<LinExpr>,
) -> BlockId {
    let (x, y, z) = (x.into(), y.into(), z.into());
    program.add_soc(y.clone() + z.clone(), vec![x * 2.0, y - z])
}

/// Emits `‖F x + g‖₂² ≤ t · den` as
/// `‖(2(F x + g), t − den)‖₂ ≤ t + den`.
///
/// `rows` holds the entries of `F x + g`. The caller guarantees `den > 0`
/// on the feasible set (usually it is the constant 1).
pub fn quadratic_epigraph(
    program: &mut ProgramBuilder,
    rows: Vec<LinExpr>,
    den: impl Into<LinExpr>,
    t: impl Into<LinExpr>,
) -> BlockId {
    let (den, t) = (den.into(), t.into());
    let mut tail: Vec<LinExpr> = rows.into_iter().map(|r| r * 2.0).collect();
    tail.push(t.clone() - den.clone());
    program.add_soc(t + den, tail)
}

/// Epigraph variable and cone block carrying a quadratic cost term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticObjective {
    pub epigraph: Var,
    pub block: BlockId,
}

impl QuadraticObjective {
    /// Upper-triangular factor `Lᵀ` of a positive definite cost matrix
    /// (`B = L Lᵀ`), rejected when a Cholesky pivot is at or below
    /// `1e-12·‖B‖_F`.
    pub fn pd_factor(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(linalg::cholesky(b, 1e-12, "quadratic cost matrix")?.transpose())
    }

    /// Adds `‖factor · vars + shift‖₂²` to the objective of `program`.
    pub fn add(
        program: &mut ProgramBuilder,
        factor: &DMatrix<f64>,
        vars: &[Var],
        shift: &DVector<f64>,
    ) -> QuadraticObjective {
        assert_eq!(factor.ncols(), vars.len());
        assert_eq!(factor.nrows(), shift.len());
        let rows = (0..factor.nrows())
            .map(|i| {
                let coeffs: Vec<f64> = factor.row(i).iter().cloned().collect();
                LinExpr::dot(&coeffs, vars) + shift[i]
            })
            .collect();
        let t = program.add_var();
        let block = quadratic_epigraph(program, rows, 1.0, t);
        program.add_objective(t);
        QuadraticObjective { epigraph: t, block }
    }
}
