//! Finite-horizon linear-quadratic control under ball-bounded disturbances.
//!
//! The stacked states are `(x₁,…,x_N) = F x₀ + G u + H w`, and the cost is
//! kept in the compact form
//!
//! ```text
//! J(x₀,u,w) = wᵀC̄w + 2(c + Dᵀu)ᵀw + uᵀB̄u + 2bᵀu + 2aᵀx₀ + x₀ᵀĀx₀
//! ```
//!
//! from which the robust, regret-optimal and distributionally robust
//! problems are written as second-order cone programs. Only `b` and `c`
//! depend on `x₀`, so everything else, including the congruences that
//! diagonalize the disturbance quadratics, lives in an [`LqcModel`] built
//! once per problem.

mod builders;
mod simulate;
mod spec;

pub use builders::{
    build_dr_regret_socp, build_dr_socp, build_regret_socp, build_robust_sdp_data,
    build_robust_socp, ControlPlan, Controller, LqcProgram, SdpData,
};
pub use simulate::{receding_horizon_simulate, StepStats, Trajectory};
pub use spec::{AmbiguitySpec, LqcSpec, Polyhedron};

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg;
use crate::slemma::{simultaneous_diagonalize, SimulDiag};

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionMatrices {
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

impl PredictionMatrices {
    /// Stacked `(x₁,…,x_N)`.
    pub fn states(&self, x0: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        &self.f * x0 + &self.g * u + &self.h * w
    }
}

pub fn build_prediction_matrices(spec: &LqcSpec) -> Result<PredictionMatrices> {
    spec.validate()?;
    let (n, nx, nu, nw) = (spec.horizon, spec.nx(), spec.nu(), spec.nw());
    let mut f = DMatrix::zeros(n * nx, nx);
    let mut g = DMatrix::zeros(n * nx, n * nu);
    let mut h = DMatrix::zeros(n * nx, n * nw);
    let mut prev_f = DMatrix::identity(nx, nx);
    let mut prev_g = DMatrix::zeros(nx, n * nu);
    let mut prev_h = DMatrix::zeros(nx, n * nw);
    for k in 0..n {
        // block row k holds x_{k+1}
        let fk = &spec.a[k] * &prev_f;
        let mut gk = &spec.a[k] * &prev_g;
        gk.view_mut((0, k * nu), (nx, nu)).copy_from(&spec.b[k]);
        let mut hk = &spec.a[k] * &prev_h;
        hk.view_mut((0, k * nw), (nx, nw)).copy_from(&spec.c[k]);
        f.view_mut((k * nx, 0), (nx, nx)).copy_from(&fk);
        g.view_mut((k * nx, 0), (nx, n * nu)).copy_from(&gk);
        h.view_mut((k * nx, 0), (nx, n * nw)).copy_from(&hk);
        prev_f = fk;
        prev_g = gk;
        prev_h = hk;
    }
    Ok(PredictionMatrices { f, g, h })
}

/// Coefficients of the compact cost at a given `x₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactCost {
    pub x0: DVector<f64>,
    pub a: DVector<f64>,
    pub abar: DMatrix<f64>,
    pub b: DVector<f64>,
    pub bbar: DMatrix<f64>,
    pub c: DVector<f64>,
    pub cbar: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl CompactCost {
    /// `2aᵀx₀ + x₀ᵀĀx₀`.
    pub fn constant(&self) -> f64 {
        2.0 * self.a.dot(&self.x0) + (self.x0.transpose() * &self.abar * &self.x0)[0]
    }

    pub fn cost(&self, u: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let quad = |m: &DMatrix<f64>, v: &DVector<f64>| (v.transpose() * m * v)[0];
        quad(&self.cbar, w)
            + 2.0 * (&self.c + self.d.tr_mul(u)).dot(w)
            + quad(&self.bbar, u)
            + 2.0 * self.b.dot(u)
            + self.constant()
    }
}

pub fn build_compact_cost(spec: &LqcSpec, x0: &DVector<f64>) -> Result<CompactCost> {
    Ok(LqcModel::new(spec.clone())?.compact_cost(x0))
}

/// Everything about an [`LqcSpec`] that does not depend on `x₀`.
#[derive(Debug)]
pub struct LqcModel {
    spec: LqcSpec,
    pred: PredictionMatrices,
    qbar: DMatrix<f64>,
    qbar_lin: DVector<f64>,
    rbar_lin: DVector<f64>,
    a_lin: DVector<f64>,
    abar: DMatrix<f64>,
    bbar: DMatrix<f64>,
    cbar: DMatrix<f64>,
    d: DMatrix<f64>,
    /// `Lᵀ` with `B̄ = L Lᵀ`.
    bbar_factor: DMatrix<f64>,
    /// `L⁻¹`.
    bbar_inv_factor: DMatrix<f64>,
    robust_diag: OnceLock<Result<SimulDiag>>,
    regret_diag: OnceLock<Result<SimulDiag>>,
}

impl LqcModel {
    pub fn new(spec: LqcSpec) -> Result<LqcModel> {
        let pred = build_prediction_matrices(&spec)?;
        let qbar = linalg::block_diag(&spec.q);
        let rbar = linalg::block_diag(&spec.r);
        let qbar_lin = stack(&spec.q_lin);
        let rbar_lin = stack(&spec.r_lin);
        let qh = &qbar * &pred.h;
        let cbar = linalg::symmetrize(&(pred.h.tr_mul(&qh)));
        let d = pred.g.tr_mul(&qh);
        let bbar = linalg::symmetrize(&(pred.g.tr_mul(&(&qbar * &pred.g)) + rbar));
        let abar = linalg::symmetrize(&(pred.f.tr_mul(&(&qbar * &pred.f))));
        let a_lin = pred.f.tr_mul(&qbar_lin);
        let l = linalg::cholesky(&bbar, 1e-12, "input Hessian B̄")?;
        let bbar_inv_factor = linalg::lower_inverse(&l);
        Ok(LqcModel {
            spec,
            pred,
            qbar,
            qbar_lin,
            rbar_lin,
            a_lin,
            abar,
            bbar,
            cbar,
            d,
            bbar_factor: l.transpose(),
            bbar_inv_factor,
            robust_diag: OnceLock::new(),
            regret_diag: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &LqcSpec {
        &self.spec
    }

    pub fn prediction(&self) -> &PredictionMatrices {
        &self.pred
    }

    pub fn compact_cost(&self, x0: &DVector<f64>) -> CompactCost {
        let drift = &self.qbar * (&self.pred.f * x0) + &self.qbar_lin;
        CompactCost {
            x0: x0.clone(),
            a: self.a_lin.clone(),
            abar: self.abar.clone(),
            b: self.pred.g.tr_mul(&drift) + &self.rbar_lin,
            bbar: self.bbar.clone(),
            c: self.pred.h.tr_mul(&drift),
            cbar: self.cbar.clone(),
            d: self.d.clone(),
        }
    }

    /// `S` with `SᵀS = I` and `SᵀC̄S = diag(τ)`.
    pub fn robust_diag(&self) -> Result<&SimulDiag> {
        self.robust_diag
            .get_or_init(|| {
                let n = self.cbar.nrows();
                simultaneous_diagonalize(&DMatrix::identity(n, n), &self.cbar)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `S` with `SᵀS = I` and `SᵀDᵀB̄⁻¹DS = diag(τ)`.
    pub fn regret_diag(&self) -> Result<&SimulDiag> {
        self.regret_diag
            .get_or_init(|| {
                let n = self.cbar.nrows();
                simultaneous_diagonalize(&DMatrix::identity(n, n), &self.regret_quadratic())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `DᵀB̄⁻¹D`.
    pub fn regret_quadratic(&self) -> DMatrix<f64> {
        let ld = &self.bbar_inv_factor * &self.d;
        linalg::symmetrize(&ld.tr_mul(&ld))
    }

    /// `B̄⁻¹ v`.
    pub fn bbar_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.bbar_inv_factor.tr_mul(&(&self.bbar_inv_factor * v))
    }
}

fn stack(vs: &[DVector<f64>]) -> DVector<f64> {
    let n: usize = vs.iter().map(|v| v.len()).sum();
    DVector::from_iterator(n, vs.iter().flat_map(|v| v.iter().cloned()))
}
