use nalgebra::{DMatrix, DVector};

use super::{AmbiguitySpec, CompactCost, LqcModel, LqcSpec};
use crate::conic::{
    solve, ConicProgram, LinExpr, ProgramBuilder, QuadraticObjective, Solution, SolveStatus,
    SolverConfig, Var,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::slemma::{
    assemble_classical_lmi, check_psd, emit_simplified_slemma, QuadForm, SLemmaBlock,
};

/// Which min-max problem to solve.
#[derive(Clone, Debug, PartialEq)]
pub enum Controller {
    Robust,
    Regret,
    Dr(AmbiguitySpec),
    DrRegret(AmbiguitySpec),
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::Robust => "robust",
            Controller::Regret => "regret",
            Controller::Dr(_) => "dr",
            Controller::DrRegret(_) => "dr-regret",
        }
    }

    fn is_regret(&self) -> bool {
        matches!(self, Controller::Regret | Controller::DrRegret(_))
    }

    fn ambiguity(&self) -> Option<&AmbiguitySpec> {
        match self {
            Controller::Dr(a) | Controller::DrRegret(a) => Some(a),
            _ => None,
        }
    }
}

/// A built SOCP along with the handles needed to read a plan back.
///
/// The program minimizes `‖Lᵀu + L⁻¹b‖² + φ (+ μᵀβ)` subject to `u ∈ U`
/// and the S-lemma certificate of
/// `φ ≥ max_{‖w‖≤γ} wᵀKw + 2(κ + Dᵀu − ½Hᵀβ)ᵀw`, where `(K, κ)` is
/// `(C̄, c)` for the robust cost or `(DᵀB̄⁻¹D, DᵀB̄⁻¹b)` for regret. `φ`
/// collects the `1ᵀt + γ²λ` terms. The certificate is emitted for the
/// unit ball in `v = w/γ`; its multiplier variable holds `γ²λ`. Constants are carried in the program's
/// offset, so the solver objective is the true worst-case value.
#[derive(Clone, Debug)]
pub struct LqcProgram {
    pub program: ConicProgram,
    pub controller: Controller,
    pub cost: CompactCost,
    pub u: Vec<Var>,
    pub phi: Var,
    pub beta: Vec<Var>,
    pub quad: QuadraticObjective,
    pub slemma: SLemmaBlock,
    /// Quadratic `K` of the disturbance kernel.
    pub kernel: DMatrix<f64>,
    /// `κ` of the disturbance kernel.
    pub kernel_lin: DVector<f64>,
    pub gamma: f64,
    /// `2aᵀx₀ + x₀ᵀĀx₀` for the robust cost, `bᵀB̄⁻¹b` for regret.
    pub constant: f64,
}

/// Numbers read off a solved [`LqcProgram`].
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPlan {
    pub status: SolveStatus,
    pub u: DVector<f64>,
    /// Worst-case cost (or regret), constants included.
    pub objective: f64,
    pub lambda: f64,
    pub t: DVector<f64>,
    pub phi: f64,
    pub beta: DVector<f64>,
    pub iterations: usize,
}

impl LqcModel {
    pub fn build(&self, x0: &DVector<f64>, controller: &Controller) -> Result<LqcProgram> {
        self.build_inner(x0, controller, None)
    }

    /// Same program with `u` pinned to `fixed` and the input set dropped, so
    /// that its optimal value is the certified worst case of that sequence.
    pub fn build_fixed(
        &self,
        x0: &DVector<f64>,
        controller: &Controller,
        fixed: &DVector<f64>,
    ) -> Result<LqcProgram> {
        if fixed.len() != self.spec().num_inputs() {
            return Err(Error::DimensionMismatch {
                context: "fixed input sequence".into(),
                expected: self.spec().num_inputs(),
                got: fixed.len(),
            });
        }
        self.build_inner(x0, controller, Some(fixed))
    }

    fn build_inner(
        &self,
        x0: &DVector<f64>,
        controller: &Controller,
        fixed: Option<&DVector<f64>>,
    ) -> Result<LqcProgram> {
        let spec = self.spec();
        if x0.len() != spec.nx() {
            return Err(Error::DimensionMismatch {
                context: "initial state".into(),
                expected: spec.nx(),
                got: x0.len(),
            });
        }
        let nw = spec.num_disturbances();
        let amb = controller.ambiguity();
        if let Some(a) = amb {
            if a.h.ncols() != nw {
                return Err(Error::DimensionMismatch {
                    context: "moment matrix columns".into(),
                    expected: nw,
                    got: a.h.ncols(),
                });
            }
            if a.h.nrows() != a.mu.len() {
                return Err(Error::DimensionMismatch {
                    context: "moment bound length".into(),
                    expected: a.h.nrows(),
                    got: a.mu.len(),
                });
            }
        }
        let cost = self.compact_cost(x0);
        let bbar_inv_b = self.bbar_solve(&cost.b);
        let bib = cost.b.dot(&bbar_inv_b);
        let (kernel, kernel_lin, sd, constant) = if controller.is_regret() {
            // J − min_v J = ‖Lᵀu + L⁻¹b‖² + wᵀDᵀB̄⁻¹Dw + 2(Dᵀ(B̄⁻¹b + u))ᵀw
            (
                self.regret_quadratic(),
                cost.d.tr_mul(&bbar_inv_b),
                self.regret_diag()?,
                bib,
            )
        } else {
            (
                cost.cbar.clone(),
                cost.c.clone(),
                self.robust_diag()?,
                cost.constant(),
            )
        };

        let mut pb = ProgramBuilder::new();
        let u = pb.add_vars(spec.num_inputs());
        let phi = pb.add_var();
        let beta = pb.add_vars(amb.map_or(0, |a| a.num_moments()));

        let shift = &self.bbar_inv_factor * &cost.b;
        let quad = QuadraticObjective::add(&mut pb, &self.bbar_factor, &u, &shift);
        pb.add_objective(LinExpr::from(phi) + (constant - bib));
        if let Some(a) = amb {
            for (j, &bj) in beta.iter().enumerate() {
                pb.add_objective(bj * a.mu[j]);
                pb.add_nonneg(bj);
            }
        }
        if let Some(fx) = fixed {
            // membership in U is checked separately
            for (k, &uk) in u.iter().enumerate() {
                pb.add_eq(uk, fx[k]);
            }
        } else {
            let set = &spec.input_set;
            for j in 0..set.g.nrows() {
                let coeffs: Vec<f64> = set.g.row(j).iter().cloned().collect();
                pb.add_le(LinExpr::dot(&coeffs, &u), set.h[j]);
            }
        }

        // Outer form φ − wᵀKw + 2eᵀw ≥ 0 over ‖w‖ ≤ γ, written in w = γv
        // over the unit ball so that the emitted multiplier is γ²λ.
        let g = spec.gamma;
        let e: Vec<LinExpr> = (0..nw)
            .map(|i| {
                let mut ei = LinExpr::constant(-g * kernel_lin[i]);
                for (k, &uk) in u.iter().enumerate() {
                    let dki = cost.d[(k, i)];
                    if dki != 0.0 {
                        ei.add_term(uk, -g * dki);
                    }
                }
                if let Some(a) = amb {
                    for (j, &bj) in beta.iter().enumerate() {
                        let hji = a.h[(j, i)];
                        if hji != 0.0 {
                            ei.add_term(bj, 0.5 * g * hji);
                        }
                    }
                }
                ei
            })
            .collect();
        let inner = QuadForm::ball(nw, 1.0);
        let outer = -(&kernel * (g * g));
        let slemma = emit_simplified_slemma(&mut pb, &inner, &outer, &e, &phi.into(), sd)?;

        Ok(LqcProgram {
            program: pb.build()?,
            controller: controller.clone(),
            cost,
            u,
            phi,
            beta,
            quad,
            slemma,
            kernel,
            kernel_lin,
            gamma: spec.gamma,
            constant,
        })
    }

    /// Numeric data for the LMI certificate of the robust problem.
    pub fn robust_sdp_data(&self, x0: &DVector<f64>) -> SdpData {
        let cost = self.compact_cost(x0);
        let bbar_inv_b = self.bbar_solve(&cost.b);
        SdpData {
            h: &cost.c - cost.d.tr_mul(&bbar_inv_b),
            f: &self.bbar_inv_factor * &cost.d,
            cbar: cost.cbar.clone(),
            sqrt_b: self.bbar_factor.clone(),
            inv_sqrt_b: self.bbar_inv_factor.clone(),
            bbar_inv_b,
            gamma: self.spec().gamma,
        }
    }
}

impl LqcProgram {
    /// Cone-Q blocks of the certificate, one per disturbance coordinate.
    /// The program holds one more second-order block for the input cost.
    pub fn num_soc_blocks(&self) -> usize {
        self.slemma.cones.len()
    }

    /// `N_u + N_w + 1`.
    pub fn lmi_dim(&self) -> usize {
        self.u.len() + self.kernel.nrows() + 1
    }

    pub fn extract(&self, sol: &Solution) -> ControlPlan {
        let val = |v: &Var| sol.x.get(v.0).copied().unwrap_or(f64::NAN);
        ControlPlan {
            status: sol.status,
            u: DVector::from_iterator(self.u.len(), self.u.iter().map(val)),
            objective: sol.objective,
            lambda: val(&self.slemma.lambda) / (self.gamma * self.gamma),
            t: DVector::from_iterator(self.slemma.t.len(), self.slemma.t.iter().map(val)),
            phi: val(&self.phi),
            beta: DVector::from_iterator(self.beta.len(), self.beta.iter().map(val)),
            iterations: sol.iterations,
        }
    }

    /// Solves and returns the plan, or a solver error when not optimal.
    pub fn solve(&self, config: &SolverConfig) -> Result<ControlPlan> {
        let sol = solve(&self.program, config);
        if !sol.is_optimal() {
            return Err(Error::Solver {
                status: sol.status,
                step: None,
            });
        }
        Ok(self.extract(&sol))
    }

    /// `e = −(κ + Dᵀu − ½Hᵀβ)`, the linear part of the outer form
    /// `φ − wᵀKw + 2eᵀw ≥ 0`.
    pub fn outer_linear(&self, u: &DVector<f64>, beta: &DVector<f64>) -> DVector<f64> {
        let mut e = -(&self.kernel_lin + self.cost.d.tr_mul(u));
        if let Some(a) = self.controller.ambiguity() {
            e += a.h.tr_mul(beta) * 0.5;
        }
        e
    }

    /// The classical multiplier LMI at a numeric plan.
    pub fn classical_lmi(&self, plan: &ControlPlan) -> DMatrix<f64> {
        let inner = QuadForm::ball(self.kernel.nrows(), self.gamma);
        let e = self.outer_linear(&plan.u, &plan.beta);
        assemble_classical_lmi(&inner, &(-&self.kernel), &e, plan.phi, plan.lambda)
    }

    /// `uᵀB̄u + 2bᵀu` plus the constant of the chosen cost: the part of the
    /// objective that does not depend on `w`.
    pub fn input_cost(&self, u: &DVector<f64>) -> f64 {
        let c = &self.cost;
        (u.transpose() * &c.bbar * u)[0] + 2.0 * c.b.dot(u) + self.constant
    }
}

/// Pieces of the robust LMI
///
/// ```text
/// [ I    y           F        ]
/// [ yᵀ   z − γ²λ     −hᵀ      ]  ⪰ 0
/// [ Fᵀ   −h          λI − C̄ + FᵀF ]
/// ```
///
/// with `h = c − DᵀB̄⁻¹b`, `F = B̄^{−1/2}D`, `y = B̄^{1/2}u + B̄^{−1/2}b`.
/// Here `B̄^{1/2} = Lᵀ` and `B̄^{−1/2} = L⁻¹` for the Cholesky factor `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpData {
    pub h: DVector<f64>,
    pub f: DMatrix<f64>,
    pub cbar: DMatrix<f64>,
    pub sqrt_b: DMatrix<f64>,
    pub inv_sqrt_b: DMatrix<f64>,
    pub bbar_inv_b: DVector<f64>,
    pub gamma: f64,
}

impl SdpData {
    /// `y = B̄^{1/2}u + B̄^{−1/2}b`.
    pub fn y_of_u(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.sqrt_b * u + &self.sqrt_b * &self.bbar_inv_b
    }

    /// `u = B̄^{−1/2}y − B̄⁻¹b`.
    pub fn u_of_y(&self, y: &DVector<f64>) -> DVector<f64> {
        self.inv_sqrt_b.tr_mul(y) - &self.bbar_inv_b
    }

    /// SDP objective `z` implied by a solved robust plan, `‖y‖² + φ`.
    pub fn certificate_z(&self, plan: &ControlPlan) -> f64 {
        self.y_of_u(&plan.u).norm_squared() + plan.phi
    }

    pub fn assemble(&self, y: &DVector<f64>, lambda: f64, z: f64) -> DMatrix<f64> {
        let nu = y.len();
        let nw = self.h.len();
        let n = nu + 1 + nw;
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (nu, nu)).fill_with_identity();
        m.view_mut((0, nu), (nu, 1)).copy_from(y);
        m.view_mut((nu, 0), (1, nu)).copy_from(&y.transpose());
        m.view_mut((0, nu + 1), (nu, nw)).copy_from(&self.f);
        m.view_mut((nu + 1, 0), (nw, nu))
            .copy_from(&self.f.transpose());
        m[(nu, nu)] = z - self.gamma * self.gamma * lambda;
        for i in 0..nw {
            m[(nu, nu + 1 + i)] = -self.h[i];
            m[(nu + 1 + i, nu)] = -self.h[i];
        }
        let corner = DMatrix::identity(nw, nw) * lambda - &self.cbar + self.f.tr_mul(&self.f);
        m.view_mut((nu + 1, nu + 1), (nw, nw)).copy_from(&corner);
        linalg::symmetrize(&m)
    }

    /// Assembles the LMI at the plan's `(y, λ, z)` and checks it.
    pub fn check_plan(&self, plan: &ControlPlan, tol: f64) -> bool {
        let m = self.assemble(&self.y_of_u(&plan.u), plan.lambda, self.certificate_z(plan));
        check_psd(&m, tol)
    }
}

pub fn build_robust_socp(spec: &LqcSpec, x0: &DVector<f64>) -> Result<LqcProgram> {
    LqcModel::new(spec.clone())?.build(x0, &Controller::Robust)
}

pub fn build_regret_socp(spec: &LqcSpec, x0: &DVector<f64>) -> Result<LqcProgram> {
    LqcModel::new(spec.clone())?.build(x0, &Controller::Regret)
}

pub fn build_dr_socp(spec: &LqcSpec, x0: &DVector<f64>, amb: &AmbiguitySpec) -> Result<LqcProgram> {
    LqcModel::new(spec.clone())?.build(x0, &Controller::Dr(amb.clone()))
}

pub fn build_dr_regret_socp(
    spec: &LqcSpec,
    x0: &DVector<f64>,
    amb: &AmbiguitySpec,
) -> Result<LqcProgram> {
    LqcModel::new(spec.clone())?.build(x0, &Controller::DrRegret(amb.clone()))
}

pub fn build_robust_sdp_data(spec: &LqcSpec, x0: &DVector<f64>) -> Result<SdpData> {
    Ok(LqcModel::new(spec.clone())?.robust_sdp_data(x0))
}
