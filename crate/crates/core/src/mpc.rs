//! MPC with an ellipsoidal terminal set `{x : (x − c)ᵀP(x − c) ≤ r²}` whose
//! center `c` and radius `r` are decided online.
//!
//! Positive invariance under `x ↦ A_cl x` is certified with the simplified
//! S-lemma after scaling by `r`; containment in the state and input
//! polyhedra reduces to support-function inequalities that are linear in
//! `(c, r)`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::conic::{
    hyperbolic_to_soc, quadratic_epigraph, solve, BlockId, ConicProgram, LinExpr, ProgramBuilder,
    Solution, SolveStatus, SolverConfig, Var,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::slemma::simultaneous_diagonalize;

/// Linear time-invariant MPC problem with a reconfigurable terminal set.
#[derive(Clone, Debug, PartialEq)]
pub struct MpcSpec {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// State set `E x ≤ f`.
    pub e: DMatrix<f64>,
    pub f: DVector<f64>,
    /// Input set `G u ≤ h`.
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    /// Terminal controller `u = K x`.
    pub k: DMatrix<f64>,
    /// Terminal ellipsoid shape.
    pub p: DMatrix<f64>,
    pub horizon: usize,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub q_f: DMatrix<f64>,
}

impl MpcSpec {
    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b.ncols()
    }

    /// `A + BK`.
    pub fn a_cl(&self) -> DMatrix<f64> {
        &self.a + &self.b * &self.k
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, nu) = (self.nx(), self.nu());
        let shapes = [
            ("A", &self.a, nx, nx),
            ("B", &self.b, nx, nu),
            ("E", &self.e, self.f.len(), nx),
            ("G", &self.g, self.h.len(), nu),
            ("K", &self.k, nu, nx),
            ("P", &self.p, nx, nx),
            ("Q", &self.q, nx, nx),
            ("R", &self.r, nu, nu),
            ("Q_f", &self.q_f, nx, nx),
        ];
        for (what, m, rows, cols) in shapes {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::DimensionMismatch {
                    context: format!("{what} shape ({rows}x{cols})"),
                    expected: rows * cols,
                    got: m.nrows() * m.ncols(),
                });
            }
        }
        if self.horizon == 0 {
            return Err(Error::InvalidSpec("horizon must be at least 1".into()));
        }
        linalg::pd_sqrt_pair(&linalg::symmetrize(&self.p), "terminal shape P")?;
        let rho = linalg::spectral_radius(&self.a_cl());
        if !(rho < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "terminal closed loop A + BK is not stable (spectral radius {rho})"
            )));
        }
        if let Some(j) = self.f.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InvalidSpec(format!(
                "state bound f[{j}] must be positive"
            )));
        }
        if let Some(j) = self.h.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InvalidSpec(format!(
                "input bound h[{j}] must be positive"
            )));
        }
        for (what, m) in [("Q", &self.q), ("Q_f", &self.q_f)] {
            if linalg::min_eigenvalue(m) < -1e-9 * (1.0 + m.norm()) {
                return Err(Error::InvalidSpec(format!(
                    "{what} is not positive semidefinite"
                )));
            }
        }
        linalg::cholesky(&self.r, 0.0, "input weight R")?;
        Ok(())
    }
}

/// Infinite-horizon LQR gain `K` (for `u = Kx`) and the Riccati solution
/// `P`, by fixed-point iteration of the Riccati difference equation.
pub fn lqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut p = q.clone();
    for _ in 0..100_000 {
        let btp = b.transpose() * &p;
        let s = r + &btp * b;
        let k = -s
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { what: "R + BᵀPB" })?
            .solve(&(&btp * a));
        let next = linalg::symmetrize(
            &(q + a.transpose() * &p * a + a.transpose() * &btp.transpose() * &k),
        );
        let diff = (&next - &p).norm();
        p = next;
        if diff <= 1e-13 * (1.0 + p.norm()) {
            let btp = b.transpose() * &p;
            let k = -(r + &btp * b).cholesky().unwrap().solve(&(&btp * a));
            return Ok((k, p));
        }
    }
    Err(Error::InvalidSpec(
        "Riccati iteration did not converge".into(),
    ))
}

/// Congruence data for the invariance certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct TerminalDiag {
    pub s: DMatrix<f64>,
    /// Diagonal of `SᵀPS`.
    pub pi: DVector<f64>,
    /// Diagonal of `SᵀA_clᵀPA_clS`.
    pub alpha: DVector<f64>,
    /// Symmetric square root of `M = (A_cl − I)ᵀP(A_cl − I)`.
    pub msqrt: DMatrix<f64>,
    /// `SᵀA_clᵀP(A_cl − I)`, the map `c ↦ ε`.
    pub coupling: DMatrix<f64>,
    /// Symmetric `P^{1/2}` and `P^{-1/2}`.
    pub p_sqrt: DMatrix<f64>,
    pub p_inv_sqrt: DMatrix<f64>,
}

pub fn diagonalize_terminal_pair(spec: &MpcSpec) -> Result<TerminalDiag> {
    let n = spec.nx();
    let p = linalg::symmetrize(&spec.p);
    let (p_sqrt, p_inv_sqrt) = linalg::pd_sqrt_pair(&p, "terminal shape P")?;
    let acl = spec.a_cl();
    let pacl = linalg::symmetrize(&(acl.transpose() * &p * &acl));
    let sd = simultaneous_diagonalize(&p, &pacl)?;
    let shifted = &acl - DMatrix::identity(n, n);
    let m = linalg::symmetrize(&(shifted.transpose() * &p * &shifted));
    let msqrt = linalg::psd_sqrt(&m, 1e-10, "invariance matrix M")?;
    let coupling = sd.s.transpose() * acl.transpose() * &p * &shifted;
    Ok(TerminalDiag {
        s: sd.s,
        pi: sd.alpha,
        alpha: sd.delta,
        msqrt,
        coupling,
        p_sqrt,
        p_inv_sqrt,
    })
}

/// Variables and blocks of the scaled invariance certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceBlock {
    /// `λ̂ = rλ`.
    pub lambda_hat: Var,
    /// `t̂ = rt`.
    pub t_hat: Vec<Var>,
    pub lambda_nonneg: BlockId,
    /// `‖(2M^{1/2}c, 1ᵀt̂ + λ̂)‖ ≤ 2r − 1ᵀt̂ − λ̂`.
    pub budget: BlockId,
    pub cones: Vec<BlockId>,
}

fn row_expr(row: &[f64], vars: &[Var]) -> LinExpr {
    LinExpr::dot(row, vars)
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

/// Emits the certificate that `A_cl` maps the ellipsoid `(c, r)` into
/// itself.
pub fn emit_invariance_constraints(
    td: &TerminalDiag,
    c: &[Var],
    r: Var,
    program: &mut ProgramBuilder,
) -> Result<InvarianceBlock> {
    let n = td.pi.len();
    if c.len() != n {
        return Err(Error::DimensionMismatch {
            context: "terminal center".into(),
            expected: n,
            got: c.len(),
        });
    }
    let lambda_hat = program.add_var();
    let t_hat = program.add_vars(n);
    let lambda_nonneg = program.add_nonneg(lambda_hat);
    let spent = LinExpr::sum(&t_hat) + lambda_hat;
    let mut tail: Vec<LinExpr> = rows_of(&td.msqrt)
        .iter()
        .map(|row| row_expr(row, c) * 2.0)
        .collect();
    tail.push(spent.clone());
    let budget = program.add_soc(r * 2.0 - spent, tail);
    let cones = rows_of(&td.coupling)
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let z = lambda_hat * td.pi[i] - r * td.alpha[i];
            hyperbolic_to_soc(program, row_expr(row, c), t_hat[i], z)
        })
        .collect();
    Ok(InvarianceBlock {
        lambda_hat,
        t_hat,
        lambda_nonneg,
        budget,
        cones,
    })
}

/// `e_jᵀc + ‖ê_j‖ r ≤ f_j` with `ê_j` the rows of `E P^{-1/2}`.
pub fn emit_state_containment(
    spec: &MpcSpec,
    td: &TerminalDiag,
    c: &[Var],
    r: Var,
    program: &mut ProgramBuilder,
) -> Vec<BlockId> {
    emit_support_rows(&spec.e, &spec.f, td, c, r, program)
}

/// `g_jᵀc + ‖ĝ_j‖ r ≤ h_j` with `g_j`, `ĝ_j` the rows of `GK`, `GKP^{-1/2}`.
pub fn emit_input_containment(
    spec: &MpcSpec,
    td: &TerminalDiag,
    c: &[Var],
    r: Var,
    program: &mut ProgramBuilder,
) -> Vec<BlockId> {
    emit_support_rows(&(&spec.g * &spec.k), &spec.h, td, c, r, program)
}

fn emit_support_rows(
    rows: &DMatrix<f64>,
    bound: &DVector<f64>,
    td: &TerminalDiag,
    c: &[Var],
    r: Var,
    program: &mut ProgramBuilder,
) -> Vec<BlockId> {
    let hat = rows * &td.p_inv_sqrt;
    rows_of(rows)
        .iter()
        .enumerate()
        .map(|(j, row)| program.add_le(row_expr(row, c) + r * hat.row(j).norm(), bound[j]))
        .collect()
}

/// How the terminal set enters the program.
#[derive(Clone, Debug, PartialEq)]
pub enum TerminalSet {
    /// `c` and `r` are decision variables.
    Reconfigurable,
    /// An offline set; only the terminal membership constraint is emitted.
    Fixed { center: DVector<f64>, radius: f64 },
}

/// A built MPC program with the handles needed to read the solution.
#[derive(Clone, Debug)]
pub struct MpcProgram {
    pub program: ConicProgram,
    pub x_init: DVector<f64>,
    /// `u_0..u_{N−1}`.
    pub u: Vec<Vec<Var>>,
    /// `x_1..x_N`; `x_0` is the constant `x_init`.
    pub x: Vec<Vec<Var>>,
    /// Center and radius variables (absent for a fixed set).
    pub center: Option<(Vec<Var>, Var)>,
    pub invariance: Option<InvarianceBlock>,
    pub terminal: TerminalSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpcSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub iterations: usize,
    pub inputs: Vec<DVector<f64>>,
    /// `x_0..x_N`.
    pub states: Vec<DVector<f64>>,
    pub center: DVector<f64>,
    pub radius: f64,
    pub lambda_hat: f64,
    pub t_hat: DVector<f64>,
    /// Set when the terminal set collapsed to its center.
    pub degenerate_radius: bool,
}

/// An [`MpcSpec`] with its terminal congruence computed once.
#[derive(Debug)]
pub struct MpcModel {
    spec: MpcSpec,
    diag: OnceLock<Result<TerminalDiag>>,
}

impl MpcModel {
    pub fn new(spec: MpcSpec) -> Result<MpcModel> {
        spec.validate()?;
        Ok(MpcModel {
            spec,
            diag: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &MpcSpec {
        &self.spec
    }

    pub fn terminal_diag(&self) -> Result<&TerminalDiag> {
        self.diag
            .get_or_init(|| diagonalize_terminal_pair(&self.spec))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Largest `r` for which the ellipsoid centered at 0 lies in both
    /// polyhedra; an offline terminal set when `P − A_clᵀPA_cl ⪰ 0`.
    pub fn centered_radius(&self) -> Result<f64> {
        let td = self.terminal_diag()?;
        let s = &self.spec;
        let mut r = f64::INFINITY;
        for (rows, bound) in [(s.e.clone(), &s.f), (&s.g * &s.k, &s.h)] {
            let hat = &rows * &td.p_inv_sqrt;
            for j in 0..rows.nrows() {
                let norm = hat.row(j).norm();
                if norm > 0.0 {
                    r = r.min(bound[j] / norm);
                }
            }
        }
        Ok(r)
    }

    pub fn build(&self, x_init: &DVector<f64>, terminal: &TerminalSet) -> Result<MpcProgram> {
        let s = &self.spec;
        let (nx, nu, n) = (s.nx(), s.nu(), s.horizon);
        if x_init.len() != nx {
            return Err(Error::DimensionMismatch {
                context: "initial state".into(),
                expected: nx,
                got: x_init.len(),
            });
        }
        let td = self.terminal_diag()?;
        let mut pb = ProgramBuilder::new();
        let u: Vec<Vec<Var>> = (0..n).map(|_| pb.add_vars(nu)).collect();
        let x: Vec<Vec<Var>> = (0..n).map(|_| pb.add_vars(nx)).collect();

        let a_rows = rows_of(&s.a);
        let b_rows = rows_of(&s.b);
        for k in 0..n {
            for i in 0..nx {
                let mut rhs = row_expr(&b_rows[i], &u[k]);
                if k == 0 {
                    rhs += LinExpr::constant(s.a.row(i).dot(&x_init.transpose()));
                } else {
                    rhs += row_expr(&a_rows[i], &x[k - 1]);
                }
                pb.add_eq(x[k][i], rhs);
            }
        }
        let e_rows = rows_of(&s.e);
        for xk in x.iter().take(n - 1) {
            for (j, row) in e_rows.iter().enumerate() {
                pb.add_le(row_expr(row, xk), s.f[j]);
            }
        }
        let g_rows = rows_of(&s.g);
        for uk in &u {
            for (j, row) in g_rows.iter().enumerate() {
                pb.add_le(row_expr(row, uk), s.h[j]);
            }
        }

        // ‖P^{1/2}(x_N − c)‖ ≤ r
        let ps_rows = rows_of(&td.p_sqrt);
        let xn = &x[n - 1];
        let (center, invariance) = match terminal {
            TerminalSet::Reconfigurable => {
                let c = pb.add_vars(nx);
                let r = pb.add_var();
                pb.add_nonneg(r);
                let tail = ps_rows
                    .iter()
                    .map(|row| row_expr(row, xn) - row_expr(row, &c))
                    .collect();
                pb.add_soc(r, tail);
                let inv = emit_invariance_constraints(td, &c, r, &mut pb)?;
                emit_state_containment(s, td, &c, r, &mut pb);
                emit_input_containment(s, td, &c, r, &mut pb);
                (Some((c, r)), Some(inv))
            }
            TerminalSet::Fixed { center, radius } => {
                if center.len() != nx {
                    return Err(Error::DimensionMismatch {
                        context: "fixed terminal center".into(),
                        expected: nx,
                        got: center.len(),
                    });
                }
                let pc = &td.p_sqrt * center;
                let tail = ps_rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| row_expr(row, xn) - pc[i])
                    .collect();
                pb.add_soc(*radius, tail);
                (None, None)
            }
        };

        // Σ x_kᵀQx_k + u_kᵀRu_k + x_NᵀQ_f x_N through one epigraph
        let fq = linalg::psd_factor_rows(&s.q, "stage weight Q")?;
        let fr = linalg::psd_factor_rows(&s.r, "input weight R")?;
        let ff = linalg::psd_factor_rows(&s.q_f, "terminal weight Q_f")?;
        let mut rows = Vec::new();
        for k in 0..n {
            if k > 0 {
                rows.extend(rows_of(&fq).iter().map(|row| row_expr(row, &x[k - 1])));
            }
            rows.extend(rows_of(&fr).iter().map(|row| row_expr(row, &u[k])));
        }
        rows.extend(rows_of(&ff).iter().map(|row| row_expr(row, xn)));
        if !rows.is_empty() {
            let t = pb.add_var();
            quadratic_epigraph(&mut pb, rows, 1.0, t);
            pb.add_objective(t);
        }
        pb.add_objective((x_init.transpose() * &s.q * x_init)[0]);

        Ok(MpcProgram {
            program: pb.build()?,
            x_init: x_init.clone(),
            u,
            x,
            center,
            invariance,
            terminal: terminal.clone(),
        })
    }
}

impl MpcProgram {
    pub fn extract(&self, sol: &Solution) -> MpcSolution {
        let val = |v: &Var| sol.x.get(v.0).copied().unwrap_or(f64::NAN);
        let vec = |vs: &[Var]| DVector::from_iterator(vs.len(), vs.iter().map(val));
        let mut states = vec![self.x_init.clone()];
        states.extend(self.x.iter().map(|xk| vec(xk)));
        let (center, radius) = match (&self.center, &self.terminal) {
            (Some((c, r)), _) => (vec(c), val(r)),
            (None, TerminalSet::Fixed { center, radius }) => (center.clone(), *radius),
            (None, TerminalSet::Reconfigurable) => unreachable!(),
        };
        let (lambda_hat, t_hat) = match &self.invariance {
            Some(inv) => (val(&inv.lambda_hat), vec(&inv.t_hat)),
            None => (0.0, DVector::zeros(0)),
        };
        MpcSolution {
            status: sol.status,
            objective: sol.objective,
            iterations: sol.iterations,
            inputs: self.u.iter().map(|uk| vec(uk)).collect(),
            states,
            degenerate_radius: radius <= 1e-9,
            center,
            radius,
            lambda_hat,
            t_hat,
        }
    }

    pub fn solve(&self, config: &SolverConfig) -> Result<MpcSolution> {
        let sol = solve(&self.program, config);
        if !sol.is_optimal() {
            return Err(Error::Solver {
                status: sol.status,
                step: None,
            });
        }
        Ok(self.extract(&sol))
    }
}

pub fn build_mpc_socp(spec: &MpcSpec, x_init: &DVector<f64>) -> Result<MpcProgram> {
    MpcModel::new(spec.clone())?.build(x_init, &TerminalSet::Reconfigurable)
}
