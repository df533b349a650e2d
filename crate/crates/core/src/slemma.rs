//! Robust quadratic constraints
//!
//! ```text
//! zᵀDz + 2eᵀz + f ≥ 0   for all z with   zᵀAz + 2bᵀz + c ≥ 0
//! ```
//!
//! reduced to one linear constraint plus `n` three-dimensional cone blocks,
//! given a congruence `S` diagonalizing `A` and `D` simultaneously. The
//! classical multiplier LMI is assembled here too, but only as a numerical
//! check on solved certificates.

use nalgebra::{DMatrix, DVector};

use crate::conic::{hyperbolic_to_soc, BlockId, LinExpr, ProgramBuilder, Var};
use crate::error::{Error, Result};
use crate::linalg;

/// Relative PSD tolerance used for certificate checks.
pub const DEFAULT_PSD_TOL: f64 = 1e-7;

/// Condition number of `S` above which diagonalization is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// `z ↦ zᵀAz + 2bᵀz + c`, with `A` symmetrized on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadForm {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl QuadForm {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<QuadForm> {
        if a.nrows() != a.ncols() || b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                context: "quadratic form".into(),
                expected: a.nrows(),
                got: b.len(),
            });
        }
        Ok(QuadForm {
            a: linalg::symmetrize(&a),
            b,
            c,
        })
    }

    /// The Euclidean ball `γ² − zᵀz ≥ 0`.
    pub fn ball(n: usize, gamma: f64) -> QuadForm {
        QuadForm {
            a: -DMatrix::identity(n, n),
            b: DVector::zeros(n),
            c: gamma * gamma,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, z: &DVector<f64>) -> f64 {
        (z.transpose() * &self.a * z)[0] + 2.0 * self.b.dot(z) + self.c
    }
}

/// A nonsingular `S` with `SᵀAS = diag(alpha)` and `SᵀDS = diag(delta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulDiag {
    pub s: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub delta: DVector<f64>,
}

impl SimulDiag {
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Diagonal of `SᵀMS` and the Frobenius norm of its off-diagonal part.
    pub fn congruence_diagonal(&self, m: &DMatrix<f64>) -> (DVector<f64>, f64) {
        let t = self.s.transpose() * m * &self.s;
        let diag = t.diagonal();
        let off = (&t - DMatrix::from_diagonal(&diag)).norm();
        (diag, off)
    }

    /// `(‖SᵀAS − diag(α)‖_F, ‖SᵀDS − diag(δ)‖_F)`.
    pub fn residuals(&self, a: &DMatrix<f64>, d: &DMatrix<f64>) -> (f64, f64) {
        let ra = (self.s.transpose() * a * &self.s - DMatrix::from_diagonal(&self.alpha)).norm();
        let rd = (self.s.transpose() * d * &self.s - DMatrix::from_diagonal(&self.delta)).norm();
        (ra, rd)
    }
}

/// Simultaneous diagonalization of a positive definite `a` and a symmetric
/// `d`: with `a = LLᵀ` and `L⁻¹ d L⁻ᵀ = Q diag(δ) Qᵀ`, `S = L⁻ᵀ Q`.
/// Columns are ordered by ascending `δ`; `alpha` is all ones.
pub fn simultaneous_diagonalize(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<SimulDiag> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::DegenerateInput("empty matrix pair".into()));
    }
    if a.ncols() != n || d.nrows() != n || d.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "matrix pair for diagonalization".into(),
            expected: n,
            got: d.nrows(),
        });
    }
    let a = linalg::symmetrize(a);
    let d = linalg::symmetrize(d);
    if !(linalg::min_eigenvalue(&a) > 1e-10 * a.norm()) {
        return Err(Error::NotPositiveDefinite {
            what: "diagonalization pivot matrix",
        });
    }
    let l = linalg::cholesky(&a, 0.0, "diagonalization pivot matrix")?;
    let l_inv = linalg::lower_inverse(&l);
    let congruent = linalg::symmetrize(&(&l_inv * &d * l_inv.transpose()));
    let (delta, q) = linalg::sym_eigen(&congruent);
    let s = l_inv.transpose() * q;
    let cond = linalg::condition_number(&s);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let sd = SimulDiag {
        s,
        alpha: DVector::from_element(n, 1.0),
        delta,
    };
    let (ra, rd) = sd.residuals(&a, &d);
    let worst = (ra / (1.0 + a.norm())).max(rd / (1.0 + d.norm()));
    if worst > 1e-8 {
        return Err(Error::NotDiagonalizing(worst));
    }
    Ok(sd)
}

/// Variables and blocks appended by [`emit_simplified_slemma`].
#[derive(Clone, Debug, PartialEq)]
pub struct SLemmaBlock {
    pub lambda: Var,
    pub t: Vec<Var>,
    /// `f − λc − 1ᵀt ≥ 0`.
    pub budget: BlockId,
    pub lambda_nonneg: BlockId,
    pub cones: Vec<BlockId>,
    pub alpha: DVector<f64>,
    pub delta: DVector<f64>,
    pub beta: DVector<f64>,
}

/// Appends the certificate of
/// `zᵀDz + 2e(x)ᵀz + f(x) ≥ 0 ∀z: inner(z) ≥ 0` to `program`.
///
/// `e` holds `n` affine expressions in the decision variables and `f` one.
/// `sd.s` must diagonalize both `inner.a` and `d`; the diagonals are read
/// off `SᵀAS` and `SᵀDS` directly, so any sign or scaling of the pair that
/// `sd` was computed from works. The caller vouches for a Slater point of
/// `inner`; when `inner.b = 0` the origin is checked.
pub fn emit_simplified_slemma(
    program: &mut ProgramBuilder,
    inner: &QuadForm,
    d: &DMatrix<f64>,
    e: &[LinExpr],
    f: &LinExpr,
    sd: &SimulDiag,
) -> Result<SLemmaBlock> {
    let n = inner.dim();
    for (what, got) in [
        ("congruence matrix", sd.dim()),
        ("outer quadratic matrix", d.nrows()),
        ("outer linear map", e.len()),
    ] {
        if got != n {
            return Err(Error::DimensionMismatch {
                context: what.into(),
                expected: n,
                got,
            });
        }
    }
    if inner.b.iter().all(|&v| v == 0.0) && !(inner.c > 0.0) {
        return Err(Error::DegenerateInput(
            "inner quadratic has no Slater point at the origin".into(),
        ));
    }
    let (alpha, off_a) = sd.congruence_diagonal(&inner.a);
    let (delta, off_d) = sd.congruence_diagonal(&linalg::symmetrize(d));
    let scale = (1.0 + inner.a.norm()).max(1.0 + d.norm()) * (1.0 + sd.s.norm().powi(2));
    let off = off_a.max(off_d);
    if off > 1e-8 * scale {
        return Err(Error::NotDiagonalizing(off / scale));
    }
    let beta = sd.s.tr_mul(&inner.b);

    let lambda = program.add_var();
    let t = program.add_vars(n);
    let budget = program.add_nonneg(f.clone() - lambda * inner.c - LinExpr::sum(&t));
    let lambda_nonneg = program.add_nonneg(lambda);
    let mut cones = Vec::with_capacity(n);
    for i in 0..n {
        // ε_i = [Sᵀe]_i
        let mut eps = LinExpr::default();
        for (k, ek) in e.iter().enumerate() {
            let s_ki = sd.s[(k, i)];
            if s_ki != 0.0 {
                eps += ek.clone() * s_ki;
            }
        }
        let x = eps - lambda * beta[i];
        let z = LinExpr::constant(delta[i]) - lambda * alpha[i];
        cones.push(hyperbolic_to_soc(program, x, t[i], z));
    }
    Ok(SLemmaBlock {
        lambda,
        t,
        budget,
        lambda_nonneg,
        cones,
        alpha,
        delta,
        beta,
    })
}

/// `[[D − λA, e − λb], [(e − λb)ᵀ, f − λc]]`.
pub fn assemble_classical_lmi(
    inner: &QuadForm,
    d: &DMatrix<f64>,
    e: &DVector<f64>,
    f: f64,
    lambda: f64,
) -> DMatrix<f64> {
    let n = inner.dim();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n))
        .copy_from(&(linalg::symmetrize(d) - &inner.a * lambda));
    let col = e - &inner.b * lambda;
    for i in 0..n {
        m[(i, n)] = col[i];
        m[(n, i)] = col[i];
    }
    m[(n, n)] = f - lambda * inner.c;
    m
}

/// `true` iff the smallest eigenvalue of `m` is at least
/// `−tol·(1 + ‖m‖_F)`.
///
/// Decided by a Cholesky factorization of `m + εI` with that `ε`, which
/// agrees with the eigenvalue test except exactly on the threshold.
pub fn check_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    let eps = tol * (1.0 + m.norm());
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut dj = 0.5 * (m[(j, j)] + m[(j, j)]) + eps;
        for k in 0..j {
            dj -= l[j * n + k] * l[j * n + k];
        }
        if !(dj > 0.0) {
            return false;
        }
        let ljj = dj.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut v = 0.5 * (m[(i, j)] + m[(j, i)]);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / ljj;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_sym(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        linalg::symmetrize(&m)
    }

    fn random_pd(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &m * m.transpose() + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn identity_pair_is_already_diagonal() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0]));
        let sd = simultaneous_diagonalize(&DMatrix::identity(2, 2), &d).unwrap();
        assert_eq!(sd.alpha.as_slice(), &[1.0, 1.0]);
        assert_eq!(sd.delta.as_slice(), &[-1.0, 3.0]);
        // S is a signed permutation
        for v in sd.s.iter() {
            assert!(v.abs() < 1e-14 || (v.abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn scalar_pair() {
        let sd = simultaneous_diagonalize(
            &DMatrix::from_element(1, 1, 4.0),
            &DMatrix::from_element(1, 1, 8.0),
        )
        .unwrap();
        assert!((sd.s[(0, 0)].abs() - 0.5).abs() < 1e-15);
        assert_eq!(sd.alpha[0], 1.0);
        assert!((sd.delta[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn random_pairs_match_generalized_eigenvalues() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(1..=8);
            let a = random_pd(&mut rng, n);
            let d = random_sym(&mut rng, n);
            let sd = simultaneous_diagonalize(&a, &d).unwrap();
            let (ra, rd) = sd.residuals(&a, &d);
            assert!(ra <= 1e-8 * (1.0 + a.norm()));
            assert!(rd <= 1e-8 * (1.0 + d.norm()));
            // independent route: eigenvalues of A⁻¹D via the general solver
            let mut gen: Vec<f64> = (a.clone().lu().solve(&d).unwrap())
                .complex_eigenvalues()
                .iter()
                .map(|z| z.re)
                .collect();
            gen.sort_by(f64::total_cmp);
            for (g, dl) in gen.iter().zip(sd.delta.iter()) {
                assert!(
                    (g - dl).abs() <= 1e-8 * (1.0 + g.abs()),
                    "{gen:?} vs {}",
                    sd.delta
                );
            }
        }
    }

    #[test]
    fn rejects_indefinite_and_empty() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(
            simultaneous_diagonalize(&a, &a),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            simultaneous_diagonalize(&DMatrix::zeros(0, 0), &DMatrix::zeros(0, 0)),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn lmi_examples() {
        let inner =
            QuadForm::new(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1), 1.0).unwrap();
        let d = DMatrix::from_element(1, 1, 1.0);
        let e = DVector::zeros(1);
        let m = assemble_classical_lmi(&inner, &d, &e, 1.0, 1.0);
        assert_eq!(m, DMatrix::zeros(2, 2));
        assert!(check_psd(&m, 1e-9));

        let inner = QuadForm::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]),
            DVector::from_vec(vec![0.3, -0.2]),
            0.5,
        )
        .unwrap();
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let e = DVector::from_vec(vec![0.7, 0.1]);
        let m = assemble_classical_lmi(&inner, &d, &e, 2.0, 0.0);
        assert_eq!(m.view((0, 0), (2, 2)), d);
        assert_eq!(m[(0, 2)], 0.7);
        assert_eq!(m[(2, 2)], 2.0);
    }

    #[test]
    fn psd_examples_and_eigen_agreement() {
        assert!(check_psd(&DMatrix::identity(3, 3), 1e-9));
        assert!(!check_psd(
            &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])),
            1e-9
        ));
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..500 {
            let n = rng.gen_range(1..6);
            let mut m = random_sym(&mut rng, n);
            // push the smallest eigenvalue near zero
            let shift = linalg::min_eigenvalue(&m) - rng.gen_range(-0.01..0.01);
            for i in 0..n {
                m[(i, i)] -= shift;
            }
            let tol = 1e-3;
            let by_eig = linalg::min_eigenvalue(&m) >= -tol * (1.0 + m.norm());
            assert_eq!(check_psd(&m, tol), by_eig);
        }
    }

    #[test]
    fn schur_identity_on_diagonal_lmi() {
        // δ_i − λα_i > 0: PSD of the LMI ⇔ f − λc ≥ Σ (ε_i − λβ_i)² / (δ_i − λα_i)
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..300 {
            let n = rng.gen_range(1..5);
            let a = random_pd(&mut rng, n);
            let d = random_pd(&mut rng, n) * 2.0;
            let inner = QuadForm::new(
                -a.clone(),
                DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5)),
                1.0,
            )
            .unwrap();
            let e = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let f = rng.gen_range(-1.0..3.0);
            let lambda = rng.gen_range(0.0..2.0);
            let sd = simultaneous_diagonalize(&a, &d).unwrap();
            let (alpha, _) = sd.congruence_diagonal(&inner.a);
            let (delta, _) = sd.congruence_diagonal(&d);
            let eps = sd.s.tr_mul(&e);
            let beta = sd.s.tr_mul(&inner.b);
            let rhs: f64 = (0..n)
                .map(|i| (eps[i] - lambda * beta[i]).powi(2) / (delta[i] - lambda * alpha[i]))
                .sum();
            let margin = f - lambda * inner.c - rhs;
            if margin.abs() < 1e-6 {
                continue;
            }
            let m = assemble_classical_lmi(&inner, &d, &e, f, lambda);
            assert_eq!(check_psd(&m, 1e-12), margin > 0.0);
        }
    }

    #[test]
    fn emitted_block_interval_containment() {
        use crate::conic::{solve, SolveStatus, SolverConfig};
        // inner 1 − z² ≥ 0
        let inner =
            QuadForm::new(DMatrix::from_element(1, 1, -1.0), DVector::zeros(1), 1.0).unwrap();
        let sd =
            simultaneous_diagonalize(&DMatrix::identity(1, 1), &DMatrix::identity(1, 1)).unwrap();
        let check = |d: f64, f: f64| {
            let mut p = ProgramBuilder::new();
            let blk = emit_simplified_slemma(
                &mut p,
                &inner,
                &DMatrix::from_element(1, 1, d),
                &[LinExpr::constant(0.0)],
                &LinExpr::constant(f),
                &sd,
            )
            .unwrap();
            let prog = p.build().unwrap();
            (blk, prog)
        };
        // outer 4 − z² ≥ 0: feasible with λ = 1, t = 0
        let (blk, prog) = check(-1.0, 4.0);
        let mut x = vec![0.0; prog.num_vars()];
        x[blk.lambda.0] = 1.0;
        assert!(prog.max_violation(&x) <= 1e-12);
        assert_eq!(
            solve(&prog, &SolverConfig::default()).status,
            SolveStatus::Optimal
        );
        // outer z² − 2 ≥ 0 fails at z = 0
        let (_, prog) = check(1.0, -2.0);
        assert_eq!(
            solve(&prog, &SolverConfig::default()).status,
            SolveStatus::PrimalInfeasible
        );
    }

    #[test]
    fn emit_checks_dimensions_and_slater() {
        let sd =
            simultaneous_diagonalize(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2)).unwrap();
        let mut p = ProgramBuilder::new();
        let inner = QuadForm::ball(2, 1.0);
        let err = emit_simplified_slemma(
            &mut p,
            &inner,
            &DMatrix::identity(2, 2),
            &[LinExpr::constant(0.0)],
            &LinExpr::constant(1.0),
            &sd,
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let err = emit_simplified_slemma(
            &mut p,
            &QuadForm::ball(2, 0.0),
            &DMatrix::identity(2, 2),
            &[LinExpr::constant(0.0), LinExpr::constant(0.0)],
            &LinExpr::constant(1.0),
            &sd,
        );
        assert!(matches!(err, Err(Error::DegenerateInput(_))));
    }
}
