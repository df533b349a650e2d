use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// `{u : G u ≤ h}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl Polyhedron {
    pub fn new(g: DMatrix<f64>, h: DVector<f64>) -> Result<Polyhedron> {
        if g.nrows() != h.len() {
            return Err(Error::DimensionMismatch {
                context: "polyhedron rows".into(),
                expected: g.nrows(),
                got: h.len(),
            });
        }
        Ok(Polyhedron { g, h })
    }

    /// Box `lo ≤ u_i ≤ hi` in `n` dimensions.
    pub fn box_set(n: usize, lo: f64, hi: f64) -> Polyhedron {
        let mut g = DMatrix::zeros(2 * n, n);
        let mut h = DVector::zeros(2 * n);
        for i in 0..n {
            g[(2 * i, i)] = 1.0;
            h[2 * i] = hi;
            g[(2 * i + 1, i)] = -1.0;
            h[2 * i + 1] = -lo;
        }
        Polyhedron { g, h }
    }

    /// No constraints.
    pub fn whole_space(n: usize) -> Polyhedron {
        Polyhedron {
            g: DMatrix::zeros(0, n),
            h: DVector::zeros(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.ncols()
    }

    /// `max_j (g_jᵀu − h_j)`, or `−∞` without rows.
    pub fn max_violation(&self, u: &DVector<f64>) -> f64 {
        (&self.g * u - &self.h)
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Finite-horizon linear-quadratic problem with ball-bounded disturbances.
///
/// Dynamics `x_{k+1} = A_k x_k + B_k u_k + C_k w_k` for `k = 0..N−1`; the
/// state cost uses `Q_k, q_k` for `k = 1..N` (stored at index `k − 1`), the
/// input cost `R_k, r_k` for `k = 0..N−1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LqcSpec {
    pub horizon: usize,
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub c: Vec<DMatrix<f64>>,
    pub q: Vec<DMatrix<f64>>,
    pub q_lin: Vec<DVector<f64>>,
    pub r: Vec<DMatrix<f64>>,
    pub r_lin: Vec<DVector<f64>>,
    pub gamma: f64,
    pub input_set: Polyhedron,
}

impl LqcSpec {
    /// Time-invariant dynamics and weights, no linear cost terms.
    #[allow(clippy::too_many_arguments)]
    pub fn time_invariant(
        horizon: usize,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        gamma: f64,
        input_set: Polyhedron,
    ) -> LqcSpec {
        let nx = a.nrows();
        let nu = b.ncols();
        LqcSpec {
            horizon,
            a: vec![a; horizon],
            b: vec![b; horizon],
            c: vec![c; horizon],
            q: vec![q; horizon],
            q_lin: vec![DVector::zeros(nx); horizon],
            r: vec![r; horizon],
            r_lin: vec![DVector::zeros(nu); horizon],
            gamma,
            input_set,
        }
    }

    /// Scalar system `A = B = C = 1`, `Q_k = R_k = 0.9^k`, `γ = 0.1`, inputs
    /// boxed to `[−0.4, 0.4]`; used with `x₀ = −1`.
    pub fn scalar_benchmark(horizon: usize) -> LqcSpec {
        let one = DMatrix::from_element(1, 1, 1.0);
        let w = |k: usize| DMatrix::from_element(1, 1, 0.9f64.powi(k as i32));
        LqcSpec {
            horizon,
            a: vec![one.clone(); horizon],
            b: vec![one.clone(); horizon],
            c: vec![one; horizon],
            q: (1..=horizon).map(w).collect(),
            q_lin: vec![DVector::zeros(1); horizon],
            r: (0..horizon).map(w).collect(),
            r_lin: vec![DVector::zeros(1); horizon],
            gamma: 0.1,
            input_set: Polyhedron::box_set(horizon, -0.4, 0.4),
        }
    }

    pub fn nx(&self) -> usize {
        self.a.first().map_or(0, |m| m.nrows())
    }

    pub fn nu(&self) -> usize {
        self.b.first().map_or(0, |m| m.ncols())
    }

    pub fn nw(&self) -> usize {
        self.c.first().map_or(0, |m| m.ncols())
    }

    /// `N_u = N·n_u`.
    pub fn num_inputs(&self) -> usize {
        self.horizon * self.nu()
    }

    /// `N_w = N·n_w`.
    pub fn num_disturbances(&self) -> usize {
        self.horizon * self.nw()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.horizon;
        if n == 0 {
            return Err(Error::InvalidSpec("horizon must be at least 1".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "disturbance radius gamma must be positive, got {}",
                self.gamma
            )));
        }
        let (nx, nu, nw) = (self.nx(), self.nu(), self.nw());
        let lens = [
            ("A", self.a.len()),
            ("B", self.b.len()),
            ("C", self.c.len()),
            ("Q", self.q.len()),
            ("q", self.q_lin.len()),
            ("R", self.r.len()),
            ("r", self.r_lin.len()),
        ];
        for (what, len) in lens {
            if len != n {
                return Err(mismatch(format!("number of {what} matrices"), n, len));
            }
        }
        for k in 0..n {
            let shape = |m: &DMatrix<f64>, rows: usize, cols: usize, what: &str| -> Result<()> {
                if m.nrows() != rows {
                    return Err(mismatch(format!("{what}[{k}] rows"), rows, m.nrows()));
                }
                if m.ncols() != cols {
                    return Err(mismatch(format!("{what}[{k}] cols"), cols, m.ncols()));
                }
                Ok(())
            };
            shape(&self.a[k], nx, nx, "A")?;
            shape(&self.b[k], nx, nu, "B")?;
            shape(&self.c[k], nx, nw, "C")?;
            shape(&self.q[k], nx, nx, "Q")?;
            shape(&self.r[k], nu, nu, "R")?;
            if self.q_lin[k].len() != nx {
                return Err(mismatch(format!("q[{k}]"), nx, self.q_lin[k].len()));
            }
            if self.r_lin[k].len() != nu {
                return Err(mismatch(format!("r[{k}]"), nu, self.r_lin[k].len()));
            }
            let qk = &self.q[k];
            if linalg::min_eigenvalue(qk) < -1e-9 * (1.0 + qk.norm()) {
                return Err(Error::InvalidSpec(format!(
                    "Q[{k}] is not positive semidefinite"
                )));
            }
            linalg::cholesky(&self.r[k], 0.0, "input weight R")?;
        }
        if self.input_set.dim() != self.num_inputs() {
            return Err(mismatch(
                "input set dimension".into(),
                self.num_inputs(),
                self.input_set.dim(),
            ));
        }
        Ok(())
    }
}

fn mismatch(context: String, expected: usize, got: usize) -> Error {
    Error::DimensionMismatch {
        context,
        expected,
        got,
    }
}

/// First-order moment information `E[H w] ≤ μ` on top of the ball support.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguitySpec {
    pub h: DMatrix<f64>,
    pub mu: DVector<f64>,
}

impl AmbiguitySpec {
    /// Support information only (`m = 0`).
    pub fn support_only(num_disturbances: usize) -> AmbiguitySpec {
        AmbiguitySpec {
            h: DMatrix::zeros(0, num_disturbances),
            mu: DVector::zeros(0),
        }
    }

    pub fn num_moments(&self) -> usize {
        self.mu.len()
    }
}
