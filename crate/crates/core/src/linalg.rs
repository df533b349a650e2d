//! Small dense linear-algebra helpers shared by the builders and oracles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric eigendecomposition with eigenvalues in ascending order.
///
/// Returns `(theta, V)` with `m = V diag(theta) Vᵀ`; column `j` of `V` is the
/// eigenvector of `theta[j]`.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    sym_eigen(m).0[0]
}

/// Dense lower Cholesky factor `m = L Lᵀ`.
///
/// Fails when a pivot `L_ii²` drops to `rel_pivot · ‖m‖_F` or below.
pub fn cholesky(m: &DMatrix<f64>, rel_pivot: f64, what: &'static str) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: format!("{what} (square)"),
            expected: n,
            got: m.ncols(),
        });
    }
    let floor = rel_pivot * m.norm();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::NotPositiveDefinite { what });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    l.solve_lower_triangular(b)
        .expect("triangular factor has a zero diagonal")
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    solve_lower(l, &DMatrix::identity(l.nrows(), l.nrows()))
}

/// Symmetric PSD square root. Eigenvalues in `[-clamp_rel·‖m‖_F, 0)` are
/// clamped to zero; anything more negative is an error.
pub fn psd_sqrt(m: &DMatrix<f64>, clamp_rel: f64, what: &'static str) -> Result<DMatrix<f64>> {
    let (theta, v) = sym_eigen(m);
    let floor = -clamp_rel * m.norm();
    let mut roots = DVector::zeros(theta.len());
    for (i, &t) in theta.iter().enumerate() {
        if t < floor {
            return Err(Error::NegativeEigenvalue { what, value: t });
        }
        roots[i] = t.max(0.0).sqrt();
    }
    Ok(&v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Symmetric `m^{1/2}` and `m^{-1/2}` of a positive definite matrix.
pub fn pd_sqrt_pair(m: &DMatrix<f64>, what: &'static str) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (theta, v) = sym_eigen(m);
    if !theta.is_empty() && !(theta[0] > 1e-12 * m.norm()) {
        return Err(Error::NotPositiveDefinite { what });
    }
    let root = DMatrix::from_diagonal(&theta.map(f64::sqrt));
    let inv_root = DMatrix::from_diagonal(&theta.map(|t| 1.0 / t.sqrt()));
    Ok((&v * root * v.transpose(), &v * inv_root * v.transpose()))
}

/// Rows of a factor `F` with `FᵀF = m` for a PSD `m`; rows for zero
/// eigenvalues are dropped.
pub fn psd_factor_rows(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let (theta, v) = sym_eigen(m);
    let scale = m.norm();
    let floor = -1e-9 * (1.0 + scale);
    let keep: Vec<usize> = (0..theta.len())
        .filter(|&i| theta[i] > 1e-14 * (1.0 + scale))
        .collect();
    if let Some(&bad) = theta.iter().find(|&&t| t < floor) {
        return Err(Error::NegativeEigenvalue { what, value: bad });
    }
    let mut f = DMatrix::zeros(keep.len(), m.nrows());
    for (r, &i) in keep.iter().enumerate() {
        let s = theta[i].sqrt();
        for c in 0..m.nrows() {
            f[(r, c)] = s * v[(c, i)];
        }
    }
    Ok(f)
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Spectral radius computed from the real Schur form eigenvalues.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// 1-norm condition estimate via the singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
