#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;
use robust_socp::linalg;
use robust_socp::lqc::{LqcSpec, Polyhedron};

pub fn rand_mat(rng: &mut StdRng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-scale..scale))
}

pub fn rand_vec(rng: &mut StdRng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

pub fn rand_psd(rng: &mut StdRng, n: usize, shift: f64) -> DMatrix<f64> {
    let m = rand_mat(rng, n, n, 1.0);
    linalg::symmetrize(&(&m * m.transpose() / n as f64 + DMatrix::identity(n, n) * shift))
}

/// Random time-varying spec with every dimension in `1..=max_dim` and a
/// horizon in `1..=max_n`. Inputs are boxed when `boxed`.
pub fn random_lqc(rng: &mut StdRng, max_dim: usize, max_n: usize, boxed: bool) -> LqcSpec {
    let nx = rng.gen_range(1..=max_dim);
    let nu = rng.gen_range(1..=max_dim);
    let nw = rng.gen_range(1..=max_dim);
    let n = rng.gen_range(1..=max_n);
    random_lqc_dims(rng, nx, nu, nw, n, boxed)
}

pub fn random_lqc_dims(
    rng: &mut StdRng,
    nx: usize,
    nu: usize,
    nw: usize,
    n: usize,
    boxed: bool,
) -> LqcSpec {
    let mut a = Vec::new();
    for _ in 0..n {
        let m = rand_mat(rng, nx, nx, 1.0);
        let rho = linalg::spectral_radius(&m).max(1e-3);
        a.push(m * (rng.gen_range(0.5..1.1) / rho));
    }
    let input_set = if boxed {
        let hi = rng.gen_range(0.3..2.0);
        Polyhedron::box_set(n * nu, -hi, hi)
    } else {
        Polyhedron::whole_space(n * nu)
    };
    LqcSpec {
        horizon: n,
        a,
        b: (0..n).map(|_| rand_mat(rng, nx, nu, 1.0)).collect(),
        c: (0..n).map(|_| rand_mat(rng, nx, nw, 1.0)).collect(),
        q: (0..n).map(|_| rand_psd(rng, nx, 0.0)).collect(),
        q_lin: (0..n).map(|_| rand_vec(rng, nx, 0.5)).collect(),
        r: (0..n).map(|_| rand_psd(rng, nu, 0.2)).collect(),
        r_lin: (0..n).map(|_| rand_vec(rng, nu, 0.5)).collect(),
        gamma: rng.gen_range(0.05..1.0),
        input_set,
    }
}

pub fn scalar_x0() -> DVector<f64> {
    DVector::from_element(1, -1.0)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}
