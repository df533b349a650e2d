//! Brute-force and eigenvalue-based references for the control builders.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::lqc::{CompactCost, LqcSpec};

/// Maximizer of `wᵀCw + 2hᵀw` over `‖w‖ ≤ γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallMaxResult {
    pub w_star: DVector<f64>,
    pub value: f64,
    /// `ν` with `(νI − C)w* = h`; zero at an interior maximizer.
    pub multiplier: f64,
    pub hard_case: bool,
}

const MAX_BISECTION: usize = 200;

/// Global maximum of `wᵀCw + 2hᵀw` over the ball of radius `gamma`.
///
/// With `C = V diag(θ) Vᵀ` and `h̃ = Vᵀh`, the boundary maximizer is
/// `w̃_i = h̃_i / (ν − θ_i)` for the `ν > θ_max` solving `‖w̃(ν)‖ = γ`. When
/// `h̃` vanishes on the top eigenspace and `‖w̃(θ_max)‖ < γ`, the remaining
/// radius is filled along a top eigenvector.
pub fn max_quad_over_ball(c: &DMatrix<f64>, h: &DVector<f64>, gamma: f64) -> Result<BallMaxResult> {
    let n = h.len();
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "ball oracle quadratic".into(),
            expected: n,
            got: c.nrows(),
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "ball radius must be positive, got {gamma}"
        )));
    }
    let c = linalg::symmetrize(c);
    let eval = |w: &DVector<f64>| (w.transpose() * &c * w)[0] + 2.0 * h.dot(w);
    if n == 0 {
        return Ok(BallMaxResult {
            w_star: DVector::zeros(0),
            value: 0.0,
            multiplier: 0.0,
            hard_case: false,
        });
    }
    let (theta, v) = linalg::sym_eigen(&c);
    let ht = v.tr_mul(h);
    let theta_max = theta[n - 1];
    let hnorm = h.norm();
    let scale = 1.0 + theta.amax();

    // interior maximizer of a concave quadratic
    if theta_max < 0.0 {
        let wt = DVector::from_iterator(n, (0..n).map(|i| -ht[i] / theta[i]));
        if wt.norm() <= gamma {
            let w = &v * wt;
            return Ok(BallMaxResult {
                value: eval(&w),
                w_star: w,
                multiplier: 0.0,
                hard_case: false,
            });
        }
    }

    let top_tol = 1e-9 * scale;
    let top: Vec<usize> = (0..n)
        .filter(|&i| theta[i] >= theta_max - top_tol)
        .collect();
    let top_norm = top.iter().map(|&i| ht[i] * ht[i]).sum::<f64>().sqrt();
    if top_norm <= 1e-10 * hnorm || hnorm == 0.0 {
        // hard case candidate: w̃ at ν = θ_max off the top eigenspace
        let nu = theta_max.max(0.0);
        let mut wt = DVector::zeros(n);
        for i in 0..n {
            if !top.contains(&i) {
                wt[i] = ht[i] / (nu - theta[i]);
            }
        }
        let rest = wt.norm();
        if theta_max >= 0.0 && rest <= gamma {
            wt[top[0]] = (gamma * gamma - rest * rest).max(0.0).sqrt();
            let w = &v * wt;
            return Ok(BallMaxResult {
                value: eval(&w),
                w_star: w,
                multiplier: theta_max,
                hard_case: true,
            });
        }
    }

    // secular equation ‖w̃(ν)‖ = γ on (max(θ_max, 0), max(θ_max, 0) + ‖h‖/γ]
    let norm_at = |nu: f64| -> f64 {
        (0..n)
            .map(|i| {
                let d = nu - theta[i];
                (ht[i] / d).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    };
    let lo0 = theta_max.max(0.0);
    let mut lo = lo0;
    let mut hi = lo0 + hnorm / gamma;
    while norm_at(hi) > gamma {
        hi = lo0 + 2.0 * (hi - lo0);
    }
    let mut nu = hi;
    let mut converged = false;
    for _ in 0..MAX_BISECTION {
        nu = 0.5 * (lo + hi);
        let r = norm_at(nu);
        if (r - gamma).abs() <= 1e-12 * gamma {
            converged = true;
            break;
        }
        if r > gamma {
            lo = nu;
        } else {
            hi = nu;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            // ν is pinned to θ_max in floating point: the top component of
            // h̃ is too small to resolve, so finish as in the hard case
            return Ok(near_hard_case(&theta, &v, &ht, &top, hi, gamma, eval));
        }
    }
    if !converged {
        return Err(Error::BisectionFailure(MAX_BISECTION));
    }
    // Newton polish on 1/‖w̃(ν)‖ − 1/γ, which is nearly linear in ν
    for _ in 0..4 {
        let r = norm_at(nu);
        let slope: f64 = (0..n)
            .map(|i| ht[i] * ht[i] / (nu - theta[i]).powi(3))
            .sum::<f64>()
            / r.powi(3);
        if !(slope > 0.0) {
            break;
        }
        let next = nu - (1.0 / r - 1.0 / gamma) / slope;
        if !(next > lo0) || (norm_at(next) - gamma).abs() >= (r - gamma).abs() {
            break;
        }
        nu = next;
    }
    let wt = DVector::from_iterator(n, (0..n).map(|i| ht[i] / (nu - theta[i])));
    let w = &v * wt;
    Ok(BallMaxResult {
        value: eval(&w),
        w_star: w,
        multiplier: nu,
        hard_case: false,
    })
}

fn near_hard_case(
    theta: &DVector<f64>,
    v: &DMatrix<f64>,
    ht: &DVector<f64>,
    top: &[usize],
    nu: f64,
    gamma: f64,
    eval: impl Fn(&DVector<f64>) -> f64,
) -> BallMaxResult {
    let n = ht.len();
    let mut wt = DVector::zeros(n);
    for i in 0..n {
        if !top.contains(&i) {
            wt[i] = ht[i] / (nu - theta[i]);
        }
    }
    let rest = wt.norm();
    let fill = (gamma * gamma - rest * rest).max(0.0).sqrt();
    let top_norm = top.iter().map(|&i| ht[i] * ht[i]).sum::<f64>().sqrt();
    for &i in top {
        wt[i] = if top_norm > 0.0 {
            fill * ht[i] / top_norm
        } else {
            0.0
        };
    }
    if top_norm == 0.0 {
        wt[top[0]] = fill;
    }
    let w = v * wt;
    BallMaxResult {
        value: eval(&w),
        w_star: w,
        multiplier: nu,
        hard_case: true,
    }
}

/// Robust worst-case cost of an input sequence: the compact cost maximized
/// over the disturbance ball.
pub fn worst_case_cost(cost: &CompactCost, u: &DVector<f64>, gamma: f64) -> Result<BallMaxResult> {
    let h = &cost.c + cost.d.tr_mul(u);
    let mut r = max_quad_over_ball(&cost.cbar, &h, gamma)?;
    r.value += (u.transpose() * &cost.bbar * u)[0] + 2.0 * cost.b.dot(u) + cost.constant();
    Ok(r)
}

/// Worst-case regret `max_w J(u, w) − min_v J(v, w)` of an input sequence.
pub fn worst_case_regret(
    cost: &CompactCost,
    u: &DVector<f64>,
    gamma: f64,
) -> Result<BallMaxResult> {
    let l = linalg::cholesky(&cost.bbar, 0.0, "input Hessian B̄")?;
    let li = linalg::lower_inverse(&l);
    let ld = &li * &cost.d;
    let lb = &li * &cost.b;
    let k = linalg::symmetrize(&ld.tr_mul(&ld));
    let bib = li.tr_mul(&lb);
    let h = cost.d.tr_mul(&(bib + u));
    let mut r = max_quad_over_ball(&k, &h, gamma)?;
    r.value += (u.transpose() * &cost.bbar * u)[0] + 2.0 * cost.b.dot(u) + lb.norm_squared();
    Ok(r)
}

/// `v* = −B̄⁻¹(b + Dw)` and `J(x₀, v*, w)`.
pub fn closed_form_inner_min(cost: &CompactCost, w: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let l = linalg::cholesky(&cost.bbar, 0.0, "input Hessian B̄")?;
    let li = linalg::lower_inverse(&l);
    let v = -li.tr_mul(&(&li * (&cost.b + &cost.d * w)));
    let value = cost.cost(&v, w);
    Ok((v, value))
}

/// Largest compact cost over the lattice `step·ℤ^{N_w}` inside the ball.
pub fn grid_worst_case(cost: &CompactCost, u: &DVector<f64>, gamma: f64, step: f64) -> Result<f64> {
    let nw = cost.c.len();
    if nw > 2 {
        return Err(Error::DimensionTooLarge { max: 2, got: nw });
    }
    let pts = ball_lattice(nw, gamma, step);
    Ok(pts
        .iter()
        .map(|w| cost.cost(u, w))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Points `step·k` with `‖step·k‖ ≤ γ` for `k ∈ ℤ^n`, `n ≤ 2`.
pub fn ball_lattice(n: usize, gamma: f64, step: f64) -> Vec<DVector<f64>> {
    let m = (gamma / step).floor() as i64;
    let g2 = gamma * gamma * (1.0 + 1e-12);
    match n {
        0 => vec![DVector::zeros(0)],
        1 => (-m..=m)
            .map(|i| DVector::from_element(1, i as f64 * step))
            .collect(),
        _ => {
            let mut out = Vec::new();
            for i in -m..=m {
                let x = i as f64 * step;
                for j in -m..=m {
                    let y = j as f64 * step;
                    if x * x + y * y <= g2 {
                        out.push(DVector::from_vec(vec![x, y]));
                    }
                }
            }
            out
        }
    }
}

/// A point drawn uniformly from the ball of radius `gamma`.
pub fn sample_ball<R: Rng>(rng: &mut R, n: usize, gamma: f64) -> DVector<f64> {
    let dir = sample_sphere(rng, n, 1.0);
    let r = gamma * rng.gen::<f64>().powf(1.0 / n.max(1) as f64);
    dir * r
}

/// A point drawn uniformly from the sphere of radius `radius`.
pub fn sample_sphere<R: Rng>(rng: &mut R, n: usize, radius: f64) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| gaussian(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v * (radius / norm);
        }
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Cost evaluated by iterating the dynamics step by step.
pub fn rollout_cost(spec: &LqcSpec, x0: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let (nu, nw) = (spec.nu(), spec.nw());
    let mut x = x0.clone();
    let mut total = 0.0;
    for k in 0..spec.horizon {
        let uk = u.rows(k * nu, nu);
        let wk = w.rows(k * nw, nw);
        total += (uk.transpose() * &spec.r[k] * uk)[0] + 2.0 * spec.r_lin[k].dot(&uk);
        x = &spec.a[k] * &x + &spec.b[k] * uk + &spec.c[k] * wk;
        total += (x.transpose() * &spec.q[k] * &x)[0] + 2.0 * spec.q_lin[k].dot(&x);
    }
    total
}

/// States `x₁..x_N` from iterating the dynamics.
pub fn rollout_states(
    spec: &LqcSpec,
    x0: &DVector<f64>,
    u: &DVector<f64>,
    w: &DVector<f64>,
) -> Vec<DVector<f64>> {
    let (nu, nw) = (spec.nu(), spec.nw());
    let mut x = x0.clone();
    (0..spec.horizon)
        .map(|k| {
            x = &spec.a[k] * &x + &spec.b[k] * u.rows(k * nu, nu) + &spec.c[k] * w.rows(k * nw, nw);
            x.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn kkt(c: &DMatrix<f64>, h: &DVector<f64>, gamma: f64, r: &BallMaxResult) -> f64 {
        let res = (DMatrix::identity(h.len(), h.len()) * r.multiplier - c) * &r.w_star - h;
        let theta_max = linalg::sym_eigen(c).0.max();
        assert!(r.multiplier >= theta_max - 1e-9, "ν below θ_max");
        if r.multiplier > 0.0 {
            assert!((r.w_star.norm() - gamma).abs() <= 1e-9 * gamma);
        }
        res.norm()
    }

    #[test]
    fn linear_over_ball() {
        let c = DMatrix::zeros(2, 2);
        let h = DVector::from_vec(vec![1.0, 0.0]);
        let r = max_quad_over_ball(&c, &h, 1.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!((&r.w_star - &h).norm() < 1e-12);
        assert!(kkt(&c, &h, 1.0, &r) < 1e-9);
    }

    #[test]
    fn isotropic_is_hard_case() {
        let c = DMatrix::identity(3, 3);
        let h = DVector::zeros(3);
        let r = max_quad_over_ball(&c, &h, 2.0).unwrap();
        assert!(r.hard_case);
        assert!((r.value - 4.0).abs() < 1e-12);
        assert!((r.w_star.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn saddle_example() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let h = DVector::from_vec(vec![0.0, 1.0]);
        let r = max_quad_over_ball(&c, &h, 1.0).unwrap();
        assert!((r.value - 1.5).abs() < 1e-10);
        assert!((r.w_star[0].abs() - 3f64.sqrt() / 2.0).abs() < 1e-8);
        assert!((r.w_star[1] - 0.5).abs() < 1e-8);
        assert!(r.hard_case);
        assert!(kkt(&c, &h, 1.0, &r) < 1e-9);
        // 1-D reduction on w₁² = 1 − w₂², grid at 1e-4
        let best = (-10_000..=10_000)
            .map(|i| {
                let w2 = i as f64 * 1e-4;
                1.0 + 2.0 * w2 - 2.0 * w2 * w2
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - r.value).abs() < 1e-7);
    }

    #[test]
    fn concave_interior() {
        let c = -DMatrix::identity(2, 2) * 2.0;
        let h = DVector::from_vec(vec![0.2, 0.0]);
        let r = max_quad_over_ball(&c, &h, 1.0).unwrap();
        assert_eq!(r.multiplier, 0.0);
        assert!((r.w_star[0] - 0.1).abs() < 1e-14);
        assert!(kkt(&c, &h, 1.0, &r) < 1e-12);
    }

    #[test]
    fn random_dominates_samples() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in 1..=6 {
            for _ in 0..10 {
                let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                let c = linalg::symmetrize(&m);
                let h = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                let gamma = rng.gen_range(0.1..2.0);
                let r = max_quad_over_ball(&c, &h, gamma).unwrap();
                assert!(kkt(&c, &h, gamma, &r) < 1e-9 * (1.0 + h.norm()));
                assert!(r.w_star.norm() <= gamma * (1.0 + 1e-10));
                for _ in 0..2000 {
                    let w = sample_ball(&mut rng, n, gamma);
                    let val = (w.transpose() * &c * &w)[0] + 2.0 * h.dot(&w);
                    assert!(val <= r.value + 1e-12 * (1.0 + r.value.abs()));
                }
            }
        }
    }

    #[test]
    fn near_hard_case_stays_accurate() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let h = DVector::from_vec(vec![1e-13, 0.3]);
        let r = max_quad_over_ball(&c, &h, 1.0).unwrap();
        assert!(kkt(&c, &h, 1.0, &r) < 1e-9);
        let grid = ball_lattice(2, 1.0, 1e-3)
            .iter()
            .map(|w| (w.transpose() * &c * w)[0] + 2.0 * h.dot(w))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(grid <= r.value + 1e-12 && r.value - grid < 1e-2);
    }

    #[test]
    fn grid_rejects_three_dims() {
        let spec = LqcSpec::scalar_benchmark(3);
        let model = crate::lqc::LqcModel::new(spec).unwrap();
        let cost = model.compact_cost(&DVector::from_element(1, -1.0));
        let u = DVector::zeros(3);
        assert!(matches!(
            grid_worst_case(&cost, &u, 0.1, 1e-2),
            Err(Error::DimensionTooLarge { max: 2, got: 3 })
        ));
    }

    #[test]
    fn coarse_grid_is_nominal() {
        let model = crate::lqc::LqcModel::new(LqcSpec::scalar_benchmark(1)).unwrap();
        let cost = model.compact_cost(&DVector::from_element(1, -1.0));
        let u = DVector::from_element(1, 0.4);
        let g = grid_worst_case(&cost, &u, 0.1, 1.0).unwrap();
        assert_eq!(g, cost.cost(&u, &DVector::zeros(1)));
    }

    #[test]
    fn scalar_inner_min() {
        let model = crate::lqc::LqcModel::new(LqcSpec::scalar_benchmark(1)).unwrap();
        let cost = model.compact_cost(&DVector::from_element(1, -1.0));
        let w = DVector::from_element(1, 0.1);
        let (v, val) = closed_form_inner_min(&cost, &w).unwrap();
        assert!((v[0] - 0.81 / 1.9).abs() < 1e-15);
        let best = (-1_000_000..=1_000_000)
            .map(|i| cost.cost(&DVector::from_element(1, i as f64 * 1e-6), &w))
            .fold(f64::INFINITY, f64::min);
        assert!(val <= best + 1e-14 && best - val < 1e-11);
        let grad = &cost.bbar * &v + &cost.b + &cost.d * &w;
        assert!(grad.norm() <= 1e-9 * (1.0 + cost.b.norm()));
    }

    #[test]
    fn zero_inner_min() {
        let mut spec = LqcSpec::scalar_benchmark(2);
        spec.input_set = crate::lqc::Polyhedron::whole_space(2);
        let model = crate::lqc::LqcModel::new(spec).unwrap();
        let cost = model.compact_cost(&DVector::zeros(1));
        let (v, _) = closed_form_inner_min(&cost, &DVector::zeros(2)).unwrap();
        assert_eq!(v.norm(), 0.0);
    }
}
