//! Per-cone Jordan algebra and Nesterov–Todd scaling.
//!
//! For a second-order cone with `J = diag(1, −1, …, −1)` the scaling is the
//! hyperbolic rotation `W = η·[[a, qᵀ], [q, I + qqᵀ/(1+a)]]` satisfying
//! `W z = W⁻¹ s = λ`.

use super::ConeKind;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Cone {
    pub kind: ConeKind,
    pub offset: usize,
    pub dim: usize,
}

impl Cone {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Scaling {
    NonNeg { w: f64 },
    Soc { eta: f64, a: f64, q: Vec<f64> },
}

fn soc_det(x: &[f64]) -> f64 {
    let tail: f64 = x[1..].iter().map(|v| v * v).sum();
    (x[0] - tail.sqrt()) * (x[0] + tail.sqrt())
}

/// `x₀ − ‖x₁‖` for a second-order slice, `x` for a scalar one.
pub(crate) fn margin(kind: ConeKind, x: &[f64]) -> f64 {
    match kind {
        ConeKind::NonNegative => x[0],
        ConeKind::SecondOrder => x[0] - x[1..].iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

impl Scaling {
    pub fn new(kind: ConeKind, s: &[f64], z: &[f64]) -> Scaling {
        match kind {
            ConeKind::NonNegative => Scaling::NonNeg {
                w: (s[0] / z[0]).sqrt(),
            },
            ConeKind::SecondOrder => {
                let sd = soc_det(s).max(f64::MIN_POSITIVE).sqrt();
                let zd = soc_det(z).max(f64::MIN_POSITIVE).sqrt();
                let sb: Vec<f64> = s.iter().map(|v| v / sd).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / zd).collect();
                let dot: f64 = sb.iter().zip(&zb).map(|(a, b)| a * b).sum();
                let gamma = ((1.0 + dot) / 2.0).max(0.0).sqrt();
                let a = (sb[0] + zb[0]) / (2.0 * gamma);
                let q: Vec<f64> = sb[1..]
                    .iter()
                    .zip(&zb[1..])
                    .map(|(si, zi)| (si - zi) / (2.0 * gamma))
                    .collect();
                Scaling::Soc {
                    eta: (sd / zd).sqrt(),
                    a,
                    q,
                }
            }
        }
    }

    /// `out = W v` (or `W⁻¹ v` when `inverse`).
    pub fn apply(&self, v: &[f64], out: &mut [f64], inverse: bool) {
        match self {
            Scaling::NonNeg { w } => out[0] = if inverse { v[0] / w } else { v[0] * w },
            Scaling::Soc { eta, a, q } => {
                let sign = if inverse { -1.0 } else { 1.0 };
                let scale = if inverse { 1.0 / eta } else { *eta };
                let qv: f64 = q.iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
                out[0] = scale * (a * v[0] + sign * qv);
                let coef = sign * v[0] + qv / (1.0 + a);
                for i in 0..q.len() {
                    out[i + 1] = scale * (v[i + 1] + coef * q[i]);
                }
            }
        }
    }

    /// `out = W² v` (or `W⁻² v`).
    pub fn apply_sq(&self, v: &[f64], out: &mut [f64], inverse: bool) {
        let mut tmp = vec![0.0; v.len()];
        self.apply(v, &mut tmp, inverse);
        self.apply(&tmp, out, inverse);
    }
}

/// Jordan product `u ∘ v`.
pub(crate) fn circ(kind: ConeKind, u: &[f64], v: &[f64], out: &mut [f64]) {
    match kind {
        ConeKind::NonNegative => out[0] = u[0] * v[0],
        ConeKind::SecondOrder => {
            out[0] = u.iter().zip(v).map(|(a, b)| a * b).sum();
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
    }
}

/// Solves `λ ∘ out = d` for `out`.
pub(crate) fn inv_circ(kind: ConeKind, lam: &[f64], d: &[f64], out: &mut [f64]) {
    match kind {
        ConeKind::NonNegative => out[0] = d[0] / lam[0],
        ConeKind::SecondOrder => {
            let rho = soc_det(lam);
            let l1d1: f64 = lam[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum();
            let v0 = (lam[0] * d[0] - l1d1) / rho;
            out[0] = v0;
            for i in 1..lam.len() {
                out[i] = (d[i] - v0 * lam[i]) / lam[0];
            }
        }
    }
}

/// Largest `α ≥ 0` keeping `x + α dx` in the cone (`∞` if unbounded).
pub(crate) fn max_step(kind: ConeKind, x: &[f64], dx: &[f64]) -> f64 {
    match kind {
        ConeKind::NonNegative => {
            if dx[0] < 0.0 {
                -x[0] / dx[0]
            } else {
                f64::INFINITY
            }
        }
        ConeKind::SecondOrder => {
            // q(α) = (x₀+αd₀)² − ‖x₁+αd₁‖² = aα² + 2bα + c, c > 0
            let a = dx[0] * dx[0] - dx[1..].iter().map(|v| v * v).sum::<f64>();
            let b = x[0] * dx[0] - x[1..].iter().zip(&dx[1..]).map(|(p, q)| p * q).sum::<f64>();
            let c = soc_det(x);
            let mut alpha = f64::INFINITY;
            // the head must stay nonnegative too
            if dx[0] < 0.0 {
                alpha = -x[0] / dx[0];
            }
            let root = if a.abs() <= 1e-14 * (b.abs() + c.abs()).max(f64::MIN_POSITIVE) {
                if b < 0.0 {
                    -c / (2.0 * b)
                } else {
                    f64::INFINITY
                }
            } else {
                let disc = b * b - a * c;
                if disc < 0.0 {
                    f64::INFINITY
                } else {
                    let sq = disc.sqrt();
                    let t = -(b + b.signum() * sq);
                    let r1 = if a != 0.0 { t / a } else { f64::INFINITY };
                    let r2 = if t != 0.0 { c / t } else { f64::INFINITY };
                    [r1, r2]
                        .into_iter()
                        .filter(|r| *r > 0.0)
                        .fold(f64::INFINITY, f64::min)
                }
            };
            alpha.min(root)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nt_scaling_maps_z_and_s_to_same_point() {
        let s = [3.0, 1.0, -0.5, 0.7];
        let z = [2.0, -0.3, 0.9, 0.2];
        let w = Scaling::new(ConeKind::SecondOrder, &s, &z);
        let mut wz = [0.0; 4];
        let mut winv_s = [0.0; 4];
        w.apply(&z, &mut wz, false);
        w.apply(&s, &mut winv_s, true);
        for i in 0..4 {
            assert!((wz[i] - winv_s[i]).abs() < 1e-12, "{wz:?} vs {winv_s:?}");
        }
        let mut back = [0.0; 4];
        w.apply(&wz, &mut back, true);
        for i in 0..4 {
            assert!((back[i] - z[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_circ_inverts() {
        let lam = [2.0, 0.5, -0.3];
        let d = [0.7, 1.2, -0.4];
        let mut v = [0.0; 3];
        inv_circ(ConeKind::SecondOrder, &lam, &d, &mut v);
        let mut back = [0.0; 3];
        circ(ConeKind::SecondOrder, &lam, &v, &mut back);
        for i in 0..3 {
            assert!((back[i] - d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_hits_boundary() {
        let x = [1.0, 0.0];
        let dx = [0.0, 1.0];
        let a = max_step(ConeKind::SecondOrder, &x, &dx);
        assert!((a - 1.0).abs() < 1e-12);
        assert_eq!(
            max_step(ConeKind::SecondOrder, &x, &[1.0, 0.5]),
            f64::INFINITY
        );
        let a = max_step(ConeKind::SecondOrder, &[2.0, 1.0, 0.0], &[-1.0, 0.0, 0.0]);
        assert!((a - 1.0).abs() < 1e-12);
    }
}
