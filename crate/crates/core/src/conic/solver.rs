//! Dense primal-dual interior-point method for [`ConicProgram`]s.
//!
//! The program is put in standard form
//!
//! ```text
//! minimize cᵀx   s.t.  A x = b,   G x + s = h,   s ∈ K
//! ```
//!
//! and solved through the homogeneous self-dual embedding with a Mehrotra
//! predictor–corrector and Nesterov–Todd scaling. Each Newton system is
//! reduced to normal equations `(Gᵀ W⁻² G + δI) dx + Aᵀ dy = r` that are
//! factored densely, with a Schur complement for the equalities and a few
//! steps of iterative refinement against the unregularized system.
//!
//! Infeasibility is read off the embedding: when `κ` dominates `τ` and the
//! iterate is a normalized Farkas ray within tolerance, the corresponding
//! infeasibility status is returned.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::cones::{self, Cone, Scaling};
use super::{ConeKind, ConicProgram};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iters: usize,
    pub fraction_to_boundary: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            max_iters: 100,
            fraction_to_boundary: 0.99,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        let ok = self.tol_feas > 0.0
            && self.tol_gap > 0.0
            && self.max_iters >= 1
            && self.fraction_to_boundary > 0.0
            && self.fraction_to_boundary < 1.0;
        if ok {
            Ok(())
        } else {
            Err(crate::error::Error::InvalidSpec(format!(
                "bad solver configuration {self:?}"
            )))
        }
    }
}

/// Relative primal residual, dual residual and duality gap of the final
/// iterate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Multipliers of the equalities, in insertion order.
    pub y: Vec<f64>,
    /// Multipliers of each cone block, in insertion order.
    pub z: Vec<Vec<f64>>,
    /// Primal objective including the program's constant offset.
    pub objective: f64,
    /// Dual objective including the same offset.
    pub dual_objective: f64,
    pub iterations: usize,
    pub residuals: Residuals,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

struct Data {
    n: usize,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    cones: Vec<Cone>,
    degree: usize,
}

impl Data {
    /// Largest direct violation of the equalities and cones at `x`.
    fn violation(&self, x: &DVector<f64>) -> f64 {
        let eq = (&self.a * x - &self.b).amax();
        let v = &self.h - &self.g * x;
        self.cones
            .iter()
            .map(|c| -cones::margin(c.kind, cone_slice(&v, c)))
            .fold(eq, f64::max)
    }

    fn from_program(p: &ConicProgram) -> Data {
        let n = p.num_vars();
        let c = DVector::from_column_slice(p.objective());
        let eqs = p.equalities();
        let mut a = DMatrix::zeros(eqs.len(), n);
        let mut b = DVector::zeros(eqs.len());
        for (i, e) in eqs.iter().enumerate() {
            for &(j, v) in &e.terms {
                a[(i, j)] += v;
            }
            b[i] = -e.constant;
        }
        let m: usize = p.blocks().iter().map(|b| b.dim()).sum();
        let mut g = DMatrix::zeros(m, n);
        let mut h = DVector::zeros(m);
        let mut cones = Vec::with_capacity(p.blocks().len());
        let mut row = 0;
        for blk in p.blocks() {
            cones.push(Cone {
                kind: blk.kind,
                offset: row,
                dim: blk.dim(),
            });
            for e in std::iter::once(&blk.head).chain(blk.tail.iter()) {
                for &(j, v) in &e.terms {
                    g[(row, j)] -= v;
                }
                h[row] = e.constant;
                row += 1;
            }
        }
        let degree = cones.len();
        Data {
            n,
            c,
            a,
            b,
            g,
            h,
            cones,
            degree,
        }
    }
}

/// Factored Newton system for one scaling.
struct Kkt<'a> {
    data: &'a Data,
    scalings: &'a [Scaling],
    h_chol: Cholesky<f64, Dyn>,
    schur: Option<(Cholesky<f64, Dyn>, DMatrix<f64>)>,
}

const STATIC_REG: f64 = 1e-10;

impl<'a> Kkt<'a> {
    fn factor(data: &'a Data, scalings: &'a [Scaling]) -> Option<Kkt<'a>> {
        let n = data.n;
        let mut hm = DMatrix::<f64>::zeros(n, n);
        let mut col = vec![0.0; 0];
        let mut out = vec![0.0; 0];
        for (cone, w) in data.cones.iter().zip(scalings) {
            let gk = data.g.rows(cone.offset, cone.dim);
            // W⁻¹ G_k, column by column
            let mut wg = DMatrix::<f64>::zeros(cone.dim, n);
            col.resize(cone.dim, 0.0);
            out.resize(cone.dim, 0.0);
            for j in 0..n {
                let mut any = false;
                for i in 0..cone.dim {
                    col[i] = gk[(i, j)];
                    any |= col[i] != 0.0;
                }
                if !any {
                    continue;
                }
                w.apply(&col, &mut out, true);
                for i in 0..cone.dim {
                    wg[(i, j)] = out[i];
                }
            }
            hm.gemm_tr(1.0, &wg, &wg, 1.0);
        }
        let mut reg = STATIC_REG;
        let max_diag = hm.diagonal().iter().cloned().fold(0.0, f64::max);
        let h_chol = loop {
            let mut hr = hm.clone();
            for i in 0..n {
                hr[(i, i)] += reg * (1.0 + max_diag.min(1.0));
            }
            if let Some(ch) = hr.cholesky() {
                break ch;
            }
            reg *= 100.0;
            if reg > 1e-2 {
                return None;
            }
        };
        let schur = if data.a.nrows() > 0 {
            let hinv_at = h_chol.solve(&data.a.transpose());
            let mut s = &data.a * &hinv_at;
            let sd = s.diagonal().iter().cloned().fold(0.0, f64::max);
            let mut reg = STATIC_REG;
            let ch = loop {
                let mut sr = s.clone();
                for i in 0..sr.nrows() {
                    sr[(i, i)] += reg * (1.0 + sd);
                }
                if let Some(ch) = sr.cholesky() {
                    break ch;
                }
                reg *= 100.0;
                if reg > 1e-2 {
                    return None;
                }
            };
            s.fill(0.0);
            Some((ch, hinv_at))
        } else {
            None
        };
        Some(Kkt {
            data,
            scalings,
            h_chol,
            schur,
        })
    }

    fn apply_wsq(&self, v: &DVector<f64>, inverse: bool) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (cone, w) in self.data.cones.iter().zip(self.scalings) {
            let r = cone.range();
            w.apply_sq(
                &v.as_slice()[r.clone()],
                &mut out.as_mut_slice()[r],
                inverse,
            );
        }
        out
    }

    fn solve_once(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let d = self.data;
        let winv_r3 = self.apply_wsq(r3, true);
        let rhs = r1 + d.g.tr_mul(&winv_r3);
        let (dx, dy) = match &self.schur {
            None => (self.h_chol.solve(&rhs), DVector::zeros(0)),
            Some((sch, hinv_at)) => {
                let hinv_rhs = self.h_chol.solve(&rhs);
                let dy = sch.solve(&(&d.a * &hinv_rhs - r2));
                let dx = hinv_rhs - hinv_at * &dy;
                (dx, dy)
            }
        };
        let dz = self.apply_wsq(&(&d.g * &dx - r3), true);
        (dx, dy, dz)
    }

    /// Solves `[0 Aᵀ Gᵀ; A 0 0; G 0 −W²] (dx, dy, dz) = (r1, r2, r3)`.
    fn solve(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let d = self.data;
        let (mut dx, mut dy, mut dz) = self.solve_once(r1, r2, r3);
        let scale = 1.0 + r1.amax().max(r2.amax()).max(r3.amax());
        for _ in 0..4 {
            let e1 = r1 - d.a.tr_mul(&dy) - d.g.tr_mul(&dz);
            let e2 = r2 - &d.a * &dx;
            let e3 = r3 - (&d.g * &dx - self.apply_wsq(&dz, false));
            let err = e1.amax().max(e2.amax()).max(e3.amax());
            if err <= 1e-14 * scale {
                break;
            }
            let (cx, cy, cz) = self.solve_once(&e1, &e2, &e3);
            dx += cx;
            dy += cy;
            dz += cz;
        }
        (dx, dy, dz)
    }
}

struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

fn cone_slice<'v>(v: &'v DVector<f64>, c: &Cone) -> &'v [f64] {
    &v.as_slice()[c.range()]
}

fn shift_into_cones(v: &mut DVector<f64>, cones_: &[Cone]) {
    let mut worst = f64::NEG_INFINITY;
    let mut norm: f64 = 0.0;
    for c in cones_ {
        worst = worst.max(-cones::margin(c.kind, cone_slice(v, c)));
        norm = norm.max(
            cone_slice(v, c)
                .iter()
                .fold(0.0, |a: f64, b| a.max(b.abs())),
        );
    }
    if cones_.is_empty() {
        return;
    }
    if worst >= -1e-8 * norm.max(1.0) {
        for c in cones_ {
            v[c.offset] += 1.0 + worst;
        }
    }
}

fn max_step_all(v: &DVector<f64>, dv: &DVector<f64>, cones_: &[Cone]) -> f64 {
    cones_
        .iter()
        .map(|c| cones::max_step(c.kind, cone_slice(v, c), cone_slice(dv, c)))
        .fold(f64::INFINITY, f64::min)
}

/// Solves `program` with the given configuration.
pub fn solve(program: &ConicProgram, config: &SolverConfig) -> Solution {
    let data = Data::from_program(program);
    let mut sol = Solver::new(&data, config).run();
    sol.objective += program.offset();
    sol.dual_objective += program.offset();
    if sol.status == SolveStatus::Optimal {
        // Optimal means the returned point is feasible by direct substitution.
        let viol = program.max_violation(&sol.x);
        if viol > config.tol_feas {
            sol.status = SolveStatus::NumericalFailure;
        }
    }
    sol
}

struct Solver<'a> {
    d: &'a Data,
    cfg: &'a SolverConfig,
}

enum Check {
    Done(SolveStatus),
    Continue,
}

impl<'a> Solver<'a> {
    fn new(d: &'a Data, cfg: &'a SolverConfig) -> Self {
        Solver { d, cfg }
    }

    fn initial_point(&self) -> Option<Iterate> {
        let d = self.d;
        let identity: Vec<Scaling> = d
            .cones
            .iter()
            .map(|c| match c.kind {
                ConeKind::NonNegative => Scaling::NonNeg { w: 1.0 },
                ConeKind::SecondOrder => Scaling::Soc {
                    eta: 1.0,
                    a: 1.0,
                    q: vec![0.0; c.dim - 1],
                },
            })
            .collect();
        let kkt = Kkt::factor(d, &identity)?;
        let m = d.h.len();
        let (x, _, zp) = kkt.solve(&DVector::zeros(d.n), &d.b, &d.h);
        let mut s = -zp;
        shift_into_cones(&mut s, &d.cones);
        let (_, y, mut z) = kkt.solve(&(-&d.c), &DVector::zeros(d.b.len()), &DVector::zeros(m));
        shift_into_cones(&mut z, &d.cones);
        Some(Iterate {
            x,
            y,
            z,
            s,
            tau: 1.0,
            kappa: 1.0,
        })
    }

    fn run(&self) -> Solution {
        let d = self.d;
        let cfg = self.cfg;
        let empty = |status, iterations| Solution {
            status,
            x: vec![0.0; d.n],
            y: vec![0.0; d.b.len()],
            z: d.cones.iter().map(|c| vec![0.0; c.dim]).collect(),
            objective: f64::NAN,
            dual_objective: f64::NAN,
            iterations,
            residuals: Residuals::default(),
        };
        let Some(mut it) = self.initial_point() else {
            return empty(SolveStatus::NumericalFailure, 0);
        };
        if d.cones.is_empty() {
            // give every program at least the embedding's own complementarity
        }
        let nu = d.degree as f64;
        let norm_bh = (d.b.norm_squared() + d.h.norm_squared()).sqrt();
        let norm_c = d.c.norm();
        let mut stalls = 0;

        for iter in 0..=cfg.max_iters {
            // residuals of the embedding
            let rx = d.a.tr_mul(&it.y) + d.g.tr_mul(&it.z) + &d.c * it.tau;
            let ry = -(&d.a * &it.x) + &d.b * it.tau;
            let rz = -(&d.g * &it.x) + &d.h * it.tau - &it.s;
            let cx = d.c.dot(&it.x);
            let by_hz = d.b.dot(&it.y) + d.h.dot(&it.z);
            let rt = -cx - by_hz - it.kappa;
            let sz = it.s.dot(&it.z);
            let mu = (sz + it.tau * it.kappa) / (nu + 1.0);

            let (check, res, pobj, dobj) =
                self.check(&it, &rx, &ry, &rz, cx, by_hz, sz, norm_bh, norm_c);
            if let Check::Done(status) = check {
                return self.finish(&it, status, iter, res, pobj, dobj);
            }
            if iter == cfg.max_iters {
                return self.finish(&it, SolveStatus::MaxIterations, iter, res, pobj, dobj);
            }

            let scalings: Vec<Scaling> = d
                .cones
                .iter()
                .map(|c| Scaling::new(c.kind, cone_slice(&it.s, c), cone_slice(&it.z, c)))
                .collect();
            let mut lam = DVector::zeros(it.z.len());
            for (c, w) in d.cones.iter().zip(&scalings) {
                w.apply(
                    cone_slice(&it.z, c),
                    &mut lam.as_mut_slice()[c.range()],
                    false,
                );
            }
            let Some(kkt) = Kkt::factor(d, &scalings) else {
                return self.finish(&it, SolveStatus::NumericalFailure, iter, res, pobj, dobj);
            };
            let (x2, y2, z2) = kkt.solve(&(-&d.c), &d.b, &d.h);

            let lam_lam = self.circ_all(&lam, &lam);
            // predictor
            let ds_aff = -&lam_lam;
            let dk_aff = -it.tau * it.kappa;
            let aff = self.direction(
                &kkt, &scalings, &lam, &it, &rx, &ry, &rz, rt, 1.0, &ds_aff, dk_aff, &x2, &y2, &z2,
            );
            let alpha_aff = self.step_length(&it, &aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            // corrector
            let mut ws_a = DVector::zeros(lam.len());
            let mut wz_a = DVector::zeros(lam.len());
            for (c, w) in d.cones.iter().zip(&scalings) {
                w.apply(
                    cone_slice(&aff.s, c),
                    &mut ws_a.as_mut_slice()[c.range()],
                    true,
                );
                w.apply(
                    cone_slice(&aff.z, c),
                    &mut wz_a.as_mut_slice()[c.range()],
                    false,
                );
            }
            let mut ds_cc = -&lam_lam - self.circ_all(&ws_a, &wz_a);
            for c in &d.cones {
                ds_cc[c.offset] += sigma * mu;
            }
            let dk_cc = -it.tau * it.kappa + sigma * mu - aff.tau * aff.kappa;
            let dir = self.direction(
                &kkt,
                &scalings,
                &lam,
                &it,
                &rx,
                &ry,
                &rz,
                rt,
                1.0 - sigma,
                &ds_cc,
                dk_cc,
                &x2,
                &y2,
                &z2,
            );
            let alpha = (cfg.fraction_to_boundary * self.step_length(&it, &dir)).min(1.0);
            if !alpha.is_finite() || alpha < 1e-12 {
                stalls += 1;
                if stalls > 2 {
                    return self.finish(&it, SolveStatus::NumericalFailure, iter, res, pobj, dobj);
                }
            } else {
                stalls = 0;
            }
            it.x += &dir.x * alpha;
            it.y += &dir.y * alpha;
            it.z += &dir.z * alpha;
            it.s += &dir.s * alpha;
            it.tau += alpha * dir.tau;
            it.kappa += alpha * dir.kappa;
            if !(it.tau > 0.0 && it.kappa > 0.0) || it.x.iter().any(|v| !v.is_finite()) {
                return self.finish(
                    &it,
                    SolveStatus::NumericalFailure,
                    iter + 1,
                    res,
                    pobj,
                    dobj,
                );
            }
        }
        unreachable!()
    }

    #[allow(clippy::too_many_arguments)]
    fn check(
        &self,
        it: &Iterate,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &DVector<f64>,
        cx: f64,
        by_hz: f64,
        sz: f64,
        norm_bh: f64,
        norm_c: f64,
    ) -> (Check, Residuals, f64, f64) {
        let cfg = self.cfg;
        let d = self.d;
        let tau = it.tau;
        let pres = (ry.norm_squared() + rz.norm_squared()).sqrt() / tau / (1.0 + norm_bh);
        let dres = rx.norm() / tau / (1.0 + norm_c);
        let pobj = cx / tau;
        let dobj = -by_hz / tau;
        let gap = ((pobj - dobj).abs()).max(sz / (tau * tau)) / (1.0 + pobj.abs());
        let res = Residuals {
            primal: pres,
            dual: dres,
            gap,
        };
        if pres <= cfg.tol_feas
            && dres <= cfg.tol_feas
            && gap <= cfg.tol_gap
            && d.violation(&(&it.x / tau)) <= cfg.tol_feas
        {
            return (Check::Done(SolveStatus::Optimal), res, pobj, dobj);
        }
        if it.kappa > it.tau {
            // Farkas rays
            if by_hz < 0.0 {
                let ray = (d.a.tr_mul(&it.y) + d.g.tr_mul(&it.z)).norm() / (-by_hz);
                if ray <= cfg.tol_feas {
                    return (Check::Done(SolveStatus::PrimalInfeasible), res, pobj, dobj);
                }
            }
            if cx < 0.0 {
                let ray = ((&d.a * &it.x).norm_squared() + (&d.g * &it.x + &it.s).norm_squared())
                    .sqrt()
                    / (-cx);
                if ray <= cfg.tol_feas {
                    return (Check::Done(SolveStatus::DualInfeasible), res, pobj, dobj);
                }
            }
        }
        (Check::Continue, res, pobj, dobj)
    }

    fn finish(
        &self,
        it: &Iterate,
        status: SolveStatus,
        iterations: usize,
        residuals: Residuals,
        pobj: f64,
        dobj: f64,
    ) -> Solution {
        let d = self.d;
        let scale = match status {
            SolveStatus::PrimalInfeasible | SolveStatus::DualInfeasible => 1.0,
            _ => 1.0 / it.tau,
        };
        let z = &it.z * scale;
        Solution {
            status,
            x: (&it.x * scale).iter().cloned().collect(),
            y: (&it.y * scale).iter().cloned().collect(),
            z: d.cones.iter().map(|c| cone_slice(&z, c).to_vec()).collect(),
            objective: pobj,
            dual_objective: dobj,
            iterations,
            residuals,
        }
    }

    fn circ_all(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(u.len());
        for c in &self.d.cones {
            cones::circ(
                c.kind,
                cone_slice(u, c),
                cone_slice(v, c),
                &mut out.as_mut_slice()[c.range()],
            );
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        kkt: &Kkt,
        scalings: &[Scaling],
        lam: &DVector<f64>,
        it: &Iterate,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &DVector<f64>,
        rt: f64,
        factor: f64,
        ds_target: &DVector<f64>,
        dk_target: f64,
        x2: &DVector<f64>,
        y2: &DVector<f64>,
        z2: &DVector<f64>,
    ) -> Direction {
        let d = self.d;
        // λ \ d_s and W(λ \ d_s)
        let mut lam_ds = DVector::zeros(lam.len());
        let mut w_lam_ds = DVector::zeros(lam.len());
        for (c, w) in d.cones.iter().zip(scalings) {
            let r = c.range();
            cones::inv_circ(
                c.kind,
                cone_slice(lam, c),
                cone_slice(ds_target, c),
                &mut lam_ds.as_mut_slice()[r.clone()],
            );
            w.apply(
                &lam_ds.as_slice()[r.clone()],
                &mut w_lam_ds.as_mut_slice()[r],
                false,
            );
        }
        let r1 = -rx * factor;
        let r2 = ry * factor;
        let r3 = rz * factor - &w_lam_ds;
        let (x1, y1, z1) = kkt.solve(&r1, &r2, &r3);
        let num = -factor * rt + dk_target / it.tau + d.c.dot(&x1) + d.b.dot(&y1) + d.h.dot(&z1);
        let den = it.kappa / it.tau - d.c.dot(x2) - d.b.dot(y2) - d.h.dot(z2);
        let dtau = num / den;
        let dx = x1 + x2 * dtau;
        let dy = y1 + y2 * dtau;
        let dz = z1 + z2 * dtau;
        // ds = W(λ\d_s − W dz)
        let mut ds = DVector::zeros(lam.len());
        let mut tmp = vec![0.0; 0];
        let mut wdz = vec![0.0; 0];
        for (c, w) in d.cones.iter().zip(scalings) {
            let r = c.range();
            wdz.resize(c.dim, 0.0);
            tmp.resize(c.dim, 0.0);
            w.apply(cone_slice(&dz, c), &mut wdz, false);
            for (i, t) in tmp.iter_mut().enumerate() {
                *t = lam_ds[c.offset + i] - wdz[i];
            }
            w.apply(&tmp, &mut ds.as_mut_slice()[r], false);
        }
        let dkappa = (dk_target - it.kappa * dtau) / it.tau;
        Direction {
            x: dx,
            y: dy,
            z: dz,
            s: ds,
            tau: dtau,
            kappa: dkappa,
        }
    }

    fn step_length(&self, it: &Iterate, dir: &Direction) -> f64 {
        let mut alpha = max_step_all(&it.s, &dir.s, &self.d.cones).min(max_step_all(
            &it.z,
            &dir.z,
            &self.d.cones,
        ));
        if dir.tau < 0.0 {
            alpha = alpha.min(-it.tau / dir.tau);
        }
        if dir.kappa < 0.0 {
            alpha = alpha.min(-it.kappa / dir.kappa);
        }
        alpha
    }
}
