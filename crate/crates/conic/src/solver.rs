//! Homogeneous self-dual primal-dual interior-point method with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector.
//!
//! Internally the problem is the minimization
//!
//! ```text
//! minimize  c' x   s.t.  A x = b,  G x + s = h,  s in K
//! ```
//!
//! with `c = -objective`.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::cones::{ConeSet, Scaling, WOp};
use crate::problem::ConicProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Relative tolerance on residuals and duality gap.
    pub tol: f64,
    /// Tolerance for infeasibility certificates.
    pub feas_tol: f64,
    pub max_iters: usize,
    pub step_fraction: f64,
    pub static_reg: f64,
    pub refine_steps: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: 1e-7,
            feas_tol: 1e-7,
            max_iters: 100,
            step_fraction: 0.99,
            static_reg: 1e-9,
            refine_steps: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

/// Per-iteration record, kept so runs can be compared exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterLog {
    pub mu: f64,
    pub gap: f64,
    pub pres: f64,
    pub dres: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: Status,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
    /// Objective of the maximization at `x`, offset included.
    pub primal_objective: f64,
    /// Dual bound for the maximization, offset included.
    pub dual_objective: f64,
    pub gap: f64,
    pub rel_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub solve_time: Duration,
    pub history: Vec<IterLog>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

struct Kkt<'a> {
    a: &'a DMatrix<f64>,
    g: &'a DMatrix<f64>,
    cones: &'a ConeSet,
    scaling: Option<&'a [Scaling]>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    ghat: DMatrix<f64>,
    reg: f64,
    refine: usize,
}

impl<'a> Kkt<'a> {
    fn factor(
        a: &'a DMatrix<f64>,
        g: &'a DMatrix<f64>,
        cones: &'a ConeSet,
        scaling: Option<&'a [Scaling]>,
        reg: f64,
        refine: usize,
    ) -> Option<Self> {
        let n = g.ncols();
        let p = a.nrows();
        let ghat = match scaling {
            Some(sc) => cones.scale_columns_inv_t(sc, g),
            None => g.clone(),
        };
        let mut k = DMatrix::zeros(n + p, n + p);
        k.view_mut((0, 0), (n, n)).copy_from(&(ghat.transpose() * &ghat));
        for i in 0..n {
            k[(i, i)] += reg;
        }
        k.view_mut((0, n), (n, p)).copy_from(&a.transpose());
        k.view_mut((n, 0), (p, n)).copy_from(a);
        for i in 0..p {
            k[(n + i, n + i)] = -reg;
        }
        if !k.iter().all(|v| v.is_finite()) {
            return None;
        }
        let lu = k.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Kkt { a, g, cones, scaling, lu, ghat, reg, refine })
    }

    fn w(&self, op: WOp, u: &DVector<f64>) -> DVector<f64> {
        match self.scaling {
            Some(sc) => self.cones.apply_vec(sc, op, u),
            None => u.clone(),
        }
    }

    fn reduced(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let n = self.g.ncols();
        let p = self.a.nrows();
        let t3 = self.w(WOp::InvT, r3);
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&(r1 + self.ghat.transpose() * &t3));
        rhs.rows_mut(n, p).copy_from(r2);
        let sol = self.lu.solve(&rhs)?;
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, p).into_owned();
        let dz = self.w(WOp::Inv, &(&self.ghat * &dx - t3));
        Some((dx, dy, dz))
    }

    /// Solve `[0 A' G'; A 0 0; G 0 -W'W] d = r` with iterative refinement.
    fn solve(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (mut dx, mut dy, mut dz) = self.reduced(r1, r2, r3)?;
        for _ in 0..self.refine {
            let e1 = r1 - (self.a.transpose() * &dy + self.g.transpose() * &dz);
            let e2 = r2 - self.a * &dx;
            let wtw = self.w(WOp::WT, &self.w(WOp::W, &dz));
            let e3 = r3 - (self.g * &dx - wtw);
            let scale = 1.0 + r1.amax().max(r2.amax()).max(r3.amax());
            let err = e1.amax().max(e2.amax()).max(e3.amax());
            if err <= 1e-15 * scale || self.reg == 0.0 && err == 0.0 {
                break;
            }
            let (cx, cy, cz) = self.reduced(&e1, &e2, &e3)?;
            dx += cx;
            dy += cy;
            dz += cz;
        }
        if dx.iter().chain(dy.iter()).chain(dz.iter()).all(|v| v.is_finite()) {
            Some((dx, dy, dz))
        } else {
            None
        }
    }
}

fn norm_pair(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.norm_squared() + b.norm_squared()).sqrt()
}

/// Solve a conic program. Never panics on numerical trouble; the returned
/// status says how far the iteration got.
pub fn solve(problem: &ConicProblem, settings: &Settings) -> ConicSolution {
    let start = Instant::now();
    let n = problem.num_vars();
    let p = problem.num_eq();
    let cones = ConeSet::new(&problem.cones);
    let m = cones.dim();
    let a = &problem.a;
    let g = &problem.g;
    let b = &problem.b;
    let h = &problem.h;
    let c = -&problem.objective;

    let mut history = Vec::new();
    let finish = |status: Status,
                  x: DVector<f64>,
                  y: DVector<f64>,
                  z: DVector<f64>,
                  s: DVector<f64>,
                  tau: f64,
                  iters: usize,
                  history: Vec<IterLog>| {
        let scale = match status {
            Status::Infeasible | Status::Unbounded => 1.0,
            _ if tau > 0.0 => tau,
            _ => 1.0,
        };
        let (x, y, z, s) = (x / scale, y / scale, z / scale, s / scale);
        let pcost = c.dot(&x);
        let dcost = -(b.dot(&y) + h.dot(&z));
        let gap = s.dot(&z);
        let rel_gap = rel_gap(gap, pcost, dcost);
        let pres = norm_pair(&(g * &x + &s - h), &(a * &x - b)) / norm_pair(h, b).max(1.0);
        let dres = (a.transpose() * &y + g.transpose() * &z + &c).norm() / c.norm().max(1.0);
        ConicSolution {
            status,
            primal_objective: -pcost + problem.objective_offset,
            dual_objective: -dcost + problem.objective_offset,
            gap,
            rel_gap,
            primal_residual: pres,
            dual_residual: dres,
            iterations: iters,
            solve_time: start.elapsed(),
            history,
            x,
            y,
            z,
            s,
        }
    };

    if problem.validate().is_err() {
        return finish(
            Status::NumericalFailure,
            DVector::zeros(n),
            DVector::zeros(p),
            DVector::zeros(m),
            DVector::zeros(m),
            1.0,
            0,
            history,
        );
    }

    // Starting point from two least-squares solves with W = I.
    let e = cones.unit();
    let init = Kkt::factor(a, g, &cones, None, settings.static_reg, settings.refine_steps)
        .and_then(|k| {
            let primal = k.solve(&DVector::zeros(n), b, h)?;
            let dual = k.solve(&(-&c), &DVector::zeros(p), &DVector::zeros(m))?;
            Some((primal, dual))
        });
    let Some(((mut x, _, zp), (_, mut y, mut z))) = init else {
        return finish(
            Status::NumericalFailure,
            DVector::zeros(n),
            DVector::zeros(p),
            e.clone(),
            e.clone(),
            1.0,
            0,
            history,
        );
    };
    let mut s = -zp;
    let shift_s = cones.margin(&s);
    if shift_s <= 0.0 || !shift_s.is_finite() {
        s += &e * (1.0 - shift_s.min(0.0));
    }
    let shift_z = cones.margin(&z);
    if shift_z <= 0.0 || !shift_z.is_finite() {
        z += &e * (1.0 - shift_z.min(0.0));
    }
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let resx0 = c.norm().max(1.0);
    let resy0 = norm_pair(h, b).max(1.0);
    let degree = cones.degree() as f64 + 1.0;
    let mut status = Status::MaxIterations;
    let mut iters = 0;

    for it in 0..=settings.max_iters {
        iters = it;
        // residuals
        let r1 = a.transpose() * &y + g.transpose() * &z + &c * tau;
        let r2 = a * &x - b * tau;
        let r3 = &s + g * &x - h * tau;
        let cx = c.dot(&x);
        let by_hz = b.dot(&y) + h.dot(&z);
        let r4 = kappa + cx + by_hz;

        let sz = s.dot(&z);
        let mu = (sz + tau * kappa) / degree;
        let pcost = cx / tau;
        let dcost = -by_hz / tau;
        let gap = sz / (tau * tau);
        let rgap = rel_gap(gap, pcost, dcost);
        let pres = norm_pair(&r3, &r2) / tau / resy0;
        let dres = r1.norm() / tau / resx0;
        if !(mu.is_finite() && pres.is_finite() && dres.is_finite()) {
            status = Status::NumericalFailure;
            break;
        }

        if pres <= settings.tol && dres <= settings.tol && gap.min(rgap) <= settings.tol {
            status = Status::Optimal;
            break;
        }
        if by_hz < 0.0 {
            let pinf = (a.transpose() * &y + g.transpose() * &z).norm() / resx0 / -by_hz;
            if pinf <= settings.feas_tol {
                let sc = -by_hz;
                status = Status::Infeasible;
                y /= sc;
                z /= sc;
                break;
            }
        }
        if cx < 0.0 {
            let dinf = norm_pair(&(g * &x + &s), &(a * &x)) / resy0 / -cx;
            if dinf <= settings.feas_tol {
                let sc = -cx;
                status = Status::Unbounded;
                x /= sc;
                s /= sc;
                break;
            }
        }
        if it == settings.max_iters {
            break;
        }

        let Some(sc) = cones.nt_scaling(&s, &z) else {
            status = Status::NumericalFailure;
            break;
        };
        let lambda = cones.lambda(&sc);
        let Some(kkt) =
            Kkt::factor(a, g, &cones, Some(&sc), settings.static_reg, settings.refine_steps)
        else {
            status = Status::NumericalFailure;
            break;
        };
        let Some(d1) = kkt.solve(&(-&c), b, h) else {
            status = Status::NumericalFailure;
            break;
        };
        let pd = |d: &(DVector<f64>, DVector<f64>, DVector<f64>)| {
            c.dot(&d.0) + b.dot(&d.1) + h.dot(&d.2)
        };
        let p1 = pd(&d1);

        // One Newton solve given the scaled complementarity target q (with
        // lambda o (ds + dz) = rhs_c, q = lambda \ rhs_c) and rhs_tau.
        let newton = |eta: f64, q: &DVector<f64>, rhs_tau: f64| {
            let wtq = kkt.w(WOp::WT, q);
            let d0 = kkt.solve(&(&r1 * -eta), &(&r2 * -eta), &(&r3 * -eta - wtq))?;
            let dtau = (-eta * r4 - rhs_tau / tau - pd(&d0)) / (p1 - kappa / tau);
            let dx = &d0.0 + &d1.0 * dtau;
            let dy = &d0.1 + &d1.1 * dtau;
            let dz = &d0.2 + &d1.2 * dtau;
            let dz_s = kkt.w(WOp::W, &dz);
            let ds_s = q - &dz_s;
            let dkappa = (rhs_tau - kappa * dtau) / tau;
            Some((dx, dy, dz, dz_s, ds_s, dtau, dkappa))
        };
        let max_step = |ds_s: &DVector<f64>, dz_s: &DVector<f64>, dtau: f64, dkappa: f64| {
            let mut amax = cones.max_step(&sc, ds_s).min(cones.max_step(&sc, dz_s));
            if dtau < 0.0 {
                amax = amax.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                amax = amax.min(-kappa / dkappa);
            }
            amax
        };

        // predictor
        let q_aff = -&lambda;
        let Some((_, _, _, dz_a, ds_a, dtau_a, dkappa_a)) = newton(1.0, &q_aff, -tau * kappa)
        else {
            status = Status::NumericalFailure;
            break;
        };
        let alpha_aff = max_step(&ds_a, &dz_a, dtau_a, dkappa_a).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        // corrector
        let eta = 1.0 - sigma;
        let rhs_c = -cones.jordan_prod(&lambda, &lambda) + &e * (sigma * mu)
            - cones.jordan_prod(&ds_a, &dz_a);
        let q = cones.jordan_div(&sc, &rhs_c);
        let rhs_tau = -tau * kappa + sigma * mu - dtau_a * dkappa_a;
        let Some((dx, dy, dz, dz_s, ds_s, dtau, dkappa)) = newton(eta, &q, rhs_tau) else {
            status = Status::NumericalFailure;
            break;
        };
        let amax = max_step(&ds_s, &dz_s, dtau, dkappa);
        let alpha = (settings.step_fraction * amax).min(1.0);
        if !(alpha > 1e-12) {
            history.push(IterLog { mu, gap, pres, dres, step: alpha });
            status = Status::NumericalFailure;
            break;
        }
        history.push(IterLog { mu, gap, pres, dres, step: alpha });

        let ds = kkt.w(WOp::WT, &ds_s);
        x += &dx * alpha;
        y += &dy * alpha;
        z += &dz * alpha;
        s += &ds * alpha;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }

    finish(status, x, y, z, s, tau, iters, history)
}

fn rel_gap(gap: f64, pcost: f64, dcost: f64) -> f64 {
    if pcost < 0.0 {
        gap / -pcost
    } else if dcost > 0.0 {
        gap / dcost
    } else {
        f64::INFINITY
    }
}
