//! Alternating optimization of beams and antenna positions.
//!
//! Each outer iteration makes one SCA pass over the beamforming subproblem
//! and one over the position subproblem, slot by slot. Candidates are
//! re-evaluated with the exact worst-case formulas of [`crate::certify`] and
//! only accepted when the slot's certified sum rate does not drop, so the
//! objective trace is monotone by construction.
//!
//! Inside the subproblems every user is normalized: channel estimate scaled
//! to unit norm, beams scaled by `1/sqrt(P_max)`, and radius and noise scaled
//! accordingly. SINR values are unaffected.

use std::time::Instant;

use conic::{solve, CLinExpr, ConicSolution, LinExpr, ProblemBuilder, Settings, Status, Var};
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::certify::{certify_slot, slot_objective, Certified};
use crate::model::{repair_positions, uniform_positions, CVector, DesignPoint, ScenarioState};
use crate::surrogate::{
    beamforming_signal_lmi, const_cvec, cos_quadratic_surrogate, dotc_const,
    interference_lmi, interference_lmi_from_products, log_minorant, s_procedure_lmi,
    steering_linearizations,
};

/// Normalized radius below which the robust blocks are replaced by their
/// nominal counterparts (the S-procedure needs an unbounded multiplier at 0).
pub const XI_NEGLIGIBLE: f64 = 1e-10;
/// A slot whose displacement cap has shrunk below this fraction of the
/// initial cap no longer holds the run open after a rejected position step.
pub const MIN_CAP_FRACTION: f64 = 1e-3;
/// Floor on the local SINR used by the bilinear bound.
pub const SINR_FLOOR: f64 = 1e-6;

/// How the concave rate objective is handed to the conic solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveModel {
    /// Exact: per slot, maximize the geometric mean of `1 + sinr_k`
    /// through a tower of rotated second-order cones.
    GeoMean,
    /// Quadratic minorant of each `log2(1 + sinr_k)`, tight at the local point.
    LogMinorant,
}

#[derive(Debug, Clone)]
pub struct AoOptions {
    /// Stop when the objective changes by at most this much.
    pub epsilon: f64,
    pub max_iters: usize,
    pub solver: Settings,
    pub objective: ObjectiveModel,
    pub optimize_beams: bool,
    pub optimize_positions: bool,
    /// Per-iteration displacement cap, in wavelengths.
    pub displacement_cap: f64,
    pub parallel: bool,
}

impl Default for AoOptions {
    fn default() -> Self {
        AoOptions {
            epsilon: 1e-4,
            max_iters: 30,
            solver: Settings::default(),
            objective: ObjectiveModel::GeoMean,
            optimize_beams: true,
            optimize_positions: true,
            displacement_cap: 0.25,
            parallel: true,
        }
    }
}

/// Slack values of one user in one slot. `alpha` and `beta` are in watts;
/// `lambda`, `varpi` and `rho` are in the normalized units of the subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserSlack {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub varpi: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackState {
    /// Indexed `[n][k]`.
    pub users: Vec<Vec<UserSlack>>,
    /// SCA local points.
    pub local_beams: Vec<Vec<CVector>>,
    pub local_positions: Vec<Vec<f64>>,
    /// Slots whose certified SINR had to be floored or whose solves failed.
    pub restoration: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Accepted,
    /// Solved, but the certified objective would have dropped.
    Rejected,
    /// Nothing to optimize (frozen feasible set).
    Skipped,
    /// No usable solver output even after restoration.
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotStep {
    pub status: StepStatus,
    pub solver_status: Option<Status>,
    pub solver_iterations: usize,
    pub seconds: f64,
    pub restored: bool,
    pub objective_before: f64,
    pub objective_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    /// Wall time since the start of the run.
    pub elapsed: f64,
    pub beam_steps: Vec<SlotStep>,
    pub position_steps: Vec<SlotStep>,
    /// `||x_new - x_old||` per slot.
    pub step_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoTrace {
    pub initial_objective: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub flagged_slots: Vec<usize>,
}

impl AoTrace {
    /// Objective at initialization followed by every outer iteration.
    pub fn objectives(&self) -> Vec<f64> {
        std::iter::once(self.initial_objective).chain(self.iterations.iter().map(|r| r.objective)).collect()
    }

    pub fn final_objective(&self) -> f64 {
        self.iterations.last().map_or(self.initial_objective, |r| r.objective)
    }
}

/// Uniform positions, equal-power matched filters using 90% of the budget,
/// and slacks from the nominal channel with worst-case margins.
pub fn initialize(scenario: &ScenarioState) -> (DesignPoint, SlackState) {
    let c = &scenario.config;
    let k_n = scenario.num_users();
    let x = uniform_positions(c);
    let per_user = (0.9 * c.max_power / k_n as f64).sqrt();
    let mut beams = Vec::with_capacity(scenario.num_slots());
    let mut users = Vec::with_capacity(scenario.num_slots());
    let mut restoration = Vec::with_capacity(scenario.num_slots());
    for n in 0..scenario.num_slots() {
        let slot_beams: Vec<CVector> = (0..k_n)
            .map(|k| {
                let h = scenario.est_channel(n, k, &x);
                h.map(|v| v * (per_user / h.norm()))
            })
            .collect();
        let mut flag = false;
        let slot_users = (0..k_n)
            .map(|k| {
                let u = &scenario.slots[n][k];
                let h = scenario.est_channel(n, k, &x);
                let w = &slot_beams[k];
                let margin = h.dotc(w).norm() - u.xi * w.norm();
                let alpha = if margin > 0.0 { margin * margin } else { 0.0 };
                let mut interf = 0.0;
                let mut wnorm2 = 0.0;
                for (j, wj) in slot_beams.iter().enumerate() {
                    if j != k {
                        interf += h.dotc(wj).norm_sqr();
                        wnorm2 += wj.norm_squared();
                    }
                }
                let beta = u.noise + (interf.sqrt() + u.xi * wnorm2.sqrt()).powi(2);
                let mut gamma = alpha / beta;
                if gamma < SINR_FLOOR {
                    gamma = SINR_FLOOR;
                    flag = true;
                }
                let a = crate::model::steering_with_rate(&x, u.phase_rate);
                UserSlack { alpha, beta, gamma, lambda: 1e-6, varpi: 1e-6, rho: a.dotc(w).norm_sqr() }
            })
            .collect();
        beams.push(slot_beams);
        users.push(slot_users);
        restoration.push(flag);
    }
    let positions = vec![x; scenario.num_slots()];
    let slack = SlackState {
        users,
        local_beams: beams.clone(),
        local_positions: positions.clone(),
        restoration,
    };
    (DesignPoint { beams, positions }, slack)
}

/// Per-user data of one slot in normalized units.
struct UserLocal {
    /// Normalization `||h||^2 P_max`.
    nu: f64,
    h: CVector,
    xi: f64,
    noise: f64,
    beta0: f64,
    gamma0: f64,
    rate: f64,
}

fn slot_locals(
    scenario: &ScenarioState,
    n: usize,
    x: &[f64],
    cert: &[Certified],
    shrink: f64,
) -> Vec<UserLocal> {
    let p = scenario.config.max_power;
    (0..scenario.num_users())
        .map(|k| {
            let u = &scenario.slots[n][k];
            let h = scenario.est_channel(n, k, x);
            let hn = h.norm();
            let nu = hn * hn * p;
            UserLocal {
                nu,
                h: h.map(|v| v / hn),
                xi: u.xi / hn,
                noise: u.noise / nu,
                beta0: cert[k].beta / nu,
                gamma0: (cert[k].sinr * shrink).max(SINR_FLOOR),
                rate: u.phase_rate,
            }
        })
        .collect()
}

struct RateVars {
    a: Var,
    b: Var,
    g: Var,
    sa: f64,
    sb: f64,
    sg: f64,
}

impl RateVars {
    fn alpha(&self) -> LinExpr {
        LinExpr::term(self.a, self.sa)
    }
    fn beta(&self) -> LinExpr {
        LinExpr::term(self.b, self.sb)
    }
}

/// Variables `alpha, beta, gamma` (scaled by their local values) and the
/// bilinear bound `alpha >= (beta0/gamma0 gamma^2 + gamma0/beta0 beta^2) / 2`.
fn add_rate_vars(pb: &mut ProblemBuilder, k: usize, loc: &UserLocal) -> RateVars {
    let a = pb.var(format!("alpha_{k}"));
    let b = pb.var(format!("beta_{k}"));
    let g = pb.var(format!("gamma_{k}"));
    let (sg, sb) = (loc.gamma0, loc.beta0);
    let sa = sg * sb;
    pb.nonneg(LinExpr::var(g));
    // with these scales the bound reads ||(g, b)||^2 <= 2 a
    pb.sum_squares_le(vec![LinExpr::var(g), LinExpr::var(b)], LinExpr::term(a, 2.0));
    RateVars { a, b, g, sa, sb, sg }
}

fn add_objective(pb: &mut ProblemBuilder, rates: &[RateVars], locs: &[UserLocal], model: ObjectiveModel) {
    match model {
        ObjectiveModel::GeoMean => {
            // u_k = (1 + gamma_k) / (1 + gamma0_k), equal to 1 at the local point
            let items: Vec<LinExpr> = rates
                .iter()
                .zip(locs)
                .map(|(r, l)| {
                    let mut e = LinExpr::term(r.g, r.sg / (1.0 + l.gamma0));
                    e.add_constant(1.0 / (1.0 + l.gamma0));
                    e
                })
                .collect();
            let t = pb.var("t");
            geomean_hypograph(pb, items, t);
            pb.maximize(LinExpr::var(t));
        }
        ObjectiveModel::LogMinorant => {
            let mut obj = LinExpr::zero();
            for (k, (r, l)) in rates.iter().zip(locs).enumerate() {
                let q = log_minorant(l.gamma0).expect("local SINR is floored positive");
                let s = pb.var(format!("gsq_{k}"));
                pb.sum_squares_le(vec![LinExpr::var(r.g)], LinExpr::var(s));
                obj.add_constant(q.c0);
                obj.add_term(r.g, q.c1 * r.sg);
                obj.add_term(s, q.c2 * r.sg * r.sg);
            }
            pb.maximize(obj);
        }
    }
}

/// `t^K <= prod items`, via a binary tree of `c^2 <= a b` padded with `t`.
fn geomean_hypograph(pb: &mut ProblemBuilder, items: Vec<LinExpr>, t: Var) {
    if items.len() == 1 {
        pb.ge(items[0].clone(), LinExpr::var(t));
        return;
    }
    let size = items.len().next_power_of_two();
    let mut level = items;
    while level.len() < size {
        level.push(LinExpr::var(t));
    }
    let mut depth = 0;
    while level.len() > 2 {
        let mut next = Vec::with_capacity(level.len() / 2);
        for (i, pair) in level.chunks(2).enumerate() {
            let c = pb.var(format!("gm_{depth}_{i}"));
            pb.rotated_soc(pair[0].clone(), pair[1].clone(), vec![LinExpr::var(c)]);
            next.push(LinExpr::var(c));
        }
        level = next;
        depth += 1;
    }
    pb.rotated_soc(level[0].clone(), level[1].clone(), vec![LinExpr::var(t)]);
}

/// Scale of the S-procedure multiplier: at the optimum it is about
/// `|h^H w| ||w|| / xi`.
fn lambda_scale(h: &CVector, w: &CVector, xi: f64) -> f64 {
    (h.dotc(w).norm() * w.norm() / xi).clamp(1e-6, 1e12)
}

fn usable(sol: &ConicSolution) -> bool {
    let finite = sol.x.iter().all(|v| v.is_finite());
    finite
        && match sol.status {
            Status::Optimal => true,
            Status::MaxIterations | Status::NumericalFailure => sol.primal_residual <= 1e-6,
            Status::Infeasible | Status::Unbounded => false,
        }
}

struct Solved<T> {
    value: T,
    slack: Vec<UserSlack>,
    status: Status,
    iterations: usize,
}

fn read_slack(
    sol: &ConicSolution,
    rates: &[RateVars],
    locs: &[UserLocal],
    lam: &[Option<(Var, f64)>],
    varpi: &[Option<(Var, f64)>],
    rho: &[Option<Var>],
) -> Vec<UserSlack> {
    let v = |var: Var| sol.x[var.index()];
    rates
        .iter()
        .enumerate()
        .map(|(k, r)| UserSlack {
            alpha: v(r.a) * r.sa * locs[k].nu,
            beta: v(r.b) * r.sb * locs[k].nu,
            gamma: v(r.g) * r.sg,
            lambda: lam[k].map_or(0.0, |(l, s)| v(l) * s),
            varpi: varpi[k].map_or(0.0, |(p, s)| v(p) * s),
            rho: rho[k].map_or(0.0, v),
        })
        .collect()
}

fn cvar(pb: &mut ProblemBuilder, name: String) -> (CLinExpr, Var, Var) {
    let re = pb.var(format!("{name}_re"));
    let im = pb.var(format!("{name}_im"));
    (CLinExpr::new(LinExpr::var(re), LinExpr::var(im)), re, im)
}

fn solve_beam_problem(
    scenario: &ScenarioState,
    beams: &[CVector],
    locs: &[UserLocal],
    opts: &AoOptions,
) -> Option<Solved<Vec<CVector>>> {
    let k_n = beams.len();
    let m = scenario.config.num_antennas;
    let sp = scenario.config.max_power.sqrt();
    let w0: Vec<CVector> = beams.iter().map(|w| w.map(|v| v / sp)).collect();
    let mut pb = ProblemBuilder::new();
    let mut wexpr: Vec<Vec<CLinExpr>> = Vec::with_capacity(k_n);
    let mut wvars: Vec<Vec<(Var, Var)>> = Vec::with_capacity(k_n);
    for k in 0..k_n {
        let mut row = Vec::with_capacity(m);
        let mut vars = Vec::with_capacity(m);
        for p in 0..m {
            let (e, re, im) = cvar(&mut pb, format!("w_{k}_{p}"));
            row.push(e);
            vars.push((re, im));
        }
        wexpr.push(row);
        wvars.push(vars);
    }
    // total power
    let all: Vec<LinExpr> = wexpr.iter().flatten().flat_map(|e| [e.re.clone(), e.im.clone()]).collect();
    pb.soc(LinExpr::constant(1.0), all);

    let mut rates = Vec::with_capacity(k_n);
    let mut lam = Vec::with_capacity(k_n);
    let mut varpi = Vec::with_capacity(k_n);
    for (k, loc) in locs.iter().enumerate() {
        let r = add_rate_vars(&mut pb, k, loc);
        // worst-case signal power
        if loc.xi > XI_NEGLIGIBLE {
            let l = pb.var(format!("lambda_{k}"));
            let sl = lambda_scale(&loc.h, &w0[k], loc.xi);
            pb.nonneg(LinExpr::var(l));
            let blk = beamforming_signal_lmi(&wexpr[k], &loc.h, loc.xi, r.alpha(), LinExpr::term(l, sl), &w0[k])
                .expect("signal block is Hermitian by construction");
            let mut d = vec![1.0 / sl.sqrt(); m];
            d.push(1.0 / r.sa.sqrt());
            blk.congruence(&d).add_to(&mut pb);
            lam.push(Some((l, sl)));
        } else {
            // alpha <= h^H W h = 2 Re((h^H w)(w0^H h)) - |h^H w0|^2
            let hw0 = loc.h.dotc(&w0[k]);
            let hw = dotc_const(&loc.h, &wexpr[k]);
            let mut e = hw.scaled(hw0.conj()).re * 2.0;
            e.add_constant(-hw0.norm_sqr());
            e.axpy(-1.0, &r.alpha());
            pb.nonneg(e * (1.0 / r.sa));
            lam.push(None);
        }
        // worst-case interference
        let others: Vec<Vec<CLinExpr>> =
            (0..k_n).filter(|&j| j != k).map(|j| wexpr[j].clone()).collect();
        if others.is_empty() {
            pb.nonneg((r.beta() - LinExpr::constant(loc.noise)) * (1.0 / r.sb));
            varpi.push(None);
        } else if loc.xi <= XI_NEGLIGIBLE {
            let inv = 1.0 / r.sb.sqrt();
            let terms: Vec<LinExpr> = others
                .iter()
                .flat_map(|w| {
                    let p = dotc_const(&loc.h, w);
                    [p.re * inv, p.im * inv]
                })
                .collect();
            pb.sum_squares_le(terms, (r.beta() - LinExpr::constant(loc.noise)) * (1.0 / r.sb));
            varpi.push(None);
        } else {
            let p = pb.var(format!("varpi_{k}"));
            let w_other_norm: f64 = (0..k_n).filter(|&j| j != k).map(|j| w0[j].norm_squared()).sum::<f64>().sqrt();
            let spv = (loc.xi * w_other_norm * loc.beta0.sqrt()).max(1e-6 * loc.beta0).max(1e-12);
            pb.nonneg(LinExpr::var(p));
            let blk = interference_lmi(&others, &loc.h, loc.xi, r.beta(), LinExpr::term(p, spv), loc.noise)
                .expect("interference block is Hermitian by construction");
            let mut d = vec![1.0 / r.sb.sqrt()];
            d.extend(std::iter::repeat_n(1.0, others.len()));
            d.extend(std::iter::repeat_n(1.0 / spv.sqrt(), m));
            blk.congruence(&d).add_to(&mut pb);
            varpi.push(Some((p, spv)));
        }
        rates.push(r);
    }
    add_objective(&mut pb, &rates, locs, opts.objective);
    let problem = pb.build();
    let sol = solve(&problem, &opts.solver);
    if !usable(&sol) {
        return None;
    }
    let mut out: Vec<CVector> = wvars
        .iter()
        .map(|vars| {
            DVector::from_iterator(
                m,
                vars.iter().map(|&(re, im)| Complex64::new(sol.x[re.index()], sol.x[im.index()]) * sp),
            )
        })
        .collect();
    // the solver meets the power constraint only up to its tolerance
    let power: f64 = out.iter().map(|w| w.norm_squared()).sum();
    let pmax = scenario.config.max_power;
    if power > pmax {
        let s = (pmax / power).sqrt();
        for w in &mut out {
            *w *= Complex64::from(s);
        }
    }
    let slack = read_slack(&sol, &rates, locs, &lam, &varpi, &vec![None; k_n]);
    Some(Solved { value: out, slack, status: sol.status, iterations: sol.iterations })
}

fn solve_position_problem(
    scenario: &ScenarioState,
    beams: &[CVector],
    x0: &[f64],
    cap: f64,
    locs: &[UserLocal],
    opts: &AoOptions,
) -> Option<Solved<Vec<f64>>> {
    let c = &scenario.config;
    let k_n = beams.len();
    let m = c.num_antennas;
    let lw = c.wavelength;
    let sp = c.max_power.sqrt();
    let w: Vec<CVector> = beams.iter().map(|b| b.map(|v| v / sp)).collect();
    let mut pb = ProblemBuilder::new();
    let u: Vec<Var> = (0..m).map(|i| pb.var(format!("u_{i}"))).collect();
    let x: Vec<LinExpr> = (0..m)
        .map(|i| {
            let mut e = LinExpr::term(u[i], lw);
            e.add_constant(x0[i]);
            e
        })
        .collect();
    let inv = 1.0 / lw;
    pb.nonneg(x[0].clone() * inv);
    pb.nonneg((LinExpr::constant(c.aperture) - &x[m - 1]) * inv);
    for i in 0..m - 1 {
        pb.nonneg((x[i + 1].clone() - &x[i] - LinExpr::constant(c.min_spacing)) * inv);
    }
    let cu = cap / lw;
    for &ui in &u {
        pb.nonneg(LinExpr::constant(cu) - LinExpr::var(ui));
        pb.nonneg(LinExpr::var(ui) + LinExpr::constant(cu));
    }

    let sm = 1.0 / (m as f64).sqrt();
    let mut rates = Vec::with_capacity(k_n);
    let mut lam = Vec::with_capacity(k_n);
    let mut varpi = Vec::with_capacity(k_n);
    let mut rhos = Vec::with_capacity(k_n);
    for (k, loc) in locs.iter().enumerate() {
        let r = add_rate_vars(&mut pb, k, loc);
        let others_w: Vec<CVector> = (0..k_n).filter(|&j| j != k).map(|j| w[j].clone()).collect();
        let lin = steering_linearizations(&w[k], &others_w, loc.rate, &x, x0);

        // steering gain: rho <= concave minorant of |a(x)^H w|^2
        let rho = pb.var(format!("rho_{k}"));
        let sur = cos_quadratic_surrogate(&w[k], loc.rate, x0);
        let (terms, rhs) = sur.sum_squares_form(&x);
        pb.sum_squares_le(terms, rhs - LinExpr::var(rho));
        rhos.push(Some(rho));

        if loc.xi > XI_NEGLIGIBLE {
            let l = pb.var(format!("lambda_{k}"));
            let sl = lambda_scale(&loc.h, &w[k], loc.xi);
            pb.nonneg(LinExpr::var(l));
            let wwh = &w[k] * w[k].adjoint();
            let a: Vec<Vec<CLinExpr>> =
                (0..m).map(|i| (0..m).map(|j| CLinExpr::constant(wwh[(i, j)])).collect()).collect();
            let b: Vec<CLinExpr> = lin.v.iter().map(|e| e.scaled(Complex64::from(sm))).collect();
            let corner = LinExpr::term(rho, 1.0 / m as f64) - r.alpha();
            let blk = s_procedure_lmi(&a, &b, corner, loc.xi, LinExpr::term(l, sl))
                .expect("signal block is Hermitian by construction");
            let mut d = vec![1.0 / sl.sqrt(); m];
            d.push(1.0 / r.sa.sqrt());
            blk.congruence(&d).add_to(&mut pb);
            lam.push(Some((l, sl)));
        } else {
            pb.nonneg((LinExpr::term(rho, 1.0 / m as f64) - r.alpha()) * (1.0 / r.sa));
            lam.push(None);
        }

        let hw: Vec<CLinExpr> = lin.a_tilde.iter().map(|e| e.scaled(Complex64::from(sm))).collect();
        if others_w.is_empty() {
            pb.nonneg((r.beta() - LinExpr::constant(loc.noise)) * (1.0 / r.sb));
            varpi.push(None);
        } else if loc.xi <= XI_NEGLIGIBLE {
            let inv = 1.0 / r.sb.sqrt();
            let terms: Vec<LinExpr> = hw.iter().flat_map(|p| [p.re.clone() * inv, p.im.clone() * inv]).collect();
            pb.sum_squares_le(terms, (r.beta() - LinExpr::constant(loc.noise)) * (1.0 / r.sb));
            varpi.push(None);
        } else {
            let p = pb.var(format!("varpi_{k}"));
            let w_other_norm: f64 = others_w.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
            let spv = (loc.xi * w_other_norm * loc.beta0.sqrt()).max(1e-6 * loc.beta0).max(1e-12);
            pb.nonneg(LinExpr::var(p));
            let others: Vec<Vec<CLinExpr>> = others_w.iter().map(const_cvec).collect();
            let blk = interference_lmi_from_products(
                &hw,
                &others,
                m,
                loc.xi,
                r.beta(),
                LinExpr::term(p, spv),
                loc.noise,
            )
            .expect("interference block is Hermitian by construction");
            let mut d = vec![1.0 / r.sb.sqrt()];
            d.extend(std::iter::repeat_n(1.0, others.len()));
            d.extend(std::iter::repeat_n(1.0 / spv.sqrt(), m));
            blk.congruence(&d).add_to(&mut pb);
            varpi.push(Some((p, spv)));
        }
        rates.push(r);
    }
    add_objective(&mut pb, &rates, locs, opts.objective);
    let problem = pb.build();
    let sol = solve(&problem, &opts.solver);
    if !usable(&sol) {
        return None;
    }
    let mut out: Vec<f64> = (0..m).map(|i| x0[i] + lw * sol.x[u[i].index()]).collect();
    repair_positions(&mut out, c);
    let slack = read_slack(&sol, &rates, locs, &lam, &varpi, &rhos);
    Some(Solved { value: out, slack, status: sol.status, iterations: sol.iterations })
}

/// Outcome of one safeguarded subproblem step in one slot.
#[derive(Debug, Clone)]
pub struct SlotUpdate<T> {
    /// New incumbent value when the step was accepted.
    pub value: Option<T>,
    pub slack: Option<Vec<UserSlack>>,
    pub step: SlotStep,
}

fn safeguarded<T>(
    before: f64,
    attempt: impl Fn(f64) -> Option<Solved<T>>,
    evaluate: impl Fn(&T) -> f64,
) -> SlotUpdate<T> {
    let start = Instant::now();
    let mut restored = false;
    let mut solved = attempt(1.0);
    if solved.is_none() {
        restored = true;
        solved = attempt(0.5);
    }
    let seconds = start.elapsed().as_secs_f64();
    let Some(s) = solved else {
        return SlotUpdate {
            value: None,
            slack: None,
            step: SlotStep {
                status: StepStatus::Failed,
                solver_status: None,
                solver_iterations: 0,
                seconds,
                restored,
                objective_before: before,
                objective_after: before,
            },
        };
    };
    let after = evaluate(&s.value);
    let accept = after >= before;
    SlotUpdate {
        step: SlotStep {
            status: if accept { StepStatus::Accepted } else { StepStatus::Rejected },
            solver_status: Some(s.status),
            solver_iterations: s.iterations,
            seconds,
            restored,
            objective_before: before,
            objective_after: if accept { after } else { before },
        },
        value: accept.then_some(s.value),
        slack: accept.then_some(s.slack),
    }
}

/// One safeguarded beamforming step for slot `n` with positions fixed.
pub fn beamforming_step(
    scenario: &ScenarioState,
    n: usize,
    beams: &[CVector],
    x: &[f64],
    opts: &AoOptions,
) -> SlotUpdate<Vec<CVector>> {
    let cert = certify_slot(scenario, n, beams, x);
    let before = slot_objective(&cert);
    safeguarded(
        before,
        |shrink| {
            let locs = slot_locals(scenario, n, x, &cert, shrink);
            solve_beam_problem(scenario, beams, &locs, opts)
        },
        |w| slot_objective(&certify_slot(scenario, n, w, x)),
    )
}

/// One safeguarded position step for slot `n` with beams fixed, moving each
/// antenna by at most `cap` meters.
pub fn position_step(
    scenario: &ScenarioState,
    n: usize,
    beams: &[CVector],
    x: &[f64],
    cap: f64,
    opts: &AoOptions,
) -> SlotUpdate<Vec<f64>> {
    let cert = certify_slot(scenario, n, beams, x);
    let before = slot_objective(&cert);
    // with a single antenna the position only rotates a common phase
    let c = &scenario.config;
    if c.num_antennas == 1 || c.position_slack() <= 1e-12 * c.aperture.max(1.0) {
        return SlotUpdate {
            value: None,
            slack: None,
            step: SlotStep {
                status: StepStatus::Skipped,
                solver_status: None,
                solver_iterations: 0,
                seconds: 0.0,
                restored: false,
                objective_before: before,
                objective_after: before,
            },
        };
    }
    safeguarded(
        before,
        |shrink| {
            let locs = slot_locals(scenario, n, x, &cert, shrink);
            solve_position_problem(scenario, beams, x, cap, &locs, opts)
        },
        |xn| slot_objective(&certify_slot(scenario, n, beams, xn)),
    )
}

fn map_slots<T: Send>(n: usize, parallel: bool, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Safeguarded beamforming pass over every slot. Returns the updated beams
/// and the per-slot step records.
pub fn solve_beamforming(
    scenario: &ScenarioState,
    design: &DesignPoint,
    slack: &mut SlackState,
    opts: &AoOptions,
) -> (Vec<Vec<CVector>>, Vec<SlotStep>) {
    let updates = map_slots(scenario.num_slots(), opts.parallel, |n| {
        beamforming_step(scenario, n, &design.beams[n], &design.positions[n], opts)
    });
    let mut beams = design.beams.clone();
    let mut steps = Vec::with_capacity(updates.len());
    for (n, up) in updates.into_iter().enumerate() {
        if let Some(w) = up.value {
            beams[n] = w;
            slack.local_beams[n] = beams[n].clone();
        }
        if let Some(s) = up.slack {
            slack.users[n] = s;
        }
        if up.step.status == StepStatus::Failed {
            slack.restoration[n] = true;
        }
        steps.push(up.step);
    }
    (beams, steps)
}

/// Safeguarded position pass over every slot with per-slot displacement caps.
/// A rejected step halves the slot's cap; an accepted one doubles it, up to
/// `max_cap`.
pub fn solve_positions(
    scenario: &ScenarioState,
    design: &DesignPoint,
    slack: &mut SlackState,
    caps: &mut [f64],
    max_cap: f64,
    opts: &AoOptions,
) -> (Vec<Vec<f64>>, Vec<SlotStep>) {
    let updates = map_slots(scenario.num_slots(), opts.parallel, |n| {
        position_step(scenario, n, &design.beams[n], &design.positions[n], caps[n], opts)
    });
    let mut positions = design.positions.clone();
    let mut steps = Vec::with_capacity(updates.len());
    for (n, up) in updates.into_iter().enumerate() {
        match up.step.status {
            StepStatus::Accepted => caps[n] = (2.0 * caps[n]).min(max_cap),
            StepStatus::Rejected | StepStatus::Failed => caps[n] *= 0.5,
            StepStatus::Skipped => {}
        }
        if let Some(x) = up.value {
            positions[n] = x;
            slack.local_positions[n] = positions[n].clone();
        }
        if let Some(s) = up.slack {
            slack.users[n] = s;
        }
        if up.step.status == StepStatus::Failed {
            slack.restoration[n] = true;
        }
        steps.push(up.step);
    }
    (positions, steps)
}

/// Run the alternating optimization from [`initialize`].
pub fn run(scenario: &ScenarioState, opts: &AoOptions) -> (DesignPoint, SlackState, AoTrace) {
    let (design, slack) = initialize(scenario);
    run_from(scenario, design, slack, opts)
}

/// Run the alternating optimization from a given feasible design.
pub fn run_from(
    scenario: &ScenarioState,
    mut design: DesignPoint,
    mut slack: SlackState,
    opts: &AoOptions,
) -> (DesignPoint, SlackState, AoTrace) {
    let start = Instant::now();
    let n_slots = scenario.num_slots();
    let slot_value = |d: &DesignPoint, n: usize| {
        slot_objective(&certify_slot(scenario, n, &d.beams[n], &d.positions[n]))
    };
    let mean = |d: &DesignPoint| (0..n_slots).map(|n| slot_value(d, n)).sum::<f64>() / n_slots as f64;
    let max_cap = opts.displacement_cap * scenario.config.wavelength;
    let mut caps = vec![max_cap; n_slots];
    let mut trace = AoTrace {
        initial_objective: mean(&design),
        iterations: Vec::new(),
        converged: false,
        flagged_slots: Vec::new(),
    };
    let mut prev = trace.initial_objective;
    for iter in 1..=opts.max_iters {
        let mut beam_steps = Vec::new();
        let mut position_steps = Vec::new();
        if opts.optimize_beams {
            let (beams, steps) = solve_beamforming(scenario, &design, &mut slack, opts);
            design.beams = beams;
            beam_steps = steps;
        }
        let old_x = design.positions.clone();
        if opts.optimize_positions {
            let (positions, steps) = solve_positions(scenario, &design, &mut slack, &mut caps, max_cap, opts);
            design.positions = positions;
            position_steps = steps;
        }
        let step_norms = old_x
            .iter()
            .zip(&design.positions)
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
            .collect();
        // a rejected position step is retried with the halved cap before the
        // run may count as converged
        let retry = position_steps
            .iter()
            .zip(&caps)
            .any(|(s, &cap)| s.status != StepStatus::Accepted && s.status != StepStatus::Skipped && cap >= MIN_CAP_FRACTION * max_cap);
        let objective = mean(&design);
        trace.iterations.push(IterationRecord {
            iter,
            objective,
            elapsed: start.elapsed().as_secs_f64(),
            beam_steps,
            position_steps,
            step_norms,
        });
        // an infinite tolerance asks for a single pass, retries included
        let done = (objective - prev).abs() <= opts.epsilon && (!retry || opts.epsilon.is_infinite());
        prev = objective;
        if done {
            trace.converged = true;
            break;
        }
    }
    trace.flagged_slots = (0..n_slots).filter(|&n| slack.restoration[n]).collect();
    (design, slack, trace)
}

/// Power of every slot's beams, for feasibility checks.
pub fn slot_powers(design: &DesignPoint) -> Vec<f64> {
    (0..design.beams.len()).map(|n| design.slot_power(n)).collect()
}

/// Matched-filter design at full power for a single user, used as a
/// closed-form reference.
pub fn matched_filter(h: &CVector, power: f64) -> CVector {
    h.map(|v| v * (power.sqrt() / h.norm()))
}
