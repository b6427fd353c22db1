//! Independent oracles: Monte-Carlo worst-case evaluation, channel-error
//! bound sampling, brute-force position search and a randomized check of the
//! surrogate builders.
//!
//! Channels and SINRs are recomputed here from the raw geometry; nothing in
//! this module calls the channel or certification code used by the optimizer.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CVector, DesignPoint, ScenarioState, SystemConfig};
use crate::surrogate;

const CHUNK: usize = 2048;
/// Allowed shortfall of a sampled SINR below its certified value.
pub const VIOLATION_TOL: f64 = 1e-6;

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_cvec(rng: &mut ChaCha8Rng, m: usize) -> CVector {
    DVector::from_fn(m, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Draw from the unit ball of `C^m`: a boundary point with probability 1/2,
/// otherwise uniform in the interior.
fn ball_draw(rng: &mut ChaCha8Rng, m: usize) -> CVector {
    let mut g = gaussian_cvec(rng, m);
    let n = g.norm();
    let radius = if rng.random::<bool>() { 1.0 } else { rng.random::<f64>().powf(1.0 / (2 * m) as f64) };
    g *= Complex64::from(radius / n);
    g
}

/// Estimated channel of user `k` in slot `n` rebuilt from its estimated
/// position.
fn estimated_channel(config: &SystemConfig, q: [f64; 2], x: &[f64]) -> CVector {
    let dx = q[0] - config.bs_xy[0];
    let dy = q[1] - config.bs_xy[1];
    let d = (dx * dx + dy * dy + config.bs_height * config.bs_height).sqrt();
    let cos_theta = config.bs_height / d;
    let amp = config.ref_path_gain.sqrt() / d;
    DVector::from_iterator(
        x.len(),
        x.iter().map(|&xm| Complex64::from_polar(amp, -2.0 * PI / config.wavelength * xm * cos_theta)),
    )
}

fn sinr(h: &CVector, beams: &[CVector], k: usize, noise: f64) -> f64 {
    let mut interf = noise;
    let mut signal = 0.0;
    for (j, w) in beams.iter().enumerate() {
        let p = h.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr();
        if j == k {
            signal = p;
        } else {
            interf += p;
        }
    }
    signal / interf
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEntry {
    pub slot: usize,
    pub user: usize,
    pub min_sinr: f64,
    pub certified_sinr: f64,
    pub violations: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub seed: u64,
    pub samples: usize,
    /// Ordered by slot, then user.
    pub entries: Vec<McEntry>,
    /// Smallest sampled sum rate per slot.
    pub slot_min_sum_rate: Vec<f64>,
}

impl McReport {
    pub fn total_violations(&self) -> usize {
        self.entries.iter().map(|e| e.violations).sum()
    }

    /// Slot average of the smallest sampled sum rates, comparable to the
    /// certified objective.
    pub fn min_rate(&self) -> f64 {
        self.slot_min_sum_rate.iter().sum::<f64>() / self.slot_min_sum_rate.len().max(1) as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "user", "min_sinr", "min_sum_rate", "certified_sinr", "violations", "samples", "seed"])?;
        for e in &self.entries {
            w.write_record([
                e.slot.to_string(),
                e.user.to_string(),
                format!("{:.9e}", e.min_sinr),
                format!("{:.9e}", self.slot_min_sum_rate[e.slot]),
                format!("{:.9e}", e.certified_sinr),
                e.violations.to_string(),
                e.samples.to_string(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct ChunkStats {
    min_sinr: Vec<f64>,
    violations: Vec<usize>,
    min_sum: f64,
}

/// Samples channel errors in every user's ball and reports the smallest SINR
/// seen against `certified[n][k]`.
pub fn mc_worst_case(
    scenario: &ScenarioState,
    design: &DesignPoint,
    certified: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<McReport> {
    if samples == 0 {
        return Err(Error::Argument("at least one sample is required".into()));
    }
    let c = &scenario.config;
    let k_n = scenario.num_users();
    let mut entries = Vec::new();
    let mut slot_min = Vec::new();
    for n in 0..scenario.num_slots() {
        let x = &design.positions[n];
        let beams = &design.beams[n];
        let hs: Vec<CVector> = (0..k_n).map(|k| estimated_channel(c, scenario.slots[n][k].est_pos, x)).collect();
        let chunks = samples.div_ceil(CHUNK);
        let stats: Vec<ChunkStats> = (0..chunks)
            .into_par_iter()
            .map(|ch| {
                let mut rng = chunk_rng(seed, ((n as u64) << 32) | ch as u64);
                let count = CHUNK.min(samples - ch * CHUNK);
                let mut st = ChunkStats { min_sinr: vec![f64::INFINITY; k_n], violations: vec![0; k_n], min_sum: f64::INFINITY };
                for _ in 0..count {
                    let mut sum = 0.0;
                    for k in 0..k_n {
                        let u = &scenario.slots[n][k];
                        let e = ball_draw(&mut rng, x.len()) * Complex64::from(u.xi);
                        let s = sinr(&(&hs[k] + e), beams, k, u.noise);
                        st.min_sinr[k] = st.min_sinr[k].min(s);
                        if s < certified[n][k] - VIOLATION_TOL {
                            st.violations[k] += 1;
                        }
                        sum += (1.0 + s).ln() / LN_2;
                    }
                    st.min_sum = st.min_sum.min(sum);
                }
                st
            })
            .collect();
        for k in 0..k_n {
            entries.push(McEntry {
                slot: n,
                user: k,
                min_sinr: stats.iter().map(|s| s.min_sinr[k]).fold(f64::INFINITY, f64::min),
                certified_sinr: certified[n][k],
                violations: stats.iter().map(|s| s.violations[k]).sum(),
                samples,
            });
        }
        slot_min.push(stats.iter().map(|s| s.min_sum).fold(f64::INFINITY, f64::min));
    }
    Ok(McReport { seed, samples, entries, slot_min_sum_rate: slot_min })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundReport {
    pub samples: usize,
    /// Largest `||h - h_est|| / xi` observed.
    pub max_ratio: f64,
    pub pass: bool,
}

fn random_feasible_positions(rng: &mut ChaCha8Rng, config: &SystemConfig) -> Vec<f64> {
    let m = config.num_antennas;
    let slack = (config.aperture - (m - 1) as f64 * config.min_spacing).max(0.0);
    let mut u: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * slack).collect();
    u.sort_by(f64::total_cmp);
    u.iter().enumerate().map(|(i, v)| v + i as f64 * config.min_spacing).collect()
}

/// Samples true positions inside each estimate's error disc and random
/// feasible arrays, and compares the channel error to the scenario's bound.
pub fn check_error_bound(scenario: &ScenarioState, samples: usize, seed: u64) -> ErrorBoundReport {
    check_error_bound_stratified(scenario, samples, seed, 0.5)
}

/// As [`check_error_bound`], with a chosen fraction of positions drawn on the
/// disc boundary.
pub fn check_error_bound_stratified(
    scenario: &ScenarioState,
    samples: usize,
    seed: u64,
    boundary_fraction: f64,
) -> ErrorBoundReport {
    let c = &scenario.config;
    let chunks = samples.div_ceil(CHUNK);
    let max_ratio = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut rng = chunk_rng(seed, ch as u64);
            let count = CHUNK.min(samples - ch * CHUNK);
            let mut worst = 0.0f64;
            for _ in 0..count {
                let n = rng.random_range(0..scenario.num_slots());
                let k = rng.random_range(0..scenario.num_users());
                let u = &scenario.slots[n][k];
                let r = c.position_error_radius[k];
                let rho = if rng.random::<f64>() < boundary_fraction { r } else { r * rng.random::<f64>().sqrt() };
                let phi = rng.random_range(0.0..2.0 * PI);
                let q = [u.est_pos[0] + rho * phi.cos(), u.est_pos[1] + rho * phi.sin()];
                let x = random_feasible_positions(&mut rng, c);
                let diff = (estimated_channel(c, q, &x) - estimated_channel(c, u.est_pos, &x)).norm();
                let ratio = if diff == 0.0 {
                    0.0
                } else if u.xi > 0.0 {
                    diff / u.xi
                } else {
                    f64::INFINITY
                };
                worst = worst.max(ratio);
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    ErrorBoundReport { samples, max_ratio, pass: max_ratio <= 1.0 }
}

/// Sum over users of `log2(1 + min SINR)` where the minimum runs over the
/// given unit-ball draws (scaled by each radius) plus the analytic
/// worst-case direction for the signal term.
fn sampled_robust_objective(hs: &[CVector], xis: &[f64], noises: &[f64], beams: &[CVector], draws: &[CVector]) -> f64 {
    let mut total = 0.0;
    for k in 0..hs.len() {
        let w = &beams[k];
        let wn = w.norm();
        let mut worst = sinr(&hs[k], beams, k, noises[k]);
        if wn > 0.0 {
            let phase = hs[k].dotc(w);
            let rot = if phase.norm() > 0.0 { phase / phase.norm() } else { Complex64::from(1.0) };
            // e^H w = -xi ||w|| rot, directly opposing the nominal signal
            let e = w.map(|v| -v * rot.conj() / wn) * Complex64::from(xis[k]);
            worst = worst.min(sinr(&(&hs[k] + e), beams, k, noises[k]));
        }
        for d in draws {
            worst = worst.min(sinr(&(&hs[k] + d * Complex64::from(xis[k])), beams, k, noises[k]));
        }
        total += (1.0 + worst).ln() / LN_2;
    }
    total
}

/// Exhaustive search over sorted grid positions `i * grid_step` for slot `n`
/// with fixed beams. Returns the best positions and their robust sum rate.
pub fn brute_force_positions(
    scenario: &ScenarioState,
    n: usize,
    beams: &[CVector],
    grid_step: f64,
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let c = &scenario.config;
    let m = c.num_antennas;
    if m > 3 {
        return Err(Error::Argument(format!("brute force supports at most 3 antennas, got {m}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Argument("grid step must be positive".into()));
    }
    let points = (c.aperture / grid_step + 1e-9).floor() as usize + 1;
    let gap = ((c.min_spacing / grid_step) - 1e-9).ceil().max(0.0) as usize;
    let mut rng = chunk_rng(seed, 0);
    let draws: Vec<CVector> = (0..samples).map(|_| ball_draw(&mut rng, m)).collect();
    let users = &scenario.slots[n];
    let xis: Vec<f64> = users.iter().map(|u| u.xi).collect();
    let noises: Vec<f64> = users.iter().map(|u| u.noise).collect();
    let eval = |idx: &[usize]| {
        let x: Vec<f64> = idx.iter().map(|&i| i as f64 * grid_step).collect();
        let hs: Vec<CVector> = users.iter().map(|u| estimated_channel(c, u.est_pos, &x)).collect();
        (x.clone(), sampled_robust_objective(&hs, &xis, &noises, beams, &draws))
    };
    let candidates: Vec<(Vec<f64>, f64)> = (0..points)
        .into_par_iter()
        .map(|i0| {
            let mut best: Option<(Vec<f64>, f64)> = None;
            let mut consider = |cand: (Vec<f64>, f64)| {
                if best.as_ref().is_none_or(|b| cand.1 > b.1) {
                    best = Some(cand);
                }
            };
            match m {
                1 => consider(eval(&[i0])),
                2 => {
                    for i1 in i0 + gap.max(1)..points {
                        consider(eval(&[i0, i1]));
                    }
                }
                _ => {
                    for i1 in i0 + gap.max(1)..points {
                        for i2 in i1 + gap.max(1)..points {
                            consider(eval(&[i0, i1, i2]));
                        }
                    }
                }
            }
            best
        })
        .flatten()
        .collect();
    candidates
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .ok_or_else(|| Error::Argument("no feasible grid point".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    /// Largest normalized excess seen (negative when every trial held).
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0
    }
}

/// Each check returns the largest normalized excess of one random instance;
/// a positive value beyond `SUITE_TOL` counts as a violation.
type Check = fn(&mut ChaCha8Rng) -> f64;

pub const SUITE_TOL: f64 = 1e-9;

fn rel(excess: f64, scale: f64) -> f64 {
    excess / (1.0 + scale.abs())
}

fn random_cvec(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CVector {
    gaussian_cvec(rng, m) * Complex64::from(scale)
}

fn hermitian_gap(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_taylor_rank1(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.random_range(1..=4);
    let w = random_cvec(rng, m, 1.0);
    let w0 = random_cvec(rng, m, 1.0);
    let eval = |w: &CVector| {
        let e = surrogate::taylor_rank1(&surrogate::const_cvec(w), &w0);
        DMatrix::from_fn(m, m, |i, j| e[i][j].eval(&[]))
    };
    let gap = &w * w.adjoint() - eval(&w);
    let scale = w.norm_squared() + w0.norm_squared();
    let below = rel(-surrogate::min_eigenvalue(&gap), scale);
    let tight = rel((eval(&w0) - &w0 * w0.adjoint()).norm(), scale);
    below.max(tight)
}

fn check_product_bound(rng: &mut ChaCha8Rng) -> f64 {
    let xi0 = 10f64.powf(rng.random_range(-3.0..2.0));
    let xj0 = 10f64.powf(rng.random_range(-3.0..2.0));
    let pb = surrogate::product_upper_bound(xi0, xj0).expect("positive local point");
    let xi = rng.random_range(0.0..10.0) * xi0;
    let xj = rng.random_range(0.0..10.0) * xj0;
    let b = pb.bound(xi, xj);
    rel(xi * xj - b, b).max(rel((pb.bound(xi0, xj0) - xi0 * xj0).abs(), xi0 * xj0))
}

fn check_cos_minorant(rng: &mut ChaCha8Rng) -> f64 {
    let a0 = rng.random_range(-10.0..10.0);
    let a = a0 + rng.random_range(-10.0..10.0);
    rel(surrogate::cos_minorant(a0, a) - a.cos(), 1.0).max((surrogate::cos_minorant(a0, a0) - a0.cos()).abs())
}

fn check_cos_surrogate(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.random_range(1..=4);
    let w = random_cvec(rng, m, 1.0);
    let rate = rng.random_range(-63.0..63.0);
    let x0: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.8)).collect();
    let s = surrogate::cos_quadratic_surrogate(&w, rate, &x0);
    let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.8)).collect();
    let exact = s.exact(&x);
    let scale = w.norm_squared();
    let below = rel(s.eval(&x) - exact, scale);
    let tight = rel((s.eval(&x0) - s.exact(&x0)).abs(), scale);
    // the second-order-cone form must describe the same quadratic
    let xs: Vec<conic::LinExpr> = x.iter().map(|&v| conic::LinExpr::constant(v)).collect();
    let (terms, rhs) = s.sum_squares_form(&xs);
    let q = rhs.constant_term() - terms.iter().map(|t| t.constant_term().powi(2)).sum::<f64>();
    let form = rel((q - s.eval(&x)).abs(), scale * (1.0 + rate * rate));
    below.max(tight).max(form)
}

fn check_log_minorant(rng: &mut ChaCha8Rng) -> f64 {
    let g0 = 10f64.powf(rng.random_range(-4.0..3.0));
    let q = surrogate::log_minorant(g0).expect("nonnegative local point");
    let g = rng.random_range(0.0..10.0) * (1.0 + g0);
    let exact = (1.0 + g).log2();
    // the coefficients carry terms of size g0^2, which sets the rounding floor
    let scale = exact + g0 * g0;
    rel(q.eval(g) - exact, scale).max(rel((q.eval(g0) - (1.0 + g0).log2()).abs(), 1.0 + g0 * g0))
}

fn quad_form(a: &DMatrix<Complex64>, b: &CVector, c: f64, e: &CVector) -> f64 {
    (e.adjoint() * a * e)[(0, 0)].re + 2.0 * b.dotc(e).re + c
}

fn check_s_procedure(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.random_range(1..=3);
    let g = DMatrix::from_fn(m, m, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let shift = rng.random_range(0.0..2.0);
    let a = &g * g.adjoint() - DMatrix::identity(m, m) * Complex64::from(shift);
    let b = random_cvec(rng, m, 1.0);
    let xi = rng.random_range(0.01..1.5);
    // smallest multiplier making A + lambda I positive definite, plus margin
    let lambda = (shift + 0.01 + rng.random_range(0.0..1.0)).max(0.0);
    let al = &a + DMatrix::identity(m, m) * Complex64::from(lambda);
    let Some(inv) = al.clone().try_inverse() else { return 0.0 };
    let c = lambda * xi * xi + (b.adjoint() * &inv * &b)[(0, 0)].re + rng.random_range(0.0..0.1);
    let to_expr = |v: f64| conic::LinExpr::constant(v);
    let a_e: Vec<Vec<conic::CLinExpr>> =
        (0..m).map(|i| (0..m).map(|j| conic::CLinExpr::constant(a[(i, j)])).collect()).collect();
    let blk = surrogate::s_procedure_lmi(&a_e, &surrogate::const_cvec(&b), to_expr(c), xi, to_expr(lambda))
        .expect("Hermitian data");
    let mat = blk.eval(&[]);
    let scale = a.norm() + b.norm_squared() + c.abs();
    if surrogate::min_eigenvalue(&mat) < 1e-9 * (1.0 + scale) {
        // only PSD-certified blocks carry a claim
        return 0.0;
    }
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..8 {
        let e = ball_draw(rng, m) * Complex64::from(xi);
        worst = worst.max(rel(-quad_form(&a, &b, c, &e), scale));
    }
    worst
}

fn check_schur(rng: &mut ChaCha8Rng) -> f64 {
    let p = rng.random_range(1..=3);
    let q = rng.random_range(1..=3);
    let ga = DMatrix::from_fn(p, p, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let a = &ga * ga.adjoint() + DMatrix::identity(p, p) * Complex64::from(0.1);
    let b = DMatrix::from_fn(p, q, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let gc = DMatrix::from_fn(q, q, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let c = &gc * gc.adjoint() + b.adjoint() * a.clone().try_inverse().expect("positive definite") * &b
        - DMatrix::identity(q, q) * Complex64::from(rng.random_range(-1.0..1.0));
    let s = surrogate::schur_psd(&a, &b, &c).expect("conformal blocks");
    let min_eig = surrogate::min_eigenvalue(&s.block.eval(&[]));
    let margin = 1e-6;
    if min_eig.abs() < margin {
        return 0.0;
    }
    let comp = s.complement_is_psd(0.0).expect("invertible A");
    if comp == (min_eig > 0.0) {
        0.0
    } else {
        1.0
    }
}

fn check_lmi_hermitian(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.random_range(1..=3);
    let others = rng.random_range(1..=3);
    let mut pb = conic::ProblemBuilder::new();
    let mut new_cvec = |tag: &str| -> Vec<conic::CLinExpr> {
        (0..m)
            .map(|i| {
                let re = pb.var(format!("{tag}_{i}_re"));
                let im = pb.var(format!("{tag}_{i}_im"));
                conic::CLinExpr::new(conic::LinExpr::var(re), conic::LinExpr::var(im))
            })
            .collect()
    };
    let w = new_cvec("w");
    let ws: Vec<Vec<conic::CLinExpr>> = (0..others).map(|j| new_cvec(&format!("o{j}"))).collect();
    let scalars: Vec<conic::Var> = (0..3).map(|i| pb.var(format!("s{i}"))).collect();
    let nvars = pb.num_vars();
    let h = random_cvec(rng, m, 1.0);
    let w0 = random_cvec(rng, m, 1.0);
    let xi = rng.random_range(0.0..1.0);
    let sv = |i: usize| conic::LinExpr::var(scalars[i]);
    let signal = surrogate::beamforming_signal_lmi(&w, &h, xi, sv(0), sv(1), &w0).expect("Hermitian");
    let interf = surrogate::interference_lmi(&ws, &h, xi, sv(0), sv(2), 0.1).expect("Hermitian");
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let vals: Vec<f64> = (0..nvars).map(|_| rng.random_range(-2.0..2.0)).collect();
        for blk in [&signal, &interf] {
            let mat = blk.eval(&vals);
            worst = worst.max(rel(hermitian_gap(&mat), mat.norm()));
        }
    }
    worst
}

fn check_linearization_tight(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.random_range(1..=4);
    let w = random_cvec(rng, m, 1.0);
    let others: Vec<CVector> = (0..2).map(|_| random_cvec(rng, m, 1.0)).collect();
    let rate = rng.random_range(-63.0..63.0);
    let x0: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.8)).collect();
    let xs: Vec<conic::LinExpr> = x0.iter().map(|&v| conic::LinExpr::constant(v)).collect();
    let lin = surrogate::steering_linearizations(&w, &others, rate, &xs, &x0);
    let a = DVector::from_iterator(m, x0.iter().map(|&x| Complex64::from_polar(1.0, -rate * x)));
    let v = &w * w.dotc(&a);
    let mut worst = 0.0f64;
    for i in 0..m {
        worst = worst.max(rel((lin.v[i].eval(&[]) - v[i]).norm(), w.norm_squared()));
    }
    for (i, o) in others.iter().enumerate() {
        worst = worst.max(rel((lin.a_tilde[i].eval(&[]) - a.dotc(o)).norm(), o.norm()));
    }
    worst
}

const CHECKS: [(&str, Check); 9] = [
    ("taylor_rank1_psd_gap", check_taylor_rank1),
    ("product_upper_bound", check_product_bound),
    ("cos_minorant", check_cos_minorant),
    ("cos_quadratic_surrogate", check_cos_surrogate),
    ("log_minorant", check_log_minorant),
    ("s_procedure_soundness", check_s_procedure),
    ("schur_complement", check_schur),
    ("lmi_hermitian", check_lmi_hermitian),
    ("steering_linearization_tight", check_linearization_tight),
];

/// Runs every check on `trials` random instances.
pub fn surrogate_suite(seed: u64, trials: usize) -> SuiteReport {
    let checks = CHECKS
        .iter()
        .enumerate()
        .map(|(ci, &(name, check))| {
            let chunks = trials.div_ceil(CHUNK);
            let per_chunk: Vec<(usize, f64)> = (0..chunks)
                .into_par_iter()
                .map(|ch| {
                    let mut rng = chunk_rng(seed, ((ci as u64) << 32) | ch as u64);
                    let count = CHUNK.min(trials - ch * CHUNK);
                    let mut bad = 0;
                    let mut worst = f64::NEG_INFINITY;
                    for _ in 0..count {
                        let v = check(&mut rng);
                        if !(v <= SUITE_TOL) {
                            bad += 1;
                        }
                        worst = worst.max(v);
                    }
                    (bad, worst)
                })
                .collect();
            CheckResult {
                name,
                trials,
                violations: per_chunk.iter().map(|c| c.0).sum(),
                worst: per_chunk.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    SuiteReport { seed, checks }
}
