//! Exact worst-case evaluation of a fixed design over the channel-error ball.
//!
//! For user `k` with estimate `h`, radius `xi` and beams `w`:
//!
//! * `alpha = min_{||e||<=xi} |(h+e)^H w_k|^2 = max(|h^H w_k| - xi ||w_k||, 0)^2`
//! * `beta  = noise + max_{||e||<=xi} sum_{j!=k} |(h+e)^H w_j|^2`, an upper bound
//!   from the Lagrangian dual of the trust-region problem (lossless, so it is
//!   exact up to the 1D minimization tolerance).
//!
//! `alpha / beta` then lower-bounds the SINR for every admissible error.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::model::{CVector, DesignPoint, ScenarioState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified {
    pub alpha: f64,
    pub beta: f64,
    pub sinr: f64,
}

impl Certified {
    pub fn rate(&self) -> f64 {
        (1.0 + self.sinr).log2()
    }
}

/// Worst-case signal power over the ball.
pub fn worst_signal(h: &CVector, xi: f64, w: &CVector) -> f64 {
    let m = (h.dotc(w).norm() - xi * w.norm()).max(0.0);
    m * m
}

/// Upper bound on `max_{||e||<=xi} sum_j |(h+e)^H w_j|^2`.
pub fn worst_interference(h: &CVector, xi: f64, others: &[&CVector]) -> f64 {
    if others.is_empty() {
        return 0.0;
    }
    let m = h.len();
    // work with unit-norm h to keep the scalar search well scaled
    let hn = h.norm();
    let scale = if hn > 0.0 { hn } else { 1.0 };
    let hs = h.map(|v| v / scale);
    let xs = xi / scale;
    let mut q = DMatrix::<Complex64>::zeros(m, m);
    for w in others {
        q += *w * w.adjoint();
    }
    let qh = &q * &hs;
    let nominal = hs.dotc(&qh).re.max(0.0);
    if xs == 0.0 {
        return nominal * scale * scale;
    }
    let eig = SymmetricEigen::new(q);
    let s: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let c: Vec<f64> = (0..m).map(|i| eig.eigenvectors.column(i).dotc(&qh).norm_sqr()).collect();
    let smax = s.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    // value(t) with mu = smax + t
    let value = |t: f64| {
        let mu = smax + t;
        nominal + mu * xs * xs + s.iter().zip(&c).map(|(si, ci)| ci / (mu - si)).sum::<f64>()
    };
    let slope = |t: f64| {
        let mu = smax + t;
        xs * xs - s.iter().zip(&c).map(|(si, ci)| ci / ((mu - si) * (mu - si))).sum::<f64>()
    };
    let csum: f64 = c.iter().sum();
    let mut hi = (csum.sqrt() / xs).max(1e-300);
    let mut lo = hi * 1e-18;
    if slope(lo) >= 0.0 {
        hi = lo;
    } else {
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo < 1.0 + 1e-13 {
                break;
            }
        }
    }
    value(hi) * scale * scale
}

pub fn certify_user(h: &CVector, xi: f64, beams: &[CVector], k: usize, noise: f64) -> Certified {
    let alpha = worst_signal(h, xi, &beams[k]);
    let others: Vec<&CVector> = beams.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, w)| w).collect();
    let beta = noise + worst_interference(h, xi, &others);
    Certified { alpha, beta, sinr: alpha / beta }
}

/// Certified values of every user in slot `n` for beams and positions.
pub fn certify_slot(scenario: &ScenarioState, n: usize, beams: &[CVector], x: &[f64]) -> Vec<Certified> {
    (0..scenario.num_users())
        .map(|k| {
            let u = &scenario.slots[n][k];
            let h = scenario.est_channel(n, k, x);
            certify_user(&h, u.xi, beams, k, u.noise)
        })
        .collect()
}

/// Sum of certified rates of a slot.
pub fn slot_objective(cert: &[Certified]) -> f64 {
    cert.iter().map(Certified::rate).sum()
}

/// Time-averaged certified sum rate of a design.
pub fn certified_objective(scenario: &ScenarioState, design: &DesignPoint) -> f64 {
    let n = scenario.num_slots();
    (0..n)
        .map(|i| slot_objective(&certify_slot(scenario, i, &design.beams[i], &design.positions[i])))
        .sum::<f64>()
        / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_cvec(rng: &mut ChaCha8Rng, m: usize) -> CVector {
        DVector::from_fn(m, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn interference_bound_dominates_samples_and_is_nearly_attained() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = 4;
            let h = rand_cvec(&mut rng, m);
            let w1 = rand_cvec(&mut rng, m);
            let w2 = rand_cvec(&mut rng, m);
            let xi = rng.random_range(0.01..0.8);
            let bound = worst_interference(&h, xi, &[&w1, &w2]);
            let f = |e: &CVector| {
                let g = &h + e;
                g.dotc(&w1).norm_sqr() + g.dotc(&w2).norm_sqr()
            };
            // projected gradient ascent on the sphere as an independent lower estimate
            let mut best = 0.0f64;
            for start in 0..8 {
                let mut e = rand_cvec(&mut rng, m);
                e *= Complex64::from(xi / e.norm());
                if start == 0 {
                    e = h.map(|v| v * (xi / h.norm()));
                }
                for _ in 0..500 {
                    let g = &h + &e;
                    let dir = &w1 * w1.dotc(&g) + &w2 * w2.dotc(&g);
                    e += dir * Complex64::from(0.05);
                    let n = e.norm();
                    e *= Complex64::from(xi / n);
                }
                best = best.max(f(&e));
            }
            assert!(bound >= best * (1.0 - 1e-10), "{bound} < {best}");
            assert!(bound <= best * (1.0 + 1e-6), "{bound} vs {best}");
        }
    }

    #[test]
    fn signal_closed_form_single_antenna() {
        let h = DVector::from_element(1, Complex64::new(3.0, 4.0));
        let w = DVector::from_element(1, Complex64::new(0.0, 2.0));
        assert!((worst_signal(&h, 1.0, &w) - 64.0).abs() < 1e-12);
        assert_eq!(worst_signal(&h, 6.0, &w), 0.0);
    }
}
