//! Geometry, steering vectors, line-of-sight channels and SINR evaluation for
//! a BS with a linear movable-antenna array serving ground users.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;

/// Scenario constants. Powers in watts, lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub num_antennas: usize,
    pub num_users: usize,
    pub num_slots: usize,
    /// Slot length in seconds.
    pub slot_length: f64,
    pub bs_xy: [f64; 2],
    pub bs_height: f64,
    pub wavelength: f64,
    /// Linear power gain at 1 m.
    pub ref_path_gain: f64,
    /// Per-user noise power.
    pub noise_power: Vec<f64>,
    pub max_power: f64,
    /// Movable region `[0, aperture]`.
    pub aperture: f64,
    pub min_spacing: f64,
    /// Per-user bound on the position estimation error.
    pub position_error_radius: Vec<f64>,
    /// Per-user channel-error bound replacing the computed one.
    pub xi_override: Option<Vec<f64>>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let k = 2;
        SystemConfig {
            num_antennas: 4,
            num_users: k,
            num_slots: 6,
            slot_length: 0.5,
            bs_xy: [250.0, 250.0],
            bs_height: 12.0,
            wavelength: 0.1,
            ref_path_gain: db_to_linear(-40.0),
            noise_power: vec![dbm_to_watts(-80.0); k],
            max_power: dbm_to_watts(34.0),
            aperture: 6.0 * 0.1,
            min_spacing: 0.3 * 0.1,
            position_error_radius: vec![0.5; k],
            xi_override: None,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemConfig {
    /// Resize the per-user vectors to `k` users, repeating the first entry.
    pub fn with_users(mut self, k: usize) -> Self {
        let noise = self.noise_power.first().copied().unwrap_or(dbm_to_watts(-80.0));
        let r = self.position_error_radius.first().copied().unwrap_or(0.5);
        self.noise_power.resize(k, noise);
        self.position_error_radius.resize(k, r);
        if let Some(xi) = &mut self.xi_override {
            let v = xi.first().copied().unwrap_or(0.0);
            xi.resize(k, v);
        }
        self.num_users = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::Config { field: field.into(), msg: msg.into() });
        if self.num_antennas == 0 {
            return bad("num_antennas", "must be at least 1");
        }
        if self.num_users == 0 {
            return bad("num_users", "must be at least 1");
        }
        if self.num_slots == 0 {
            return bad("num_slots", "must be at least 1");
        }
        let positive = [
            ("slot_length", self.slot_length),
            ("bs_height", self.bs_height),
            ("wavelength", self.wavelength),
            ("ref_path_gain", self.ref_path_gain),
            ("max_power", self.max_power),
            ("min_spacing", self.min_spacing),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, "must be positive and finite");
            }
        }
        if !(self.aperture.is_finite() && self.aperture >= 0.0) {
            return bad("aperture", "must be nonnegative and finite");
        }
        let need = (self.num_antennas - 1) as f64 * self.min_spacing;
        if self.aperture < need * (1.0 - 1e-12) {
            return bad("aperture", &format!("must be at least (M-1)*min_spacing = {need}"));
        }
        if self.noise_power.len() != self.num_users {
            return bad("noise_power", "needs one entry per user");
        }
        if self.noise_power.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("noise_power", "entries must be positive");
        }
        if self.position_error_radius.len() != self.num_users {
            return bad("position_error_radius", "needs one entry per user");
        }
        if self.position_error_radius.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("position_error_radius", "entries must be nonnegative");
        }
        if let Some(xi) = &self.xi_override {
            if xi.len() != self.num_users {
                return bad("xi_override", "needs one entry per user");
            }
            if xi.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return bad("xi_override", "entries must be nonnegative");
            }
        }
        Ok(())
    }

    /// Largest possible span of the array, `L - (M-1) d_min`; zero means the
    /// positions are frozen.
    pub fn position_slack(&self) -> f64 {
        (self.aperture - (self.num_antennas.saturating_sub(1)) as f64 * self.min_spacing).max(0.0)
    }
}

fn horizontal_dist(b: [f64; 2], q: [f64; 2]) -> f64 {
    ((b[0] - q[0]).powi(2) + (b[1] - q[1]).powi(2)).sqrt()
}

/// BS-to-user distance including the BS height.
pub fn distance(b: [f64; 2], h: f64, q: [f64; 2]) -> f64 {
    horizontal_dist(b, q).hypot(h)
}

/// Elevation angle of arrival, in `[0, pi/2)`.
pub fn aoa(b: [f64; 2], h: f64, q: [f64; 2]) -> f64 {
    (h / distance(b, h, q)).clamp(-1.0, 1.0).acos()
}

/// Entries `exp(-j (2 pi / lambda) x_m cos(theta))`.
pub fn steering(x: &[f64], theta: f64, wavelength: f64) -> CVector {
    let rate = 2.0 * PI / wavelength * theta.cos();
    steering_with_rate(x, rate)
}

pub(crate) fn steering_with_rate(x: &[f64], rate: f64) -> CVector {
    DVector::from_iterator(x.len(), x.iter().map(|&xm| Complex64::from_polar(1.0, -rate * xm)))
}

pub fn channel(x: &[f64], theta: f64, d: f64, g0: f64, wavelength: f64) -> Result<CVector> {
    if !(d > 0.0) {
        return Err(Error::Geometry(format!("distance {d} must be positive")));
    }
    Ok(steering(x, theta, wavelength) * Complex64::from(g0.sqrt() / d))
}

/// SINR and rate of user `k` with channel `h` under the beam set `beams`.
pub fn sinr_and_rate(h: &CVector, beams: &[CVector], k: usize, noise: f64) -> (f64, f64) {
    let signal = h.dotc(&beams[k]).norm_sqr();
    let interference: f64 = beams
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, w)| h.dotc(w).norm_sqr())
        .sum();
    let sinr = signal / (interference + noise);
    (sinr, (1.0 + sinr).log2())
}

/// Norm bound on the channel error caused by a position error of at most `r`.
#[allow(clippy::too_many_arguments)]
pub fn error_bound(
    m: usize,
    g0: f64,
    r: f64,
    d: f64,
    d_est: f64,
    aperture: f64,
    h: f64,
    wavelength: f64,
) -> f64 {
    ((m as f64) * g0).sqrt() * r / (d * d_est)
        * (1.0 + 2.0 * PI * aperture * h / (wavelength * d_est))
}

/// One user in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotUser {
    pub true_pos: [f64; 2],
    pub est_pos: [f64; 2],
    pub true_dist: f64,
    pub est_dist: f64,
    pub true_aoa: f64,
    pub est_aoa: f64,
    /// Channel-error norm bound.
    pub xi: f64,
    /// `(2 pi / lambda) cos(est_aoa)`.
    pub phase_rate: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState {
    pub config: SystemConfig,
    /// Indexed `[n][k]`.
    pub slots: Vec<Vec<SlotUser>>,
}

impl ScenarioState {
    /// `true_traj` and `est_traj` are indexed `[k][n]`.
    pub fn new(
        config: SystemConfig,
        true_traj: &[Vec<[f64; 2]>],
        est_traj: &[Vec<[f64; 2]>],
    ) -> Result<Self> {
        config.validate()?;
        let (k_n, n_n) = (config.num_users, config.num_slots);
        let shape_ok = |t: &[Vec<[f64; 2]>]| t.len() == k_n && t.iter().all(|u| u.len() == n_n);
        if !shape_ok(true_traj) || !shape_ok(est_traj) {
            return Err(Error::Geometry(format!(
                "trajectories must cover {k_n} users x {n_n} slots"
            )));
        }
        let c = &config;
        let mut slots = Vec::with_capacity(n_n);
        for n in 0..n_n {
            let mut users = Vec::with_capacity(k_n);
            for k in 0..k_n {
                let q = true_traj[k][n];
                let qh = est_traj[k][n];
                let r = c.position_error_radius[k];
                let err = horizontal_dist(q, qh);
                if err > r * (1.0 + 1e-12) + 1e-12 {
                    return Err(Error::Geometry(format!(
                        "user {k} slot {n}: estimate is {err} m off, beyond radius {r}"
                    )));
                }
                let d = distance(c.bs_xy, c.bs_height, q);
                let d_est = distance(c.bs_xy, c.bs_height, qh);
                let est_aoa = aoa(c.bs_xy, c.bs_height, qh);
                let xi = match &c.xi_override {
                    Some(v) => v[k],
                    None => {
                        let d_worst = (d_est - r).max(c.bs_height);
                        error_bound(
                            c.num_antennas,
                            c.ref_path_gain,
                            r,
                            d_worst,
                            d_est,
                            c.aperture,
                            c.bs_height,
                            c.wavelength,
                        )
                    }
                };
                users.push(SlotUser {
                    true_pos: q,
                    est_pos: qh,
                    true_dist: d,
                    est_dist: d_est,
                    true_aoa: aoa(c.bs_xy, c.bs_height, q),
                    est_aoa,
                    xi,
                    phase_rate: 2.0 * PI / c.wavelength * est_aoa.cos(),
                    noise: c.noise_power[k],
                });
            }
            slots.push(users);
        }
        Ok(ScenarioState { config, slots })
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn num_users(&self) -> usize {
        self.config.num_users
    }

    /// Estimated channel of user `k` in slot `n` for positions `x`.
    pub fn est_channel(&self, n: usize, k: usize, x: &[f64]) -> CVector {
        let u = &self.slots[n][k];
        steering_with_rate(x, u.phase_rate) * Complex64::from(self.est_gain(n, k))
    }

    /// `sqrt(g0) / d_est`, the per-entry magnitude of the estimated channel.
    pub fn est_gain(&self, n: usize, k: usize) -> f64 {
        self.config.ref_path_gain.sqrt() / self.slots[n][k].est_dist
    }

    /// Channel built from the true position.
    pub fn true_channel(&self, n: usize, k: usize, x: &[f64]) -> CVector {
        let u = &self.slots[n][k];
        let c = &self.config;
        steering(x, u.true_aoa, c.wavelength) * Complex64::from(c.ref_path_gain.sqrt() / u.true_dist)
    }

    /// Same scenario seen with perfect knowledge: estimates replaced by the
    /// true positions and no channel error.
    pub fn perfect_csi(&self) -> ScenarioState {
        let mut out = self.clone();
        out.config.xi_override = Some(vec![0.0; self.num_users()]);
        for slot in &mut out.slots {
            for u in slot.iter_mut() {
                u.est_pos = u.true_pos;
                u.est_dist = u.true_dist;
                u.est_aoa = u.true_aoa;
                u.phase_rate = 2.0 * PI / self.config.wavelength * u.true_aoa.cos();
                u.xi = 0.0;
            }
        }
        out
    }

    /// Restrict to a subset of slots, in the given order.
    pub fn select_slots(&self, slots: &[usize]) -> ScenarioState {
        let mut out = self.clone();
        out.slots = slots.iter().map(|&n| self.slots[n].clone()).collect();
        out.config.num_slots = slots.len();
        out
    }
}

/// Straight-road layout for generated trajectories: users drive in the +x
/// direction along a road parallel to the x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadLayout {
    /// Perpendicular offset of the road from the BS, in meters.
    pub offset: f64,
    /// Along-road position of the first user at slot 0, relative to the BS.
    pub start: f64,
    /// Along-road gap between consecutive users.
    pub spacing: f64,
    pub speed: f64,
    /// Uniform jitter (+-) added to each user's start, drawn from the seed.
    pub jitter: f64,
}

impl Default for RoadLayout {
    fn default() -> Self {
        RoadLayout { offset: 60.0, start: 10.0, spacing: 40.0, speed: 20.0, jitter: 5.0 }
    }
}

/// True trajectories `[k][n]` along the road.
pub fn road_trajectories(config: &SystemConfig, road: &RoadLayout, seed: u64) -> Vec<Vec<[f64; 2]>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..config.num_users)
        .map(|k| {
            let j = if road.jitter > 0.0 { rng.random_range(-road.jitter..=road.jitter) } else { 0.0 };
            let s0 = road.start + road.spacing * k as f64 + j;
            (0..config.num_slots)
                .map(|n| {
                    let s = s0 + road.speed * config.slot_length * n as f64;
                    [config.bs_xy[0] + s, config.bs_xy[1] + road.offset]
                })
                .collect()
        })
        .collect()
}

/// Estimated positions: each true position displaced uniformly inside its
/// user's error disc.
pub fn perturb_estimates(
    true_traj: &[Vec<[f64; 2]>],
    radii: &[f64],
    seed: u64,
) -> Vec<Vec<[f64; 2]>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e571_0000_0001);
    true_traj
        .iter()
        .zip(radii)
        .map(|(user, &r)| {
            user.iter()
                .map(|q| {
                    let rho = r * rng.random::<f64>().sqrt();
                    let phi = rng.random_range(0.0..2.0 * PI);
                    [q[0] + rho * phi.cos(), q[1] + rho * phi.sin()]
                })
                .collect()
        })
        .collect()
}

/// Default generated scenario for a config and seed.
pub fn generate_scenario(config: &SystemConfig, road: &RoadLayout, seed: u64) -> Result<ScenarioState> {
    config.validate()?;
    let q = road_trajectories(config, road, seed);
    let qh = perturb_estimates(&q, &config.position_error_radius, seed);
    ScenarioState::new(config.clone(), &q, &qh)
}

/// Beams and positions for every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    /// Indexed `[n][k]`.
    pub beams: Vec<Vec<CVector>>,
    /// Indexed `[n]`, ascending.
    pub positions: Vec<Vec<f64>>,
}

impl DesignPoint {
    pub fn slot_power(&self, n: usize) -> f64 {
        self.beams[n].iter().map(|w| w.norm_squared()).sum()
    }

    /// Checks power, region and spacing constraints with absolute tolerance.
    pub fn is_feasible(&self, config: &SystemConfig, tol: f64) -> bool {
        (0..self.beams.len()).all(|n| self.slot_power(n) <= config.max_power * (1.0 + tol))
            && self.positions.iter().all(|x| positions_feasible(x, config, tol))
    }
}

pub fn positions_feasible(x: &[f64], config: &SystemConfig, tol: f64) -> bool {
    if x.len() != config.num_antennas {
        return false;
    }
    let first_ok = x.first().is_none_or(|&v| v >= -tol);
    let last_ok = x.last().is_none_or(|&v| v <= config.aperture + tol);
    first_ok && last_ok && x.windows(2).all(|p| p[1] - p[0] >= config.min_spacing - tol)
}

/// Uniform grid over `[0, L]`.
pub fn uniform_positions(config: &SystemConfig) -> Vec<f64> {
    let m = config.num_antennas;
    if m == 1 {
        return vec![0.0];
    }
    (0..m).map(|i| config.aperture * i as f64 / (m - 1) as f64).collect()
}

/// Sort and push `x` back into the feasible set with a forward and a
/// backward sweep. A no-op on feasible input.
pub fn repair_positions(x: &mut [f64], config: &SystemConfig) {
    x.sort_by(f64::total_cmp);
    let m = x.len();
    if m == 0 {
        return;
    }
    let d = config.min_spacing;
    x[0] = x[0].max(0.0);
    for i in 1..m {
        x[i] = x[i].max(x[i - 1] + d);
    }
    x[m - 1] = x[m - 1].min(config.aperture);
    for i in (0..m - 1).rev() {
        x[i] = x[i].min(x[i + 1] - d);
    }
    x[0] = x[0].max(0.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aoa_examples() {
        assert_eq!(aoa([0.0, 0.0], 12.0, [0.0, 0.0]), 0.0);
        let a = aoa([0.0, 0.0], 12.0, [12.0, 0.0]);
        assert!((a - PI / 4.0).abs() < 1e-12);
        assert!(aoa([0.0, 0.0], 12.0, [1e9, 0.0]) > PI / 2.0 - 1e-6);
    }

    #[test]
    fn steering_examples() {
        let s = steering(&[0.0, 0.05], PI / 3.0, 0.1);
        assert!((s[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((s[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        let s = steering(&[0.1, 0.3, 0.7], PI / 2.0, 0.1);
        assert!(s.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
        assert_eq!(steering(&[0.0], 0.3, 0.1)[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn channel_examples() {
        let h = channel(&[0.0, 0.2, 0.4, 0.6], 0.3, 100.0, 1e-4, 0.1).unwrap();
        assert!(h.iter().all(|v| (v.norm() - 1e-4).abs() < 1e-18));
        let h2 = channel(&[0.0, 0.2, 0.4, 0.6], 0.3, 200.0, 1e-4, 0.1).unwrap();
        assert!((h * Complex64::from(0.5) - h2).norm() < 1e-18);
        assert!(channel(&[0.0], 0.3, 0.0, 1e-4, 0.1).is_err());
    }

    #[test]
    fn sinr_examples() {
        let h = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let w = DVector::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)]);
        let (s, r) = sinr_and_rate(&h, &[w.clone()], 0, 1.0);
        assert_eq!(s, 4.0);
        assert!((r - 5f64.log2()).abs() < 1e-15);
        let (s, r) = sinr_and_rate(&h, &[w * Complex64::from(0.0)], 0, 1.0);
        assert_eq!((s, r), (0.0, 0.0));
    }

    #[test]
    fn sinr_two_users_by_hand() {
        // h = [1, j]; w1 = [1, 0], w2 = [0, 1]: h^H w1 = 1, h^H w2 = -j.
        let h = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let w1 = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let w2 = DVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let (s, _) = sinr_and_rate(&h, &[w1, w2], 0, 0.5);
        assert!((s - 1.0 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn error_bound_examples() {
        assert_eq!(error_bound(4, 1e-4, 0.0, 100.0, 100.0, 0.6, 12.0, 0.1), 0.0);
        // 0.02 * 0.5 / 1e4 * (1 + 2 pi * 0.6 * 12 / 10)
        let xi = error_bound(4, 1e-4, 0.5, 100.0, 100.0, 0.6, 12.0, 0.1);
        assert!((xi - 5.523893421169302e-6).abs() < 1e-15, "{xi}");
        assert!(error_bound(4, 1e-4, 0.6, 100.0, 100.0, 0.6, 12.0, 0.1) > xi);
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(34.0) - 2.511886431509580).abs() < 1e-12);
    }

    #[test]
    fn repair_is_identity_on_feasible() {
        let c = SystemConfig::default();
        let mut x = uniform_positions(&c);
        let before = x.clone();
        repair_positions(&mut x, &c);
        assert_eq!(x, before);
        let mut y = vec![0.59, -0.01, 0.2, 0.21];
        repair_positions(&mut y, &c);
        assert!(positions_feasible(&y, &c, 1e-15), "{y:?}");
    }

    #[test]
    fn estimated_channel_matches_channel_at_estimate() {
        let c = SystemConfig::default();
        let s = generate_scenario(&c, &RoadLayout::default(), 3).unwrap();
        let x = uniform_positions(&c);
        let u = &s.slots[2][1];
        let direct = channel(
            &x,
            aoa(c.bs_xy, c.bs_height, u.est_pos),
            distance(c.bs_xy, c.bs_height, u.est_pos),
            c.ref_path_gain,
            c.wavelength,
        )
        .unwrap();
        assert_eq!(s.est_channel(2, 1, &x), direct);
    }
}
