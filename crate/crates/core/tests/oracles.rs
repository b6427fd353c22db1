//! The independent verifiers checked against closed forms and against
//! themselves.

use marobust::ao;
use marobust::certify::certify_slot;
use marobust::model::*;
use marobust::verify::*;
use marobust::Error;

fn certified(scn: &ScenarioState, d: &DesignPoint) -> Vec<Vec<f64>> {
    (0..scn.num_slots())
        .map(|n| certify_slot(scn, n, &d.beams[n], &d.positions[n]).iter().map(|c| c.sinr).collect())
        .collect()
}

fn single_link(m: usize, slots: usize, xi: Option<f64>) -> ScenarioState {
    let mut cfg = SystemConfig::default().with_users(1);
    cfg.num_antennas = m;
    cfg.num_slots = slots;
    cfg.xi_override = xi.map(|v| vec![v]);
    generate_scenario(&cfg, &RoadLayout::default(), 7).unwrap()
}

#[test]
fn zero_radius_sampling_sees_the_nominal_sinr() {
    let mut cfg = SystemConfig::default();
    cfg.xi_override = Some(vec![0.0; 2]);
    let scn = generate_scenario(&cfg, &RoadLayout::default(), 7).unwrap();
    let (d, _) = ao::initialize(&scn);
    let rep = mc_worst_case(&scn, &d, &certified(&scn, &d), 500, 3).unwrap();
    for e in &rep.entries {
        let h = scn.est_channel(e.slot, e.user, &d.positions[e.slot]);
        let (s, _) = sinr_and_rate(&h, &d.beams[e.slot], e.user, cfg.noise_power[e.user]);
        // the verifier rebuilds the channel on its own, so agreement is to rounding
        assert!((e.min_sinr - s).abs() <= 1e-14 * s, "{} vs {s}", e.min_sinr);
        assert_eq!(e.violations, 0);
    }
}

#[test]
fn single_antenna_minimum_matches_closed_form() {
    let base = single_link(1, 1, None);
    let hn = base.est_gain(0, 0);
    let xi = 0.3 * hn;
    let scn = single_link(1, 1, Some(xi));
    let (d, _) = ao::initialize(&scn);
    let rep = mc_worst_case(&scn, &d, &certified(&scn, &d), 10_000, 5).unwrap();
    let w = d.beams[0][0].norm();
    let closed = (hn - xi).powi(2) * w * w / scn.config.noise_power[0];
    let got = rep.entries[0].min_sinr;
    assert!((got - closed).abs() <= 0.01 * closed, "{got} vs {closed}");
    assert!(got >= closed * (1.0 - 1e-9));
}

#[test]
fn sampled_minimum_respects_certificate_on_default_design() {
    let scn = generate_scenario(&SystemConfig::default(), &RoadLayout::default(), 7).unwrap();
    let (d, _) = ao::initialize(&scn);
    let cert = certified(&scn, &d);
    let rep = mc_worst_case(&scn, &d, &cert, 3000, 11).unwrap();
    assert_eq!(rep.total_violations(), 0);
    assert_eq!(rep.seed, 11);
    assert!(rep.entries.iter().all(|e| e.samples == 3000 && e.min_sinr >= e.certified_sinr));
    // the same seed reproduces the report
    let again = mc_worst_case(&scn, &d, &cert, 3000, 11).unwrap();
    assert_eq!(rep.entries, again.entries);
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + rep.entries.len());
}

#[test]
fn inflated_certificate_is_caught() {
    let scn = generate_scenario(&SystemConfig::default(), &RoadLayout::default(), 7).unwrap();
    let (d, _) = ao::initialize(&scn);
    let mut cert = certified(&scn, &d);
    cert[0][0] *= 10.0;
    let rep = mc_worst_case(&scn, &d, &cert, 500, 1).unwrap();
    assert!(rep.entries.iter().find(|e| e.slot == 0 && e.user == 0).unwrap().violations > 0);
}

#[test]
fn error_bound_holds_and_vanishes_without_position_error() {
    let scn = generate_scenario(&SystemConfig::default(), &RoadLayout::default(), 7).unwrap();
    let rep = check_error_bound(&scn, 10_000, 2);
    assert!(rep.pass && rep.max_ratio > 0.0, "{rep:?}");

    let mut cfg = SystemConfig::default();
    cfg.position_error_radius = vec![0.0; 2];
    let exact = generate_scenario(&cfg, &RoadLayout::default(), 7).unwrap();
    let rep = check_error_bound(&exact, 1000, 2);
    assert_eq!(rep.max_ratio, 0.0);
    assert!(rep.pass);
}

#[test]
fn boundary_sampling_pushes_ratio_up() {
    let scn = generate_scenario(&SystemConfig::default(), &RoadLayout::default(), 7).unwrap();
    let interior = check_error_bound_stratified(&scn, 4000, 9, 0.0);
    let boundary = check_error_bound_stratified(&scn, 4000, 9, 1.0);
    assert!(boundary.max_ratio >= interior.max_ratio, "{boundary:?} vs {interior:?}");
    assert!(boundary.pass);
}

#[test]
fn brute_force_single_antenna_is_position_invariant() {
    let scn = single_link(1, 1, None);
    let (d, _) = ao::initialize(&scn);
    let lambda = scn.config.wavelength;
    let (_, fine) = brute_force_positions(&scn, 0, &d.beams[0], 0.01 * lambda, 200, 1).unwrap();
    let (_, coarse) = brute_force_positions(&scn, 0, &d.beams[0], 1.5 * lambda, 200, 1).unwrap();
    assert!((fine - coarse).abs() <= 1e-12 * fine, "{fine} vs {coarse}");
}

#[test]
fn refining_the_grid_never_loses() {
    let scn = single_link(2, 1, None);
    let (d, _) = ao::initialize(&scn);
    let lambda = scn.config.wavelength;
    let (_, coarse) = brute_force_positions(&scn, 0, &d.beams[0], 0.1 * lambda, 100, 4).unwrap();
    let (x, fine) = brute_force_positions(&scn, 0, &d.beams[0], 0.05 * lambda, 100, 4).unwrap();
    assert!(fine >= coarse - 1e-12, "{fine} < {coarse}");
    assert!(positions_feasible(&x, &scn.config, 1e-12));
}

#[test]
fn brute_force_rejects_large_arrays() {
    let scn = generate_scenario(&SystemConfig::default(), &RoadLayout::default(), 7).unwrap();
    let (d, _) = ao::initialize(&scn);
    let err = brute_force_positions(&scn, 0, &d.beams[0], 0.01, 10, 1).unwrap_err();
    assert!(matches!(err, Error::Argument(_)));
}

#[test]
fn brute_force_matches_exact_evaluation_without_uncertainty() {
    // with no channel error the oracle value is the plain sum rate
    let scn = single_link(2, 1, Some(0.0));
    let (d, _) = ao::initialize(&scn);
    let (x, v) = brute_force_positions(&scn, 0, &d.beams[0], 0.1 * scn.config.wavelength, 10, 1).unwrap();
    let h = scn.est_channel(0, 0, &x);
    let (_, rate) = sinr_and_rate(&h, &d.beams[0], 0, scn.config.noise_power[0]);
    assert!((v - rate).abs() <= 1e-12 * rate);
}

#[test]
fn empty_suite_passes() {
    let rep = surrogate_suite(1, 0);
    assert!(rep.passed());
    assert!(rep.checks.iter().all(|c| c.trials == 0 && c.violations == 0));
}

#[test]
fn suite_is_reproducible_and_clean() {
    let a = surrogate_suite(42, 2000);
    let b = surrogate_suite(42, 2000);
    assert_eq!(a.checks, b.checks);
    assert!(a.passed(), "{:?}", a.checks);
    assert_eq!(a.checks.len(), 9);
}
