//! Acceptance criteria, one PASS/FAIL line each. Runs sequentially so the
//! timing criteria are not skewed by sibling tests; exits nonzero if any
//! criterion fails. Pass substrings as arguments to run a subset.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use conic::planted::{instance_shapes, planted_instance};
use conic::{solve, Settings, Status};
use marobust::ao::{self, AoOptions};
use marobust::baselines::{run_fpa, run_proposed, run_scheme, Scheme};
use marobust::certify::{certified_objective, certify_slot};
use marobust::model::*;
use marobust::verify::{brute_force_positions, check_error_bound, mc_worst_case, surrogate_suite};
use marobust_cli::{parse_config, run_experiment};

const SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn default_scenario(seed: u64) -> ScenarioState {
    generate_scenario(&SystemConfig::default(), &RoadLayout::default(), seed).unwrap()
}

fn certified(scn: &ScenarioState, d: &DesignPoint) -> Vec<Vec<f64>> {
    (0..scn.num_slots())
        .map(|n| certify_slot(scn, n, &d.beams[n], &d.positions[n]).iter().map(|c| c.sinr).collect())
        .collect()
}

/// Final objective per scheme and axis value, through the experiment runner.
fn sweep(axis: &str, values: &[f64], schemes: &[&str]) -> BTreeMap<String, Vec<f64>> {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"{{"seed": {SEED}, "schemes": {schemes:?}, "verify_samples": 0,
            "sweep": {{"axis": "{axis}", "values": {values:?}}}, "output_dir": {:?}}}"#,
        dir.path().to_str().unwrap()
    );
    let spec = parse_config(&text, Vec::new()).unwrap();
    let report = run_experiment(&spec).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &report.runs {
        out.entry(r.scheme.to_string()).or_default().push(r.final_objective);
    }
    out
}

/// Largest drop between consecutive values (positive means a decrease).
fn worst_drop(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max)
}

fn fmt_series(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" -> ")
}

fn convergence() -> Outcome {
    let scn = default_scenario(SEED);
    let start = Instant::now();
    let (_, _, trace) = run_proposed(&scn, &AoOptions::default());
    let secs = start.elapsed().as_secs_f64();
    let obj = trace.objectives();
    let drop = worst_drop(&obj).max(0.0);
    let iters = trace.iterations.len();
    outcome(
        drop <= 1e-6 && iters <= 30 && secs <= 300.0,
        format!("{iters} iterations, largest drop {drop:.1e}, {secs:.1} s, objective {:.4} -> {:.4}", obj[0], obj[obj.len() - 1]),
    )
}

fn ordering() -> Outcome {
    let opts = AoOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 1..=5 {
        let scn = default_scenario(seed);
        let v: Vec<f64> = Scheme::ALL.iter().map(|&s| run_scheme(s, &scn, &opts).2.final_objective()).collect();
        let (p, fpa, fb, up) = (v[0], v[1], v[2], v[3]);
        let good = up >= p - 1e-3 && p >= fpa.max(fb) - 1e-3;
        ok &= good;
        parts.push(format!("seed {seed}: upper {up:.3} proposed {p:.3} fpa {fpa:.3} fb {fb:.3}{}", if good { "" } else { " (!)" }));
    }
    outcome(ok, parts.join("; "))
}

fn power_trend() -> Outcome {
    let res = sweep("p_max_dbm", &[28.0, 30.0, 32.0, 34.0], &["proposed", "fpa", "fb", "upper"]);
    let ok = res.values().all(|v| worst_drop(v) <= 1e-3);
    let detail = res.iter().map(|(s, v)| format!("{s}: {}", fmt_series(v))).collect::<Vec<_>>().join("; ");
    outcome(ok, detail)
}

fn antenna_and_aperture_trend() -> Outcome {
    let m = sweep("m", &[2.0, 4.0, 6.0], &["proposed"]);
    let l = sweep("l_lambda", &[4.0, 6.0, 8.0], &["proposed", "fpa", "fb"]);
    let (pm, pl) = (&m["proposed"], &l["proposed"]);
    let ok = worst_drop(pm) <= 1e-3 && worst_drop(pl) <= 1e-3;
    let fb_over_fpa: Vec<String> = [4, 6, 8]
        .iter()
        .zip(l["fb"].iter().zip(&l["fpa"]))
        .map(|(lv, (fb, fpa))| format!("{lv}λ {}", if fb > fpa { "fb>fpa" } else { "fb<=fpa" }))
        .collect();
    outcome(
        ok,
        format!(
            "M 2/4/6: {}; L 4/6/8λ: {}; reported only: {} (fb {} / fpa {})",
            fmt_series(pm),
            fmt_series(pl),
            fb_over_fpa.join(", "),
            fmt_series(&l["fb"]),
            fmt_series(&l["fpa"])
        ),
    )
}

fn user_trend() -> Outcome {
    let res = sweep("k", &[2.0, 3.0, 4.0], &["proposed", "fpa", "fb", "upper"]);
    // nonincreasing: the largest rise must stay within tolerance
    let rise = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let ok = res.values().all(|v| rise(v) <= 1e-3);
    let detail = res.iter().map(|(s, v)| format!("{s}: {}", fmt_series(v))).collect::<Vec<_>>().join("; ");
    outcome(ok, detail)
}

fn robustness_certificate() -> Outcome {
    let scn = default_scenario(SEED);
    let opts = AoOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for scheme in Scheme::ALL {
        let (d, _, _) = run_scheme(scheme, &scn, &opts);
        let judged = if scheme == Scheme::Upper { scn.perfect_csi() } else { scn.clone() };
        let rep = mc_worst_case(&judged, &d, &certified(&judged, &d), 10_000, SEED).unwrap();
        let v = rep.total_violations();
        ok &= v == 0;
        parts.push(format!("{scheme}: {v} violations over {} samples", rep.samples * rep.entries.len()));
    }
    outcome(ok, parts.join("; "))
}

fn stress_scenario() -> ScenarioState {
    let mut cfg = SystemConfig::default();
    cfg.num_slots = 1;
    cfg.position_error_radius = vec![2.0; 2];
    // horizontal range giving an estimated distance of exactly 30 m
    let rho = (30.0f64 * 30.0 - cfg.bs_height * cfg.bs_height).sqrt();
    let at = |phi: f64| vec![[cfg.bs_xy[0] + rho * phi.cos(), cfg.bs_xy[1] + rho * phi.sin()]];
    let traj = vec![at(0.3), at(0.3 + PI / 2.0)];
    ScenarioState::new(cfg, &traj, &traj).unwrap()
}

fn error_bound() -> Outcome {
    let base = check_error_bound(&default_scenario(SEED), 10_000, SEED);
    let stress_scn = stress_scenario();
    let d_est = stress_scn.slots[0][0].est_dist;
    let stress = check_error_bound(&stress_scn, 10_000, SEED);
    outcome(
        base.pass && stress.pass,
        format!(
            "default max ratio {:.4}; stress (r = 2 m, estimated distance {d_est:.1} m) max ratio {:.4}",
            base.max_ratio, stress.max_ratio
        ),
    )
}

fn surrogates() -> Outcome {
    let rep = surrogate_suite(SEED, 100_000);
    let detail = rep
        .checks
        .iter()
        .map(|c| format!("{} {}/{}", c.name, c.violations, c.trials))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(rep.passed() && rep.total_violations() == 0, detail)
}

fn oracle_equivalence() -> Outcome {
    // position search against the exhaustive grid, same beams
    let mut cfg = SystemConfig::default().with_users(1);
    cfg.num_antennas = 2;
    cfg.num_slots = 1;
    let scn = generate_scenario(&cfg, &RoadLayout::default(), SEED).unwrap();
    let (d, _, _) = run_proposed(&scn, &AoOptions::default());
    let optimized = certified_objective(&scn, &d);
    let (xb, grid) = brute_force_positions(&scn, 0, &d.beams[0], 0.01 * cfg.wavelength, 2000, SEED).unwrap();
    let pos_gap = (optimized - grid).abs();

    // nominal single-user beamforming against the matched filter
    let nom_cfg = SystemConfig { xi_override: Some(vec![0.0]), ..SystemConfig::default().with_users(1) };
    let nom = generate_scenario(&nom_cfg, &RoadLayout::default(), SEED).unwrap();
    let (dn, _, tn) = run_fpa(&nom, &AoOptions::default());
    let closed: f64 = (0..nom.num_slots())
        .map(|n| {
            let h = nom.est_channel(n, 0, &dn.positions[n]);
            let w = ao::matched_filter(&h, nom_cfg.max_power);
            sinr_and_rate(&h, &[w], 0, nom_cfg.noise_power[0]).1
        })
        .sum::<f64>()
        / nom.num_slots() as f64;
    let bf_gap = (tn.final_objective() - closed).abs();
    outcome(
        pos_gap <= 1e-2 && bf_gap <= 1e-4,
        format!(
            "positions: optimized {:?} rate {optimized:.5} vs grid {:?} rate {grid:.5} (gap {pos_gap:.1e}); \
             matched filter gap {bf_gap:.1e}",
            d.positions[0].iter().map(|v| format!("{:.4}", v / cfg.wavelength)).collect::<Vec<_>>(),
            xb.iter().map(|v| format!("{:.4}", v / cfg.wavelength)).collect::<Vec<_>>()
        ),
    )
}

fn conic_solver() -> Outcome {
    // the absolute gap is asserted, so the solver runs a decade tighter than
    // its relative stopping default
    let settings = Settings { tol: 1e-8, ..Settings::default() };
    let mut worst_gap = 0.0f64;
    let mut worst_err = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut bad = Vec::new();
    for seed in 0..50 {
        let (cones, n, p) = instance_shapes(seed);
        let inst = planted_instance(seed, &cones, n, p);
        let start = Instant::now();
        let sol = solve(&inst.problem, &settings);
        let took = start.elapsed();
        let err = (sol.primal_objective - inst.optimum).abs() / (1.0 + inst.optimum.abs());
        worst_gap = worst_gap.max(sol.gap);
        worst_err = worst_err.max(err);
        slowest = slowest.max(took);
        if sol.status != Status::Optimal || sol.gap > 1e-7 || err > 1e-6 || took >= Duration::from_secs(1) {
            bad.push(seed);
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "50 planted instances, max duality gap {worst_gap:.1e}, max objective error {worst_err:.1e}, slowest {:.1} ms{}",
            slowest.as_secs_f64() * 1e3,
            if bad.is_empty() { String::new() } else { format!(", failing seeds {bad:?}") }
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    ("convergence", convergence),
    ("scheme_ordering", ordering),
    ("power_trend", power_trend),
    ("antenna_and_aperture_trend", antenna_and_aperture_trend),
    ("user_count_trend", user_trend),
    ("robustness_certificate", robustness_certificate),
    ("error_bound", error_bound),
    ("surrogate_suite", surrogates),
    ("oracle_equivalence", oracle_equivalence),
    ("conic_solver", conic_solver),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<&Criterion> =
        CRITERIA.iter().filter(|(name, _)| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()))).collect();
    println!("\nrunning {} acceptance criteria", selected.len());
    let mut failed = 0;
    for (name, check) in selected {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {name} ({:.1} s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
