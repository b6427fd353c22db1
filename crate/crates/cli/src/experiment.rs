//! Sweep execution and CSV emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use marobust::ao::AoTrace;
use marobust::baselines::{run_scheme, Scheme};
use marobust::certify::certify_slot;
use marobust::model::{generate_scenario, perturb_estimates, CVector, DesignPoint, ScenarioState};
use marobust::verify::mc_worst_case;
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ExperimentSpec, SystemSection, TrajectorySection};

/// Nine significant digits.
pub fn fmt9(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.8e}")
    } else {
        format!("{v}")
    }
}

fn value_label(v: Option<f64>) -> String {
    v.map_or_else(|| "default".to_string(), |v| format!("{v}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub axis_value: Option<f64>,
    pub final_objective: f64,
    /// Slot-averaged smallest sampled sum rate; `None` when verification is off.
    pub mc_min_rate: Option<f64>,
    pub mc_violations: usize,
    pub iterations: usize,
    pub seconds: f64,
    pub trace: AoTrace,
    pub design: DesignPoint,
}

#[derive(Debug, Default)]
pub struct ExperimentReport {
    pub runs: Vec<RunRecord>,
    /// One diagnostic per failed run.
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
}

fn read_trajectory(path: &Path, users: usize, slots: usize) -> Result<Vec<Vec<[f64; 2]>>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading trajectory {}", path.display()))?;
    let mut out = vec![vec![None; slots]; users];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i).with_context(|| format!("{}: row {} has too few columns", path.display(), line + 2))
        };
        let k: usize = field(0)?.trim().parse()?;
        let n: usize = field(1)?.trim().parse()?;
        let x: f64 = field(2)?.trim().parse()?;
        let y: f64 = field(3)?.trim().parse()?;
        if k < users && n < slots {
            out[k][n] = Some([x, y]);
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(k, row)| {
            row.into_iter()
                .enumerate()
                .map(|(n, p)| p.with_context(|| format!("{}: no position for user {k} slot {n}", path.display())))
                .collect()
        })
        .collect()
}

pub fn build_scenario(spec: &ExperimentSpec, system: &SystemSection) -> Result<ScenarioState> {
    let config = system.to_config();
    match &spec.trajectory {
        TrajectorySection::Road { .. } => {
            let road = spec.road().expect("road section");
            Ok(generate_scenario(&config, &road, spec.seed)?)
        }
        TrajectorySection::File { path } => {
            let truth = read_trajectory(path, config.num_users, config.num_slots)?;
            let est = perturb_estimates(&truth, &config.position_error_radius, spec.seed);
            Ok(ScenarioState::new(config, &truth, &est)?)
        }
    }
}

fn certified_sinrs(scenario: &ScenarioState, design: &DesignPoint) -> Vec<Vec<f64>> {
    (0..scenario.num_slots())
        .map(|n| certify_slot(scenario, n, &design.beams[n], &design.positions[n]).iter().map(|c| c.sinr).collect())
        .collect()
}

fn run_one(spec: &ExperimentSpec, scheme: Scheme, value: Option<f64>) -> Result<RunRecord> {
    let scenario = build_scenario(spec, &spec.system_at(value))?;
    let start = Instant::now();
    let (design, _slack, trace) = run_scheme(scheme, &scenario, &spec.ao_options());
    let seconds = start.elapsed().as_secs_f64();
    // the upper bound is judged on the channel it was designed for
    let judged = if scheme == Scheme::Upper { scenario.perfect_csi() } else { scenario };
    let (mc_min_rate, mc_violations) = if spec.verify_samples > 0 {
        let cert = certified_sinrs(&judged, &design);
        let rep = mc_worst_case(&judged, &design, &cert, spec.verify_samples, spec.seed)?;
        (Some(rep.min_rate()), rep.total_violations())
    } else {
        (None, 0)
    };
    Ok(RunRecord {
        scheme,
        axis_value: value,
        final_objective: trace.final_objective(),
        mc_min_rate,
        mc_violations,
        iterations: trace.iterations.len(),
        seconds,
        trace,
        design,
    })
}

pub fn write_convergence<W: Write>(trace: &AoTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "objective", "seconds"])?;
    w.write_record(["0".to_string(), fmt9(trace.initial_objective), fmt9(0.0)])?;
    for r in &trace.iterations {
        w.write_record([r.iter.to_string(), fmt9(r.objective), fmt9(r.elapsed)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per slot, user and antenna: the beam entry and that antenna's
/// position.
pub fn write_design<W: Write>(design: &DesignPoint, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "user", "antenna", "w_re", "w_im", "x_m"])?;
    for (n, beams) in design.beams.iter().enumerate() {
        for (k, b) in beams.iter().enumerate() {
            for (m, c) in b.iter().enumerate() {
                w.write_record([
                    n.to_string(),
                    k.to_string(),
                    m.to_string(),
                    fmt9(c.re),
                    fmt9(c.im),
                    fmt9(design.positions[n][m]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_design(path: &Path, slots: usize, users: usize, antennas: usize) -> Result<DesignPoint> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading design {}", path.display()))?;
    let mut beams = vec![vec![DVector::<Complex64>::zeros(antennas); users]; slots];
    let mut positions = vec![vec![f64::NAN; antennas]; slots];
    let mut seen = vec![false; slots * users * antennas];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        let get = |i: usize| rec.get(i).with_context(|| format!("{}: row {row} has too few columns", path.display()));
        let n: usize = get(0)?.parse()?;
        let k: usize = get(1)?.parse()?;
        let m: usize = get(2)?.parse()?;
        if n >= slots || k >= users || m >= antennas {
            bail!("{}: row {row} indexes slot {n}, user {k}, antenna {m} outside the configured sizes", path.display());
        }
        beams[n][k][m] = Complex64::new(get(3)?.parse()?, get(4)?.parse()?);
        positions[n][m] = get(5)?.parse()?;
        seen[(n * users + k) * antennas + m] = true;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        bail!("{}: missing entry for slot {}, user {}, antenna {}", path.display(), i / (users * antennas), (i / antennas) % users, i % antennas);
    }
    let beams: Vec<Vec<CVector>> = beams;
    Ok(DesignPoint { beams, positions })
}

fn write_file(path: &Path, f: impl FnOnce(fs::File) -> Result<()>) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f(file)
}

/// Runs every sweep point and scheme, writing the CSV set into
/// `spec.output_dir`. Failed runs are reported, the rest are still written.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let schemes = spec.parsed_schemes()?;
    fs::create_dir_all(&spec.output_dir).with_context(|| format!("creating {}", spec.output_dir.display()))?;
    let tasks: Vec<(Option<f64>, Scheme)> =
        spec.sweep_points().into_iter().flat_map(|v| schemes.iter().map(move |&s| (v, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(spec.workers).build()?;
    let results: Vec<Result<RunRecord>> =
        pool.install(|| tasks.par_iter().map(|&(v, s)| run_one(spec, s, v)).collect());

    let mut report = ExperimentReport::default();
    for ((value, scheme), res) in tasks.iter().zip(results) {
        let label = value_label(*value);
        match res {
            Ok(rec) => {
                let conv = spec.output_dir.join(format!("convergence_{scheme}_{label}.csv"));
                write_file(&conv, |f| write_convergence(&rec.trace, f))?;
                let des = spec.output_dir.join(format!("design_{scheme}_{label}.csv"));
                write_file(&des, |f| write_design(&rec.design, f))?;
                report.files.push(conv);
                report.files.push(des);
                report.runs.push(rec);
            }
            Err(e) => report.failures.push(format!("{scheme} at {} = {label}: {e:#}", spec.sweep.axis.name())),
        }
    }
    let sweep = spec.output_dir.join(format!("sweep_{}.csv", spec.sweep.axis.name()));
    write_file(&sweep, |f| {
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["axis_value", "scheme", "final_objective", "mc_min_rate"])?;
        for r in &report.runs {
            w.write_record([
                r.axis_value.map_or_else(String::new, fmt9),
                r.scheme.to_string(),
                fmt9(r.final_objective),
                r.mc_min_rate.map_or_else(String::new, fmt9),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    report.files.push(sweep);
    Ok(report)
}

impl ExperimentReport {
    /// Runs whose verification found a sampled rate below the certificate.
    pub fn inconsistent_runs(&self) -> Vec<&RunRecord> {
        self.runs
            .iter()
            .filter(|r| r.mc_violations > 0 || r.mc_min_rate.is_some_and(|mc| r.final_objective > mc + 1e-9))
            .collect()
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small_spec(dir: &Path, extra: &str) -> ExperimentSpec {
        let text = format!(
            r#"{{"system": {{"n": 1, "m": 2, "l_lambda": 2}}, "ao": {{"max_iters": 3}},
                "verify_samples": 200, "output_dir": {:?} {extra}}}"#,
            dir.to_str().unwrap()
        );
        parse_config(&text, Vec::new()).unwrap()
    }

    #[test]
    fn fmt9_keeps_nine_significant_digits() {
        assert_eq!(fmt9(2.5118864315095801), "2.51188643e0");
        assert_eq!(fmt9(-1234.5), "-1.23450000e3");
    }

    #[test]
    fn emits_the_file_set_and_reproduces_it() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let extra = r#", "sweep": {"axis": "p_max_dbm", "values": [30, 34]}, "workers": 2"#;
        let ra = run_experiment(&small_spec(a.path(), extra)).unwrap();
        let rb = run_experiment(&small_spec(b.path(), extra)).unwrap();
        assert!(ra.failures.is_empty());
        assert_eq!(ra.runs.len(), 8);
        for scheme in ["proposed", "fpa", "fb", "upper"] {
            for v in ["30", "34"] {
                assert!(a.path().join(format!("convergence_{scheme}_{v}.csv")).exists());
                assert!(a.path().join(format!("design_{scheme}_{v}.csv")).exists());
            }
        }
        assert!(ra.inconsistent_runs().is_empty());
        // identical inputs give identical bytes, apart from wall-clock columns
        let strip = |p: &Path| -> String {
            fs::read_to_string(p)
                .unwrap()
                .lines()
                .map(|l| if p.file_name().unwrap().to_str().unwrap().starts_with("convergence") {
                    l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()
                } else {
                    l.to_string()
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        for (fa, fb) in ra.files.iter().zip(&rb.files) {
            assert_eq!(strip(fa), strip(fb), "{}", fa.display());
        }
        let sweep = fs::read_to_string(a.path().join("sweep_p_max_dbm.csv")).unwrap();
        assert!(sweep.starts_with("axis_value,scheme,final_objective,mc_min_rate\n"));
        assert_eq!(sweep.lines().count(), 9);
    }

    #[test]
    fn design_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec(dir.path(), r#", "schemes": ["proposed"]"#);
        let rep = run_experiment(&spec).unwrap();
        let path = dir.path().join("design_proposed_default.csv");
        let back = read_design(&path, 1, 2, 2).unwrap();
        let orig = &rep.runs[0].design;
        for (wa, wb) in orig.beams[0].iter().zip(&back.beams[0]) {
            assert!((wa - wb).norm() <= 1e-8 * wa.norm());
        }
        assert!(read_design(&path, 1, 3, 2).is_err());
    }

    #[test]
    fn failed_runs_are_reported_and_others_kept() {
        let dir = tempfile::tempdir().unwrap();
        let traj = dir.path().join("traj.csv");
        // only user 0 has positions
        fs::write(&traj, "user,slot,x_m,y_m\n0,0,260,300\n").unwrap();
        let mut spec = small_spec(dir.path(), r#", "schemes": ["fpa"]"#);
        spec.trajectory = TrajectorySection::File { path: traj };
        let rep = run_experiment(&spec).unwrap();
        assert_eq!(rep.failures.len(), 1);
        assert!(rep.failures[0].contains("user 1"), "{}", rep.failures[0]);
        assert!(dir.path().join("sweep_none.csv").exists());
    }
}
