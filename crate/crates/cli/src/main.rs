use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use marobust::certify::certify_slot;
use marobust::verify::mc_worst_case;
use marobust_cli::experiment::build_scenario;
use marobust_cli::{load_config, read_design, run_experiment};

#[derive(Parser)]
#[command(name = "marobust", version, about = "Robust beamforming and movable-antenna positioning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scheme over the configured sweep and write CSV results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        verify_samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte-Carlo check of a design file against the config's scenario.
    Verify {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-user report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, out, workers, verify_samples, seed } => {
            let mut spec = load_config(&config)?;
            if let Some(o) = out {
                spec.output_dir = o;
            }
            if let Some(w) = workers {
                spec.workers = w;
            }
            if let Some(s) = verify_samples {
                spec.verify_samples = s;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec.validate()?;
            let report = run_experiment(&spec)?;
            for r in &report.runs {
                let label = r.axis_value.map_or_else(|| "default".into(), |v| v.to_string());
                let mc = r.mc_min_rate.map_or_else(|| "-".into(), |v| format!("{v:.4}"));
                println!(
                    "{:<8} {}={:<8} objective {:.4}  mc_min_rate {}  iters {}  {:.2}s",
                    r.scheme.name(),
                    spec.sweep.axis.name(),
                    label,
                    r.final_objective,
                    mc,
                    r.iterations,
                    r.seconds
                );
            }
            for r in report.inconsistent_runs() {
                eprintln!("warning: {} run has sampled rates below its certificate", r.scheme);
            }
            for f in &report.failures {
                eprintln!("error: {f}");
            }
            Ok(report.failures.is_empty())
        }
        Command::Verify { design, config, samples, seed, out } => {
            let mut spec = load_config(&config)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let scenario = build_scenario(&spec, &spec.system)?;
            let c = &scenario.config;
            let d = read_design(&design, c.num_slots, c.num_users, c.num_antennas)?;
            let cert: Vec<Vec<f64>> = (0..scenario.num_slots())
                .map(|n| certify_slot(&scenario, n, &d.beams[n], &d.positions[n]).iter().map(|c| c.sinr).collect())
                .collect();
            let rep = mc_worst_case(&scenario, &d, &cert, samples, spec.seed)?;
            match out {
                Some(p) => rep.write_csv(std::fs::File::create(p)?)?,
                None => rep.write_csv(std::io::stdout().lock())?,
            }
            eprintln!(
                "feasible: {}  violations: {}  mc_min_rate: {:.6}",
                d.is_feasible(c, 1e-9),
                rep.total_violations(),
                rep.min_rate()
            );
            Ok(rep.total_violations() == 0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
