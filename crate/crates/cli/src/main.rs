//! `iptm`: run the charging cases, sweep the cabin slack weight, verify
//! derivatives and tabulate finished runs.

mod compare;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use rayon::prelude::*;

use iptm::diagnostics::{check_gradients, GRADIENT_TOLERANCE};
use iptm::mpc::run_closed_loop;
use iptm::plant::RunStatus;
use iptm::scenario::{load_scenario, CaseId, CasePreset};

/// Relative error injected by the hidden `--perturb-gradient` hook.
const GRADIENT_PERTURBATION: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "iptm", version, about = "Charging-phase power and thermal management MPC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one case in closed loop and write its trajectory and metrics.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        case: CaseId,
        #[arg(long)]
        out: PathBuf,
        /// Plant integration step, seconds.
        #[arg(long)]
        plant_dt: Option<f64>,
        /// Also write the per-replan solver records.
        #[arg(long)]
        trace: bool,
    },
    /// Run the blind-preview case for each cabin slack weight.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        beta2: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        parallel: u16,
    },
    /// Compare analytic derivatives with central differences at random points.
    CheckGradients {
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        n_points: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        perturb_gradient: bool,
    },
    /// Tabulate the metrics of finished runs side by side.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_logging() {
    env_logger::Builder::new()
        .parse_env(env_logger::Env::new().filter_or("IPTM_LOG", "warn"))
        .format_timestamp(None)
        .init();
}

fn status_code(status: RunStatus) -> u8 {
    match status {
        RunStatus::Converged => 0,
        RunStatus::TargetNotReached => 2,
    }
}

fn cmd_run(scenario_path: PathBuf, case: CaseId, out: PathBuf, plant_dt: Option<f64>, trace: bool) -> Result<u8> {
    let mut scenario = load_scenario(&scenario_path).with_context(|| format!("loading {}", scenario_path.display()))?;
    if let Some(dt) = plant_dt {
        if !(dt > 0.0 && dt.is_finite()) {
            bail!("--plant-dt must be positive, got {dt}");
        }
        scenario.controller.plant_dt_s = dt;
    }
    let preset = case.preset(&scenario);
    info!("running case {case} of {}", scenario.name);
    let run = run_closed_loop(&scenario, &preset).with_context(|| format!("case {case}"))?;
    output::write_run(&out, &scenario_path, &scenario, case, &run, trace)?;
    println!("{}", output::summary_line(case.as_str(), &run.metrics));
    Ok(status_code(run.metrics.status))
}

fn cmd_sweep(scenario_path: PathBuf, beta2: Vec<f64>, out: PathBuf, parallel: u16) -> Result<u8> {
    if beta2.len() < 2 {
        bail!("--beta2 needs at least two comma-separated values");
    }
    if let Some(b) = beta2.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        bail!("--beta2 values must be nonnegative, got {b}");
    }
    let scenario = load_scenario(&scenario_path).with_context(|| format!("loading {}", scenario_path.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallel as usize).build()?;
    let rows: Vec<output::SweepRow> = pool.install(|| {
        beta2
            .par_iter()
            .map(|&b| {
                let result = run_closed_loop(&scenario, &CasePreset::no_charge_preview(b));
                output::SweepRow::new(b, result.map(|r| r.metrics).map_err(|e| e.to_string()))
            })
            .collect()
    });
    output::write_sweep(&out, &rows)?;
    for row in &rows {
        println!("beta2 = {:e}: {}", row.beta2, row.status);
    }
    let code = if rows.iter().any(|r| r.failed()) {
        1
    } else if rows.iter().any(|r| r.status != "converged") {
        2
    } else {
        0
    };
    Ok(code)
}

fn cmd_check_gradients(n_points: u64, seed: u64, perturb: bool) -> Result<u8> {
    let report = check_gradients(n_points as usize, seed, perturb.then_some(GRADIENT_PERTURBATION))?;
    let w = &report.worst;
    println!(
        "{} points, seed {}: max relative error {:.3e} (tolerance {:.0e})",
        report.n_points, report.seed, report.max_rel_error, GRADIENT_TOLERANCE
    );
    println!(
        "worst: {:?} w.r.t. {} at point {} (analytic {:.9e}, finite difference {:.9e})",
        w.component, w.variable, w.point, w.analytic, w.finite_difference
    );
    if report.passed() {
        Ok(0)
    } else {
        eprintln!("error: derivative check failed at {:?} w.r.t. {}", w.component, w.variable);
        Ok(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging();
    let result = match cli.command {
        Command::Run { scenario, case, out, plant_dt, trace } => cmd_run(scenario, case, out, plant_dt, trace),
        Command::Sweep { scenario, beta2, out, parallel } => cmd_sweep(scenario, beta2, out, parallel),
        Command::CheckGradients { n_points, seed, perturb_gradient } => {
            cmd_check_gradients(n_points, seed, perturb_gradient)
        }
        Command::Compare { runs, out } => compare::cmd_compare(&runs, &out).map(|()| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
