//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{euler_cabin_error, DoubleIntegrator, ToyQp};
use iptm::diagnostics::check_gradients;
use iptm::models::{battery_current, soc_rate, VehicleState};
use iptm::mpc::{beta2_of_soc, run_closed_loop, RunOutput, WeightSchedule};
use iptm::plant::{Phase, RunStatus};
use iptm::scenario::{calibrate_alpha, nominal_scenario, CaseId, Scenario};
use iptm::solver::{solve, Nlp, SolveStatus, SolverOptions};

const GRADIENT_POINTS: usize = 100;
const GRADIENT_SEED: u64 = 0;
const GRADIENT_MAX_REL: f64 = 1e-5;
const GRADIENT_TIME: Duration = Duration::from_secs(10);

const ORACLE_REL: f64 = 1e-6;
const ORACLE_TIME: Duration = Duration::from_secs(5);

const EULER_RATIO: (f64, f64) = (1.8, 2.2);
const IDENTITY_ABS: f64 = 1e-12;

const BUDGET_S: f64 = 1800.0;
const BUDGET_REL: f64 = 0.01;
const SOC_WINDOW: (f64, f64) = (0.599, 0.601);
const T_BAT_MARGIN_C: f64 = 0.1;
const PRECOOL_MIN_C: f64 = 0.5;
const CASE_I_TIME: Duration = Duration::from_secs(180);

const TRADEOFF_TIME: Duration = Duration::from_secs(720);
const FINAL_CABIN_MARGIN_C: f64 = 0.2;

const BOUND_REL: f64 = 1e-6;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within_time(o: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    let passed = o.passed && elapsed < limit;
    outcome(passed, format!("{}; {:.1} s of {} s", o.detail, elapsed.as_secs_f64(), limit.as_secs()))
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let o = match check_gradients(GRADIENT_POINTS, GRADIENT_SEED, None) {
        Ok(r) => outcome(
            r.max_rel_error < GRADIENT_MAX_REL,
            format!("{} points, max relative error {:.2e} (limit {GRADIENT_MAX_REL:e})", r.n_points, r.max_rel_error),
        ),
        Err(e) => outcome(false, e.to_string()),
    };
    within_time(o, start.elapsed(), GRADIENT_TIME)
}

fn solver_oracles() -> Outcome {
    let start = Instant::now();
    let opts = SolverOptions { kkt_tol: 1e-8, feas_tol: 1e-10, inner_grad_tol: 1e-10, ..SolverOptions::default() };
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for n in [5, 10, 20, 40] {
        let p = DoubleIntegrator::new(n);
        let (oracle, _) = p.kkt_oracle();
        let sol = solve(&p, &vec![0.0; p.dim()], &opts);
        passed &= sol.status == SolveStatus::Converged;
        worst = worst.max((sol.objective - oracle).abs() / oracle.abs());
    }
    let toy = solve(&ToyQp::new(), &[3.0, -7.0], &opts);
    let toy_err = [(toy.z_star[0] - 0.5).abs(), (toy.z_star[1] - 0.5).abs(), (toy.multipliers.eq[0] + 1.0).abs()]
        .into_iter()
        .fold(0.0, f64::max);
    passed &= toy.status == SolveStatus::Converged && worst < ORACLE_REL && toy_err < ORACLE_REL;
    let o = outcome(
        passed,
        format!("double integrator rel {worst:.2e}, toy QP error {toy_err:.2e} (limit {ORACLE_REL:e})"),
    );
    within_time(o, start.elapsed(), ORACLE_TIME)
}

fn dynamics_oracle() -> Outcome {
    let ratios: Vec<f64> =
        [60.0, 30.0, 15.0].iter().map(|&dt| euler_cabin_error(dt) / euler_cabin_error(dt / 2.0)).collect();
    let order_ok = ratios.iter().all(|r| (EULER_RATIO.0..=EULER_RATIO.1).contains(r));

    let bp = nominal_scenario().unwrap().battery;
    let mut identity: f64 = 0.0;
    for k in -40..=40 {
        let p = 2.0e3 * k as f64;
        let i = battery_current(p, &bp).unwrap();
        identity = identity.max((soc_rate(p, &bp).unwrap() + i / bp.charge_capacity_c).abs());
    }
    outcome(
        order_ok && identity <= IDENTITY_ABS,
        format!("error ratios {ratios:.3?}, soc-rate identity residual {identity:e}"),
    )
}

fn case_i_structure(sc: &Scenario) -> Outcome {
    let start = Instant::now();
    let cal = match calibrate_alpha(sc, BUDGET_S) {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("calibration: {e}")),
    };
    let mut tuned = sc.clone();
    tuned.controller.alpha = cal.alpha;
    let run = match run_closed_loop(&tuned, &CaseId::I.preset(&tuned)) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("closed loop: {e}")),
    };
    let m = &run.metrics;
    let t_chg_s = m.t_chg_min.map_or(f64::NAN, |t| t * 60.0);
    let t0 = sc.initial_state().t_bat_c;
    let precool = t0 - min_over(&run, Phase::Driving, |s| s.t_bat_c);
    let passed = (SOC_WINDOW.0..=SOC_WINDOW.1).contains(&m.final_soc)
        && (t_chg_s - BUDGET_S).abs() <= BUDGET_REL * BUDGET_S
        && m.peak_t_bat_c <= sc.bounds.t_bat_max_c + T_BAT_MARGIN_C
        && m.cv_c_sec == 0.0
        && precool >= PRECOOL_MIN_C;
    let o = outcome(
        passed,
        format!(
            "alpha {:.4e}, SOC {:.4}, t_chg {t_chg_s:.1} s, peak T_bat {:.3} °C, CV {}, pre-cooling {precool:.2} °C",
            cal.alpha, m.final_soc, m.peak_t_bat_c, m.cv_c_sec
        ),
    );
    within_time(o, start.elapsed(), CASE_I_TIME)
}

fn min_over(run: &RunOutput, phase: Phase, f: impl Fn(&VehicleState) -> f64) -> f64 {
    run.log.samples.iter().filter(|s| s.phase == phase).map(|s| f(&s.state)).fold(f64::INFINITY, f64::min)
}

fn max_over(run: &RunOutput, phase: Phase, f: impl Fn(&VehicleState) -> f64) -> f64 {
    run.log.samples.iter().filter(|s| s.phase == phase).map(|s| f(&s.state)).fold(f64::NEG_INFINITY, f64::max)
}

struct Runs {
    i: RunOutput,
    iia: RunOutput,
    iib: RunOutput,
    iic: RunOutput,
    iii: RunOutput,
}

impl Runs {
    fn all(&self) -> [(&'static str, &RunOutput); 5] {
        [("I", &self.i), ("IIa", &self.iia), ("IIb", &self.iib), ("IIc", &self.iic), ("III", &self.iii)]
    }
}

fn run_case(sc: &Scenario, case: CaseId) -> Result<RunOutput, String> {
    let run = run_closed_loop(sc, &case.preset(sc)).map_err(|e| format!("case {case}: {e}"))?;
    match run.metrics.status {
        RunStatus::Converged => Ok(run),
        RunStatus::TargetNotReached => Err(format!("case {case}: target not reached")),
    }
}

fn t_chg(run: &RunOutput) -> f64 {
    run.metrics.t_chg_min.unwrap_or(f64::NAN)
}

fn tradeoff(r: &Runs) -> Outcome {
    let (i, a, b, c) = (t_chg(&r.i), t_chg(&r.iia), t_chg(&r.iib), t_chg(&r.iic));
    let cv = |run: &RunOutput| run.metrics.cv_c_sec;
    let passed = i < c
        && c <= b
        && b <= a
        && cv(&r.i) == 0.0
        && cv(&r.i) <= cv(&r.iia)
        && cv(&r.iia) <= cv(&r.iib)
        && cv(&r.iib) <= cv(&r.iic);
    outcome(
        passed,
        format!(
            "t_chg I {i:.2} IIc {c:.2} IIb {b:.2} IIa {a:.2} min; CV I {:.1} IIa {:.1} IIb {:.1} IIc {:.1} °C·s",
            cv(&r.i),
            cv(&r.iia),
            cv(&r.iib),
            cv(&r.iic)
        ),
    )
}

fn schedule_orderings(r: &Runs, sc: &Scenario) -> Outcome {
    let (a, c, iii) = (t_chg(&r.iia), t_chg(&r.iic), t_chg(&r.iii));
    let bound = sc.bounds.t_cab_max_c;
    let final_iii = r.iii.metrics.t_cab_final_c;
    let final_iic = r.iic.metrics.t_cab_final_c;
    let peak_iii = max_over(&r.iii, Phase::Charging, |s| s.t_cab_c);
    let passed =
        c <= iii && iii <= a && final_iii <= bound + FINAL_CABIN_MARGIN_C && peak_iii > bound && final_iic > final_iii;
    outcome(
        passed,
        format!(
            "t_chg IIc {c:.2} III {iii:.2} IIa {a:.2} min; T_cab final III {final_iii:.2} IIc {final_iic:.2} °C, peak III {peak_iii:.2} °C"
        ),
    )
}

fn beta2_endpoints(sc: &Scenario) -> Outcome {
    let ws =
        WeightSchedule::SocAware { beta1: 1e11, beta0: 10.0, b: 10.0, soc_min: sc.initial.soc, soc_targ: sc.soc_targ };
    let low = beta2_of_soc(sc.initial.soc, &ws);
    let high = beta2_of_soc(sc.soc_targ, &ws);
    let passed = matches!((&low, &high), (Ok(l), Ok(h)) if *l == 10.0 && *h == 1e11);
    outcome(passed, format!("beta2(SOC_min) = {low:?}, beta2(SOC_targ) = {high:?}"))
}

fn control_bounds(r: &Runs, sc: &Scenario) -> Outcome {
    let cool = &sc.cooling;
    let p_max = sc.p_chg_max_w;
    let mut violations = Vec::new();
    let mut samples = 0usize;
    for (label, run) in r.all() {
        for s in &run.log.samples {
            samples += 1;
            let u = &s.inputs;
            let checks = [
                ("Q_bat", u.q_bat_cool_w, 0.0, cool.q_bat_max_w),
                ("Q_cab", u.q_cab_cool_w, 0.0, cool.q_cab_max_w),
                ("Q_bat+Q_cab", u.q_bat_cool_w + u.q_cab_cool_w, 0.0, cool.q_total_max_w),
                ("P_chg", u.p_charge_w, 0.0, p_max),
            ];
            for (name, v, lo, hi) in checks {
                let tol = BOUND_REL * hi;
                if v < lo - tol || v > hi + tol {
                    violations.push(format!("{label} {name} = {v} at {} s", s.state.clock_s));
                }
            }
        }
    }
    let detail = match violations.first() {
        None => format!("{samples} plant samples across 5 runs within bounds"),
        Some(first) => format!("{} violations, first: {first}", violations.len()),
    };
    outcome(violations.is_empty(), detail)
}

fn csv_bytes(run: &RunOutput) -> Vec<u8> {
    let mut bytes = Vec::new();
    run.log.write_csv(&mut bytes).unwrap();
    bytes
}

fn determinism(r: &Runs, sc: &Scenario) -> Outcome {
    match run_case(sc, CaseId::IIc) {
        Ok(again) => {
            let (a, b) = (csv_bytes(&r.iic), csv_bytes(&again));
            outcome(a == b, format!("case IIc trajectory CSV, {} bytes, identical: {}", a.len(), a == b))
        }
        Err(e) => outcome(false, e),
    }
}

fn report(results: &mut Vec<bool>, id: usize, name: &str, o: Outcome) {
    let tag = if o.passed { "PASS" } else { "FAIL" };
    println!("{tag} {id} {name}: {}", o.detail);
    results.push(o.passed);
}

fn main() -> ExitCode {
    let sc = nominal_scenario().expect("nominal scenario loads");
    let mut results = Vec::new();

    report(&mut results, 1, "gradient correctness", gradients());
    report(&mut results, 2, "solver oracles", solver_oracles());
    report(&mut results, 3, "dynamics oracle", dynamics_oracle());
    report(&mut results, 4, "case I structure", case_i_structure(&sc));

    let start = Instant::now();
    let runs = [CaseId::I, CaseId::IIa, CaseId::IIb, CaseId::IIc]
        .map(|case| run_case(&sc, case))
        .into_iter()
        .collect::<Result<Vec<_>, _>>();
    let tradeoff_elapsed = start.elapsed();
    let runs = runs.and_then(|v| {
        let iii = run_case(&sc, CaseId::III)?;
        let [i, iia, iib, iic]: [RunOutput; 4] = v.try_into().unwrap();
        Ok(Runs { i, iia, iib, iic, iii })
    });

    match runs {
        Ok(r) => {
            report(
                &mut results,
                5,
                "time versus comfort trade-off",
                within_time(tradeoff(&r), tradeoff_elapsed, TRADEOFF_TIME),
            );
            report(&mut results, 6, "SOC-aware schedule orderings", schedule_orderings(&r, &sc));
            report(&mut results, 7, "beta2 schedule endpoints", beta2_endpoints(&sc));
            report(&mut results, 8, "control bounds", control_bounds(&r, &sc));
            report(&mut results, 9, "determinism", determinism(&r, &sc));
        }
        Err(e) => {
            for (id, name) in [
                (5, "time versus comfort trade-off"),
                (6, "SOC-aware schedule orderings"),
                (8, "control bounds"),
                (9, "determinism"),
            ] {
                report(&mut results, id, name, outcome(false, e.clone()));
            }
            report(&mut results, 7, "beta2 schedule endpoints", beta2_endpoints(&sc));
        }
    }

    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
