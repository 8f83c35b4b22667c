mod common;

use common::{DoubleIntegrator, ToyQp};
use iptm::solver::{check_kkt, solve, Multipliers, Nlp, SolveStatus, SolverOptions};

fn tight() -> SolverOptions {
    SolverOptions { kkt_tol: 1e-8, feas_tol: 1e-10, inner_grad_tol: 1e-10, ..SolverOptions::default() }
}

#[test]
fn default_tolerances_reach_the_toy_optimum_approximately() {
    let sol = solve(&ToyQp::new(), &[3.0, -7.0], &SolverOptions::default());
    assert_eq!(sol.status, SolveStatus::Converged);
    assert!((sol.z_star[0] - 0.5).abs() < 1e-4);
}

#[test]
fn toy_qp_recovers_optimum_and_multiplier() {
    let sol = solve(&ToyQp::new(), &[3.0, -7.0], &tight());
    assert_eq!(sol.status, SolveStatus::Converged);
    assert!((sol.z_star[0] - 0.5).abs() < 1e-6, "{:?}", sol.z_star);
    assert!((sol.z_star[1] - 0.5).abs() < 1e-6);
    assert!((sol.multipliers.eq[0] + 1.0).abs() < 1e-6, "{:?}", sol.multipliers);
}

#[test]
fn kkt_residuals_at_analytic_optimum_vanish() {
    let m = Multipliers { eq: vec![-1.0], ineq: vec![] };
    let r = check_kkt(&ToyQp::new(), &[0.5, 0.5], &m).unwrap();
    for v in [r.stationarity, r.eq_feasibility, r.ineq_feasibility, r.complementarity] {
        assert!(v <= 1e-8);
    }
}

#[test]
fn kkt_feasibility_matches_hand_defect() {
    let r = check_kkt(&ToyQp::new(), &[2.0, 0.25], &Multipliers::default()).unwrap();
    assert_eq!(r.eq_feasibility, 1.25);
}

#[test]
fn double_integrator_family_matches_kkt_oracle() {
    for n in [5, 10, 20, 40] {
        let p = DoubleIntegrator::new(n);
        let (oracle, _) = p.kkt_oracle();
        let sol = solve(&p, &vec![0.0; p.dim()], &tight());
        assert_eq!(sol.status, SolveStatus::Converged, "N = {n}");
        let rel = (sol.objective - oracle).abs() / oracle.abs();
        eprintln!(
            "N = {n}: objective {} vs {oracle}, rel {rel:e}, outer {} inner {}",
            sol.objective, sol.outer_iters, sol.inner_iters
        );
        assert!(rel < 1e-6, "N = {n}: rel error {rel:e}");
    }
}

#[test]
fn solve_is_bitwise_deterministic() {
    let p = DoubleIntegrator::new(20);
    let a = solve(&p, &vec![0.1; p.dim()], &SolverOptions::default());
    let b = solve(&p, &vec![0.1; p.dim()], &SolverOptions::default());
    assert_eq!(a.z_star, b.z_star);
    assert_eq!(a.multipliers, b.multipliers);
    assert_eq!((a.outer_iters, a.inner_iters), (b.outer_iters, b.inner_iters));
}
