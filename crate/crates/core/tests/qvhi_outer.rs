use std::path::PathBuf;

use qvhi::config::{MeshSpec, ScenarioConfig};
use qvhi::experiments::preflight;
use qvhi::fem::DiscreteProblem;
use qvhi::linalg::sub;
use qvhi::qvhi_solver::{
    check_smallness, invariant_radii, lambda_step, solve_qvhi, HypothesisConstants, QVHIOptions, QVHIState,
};
use qvhi::Error;

fn coarse(name: &str) -> (ScenarioConfig, DiscreteProblem, HypothesisConstants) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    let mut cfg = ScenarioConfig::load(path).unwrap();
    if let MeshSpec::Rectangle { nx, ny, .. } = &mut cfg.mesh {
        *nx = (*nx / 2).max(2);
        *ny = (*ny / 2).max(1);
    }
    let mesh = cfg.build_mesh().unwrap();
    let problem = cfg.build_problem(cfg.build_discretization(&mesh).unwrap()).unwrap();
    let hc = preflight(&cfg, &problem, 0).unwrap().constants;
    (cfg, problem, hc)
}

#[test]
fn stokes_without_slip_or_yield_is_the_riesz_solution() {
    let (cfg, p, hc) = coarse("newtonian.json");
    let report = solve_qvhi(&p, &hc, &cfg.solver.options(false)).unwrap();
    let exact: Vec<f64> = p.riesz(&p.f1).unwrap().iter().map(|v| v / 2.0).collect();
    assert!(p.norm_v(&sub(&report.u, &exact)) <= 1e-10 * p.norm_v(&exact));
    assert!(report.iterations <= 2);
    let (r1, _) = invariant_radii(&hc, p.dual_norm(&p.f1).unwrap()).unwrap();
    assert!(report.norm_u <= r1 * (1.0 + 1e-10));
}

#[test]
fn active_channel_solution_is_feasible_and_a_fixed_point() {
    let (cfg, p, hc) = coarse("channel.json");
    let opts = cfg.solver.options(false);
    let report = solve_qvhi(&p, &hc, &opts).unwrap();
    assert!(report.active);
    assert!(p.eval_k(&report.u) <= p.eval_r(&report.u) * (1.0 + 1e-8));
    assert!(report.fixed_point_change <= 1e2 * report.outer_tol);
    assert!(report.certificate >= -1e-6, "{}", report.certificate);
    assert!(report.box_ok);
    assert!(p.div_residual(&report.u) <= 1e-8 * p.norm_v(&report.u));
    // the reported traction is the slip law evaluated at the solution
    let w = p.slip_traction(&report.u).unwrap();
    assert!(p.norm_x(&sub(&w, &report.w)) <= 1e2 * report.outer_tol);
}

#[test]
fn solves_are_deterministic() {
    let (cfg, p, hc) = coarse("channel.json");
    let opts = cfg.solver.options(false);
    let a = solve_qvhi(&p, &hc, &opts).unwrap();
    let b = solve_qvhi(&p, &hc, &opts).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.u, b.u);
}

#[test]
fn smallness_violation_is_reported_with_its_ratio() {
    let (cfg, p, hc) = coarse("smallness_violation.json");
    let expected = std::f64::consts::SQRT_2 * 5.0 * 1.0 * hc.norm_m * hc.norm_m / hc.m_a;
    let s = check_smallness(&hc);
    assert!(!s.stokes_ok);
    assert!((s.stokes_margin.ratio - expected).abs() <= 1e-12 * expected);
    match solve_qvhi(&p, &hc, &cfg.solver.options(false)) {
        Err(Error::Hypothesis(msg)) => assert!(msg.contains("ratio")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn first_step_from_zero_matches_a_direct_inner_solve() {
    let (cfg, p, hc) = coarse("uniqueness.json");
    let opts = cfg.solver.options(false);
    let out = lambda_step(&p, &hc, &QVHIState::zero(&p), &opts.inner).unwrap();
    assert!(out.vi.residual <= out.vi.tolerance);
    assert_eq!(out.bound, p.eval_r(&vec![0.0; p.n_free()]));
    let w = p.slip_traction(&out.u).unwrap();
    assert_eq!(w, out.w_next);
    assert!((out.rho - (p.norm_v(&out.u) + p.norm_x(&w))).abs() <= 1e-14 * (1.0 + out.rho));
}

#[test]
fn damping_reaches_the_same_solution() {
    let (cfg, p, hc) = coarse("uniqueness.json");
    let opts = cfg.solver.options(false);
    let plain = solve_qvhi(&p, &hc, &opts).unwrap();
    let damped = solve_qvhi(&p, &hc, &QVHIOptions { damping: 0.7, ..opts }).unwrap();
    assert!(p.norm_v(&sub(&plain.u, &damped.u)) <= 1e-7);
}
