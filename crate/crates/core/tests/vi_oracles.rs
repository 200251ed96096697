use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qvhi::config::ScenarioConfig;
use qvhi::fem::{DiscreteProblem, KKind};
use qvhi::linalg::SparseMatrix;
use qvhi::vi_solver::{
    apriori_bound, natural_residual, probe_certificate, project_ball, solve_vi, DenseModel, VIOptions, VIProblem,
};

fn cavity(g: f64) -> DiscreteProblem {
    let json = format!(
        r#"{{"name": "t", "mesh": {{"kind": "rectangle", "lx": 1, "ly": 1, "nx": 2, "ny": 2}},
            "law": {{"kind": "newtonian", "mu0": 1.5}}, "yield_stress": {g}, "body_force": ["20*y", "x"]}}"#
    );
    let cfg = ScenarioConfig::from_json(&json).unwrap();
    let mesh = cfg.build_mesh().unwrap();
    cfg.build_problem(cfg.build_discretization(&mesh).unwrap()).unwrap()
}

fn shared() -> &'static DiscreteProblem {
    static P: OnceLock<DiscreteProblem> = OnceLock::new();
    P.get_or_init(|| cavity(0.0))
}

fn dense(m: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.iter() {
        d[(i, j)] += v;
    }
    d
}

fn kernel_basis(b: &DMatrix<f64>) -> DMatrix<f64> {
    let e = (b.transpose() * b).symmetric_eigen();
    let top = e.eigenvalues.max();
    let cols: Vec<DVector<f64>> = (0..e.eigenvalues.len())
        .filter(|&i| e.eigenvalues[i] <= 1e-10 * top)
        .map(|i| e.eigenvectors.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Newton on `½μ zᵀGz − bᵀz + (p/2)·max(0, √(zᵀGz) − c)²` in kernel
/// coordinates.
fn penalty_oracle(p: &DiscreteProblem, mu: f64, c: f64, penalty: f64) -> Vec<f64> {
    let z = kernel_basis(&dense(&p.b));
    let g = z.transpose() * dense(&p.gram_v) * &z;
    let b = z.transpose() * DVector::from_vec(p.f1.clone());
    let obj = |x: &DVector<f64>| {
        let s = (x.transpose() * &g * x)[(0, 0)].sqrt();
        0.5 * mu * s * s - b.dot(x) + 0.5 * penalty * (s - c).max(0.0).powi(2)
    };
    let mut x = (&g * mu).cholesky().unwrap().solve(&b);
    for _ in 0..100 {
        let gx = &g * &x;
        let s = x.dot(&gx).sqrt();
        let excess = (s - c).max(0.0);
        let grad = &gx * mu - &b + &gx * (penalty * excess / s);
        let mut h = &g * mu;
        if excess > 0.0 {
            let outer = &gx * gx.transpose();
            h += (&g / s - &outer / (s * s * s)) * (penalty * excess) + outer * (penalty / (s * s));
        }
        let step = h.cholesky().unwrap().solve(&grad);
        let f0 = obj(&x);
        let mut t = 1.0;
        while obj(&(&x - &step * t)) > f0 && t > 1e-12 {
            t *= 0.5;
        }
        x -= step * t;
        if grad.norm() < 1e-13 * (1.0 + b.norm()) {
            break;
        }
    }
    (z * x).as_slice().to_vec()
}

#[test]
fn tight_bound_matches_penalty_oracle() {
    let p = cavity(0.0);
    let mu = 1.5;
    let free = p.norm_v(&p.riesz(&p.f1).unwrap()) / mu;
    let c = 0.5 * free;
    let vi = VIProblem::new(&p, p.f1.clone(), c, KKind::VSeminorm, mu, 0.0).unwrap();
    let opts = VIOptions::default();
    let res = solve_vi(&vi, None, &opts).unwrap();
    assert!(res.active);
    assert!((p.eval_k(&res.u) - c).abs() <= opts.tol * (1.0 + c));
    let oracle = penalty_oracle(&p, mu, c, 1e8);
    let diff: Vec<f64> = res.u.iter().zip(&oracle).map(|(a, b)| a - b).collect();
    assert!(p.norm_v(&diff) <= 1e-6 * c, "distance {}", p.norm_v(&diff));
}

#[test]
fn multiplier_complementarity() {
    let p = cavity(0.3);
    let opts = VIOptions::default();
    for c in [0.05, 0.2, 1e3] {
        let vi = VIProblem::new(&p, p.f1.clone(), c, KKind::VSeminorm, 1.5, 0.3).unwrap();
        let r = solve_vi(&vi, None, &opts).unwrap();
        assert!(r.multiplier >= 0.0);
        let gap = r.multiplier * (p.eval_k(&r.u) - c);
        assert!(gap.abs() <= opts.tol * c.max(1.0), "c {c}: {gap}");
        assert!(p.eval_k(&r.u) <= c * (1.0 + 1e-8));
    }
}

#[test]
fn huge_bound_gives_unconstrained_solution() {
    let p = cavity(0.3);
    let opts = VIOptions::default();
    let free = solve_vi(
        &VIProblem::new(&p, p.f1.clone(), f64::INFINITY, KKind::VSeminorm, 1.5, 0.3).unwrap(),
        None,
        &opts,
    )
    .unwrap();
    let capped = solve_vi(
        &VIProblem::new(&p, p.f1.clone(), 1e6, KKind::VSeminorm, 1.5, 0.3).unwrap(),
        None,
        &opts,
    )
    .unwrap();
    assert!(!capped.active);
    assert_eq!(capped.multiplier, 0.0);
    let d: Vec<f64> = free.u.iter().zip(&capped.u).map(|(a, b)| a - b).collect();
    assert!(p.norm_v(&d) <= 1e-10);
}

#[test]
fn yield_stress_solution_is_certified() {
    let p = cavity(0.5);
    let vi = VIProblem::new(&p, p.f1.clone(), 0.4, KKind::VSeminorm, 1.5, 0.5).unwrap();
    let opts = VIOptions::default();
    let r = solve_vi(&vi, None, &opts).unwrap();
    assert!(r.residual <= r.tolerance);
    assert!(natural_residual(&vi, &r.u, opts.eps_min).unwrap() <= r.tolerance);
    let cert = probe_certificate(&vi, &r.u, 50, 3).unwrap();
    assert!(cert >= -r.tolerance, "{cert}");
    assert!(p.div_residual(&r.u) <= 1e-8 * p.norm_v(&r.u));
    assert!(r.continuation_constant().is_finite());
}

fn random_instance(r: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<f64>>, f64, Vec<f64>, f64, f64) {
    let b = DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
    let a = b.transpose() * &b + DMatrix::identity(n, n) * 0.3;
    let a = (&a + a.transpose()) * 0.5;
    let m = a.clone().symmetric_eigen().eigenvalues.min();
    let rows = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    let f = (0..n).map(|_| r.gen_range(-4.0..4.0)).collect();
    (rows, m, f, r.gen_range(0.0..2.0), r.gen_range(0.3..5.0))
}

#[test]
fn dense_instances_respect_bound_start_independence_and_certificate() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let opts = VIOptions::default();
    for i in 0..30 {
        let (a, m, f, g, c) = random_instance(&mut r, 1 + i % 6);
        let model = DenseModel::new(&a, g).unwrap();
        let vi = VIProblem::new(&model, f, c, KKind::VSeminorm, m, g).unwrap();
        let u = solve_vi(&vi, None, &opts).unwrap();
        let norm = u.u.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm <= apriori_bound(&vi) * (1.0 + 1e-6));
        assert!(norm <= c * (1.0 + 1e-8));
        let start: Vec<f64> = (0..u.u.len()).map(|_| r.gen_range(-3.0..3.0)).collect();
        let v = solve_vi(&vi, Some(&start), &opts).unwrap();
        let d = u.u.iter().zip(&v.u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(d <= 2.0 * u.tolerance.max(v.tolerance) / m, "instance {i}: {d}");
        assert!(probe_certificate(&vi, &u.u, 50, i as u64).unwrap() >= -u.tolerance);
    }
}

#[test]
fn zero_load_and_zero_force_bound() {
    let p = cavity(0.0);
    let vi = VIProblem::new(&p, vec![0.0; p.n_free()], 1.0, KKind::VSeminorm, 1.5, 0.0).unwrap();
    assert_eq!(apriori_bound(&vi), 0.0);
    let r = solve_vi(&vi, None, &VIOptions::default()).unwrap();
    assert!(r.u.iter().all(|v| *v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn project_ball_is_radial_idempotent_and_nonexpansive(
        seed in any::<u64>(),
        c in 1e-3f64..10.0,
        sa in 1e-3f64..50.0,
        sb in 1e-3f64..50.0,
    ) {
        let p = shared();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |s: f64| -> Vec<f64> {
            let v: Vec<f64> = (0..p.n_free()).map(|_| r.gen_range(-1.0..1.0)).collect();
            v.iter().map(|x| x * s).collect()
        };
        let (a, b) = (draw(sa), draw(sb));
        let pa = project_ball(p, &a, c);
        let pb = project_ball(p, &b, c);
        let na = p.norm_v(&a);
        prop_assert!(p.norm_v(&pa) <= c * (1.0 + 1e-14));
        if na > c {
            prop_assert!((p.norm_v(&pa) - c).abs() <= 1e-12 * c);
            let ratio = c / na;
            prop_assert!(pa.iter().zip(&a).all(|(x, y)| (x - ratio * y).abs() <= 1e-14 * y.abs().max(1e-300)));
        } else {
            prop_assert_eq!(&pa, &a);
        }
        let twice = project_ball(p, &pa, c);
        let d: Vec<f64> = twice.iter().zip(&pa).map(|(x, y)| x - y).collect();
        prop_assert!(p.norm_v(&d) <= 1e-14 * c);
        let dp: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
        let dx: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        prop_assert!(p.norm_v(&dp) <= p.norm_v(&dx) * (1.0 + 1e-12));
    }
}
