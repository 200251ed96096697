use nalgebra::{DMatrix, DVector};

use qvhi::config::ScenarioConfig;
use qvhi::fem::DiscreteProblem;
use qvhi::linalg::SparseMatrix;

fn problem(json: &str) -> DiscreteProblem {
    let cfg = ScenarioConfig::from_json(json).unwrap();
    let mesh = cfg.build_mesh().unwrap();
    cfg.build_problem(cfg.build_discretization(&mesh).unwrap()).unwrap()
}

fn slip_channel(nx: usize, ny: usize) -> DiscreteProblem {
    problem(&format!(
        r#"{{
  "name": "t",
  "mesh": {{ "kind": "rectangle", "lx": 2.0, "ly": 1.0, "nx": {nx}, "ny": {ny}, "slip_sides": ["bottom"] }},
  "law": {{ "kind": "newtonian", "mu0": 1.0 }},
  "slip": {{ "weight": {{ "kind": "constant", "h": 0.5 }}, "potential": {{ "kind": "j_lambda", "lambda": 0.5 }} }},
  "body_force": ["20*y", "0"]
}}"#
    ))
}

fn dense(m: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.iter() {
        d[(i, j)] += v;
    }
    d
}

/// Orthonormal basis of `ker B` from the eigenvectors of `BᵀB`.
fn kernel_basis(b: &DMatrix<f64>) -> DMatrix<f64> {
    let e = (b.transpose() * b).symmetric_eigen();
    let top = e.eigenvalues.max();
    let cols: Vec<DVector<f64>> = (0..e.eigenvalues.len())
        .filter(|&i| e.eigenvalues[i] <= 1e-10 * top)
        .map(|i| e.eigenvectors.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

fn dense_trace_norm(p: &DiscreteProblem) -> f64 {
    let z = kernel_basis(&dense(&p.b));
    let g = dense(&p.gram_v);
    let m = dense(&p.m);
    let w = DMatrix::from_diagonal(&DVector::from_vec(p.gram_x.clone()));
    let gz = z.transpose() * &g * &z;
    let s = z.transpose() * m.transpose() * w * m * &z;
    let l = gz.cholesky().unwrap().l();
    let li = l.clone().try_inverse().unwrap();
    let c = &li * s * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    c.symmetric_eigen().eigenvalues.max().sqrt()
}

#[test]
fn trace_norm_matches_dense_generalized_eigensolver() {
    for (nx, ny) in [(2, 1), (4, 2)] {
        let p = slip_channel(nx, ny);
        let power = p.estimate_trace_norm().unwrap();
        let oracle = dense_trace_norm(&p);
        assert!(
            (power - oracle).abs() <= 1e-8 * oracle,
            "{nx}x{ny}: power {power} dense {oracle}"
        );
    }
}

#[test]
fn trace_norm_stays_bounded_under_refinement() {
    let values: Vec<f64> = [2, 4, 8]
        .iter()
        .map(|&n| slip_channel(n, n / 2).estimate_trace_norm().unwrap())
        .collect();
    let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(lo > 0.0 && hi / lo < 1.5, "{values:?}");
}

#[test]
fn trace_norm_is_zero_without_slip_wall() {
    let p = problem(
        r#"{"name": "t", "mesh": {"kind": "rectangle", "lx": 1, "ly": 1, "nx": 2, "ny": 2},
            "law": {"kind": "newtonian", "mu0": 1}, "body_force": ["y", "0"]}"#,
    );
    assert_eq!(p.n_trace(), 0);
    assert_eq!(p.estimate_trace_norm().unwrap(), 0.0);
}

#[test]
fn divergence_block_has_full_row_rank() {
    let p = slip_channel(4, 2);
    let b = dense(&p.b);
    let sv = (&b * b.transpose()).symmetric_eigen().eigenvalues;
    let (lo, hi) = (sv.min(), sv.max());
    assert!(lo > 1e-10 * hi, "smallest {lo} largest {hi}");
    assert_eq!(kernel_basis(&b).ncols(), p.n_free() - b.nrows());
}

#[test]
fn riesz_representative_is_divergence_free_and_exact() {
    let p = slip_channel(4, 2);
    let u = p.riesz(&p.f1).unwrap();
    assert!(p.div_residual(&u) <= 1e-8 * p.norm_v(&u));
    // dense oracle: minimize ½‖u‖² − fᵀu over ker B
    let z = kernel_basis(&dense(&p.b));
    let g = dense(&p.gram_v);
    let f = DVector::from_vec(p.f1.clone());
    let c = (z.transpose() * &g * &z).cholesky().unwrap().solve(&(z.transpose() * f));
    let oracle = &z * c;
    let diff: Vec<f64> = u.iter().zip(oracle.iter()).map(|(a, b)| a - b).collect();
    assert!(p.norm_v(&diff) <= 1e-10 * p.norm_v(&u));
}

#[test]
fn energy_norm_is_the_gram_quadratic_form() {
    let p = slip_channel(2, 1);
    let g = dense(&p.gram_v);
    let u = DVector::from_fn(p.n_free(), |i, _| ((i * 7 % 11) as f64 - 5.0) / 3.0);
    let q = (u.transpose() * &g * &u)[(0, 0)];
    let n = p.norm_v(u.as_slice());
    assert!((n * n - q).abs() <= 1e-13 * q);
}
