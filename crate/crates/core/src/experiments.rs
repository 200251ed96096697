//! Scenario-driven runs: hypothesis pre-flight, experiment orchestration and
//! plot-data emission.
//!
//! CSV files written by [`emit_plotdata`]:
//!
//! | file             | columns                                                         |
//! |------------------|-----------------------------------------------------------------|
//! | `residuals.csv`  | `run,label,iteration,rho,norm_u,norm_w,k_u,r_u,active`          |
//! | `deviations.csv` | `label,parameter,deviation,ratio`                               |
//! | `refinement.csv` | `h,n_free,error`, then a final `slope,,<fitted order>` row      |
//! | `uniqueness.csv` | `run_a,run_b,distance`                                          |

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checks::{rng, CheckReport};
use crate::config::{ExperimentSpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::fem::{DiscreteProblem, Discretization};
use crate::linalg::{scale, sub};
use crate::mesh::Mesh;
use crate::qvhi_solver::{
    check_smallness, dependence_study, solve_qvhi, DependenceCase, DependenceTable,
    HypothesisConstants, QVHIOptions, SmallnessReport, SolveReport,
};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "QVHI_THREADS";

/// Strain radius of the sampled monotonicity check.
const MONOTONICITY_RADIUS: f64 = 100.0;
/// Slip radius of the sampled growth and relaxed-monotonicity checks.
const SLIP_RADIUS: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisTable {
    pub n_free: usize,
    pub mesh_size: f64,
    /// Sampled strong monotonicity constant of the stress law.
    pub m_hat_t: f64,
    pub m_t_declared: f64,
    pub monotonicity_passed: bool,
    pub norm_gamma: f64,
    /// `true` when `m_j` was estimated by sampling.
    pub m_j_estimated: bool,
    pub growth: CheckReport,
    pub weight_bounds: CheckReport,
    pub constants: HypothesisConstants,
    pub smallness: SmallnessReport,
    /// `(r₁, r₂)` when the abstract smallness condition holds.
    pub radii: Option<(f64, f64)>,
}

impl HypothesisTable {
    pub fn render(&self) -> String {
        let c = &self.constants;
        let s = &self.smallness;
        let mut out = String::new();
        let mut row = |k: &str, v: String| out.push_str(&format!("{k:<28} {v}\n"));
        row("free velocity dofs", self.n_free.to_string());
        row("mesh size h", format!("{:.6e}", self.mesh_size));
        row("m_T declared", format!("{:.6e}", self.m_t_declared));
        row("m̂_T sampled", format!("{:.6e} ({})", self.m_hat_t, pass(self.monotonicity_passed)));
        row("m_A", format!("{:.6e}", c.m_a));
        row("‖γ‖", format!("{:.6e}", self.norm_gamma));
        row("d₁", format!("{:.6e}", c.d1));
        row("d₂", format!("{:.6e}", c.d2));
        row("d₃", format!("{:.6e}", c.d3));
        row("c_φ", format!("{:.6e}", c.c_phi));
        row("h₀, h₁", format!("{:.6e}, {:.6e}", c.h0, c.h1));
        row("b₀ (L²), b₁", format!("{:.6e}, {:.6e}", c.b0_l2, c.b1));
        row(
            "m_j",
            format!("{:.6e}{}", c.m_j, if self.m_j_estimated { " (sampled)" } else { "" }),
        );
        row("growth bound", format!("max ratio {:.6} ({})", self.growth.max_ratio, pass(self.growth.passed)));
        row(
            "weight bounds",
            format!("max ratio {:.6} ({})", self.weight_bounds.max_ratio, pass(self.weight_bounds.passed)),
        );
        for (name, ok, m) in [
            ("(d₂+d₃)‖M‖² < m_A", s.abstract_ok, s.abstract_margin),
            ("√2 b₁ h₁ ‖γ‖² < m_T", s.stokes_ok, s.stokes_margin),
            ("h₁ m_j ‖γ‖² < m_T", s.uniqueness_ok, s.uniqueness_margin),
        ] {
            row(name, format!("{:.6e} vs {:.6e}, ratio {:.6} ({})", m.lhs, m.rhs, m.ratio, pass(ok)));
        }
        match self.radii {
            Some((r1, r2)) => row("invariant radii r₁, r₂", format!("{r1:.6e}, {r2:.6e}")),
            None => row("invariant radii r₁, r₂", "undefined".into()),
        }
        out
    }

    /// Reason the scenario may not be solved without `force_run`.
    pub fn blocking_failure(&self) -> Option<String> {
        if !self.monotonicity_passed {
            return Some(format!(
                "stress law is not strongly monotone with the declared constant: m̂_T = {:e} < m_T = {:e}",
                self.m_hat_t, self.m_t_declared
            ));
        }
        if !self.smallness.stokes_ok {
            let m = self.smallness.stokes_margin;
            return Some(format!(
                "slip smallness condition fails: √2·b₁·h₁·‖γ‖² = {:e} is not below m_T = {:e} (ratio {:.6})",
                m.lhs, m.rhs, m.ratio
            ));
        }
        None
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Evaluates every hypothesis constant and check for an assembled problem.
pub fn preflight(cfg: &ScenarioConfig, problem: &DiscreteProblem, seed: u64) -> Result<HypothesisTable> {
    let law = &problem.law;
    let n = cfg.solver.check_samples.max(1);
    let m_hat_t = if law.is_linear() {
        law.m_t
    } else {
        law.check_strong_monotonicity(n, MONOTONICITY_RADIUS, seed)?.m_hat
    };
    let monotonicity_passed = m_hat_t >= law.m_t - 1e-10;
    let norm_gamma = if problem.n_trace() == 0 {
        0.0
    } else {
        problem.estimate_trace_norm()?
    };
    let slip = &problem.slip;
    let (m_j, m_j_estimated) = match slip.m_j {
        Some(m) => (m, false),
        None => (
            slip.potential
                .estimate_relaxed_monotonicity(n, SLIP_RADIUS, seed)?,
            true,
        ),
    };
    let growth = slip.potential.verify_growth(n, SLIP_RADIUS, seed)?;
    let weight_bounds = slip.weight.verify_bounds(n, SLIP_RADIUS, seed);
    let constants = HypothesisConstants::stokes(problem, law.m_t, norm_gamma, m_j);
    let smallness = check_smallness(&constants);
    let a0 = problem.apply_a(&vec![0.0; problem.n_free()]);
    let radii = crate::qvhi_solver::invariant_radii(&constants, problem.dual_norm(&sub(&problem.f1, &a0))?).ok();
    Ok(HypothesisTable {
        n_free: problem.n_free(),
        mesh_size: problem.space.mesh.mesh_size(),
        m_hat_t,
        m_t_declared: law.m_t,
        monotonicity_passed,
        norm_gamma,
        m_j_estimated,
        growth,
        weight_bounds,
        constants,
        smallness,
        radii,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: usize,
    pub label: String,
    pub parameter: f64,
    pub report: SolveReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub run: usize,
    pub label: String,
    pub parameter: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationTable {
    pub reference_run: usize,
    pub reference_norm: f64,
    pub rows: Vec<DeviationRow>,
    /// Deviations never increase by more than `MONOTONE_SLACK` along the rows.
    pub non_increasing: bool,
    /// Least-squares slope of `log deviation` against `log parameter`.
    pub loglog_slope: Option<f64>,
    /// `max(deviation/parameter) / min(deviation/parameter)`.
    pub ratio_spread: Option<f64>,
}

pub const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub run: usize,
    pub h: f64,
    pub n_free: usize,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementTable {
    pub rows: Vec<RefinementRow>,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessTable {
    pub pairs: Vec<(usize, usize, f64)>,
    pub max_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct DerivedTables {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviations: Option<DeviationTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefinementTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub preflight: HypothesisTable,
    pub runs: Vec<RunRecord>,
    pub tables: DerivedTables,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// VTK dump of one run's final velocity.
#[derive(Clone, Debug)]
pub struct FieldDump {
    pub file_name: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub fields: Vec<FieldDump>,
}

/// Process exit code for an error: 2 for failed hypotheses, 3 for solver
/// non-convergence, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Hypothesis(_) => 2,
        Error::NonConvergence { .. } | Error::Bracket(_) => 3,
        _ => 1,
    }
}

/// Worker count requested through `QVHI_THREADS`.
pub fn worker_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

#[cfg(feature = "parallel")]
fn in_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_threads()? {
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn in_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    worker_threads()?;
    Ok(f())
}

fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

fn deviation_table(dep: &DependenceTable, first_run: usize) -> DeviationTable {
    let rows: Vec<DeviationRow> = dep
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| DeviationRow {
            run: first_run + i,
            label: r.label.clone(),
            parameter: r.parameter,
            deviation: r.deviation,
        })
        .collect();
    let non_increasing = rows
        .windows(2)
        .all(|w| w[1].deviation <= w[0].deviation + MONOTONE_SLACK);
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.parameter, r.deviation)).unzip();
    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r.parameter > 0.0)
        .map(|r| r.deviation / r.parameter)
        .collect();
    let ratio_spread = (!ratios.is_empty() && ratios.iter().all(|r| *r > 0.0)).then(|| {
        ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            / ratios.iter().cloned().fold(f64::INFINITY, f64::min)
    });
    DeviationTable {
        reference_run: 0,
        reference_norm: dep.reference_norm,
        rows,
        non_increasing,
        loglog_slope: fit_loglog(&xs, &ys),
        ratio_spread,
    }
}

struct Setup {
    mesh: Mesh,
    disc: Arc<Discretization>,
    problem: DiscreteProblem,
    table: HypothesisTable,
}

fn setup(cfg: &ScenarioConfig, factor: usize, seed: u64) -> Result<Setup> {
    let mesh = cfg.build_mesh_refined(factor)?;
    let disc = cfg.build_discretization(&mesh)?;
    let problem = cfg.build_problem(disc.clone())?;
    let table = preflight(cfg, &problem, seed)?;
    Ok(Setup {
        mesh,
        disc,
        problem,
        table,
    })
}

fn hc_for(problem: &DiscreteProblem, t: &HypothesisTable) -> HypothesisConstants {
    HypothesisConstants::stokes(problem, t.constants.m_a, t.norm_gamma, t.constants.m_j)
}

/// Runs the scenario's experiment. `seed` replaces the configured seed and
/// `force_run` the configured flag when given.
pub fn run_experiment(cfg: &ScenarioConfig, seed: Option<u64>, force_run: Option<bool>) -> Result<Outcome> {
    cfg.validate()?;
    let seed = seed.unwrap_or(cfg.solver.seed);
    let force = force_run.unwrap_or(cfg.force_run);
    let mut opts = cfg.solver.options(force);
    opts.seed = seed;
    in_pool(|| run_inner(cfg, seed, force, &opts))?
}

fn run_inner(cfg: &ScenarioConfig, seed: u64, force: bool, opts: &QVHIOptions) -> Result<Outcome> {
    let base = setup(cfg, 1, seed)?;
    if let Some(why) = base.table.blocking_failure() {
        if !force {
            return Err(Error::Hypothesis(why));
        }
    }
    let hc = hc_for(&base.problem, &base.table);
    let mut runs = Vec::new();
    let mut fields = Vec::new();
    let mut tables = DerivedTables::default();
    let dump = |disc: &Discretization, id: usize, u: &[f64]| FieldDump {
        file_name: format!("run_{id:03}.vtk"),
        contents: disc.to_vtk(u, &format!("{} run {id}", cfg.name)),
    };
    let mut push = |label: String, parameter: f64, report: SolveReport, disc: &Discretization| {
        let id = runs.len();
        fields.push(dump(disc, id, &report.u));
        runs.push(RunRecord {
            id,
            label,
            parameter,
            report,
        });
    };
    match &cfg.experiment {
        ExperimentSpec::Solve => {
            let rep = solve_qvhi(&base.problem, &hc, opts)?;
            push("solve".into(), cfg.yield_stress, rep, &base.disc);
        }
        ExperimentSpec::YieldSweep { levels } => {
            let reference = base.problem.with_yield_stress(0.0);
            let case = |label: String, g: f64, p: DiscreteProblem| DependenceCase {
                hc: hc_for(&p, &base.table),
                label,
                parameter: g,
                problem: p,
            };
            let family: Vec<_> = (0..=*levels)
                .map(|n| {
                    let g = cfg.yield_stress * 0.5f64.powi(n as i32);
                    case(format!("g_{n}"), g, base.problem.with_yield_stress(g))
                })
                .collect();
            let dep = dependence_study(&case("g=0".into(), 0.0, reference), &family, opts)?;
            let t = deviation_table(&dep, 1);
            push("g=0".into(), 0.0, dep.reference, &base.disc);
            for r in dep.rows {
                push(r.label, r.parameter, r.report, &base.disc);
            }
            tables.deviations = Some(t);
        }
        ExperimentSpec::ForcePerturbation { direction, sizes } => {
            let df = base
                .disc
                .load_vector(&|x, y| [direction[0].eval(x, y), direction[1].eval(x, y)]);
            let nrm = base.problem.dual_norm(&df)?;
            if !(nrm > 0.0) {
                return Err(Error::Config(
                    "perturbation direction has zero dual norm (gradient fields are absorbed by the pressure)".into(),
                ));
            }
            let df = scale(1.0 / nrm, &df);
            let family: Vec<_> = sizes
                .iter()
                .map(|&s| {
                    let f: Vec<f64> = base.problem.f1.iter().zip(&df).map(|(a, b)| a + s * b).collect();
                    let p = base.problem.with_load(f);
                    DependenceCase {
                        hc: hc_for(&p, &base.table),
                        label: format!("|df|={s:e}"),
                        parameter: s,
                        problem: p,
                    }
                })
                .collect();
            let reference = DependenceCase {
                label: "reference".into(),
                parameter: 0.0,
                problem: base.problem.clone(),
                hc,
            };
            let dep = dependence_study(&reference, &family, opts)?;
            let t = deviation_table(&dep, 1);
            push("reference".into(), 0.0, dep.reference, &base.disc);
            for r in dep.rows {
                push(r.label, r.parameter, r.report, &base.disc);
            }
            tables.deviations = Some(t);
        }
        ExperimentSpec::Uniqueness { starts } => {
            let p = &base.problem;
            let mut r = rng(seed);
            let mut anchors = vec![(vec![0.0; p.n_free()], vec![0.0; p.n_trace()])];
            for _ in 1..*starts {
                let raw: Vec<f64> = (0..p.n_free()).map(|_| r.gen_range(-1.0..1.0)).collect();
                let v = p.project_div_free(&raw)?;
                let nv = p.norm_v(&v);
                let v = if nv > 0.0 { scale(1.0 / nv, &v) } else { v };
                let h1 = p.slip.weight.h1;
                let w: Vec<f64> = (0..p.n_trace()).map(|_| r.gen_range(-h1..=h1)).collect();
                anchors.push((v, w));
            }
            let reports = par_map(&anchors, |a| {
                let o = QVHIOptions {
                    start: Some(a.clone()),
                    ..opts.clone()
                };
                solve_qvhi(p, &hc, &o)
            })?;
            let mut pairs = Vec::new();
            for i in 0..reports.len() {
                for j in i + 1..reports.len() {
                    pairs.push((i, j, p.norm_v(&sub(&reports[i].u, &reports[j].u))));
                }
            }
            let max_distance = pairs.iter().map(|q| q.2).fold(0.0, f64::max);
            for (i, rep) in reports.into_iter().enumerate() {
                push(format!("start_{i}"), i as f64, rep, &base.disc);
            }
            tables.uniqueness = Some(UniquenessTable { pairs, max_distance });
        }
        ExperimentSpec::Manufactured { velocity, refinements } => {
            let exact = |x: f64, y: f64| [velocity[0].eval(x, y), velocity[1].eval(x, y)];
            let results = par_map(refinements, |&k| {
                let s = if k == 1 { None } else { Some(setup(cfg, k, seed)?) };
                let s = s.as_ref().unwrap_or(&base);
                let hc = hc_for(&s.problem, &s.table);
                let rep = solve_qvhi(&s.problem, &hc, opts)?;
                let err = s.disc.l2_error(&rep.u, &exact);
                Ok((k, s.mesh.mesh_size(), s.disc.n_free(), err, rep, s.disc.clone()))
            })?;
            let mut rows = Vec::new();
            for (i, (k, h, n_free, error, rep, disc)) in results.into_iter().enumerate() {
                rows.push(RefinementRow {
                    run: i,
                    h,
                    n_free,
                    error,
                });
                push(format!("refine_{k}"), h, rep, &disc);
            }
            let (hs, es): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.h, r.error)).unzip();
            tables.refinement = Some(RefinementTable {
                slope: fit_loglog(&hs, &es).unwrap_or(f64::NAN),
                rows,
            });
        }
    }
    Ok(Outcome {
        report: ExperimentReport {
            scenario: cfg.clone(),
            seed,
            preflight: base.table,
            runs,
            tables,
        },
        fields,
    })
}

fn write(dir: &Path, name: &str, text: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text)?;
    out.push(p);
    Ok(())
}

/// Writes the CSV tables of a report. An empty report writes nothing and
/// returns no paths.
pub fn emit_plotdata(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if report.runs.is_empty() {
        return Ok(out);
    }
    fs::create_dir_all(dir)?;
    let mut s = String::from("run,label,iteration,rho,norm_u,norm_w,k_u,r_u,active\n");
    for run in &report.runs {
        for h in &run.report.history {
            s.push_str(&format!(
                "{},{},{},{:e},{:e},{:e},{:e},{:e},{}\n",
                run.id, run.label, h.iteration, h.rho, h.norm_u, h.norm_w, h.k_u, h.r_u, h.active
            ));
        }
    }
    write(dir, "residuals.csv", &s, &mut out)?;
    if let Some(t) = &report.tables.deviations {
        let mut s = String::from("label,parameter,deviation,ratio\n");
        for r in &t.rows {
            let ratio = if r.parameter > 0.0 { r.deviation / r.parameter } else { f64::NAN };
            s.push_str(&format!("{},{:e},{:e},{:e}\n", r.label, r.parameter, r.deviation, ratio));
        }
        write(dir, "deviations.csv", &s, &mut out)?;
    }
    if let Some(t) = &report.tables.refinement {
        let mut s = String::from("h,n_free,error\n");
        for r in &t.rows {
            s.push_str(&format!("{:e},{},{:e}\n", r.h, r.n_free, r.error));
        }
        s.push_str(&format!("slope,,{}\n", t.slope));
        write(dir, "refinement.csv", &s, &mut out)?;
    }
    if let Some(t) = &report.tables.uniqueness {
        let mut s = String::from("run_a,run_b,distance\n");
        for (a, b, d) in &t.pairs {
            s.push_str(&format!("{a},{b},{d:e}\n"));
        }
        write(dir, "uniqueness.csv", &s, &mut out)?;
    }
    Ok(out)
}

/// Writes `report.json`, the CSV tables and one VTK file per run.
pub fn write_outputs(outcome: &Outcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    write(dir, "report.json", &outcome.report.to_json(), &mut out)?;
    out.extend(emit_plotdata(&outcome.report, dir)?);
    for f in &outcome.fields {
        write(dir, &f.file_name, &f.contents, &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_fit_recovers_power() {
        let xs = [0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
        assert!((fit_loglog(&xs, &ys).unwrap() - 2.5).abs() < 1e-12);
        assert!(fit_loglog(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Hypothesis("x".into())), 2);
        assert_eq!(
            exit_code(&Error::NonConvergence {
                iterations: 1,
                residual: 1.0,
                best: vec![],
                history: vec![]
            }),
            3
        );
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
    }
}
