//! Outer fixed-point iteration for the quasi variational-hemivariational
//! inequality
//!
//! `u ∈ K(u)`: `⟨Au − f, v − u⟩ + φ(v) − φ(u) + ∫_{Γ₁} h(u_τ) j_τ⁰(u_τ; v_τ − u_τ) ≥ 0`.
//!
//! One step maps an anchor `(v, w)` to `(p(v, w), F(M p(v, w)))`, where
//! `p(v, w)` solves the inner inequality on `{k ≤ r(v)}` with load
//! `f − M*w`, and `F` is the pointwise slip traction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::DiscreteProblem;
use crate::linalg::sub;
use crate::vi_solver::{probe_certificate, solve_vi, VIOptions, VIProblem, VIResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisConstants {
    pub m_a: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub norm_m: f64,
    pub c_phi: f64,
    pub b0_l2: f64,
    pub b1: f64,
    pub h0: f64,
    pub h1: f64,
    pub m_j: f64,
    pub g_yield: f64,
}

impl HypothesisConstants {
    /// Constants of the flow problem: `d₁ = √2 h₁ ‖b₀‖_{L²(Γ₁)}`, `d₂ = 0`,
    /// `d₃ = √2 h₁ b₁`, `c_φ = g |Ω|^{1/2}`.
    pub fn stokes(problem: &DiscreteProblem, m_a: f64, norm_m: f64, m_j: f64) -> Self {
        let s2 = std::f64::consts::SQRT_2;
        let pot = &problem.slip.potential;
        let h1 = problem.slip.weight.h1;
        let b0_l2 = pot.growth_b0 * problem.gamma1_length.sqrt();
        Self {
            m_a,
            d1: s2 * h1 * b0_l2,
            d2: 0.0,
            d3: s2 * h1 * pot.growth_b1,
            norm_m,
            c_phi: problem.yield_stress * problem.area.sqrt(),
            b0_l2,
            b1: pot.growth_b1,
            h0: problem.slip.weight.h0,
            h1,
            m_j,
            g_yield: problem.yield_stress,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; the condition holds iff this is below 1.
    pub ratio: f64,
}

impl Margin {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            ratio: if rhs > 0.0 { lhs / rhs } else { f64::INFINITY },
        }
    }

    pub fn holds(&self) -> bool {
        self.lhs < self.rhs
    }

    /// Relative slack `1 − lhs/rhs`.
    pub fn slack(&self) -> f64 {
        1.0 - self.ratio
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub abstract_ok: bool,
    pub stokes_ok: bool,
    pub uniqueness_ok: bool,
    /// `(d₂ + d₃)‖M‖² < m_A`
    pub abstract_margin: Margin,
    /// `√2 b₁ h₁ ‖γ‖² < m_T`
    pub stokes_margin: Margin,
    /// `h₁ m_j ‖γ‖² < m_T`
    pub uniqueness_margin: Margin,
}

pub fn check_smallness(hc: &HypothesisConstants) -> SmallnessReport {
    let n2 = hc.norm_m * hc.norm_m;
    let abstract_margin = Margin::new((hc.d2 + hc.d3) * n2, hc.m_a);
    let stokes_margin = Margin::new(std::f64::consts::SQRT_2 * hc.b1 * hc.h1 * n2, hc.m_a);
    let uniqueness_margin = Margin::new(hc.h1 * hc.m_j * n2, hc.m_a);
    SmallnessReport {
        abstract_ok: abstract_margin.holds(),
        stokes_ok: stokes_margin.holds(),
        uniqueness_ok: uniqueness_margin.holds(),
        abstract_margin,
        stokes_margin,
        uniqueness_margin,
    }
}

/// `r₁ = (C₁ + d₁‖M‖)/(m_A − (d₂ + d₃)‖M‖²)` and `r₂ = d₁ + (d₂ + d₃)‖M‖ r₁`
/// with `C₁ = load_norm + c_φ`, where `load_norm` bounds `‖f − A0‖_{V*}`.
pub fn invariant_radii(hc: &HypothesisConstants, load_norm: f64) -> Result<(f64, f64)> {
    let lhs = (hc.d2 + hc.d3) * hc.norm_m * hc.norm_m;
    if !(lhs < hc.m_a) {
        return Err(Error::UndefinedRadii { lhs, rhs: hc.m_a });
    }
    let c1 = load_norm + hc.c_phi;
    let r1 = (c1 + hc.d1 * hc.norm_m) / (hc.m_a - lhs);
    let r2 = hc.d1 + (hc.d2 + hc.d3) * hc.norm_m * r1;
    Ok((r1, r2))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QVHIState {
    /// Constraint anchor.
    pub v: Vec<f64>,
    /// Slip traction at the wall quadrature points (tangential components).
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: f64,
}

impl QVHIState {
    pub fn zero(problem: &DiscreteProblem) -> Self {
        Self {
            v: vec![0.0; problem.n_free()],
            w: vec![0.0; problem.n_trace()],
            u: vec![0.0; problem.n_free()],
            rho: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub u: Vec<f64>,
    pub w_next: Vec<f64>,
    pub rho: f64,
    pub bound: f64,
    pub vi: VIResult,
}

/// Shared per-solve data for repeated steps.
struct StepContext<'a> {
    problem: &'a DiscreteProblem,
    hc: &'a HypothesisConstants,
    load_dual_norm: f64,
    inner: &'a VIOptions,
}

impl<'a> StepContext<'a> {
    fn new(problem: &'a DiscreteProblem, hc: &'a HypothesisConstants, inner: &'a VIOptions) -> Result<Self> {
        let a0 = problem.apply_a(&vec![0.0; problem.n_free()]);
        let load_dual_norm = problem.dual_norm(&sub(&problem.f1, &a0))?;
        Ok(Self {
            problem,
            hc,
            load_dual_norm,
            inner,
        })
    }

    fn vi(&self, v: &[f64], w: &[f64]) -> VIProblem<'a, DiscreteProblem> {
        let p = self.problem;
        VIProblem {
            model: p,
            f_tilde: sub(&p.f1, &p.trace_adjoint(w)),
            bound: p.eval_r(v),
            kind: p.constraints.k,
            m_a: self.hc.m_a,
            c_phi: self.hc.c_phi,
            load_dual_norm: self.load_dual_norm,
            shift_bound: self.hc.norm_m * p.norm_x(w),
        }
    }

    /// `near` marks a warm start close enough to skip the smoothing ramp.
    fn step(&self, v: &[f64], w: &[f64], warm: Option<&[f64]>, near: bool) -> Result<StepOutcome> {
        let p = self.problem;
        let vi = self.vi(v, w);
        let res = if near {
            let opts = VIOptions {
                warm_eps0: self.inner.eps_min,
                ..self.inner.clone()
            };
            solve_vi(&vi, warm, &opts)?
        } else {
            solve_vi(&vi, warm, self.inner)?
        };
        let w_next = p.slip_traction(&res.u)?;
        let rho = p.norm_v(&sub(&res.u, v)) + p.norm_x(&sub(&w_next, w));
        Ok(StepOutcome {
            u: res.u.clone(),
            w_next,
            rho,
            bound: vi.bound,
            vi: res,
        })
    }
}

/// One application of `Λ` at the state's anchor `(v, w)`.
pub fn lambda_step(
    problem: &DiscreteProblem,
    hc: &HypothesisConstants,
    state: &QVHIState,
    inner: &VIOptions,
) -> Result<StepOutcome> {
    StepContext::new(problem, hc, inner)?.step(&state.v, &state.w, None, false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QVHIOptions {
    /// Stopping tolerance on `ρ`; defaults to `10⁻⁸(1 + ‖f₁‖_{V*})`.
    pub outer_tol: Option<f64>,
    pub max_outer: usize,
    pub damping: f64,
    pub inner: VIOptions,
    /// Solve even when the slip smallness condition fails.
    pub force_run: bool,
    /// Keep every inner solution in the report.
    pub keep_iterates: bool,
    /// Initial anchor `(v, w)`; zero by default.
    #[serde(skip)]
    pub start: Option<(Vec<f64>, Vec<f64>)>,
    pub certificate_probes: usize,
    pub seed: u64,
}

impl Default for QVHIOptions {
    fn default() -> Self {
        Self {
            outer_tol: None,
            max_outer: 200,
            damping: 1.0,
            inner: VIOptions::default(),
            force_run: false,
            keep_iterates: false,
            start: None,
            certificate_probes: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub rho: f64,
    pub norm_u: f64,
    pub norm_w: f64,
    pub k_u: f64,
    pub r_u: f64,
    pub bound: f64,
    pub active: bool,
    pub inner_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub outer_tol: f64,
    pub history: Vec<IterationRecord>,
    pub smallness: SmallnessReport,
    pub radii: Option<(f64, f64)>,
    /// Largest `‖u‖_V / r₁` and `‖w‖_X / r₂` over all iterates.
    pub box_ratio_u: f64,
    pub box_ratio_w: f64,
    pub box_ok: bool,
    /// `ρ_k / ρ_{k−1}`.
    pub contraction_factors: Vec<f64>,
    /// Change of `(u, w)` under one more step from the converged state.
    pub fixed_point_change: f64,
    /// `k(u)/r(u) − 1`.
    pub feasibility: f64,
    pub certificate: f64,
    pub active: bool,
    pub norm_u: f64,
    pub norm_w: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub w: Vec<f64>,
    #[serde(skip)]
    pub iterates: Vec<Vec<f64>>,
}

pub const BOX_SLACK: f64 = 1e-6;
/// Relative outer residual below which inner solves skip the smoothing ramp.
const NEAR_FRACTION: f64 = 0.25;
pub const FEASIBILITY_TOL: f64 = 1e-8;

pub fn solve_qvhi(
    problem: &DiscreteProblem,
    hc: &HypothesisConstants,
    opts: &QVHIOptions,
) -> Result<SolveReport> {
    let smallness = check_smallness(hc);
    if !smallness.stokes_ok && !opts.force_run {
        let m = smallness.stokes_margin;
        return Err(Error::Hypothesis(format!(
            "slip smallness condition fails: √2·b₁·h₁·‖γ‖² = {:e} is not below m_T = {:e} (ratio {:.6})",
            m.lhs, m.rhs, m.ratio
        )));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Parameter("damping must lie in (0, 1]".into()));
    }
    let ctx = StepContext::new(problem, hc, &opts.inner)?;
    let outer_tol = opts
        .outer_tol
        .unwrap_or(1e-8 * (1.0 + problem.dual_norm(&problem.f1)?));
    let radii = invariant_radii(hc, ctx.load_dual_norm).ok();
    let (mut v, mut w) = match &opts.start {
        Some((v, w)) => {
            if v.len() != problem.n_free() || w.len() != problem.n_trace() {
                return Err(Error::Parameter("start state has the wrong size".into()));
            }
            (v.clone(), w.clone())
        }
        None => (vec![0.0; problem.n_free()], vec![0.0; problem.n_trace()]),
    };
    let theta = opts.damping;
    let mut history = Vec::new();
    let mut rhos: Vec<f64> = Vec::new();
    let mut iterates = Vec::new();
    let (mut box_u, mut box_w) = (0.0f64, 0.0f64);
    let mut warm: Option<Vec<f64>> = None;
    for it in 1..=opts.max_outer {
        let near = rhos
            .last()
            .is_some_and(|&r| r < NEAR_FRACTION * problem.norm_v(&v));
        let out = ctx.step(&v, &w, warm.as_deref(), near)?;
        let norm_u = problem.norm_v(&out.u);
        let norm_w = problem.norm_x(&out.w_next);
        if let Some((r1, r2)) = radii {
            box_u = box_u.max(if r1 > 0.0 { norm_u / r1 } else { 0.0 });
            box_w = box_w.max(if r2 > 0.0 { norm_w / r2 } else { 0.0 });
        }
        let k_u = problem.eval_k(&out.u);
        let r_u = problem.eval_r(&out.u);
        history.push(IterationRecord {
            iteration: it,
            rho: out.rho,
            norm_u,
            norm_w,
            k_u,
            r_u,
            bound: out.bound,
            active: out.vi.active,
            inner_iterations: out.vi.iterations,
        });
        rhos.push(out.rho);
        if opts.keep_iterates {
            iterates.push(out.u.clone());
        }
        let feasibility = k_u / r_u - 1.0;
        if out.rho <= outer_tol && feasibility <= FEASIBILITY_TOL {
            // one more step from the converged state
            let check = ctx.step(&out.u, &out.w_next, Some(&out.u), true)?;
            let fixed_point_change = problem.norm_v(&sub(&check.u, &out.u))
                + problem.norm_x(&sub(&check.w_next, &out.w_next));
            let vi = ctx.vi(&v, &w);
            let certificate = probe_certificate(&vi, &out.u, opts.certificate_probes, opts.seed)?;
            let contraction_factors = rhos
                .windows(2)
                .filter(|p| p[0] > 0.0)
                .map(|p| p[1] / p[0])
                .collect();
            let box_ok = radii.is_none()
                || (box_u <= 1.0 + BOX_SLACK && box_w <= 1.0 + BOX_SLACK);
            return Ok(SolveReport {
                iterations: it,
                outer_tol,
                history,
                smallness,
                radii,
                box_ratio_u: box_u,
                box_ratio_w: box_w,
                box_ok,
                contraction_factors,
                fixed_point_change,
                feasibility,
                certificate,
                active: out.vi.active,
                norm_u,
                norm_w,
                u: out.u,
                w: out.w_next,
                iterates,
            });
        }
        for (a, b) in v.iter_mut().zip(&out.u) {
            *a = (1.0 - theta) * *a + theta * b;
        }
        for (a, b) in w.iter_mut().zip(&out.w_next) {
            *a = (1.0 - theta) * *a + theta * b;
        }
        warm = Some(out.u);
    }
    Err(Error::NonConvergence {
        iterations: opts.max_outer,
        residual: rhos.last().copied().unwrap_or(f64::INFINITY),
        best: warm.unwrap_or_default(),
        history: rhos,
    })
}

/// One member of a problem family for [`dependence_study`].
#[derive(Clone, Debug)]
pub struct DependenceCase {
    pub label: String,
    /// Perturbation size (`‖δf‖`, `g_n`, ...).
    pub parameter: f64,
    pub problem: DiscreteProblem,
    pub hc: HypothesisConstants,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceRow {
    pub label: String,
    pub parameter: f64,
    pub deviation: f64,
    pub report: SolveReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceTable {
    pub reference_norm: f64,
    pub reference: SolveReport,
    pub rows: Vec<DependenceRow>,
}

/// Solves the reference and each family member and reports
/// `‖u_n − u‖_V`. Members run in parallel when the `parallel` feature is on.
pub fn dependence_study(
    reference: &DependenceCase,
    family: &[DependenceCase],
    opts: &QVHIOptions,
) -> Result<DependenceTable> {
    let base = solve_qvhi(&reference.problem, &reference.hc, opts)?;
    let run = |c: &DependenceCase| -> Result<DependenceRow> {
        let report = solve_qvhi(&c.problem, &c.hc, opts)?;
        Ok(DependenceRow {
            label: c.label.clone(),
            parameter: c.parameter,
            deviation: reference.problem.norm_v(&sub(&report.u, &base.u)),
            report,
        })
    };
    #[cfg(feature = "parallel")]
    let rows: Result<Vec<_>> = {
        use rayon::prelude::*;
        family.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<_>> = family.iter().map(run).collect();
    Ok(DependenceTable {
        reference_norm: reference.problem.norm_v(&base.u),
        reference: base,
        rows: rows?,
    })
}

/// Recovery sequence element `v_n = (r(u_n)/r(u))·v`.
pub fn mosco_recovery(problem: &DiscreteProblem, v: &[f64], u: &[f64], u_n: &[f64]) -> Vec<f64> {
    let s = problem.eval_r(u_n) / problem.eval_r(u);
    v.iter().map(|x| s * x).collect()
}
