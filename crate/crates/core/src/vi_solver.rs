//! Elliptic variational inequality of the second kind on a norm ball:
//! find `u ∈ K₁ = {k(u) ≤ c}` with
//! `⟨Au − f̃, z − u⟩ + φ(z) − φ(u) ≥ 0` for all `z ∈ K₁`.
//!
//! `A` is taken to be the gradient of a strongly convex energy, so the
//! inequality is the optimality system of `min_{K₁} E(u) − ⟨f̃, u⟩ + φ(u)`.
//! `φ` is replaced by `φ_ε` with `ε` driven from `eps0` down to `eps_min`;
//! each level is solved by a damped Newton method on the linearly constrained
//! (divergence-free) space. Both constraint kinds describe a ball in the
//! energy norm, handled with a scalar multiplier found by safeguarded secant
//! iterations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checks::rng;
use crate::error::{Error, Result};
use crate::fem::{DiscreteProblem, KKind};
use crate::linalg::{axpy, dot, sub, SaddleSolver, SparseMatrix};

/// What the inner solver needs from a discretized operator.
pub trait VariationalModel: Sync {
    fn dim(&self) -> usize;
    /// Gram matrix of the `V` inner product.
    fn gram(&self) -> &SparseMatrix;
    /// Linear equality constraint `Bu = 0`, if any.
    fn constraint_matrix(&self) -> Option<&SparseMatrix>;
    /// Factorization of `[G Bᵀ; B 0]`.
    fn gram_solver(&self) -> &SaddleSolver;
    /// Potential `E` with `∇E = A`.
    fn energy(&self, u: &[f64]) -> f64;
    fn apply(&self, u: &[f64]) -> Vec<f64>;
    fn phi(&self, u: &[f64]) -> f64;
    fn phi_smoothed(&self, u: &[f64], eps: f64) -> (f64, Vec<f64>);
    /// `∇²E + ∇²φ_ε`.
    fn hessian(&self, u: &[f64], eps: f64) -> SparseMatrix;
    fn has_phi(&self) -> bool;

    fn norm(&self, u: &[f64]) -> f64 {
        self.gram().bilinear(u, u).max(0.0).sqrt()
    }

    /// Dual norm on the constrained subspace.
    fn dual_norm(&self, f: &[f64]) -> Result<f64> {
        let (y, _) = self.gram_solver().solve(f, None)?;
        Ok(self.norm(&y))
    }

    /// `V`-orthogonal projection onto `ker B`.
    fn project_kernel(&self, u: &[f64]) -> Result<Vec<f64>> {
        if self.constraint_matrix().is_none() {
            return Ok(u.to_vec());
        }
        Ok(self.gram_solver().solve(&self.gram().mul_vec(u), None)?.0)
    }
}

impl VariationalModel for DiscreteProblem {
    fn dim(&self) -> usize {
        self.n_free()
    }
    fn gram(&self) -> &SparseMatrix {
        &self.gram_v
    }
    fn constraint_matrix(&self) -> Option<&SparseMatrix> {
        Some(&self.b)
    }
    fn gram_solver(&self) -> &SaddleSolver {
        self.disc.gram_solver()
    }
    fn energy(&self, u: &[f64]) -> f64 {
        self.energy_a(u)
    }
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.apply_a(u)
    }
    fn phi(&self, u: &[f64]) -> f64 {
        self.eval_phi(u)
    }
    fn phi_smoothed(&self, u: &[f64], eps: f64) -> (f64, Vec<f64>) {
        self.eval_phi_smoothed(u, eps)
    }
    fn hessian(&self, u: &[f64], eps: f64) -> SparseMatrix {
        DiscreteProblem::hessian(self, u, eps)
    }
    fn has_phi(&self) -> bool {
        self.yield_stress > 0.0
    }
}

/// `A u = M u` with a symmetric positive definite `M`, `φ = g‖·‖₂`, Euclidean
/// inner product and no equality constraint.
#[derive(Debug)]
pub struct DenseModel {
    a: SparseMatrix,
    pub g: f64,
    gram: SparseMatrix,
    solver: SaddleSolver,
}

impl DenseModel {
    pub fn new(a: &[Vec<f64>], g: f64) -> Result<Self> {
        let n = a.len();
        if a.iter().any(|r| r.len() != n) {
            return Err(Error::Parameter("operator matrix must be square".into()));
        }
        let a = SparseMatrix::from_dense(a);
        if a.asymmetry() > 1e-12 {
            return Err(Error::Parameter("operator matrix must be symmetric".into()));
        }
        if g < 0.0 {
            return Err(Error::Parameter("g must be nonnegative".into()));
        }
        let gram = SparseMatrix::identity(n);
        let solver = SaddleSolver::new(&gram, None)?;
        Ok(Self { a, g, gram, solver })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }
}

impl VariationalModel for DenseModel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn gram(&self) -> &SparseMatrix {
        &self.gram
    }
    fn constraint_matrix(&self) -> Option<&SparseMatrix> {
        None
    }
    fn gram_solver(&self) -> &SaddleSolver {
        &self.solver
    }
    fn energy(&self, u: &[f64]) -> f64 {
        0.5 * self.a.bilinear(u, u)
    }
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.a.mul_vec(u)
    }
    fn phi(&self, u: &[f64]) -> f64 {
        self.g * dot(u, u).sqrt()
    }
    fn phi_smoothed(&self, u: &[f64], eps: f64) -> (f64, Vec<f64>) {
        let s = (dot(u, u) + eps * eps).sqrt();
        (self.g * (s - eps), u.iter().map(|x| self.g * x / s).collect())
    }
    fn hessian(&self, u: &[f64], eps: f64) -> SparseMatrix {
        let n = self.dim();
        let s2 = dot(u, u) + eps * eps;
        let s = s2.sqrt();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        self.a.get(i, j) + self.g * (delta / s - u[i] * u[j] / (s2 * s))
                    })
                    .collect()
            })
            .collect();
        SparseMatrix::from_dense(&rows)
    }
    fn has_phi(&self) -> bool {
        self.g > 0.0
    }
}

/// One inner inequality instance.
#[derive(Clone, Debug)]
pub struct VIProblem<'a, M: VariationalModel + ?Sized> {
    pub model: &'a M,
    pub f_tilde: Vec<f64>,
    /// Constraint bound `c` in `k(u) ≤ c`; may be infinite.
    pub bound: f64,
    pub kind: KKind,
    /// Strong monotonicity constant used for the a priori bound.
    pub m_a: f64,
    /// Lipschitz constant of `φ` in the `V` norm.
    pub c_phi: f64,
    /// `‖f − A0‖_{V*}` for the unshifted load.
    pub load_dual_norm: f64,
    /// `‖M‖·‖w‖_X` of the shift `f̃ = f − M*w`.
    pub shift_bound: f64,
}

impl<'a, M: VariationalModel + ?Sized> VIProblem<'a, M> {
    /// Instance with `f̃ = load` and no trace shift.
    pub fn new(model: &'a M, load: Vec<f64>, bound: f64, kind: KKind, m_a: f64, c_phi: f64) -> Result<Self> {
        let a0 = model.apply(&vec![0.0; model.dim()]);
        let load_dual_norm = model.dual_norm(&sub(&load, &a0))?;
        let vi = Self {
            model,
            f_tilde: load,
            bound,
            kind,
            m_a,
            c_phi,
            load_dual_norm,
            shift_bound: 0.0,
        };
        vi.validate()?;
        Ok(vi)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bound > 0.0) {
            return Err(Error::Parameter(format!(
                "constraint bound must be positive so that 0 is feasible, got {}",
                self.bound
            )));
        }
        if self.f_tilde.len() != self.model.dim() {
            return Err(Error::Parameter("load has the wrong length".into()));
        }
        if self.f_tilde.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("load is not finite".into()));
        }
        if !(self.m_a > 0.0) {
            return Err(Error::Parameter("m_A must be positive".into()));
        }
        Ok(())
    }

    /// Radius of `K₁` in the energy norm.
    pub fn radius(&self) -> f64 {
        match self.kind {
            KKind::VSeminorm => self.bound,
            KKind::DissipationSq { nu0 } => (self.bound / nu0).sqrt(),
        }
    }

    pub fn k_value(&self, u: &[f64]) -> f64 {
        let n = self.model.norm(u);
        match self.kind {
            KKind::VSeminorm => n,
            KKind::DissipationSq { nu0 } => nu0 * n * n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VIOptions {
    /// Relative tolerance: the natural residual must not exceed
    /// `tol·(1 + ‖f̃‖_{V*})`.
    pub tol: f64,
    /// Cap on the total number of Newton steps.
    pub max_iter: usize,
    pub eps0: f64,
    pub eps_min: f64,
    pub eps_factor: f64,
    /// First smoothing level when a warm start is supplied.
    pub warm_eps0: f64,
}

impl Default for VIOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 2000,
            eps0: 1e-2,
            eps_min: 1e-8,
            eps_factor: 10.0,
            warm_eps0: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VIResult {
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Natural-map residual `‖u − P_K(u − G⁻¹∇F_ε(u))‖_V` at the final `ε`.
    pub residual: f64,
    /// Absolute threshold the residual was held to.
    pub tolerance: f64,
    /// Multiplier of `k(u) ≤ c`.
    pub multiplier: f64,
    pub active: bool,
    /// `(ε, ‖u_ε − u_{previous ε}‖_V)` per continuation level.
    pub drift: Vec<(f64, f64)>,
}

impl VIResult {
    /// Largest `drift / ε_previous` over the continuation.
    pub fn continuation_constant(&self) -> f64 {
        self.drift
            .windows(2)
            .map(|w| w[1].1 / w[0].0)
            .fold(0.0, f64::max)
    }
}

/// Radial projection onto `{‖v‖_V ≤ c}`.
pub fn project_ball<M: VariationalModel + ?Sized>(model: &M, v: &[f64], c: f64) -> Vec<f64> {
    let n = model.norm(v);
    if n <= c {
        v.to_vec()
    } else {
        v.iter().map(|x| x * (c / n)).collect()
    }
}

/// `(‖f − A0‖_{V*} + c_φ + ‖M‖‖w‖_X)/m_A`.
pub fn apriori_bound<M: VariationalModel + ?Sized>(vi: &VIProblem<'_, M>) -> f64 {
    (vi.load_dual_norm + vi.c_phi + vi.shift_bound) / vi.m_a
}

pub fn solve_vi<M: VariationalModel + ?Sized>(
    vi: &VIProblem<'_, M>,
    u0: Option<&[f64]>,
    opts: &VIOptions,
) -> Result<VIResult> {
    vi.validate()?;
    if !(opts.tol > 0.0 && opts.eps0 > 0.0 && opts.eps_min > 0.0 && opts.eps_factor > 1.0) {
        return Err(Error::Parameter("invalid inner solver options".into()));
    }
    let model = vi.model;
    let radius = vi.radius();
    let start = match u0 {
        Some(u) => {
            if u.len() != model.dim() || u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter("initial guess must be finite with the right length".into()));
            }
            project_ball(model, &model.project_kernel(u)?, radius)
        }
        None => vec![0.0; model.dim()],
    };
    match u0 {
        Some(_) => {
            let warm = VIOptions {
                eps0: opts.warm_eps0.min(opts.eps0),
                ..opts.clone()
            };
            solve_constrained_multiplier(vi, start, &warm)
        }
        None => solve_constrained_multiplier(vi, start, opts),
    }
}

struct Newton<'p, 'a, M: VariationalModel + ?Sized> {
    vi: &'p VIProblem<'a, M>,
    steps: usize,
    max_steps: usize,
    /// Residual accepted once progress stalls.
    accept: f64,
    history: Vec<f64>,
    factor: Option<SaddleSolver>,
}

const STALL_STEPS: usize = 5;

impl<'p, 'a, M: VariationalModel + ?Sized> Newton<'p, 'a, M> {
    fn objective(&self, u: &[f64], eps: f64, lambda: f64) -> f64 {
        let m = self.vi.model;
        let mut f = m.energy(u) - dot(&self.vi.f_tilde, u);
        if m.has_phi() {
            f += m.phi_smoothed(u, eps).0;
        }
        if lambda > 0.0 {
            f += 0.5 * lambda * m.gram().bilinear(u, u);
        }
        f
    }

    fn gradient(&self, u: &[f64], eps: f64, lambda: f64) -> Vec<f64> {
        let m = self.vi.model;
        let mut g = sub(&m.apply(u), &self.vi.f_tilde);
        if m.has_phi() {
            axpy(1.0, &m.phi_smoothed(u, eps).1, &mut g);
        }
        if lambda > 0.0 {
            axpy(lambda, &m.gram().mul_vec(u), &mut g);
        }
        g
    }

    /// Minimizes the smoothed objective plus `λ/2‖u‖²` over `ker B`.
    fn minimize(&mut self, mut u: Vec<f64>, eps: f64, lambda: f64, target: f64) -> Result<Vec<f64>> {
        let m = self.vi.model;
        let mut f = self.objective(&u, eps, lambda);
        let mut best = (f64::INFINITY, u.clone());
        let mut stall = 0;
        loop {
            let g = self.gradient(&u, eps, lambda);
            let res = m.dual_norm(&g)?;
            self.history.push(res);
            if res <= target {
                return Ok(u);
            }
            if res < best.0 {
                if res < 0.5 * best.0 {
                    stall = 0;
                }
                best = (res, u.clone());
            } else {
                stall += 1;
            }
            // rounding floor of an ill-conditioned level
            if stall >= STALL_STEPS && best.0 <= self.accept {
                return Ok(best.1);
            }
            if self.steps >= self.max_steps {
                return Err(Error::NonConvergence {
                    iterations: self.steps,
                    residual: res,
                    best: u,
                    history: std::mem::take(&mut self.history),
                });
            }
            self.steps += 1;
            let mut h = m.hessian(&u, eps);
            if lambda > 0.0 {
                h = h.add_scaled(lambda, m.gram());
            }
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            let solver = match self.factor.take() {
                Some(f) => f.refactor(&h, m.constraint_matrix())?,
                None => SaddleSolver::new(&h, m.constraint_matrix())?,
            };
            let (d, _) = solver.solve(&neg, None)?;
            self.factor = Some(solver);
            // g·d equals −dᵀHd on ker B; the latter is immune to the
            // pressure component of g
            let slope = -h.bilinear(&d, &d);
            if !(slope < 0.0) {
                return Err(Error::NumericalBreakdown(
                    format!("Newton direction is not a descent direction (eps {eps:e}, residual {res:e}, slope {slope:e})"),
                ));
            }
            let mut t = 1.0;
            let mut accepted = false;
            // below this the objective cannot resolve the predicted decrease
            let resolvable = -slope > 1e-13 * (1.0 + f.abs());
            for _ in 0..if resolvable { 50 } else { 0 } {
                let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let ft = self.objective(&trial, eps, lambda);
                if ft <= f + 1e-4 * t * slope && ft < f {
                    u = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // objective differences are below rounding; settle on the gradient
                let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + b).collect();
                let rt = m.dual_norm(&self.gradient(&trial, eps, lambda))?;
                if rt < res {
                    f = self.objective(&trial, eps, lambda);
                    u = trial;
                } else if res <= 10.0 * target.max(1e-13) {
                    return Ok(u);
                } else {
                    return Err(Error::NumericalBreakdown(format!(
                        "line search stalled at residual {res:e}"
                    )));
                }
            }
        }
    }

    /// Minimizer over the ball of the given radius; returns `(u, λ)`.
    fn minimize_on_ball(
        &mut self,
        u: Vec<f64>,
        eps: f64,
        lambda_hint: f64,
        radius: f64,
        target: f64,
        ball_tol: f64,
    ) -> Result<(Vec<f64>, f64)> {
        let m = self.vi.model;
        let free = self.minimize(u, eps, 0.0, target)?;
        if !radius.is_finite() || m.norm(&free) <= radius {
            return Ok((free, 0.0));
        }
        // h(λ) = 1/‖u_λ‖ − 1/R is increasing and close to affine in λ
        let h = |v: &[f64]| 1.0 / m.norm(v) - 1.0 / radius;
        let (mut lo, mut h_lo, mut u_lo) = (0.0, h(&free), free);
        let mut hi = if lambda_hint > 0.0 { lambda_hint } else { 1.0 };
        let mut u_hi = self.minimize(u_lo.clone(), eps, hi, target)?;
        let mut h_hi = h(&u_hi);
        while h_hi < 0.0 {
            lo = hi;
            h_lo = h_hi;
            u_lo = u_hi.clone();
            hi *= 10.0;
            if hi > 1e12 {
                return Err(Error::Bracket(1e12));
            }
            u_hi = self.minimize(u_hi, eps, hi, target)?;
            h_hi = h(&u_hi);
        }
        let rel = |v: &[f64]| (m.norm(v) - radius).abs() / radius;
        let mut side = 0i8;
        for _ in 0..200 {
            if rel(&u_hi) <= ball_tol {
                return Ok((u_hi, hi));
            }
            if rel(&u_lo) <= ball_tol && lo > 0.0 {
                return Ok((u_lo, lo));
            }
            // Illinois variant of regula falsi
            let mut lam = hi - h_hi * (hi - lo) / (h_hi - h_lo);
            if !(lam > lo && lam < hi) {
                lam = 0.5 * (lo + hi);
            }
            let warm = if (lam - lo) < (hi - lam) { u_lo.clone() } else { u_hi.clone() };
            let ul = self.minimize(warm, eps, lam, target)?;
            let hl = h(&ul);
            if hl < 0.0 {
                lo = lam;
                h_lo = hl;
                u_lo = ul;
                if side == -1 {
                    h_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = lam;
                h_hi = hl;
                u_hi = ul;
                if side == 1 {
                    h_lo *= 0.5;
                }
                side = 1;
            }
            if (hi - lo) <= 1e-15 * hi {
                break;
            }
        }
        Ok((u_hi, hi))
    }
}

/// Multiplier treatment of `k(u) ≤ c` for either constraint kind.
pub fn solve_constrained_multiplier<M: VariationalModel + ?Sized>(
    vi: &VIProblem<'_, M>,
    start: Vec<f64>,
    opts: &VIOptions,
) -> Result<VIResult> {
    vi.validate()?;
    let model = vi.model;
    let radius = vi.radius();
    let tol = opts.tol * (1.0 + model.dual_norm(&vi.f_tilde)?);
    let target = 0.1 * tol;
    let mut levels = Vec::new();
    if model.has_phi() {
        let mut e = opts.eps0.max(opts.eps_min);
        while e > opts.eps_min * (1.0 + 1e-9) {
            levels.push(e);
            e /= opts.eps_factor;
        }
    }
    levels.push(opts.eps_min);
    let mut newton = Newton {
        vi,
        steps: 0,
        max_steps: opts.max_iter,
        accept: tol,
        history: Vec::new(),
        factor: None,
    };
    let mut u = start;
    let mut lambda = 0.0;
    let mut drift = Vec::with_capacity(levels.len());
    for (i, &eps) in levels.iter().enumerate() {
        // intermediate levels only need accuracy on the scale of their drift
        let last = i + 1 == levels.len();
        let level_target = if last { target } else { target.max(eps) };
        // ‖u_λ‖ is only known to about level_target / m_A
        let noise = level_target / (vi.m_a * radius);
        let ball_tol = if last { (0.01 * noise).max(1e-12) } else { noise.clamp(1e-12, 1e-2) };
        let (next, lam) = newton.minimize_on_ball(u.clone(), eps, lambda, radius, level_target, ball_tol)?;
        drift.push((eps, model.norm(&sub(&next, &u))));
        u = next;
        lambda = lam;
    }
    let eps = *levels.last().unwrap();
    if lambda > 0.0 {
        // complementarity: an active constraint holds with equality
        let n = model.norm(&u);
        u.iter_mut().for_each(|v| *v *= radius / n);
    } else if radius.is_finite() {
        u = project_ball(model, &u, radius);
    }
    let residual = natural_residual(vi, &u, eps)?;
    if !(residual <= tol) {
        return Err(Error::NonConvergence {
            iterations: newton.steps,
            residual,
            best: u,
            history: newton.history,
        });
    }
    let active = lambda > 0.0;
    let multiplier = match vi.kind {
        KKind::VSeminorm => lambda * radius,
        KKind::DissipationSq { nu0 } => lambda / (2.0 * nu0),
    };
    Ok(VIResult {
        u,
        iterations: newton.steps,
        residual,
        tolerance: tol,
        multiplier,
        active,
        drift,
    })
}

/// `‖u − P_K(u − G⁻¹(A u − f̃ + ∇φ_ε(u)))‖_V` with `G⁻¹` on `ker B`.
pub fn natural_residual<M: VariationalModel + ?Sized>(
    vi: &VIProblem<'_, M>,
    u: &[f64],
    eps: f64,
) -> Result<f64> {
    let m = vi.model;
    let mut g = sub(&m.apply(u), &vi.f_tilde);
    if m.has_phi() {
        axpy(1.0, &m.phi_smoothed(u, eps).1, &mut g);
    }
    let (y, _) = m.gram_solver().solve(&g, None)?;
    let step = sub(u, &y);
    let radius = vi.radius();
    let p = if radius.is_finite() {
        project_ball(m, &step, radius)
    } else {
        step
    };
    Ok(m.norm(&sub(u, &p)))
}

/// Worst normalized value of `⟨Au − f̃, z − u⟩ + φ(z) − φ(u)` over random
/// feasible probes `z`, divided by `1 + ‖z − u‖_V`. A solution gives a
/// value `≥ −tol`.
pub fn probe_certificate<M: VariationalModel + ?Sized>(
    vi: &VIProblem<'_, M>,
    u: &[f64],
    n_probes: usize,
    seed: u64,
) -> Result<f64> {
    let m = vi.model;
    let mut r = rng(seed);
    let radius = vi.radius();
    let scale = if radius.is_finite() { radius } else { 2.0 * m.norm(u) + 1.0 };
    let au = sub(&m.apply(u), &vi.f_tilde);
    let phi_u = m.phi(u);
    let mut worst = f64::INFINITY;
    for i in 0..n_probes {
        let raw: Vec<f64> = (0..m.dim()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let dir = m.project_kernel(&raw)?;
        let nd = m.norm(&dir);
        if nd == 0.0 {
            continue;
        }
        // alternate between far probes and probes close to u
        let z: Vec<f64> = if i % 2 == 0 {
            let t = scale * r.gen::<f64>();
            dir.iter().map(|x| x * t / nd).collect()
        } else {
            let t = 1e-3 * scale * r.gen::<f64>();
            let z: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + t * b / nd).collect();
            if radius.is_finite() {
                project_ball(m, &z, radius)
            } else {
                z
            }
        };
        let diff = sub(&z, u);
        let val = dot(&au, &diff) + m.phi(&z) - phi_u;
        worst = worst.min(val / (1.0 + m.norm(&diff)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_d(g: f64) -> DenseModel {
        DenseModel::new(&[vec![1.0]], g).unwrap()
    }

    #[test]
    fn scalar_instance_with_and_without_bound() {
        let m = one_d(1.0);
        let vi = VIProblem::new(&m, vec![2.0], f64::INFINITY, KKind::VSeminorm, 1.0, 1.0).unwrap();
        let r = solve_vi(&vi, None, &VIOptions::default()).unwrap();
        assert_abs_diff_eq!(r.u[0], 1.0, epsilon = 1e-7);
        assert!(!r.active);
        let vi = VIProblem::new(&m, vec![2.0], 0.5, KKind::VSeminorm, 1.0, 1.0).unwrap();
        let r = solve_vi(&vi, None, &VIOptions::default()).unwrap();
        assert_abs_diff_eq!(r.u[0], 0.5, epsilon = 1e-12);
        assert!(r.active);
        // KKT: u − 2 + 1 + μ = 0 at u = 0.5
        assert_abs_diff_eq!(r.multiplier, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn zero_load_gives_zero() {
        let m = DenseModel::new(&[vec![2.0, 0.5], vec![0.5, 1.0]], 0.3).unwrap();
        let vi = VIProblem::new(&m, vec![0.0, 0.0], 1.0, KKind::VSeminorm, 0.5, 0.3).unwrap();
        let r = solve_vi(&vi, None, &VIOptions::default()).unwrap();
        assert!(r.u.iter().all(|v| v.abs() < 1e-9));
        assert_eq!(apriori_bound(&vi), 0.3 / 0.5);
    }

    #[test]
    fn yield_locks_small_loads() {
        let m = one_d(3.0);
        let vi = VIProblem::new(&m, vec![2.0], f64::INFINITY, KKind::VSeminorm, 1.0, 3.0).unwrap();
        let r = solve_vi(&vi, None, &VIOptions::default()).unwrap();
        assert!(r.u[0].abs() < 1e-7);
    }

    #[test]
    fn project_ball_properties() {
        let m = DenseModel::new(&[vec![1.0, 0.0], vec![0.0, 1.0]], 0.0).unwrap();
        let v = vec![3.0, 4.0];
        let p = project_ball(&m, &v, 2.5);
        assert_abs_diff_eq!(m.norm(&p), 2.5, epsilon = 1e-15);
        assert_eq!(project_ball(&m, &p, 2.5), p);
        assert_eq!(project_ball(&m, &[0.1, 0.2], 2.5), vec![0.1, 0.2]);
        let mut r = rng(3);
        for _ in 0..1000 {
            let a: Vec<f64> = (0..2).map(|_| r.gen_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| r.gen_range(-5.0..5.0)).collect();
            let d = m.norm(&sub(&project_ball(&m, &a, 1.0), &project_ball(&m, &b, 1.0)));
            assert!(d <= m.norm(&sub(&a, &b)) * (1.0 + 1e-15));
        }
    }

    #[test]
    fn dissipation_ball_uses_square_root_radius() {
        let m = one_d(0.0);
        let vi = VIProblem::new(&m, vec![5.0], 0.5, KKind::DissipationSq { nu0: 2.0 }, 1.0, 0.0).unwrap();
        let r = solve_vi(&vi, None, &VIOptions::default()).unwrap();
        assert_abs_diff_eq!(r.u[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vi.k_value(&r.u), 0.5, epsilon = 1e-12);
        assert!((r.multiplier * (vi.k_value(&r.u) - 0.5)).abs() <= 1e-8);
    }

    #[test]
    fn nonpositive_bound_is_rejected() {
        let m = one_d(0.0);
        assert!(VIProblem::new(&m, vec![1.0], 0.0, KKind::VSeminorm, 1.0, 0.0).is_err());
    }
}
