//! Nonsmooth boundary potentials and the convex yield term.
//!
//! Slip potentials are radial on ℝ²: `j(ξ) = ψ(‖ξ‖)` with a scalar profile
//! `ψ: [0, ∞) → ℝ`, `ψ(0) = 0`. Clarke derivatives and subgradients follow
//! from the one-sided derivatives of the profile: at `ρ = ‖ξ‖ > 0` the
//! generalized gradient is the segment between `ψ'(ρ⁻) e` and `ψ'(ρ⁺) e`
//! (`e = ξ/ρ`), and at the origin it is the disc of radius `|ψ'(0⁺)|`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checks::{rng, CheckReport};
use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "slip regularization lambda must be positive, got {lambda}"
        )))
    }
}

/// The slip-weakening potential: `√(r² + λ²) − λ` on `|r| ≤ 1`, continued
/// for `|r| > 1` by a logarithmic branch that keeps it `C¹`.
pub fn jlambda_value(r: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let a = r.abs();
    let s = (1.0 + lambda * lambda).sqrt();
    Ok(if a <= 1.0 {
        (a * a + lambda * lambda).sqrt() - lambda
    } else {
        (1.0 / s - 1.0) * a + a.ln() + s - lambda - 1.0 / s + 1.0
    })
}

pub fn jlambda_deriv(r: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let s = (1.0 + lambda * lambda).sqrt();
    Ok(if r.abs() <= 1.0 {
        r / (r * r + lambda * lambda).sqrt()
    } else if r > 1.0 {
        1.0 / r + 1.0 / s - 1.0
    } else {
        1.0 / r - 1.0 / s + 1.0
    })
}

/// Second derivative away from `|r| = 1`, where it jumps.
pub fn jlambda_second_deriv(r: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(if r.abs() < 1.0 {
        lambda * lambda / (r * r + lambda * lambda).powf(1.5)
    } else {
        -1.0 / (r * r)
    })
}

/// One branch of a piecewise radial profile.
#[derive(Clone)]
pub struct RadialBranch {
    pub value: ScalarFn,
    pub deriv: Option<ScalarFn>,
}

/// Radial profile made of branches separated by increasing positive
/// breakpoints; branch `i` covers `[b_{i-1}, b_i]` with `b_{-1} = 0`.
#[derive(Clone)]
pub struct PiecewiseRadial {
    pub breakpoints: Vec<f64>,
    pub branches: Vec<RadialBranch>,
}

impl PiecewiseRadial {
    pub fn new(breakpoints: Vec<f64>, branches: Vec<RadialBranch>) -> Result<Self> {
        if branches.len() != breakpoints.len() + 1 {
            return Err(Error::Parameter(format!(
                "{} breakpoints need {} branches, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                branches.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) || breakpoints.iter().any(|&b| b <= 0.0) {
            return Err(Error::Parameter(
                "breakpoints must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            branches,
        })
    }

    /// Index of the branch owning `rho` from the left (`lower = true`) or the right.
    fn branch_index(&self, rho: f64, lower: bool) -> usize {
        self.breakpoints
            .iter()
            .take_while(|&&b| if lower { b < rho } else { b <= rho })
            .count()
    }

    fn value(&self, rho: f64) -> f64 {
        (self.branches[self.branch_index(rho, true)].value)(rho)
    }

    fn deriv(&self, rho: f64, lower: bool) -> Result<f64> {
        let b = &self.branches[self.branch_index(rho, lower)];
        b.deriv
            .as_ref()
            .map(|d| d(rho))
            .ok_or_else(|| Error::Unsupported("piecewise branch has no derivative data".into()))
    }
}

#[derive(Clone)]
pub enum SlipKind {
    JLambda { lambda: f64 },
    NormConvex,
    CustomPiecewise(PiecewiseRadial),
}

impl fmt::Debug for SlipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::JLambda { lambda } => write!(f, "JLambda {{ lambda: {lambda} }}"),
            Self::NormConvex => write!(f, "NormConvex"),
            Self::CustomPiecewise(p) => write!(f, "CustomPiecewise({} branches)", p.branches.len()),
        }
    }
}

/// Tangential slip potential `j_τ` with its declared growth bound
/// `‖∂j_τ(ξ)‖ ≤ b₀ + b₁‖ξ‖`.
#[derive(Clone, Debug)]
pub struct SlipPotential {
    pub kind: SlipKind,
    pub growth_b0: f64,
    pub growth_b1: f64,
    /// Whether `j_τ` (or `-j_τ`) is Clarke regular.
    pub regular: bool,
}

impl SlipPotential {
    /// Radial slip-weakening potential; satisfies the growth bound with
    /// `b₀ = 1`, `b₁ = 0`.
    pub fn jlambda(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            kind: SlipKind::JLambda { lambda },
            growth_b0: 1.0,
            growth_b1: 0.0,
            regular: true,
        })
    }

    /// Euclidean norm `j(ξ) = ‖ξ‖` (Tresca-type friction of unit threshold).
    pub fn norm_convex() -> Self {
        Self {
            kind: SlipKind::NormConvex,
            growth_b0: 1.0,
            growth_b1: 0.0,
            regular: true,
        }
    }

    pub fn custom(profile: PiecewiseRadial, growth_b0: f64, growth_b1: f64, regular: bool) -> Self {
        Self {
            kind: SlipKind::CustomPiecewise(profile),
            growth_b0,
            growth_b1,
            regular,
        }
    }

    pub fn with_growth(mut self, b0: f64, b1: f64) -> Self {
        self.growth_b0 = b0;
        self.growth_b1 = b1;
        self
    }

    pub fn profile(&self, rho: f64) -> f64 {
        match &self.kind {
            SlipKind::JLambda { lambda } => jlambda_value(rho, *lambda).unwrap_or(f64::NAN),
            SlipKind::NormConvex => rho,
            SlipKind::CustomPiecewise(p) => p.value(rho),
        }
    }

    /// One-sided derivative of the profile, `ψ'(ρ⁻)` or `ψ'(ρ⁺)`.
    pub fn profile_deriv(&self, rho: f64, from_left: bool) -> Result<f64> {
        match &self.kind {
            SlipKind::JLambda { lambda } => jlambda_deriv(rho, *lambda),
            SlipKind::NormConvex => Ok(if rho == 0.0 && from_left { -1.0 } else { 1.0 }),
            SlipKind::CustomPiecewise(p) => {
                if rho == 0.0 && from_left {
                    Ok(-p.deriv(0.0, false)?)
                } else {
                    p.deriv(rho, from_left)
                }
            }
        }
    }

    pub fn value(&self, xi: [f64; 2]) -> f64 {
        self.profile(norm(xi))
    }

    /// Generalized directional derivative `j⁰(ξ; v)`.
    pub fn clarke_directional(&self, xi: [f64; 2], dir: [f64; 2]) -> Result<f64> {
        let rho = norm(xi);
        if rho == 0.0 {
            let c = self.profile_deriv(0.0, false)?.abs();
            return Ok(c * norm(dir));
        }
        let e = [xi[0] / rho, xi[1] / rho];
        let ev = e[0] * dir[0] + e[1] * dir[1];
        let a = self.profile_deriv(rho, true)?;
        let b = self.profile_deriv(rho, false)?;
        Ok((a * ev).max(b * ev))
    }

    /// Minimal-norm element of `∂j(ξ)`.
    pub fn subgradient_select(&self, xi: [f64; 2]) -> Result<[f64; 2]> {
        let rho = norm(xi);
        if rho == 0.0 {
            // the disc of radius |ψ'(0⁺)| always contains 0
            return Ok([0.0, 0.0]);
        }
        let a = self.profile_deriv(rho, true)?;
        let b = self.profile_deriv(rho, false)?;
        let s = if a * b <= 0.0 {
            0.0
        } else if a.abs() <= b.abs() {
            a
        } else {
            b
        };
        Ok([s * xi[0] / rho, s * xi[1] / rho])
    }

    /// Samples `ξ` in the disc of the given radius and reports
    /// `max ‖ζ‖ / (b₀ + b₁‖ξ‖)` over minimal-norm selections `ζ`.
    pub fn verify_growth(&self, n_samples: usize, radius: f64, seed: u64) -> Result<CheckReport> {
        if n_samples == 0 {
            return Err(Error::Parameter("n_samples must be at least 1".into()));
        }
        let mut r = rng(seed);
        let mut ratios = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let xi = sample_disc(&mut r, radius);
            let z = self.subgradient_select(xi)?;
            let bound = self.growth_b0 + self.growth_b1 * norm(xi);
            ratios.push((ratio(norm(z), bound), xi.to_vec()));
        }
        Ok(CheckReport::from_ratios(ratios))
    }

    /// Estimates the smallest `m_j ≥ 0` with
    /// `(ζ₁ − ζ₂)·(ξ₁ − ξ₂) ≥ −m_j ‖ξ₁ − ξ₂‖²` from random pairs plus a
    /// dense radial scan. Every quotient used comes from an actual pair, so
    /// the estimate never exceeds the true constant.
    pub fn estimate_relaxed_monotonicity(
        &self,
        n_samples: usize,
        radius: f64,
        seed: u64,
    ) -> Result<f64> {
        let mut r = rng(seed);
        let mut worst = 0.0_f64;
        for _ in 0..n_samples {
            let a = sample_disc(&mut r, radius);
            let b = sample_disc(&mut r, radius);
            let d = [a[0] - b[0], a[1] - b[1]];
            let dd = d[0] * d[0] + d[1] * d[1];
            if dd <= 1e-24 {
                continue;
            }
            let za = self.subgradient_select(a)?;
            let zb = self.subgradient_select(b)?;
            let q = ((za[0] - zb[0]) * d[0] + (za[1] - zb[1]) * d[1]) / dd;
            worst = worst.min(q);
        }
        // Radial profile scan: pairs along one ray (slope of ψ') and pairs on
        // one circle (quotient ψ'(ρ)/ρ).
        let n_grid = 100_000;
        let h = radius / n_grid as f64;
        let mut prev = 0.0; // minimal-norm selection at the origin
        for i in 1..=n_grid {
            let rho = i as f64 * h;
            let d = self.subgradient_select([rho, 0.0])?[0];
            worst = worst.min((d - prev) / h);
            worst = worst.min(d / rho);
            prev = d;
        }
        Ok((-worst).max(0.0))
    }

    /// ε-smoothed evaluator. `JLambda` is already `C¹` and is returned as is.
    pub fn smooth(&self, eps: f64) -> Result<SmoothedPotential> {
        check_eps(eps)?;
        match self.kind {
            SlipKind::NormConvex => Ok(SmoothedPotential::Norm(SmoothedNorm { scale: 1.0, eps })),
            SlipKind::JLambda { .. } => Ok(SmoothedPotential::Exact(self.clone())),
            SlipKind::CustomPiecewise(_) => Err(Error::Unsupported(
                "smoothing of custom piecewise potentials".into(),
            )),
        }
    }
}

fn ratio(value: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        value / bound
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("smoothing eps must be positive, got {eps}")))
    }
}

pub(crate) fn sample_disc<R: Rng>(r: &mut R, radius: f64) -> [f64; 2] {
    let rho = radius * r.gen::<f64>().sqrt();
    let th = 2.0 * PI * r.gen::<f64>();
    [rho * th.cos(), rho * th.sin()]
}

#[inline]
fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// `scale · (√(‖t‖² + ε²) − ε)`: lies within `[0, scale·ε]` below `scale·‖t‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothedNorm {
    pub scale: f64,
    pub eps: f64,
}

impl SmoothedNorm {
    pub fn value(&self, t: &[f64]) -> f64 {
        let n2: f64 = t.iter().map(|x| x * x).sum();
        self.scale * ((n2 + self.eps * self.eps).sqrt() - self.eps)
    }

    pub fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let n2: f64 = t.iter().map(|x| x * x).sum();
        let s = (n2 + self.eps * self.eps).sqrt();
        t.iter().map(|x| self.scale * x / s).collect()
    }
}

#[derive(Clone, Debug)]
pub enum SmoothedPotential {
    Norm(SmoothedNorm),
    Exact(SlipPotential),
}

impl SmoothedPotential {
    pub fn value(&self, xi: [f64; 2]) -> f64 {
        match self {
            Self::Norm(n) => n.value(&xi),
            Self::Exact(p) => p.value(xi),
        }
    }

    pub fn gradient(&self, xi: [f64; 2]) -> [f64; 2] {
        match self {
            Self::Norm(n) => {
                let g = n.gradient(&xi);
                [g[0], g[1]]
            }
            Self::Exact(p) => p.subgradient_select(xi).unwrap_or([f64::NAN; 2]),
        }
    }
}

#[derive(Clone)]
pub enum WeightKind {
    Constant(f64),
    /// `low + (high − low)·‖ξ‖/(scale + ‖ξ‖)`
    Rational { low: f64, high: f64, scale: f64 },
    Custom(Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>),
}

impl fmt::Debug for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Rational { low, high, scale } => {
                write!(f, "Rational {{ low: {low}, high: {high}, scale: {scale} }}")
            }
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Slip weight `h(ξ)` with declared bounds `0 < h₀ ≤ h ≤ h₁`.
#[derive(Clone, Debug)]
pub struct WeightFunction {
    pub kind: WeightKind,
    pub h0: f64,
    pub h1: f64,
}

impl WeightFunction {
    pub fn constant(h: f64) -> Result<Self> {
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::Parameter(format!("slip weight must be positive, got {h}")));
        }
        Ok(Self {
            kind: WeightKind::Constant(h),
            h0: h,
            h1: h,
        })
    }

    pub fn rational(low: f64, high: f64, scale: f64) -> Result<Self> {
        if low <= 0.0 || high < low || scale <= 0.0 {
            return Err(Error::Parameter(
                "rational weight needs 0 < low <= high and scale > 0".into(),
            ));
        }
        Ok(Self {
            kind: WeightKind::Rational { low, high, scale },
            h0: low,
            h1: high,
        })
    }

    pub fn custom(f: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>, h0: f64, h1: f64) -> Self {
        Self {
            kind: WeightKind::Custom(f),
            h0,
            h1,
        }
    }

    pub fn eval(&self, xi: [f64; 2]) -> f64 {
        match &self.kind {
            WeightKind::Constant(c) => *c,
            WeightKind::Rational { low, high, scale } => {
                let r = norm(xi);
                low + (high - low) * r / (scale + r)
            }
            WeightKind::Custom(f) => f(xi),
        }
    }

    /// Checks `h₀ ≤ h(ξ) ≤ h₁` and `h₀ > 0` on sampled `ξ`; the reported
    /// ratio is the worst normalized violation plus one.
    pub fn verify_bounds(&self, n_samples: usize, radius: f64, seed: u64) -> CheckReport {
        let mut r = rng(seed);
        let ratios = (0..n_samples.max(1)).map(|_| {
            let xi = sample_disc(&mut r, radius);
            let h = self.eval(xi);
            let over = ratio(h, self.h1);
            let under = if h > 0.0 { self.h0 / h } else { f64::INFINITY };
            let bad = if self.h0 > 0.0 { 0.0 } else { f64::INFINITY };
            (over.max(under).max(bad), xi.to_vec())
        });
        CheckReport::from_ratios(ratios.collect::<Vec<_>>())
    }
}

/// Slip law on the wall: weight `h` and tangential potential `j_τ`.
#[derive(Clone, Debug)]
pub struct SlipModel {
    pub weight: WeightFunction,
    pub potential: SlipPotential,
    /// Declared relaxed-monotonicity constant, if known.
    pub m_j: Option<f64>,
}

impl SlipModel {
    pub fn new(weight: WeightFunction, potential: SlipPotential) -> Self {
        Self {
            weight,
            potential,
            m_j: None,
        }
    }

    pub fn with_m_j(mut self, m_j: f64) -> Self {
        self.m_j = Some(m_j);
        self
    }

    /// Pointwise traction `h(ξ)·ζ` with `ζ` the minimal-norm element of `∂j_τ(ξ)`.
    pub fn traction(&self, xi: [f64; 2]) -> Result<[f64; 2]> {
        let h = self.weight.eval(xi);
        let z = self.potential.subgradient_select(xi)?;
        Ok([h * z[0], h * z[1]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConvexKind {
    /// Yield term density `g‖𝔻v‖` with constant yield stress `g ≥ 0`.
    BinghamNorm { g: f64 },
    Zero,
}

/// Convex potential `φ` together with its Lipschitz constant `c_φ` in the
/// energy norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexPotentialSpec {
    pub kind: ConvexKind,
    pub lipschitz_c: f64,
}

impl ConvexPotentialSpec {
    /// `φ(v) = g ∫ ‖𝔻v‖` over a domain of the given area; `c_φ = g·|Ω|^{1/2}`.
    pub fn bingham(g: f64, domain_area: f64) -> Result<Self> {
        if g < 0.0 || !g.is_finite() {
            return Err(Error::Parameter(format!("yield stress must be nonnegative, got {g}")));
        }
        Ok(Self {
            kind: ConvexKind::BinghamNorm { g },
            lipschitz_c: g * domain_area.sqrt(),
        })
    }

    pub fn zero() -> Self {
        Self {
            kind: ConvexKind::Zero,
            lipschitz_c: 0.0,
        }
    }

    /// Pointwise multiplier of the norm integral.
    pub fn yield_stress(&self) -> f64 {
        match self.kind {
            ConvexKind::BinghamNorm { g } => g,
            ConvexKind::Zero => 0.0,
        }
    }

    pub fn density(&self, t: &[f64]) -> f64 {
        self.yield_stress() * t.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn smooth(&self, eps: f64) -> Result<SmoothedNorm> {
        check_eps(eps)?;
        Ok(SmoothedNorm {
            scale: self.yield_stress(),
            eps,
        })
    }

    /// Midpoint-convexity and pointwise Lipschitz (constant `g`) checks on
    /// random segments in `ℝ^dim`.
    pub fn verify_density(&self, dim: usize, n_samples: usize, radius: f64, seed: u64) -> CheckReport {
        let mut r = rng(seed);
        let g = self.yield_stress();
        let mut ratios = Vec::with_capacity(n_samples);
        for _ in 0..n_samples.max(1) {
            let a: Vec<f64> = (0..dim).map(|_| r.gen_range(-radius..radius)).collect();
            let b: Vec<f64> = (0..dim).map(|_| r.gen_range(-radius..radius)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let lhs = self.density(&mid);
            let rhs = 0.5 * self.density(&a) + 0.5 * self.density(&b);
            let conv: f64 = if lhs <= rhs + 1e-14 * (1.0 + rhs.abs()) { 0.0 } else { 2.0 };
            let dist: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let lip = ratio((self.density(&a) - self.density(&b)).abs(), g * dist);
            let mut w = a.clone();
            w.extend(b);
            ratios.push((conv.max(lip), w));
        }
        CheckReport::from_ratios(ratios)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn jlambda_vanishes_at_origin() {
        assert_eq!(jlambda_value(0.0, 0.1).unwrap(), 0.0);
        assert_eq!(jlambda_deriv(0.0, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn jlambda_unit_point() {
        assert_abs_diff_eq!(jlambda_value(1.0, 1.0).unwrap(), 2f64.sqrt() - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jlambda_deriv(1.0, 1.0).unwrap(), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn jlambda_branches_meet_at_one() {
        // both branch formulas evaluate to √1.25 − 0.5 at |r| = 1 for λ = 0.5
        let expected = 1.25f64.sqrt() - 0.5;
        let inner = jlambda_value(1.0, 0.5).unwrap();
        let outer = jlambda_value(1.0 + 1e-15, 0.5).unwrap();
        assert_abs_diff_eq!(inner, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(outer, expected, epsilon = 1e-14);
    }

    #[test]
    fn jlambda_rejects_nonpositive_lambda() {
        assert!(matches!(jlambda_value(0.5, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(jlambda_deriv(0.5, -1.0), Err(Error::Parameter(_))));
        assert!(SlipPotential::jlambda(0.0).is_err());
    }

    #[test]
    fn clarke_examples() {
        let n = SlipPotential::norm_convex();
        assert_eq!(n.clarke_directional([0.0, 0.0], [3.0, 4.0]).unwrap(), 5.0);
        let j = SlipPotential::jlambda(1.0).unwrap();
        assert_abs_diff_eq!(
            j.clarke_directional([1.0, 0.0], [1.0, 0.0]).unwrap(),
            1.0 / 2f64.sqrt(),
            epsilon = 1e-15
        );
        for p in [&n, &j] {
            assert_eq!(p.clarke_directional([0.3, -2.0], [0.0, 0.0]).unwrap(), 0.0);
        }
    }

    #[test]
    fn subgradient_examples() {
        let n = SlipPotential::norm_convex();
        assert_eq!(n.subgradient_select([0.0, 0.0]).unwrap(), [0.0, 0.0]);
        assert_eq!(n.subgradient_select([0.0, 2.0]).unwrap(), [0.0, 1.0]);
        let j = SlipPotential::jlambda(1.0).unwrap();
        let z = j.subgradient_select([1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(z[0], 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(z[1], 0.0);
    }

    #[test]
    fn custom_without_derivative_is_unsupported() {
        let p = PiecewiseRadial::new(
            vec![],
            vec![RadialBranch {
                value: Arc::new(|r| r * r),
                deriv: None,
            }],
        )
        .unwrap();
        let s = SlipPotential::custom(p, 1.0, 2.0, true);
        assert_eq!(s.value([3.0, 4.0]), 25.0);
        assert!(matches!(
            s.clarke_directional([1.0, 0.0], [1.0, 0.0]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn custom_kink_selects_minimal_norm() {
        // ψ = ρ on [0,1], ψ = 2ρ − 1 beyond: ∂ at ρ = 1 is [1, 2]·e
        let p = PiecewiseRadial::new(
            vec![1.0],
            vec![
                RadialBranch {
                    value: Arc::new(|r| r),
                    deriv: Some(Arc::new(|_| 1.0)),
                },
                RadialBranch {
                    value: Arc::new(|r| 2.0 * r - 1.0),
                    deriv: Some(Arc::new(|_| 2.0)),
                },
            ],
        )
        .unwrap();
        let s = SlipPotential::custom(p, 2.0, 0.0, true);
        assert_eq!(s.subgradient_select([0.0, 1.0]).unwrap(), [0.0, 1.0]);
        assert_eq!(s.clarke_directional([0.0, 1.0], [0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(s.clarke_directional([0.0, 1.0], [0.0, -1.0]).unwrap(), -1.0);
    }

    #[test]
    fn growth_checks() {
        let j = SlipPotential::jlambda(0.5).unwrap();
        assert!(j.verify_growth(10_000, 10.0, 7).unwrap().passed);
        let n = SlipPotential::norm_convex();
        assert!(n.verify_growth(1000, 5.0, 1).unwrap().passed);
        let bad = SlipPotential::norm_convex().with_growth(0.5, 0.0);
        let rep = bad.verify_growth(1000, 5.0, 1).unwrap();
        assert!(!rep.passed);
        assert_abs_diff_eq!(rep.max_ratio, 2.0, epsilon = 1e-12);
        assert!(rep.witness.is_some());
        assert!(matches!(n.verify_growth(0, 1.0, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn growth_check_is_deterministic() {
        let j = SlipPotential::jlambda(0.3).unwrap().with_growth(0.2, 0.0);
        let a = j.verify_growth(500, 4.0, 42).unwrap();
        let b = j.verify_growth(500, 4.0, 42).unwrap();
        assert_eq!(a, b);
    }

    /// Independent oracle for the relaxed-monotonicity constant of the radial
    /// j_λ: the most negative slope of j′_λ on a fine 1D grid.
    fn grid_min_second_derivative(lambda: f64, radius: f64) -> f64 {
        let n = 400_000;
        let h = 2.0 * radius / n as f64;
        (0..n)
            .map(|i| {
                let a = -radius + i as f64 * h;
                (jlambda_deriv(a + h, lambda).unwrap() - jlambda_deriv(a, lambda).unwrap()) / h
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn relaxed_monotonicity_estimates() {
        let n = SlipPotential::norm_convex();
        assert_eq!(n.estimate_relaxed_monotonicity(2000, 5.0, 3).unwrap(), 0.0);

        let j = SlipPotential::jlambda(1.0).unwrap();
        let m = j.estimate_relaxed_monotonicity(2000, 10.0, 3).unwrap();
        assert!(m > 0.0 && m <= 1.0, "m_j = {m}");
        let oracle = -grid_min_second_derivative(1.0, 10.0);
        assert!((m - oracle).abs() < 1e-3, "estimate {m} vs grid {oracle}");
    }

    #[test]
    fn smoothing_examples() {
        let spec = ConvexPotentialSpec::bingham(1.0, 1.0).unwrap();
        let s = spec.smooth(1e-3).unwrap();
        assert_eq!(s.value(&[0.0, 0.0, 0.0]), 0.0);
        let v = s.value(&[1.0, 0.0, 0.0]);
        assert!((1.0 - 1e-3..=1.0).contains(&v));
        assert_abs_diff_eq!(v, (1.0f64 + 1e-6).sqrt() - 1e-3, epsilon = 1e-15);
        assert!(spec.smooth(0.0).is_err());
    }

    #[test]
    fn smoothed_gradient_matches_central_differences() {
        let mut r = rng(11);
        let s = SmoothedNorm { scale: 1.7, eps: 1e-2 };
        let step = 1e-5;
        for _ in 0..100 {
            let t: Vec<f64> = (0..3).map(|_| r.gen_range(-2.0..2.0)).collect();
            let g = s.gradient(&t);
            for k in 0..3 {
                let mut tp = t.clone();
                let mut tm = t.clone();
                tp[k] += step;
                tm[k] -= step;
                let fd = (s.value(&tp) - s.value(&tm)) / (2.0 * step);
                let rel = (fd - g[k]).abs() / g[k].abs().max(1e-3);
                assert!(rel <= 1e-6, "component {k}: fd {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn slip_smoothing() {
        let n = SlipPotential::norm_convex().smooth(1e-4).unwrap();
        assert_eq!(n.value([0.0, 0.0]), 0.0);
        let j = SlipPotential::jlambda(0.5).unwrap();
        let s = j.smooth(1e-4).unwrap();
        assert_eq!(s.value([0.3, 0.4]), j.value([0.3, 0.4]));
    }

    #[test]
    fn weight_bounds() {
        let w = WeightFunction::rational(0.2, 0.8, 1.0).unwrap();
        assert!(w.verify_bounds(1000, 10.0, 0).passed);
        let lying = WeightFunction {
            h1: 0.5,
            ..w.clone()
        };
        assert!(!lying.verify_bounds(1000, 10.0, 0).passed);
        assert!(WeightFunction::constant(0.0).is_err());
    }

    #[test]
    fn bingham_density_checks() {
        let spec = ConvexPotentialSpec::bingham(2.0, 4.0).unwrap();
        assert_eq!(spec.lipschitz_c, 4.0);
        assert!(spec.verify_density(3, 2000, 3.0, 5).passed);
        assert_eq!(ConvexPotentialSpec::zero().density(&[1.0, 2.0]), 0.0);
    }

    #[test]
    fn jlambda_branch_continuity() {
        for lambda in [0.1, 0.5, 1.0] {
            for k in 4..16 {
                let d = 10f64.powi(-k);
                let gap = (jlambda_value(1.0 - d, lambda).unwrap()
                    - jlambda_value(1.0 + d, lambda).unwrap())
                .abs();
                assert!(gap <= 4.0 * d + 1e-15, "λ={lambda}, δ={d}: gap {gap}");
            }
        }
    }

    #[test]
    fn jlambda_approximates_abs_on_unit_interval() {
        for lambda in [0.5, 0.1, 0.01, 0.001] {
            let sup = (0..=20_000)
                .map(|i| {
                    let r = -1.0 + i as f64 * 1e-4;
                    (jlambda_value(r, lambda).unwrap() - r.abs()).abs()
                })
                .fold(0.0, f64::max);
            assert!(sup <= lambda, "λ={lambda}: sup {sup}");
        }
    }

    proptest! {
        #[test]
        fn jlambda_derivative_bounded(r in -1e3f64..1e3, lambda in 1e-4f64..10.0) {
            prop_assert!(jlambda_deriv(r, lambda).unwrap().abs() <= 1.0);
        }

        #[test]
        fn jlambda_derivative_is_odd(r in -50f64..50.0, lambda in 1e-3f64..5.0) {
            let a = jlambda_deriv(r, lambda).unwrap();
            let b = jlambda_deriv(-r, lambda).unwrap();
            prop_assert!((a + b).abs() <= 1e-15);
        }

        #[test]
        fn selection_satisfies_subgradient_inequality(
            x in -5f64..5.0, y in -5f64..5.0, vx in -3f64..3.0, vy in -3f64..3.0,
            lambda in 0.05f64..3.0, which in 0usize..2,
        ) {
            let p = if which == 0 { SlipPotential::norm_convex() } else { SlipPotential::jlambda(lambda).unwrap() };
            let z = p.subgradient_select([x, y]).unwrap();
            let d = p.clarke_directional([x, y], [vx, vy]).unwrap();
            prop_assert!(z[0] * vx + z[1] * vy <= d + 1e-12);
        }
    }
}
