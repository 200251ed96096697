//! Constitutive laws `𝕋(D) = μ(‖D‖) D` on symmetric 2×2 tensors.
//!
//! Internally tensors are handled in scaled Voigt form
//! `e = (d11, √2·d12, d22)`, for which the Euclidean inner product equals the
//! Frobenius product `C : D`.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checks::{rng, CheckReport};
use crate::error::{Error, Result};
use crate::potentials::ScalarFn;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymTensor2 {
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

impl SymTensor2 {
    pub const ZERO: Self = Self {
        d11: 0.0,
        d12: 0.0,
        d22: 0.0,
    };

    pub const fn new(d11: f64, d12: f64, d22: f64) -> Self {
        Self { d11, d12, d22 }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn ddot(&self, other: &Self) -> f64 {
        self.d11 * other.d11 + 2.0 * self.d12 * other.d12 + self.d22 * other.d22
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.d11 + self.d22
    }

    pub fn to_scaled_voigt(&self) -> [f64; 3] {
        [self.d11, SQRT_2 * self.d12, self.d22]
    }

    pub fn from_scaled_voigt(e: [f64; 3]) -> Self {
        Self::new(e[0], e[1] / SQRT_2, e[2])
    }

    /// `R D Rᵀ` for the rotation by `theta`.
    pub fn rotate(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let (a, b, d) = (self.d11, self.d12, self.d22);
        Self::new(
            c * c * a - 2.0 * c * s * b + s * s * d,
            c * s * (a - d) + (c * c - s * s) * b,
            s * s * a + 2.0 * c * s * b + c * c * d,
        )
    }
}

impl Add for SymTensor2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.d11 + o.d11, self.d12 + o.d12, self.d22 + o.d22)
    }
}

impl Sub for SymTensor2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.d11 - o.d11, self.d12 - o.d12, self.d22 - o.d22)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self * t.d11, self * t.d12, self * t.d22)
    }
}

/// Viscosity function `μ(r)` of a generalized Newtonian fluid.
#[derive(Clone)]
pub enum Viscosity {
    /// Bounded Carreau form
    /// `μ(r) = μ_∞ + (μ_ref − μ_∞)(1 + κ r²)^((q−2)/2)`, `1 < q ≤ 2`.
    Carreau {
        mu_inf: f64,
        mu_ref: f64,
        kappa: f64,
        q: f64,
    },
    Custom(ScalarFn),
}

impl fmt::Debug for Viscosity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Carreau {
                mu_inf,
                mu_ref,
                kappa,
                q,
            } => write!(
                f,
                "Carreau {{ mu_inf: {mu_inf}, mu_ref: {mu_ref}, kappa: {kappa}, q: {q} }}"
            ),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum LawKind {
    Newtonian {
        mu0: f64,
    },
    GeneralizedNewtonian {
        viscosity: Viscosity,
        mu_lo: f64,
        mu_hi: f64,
        mu2: f64,
    },
}

/// `𝕋` with its declared constants: `‖𝕋(D)‖ ≤ a₀ + a₁‖D‖` and
/// `(𝕋(C) − 𝕋(D)) : (C − D) ≥ m_T ‖C − D‖²`.
#[derive(Clone, Debug)]
pub struct ConstitutiveLaw {
    pub kind: LawKind,
    pub a0: f64,
    pub a1: f64,
    pub m_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub m_hat: f64,
    pub passed: bool,
    pub witness: Option<(SymTensor2, SymTensor2)>,
    pub pairs: usize,
}

impl ConstitutiveLaw {
    pub fn newtonian(mu0: f64) -> Result<Self> {
        if mu0 <= 0.0 || !mu0.is_finite() {
            return Err(Error::Parameter(format!("viscosity must be positive, got {mu0}")));
        }
        Ok(Self {
            kind: LawKind::Newtonian { mu0 },
            a0: 0.0,
            a1: mu0,
            m_t: mu0,
        })
    }

    /// Shear-thinning Carreau law. `μ` decreases from `mu_ref` at `r = 0` to
    /// `mu_inf` as `r → ∞`, and `r ↦ μ(r) r` has slope at least `mu_inf`, so
    /// `m_T = mu_inf`, `a₁ = mu_ref`.
    pub fn carreau(mu_inf: f64, mu_ref: f64, kappa: f64, q: f64) -> Result<Self> {
        if !(mu_inf > 0.0 && mu_ref >= mu_inf && kappa > 0.0 && q > 1.0 && q <= 2.0) {
            return Err(Error::Parameter(
                "Carreau law needs 0 < mu_inf <= mu_ref, kappa > 0, 1 < q <= 2".into(),
            ));
        }
        Ok(Self {
            kind: LawKind::GeneralizedNewtonian {
                viscosity: Viscosity::Carreau {
                    mu_inf,
                    mu_ref,
                    kappa,
                    q,
                },
                mu_lo: mu_inf,
                mu_hi: mu_ref,
                mu2: mu_inf,
            },
            a0: 0.0,
            a1: mu_ref,
            m_t: mu_inf,
        })
    }

    /// Arbitrary viscosity function with user-declared bounds; `m_T = mu2`.
    pub fn custom(mu: ScalarFn, mu_lo: f64, mu_hi: f64, mu2: f64) -> Result<Self> {
        if !(mu_lo > 0.0 && mu_hi >= mu_lo && mu2 > 0.0) {
            return Err(Error::Parameter(
                "custom law needs 0 < mu_lo <= mu_hi and mu2 > 0".into(),
            ));
        }
        Ok(Self {
            kind: LawKind::GeneralizedNewtonian {
                viscosity: Viscosity::Custom(mu),
                mu_lo,
                mu_hi,
                mu2,
            },
            a0: 0.0,
            a1: mu_hi,
            m_t: mu2,
        })
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, LawKind::Newtonian { .. })
    }

    pub fn viscosity(&self, r: f64) -> f64 {
        match &self.kind {
            LawKind::Newtonian { mu0 } => *mu0,
            LawKind::GeneralizedNewtonian { viscosity, .. } => match viscosity {
                Viscosity::Carreau {
                    mu_inf,
                    mu_ref,
                    kappa,
                    q,
                } => mu_inf + (mu_ref - mu_inf) * (1.0 + kappa * r * r).powf(0.5 * (q - 2.0)),
                Viscosity::Custom(f) => f(r),
            },
        }
    }

    pub fn viscosity_deriv(&self, r: f64) -> f64 {
        match &self.kind {
            LawKind::Newtonian { .. } => 0.0,
            LawKind::GeneralizedNewtonian { viscosity, .. } => match viscosity {
                Viscosity::Carreau {
                    mu_inf,
                    mu_ref,
                    kappa,
                    q,
                } => {
                    (mu_ref - mu_inf)
                        * (q - 2.0)
                        * kappa
                        * r
                        * (1.0 + kappa * r * r).powf(0.5 * (q - 4.0))
                }
                Viscosity::Custom(f) => {
                    let h = 1e-6 * (1.0 + r);
                    let lo = (r - h).max(0.0);
                    (f(r + h) - f(lo)) / (r + h - lo)
                }
            },
        }
    }

    pub fn stress(&self, d: &SymTensor2) -> SymTensor2 {
        self.viscosity(d.norm()) * *d
    }

    pub fn stress_voigt(&self, e: &[f64; 3]) -> [f64; 3] {
        let mu = self.viscosity(voigt_norm(e));
        [mu * e[0], mu * e[1], mu * e[2]]
    }

    /// Derivative of `stress_voigt` with respect to `e`:
    /// `μ I + (μ'(s)/s) e eᵀ`.
    pub fn tangent_voigt(&self, e: &[f64; 3]) -> [[f64; 3]; 3] {
        let s = voigt_norm(e);
        let mu = self.viscosity(s);
        let c = if s > 0.0 { self.viscosity_deriv(s) / s } else { 0.0 };
        let mut t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = c * e[i] * e[j];
            }
            t[i][i] += mu;
        }
        t
    }

    /// `Ψ(s) = ∫₀ˢ μ(t) t dt`, the energy density whose gradient is `𝕋`.
    pub fn energy_density(&self, s: f64) -> f64 {
        match &self.kind {
            LawKind::Newtonian { mu0 } => 0.5 * mu0 * s * s,
            LawKind::GeneralizedNewtonian { viscosity, .. } => match viscosity {
                Viscosity::Carreau {
                    mu_inf,
                    mu_ref,
                    kappa,
                    q,
                } => {
                    0.5 * mu_inf * s * s
                        + (mu_ref - mu_inf) * ((1.0 + kappa * s * s).powf(0.5 * q) - 1.0)
                            / (kappa * q)
                }
                Viscosity::Custom(f) => gauss_legendre(|t| f(t) * t, 0.0, s, 32),
            },
        }
    }

    /// Samples pairs `(C, D)` (random pairs in the ball plus a collinear
    /// radial scan) and reports the smallest monotonicity quotient
    /// `(𝕋(C) − 𝕋(D)) : (C − D) / ‖C − D‖²`.
    pub fn check_strong_monotonicity(
        &self,
        n_pairs: usize,
        radius: f64,
        seed: u64,
    ) -> Result<MonotonicityReport> {
        if n_pairs == 0 {
            return Err(Error::Parameter("n_pairs must be at least 1".into()));
        }
        let mut r = rng(seed);
        let mut best = (f64::INFINITY, None);
        let mut pairs = 0;
        let mut consider = |c: SymTensor2, d: SymTensor2| {
            let diff = c - d;
            let nn = diff.ddot(&diff);
            if nn <= 1e-24 {
                return;
            }
            pairs += 1;
            let q = (self.stress(&c) - self.stress(&d)).ddot(&diff) / nn;
            if q < best.0 {
                best = (q, Some((c, d)));
            }
        };
        for _ in 0..n_pairs {
            consider(sample_tensor(&mut r, radius), sample_tensor(&mut r, radius));
        }
        let dir = {
            let t = sample_tensor(&mut r, 1.0);
            (1.0 / t.norm().max(1e-300)) * t
        };
        let n_grid = 2000;
        for i in 0..n_grid {
            let a = radius * i as f64 / n_grid as f64;
            let b = radius * (i + 1) as f64 / n_grid as f64;
            consider(a * dir, b * dir);
        }
        let m_hat = best.0;
        Ok(MonotonicityReport {
            m_hat,
            passed: m_hat >= self.m_t - 1e-10,
            witness: best.1,
            pairs,
        })
    }

    pub fn check_growth(&self, n_samples: usize, radius: f64, seed: u64) -> Result<CheckReport> {
        if n_samples == 0 {
            return Err(Error::Parameter("n_samples must be at least 1".into()));
        }
        let mut r = rng(seed);
        let ratios: Vec<_> = (0..n_samples)
            .map(|_| {
                let d = sample_tensor(&mut r, radius);
                let bound = self.a0 + self.a1 * d.norm();
                let t = self.stress(&d).norm();
                let ratio = if bound > 0.0 {
                    t / bound
                } else if t == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                (ratio, vec![d.d11, d.d12, d.d22])
            })
            .collect();
        Ok(CheckReport::from_ratios(ratios))
    }
}

#[inline]
pub(crate) fn voigt_norm(e: &[f64; 3]) -> f64 {
    (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt()
}

/// Uniform sample of the Frobenius ball of the given radius.
fn sample_tensor<R: Rng>(r: &mut R, radius: f64) -> SymTensor2 {
    loop {
        let e = [
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
        ];
        let n = voigt_norm(&e);
        if n <= 1.0 {
            return SymTensor2::from_scaled_voigt([radius * e[0], radius * e[1], radius * e[2]]);
        }
    }
}

fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const W: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let m = a + (k as f64 + 0.5) * h;
            X.iter()
                .zip(W)
                .map(|(x, w)| w * f(m + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}
