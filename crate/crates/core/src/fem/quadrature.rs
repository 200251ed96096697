//! Quadrature rules on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}` and on
//! the reference interval `[0, 1]`. Weights sum to the reference measure.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleRule {
    pub degree: usize,
    /// `(ξ, η, weight)`.
    pub points: Vec<(f64, f64, f64)>,
}

fn orbit3(a: f64, w: f64) -> [(f64, f64, f64); 3] {
    let b = 1.0 - 2.0 * a;
    [(a, a, w), (b, a, w), (a, b, w)]
}

impl TriangleRule {
    /// Lowest-order rule exact for polynomials of total degree `degree`.
    pub fn with_degree(degree: usize) -> Result<Self> {
        let points: Vec<(f64, f64, f64)> = match degree {
            0 | 1 => return Err(Error::Parameter(format!(
                "quadrature degree {degree} is insufficient: the energy inner product needs degree 2"
            ))),
            2 => orbit3(1.0 / 6.0, 1.0 / 6.0).to_vec(),
            3 | 4 => {
                let mut p = orbit3(0.445_948_490_915_964_9, 0.223_381_589_678_011_47 / 2.0).to_vec();
                p.extend(orbit3(0.091_576_213_509_770_7, 0.109_951_743_655_321_87 / 2.0));
                p
            }
            5 => {
                let s = 15f64.sqrt();
                let mut p = vec![(1.0 / 3.0, 1.0 / 3.0, 9.0 / 80.0)];
                p.extend(orbit3((6.0 - s) / 21.0, (155.0 - s) / 2400.0));
                p.extend(orbit3((6.0 + s) / 21.0, (155.0 + s) / 2400.0));
                p
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "triangle quadrature of degree {degree}"
                )))
            }
        };
        Ok(Self {
            degree: if degree == 3 { 4 } else { degree },
            points,
        })
    }
}

/// Three-point Gauss–Legendre rule on `[0, 1]`, exact to degree 5.
pub fn gauss3_unit() -> [(f64, f64); 3] {
    let d = (0.6f64).sqrt() / 2.0;
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// ∫ ξ^a η^b over the reference triangle = a! b! / (a + b + 2)!.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn rules_integrate_monomials_exactly() {
        for deg in [2, 4, 5] {
            let rule = TriangleRule::with_degree(deg).unwrap();
            let wsum: f64 = rule.points.iter().map(|p| p.2).sum();
            assert_abs_diff_eq!(wsum, 0.5, epsilon = 1e-15);
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .map(|&(x, y, w)| w * x.powi(a as i32) * y.powi(b as i32))
                        .sum();
                    assert_abs_diff_eq!(q, monomial_integral(a, b), epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn degree_one_is_rejected() {
        assert!(TriangleRule::with_degree(1).is_err());
        assert!(TriangleRule::with_degree(9).is_err());
    }

    #[test]
    fn gauss_is_exact_to_degree_five() {
        for k in 0..=5 {
            let q: f64 = gauss3_unit().iter().map(|&(t, w)| w * t.powi(k)).sum();
            assert_abs_diff_eq!(q, 1.0 / (k as f64 + 1.0), epsilon = 1e-15);
        }
    }
}
