//! Outcome type shared by the sampling-based hypothesis checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Absolute slack allowed on normalized ratios before a check fails.
pub const RATIO_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub passed: bool,
    /// Largest observed value of the normalized quantity (pass iff ≤ 1 + tol).
    pub max_ratio: f64,
    /// Sample at which `max_ratio` was attained.
    pub witness: Option<Vec<f64>>,
    pub samples: usize,
}

impl CheckReport {
    pub(crate) fn from_ratios<I>(ratios: I) -> Self
    where
        I: IntoIterator<Item = (f64, Vec<f64>)>,
    {
        let mut max_ratio = f64::NEG_INFINITY;
        let mut witness = None;
        let mut samples = 0;
        for (ratio, at) in ratios {
            samples += 1;
            if ratio > max_ratio || ratio.is_nan() {
                max_ratio = ratio;
                witness = Some(at);
            }
        }
        let passed = max_ratio <= 1.0 + RATIO_TOLERANCE;
        Self {
            passed,
            max_ratio,
            witness,
            samples,
        }
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
