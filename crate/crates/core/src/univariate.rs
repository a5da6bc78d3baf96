//! Private mean estimation for a univariate sub-gaussian variable whose mean
//! may lie anywhere on the real line.
//!
//! Two phases: (1) a stability-based histogram with bin width √κ locates the
//! data, (2) the samples are clamped to the located bin padded by a
//! sub-gaussian tail radius and the clamped empirical mean is released with
//! Laplace noise calibrated to the clamp range. The budget is split evenly
//! between the phases; the δ part is spent entirely by the histogram (the
//! noisy mean is a pure-ε Laplace mechanism).

use rand::Rng;

use crate::error::{Error, Result};
use crate::privacy::{dp_histogram, laplace_noise, PrivacyBudget};

/// Fewest samples the estimator accepts; below this the histogram threshold
/// cannot be met anyway.
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct UnivariateMeanConfig {
    /// Upper bound κ on the variance, with 1 ≤ σ² ≤ κ. Post-preconditioning
    /// callers pass an O(1) value.
    pub variance_upper: f64,
    pub budget: PrivacyBudget,
    /// Confidence parameter in (0,1); drives both the histogram threshold and
    /// the clamp radius.
    pub gamma: f64,
}

impl UnivariateMeanConfig {
    pub fn new(variance_upper: f64, budget: PrivacyBudget, gamma: f64) -> Result<Self> {
        if !(variance_upper >= 1.0) {
            return Err(Error::arg(format!(
                "variance upper bound must be at least 1, got {variance_upper}"
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::arg(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(UnivariateMeanConfig {
            variance_upper,
            budget,
            gamma,
        })
    }
}

/// Clamp radius around the released bin: r = w·√(2·ln(2n/γ)), the sub-gaussian
/// tail radius at confidence γ.
pub fn clamp_radius(bin_width: f64, n: usize, gamma: f64) -> f64 {
    bin_width * (2.0 * (2.0 * n as f64 / gamma).ln()).sqrt()
}

/// Private univariate mean. Returns `None` when the histogram refuses to
/// release a bin.
pub fn estimate_mean<R: Rng + ?Sized>(
    values: &[f64],
    cfg: &UnivariateMeanConfig,
    rng: &mut R,
) -> Result<Option<f64>> {
    let n = values.len();
    if n < MIN_SAMPLES {
        return Err(Error::arg(format!(
            "univariate mean needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }

    let width = cfg.variance_upper.sqrt();
    let half = PrivacyBudget {
        epsilon: cfg.budget.epsilon / 2.0,
        delta: cfg.budget.delta,
    };
    let located = match dp_histogram(values, width, half, cfg.gamma, rng)? {
        Some(h) => h,
        None => return Ok(None),
    };

    let r = clamp_radius(width, n, cfg.gamma);
    let lo = located.bin_lower - r;
    let hi = located.bin_lower + width + r;

    let mut sum = 0.0;
    for &v in values {
        sum += v.clamp(lo, hi);
    }
    let mean = sum / n as f64;

    let eps2 = cfg.budget.epsilon / 2.0;
    let noise = if eps2.is_infinite() {
        0.0
    } else {
        laplace_noise((hi - lo) / (n as f64 * eps2), rng)?
    };
    Ok(Some(mean + noise))
}
