//! Privacy accounting and calibrated noise primitives.
//!
//! A randomized mechanism M satisfies (ε,δ)-differential privacy if for all
//! pairs of datasets D, D' differing in one labeled example and all output
//! sets S:
//!
//! ```text
//!   Pr[M(D) ∈ S] ≤ exp(ε) · Pr[M(D') ∈ S] + δ
//! ```
//!
//! The estimators in this crate compose three kinds of primitive: Laplace
//! noise on scalar statistics, symmetric Gaussian noise matrices on second
//! moments, and a stability-based histogram release used to locate the data
//! before clamping. Everything is a pure function of its inputs and the
//! supplied generator; identical seeds give bit-identical outputs.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// An (ε, δ) differential-privacy budget.
///
/// `epsilon` may be `f64::INFINITY`, the sentinel for "mechanism off": every
/// noise injection downstream is skipped, which the degeneracy tests rely on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    /// Validating constructor: ε > 0 (infinity allowed), δ ∈ (0, 1).
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::arg(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::arg(format!("delta must lie in (0,1), got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    /// Split into `k` equal shares (ε/k, δ/k). Basic composition of the
    /// shares recovers the original budget.
    pub fn split(&self, k: usize) -> Vec<PrivacyBudget> {
        let k_f = k as f64;
        (0..k)
            .map(|_| PrivacyBudget {
                epsilon: self.epsilon / k_f,
                delta: self.delta / k_f,
            })
            .collect()
    }

    /// Multiply both parameters by `f` (stage bookkeeping).
    pub fn scaled(&self, f: f64) -> PrivacyBudget {
        PrivacyBudget {
            epsilon: self.epsilon * f,
            delta: self.delta * f,
        }
    }

    /// Split into `k` shares of equal zCDP cost: ρ = ε²/2 divides as ρ/k per
    /// share, i.e. (ε/√k, δ/k). The shares' zCDP costs sum back to ρ exactly,
    /// so a pipeline whose leaves are split this way stays within the
    /// converted budget reported for ε.
    pub fn split_zcdp(&self, k: usize) -> Vec<PrivacyBudget> {
        let k_f = k as f64;
        (0..k)
            .map(|_| PrivacyBudget {
                epsilon: self.epsilon / k_f.sqrt(),
                delta: self.delta / k_f,
            })
            .collect()
    }

    /// True when ε = ∞, i.e. noise injection is disabled.
    pub fn is_noiseless(&self) -> bool {
        self.epsilon.is_infinite()
    }
}

/// Basic (sequential) composition: (Σεᵢ, Σδᵢ). The empty list composes to
/// the identity (0, 0).
pub fn compose(budgets: &[PrivacyBudget]) -> PrivacyBudget {
    let mut epsilon = 0.0;
    let mut delta = 0.0;
    for b in budgets {
        epsilon += b.epsilon;
        delta += b.delta;
    }
    PrivacyBudget { epsilon, delta }
}

/// Advanced composition of `n` copies of `per_step`:
/// (ε·√(6n·ln(1/δ')), δ' + n·δ).
pub fn advanced_compose(per_step: PrivacyBudget, n: usize, delta_prime: f64) -> PrivacyBudget {
    let n_f = n as f64;
    PrivacyBudget {
        epsilon: per_step.epsilon * (6.0 * n_f * (1.0 / delta_prime).ln()).sqrt(),
        delta: delta_prime + n_f * per_step.delta,
    }
}

/// A zero-concentrated DP budget (ρ-zCDP).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZcdpBudget {
    pub rho: f64,
}

impl ZcdpBudget {
    /// ρ = ε²/2, the zCDP cost of an ε-calibrated Gaussian-mechanism stage.
    pub fn from_epsilon(epsilon: f64) -> Self {
        ZcdpBudget {
            rho: epsilon * epsilon / 2.0,
        }
    }

    /// Convert to approximate DP: ρ-zCDP implies
    /// (ρ + 2√(ρ·ln(1/δ)), δ)-DP for every δ > 0. Written with ρ = ε²/2 this
    /// is (ε²/2 + ε√(2·ln(1/δ)), δ).
    pub fn to_approx_dp(&self, delta: f64) -> PrivacyBudget {
        PrivacyBudget {
            epsilon: self.rho + 2.0 * (self.rho * (1.0 / delta).ln()).sqrt(),
            delta,
        }
    }
}

/// Draw one sample from Laplace(0, scale) by inverse CDF.
pub fn laplace_noise<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::arg(format!("laplace scale must be positive, got {scale}")));
    }
    Ok(laplace_raw(scale, rng))
}

fn laplace_raw<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    // Uniform on (0,1): reject the exact 0 so ln never sees it.
    let mut v: f64 = rng.random();
    while v <= 0.0 {
        v = rng.random();
    }
    let u = v - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// A d×d symmetric matrix whose upper-triangular entries (diagonal included)
/// are i.i.d. N(0, σ²); the lower triangle mirrors the upper.
pub fn symmetric_gaussian_matrix<R: Rng + ?Sized>(
    d: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<nalgebra::DMatrix<f64>> {
    if d == 0 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    if !(sigma > 0.0) {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = normal.sample(rng);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// The bin released by the stability-based histogram, tiling the real line as
/// [k·w, (k+1)·w).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramResult {
    pub bin_index: i64,
    pub bin_lower: f64,
    pub bin_width: f64,
}

/// Index of the bin containing `v` in the width-`w` tiling of the line.
pub fn bin_index(v: f64, width: f64) -> i64 {
    (v / width).floor() as i64
}

/// Stability-based private histogram over the (countably infinite, lazily
/// materialized) tiling of the real line with bins [k·w, (k+1)·w).
///
/// Laplace(2/(n·ε)) noise is added to each occupied bin's count fraction;
/// the most frequent noisy bin is released only if it clears the stability
/// threshold t = 2·ln(2/(δ·γ))/(n·ε) + 1/n, otherwise the mechanism reports
/// no-release (`None`). Ties in the noisy argmax break toward the lowest bin
/// index. Satisfies (ε, δ)-DP under single-element substitution: at most two
/// bin fractions change, by 1/n each.
pub fn dp_histogram<R: Rng + ?Sized>(
    values: &[f64],
    bin_width: f64,
    budget: PrivacyBudget,
    gamma: f64,
    rng: &mut R,
) -> Result<Option<HistogramResult>> {
    if values.is_empty() {
        return Err(Error::arg("histogram input must be non-empty"));
    }
    if !(bin_width > 0.0) {
        return Err(Error::arg(format!("bin width must be positive, got {bin_width}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::arg(format!("gamma must lie in (0,1), got {gamma}")));
    }

    let n = values.len() as f64;
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &v in values {
        *counts.entry(bin_index(v, bin_width)).or_insert(0) += 1;
    }

    let noiseless = budget.is_noiseless();
    let scale = 2.0 / (n * budget.epsilon);
    let threshold = if noiseless {
        1.0 / n
    } else {
        2.0 * (2.0 / (budget.delta * gamma)).ln() / (n * budget.epsilon) + 1.0 / n
    };

    let mut best: Option<(i64, f64)> = None;
    // Ascending bin order + strict comparison: deterministic lowest-index
    // tie-breaking.
    for (&k, &c) in &counts {
        let noisy = c as f64 / n
            + if noiseless {
                0.0
            } else {
                laplace_raw(scale, rng)
            };
        if noisy > threshold && best.is_none_or(|(_, b)| noisy > b) {
            best = Some((k, noisy));
        }
    }

    Ok(best.map(|(k, _)| HistogramResult {
        bin_index: k,
        bin_lower: k as f64 * bin_width,
        bin_width,
    }))
}
