//! Private multivariate covariance and mean estimation for Gaussian and
//! sub-gaussian vectors.
//!
//! The building block is a single-shot noisy covariance: truncate rows to a
//! data-independent radius, form the empirical second moment, add a symmetric
//! Gaussian noise matrix, and project onto the PSD cone. Because its accuracy
//! degrades linearly in the spectral bound κ, an iterative preconditioner
//! first deflates the largest eigendirections in O(log κ) rounds until the
//! working bound is a small constant; estimation then happens in the
//! well-conditioned frame and is mapped back.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::privacy::{compose, symmetric_gaussian_matrix, PrivacyBudget};
use crate::univariate::{estimate_mean, UnivariateMeanConfig};

/// Deflation stops once the working spectral bound drops to this constant.
pub const DEFLATION_STOP: f64 = 4.0;

/// Per-round shrink factor of the working spectral bound.
pub const DEFLATION_SHRINK: f64 = 0.7;

/// Configuration shared by the multivariate estimators.
#[derive(Debug, Clone, Copy)]
pub struct EstimationConfig {
    /// Spectral upper bound κ with I ⪯ Σ ⪯ κ·I.
    pub kappa: f64,
    /// Target accuracy; recorded for diagnostics, the mechanisms themselves
    /// are calibrated by (n, ε, δ, γ, κ) only.
    pub alpha: f64,
    /// Confidence in (0,1).
    pub gamma: f64,
    pub budget: PrivacyBudget,
}

impl EstimationConfig {
    pub fn new(kappa: f64, alpha: f64, gamma: f64, budget: PrivacyBudget) -> Result<Self> {
        if !(kappa >= 1.0) {
            return Err(Error::arg(format!("kappa must be at least 1, got {kappa}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::arg(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::arg(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(EstimationConfig {
            kappa,
            alpha,
            gamma,
            budget,
        })
    }
}

/// The symmetric rescaling matrix produced by the deflation rounds, together
/// with the bounds it was built under.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    /// Symmetric invertible A; on the high-probability event the spectrum of
    /// A·Σ·A lies in [Ω(1), O(1)] for the true Σ.
    pub matrix: DMatrix<f64>,
    /// Spectral bound the deflation started from.
    pub kappa_in: f64,
    /// Working bound when deflation stopped; the believed bound on λ(AΣA).
    pub kappa_out: f64,
    /// Deflation rounds executed.
    pub rounds: usize,
}

impl Preconditioner {
    pub fn identity(d: usize, kappa: f64) -> Self {
        Preconditioner {
            matrix: DMatrix::identity(d, d),
            kappa_in: kappa,
            kappa_out: kappa,
            rounds: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Inverse of A. A is symmetric positive definite by construction, so
    /// failure here indicates a bug upstream rather than a data condition.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        linalg::sym_inverse_checked(&self.matrix)
            .map(|(inv, _)| inv)
            .ok_or_else(|| Error::Singular("preconditioner lost invertibility".into()))
    }
}

/// Private mean and covariance of a multivariate sample, with the
/// preconditioner that produced the covariance and the budget consumed.
#[derive(Debug, Clone)]
pub struct GaussianEstimate {
    pub mean_hat: DVector<f64>,
    pub cov_hat: DMatrix<f64>,
    pub preconditioner: Preconditioner,
    pub budget_spent: PrivacyBudget,
}

/// Row-pairing trick: map 2m samples to m differences (x₂ᵢ₊₁ − x₂ᵢ)/√2,
/// which are zero-mean with the same covariance. An odd trailing row is
/// dropped.
pub fn pair_differences(samples: &DMatrix<f64>) -> DMatrix<f64> {
    let pairs = samples.nrows() / 2;
    let d = samples.ncols();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(pairs, d, |i, j| {
        (samples[(2 * i + 1, j)] - samples[(2 * i, j)]) * inv_sqrt2
    })
}

/// Squared truncation radius κ·d·ln(n/γ) used by the noisy covariance.
pub fn truncation_radius_sq(kappa: f64, d: usize, n: usize, gamma: f64) -> f64 {
    kappa * d as f64 * (n as f64 / gamma).ln()
}

/// Rescale every row with squared norm above `radius_sq` back onto the ball.
/// Projection (rather than dropping) keeps n and hence the sensitivity bound
/// exact. Returns the number of rows touched.
pub fn truncate_rows(samples: &mut DMatrix<f64>, radius_sq: f64) -> usize {
    let mut touched = 0;
    for mut row in samples.row_iter_mut() {
        let norm_sq = row.norm_squared();
        if norm_sq > radius_sq {
            row *= (radius_sq / norm_sq).sqrt();
            touched += 1;
        }
    }
    touched
}

/// Single-shot private covariance: truncate, add a symmetric Gaussian noise
/// matrix with entrywise σ = κ·d·ln(n/γ)/(n·ε), and project onto the PSD
/// cone. Samples are treated as zero-mean.
pub fn noisy_covariance<R: Rng + ?Sized>(
    samples: &DMatrix<f64>,
    kappa: f64,
    budget: PrivacyBudget,
    gamma: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = samples.nrows();
    let d = samples.ncols();
    if n == 0 {
        return Err(Error::arg("covariance estimation needs at least one sample"));
    }
    if !(kappa >= 1.0) {
        return Err(Error::arg(format!("kappa must be at least 1, got {kappa}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::arg(format!("gamma must lie in (0,1), got {gamma}")));
    }
    if n < d {
        log::warn!("noisy covariance with n={n} < d={d}: empirical second moment is rank deficient");
    }

    let mut truncated = samples.clone();
    let radius_sq = truncation_radius_sq(kappa, d, n, gamma);
    let touched = truncate_rows(&mut truncated, radius_sq);
    if touched > 0 {
        log::debug!("truncated {touched}/{n} rows onto the radius-{:.3} ball", radius_sq.sqrt());
    }

    let mut second_moment = truncated.transpose() * &truncated;
    second_moment /= n as f64;

    if !budget.is_noiseless() {
        let sigma = kappa * d as f64 * (n as f64 / gamma).ln() / (n as f64 * budget.epsilon);
        second_moment += symmetric_gaussian_matrix(d, sigma, rng)?;
    }

    Ok(linalg::psd_project(&second_moment))
}

/// Number of deflation rounds the working bound needs to fall to the stop
/// constant.
pub fn planned_rounds(kappa: f64) -> usize {
    let mut k = kappa;
    let mut rounds = 0;
    while k > DEFLATION_STOP {
        k *= DEFLATION_SHRINK;
        rounds += 1;
    }
    rounds
}

/// Learn a symmetric preconditioner A with A·Σ·A well conditioned.
///
/// The conditioning guarantee is stated for inputs whose true covariance
/// satisfies Σ ⪯ κ·I; an underestimated κ voids the contract (truncation
/// then biases every round).
///
/// Each round estimates the covariance privately under the current bound κⱼ,
/// rescales every eigendirection whose estimated eigenvalue exceeds κⱼ/2 down
/// to the next bound κⱼ₊₁ = 0.7·κⱼ, and folds the rescaling into the running
/// transform. The budget is split evenly across rounds in zCDP cost. The
/// returned matrix is the symmetric polar factor (PᵀP)^{1/2} of the
/// accumulated product P, which has exactly the spectrum the round
/// transforms impose on Σ.
pub fn learn_preconditioner<R: Rng + ?Sized>(
    samples: &DMatrix<f64>,
    kappa: f64,
    budget: PrivacyBudget,
    gamma: f64,
    rng: &mut R,
) -> Result<Preconditioner> {
    if !(kappa >= 1.0) {
        return Err(Error::arg(format!("kappa must be at least 1, got {kappa}")));
    }
    let d = samples.ncols();
    let rounds = planned_rounds(kappa);
    if rounds == 0 {
        return Ok(Preconditioner::identity(d, kappa));
    }

    let shares = budget.split_zcdp(rounds);
    let mut current = samples.clone();
    let mut product = DMatrix::<f64>::identity(d, d);
    let mut bound = kappa;

    for share in shares {
        let estimate = noisy_covariance(&current, bound, share, gamma, rng)?;
        let next_bound = DEFLATION_SHRINK * bound;
        let (vals, vecs) = linalg::sym_eigen(&estimate);
        let factors = DVector::from_fn(d, |i, _| {
            let lambda = vals[i];
            if lambda > bound / 2.0 {
                (next_bound / lambda).sqrt()
            } else {
                1.0
            }
        });
        let round_transform = linalg::recompose(&factors, &vecs);
        current = &current * &round_transform; // rows become (Bx)ᵀ, B symmetric
        product = &round_transform * product;
        bound = next_bound;
    }

    let matrix = linalg::sym_sqrt(&(product.transpose() * &product));
    Ok(Preconditioner {
        matrix,
        kappa_in: kappa,
        kappa_out: bound,
        rounds,
    })
}

// Split a call budget between the preconditioner and the estimation it
// enables: equal zCDP shares, or everything to the estimator when no
// deflation rounds are planned.
fn precondition_then_rest(budget: PrivacyBudget, rounds: usize) -> (PrivacyBudget, PrivacyBudget) {
    if rounds == 0 {
        (PrivacyBudget { epsilon: 0.0, delta: 0.0 }, budget)
    } else {
        let halves = budget.split_zcdp(2);
        (halves[0], halves[1])
    }
}

/// Private covariance of zero-mean (sub-)gaussian samples: precondition,
/// estimate in the conditioned frame under a unit bound, map back with
/// Σ̂ = A⁻¹·Σ̃·A⁻¹. Callers with non-zero-mean data pass pair differences.
pub fn learn_covariance<R: Rng + ?Sized>(
    samples: &DMatrix<f64>,
    cfg: &EstimationConfig,
    rng: &mut R,
) -> Result<(DMatrix<f64>, Preconditioner)> {
    let rounds = planned_rounds(cfg.kappa);
    let (pre_budget, pce_budget) = precondition_then_rest(cfg.budget, rounds);
    let pre = learn_preconditioner(samples, cfg.kappa, pre_budget, cfg.gamma, rng)?;
    let transformed = samples * &pre.matrix;
    let conditioned = noisy_covariance(&transformed, 1.0, pce_budget, cfg.gamma, rng)?;
    let inv = pre.inverse()?;
    let cov = linalg::symmetrize(&(&inv * conditioned * &inv));
    Ok((cov, pre))
}

/// Private mean of (sub-)gaussian samples with unbounded mean.
///
/// When deflation rounds are planned, the first ⌊2n/3⌋ rows (rounded down to
/// a pair count) feed the preconditioner through pair differences and the
/// rest are estimated; with no rounds planned the preconditioner is the
/// identity and the whole pool goes to estimation. Coordinates are estimated
/// in the conditioned frame with equal zCDP shares and mapped back through
/// A⁻¹. Any coordinate-level no-release collapses the whole call to `None`.
pub fn learn_mean<R: Rng + ?Sized>(
    samples: &DMatrix<f64>,
    cfg: &EstimationConfig,
    rng: &mut R,
) -> Result<Option<(DVector<f64>, Preconditioner)>> {
    let n = samples.nrows();
    let d = samples.ncols();
    let rounds = planned_rounds(cfg.kappa);
    let pre_rows = if rounds == 0 { 0 } else { (2 * n / 3) & !1usize };
    let mean_rows = n - pre_rows;
    if (rounds > 0 && pre_rows < 2) || mean_rows < crate::univariate::MIN_SAMPLES {
        return Err(Error::arg(format!(
            "mean estimation needs a larger pool: n={n} leaves {pre_rows} preconditioner rows and {mean_rows} mean rows"
        )));
    }

    let (pre_budget, mean_budget) = precondition_then_rest(cfg.budget, rounds);

    let pre = if rounds == 0 {
        Preconditioner::identity(d, cfg.kappa)
    } else {
        let diffs = pair_differences(&samples.rows(0, pre_rows).into_owned());
        learn_preconditioner(&diffs, cfg.kappa, pre_budget, cfg.gamma, rng)?
    };

    let pool = samples.rows(pre_rows, mean_rows).into_owned();
    let conditioned = &pool * &pre.matrix;

    // Derive one child stream per coordinate up front, so the result is
    // seed-reproducible regardless of evaluation order.
    let child_seeds: Vec<u64> = (0..d).map(|_| rng.random()).collect();
    // Each coordinate gets an equal zCDP share ρ/d of the block; the
    // univariate mechanism spends ρ(E) = E²/4 over its two phases, so its
    // parameter is E = ε·√(2/d).
    let coord_budget = PrivacyBudget {
        epsilon: mean_budget.epsilon * (2.0 / d as f64).sqrt(),
        delta: mean_budget.delta / d as f64,
    };
    let gamma_c = cfg.gamma / d as f64;
    let variance_upper = pre.kappa_out.max(1.0);

    let mut estimates = DVector::<f64>::zeros(d);
    for (j, &seed) in child_seeds.iter().enumerate() {
        let ucfg = UnivariateMeanConfig::new(variance_upper, coord_budget, gamma_c)?;
        let column: Vec<f64> = conditioned.column(j).iter().cloned().collect();
        let mut child = ChaCha8Rng::seed_from_u64(seed);
        match estimate_mean(&column, &ucfg, &mut child)? {
            Some(v) => estimates[j] = v,
            None => return Ok(None),
        }
    }

    let mean_hat = pre.inverse()? * estimates;
    Ok(Some((mean_hat, pre)))
}

/// Private mean and covariance in one call, splitting the budget evenly
/// between the two halves. The covariance uses pair differences of the whole
/// pool; the mean uses the pool split documented on [`learn_mean`].
pub fn learn_gaussian<R: Rng + ?Sized>(
    samples: &DMatrix<f64>,
    cfg: &EstimationConfig,
    rng: &mut R,
) -> Result<Option<GaussianEstimate>> {
    let halves = cfg.budget.split(2);
    let cov_cfg = EstimationConfig { budget: halves[0], ..*cfg };
    let mean_cfg = EstimationConfig { budget: halves[1], ..*cfg };
    let diffs = pair_differences(samples);
    let (cov_hat, pre) = learn_covariance(&diffs, &cov_cfg, rng)?;
    let mean = learn_mean(samples, &mean_cfg, rng)?;
    Ok(mean.map(|(mean_hat, _)| GaussianEstimate {
        mean_hat,
        cov_hat,
        preconditioner: pre,
        budget_spent: compose(&halves),
    }))
}
