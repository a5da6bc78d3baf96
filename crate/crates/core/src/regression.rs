//! The private regression estimators.
//!
//! * [`fit_lse`] — private least squares fitting for bounded labels with no
//!   assumed label model: private second moment and mean of the covariates,
//!   private sub-gaussian mean of the label-weighted covariates, then
//!   β̂ = (Σ̂ + μ̂μ̂ᵀ)⁻¹·μ̂'.
//! * [`fit_binary`] — the same pipeline for ±1 labels from a monotone link,
//!   with the covariate mean pinned to zero; the estimate targets k·β where k
//!   is the link's scaling factor (see the oracle module).
//! * [`fit_linear`] — private linear regression with Gaussian errors: the
//!   covariance of the stacked vector (X, y) carries Σβ in its last column,
//!   which is extracted and solved against an independently estimated Σ̂.
//!
//! All three return bottom (`beta_hat = None`) instead of an error when the
//! moment matrix fails the invertibility tolerance or a sub-estimator
//! declines to release; that outcome is part of the contract and happens with
//! probability O(γ) at the intended operating points.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimation::{learn_covariance, learn_mean, pair_differences, EstimationConfig};
use crate::linalg;
use crate::privacy::{compose, PrivacyBudget, ZcdpBudget};

/// Fewest rows accepted by the LSE/binary estimators (the internal mean pool
/// must meet the univariate minimum).
pub const MIN_LSE_SAMPLES: usize = 30;

/// Fewest rows accepted by the linear estimator (two pools, each pairable).
pub const MIN_LINEAR_SAMPLES: usize = 8;

/// Configuration for [`fit_lse`] and [`fit_binary`].
#[derive(Debug, Clone, Copy)]
pub struct LseConfig {
    pub budget: PrivacyBudget,
    /// Covariance-side accuracy target, in (0,1). Recorded, not calibrated.
    pub alpha: f64,
    /// Cross-moment accuracy target, in (0,1). Recorded, not calibrated.
    pub eta: f64,
    pub gamma: f64,
    /// Spectral bound κ with I ⪯ Σ ⪯ κ·I.
    pub kappa: f64,
    /// Label magnitude bound c; rows violating it are clamped with a counted
    /// warning rather than rejected (rejection would leak).
    pub c: f64,
}

impl LseConfig {
    pub fn new(budget: PrivacyBudget, alpha: f64, eta: f64, gamma: f64, kappa: f64, c: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("eta", eta), ("gamma", gamma)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::arg(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        if !(kappa >= 1.0) {
            return Err(Error::arg(format!("kappa must be at least 1, got {kappa}")));
        }
        if !(c > 0.0) {
            return Err(Error::arg(format!("label bound c must be positive, got {c}")));
        }
        Ok(LseConfig { budget, alpha, eta, gamma, kappa, c })
    }
}

/// Configuration for [`fit_linear`] (no label bound; labels are unbounded).
#[derive(Debug, Clone, Copy)]
pub struct LinearConfig {
    pub budget: PrivacyBudget,
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    /// Spectral bound for the covariate covariance.
    pub kappa: f64,
    /// Optional explicit spectral bound for the stacked (X, y) covariance;
    /// when absent it is derived from the rough bounds below.
    pub kappa_prime: Option<f64>,
    /// Rough upper bound on ‖β‖₂, used only to derive `kappa_prime`.
    pub beta_bound: f64,
    /// Rough upper bound on the error scale σ_ε, used only to derive
    /// `kappa_prime`.
    pub sigma_bound: f64,
}

impl LinearConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        budget: PrivacyBudget,
        alpha: f64,
        eta: f64,
        gamma: f64,
        kappa: f64,
        kappa_prime: Option<f64>,
        beta_bound: f64,
        sigma_bound: f64,
    ) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("eta", eta), ("gamma", gamma)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::arg(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        if !(kappa >= 1.0) {
            return Err(Error::arg(format!("kappa must be at least 1, got {kappa}")));
        }
        if let Some(kp) = kappa_prime {
            if !(kp >= 1.0) {
                return Err(Error::arg(format!("kappa_prime must be at least 1, got {kp}")));
            }
        }
        if !(beta_bound >= 0.0) {
            return Err(Error::arg("beta_bound must be non-negative"));
        }
        if !(sigma_bound > 0.0) {
            return Err(Error::arg("sigma_bound must be positive"));
        }
        Ok(LinearConfig { budget, alpha, eta, gamma, kappa, kappa_prime, beta_bound, sigma_bound })
    }

    /// Bound on λ_max of the stacked covariance: explicit override or
    /// 2·(B_β²·κ + max(κ, B_σ²)) from the block-matrix eigenvalue bound.
    pub fn effective_kappa_prime(&self) -> f64 {
        self.kappa_prime
            .unwrap_or(2.0 * (self.beta_bound.powi(2) * self.kappa + self.kappa.max(self.sigma_bound.powi(2))))
            .max(1.0)
    }
}

/// The three private moment estimates behind an LSE/binary fit, exposed for
/// oracle-assisted diagnostics in tests.
#[derive(Debug, Clone)]
pub struct PrivateMoments {
    pub sigma_hat: DMatrix<f64>,
    pub mu_hat: DVector<f64>,
    pub cross_hat: DVector<f64>,
}

/// Result of a private fit: the estimate or bottom, with named diagnostics.
#[derive(Debug, Clone)]
pub struct RegressionEstimate {
    /// `None` is the bottom output: the moment matrix failed the
    /// invertibility tolerance or a sub-estimator did not release.
    pub beta_hat: Option<DVector<f64>>,
    /// Named scalar diagnostics (budget spent, condition numbers, deflation
    /// rounds, clamp counts, ...).
    pub diagnostics: BTreeMap<String, f64>,
    /// Private moments, when the pipeline produces them (LSE/binary).
    pub moments: Option<PrivateMoments>,
}

impl RegressionEstimate {
    pub fn is_bottom(&self) -> bool {
        self.beta_hat.is_none()
    }
}

fn record_budget(diag: &mut BTreeMap<String, f64>, stages: &[PrivacyBudget]) {
    let raw = compose(stages);
    let spent = ZcdpBudget::from_epsilon(raw.epsilon).to_approx_dp(raw.delta);
    diag.insert("epsilon_param".into(), raw.epsilon);
    diag.insert("delta_param".into(), raw.delta);
    diag.insert("epsilon_spent".into(), spent.epsilon);
    diag.insert("delta_spent".into(), spent.delta);
}

/// Total approximate-DP budget an estimator run reports for a raw parameter
/// pair (ε, δ): the zCDP-style conversion (ε²/2 + ε√(2·ln(1/δ)), δ).
pub fn reported_budget(budget: PrivacyBudget) -> PrivacyBudget {
    ZcdpBudget::from_epsilon(budget.epsilon).to_approx_dp(budget.delta)
}

fn validate_xy(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::dim(format!(
            "covariates have {} rows but labels have {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::arg("covariate dimension must be at least 1"));
    }
    Ok(())
}

/// Private least squares fitting over bounded labels.
pub fn fit_lse<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &LseConfig,
    rng: &mut R,
) -> Result<RegressionEstimate> {
    fit_lse_pipeline(x, y, cfg, false, rng)
}

/// Private binary regression: the LSE pipeline with the covariate mean pinned
/// to zero and its budget share reallocated to the remaining stages.
pub fn fit_binary<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &LseConfig,
    rng: &mut R,
) -> Result<RegressionEstimate> {
    for (i, v) in y.iter().enumerate() {
        if *v != 1.0 && *v != -1.0 {
            return Err(Error::arg(format!("binary labels must be ±1, row {i} has {v}")));
        }
    }
    fit_lse_pipeline(x, y, cfg, true, rng)
}

fn fit_lse_pipeline<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &LseConfig,
    binary: bool,
    rng: &mut R,
) -> Result<RegressionEstimate> {
    validate_xy(x, y)?;
    let n = x.nrows();
    let d = x.ncols();
    if n < MIN_LSE_SAMPLES {
        return Err(Error::arg(format!(
            "need at least {MIN_LSE_SAMPLES} rows, got {n}"
        )));
    }

    // Clamp out-of-bound labels; the sensitivity analysis is stated for the
    // clamped pipeline, and rejecting rows would leak data-dependent behavior.
    let mut clamped = 0usize;
    let y_work = if binary {
        y.clone()
    } else {
        DVector::from_fn(n, |i, _| {
            let v = y[i];
            if v.abs() > cfg.c {
                clamped += 1;
                v.clamp(-cfg.c, cfg.c)
            } else {
                v
            }
        })
    };
    if clamped > 0 {
        log::warn!("clamped {clamped}/{n} labels to ±{}", cfg.c);
    }

    // Stage budgets: thirds across (covariance, covariate mean, cross mean);
    // in binary mode the skipped mean stage's third is reallocated half and
    // half to the remaining stages.
    let stages = if binary {
        cfg.budget.split(2)
    } else {
        cfg.budget.split(3)
    };

    let mut diag = BTreeMap::new();
    record_budget(&mut diag, &stages);
    diag.insert("clamped_labels".into(), clamped as f64);

    // Covariance of the covariates from pair differences (kills any mean).
    let cov_cfg = EstimationConfig::new(cfg.kappa, cfg.alpha, cfg.gamma, stages[0])?;
    let diffs = pair_differences(x);
    let (sigma_hat, pre_cov) = learn_covariance(&diffs, &cov_cfg, rng)?;
    diag.insert("preconditioner_rounds_covariance".into(), pre_cov.rounds as f64);

    // Covariate mean (skipped when the model pins it to zero).
    let mu_hat = if binary {
        DVector::zeros(d)
    } else {
        let mean_cfg = EstimationConfig::new(cfg.kappa, cfg.alpha, cfg.gamma, stages[1])?;
        match learn_mean(x, &mean_cfg, rng)? {
            Some((m, pre)) => {
                diag.insert("preconditioner_rounds_mean".into(), pre.rounds as f64);
                m
            }
            None => {
                diag.insert("no_release_mean".into(), 1.0);
                return Ok(RegressionEstimate { beta_hat: None, diagnostics: diag, moments: None });
            }
        }
    };

    // Sub-gaussian mean of the label-weighted covariates under the c²κ bound.
    let yx = DMatrix::from_fn(n, d, |i, j| y_work[i] * x[(i, j)]);
    let cross_kappa = (cfg.c * cfg.c * cfg.kappa).max(1.0);
    let cross_budget = stages[if binary { 1 } else { 2 }];
    let cross_cfg = EstimationConfig::new(cross_kappa, cfg.eta, cfg.gamma, cross_budget)?;
    let cross_hat = match learn_mean(&yx, &cross_cfg, rng)? {
        Some((m, pre)) => {
            diag.insert("preconditioner_rounds_cross".into(), pre.rounds as f64);
            m
        }
        None => {
            diag.insert("no_release_cross".into(), 1.0);
            return Ok(RegressionEstimate { beta_hat: None, diagnostics: diag, moments: None });
        }
    };

    let moment_matrix = linalg::symmetrize(&(&sigma_hat + &mu_hat * mu_hat.transpose()));
    let (max_eig, min_eig) = linalg::sym_eigen_extrema(&moment_matrix);
    diag.insert("lambda_max_m".into(), max_eig);
    diag.insert("lambda_min_m".into(), min_eig);

    let moments = PrivateMoments { sigma_hat, mu_hat, cross_hat };
    match linalg::sym_inverse_checked(&moment_matrix) {
        Some((inv, condition)) => {
            diag.insert("condition_number".into(), condition);
            let beta = &inv * &moments.cross_hat;
            Ok(RegressionEstimate { beta_hat: Some(beta), diagnostics: diag, moments: Some(moments) })
        }
        None => Ok(RegressionEstimate { beta_hat: None, diagnostics: diag, moments: Some(moments) }),
    }
}

/// Private linear regression with Gaussian errors and unbounded labels.
///
/// The supplied rows are split into two pools: the first half is stacked into
/// (Xᵢ, yᵢ) vectors whose private covariance carries Σβ in its last column;
/// the second half provides an independent private estimate of Σ.
pub fn fit_linear<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &LinearConfig,
    rng: &mut R,
) -> Result<RegressionEstimate> {
    validate_xy(x, y)?;
    let n = x.nrows();
    let d = x.ncols();
    if n < MIN_LINEAR_SAMPLES {
        return Err(Error::arg(format!(
            "need at least {MIN_LINEAR_SAMPLES} rows, got {n}"
        )));
    }

    let half = n / 2;
    let stages = cfg.budget.split(2);
    let mut diag = BTreeMap::new();
    record_budget(&mut diag, &stages);

    // Stacked pool: z = (x, y) in d+1 dimensions.
    let z = DMatrix::from_fn(half, d + 1, |i, j| if j < d { x[(i, j)] } else { y[i] });
    let z_diffs = pair_differences(&z);
    let kp = cfg.effective_kappa_prime();
    diag.insert("kappa_prime".into(), kp);
    let z_cfg = EstimationConfig::new(kp, cfg.eta, cfg.gamma, stages[0])?;
    let (sigma_prime_hat, pre_z) = learn_covariance(&z_diffs, &z_cfg, rng)?;
    diag.insert("preconditioner_rounds_stacked".into(), pre_z.rounds as f64);
    diag.insert("noise_floor_estimate".into(), sigma_prime_hat[(d, d)]);

    // First d entries of the last column estimate Σβ.
    let sigma_beta_hat = DVector::from_fn(d, |i, _| sigma_prime_hat[(i, d)]);

    // Fresh pool for Σ̂, kept independent of the Σβ estimate.
    let x_pool = x.rows(half, n - half).into_owned();
    let x_diffs = pair_differences(&x_pool);
    let x_cfg = EstimationConfig::new(cfg.kappa, cfg.alpha, cfg.gamma, stages[1])?;
    let (sigma_hat, pre_x) = learn_covariance(&x_diffs, &x_cfg, rng)?;
    diag.insert("preconditioner_rounds_covariance".into(), pre_x.rounds as f64);

    let (max_eig, min_eig) = linalg::sym_eigen_extrema(&sigma_hat);
    diag.insert("lambda_max_m".into(), max_eig);
    diag.insert("lambda_min_m".into(), min_eig);

    match linalg::sym_inverse_checked(&sigma_hat) {
        Some((inv, condition)) => {
            diag.insert("condition_number".into(), condition);
            let beta = &inv * &sigma_beta_hat;
            Ok(RegressionEstimate { beta_hat: Some(beta), diagnostics: diag, moments: None })
        }
        None => Ok(RegressionEstimate { beta_hat: None, diagnostics: diag, moments: None }),
    }
}

/// Exact block covariance of the stacked vector (X, y) under the linear
/// model: [Σ, Σβ; βᵀΣ, σ_ε² + βᵀΣβ]. Used by generators and eigenvalue
/// bound tests; Σ is assumed PSD.
pub fn block_covariance(
    sigma: &DMatrix<f64>,
    beta: &DVector<f64>,
    noise_var: f64,
) -> Result<DMatrix<f64>> {
    linalg::check_square(sigma, "sigma")?;
    let d = sigma.nrows();
    if beta.len() != d {
        return Err(Error::dim(format!(
            "beta has length {} but sigma is {d}x{d}",
            beta.len()
        )));
    }
    if !(noise_var > 0.0) {
        return Err(Error::arg(format!("noise variance must be positive, got {noise_var}")));
    }
    let sigma_beta = sigma * beta;
    let corner = noise_var + beta.dot(&sigma_beta);
    let mut out = DMatrix::<f64>::zeros(d + 1, d + 1);
    out.view_mut((0, 0), (d, d)).copy_from(sigma);
    for i in 0..d {
        out[(i, d)] = sigma_beta[i];
        out[(d, i)] = sigma_beta[i];
    }
    out[(d, d)] = corner;
    Ok(out)
}

/// Closed-form smallest eigenvalue of the block covariance when Σ = κ·I.
pub fn block_lambda_min_isotropic(kappa: f64, beta_norm_sq: f64, noise_var: f64) -> f64 {
    let s = (noise_var + kappa * beta_norm_sq + kappa) / 2.0;
    s - (s * s - kappa * noise_var).sqrt()
}
