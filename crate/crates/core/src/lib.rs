//! Differentially private regression over unbounded Gaussian covariates.
//!
//! The crate provides three private estimators — least squares fitting with
//! bounded labels, binary regression under a monotone link, and linear
//! regression with Gaussian errors — together with the sub-gaussian mean and
//! covariance machinery they stand on, seeded synthetic-data generators, and
//! a non-private oracle suite for benchmarking.
//!
//! Everything is a pure function of its inputs and an explicit random
//! generator; identical seeds give bit-identical outputs, which the
//! benchmark harness and the test suite rely on throughout.

// Validation uses `!(v > 0.0)` style comparisons on purpose: unlike
// `v <= 0.0`, they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod linalg;
pub mod oracle;
pub mod privacy;
pub mod regression;
pub mod synthetic;
pub mod univariate;

pub use error::{Error, Result};
pub use estimation::{
    learn_covariance, learn_gaussian, learn_mean, learn_preconditioner, noisy_covariance,
    pair_differences, EstimationConfig, GaussianEstimate, Preconditioner,
};
pub use oracle::{
    exact_lse, lse_normal_equations, moment_residual_norms, stein_factor_mc,
    stein_factor_quadrature, wishart_factor, MomentResiduals, ScalingFactor,
};
pub use privacy::{
    advanced_compose, compose, dp_histogram, laplace_noise, symmetric_gaussian_matrix,
    HistogramResult, PrivacyBudget, ZcdpBudget,
};
pub use regression::{
    block_covariance, block_lambda_min_isotropic, fit_binary, fit_linear, fit_lse,
    reported_budget, LinearConfig, LseConfig, PrivateMoments, RegressionEstimate,
};
pub use synthetic::{
    label_binary, label_bounded, label_linear, sample_gaussian, Dataset, GeneratorSpec, Link,
    ModelFunction, Setting,
};
pub use univariate::{estimate_mean, UnivariateMeanConfig};
