//! Non-private ground-truth computations used by benchmarks and acceptance
//! tests: exact least squares, the scaling factor of the LSE under a binary
//! link (Monte Carlo and quadrature routes kept deliberately independent),
//! the inverse-sample-covariance factor, and moment-residual diagnostics.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::regression::PrivateMoments;
use crate::synthetic::ModelFunction;

/// Relative residual the least-squares solve must certify.
pub const LSE_RESIDUAL_RTOL: f64 = 1e-8;

/// Exact least squares estimate (XᵀX)⁻¹Xᵀy via a thin QR factorization.
///
/// The solve certifies ‖XᵀX·β − Xᵀy‖ ≤ 1e-8·‖Xᵀy‖ and reports the system as
/// singular otherwise.
pub fn exact_lse(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::dim(format!(
            "covariates have {} rows but labels have {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() < x.ncols() {
        return Err(Error::Singular("fewer rows than columns".into()));
    }
    let qr = x.clone().qr();
    let qt_y = qr.q().transpose() * y;
    let beta = qr
        .r()
        .solve_upper_triangular(&qt_y)
        .ok_or_else(|| Error::Singular("rank-deficient design matrix".into()))?;

    let xterm = x.transpose() * y;
    let residual = (x.transpose() * (x * &beta) - &xterm).norm();
    if residual > LSE_RESIDUAL_RTOL * xterm.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::Singular(format!(
            "normal-equation residual {residual} failed the certificate"
        )));
    }
    Ok(beta)
}

/// Second, independent least-squares route: Cholesky solve of the normal
/// equations. Used to cross-check [`exact_lse`].
pub fn lse_normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let gram = x.transpose() * x;
    let rhs = x.transpose() * y;
    let chol = nalgebra::Cholesky::new(gram)
        .ok_or_else(|| Error::Singular("normal equations are not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// The factor n/(n−d−1) by which the inverse empirical covariance of n
/// Gaussian samples in d dimensions overshoots Σ⁻¹ in expectation.
pub fn wishart_factor(n: usize, d: usize) -> Result<f64> {
    if n <= d + 1 {
        return Err(Error::arg(format!(
            "inverse-covariance factor needs n > d+1, got n={n}, d={d}"
        )));
    }
    Ok(n as f64 / (n - d - 1) as f64)
}

/// Scaling factor estimate with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFactor {
    pub value: f64,
    pub std_error: f64,
}

fn index_variance(beta: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    if sigma.nrows() != beta.len() || sigma.ncols() != beta.len() {
        return Err(Error::dim(format!(
            "sigma is {}x{} but beta has length {}",
            sigma.nrows(),
            sigma.ncols(),
            beta.len()
        )));
    }
    let v = beta.dot(&(sigma * beta));
    if !v.is_finite() || v < 0.0 {
        return Err(Error::arg(format!("index variance βᵀΣβ = {v} is not usable")));
    }
    Ok(v)
}

/// Multiplicative factor k = (2n/(n−d−1))·E[f'(βᵀX)] relating the LSE to the
/// true coefficient under a binary link, estimated by Monte Carlo over
/// βᵀX ~ N(0, βᵀΣβ).
pub fn stein_factor_mc<R: Rng + ?Sized>(
    link: &dyn ModelFunction,
    beta: &DVector<f64>,
    sigma: &DMatrix<f64>,
    n: usize,
    d: usize,
    mc_samples: usize,
    rng: &mut R,
) -> Result<ScalingFactor> {
    if mc_samples < 10_000 {
        return Err(Error::arg(format!(
            "scaling-factor Monte Carlo needs at least 10000 samples, got {mc_samples}"
        )));
    }
    let scale = 2.0 * wishart_factor(n, d)?;
    let var = index_variance(beta, sigma)?;
    if var == 0.0 {
        return Ok(ScalingFactor {
            value: scale * link.deriv(0.0),
            std_error: 0.0,
        });
    }
    let sd = var.sqrt();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..mc_samples {
        let z: f64 = rng.sample(StandardNormal);
        let v = link.deriv(sd * z);
        sum += v;
        sum_sq += v * v;
    }
    let m = mc_samples as f64;
    let mean = sum / m;
    let variance = (sum_sq / m - mean * mean).max(0.0);
    Ok(ScalingFactor {
        value: scale * mean,
        std_error: scale * (variance / m).sqrt(),
    })
}

/// Quadrature route for the same factor: adaptive Simpson integration of
/// f'(s)·φ(s; 0, βᵀΣβ) over [−10σ, 10σ] to tolerance 1e-8. Shares no code
/// with the Monte-Carlo route.
pub fn stein_factor_quadrature(
    link: &dyn ModelFunction,
    beta: &DVector<f64>,
    sigma: &DMatrix<f64>,
    n: usize,
    d: usize,
) -> Result<f64> {
    let scale = 2.0 * wishart_factor(n, d)?;
    let var = index_variance(beta, sigma)?;
    if var == 0.0 {
        return Ok(scale * link.deriv(0.0));
    }
    let sd = var.sqrt();
    let density = |s: f64| (-0.5 * (s / sd) * (s / sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let integrand = |s: f64| link.deriv(s) * density(s);
    let expectation = adaptive_simpson(&integrand, -10.0 * sd, 10.0 * sd, 1e-8);
    Ok(scale * expectation)
}

fn simpson_slice(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (left, lm, flm) = simpson_slice(f, a, fa, m, fm);
    let (right, rm, frm) = simpson_slice(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
        + adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson_slice(f, a, fa, b, fb);
    adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Norms of the private-moment deviations from the empirical moments,
/// normalized by the true covariance: ‖Σ^{-1/2}·(Σ̂ + μ̂μ̂ᵀ − XᵀX/n)·Σ^{-1/2}‖₂
/// and ‖Σ^{-1/2}·(μ̂' − Xᵀy/n)‖₂. Test-mode diagnostics; both shrink with n.
#[derive(Debug, Clone, Copy)]
pub struct MomentResiduals {
    pub second_moment: f64,
    pub cross_moment: f64,
}

pub fn moment_residual_norms(
    moments: &PrivateMoments,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    sigma_true: &DMatrix<f64>,
) -> Result<MomentResiduals> {
    let n = x.nrows() as f64;
    let whitener = linalg::sym_inv_sqrt(sigma_true)?;
    let q1 = &moments.sigma_hat + &moments.mu_hat * moments.mu_hat.transpose()
        - (x.transpose() * x) / n;
    let q2 = &moments.cross_hat - (x.transpose() * y) / n;
    Ok(MomentResiduals {
        second_moment: linalg::sym_spectral_norm(&(&whitener * q1 * &whitener)),
        cross_moment: (&whitener * q2).norm(),
    })
}
