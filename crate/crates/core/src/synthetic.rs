//! Seeded generators for the three experimental settings, so every benchmark
//! run is self-contained and bit-reproducible from its spec.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A monotone map ℝ → [0,1] linking the linear index to the positive-label
/// probability.
pub trait ModelFunction {
    fn prob(&self, t: f64) -> f64;
    fn deriv(&self, t: f64) -> f64;
}

/// Built-in link functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    /// f(t) = 1/(1+e^{-t}).
    Logistic,
    /// A sign function smoothed at the origin by a sharpness parameter λ,
    /// rescaled to [0,1]: f(t) = 1/(1+e^{-λt}). Larger λ means crisper
    /// labels; λ → ∞ recovers sign labels.
    SmoothedSign { sharpness: f64 },
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl ModelFunction for Link {
    fn prob(&self, t: f64) -> f64 {
        match self {
            Link::Logistic => sigmoid(t),
            Link::SmoothedSign { sharpness } => sigmoid(sharpness * t),
        }
    }

    fn deriv(&self, t: f64) -> f64 {
        match self {
            Link::Logistic => {
                let p = sigmoid(t);
                p * (1.0 - p)
            }
            Link::SmoothedSign { sharpness } => {
                let p = sigmoid(sharpness * t);
                sharpness * p * (1.0 - p)
            }
        }
    }
}

impl Link {
    /// Sampled sanity check of the model-function contract: values in [0,1]
    /// and non-decreasing on a grid.
    pub fn validate(&self) -> Result<()> {
        if let Link::SmoothedSign { sharpness } = self {
            if !(*sharpness > 0.0) {
                return Err(Error::arg(format!("sharpness must be positive, got {sharpness}")));
            }
        }
        let mut prev = -f64::INFINITY;
        let mut t = -20.0;
        while t <= 20.0 {
            let p = self.prob(t);
            if !(0.0..=1.0).contains(&p) || p < prev {
                return Err(Error::arg("link must be a non-decreasing map into [0,1]"));
            }
            prev = p;
            t += 0.25;
        }
        Ok(())
    }
}

/// Which label model the generator attaches to the Gaussian covariates.
#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    /// Bounded labels with no assumed model: y = c·sign(βᵀx), sign-flipped
    /// with probability `flip_prob`, clamped to [−c, c]. The exact form is
    /// arbitrary by design; the fitting guarantee does not assume one.
    LseBounded { beta: DVector<f64>, c: f64, flip_prob: f64 },
    /// ±1 labels with Pr[y = +1 | x] = link(βᵀx); covariates must be
    /// zero-mean in this setting.
    Binary { link: Link, beta: DVector<f64> },
    /// y = βᵀx + N(0, σ_ε²).
    Linear { beta: DVector<f64>, sigma_eps: f64 },
}

impl Setting {
    pub fn beta(&self) -> &DVector<f64> {
        match self {
            Setting::LseBounded { beta, .. } => beta,
            Setting::Binary { beta, .. } => beta,
            Setting::Linear { beta, .. } => beta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Setting::LseBounded { .. } => "lse",
            Setting::Binary { .. } => "binary",
            Setting::Linear { .. } => "linear",
        }
    }
}

/// Full description of a synthetic dataset.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub d: usize,
    pub n: usize,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub setting: Setting,
    pub seed: u64,
}

/// A generated dataset: covariate rows and the label column.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 {
            return Err(Error::arg("d and n must be at least 1"));
        }
        if self.mu.len() != self.d {
            return Err(Error::dim(format!("mu has length {}, expected {}", self.mu.len(), self.d)));
        }
        if self.sigma.nrows() != self.d || self.sigma.ncols() != self.d {
            return Err(Error::dim(format!(
                "sigma is {}x{}, expected {}x{}",
                self.sigma.nrows(),
                self.sigma.ncols(),
                self.d,
                self.d
            )));
        }
        if (&self.sigma - self.sigma.transpose()).norm() > 1e-9 * (1.0 + self.sigma.norm()) {
            return Err(Error::arg("sigma must be symmetric"));
        }
        let (_, min_eig) = crate::linalg::sym_eigen_extrema(&self.sigma);
        if min_eig < 1.0 - 1e-9 {
            return Err(Error::arg(format!(
                "sigma must satisfy I ⪯ sigma (smallest eigenvalue {min_eig})"
            )));
        }
        let beta = self.setting.beta();
        if beta.len() != self.d {
            return Err(Error::dim(format!(
                "beta has length {}, expected {}",
                beta.len(),
                self.d
            )));
        }
        match &self.setting {
            Setting::LseBounded { c, flip_prob, .. } => {
                if !(*c > 0.0) {
                    return Err(Error::arg("label bound c must be positive"));
                }
                if !(0.0..1.0).contains(flip_prob) {
                    return Err(Error::arg("flip_prob must lie in [0,1)"));
                }
            }
            Setting::Binary { link, .. } => {
                link.validate()?;
                if self.mu.norm() > 0.0 {
                    return Err(Error::arg("binary setting requires zero-mean covariates (mu = 0)"));
                }
            }
            Setting::Linear { sigma_eps, .. } => {
                if !(*sigma_eps > 0.0) {
                    return Err(Error::arg("sigma_eps must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Generate the dataset deterministically from the embedded seed.
    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let x = sample_gaussian(self.n, &self.mu, &self.sigma, &mut rng)?;
        let y = match &self.setting {
            Setting::LseBounded { beta, c, flip_prob } => label_bounded(&x, beta, *c, *flip_prob, &mut rng),
            Setting::Binary { link, beta } => label_binary(&x, link, beta, &mut rng),
            Setting::Linear { beta, sigma_eps } => label_linear(&x, beta, *sigma_eps, &mut rng),
        };
        Ok(Dataset { x, y })
    }
}

/// n i.i.d. rows from N(mu, sigma), via the Cholesky factor of sigma.
pub fn sample_gaussian<R: Rng + ?Sized>(
    n: usize,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let d = mu.len();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::dim(format!("sigma is {}x{}, expected {d}x{d}", sigma.nrows(), sigma.ncols())));
    }
    let chol = Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::arg("sigma must be positive definite (Cholesky failed)"))?;
    let l = chol.l();
    let mut x = DMatrix::<f64>::zeros(n, d);
    let mut z = DVector::<f64>::zeros(d);
    for i in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let row = mu + &l * &z;
        for j in 0..d {
            x[(i, j)] = row[j];
        }
    }
    Ok(x)
}

/// ±1 labels with Pr[y = +1 | x] = link(βᵀx), independently per row.
pub fn label_binary<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    link: &dyn ModelFunction,
    beta: &DVector<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let scores = x * beta;
    DVector::from_fn(x.nrows(), |i, _| {
        let p = link.prob(scores[i]);
        if rng.random::<f64>() < p {
            1.0
        } else {
            -1.0
        }
    })
}

/// y = βᵀx + N(0, σ_ε²) per row.
pub fn label_linear<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    sigma_eps: f64,
    rng: &mut R,
) -> DVector<f64> {
    let scores = x * beta;
    DVector::from_fn(x.nrows(), |i, _| {
        let g: f64 = rng.sample(StandardNormal);
        scores[i] + sigma_eps * g
    })
}

/// Bounded sign-like labels for the model-free fitting setting.
pub fn label_bounded<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    c: f64,
    flip_prob: f64,
    rng: &mut R,
) -> DVector<f64> {
    let scores = x * beta;
    DVector::from_fn(x.nrows(), |i, _| {
        let mut v = if scores[i] >= 0.0 { c } else { -c };
        if flip_prob > 0.0 && rng.random::<f64>() < flip_prob {
            v = -v;
        }
        v.clamp(-c, c)
    })
}
