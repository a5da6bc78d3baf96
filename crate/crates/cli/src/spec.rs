//! JSON file formats consumed by the harness: dataset generator specs,
//! estimator configuration, and sweep descriptions.

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use dpreg_core::{GeneratorSpec, Link, PrivacyBudget, Setting};

/// Results CSV schema version, written as the first column of every row.
pub const SCHEMA_VERSION: u32 = 1;

/// An epsilon that is either a number or the string sentinel "inf".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonValue {
    Number(f64),
    Text(EpsilonText),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsilonText {
    #[serde(rename = "inf")]
    Inf,
}

impl EpsilonValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            EpsilonValue::Number(v) => *v,
            EpsilonValue::Text(EpsilonText::Inf) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkSpec {
    Logistic,
    SmoothedSign { sharpness: f64 },
}

impl LinkSpec {
    pub fn to_link(&self) -> Link {
        match self {
            LinkSpec::Logistic => Link::Logistic,
            LinkSpec::SmoothedSign { sharpness } => Link::SmoothedSign { sharpness: *sharpness },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SettingSpec {
    Lse {
        beta: Vec<f64>,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default)]
        flip_prob: f64,
    },
    Binary {
        link: LinkSpec,
        beta: Vec<f64>,
    },
    Linear {
        beta: Vec<f64>,
        sigma_eps: f64,
    },
}

fn default_c() -> f64 {
    1.0
}

impl SettingSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SettingSpec::Lse { .. } => "lse",
            SettingSpec::Binary { .. } => "binary",
            SettingSpec::Linear { .. } => "linear",
        }
    }

    pub fn beta(&self) -> &[f64] {
        match self {
            SettingSpec::Lse { beta, .. } => beta,
            SettingSpec::Binary { beta, .. } => beta,
            SettingSpec::Linear { beta, .. } => beta,
        }
    }

    fn with_beta(&self, beta: Vec<f64>) -> SettingSpec {
        match self {
            SettingSpec::Lse { c, flip_prob, .. } => SettingSpec::Lse { beta, c: *c, flip_prob: *flip_prob },
            SettingSpec::Binary { link, .. } => SettingSpec::Binary { link: link.clone(), beta },
            SettingSpec::Linear { sigma_eps, .. } => SettingSpec::Linear { beta, sigma_eps: *sigma_eps },
        }
    }

    fn to_setting(&self, d: usize) -> Result<Setting> {
        let beta = self.beta();
        if beta.len() != d {
            bail!("field `beta` has length {} but d = {d}", beta.len());
        }
        let beta = DVector::from_row_slice(beta);
        Ok(match self {
            SettingSpec::Lse { c, flip_prob, .. } => Setting::LseBounded { beta, c: *c, flip_prob: *flip_prob },
            SettingSpec::Binary { link, .. } => Setting::Binary { link: link.to_link(), beta },
            SettingSpec::Linear { sigma_eps, .. } => Setting::Linear { beta, sigma_eps: *sigma_eps },
        })
    }
}

/// Generator description as stored on disk; `mu` defaults to zeros and
/// `sigma` to the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorFile {
    pub d: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    pub setting: SettingSpec,
    pub seed: u64,
}

impl GeneratorFile {
    /// Turn the file form into a validated core spec.
    pub fn resolve(&self) -> Result<GeneratorSpec> {
        self.resolve_with(self.d, self.n, self.seed)
    }

    /// Resolve with sweep overrides. Changing `d` requires the default
    /// (zeros/identity) mean and covariance; `beta` is truncated or
    /// zero-padded to the requested dimension.
    pub fn resolve_with(&self, d: usize, n: usize, seed: u64) -> Result<GeneratorSpec> {
        let mu = match &self.mu {
            None => DVector::zeros(d),
            Some(v) => {
                if d != self.d {
                    bail!("sweeping d requires the default `mu`");
                }
                if v.len() != self.d {
                    bail!("field `mu` has length {} but d = {}", v.len(), self.d);
                }
                DVector::from_row_slice(v)
            }
        };
        let sigma = match &self.sigma {
            None => DMatrix::identity(d, d),
            Some(rows) => {
                if d != self.d {
                    bail!("sweeping d requires the default `sigma`");
                }
                if rows.len() != self.d || rows.iter().any(|r| r.len() != self.d) {
                    bail!("field `sigma` must be a {0}x{0} matrix", self.d);
                }
                DMatrix::from_fn(self.d, self.d, |i, j| rows[i][j])
            }
        };
        let mut beta = self.setting.beta().to_vec();
        beta.resize(d, 0.0);
        let setting = self.setting.with_beta(beta).to_setting(d)?;
        let spec = GeneratorSpec { d, n, mu, sigma, setting, seed };
        spec.validate().map_err(|e| anyhow::anyhow!("invalid generator spec: {e}"))?;
        Ok(spec)
    }
}

/// Estimator configuration file; every field has a default so a missing
/// config file means "defaults".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfigFile {
    pub epsilon: EpsilonValue,
    pub delta: f64,
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub c: f64,
    pub beta_bound: f64,
    pub sigma_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_prime: Option<f64>,
}

impl Default for FitConfigFile {
    fn default() -> Self {
        FitConfigFile {
            epsilon: EpsilonValue::Number(1.0),
            delta: 1e-6,
            alpha: 0.1,
            eta: 0.1,
            gamma: 0.05,
            kappa: 1.0,
            c: 1.0,
            beta_bound: 1.0,
            sigma_bound: 1.0,
            kappa_prime: None,
        }
    }
}

impl FitConfigFile {
    pub fn budget(&self) -> Result<PrivacyBudget> {
        PrivacyBudget::new(self.epsilon.as_f64(), self.delta)
            .map_err(|e| anyhow::anyhow!("invalid privacy budget: {e}"))
    }

    pub fn with_epsilon(&self, epsilon: f64) -> FitConfigFile {
        FitConfigFile { epsilon: EpsilonValue::Number(epsilon), ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Lse,
    Binary,
    Linear,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Lse => "lse",
            EstimatorKind::Binary => "binary",
            EstimatorKind::Linear => "linear",
        }
    }
}

/// Sweep grid: the cross product of the lists, each cell repeated `trials`
/// times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n: Vec<usize>,
    pub epsilon: Vec<EpsilonValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFile {
    pub generator: GeneratorFile,
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub config: FitConfigFile,
    pub sweep: SweepGrid,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

impl SweepFile {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("field `trials` must be at least 1");
        }
        if self.sweep.n.is_empty() || self.sweep.epsilon.is_empty() {
            bail!("sweep lists `n` and `epsilon` must be non-empty");
        }
        if let Some(ds) = &self.sweep.d {
            if ds.is_empty() {
                bail!("sweep list `d` must be non-empty when present");
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sweep.d.clone().unwrap_or_else(|| vec![self.generator.d])
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
