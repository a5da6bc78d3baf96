//! `dpreg` — generate synthetic regression datasets, fit the private
//! estimators, sweep parameter grids, and evaluate against non-private
//! oracles. Set `DPREG_LOG` (error|warn|info|debug) for logging.

mod data;
mod run;
mod spec;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use dpreg_core::{exact_lse, reported_budget, stein_factor_mc, stein_factor_quadrature, Setting};
use rand::SeedableRng;

use spec::{EstimatorKind, FitConfigFile, GeneratorFile, SweepFile};

#[derive(Parser)]
#[command(name = "dpreg", version, about = "Differentially private regression benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset CSV plus its JSON sidecar from a generator spec.
    Generate {
        /// Generator spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV path; the sidecar lands next to it with a .json extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one estimator on a dataset and print the result as JSON.
    Fit {
        /// Dataset CSV (as written by `generate`).
        #[arg(long)]
        data: PathBuf,
        /// Which estimator to run.
        #[arg(long, value_enum)]
        estimator: EstimatorKind,
        /// Estimator configuration (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Compare against the oracle target from the sidecar.
        #[arg(long)]
        evaluate: bool,
        /// Seed for the estimator's noise.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the cross product of a sweep spec and write a results CSV.
    Sweep {
        /// Sweep spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Results CSV path (overrides the spec's output_path).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Base seed (overrides the spec's seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall-clock runtimes (off by default so reruns are
        /// byte-identical).
        #[arg(long)]
        timings: bool,
    },
    /// Print the non-private oracle report for a dataset.
    Evaluate {
        /// Dataset CSV with sidecar.
        #[arg(long)]
        data: PathBuf,
        /// Monte-Carlo sample count for the scaling-factor oracle.
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
        /// Seed for the Monte-Carlo oracle.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter("DPREG_LOG")).init();
    match Cli::parse().command {
        Command::Generate { spec, out } => cmd_generate(&spec, &out),
        Command::Fit { data, estimator, config, evaluate, seed } => {
            cmd_fit(&data, estimator, config.as_deref(), evaluate, seed)
        }
        Command::Sweep { spec, out, jobs, seed, timings } => {
            cmd_sweep(&spec, out.as_deref(), jobs, seed, timings)
        }
        Command::Evaluate { data, mc_samples, seed } => cmd_evaluate(&data, mc_samples, seed),
    }
}

/// JSON has no infinity literal; mirror the sweep-spec sentinel.
fn json_f64(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::json!("inf")
    }
}

fn cmd_generate(spec_path: &std::path::Path, out: &std::path::Path) -> Result<()> {
    let file: GeneratorFile = spec::read_json(spec_path)?;
    let resolved = file.resolve()?;
    let dataset = resolved.generate().map_err(|e| anyhow::anyhow!("generation failed: {e}"))?;
    data::write_dataset(out, &dataset.x, &dataset.y)?;
    data::write_sidecar(out, &file)?;
    log::info!(
        "wrote {} ({} rows, d={}) and {}",
        out.display(),
        resolved.n,
        resolved.d,
        data::sidecar_path(out).display()
    );
    Ok(())
}

fn cmd_fit(
    data_path: &std::path::Path,
    estimator: EstimatorKind,
    config_path: Option<&std::path::Path>,
    evaluate: bool,
    seed: u64,
) -> Result<()> {
    let cfg: FitConfigFile = match config_path {
        Some(p) => spec::read_json(p)?,
        None => FitConfigFile::default(),
    };
    let (x, y) = data::read_dataset(data_path)?;

    // A sidecar is optional for a plain fit but mandatory for evaluation.
    let sidecar = match data::read_sidecar(data_path) {
        Ok(s) => Some(s),
        Err(e) => {
            if evaluate {
                return Err(e.context("--evaluate needs the dataset sidecar"));
            }
            None
        }
    };
    if let Some(s) = &sidecar {
        if s.setting.name() != estimator.name() {
            log::warn!(
                "dataset was generated for the {} setting but the {} estimator was requested",
                s.setting.name(),
                estimator.name()
            );
        }
    }

    let outcome = run::run_estimator(estimator, &x, &y, &cfg, seed)?;
    let budget = reported_budget(cfg.budget()?);
    let diagnostics: serde_json::Map<String, serde_json::Value> = outcome
        .estimate
        .diagnostics
        .iter()
        .map(|(k, v)| (k.clone(), json_f64(*v)))
        .collect();

    let mut out = serde_json::json!({
        "schema_version": spec::SCHEMA_VERSION,
        "estimator": estimator.name(),
        "n": x.nrows(),
        "d": x.ncols(),
        "beta_hat": outcome.estimate.beta_hat.as_ref().map(|b| b.iter().cloned().collect::<Vec<f64>>()),
        "bottom_flag": outcome.estimate.is_bottom(),
        "diagnostics": diagnostics,
        "budget_reported": { "epsilon": json_f64(budget.epsilon), "delta": budget.delta },
        "runtime_ms": outcome.runtime_ms,
    });

    if evaluate {
        let s = sidecar.expect("checked above");
        let resolved = s.resolve()?;
        if let Some(beta) = &outcome.estimate.beta_hat {
            let target = run::evaluation_target(estimator, &resolved, &x, &y)?;
            let (error_l2, angle_deg) = run::error_metrics(beta, &target);
            out["target"] = serde_json::json!(target.iter().cloned().collect::<Vec<f64>>());
            out["error_l2"] = serde_json::json!(error_l2);
            out["angle_deg"] = serde_json::json!(angle_deg);
        }
    }

    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_sweep(
    spec_path: &std::path::Path,
    out: Option<&std::path::Path>,
    jobs: usize,
    seed: Option<u64>,
    timings: bool,
) -> Result<()> {
    let mut sweep: SweepFile = spec::read_json(spec_path)?;
    if let Some(s) = seed {
        sweep.seed = s;
    }
    let out_path: PathBuf = match (out, &sweep.output_path) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => bail!("no output path: pass --out or set output_path in the spec"),
    };

    let rows = run::run_sweep(&sweep, jobs, timings)?;
    let mut writer = csv::Writer::from_path(&out_path)
        .with_context(|| format!("creating {}", out_path.display()))?;
    writer.write_record(run::RESULT_HEADER)?;
    for row in &rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    log::info!("wrote {} result rows to {}", rows.len(), out_path.display());
    Ok(())
}

fn cmd_evaluate(data_path: &std::path::Path, mc_samples: usize, seed: u64) -> Result<()> {
    let (x, y) = data::read_dataset(data_path)?;
    let sidecar = data::read_sidecar(data_path)?;
    let resolved = sidecar.resolve()?;

    let beta_star = exact_lse(&x, &y).map_err(|e| anyhow::anyhow!("oracle least squares failed: {e}"))?;
    let mut out = serde_json::json!({
        "schema_version": spec::SCHEMA_VERSION,
        "setting": sidecar.setting.name(),
        "n": x.nrows(),
        "d": x.ncols(),
        "beta_true": resolved.setting.beta().iter().cloned().collect::<Vec<f64>>(),
        "beta_star": beta_star.iter().cloned().collect::<Vec<f64>>(),
    });

    if let Setting::Binary { link, beta } = &resolved.setting {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mc = stein_factor_mc(link, beta, &resolved.sigma, x.nrows(), x.ncols(), mc_samples, &mut rng)
            .map_err(|e| anyhow::anyhow!("scaling factor oracle failed: {e}"))?;
        let quad = stein_factor_quadrature(link, beta, &resolved.sigma, x.nrows(), x.ncols())
            .map_err(|e| anyhow::anyhow!("scaling factor oracle failed: {e}"))?;
        out["k_mc"] = serde_json::json!({ "value": mc.value, "std_error": mc.std_error });
        out["k_quadrature"] = serde_json::json!(quad);
        out["k_beta"] = serde_json::json!(beta.iter().map(|b| b * quad).collect::<Vec<f64>>());
    }

    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
