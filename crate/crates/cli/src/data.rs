//! Dataset CSV and sidecar IO.
//!
//! Datasets are CSV with header `x1,...,xd,y`, one row per labeled example,
//! values printed in shortest round-trip form so reruns are byte-identical.
//! Each dataset carries a JSON sidecar (same stem, `.json`) holding the
//! resolved generator spec, including the seed and ground-truth coefficient,
//! for oracle evaluation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};

use crate::spec::GeneratorFile;

pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("json")
}

pub fn write_dataset(path: &Path, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let d = x.ncols();
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    writer.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(d + 1);
    for i in 0..x.nrows() {
        record.clear();
        for j in 0..d {
            record.push(format!("{}", x[(i, j)]));
        }
        record.push(format!("{}", y[i]));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header = reader.headers()?.clone();
    if header.len() < 2 || &header[header.len() - 1] != "y" {
        bail!("{}: expected header x1,...,xd,y", path.display());
    }
    let d = header.len() - 1;
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{} line {}", path.display(), idx + 2))?;
        if record.len() != d + 1 {
            bail!("{} line {}: expected {} fields, got {}", path.display(), idx + 2, d + 1, record.len());
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().with_context(|| {
                format!("{} line {} column {}: bad number {field:?}", path.display(), idx + 2, col + 1)
            })?;
            if col < d {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
    }
    if ys.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let n = ys.len();
    let x = DMatrix::from_fn(n, d, |i, j| xs[i * d + j]);
    Ok((x, DVector::from_vec(ys)))
}

pub fn write_sidecar(data_path: &Path, spec: &GeneratorFile) -> Result<()> {
    let path = sidecar_path(data_path);
    let text = serde_json::to_string_pretty(spec)?;
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_sidecar(data_path: &Path) -> Result<GeneratorFile> {
    let path = sidecar_path(data_path);
    if !path.exists() {
        bail!(
            "missing sidecar {} (generate datasets with this tool, or evaluate without ground truth)",
            path.display()
        );
    }
    crate::spec::read_json(&path)
}
