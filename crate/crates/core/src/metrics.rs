//! Evaluation metrics and curve emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub name: String,
    pub value: f64,
    pub split: String,
    pub seed: u64,
}

impl MetricsRecord {
    pub fn new(name: impl Into<String>, value: f64, split: impl Into<String>, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::NumericFailure(format!("metric value {value} is outside [0,1]")));
        }
        Ok(Self {
            name: name.into(),
            value,
            split: split.into(),
            seed,
        })
    }
}

fn check_mask(pred: &Matrix, y: &Matrix, mask: &[usize]) -> Result<()> {
    if pred.shape() != y.shape() {
        return Err(Error::dims("metric", y.shape(), pred.shape()));
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if let Some(&bad) = mask.iter().find(|&&i| i >= y.rows()) {
        return Err(Error::IndexOutOfRange {
            what: "metric mask",
            index: bad,
            len: y.rows(),
        });
    }
    Ok(())
}

/// Fraction of masked rows whose argmax matches; ties go to the lowest index
/// on both sides.
pub fn accuracy(pred: &Matrix, y: &Matrix, mask: &[usize]) -> Result<f64> {
    check_mask(pred, y, mask)?;
    let hits = mask
        .iter()
        .filter(|&&i| pred.argmax_row(i) == y.argmax_row(i))
        .count();
    Ok(hits as f64 / mask.len() as f64)
}

/// Mean per-label ROC-AUC over the masked rows.
///
/// Uses the rank-sum statistic with average ranks, so tied scores count one
/// half. Labels that are all positive or all negative under the mask are
/// skipped with a warning.
pub fn roc_auc(scores: &Matrix, y: &Matrix, mask: &[usize]) -> Result<f64> {
    check_mask(scores, y, mask)?;
    let mut total = 0.0;
    let mut used = 0usize;
    for j in 0..y.cols() {
        let mut pairs: Vec<(f64, bool)> = mask
            .iter()
            .map(|&i| (scores.get(i, j), y.get(i, j) >= 0.5))
            .collect();
        let pos = pairs.iter().filter(|p| p.1).count();
        let neg = pairs.len() - pos;
        if pos == 0 || neg == 0 {
            log::warn!("label {j} has a single class under the mask; excluded from ROC-AUC");
            continue;
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut rank_sum = 0.0;
        let mut start = 0;
        while start < pairs.len() {
            let mut end = start + 1;
            while end < pairs.len() && pairs[end].0 == pairs[start].0 {
                end += 1;
            }
            // ranks start..end (1-based: start+1 ..= end) share their mean
            let avg = (start + 1 + end) as f64 / 2.0;
            rank_sum += avg * pairs[start..end].iter().filter(|p| p.1).count() as f64;
            start = end;
        }
        let (p, n) = (pos as f64, neg as f64);
        total += (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
        used += 1;
    }
    if used == 0 {
        return Err(Error::AllLabelsDegenerate);
    }
    Ok(total / used as f64)
}

/// Per-epoch training curves.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub ne_loss: Vec<f64>,
    pub gnn_loss: Vec<f64>,
    /// Deconvolution weights `γ` after each encoder epoch.
    pub gamma: Vec<Vec<f64>>,
}

/// Writes `ne_loss.csv`, `gnn_loss.csv` and `gamma.csv` into `dir`.
///
/// Epochs are numbered from 1. Empty curves still get a header-only file.
pub fn emit_curves(curves: &Curves, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(3);
    for (name, values) in [("ne_loss", &curves.ne_loss), ("gnn_loss", &curves.gnn_loss)] {
        let mut csv = String::from("epoch,loss\n");
        for (e, v) in values.iter().enumerate() {
            writeln!(csv, "{},{v:e}", e + 1).unwrap();
        }
        written.push(write_file(dir, &format!("{name}.csv"), &csv)?);
    }
    let width = curves.gamma.first().map_or(0, Vec::len);
    let mut csv = String::from("epoch");
    for i in 0..width {
        write!(csv, ",gamma_{i}").unwrap();
    }
    csv.push('\n');
    for (e, row) in curves.gamma.iter().enumerate() {
        if row.len() != width {
            return Err(Error::InvalidData("gamma curve rows differ in length".into()));
        }
        write!(csv, "{}", e + 1).unwrap();
        for v in row {
            write!(csv, ",{v:e}").unwrap();
        }
        csv.push('\n');
    }
    written.push(write_file(dir, "gamma.csv", &csv)?);
    Ok(written)
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
