use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::TaskKind;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `−Σ t · log softmax(h)` per row.
    SoftCrossEntropy,
    /// Per-label sigmoid cross entropy, summed over labels.
    BinaryCrossEntropy,
    /// Squared error summed over columns.
    MeanSquared,
}

impl LossKind {
    pub fn for_task(task: TaskKind) -> Self {
        match task {
            TaskKind::MultiClass => LossKind::SoftCrossEntropy,
            TaskKind::MultiLabelBinary => LossKind::BinaryCrossEntropy,
            TaskKind::Regression => LossKind::MeanSquared,
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" | "soft_cross_entropy" => Ok(LossKind::SoftCrossEntropy),
            "bce" | "binary_cross_entropy" => Ok(LossKind::BinaryCrossEntropy),
            "mse" | "mean_squared" => Ok(LossKind::MeanSquared),
            other => Err(Error::InvalidConfig(format!("unknown loss {other:?}"))),
        }
    }
}

/// Loss value with gradients for both arguments.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grad_logits: Matrix,
    /// Needed when the target itself is trainable.
    pub grad_target: Matrix,
}

/// Mean loss over the masked rows. Rows outside the mask get zero gradient.
pub fn loss_and_grad(kind: LossKind, logits: &Matrix, target: &Matrix, mask: &[usize]) -> Result<(f64, Matrix)> {
    let out = loss_full(kind, logits, target, mask)?;
    Ok((out.loss, out.grad_logits))
}

pub fn loss_full(kind: LossKind, logits: &Matrix, target: &Matrix, mask: &[usize]) -> Result<LossOutput> {
    if logits.shape() != target.shape() {
        return Err(Error::dims("loss", logits.shape(), target.shape()));
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if let Some(&bad) = mask.iter().find(|&&i| i >= logits.rows()) {
        return Err(Error::IndexOutOfRange {
            what: "loss mask",
            index: bad,
            len: logits.rows(),
        });
    }
    let scale = 1.0 / mask.len() as f64;
    let mut grad_logits = Matrix::zeros(logits.rows(), logits.cols());
    let mut grad_target = Matrix::zeros(logits.rows(), logits.cols());
    let mut total = 0.0;
    for &i in mask {
        let (h, t) = (logits.row(i), target.row(i));
        let mut gl = vec![0.0; h.len()];
        let mut gt = vec![0.0; h.len()];
        let row_loss = match kind {
            LossKind::MeanSquared => {
                let mut s = 0.0;
                for j in 0..h.len() {
                    let r = h[j] - t[j];
                    s += r * r;
                    gl[j] = 2.0 * r;
                    gt[j] = -2.0 * r;
                }
                s
            }
            LossKind::SoftCrossEntropy => {
                let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + h.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                let mass: f64 = t.iter().sum();
                let mut s = 0.0;
                for j in 0..h.len() {
                    let log_p = h[j] - lse;
                    s -= t[j] * log_p;
                    gl[j] = mass * log_p.exp() - t[j];
                    gt[j] = -log_p;
                }
                s
            }
            LossKind::BinaryCrossEntropy => {
                let mut s = 0.0;
                for j in 0..h.len() {
                    let x = h[j];
                    s += x.max(0.0) - x * t[j] + (-x.abs()).exp().ln_1p();
                    gl[j] = sigmoid(x) - t[j];
                    gt[j] = -x;
                }
                s
            }
        };
        total += row_loss;
        for (o, g) in grad_logits.row_mut(i).iter_mut().zip(&gl) {
            *o += scale * g;
        }
        for (o, g) in grad_target.row_mut(i).iter_mut().zip(&gt) {
            *o += scale * g;
        }
    }
    Ok(LossOutput {
        loss: total * scale,
        grad_logits,
        grad_target,
    })
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
