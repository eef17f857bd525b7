//! Label matrices, hop-label precomputation and the trainable deconvolution
//! of labels into per-node encoder targets.

mod hop_file;

pub use hop_file::{ElemWidth, HOP_STACK_MAGIC, HOP_STACK_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// One label per node; rows are one-hot or probability vectors.
    MultiClass,
    /// Independent binary labels; entries in `[0, 1]`.
    MultiLabelBinary,
    /// Continuous targets, used by the generative-model recovery runs.
    Regression,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::MultiClass => "multi_class",
            TaskKind::MultiLabelBinary => "multi_label_binary",
            TaskKind::Regression => "regression",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi_class" => Ok(TaskKind::MultiClass),
            "multi_label_binary" => Ok(TaskKind::MultiLabelBinary),
            "regression" => Ok(TaskKind::Regression),
            other => Err(Error::InvalidConfig(format!("unknown task kind {other:?}"))),
        }
    }
}

/// Label matrix `Y` (nodes × classes).
///
/// Rows of unlabeled nodes may be all zero until pseudo labels are written.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub values: Matrix,
    pub task: TaskKind,
}

impl LabelMatrix {
    pub fn new(values: Matrix, task: TaskKind) -> Result<Self> {
        let labels = Self { values, task };
        labels.validate()?;
        Ok(labels)
    }

    /// One-hot matrix from class indices.
    pub fn one_hot(classes: &[usize], num_classes: usize) -> Result<Self> {
        let mut values = Matrix::zeros(classes.len(), num_classes);
        for (i, &c) in classes.iter().enumerate() {
            if c >= num_classes {
                return Err(Error::IndexOutOfRange {
                    what: "class",
                    index: c,
                    len: num_classes,
                });
            }
            values.set(i, c, 1.0);
        }
        Ok(Self {
            values,
            task: TaskKind::MultiClass,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.values.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.values.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.values.is_finite() {
            return Err(Error::InvalidData("labels contain non-finite entries".into()));
        }
        match self.task {
            TaskKind::MultiClass => {
                for (i, row) in self.values.row_iter().enumerate() {
                    let sum: f64 = row.iter().sum();
                    let zero_row = row.iter().all(|&v| v == 0.0);
                    if !zero_row && (row.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > 1e-6) {
                        return Err(Error::InvalidData(format!(
                            "multi-class label row {i} is not a probability vector"
                        )));
                    }
                }
            }
            TaskKind::MultiLabelBinary => {
                if self.values.as_slice().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::InvalidData("multi-label entries must lie in [0,1]".into()));
                }
            }
            TaskKind::Regression => {}
        }
        Ok(())
    }
}

/// Precomputed hop labels `K_i = Âⁱ Y` for `i = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HopLabelStack {
    hops: Vec<Matrix>,
}

impl HopLabelStack {
    pub fn from_hops(hops: Vec<Matrix>) -> Result<Self> {
        let first = hops
            .first()
            .ok_or_else(|| Error::InvalidData("hop stack needs at least K_0".into()))?;
        let shape = first.shape();
        if let Some(bad) = hops.iter().find(|h| h.shape() != shape) {
            return Err(Error::dims("HopLabelStack", shape, bad.shape()));
        }
        Ok(Self { hops })
    }

    /// Highest hop `N`; the stack holds `N + 1` blocks.
    pub fn n_hops(&self) -> usize {
        self.hops.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.hops[0].rows()
    }

    pub fn num_classes(&self) -> usize {
        self.hops[0].cols()
    }

    pub fn hop(&self, i: usize) -> &Matrix {
        &self.hops[i]
    }

    pub fn hops(&self) -> &[Matrix] {
        &self.hops
    }

    /// `K_0`, the labels themselves.
    pub fn labels(&self) -> &Matrix {
        &self.hops[0]
    }
}

/// Repeated sparse products `K_{i+1} = Â K_i`, run once before training.
pub fn precompute_hop_labels(
    adj: &NormalizedAdjacency,
    y: &LabelMatrix,
    n_hops: usize,
) -> Result<HopLabelStack> {
    if y.num_nodes() != adj.num_nodes() {
        return Err(Error::dims(
            "precompute_hop_labels",
            (adj.num_nodes(), y.num_classes()),
            y.values.shape(),
        ));
    }
    let mut hops = Vec::with_capacity(n_hops + 1);
    hops.push(y.values.clone());
    for i in 0..n_hops {
        let next = adj.spmm(&hops[i])?;
        hops.push(next);
    }
    HopLabelStack::from_hops(hops)
}

/// Raw logits `γ′`; the deconvolution coefficients are `γ = softmax(γ′)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeconvWeights {
    pub raw: Vec<f64>,
}

impl DeconvWeights {
    pub fn from_logits(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() || raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("deconvolution logits must be finite and non-empty".into()));
        }
        Ok(Self { raw })
    }

    pub fn n_hops(&self) -> usize {
        self.raw.len() - 1
    }

    pub fn gamma(&self) -> Vec<f64> {
        softmax(&self.raw)
    }
}

/// Equal logits, so every hop starts with weight `1 / (N + 1)`.
pub fn deconv_init(n_hops: usize) -> DeconvWeights {
    DeconvWeights {
        raw: vec![0.0; n_hops + 1],
    }
}

pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn check_stack_weights(stack: &HopLabelStack, w: &DeconvWeights) -> Result<()> {
    if w.raw.len() != stack.hops.len() {
        return Err(Error::dims(
            "deconvolution weights",
            (stack.hops.len(), 1),
            (w.raw.len(), 1),
        ));
    }
    Ok(())
}

fn check_batch(stack: &HopLabelStack, batch: &[usize]) -> Result<()> {
    if let Some(&bad) = batch.iter().find(|&&b| b >= stack.num_nodes()) {
        return Err(Error::IndexOutOfRange {
            what: "inverse_labels batch",
            index: bad,
            len: stack.num_nodes(),
        });
    }
    Ok(())
}

/// Mini-batch inverse labels: row `b` is `Σ_i γ_i K_i[batch[b]]`.
///
/// Touches only the batch rows of each block, never the graph.
pub fn inverse_labels(stack: &HopLabelStack, batch: &[usize], w: &DeconvWeights) -> Result<Matrix> {
    check_stack_weights(stack, w)?;
    check_batch(stack, batch)?;
    let gamma = w.gamma();
    let mut out = Matrix::zeros(batch.len(), stack.num_classes());
    for (b, &node) in batch.iter().enumerate() {
        let dst = out.row_mut(b);
        for (g, hop) in gamma.iter().zip(&stack.hops) {
            for (o, &k) in dst.iter_mut().zip(hop.row(node)) {
                *o += g * k;
            }
        }
    }
    Ok(out)
}

/// Gradient of `⟨upstream, inverse_labels(stack, batch, w)⟩` with respect to
/// the raw logits `γ′`.
pub fn inverse_labels_grad(
    stack: &HopLabelStack,
    batch: &[usize],
    w: &DeconvWeights,
    upstream: &Matrix,
) -> Result<Vec<f64>> {
    check_stack_weights(stack, w)?;
    check_batch(stack, batch)?;
    if upstream.shape() != (batch.len(), stack.num_classes()) {
        return Err(Error::dims(
            "inverse_labels_grad",
            (batch.len(), stack.num_classes()),
            upstream.shape(),
        ));
    }
    // dL/dγ_i = Σ_b ⟨upstream_b, K_i[batch_b]⟩
    let by_gamma: Vec<f64> = stack
        .hops
        .iter()
        .map(|hop| {
            batch
                .iter()
                .enumerate()
                .map(|(b, &node)| {
                    upstream
                        .row(b)
                        .iter()
                        .zip(hop.row(node))
                        .map(|(u, k)| u * k)
                        .sum::<f64>()
                })
                .sum()
        })
        .collect();
    let gamma = w.gamma();
    let mean: f64 = gamma.iter().zip(&by_gamma).map(|(g, d)| g * d).sum();
    Ok(gamma
        .iter()
        .zip(&by_gamma)
        .map(|(g, d)| g * (d - mean))
        .collect())
}

/// Maps raw inverse labels onto the label domain of the task.
///
/// Multi-class rows are divided by their sum, multi-label entries are
/// clamped to `[0, 1]`, and regression targets pass through.
pub fn normalize_target(t: &Matrix, task: TaskKind) -> Result<Matrix> {
    match task {
        TaskKind::MultiClass => {
            let mut out = t.clone();
            for i in 0..out.rows() {
                let row = out.row_mut(i);
                let sum: f64 = row.iter().sum();
                if sum == 0.0 || !sum.is_finite() {
                    return Err(Error::ZeroRowSum { row: i });
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
            Ok(out)
        }
        TaskKind::MultiLabelBinary => Ok(t.map(|v| v.clamp(0.0, 1.0))),
        TaskKind::Regression => Ok(t.clone()),
    }
}

/// Backward pass of [`normalize_target`]: maps the gradient with respect to
/// the normalized target back onto the raw inverse labels `t`.
pub fn normalize_target_backward(t: &Matrix, upstream: &Matrix, task: TaskKind) -> Result<Matrix> {
    if t.shape() != upstream.shape() {
        return Err(Error::dims("normalize_target_backward", t.shape(), upstream.shape()));
    }
    match task {
        TaskKind::MultiClass => {
            let mut out = Matrix::zeros(t.rows(), t.cols());
            for i in 0..t.rows() {
                let row = t.row(i);
                let sum: f64 = row.iter().sum();
                if sum == 0.0 || !sum.is_finite() {
                    return Err(Error::ZeroRowSum { row: i });
                }
                // d(t_j / s)/d t_k = (δ_jk − t_j / s) / s
                let proj: f64 = upstream.row(i).iter().zip(row).map(|(g, v)| g * v).sum::<f64>() / sum;
                for (o, g) in out.row_mut(i).iter_mut().zip(upstream.row(i)) {
                    *o = (g - proj) / sum;
                }
            }
            Ok(out)
        }
        TaskKind::MultiLabelBinary => {
            let mut out = upstream.clone();
            for (o, &v) in out.as_mut_slice().iter_mut().zip(t.as_slice()) {
                if !(0.0..=1.0).contains(&v) {
                    *o = 0.0;
                }
            }
            Ok(out)
        }
        TaskKind::Regression => Ok(upstream.clone()),
    }
}

/// `(1 − α) Y + α · normalize(Y^γ)`
pub fn mixed_target(y: &Matrix, yinv: &Matrix, alpha: f64, task: TaskKind) -> Result<Matrix> {
    check_alpha(alpha)?;
    if y.shape() != yinv.shape() {
        return Err(Error::dims("mixed_target", y.shape(), yinv.shape()));
    }
    let normalized = normalize_target(yinv, task)?;
    let keep = 1.0 - alpha;
    let data = y
        .as_slice()
        .iter()
        .zip(normalized.as_slice())
        .map(|(a, b)| keep * a + alpha * b)
        .collect();
    Matrix::from_vec(y.rows(), y.cols(), data)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha must lie in [0,1], got {alpha}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{row_normalize, CsrGraph, IsolatedPolicy};

    fn motivating() -> (NormalizedAdjacency, LabelMatrix, Matrix) {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0), (2, 3), (3, 2)], 4).unwrap();
        let adj = row_normalize(&g, IsolatedPolicy::SelfLoop);
        let y = LabelMatrix::one_hot(&[1, 0, 2, 1], 3).unwrap();
        let x = LabelMatrix::one_hot(&[0, 1, 1, 2], 3).unwrap().values;
        (adj, y, x)
    }

    #[test]
    fn motivating_hop_one_is_attributes() {
        let (adj, y, x) = motivating();
        let stack = precompute_hop_labels(&adj, &y, 1).unwrap();
        assert_eq!(stack.hop(0), &y.values);
        assert_eq!(stack.hop(1), &x);
    }

    #[test]
    fn zero_hops_is_just_labels() {
        let (adj, y, _) = motivating();
        let stack = precompute_hop_labels(&adj, &y, 0).unwrap();
        assert_eq!(stack.n_hops(), 0);
        assert_eq!(stack.labels(), &y.values);
    }

    #[test]
    fn identity_adjacency_repeats_labels() {
        let adj = row_normalize(&CsrGraph::from_edges(&[], 4).unwrap(), IsolatedPolicy::SelfLoop);
        let y = LabelMatrix::one_hot(&[0, 2, 1, 1], 3).unwrap();
        let stack = precompute_hop_labels(&adj, &y, 3).unwrap();
        assert!(stack.hops().iter().all(|h| h == &y.values));
    }

    #[test]
    fn hop_dimension_mismatch() {
        let (adj, _, _) = motivating();
        let y = LabelMatrix::one_hot(&[0, 1, 2], 3).unwrap();
        assert!(precompute_hop_labels(&adj, &y, 1).is_err());
    }

    #[test]
    fn uniform_init() {
        assert_eq!(deconv_init(1).gamma(), vec![0.5, 0.5]);
        assert_eq!(deconv_init(3).gamma(), vec![0.25; 4]);
        assert_eq!(deconv_init(0).gamma(), vec![1.0]);
    }

    #[test]
    fn extreme_logits_select_one_hop() {
        let (adj, y, x) = motivating();
        let stack = precompute_hop_labels(&adj, &y, 1).unwrap();
        let all = [0, 1, 2, 3];
        let pick_x = DeconvWeights::from_logits(vec![-30.0, 30.0]).unwrap();
        assert!(inverse_labels(&stack, &all, &pick_x).unwrap().max_abs_diff(&x) < 1e-12);
        let pick_y = DeconvWeights::from_logits(vec![30.0, -30.0]).unwrap();
        assert!(inverse_labels(&stack, &all, &pick_y).unwrap().max_abs_diff(&y.values) < 1e-12);
    }

    #[test]
    fn uniform_weights_average_labels_and_attributes() {
        let (adj, y, x) = motivating();
        let stack = precompute_hop_labels(&adj, &y, 1).unwrap();
        let out = inverse_labels(&stack, &[0, 1, 2, 3], &deconv_init(1)).unwrap();
        let expected = y.values.add(&x).unwrap().scale(0.5);
        assert_eq!(out, expected);
    }

    #[test]
    fn inverse_labels_rejects_bad_batch() {
        let (adj, y, _) = motivating();
        let stack = precompute_hop_labels(&adj, &y, 1).unwrap();
        assert!(inverse_labels(&stack, &[4], &deconv_init(1)).is_err());
        assert!(inverse_labels(&stack, &[0], &deconv_init(2)).is_err());
    }

    #[test]
    fn grad_vanishes_for_zero_upstream_and_single_hop() {
        let (adj, y, _) = motivating();
        let stack = precompute_hop_labels(&adj, &y, 1).unwrap();
        let g = inverse_labels_grad(&stack, &[0, 2], &deconv_init(1), &Matrix::zeros(2, 3)).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let stack0 = precompute_hop_labels(&adj, &y, 0).unwrap();
        let up = Matrix::from_fn(2, 3, |i, j| (i + j) as f64 + 0.3);
        let g0 = inverse_labels_grad(&stack0, &[0, 2], &deconv_init(0), &up).unwrap();
        assert_eq!(g0, vec![0.0]);
    }

    #[test]
    fn normalize_cases() {
        let one_hot = Matrix::from_rows(&[[0.0, 1.0, 0.0]]);
        assert_eq!(normalize_target(&one_hot, TaskKind::MultiClass).unwrap(), one_hot);
        let probs = Matrix::from_rows(&[[0.2, 0.2, 0.6]]);
        let n = normalize_target(&probs, TaskKind::MultiClass).unwrap();
        assert!(n.max_abs_diff(&probs) < 1e-15);
        let ml = Matrix::from_rows(&[[1.3, -0.1, 0.5]]);
        assert_eq!(
            normalize_target(&ml, TaskKind::MultiLabelBinary).unwrap(),
            Matrix::from_rows(&[[1.0, 0.0, 0.5]])
        );
        let zero = Matrix::from_rows(&[[0.5, 0.5], [0.0, 0.0]]);
        assert!(matches!(
            normalize_target(&zero, TaskKind::MultiClass),
            Err(Error::ZeroRowSum { row: 1 })
        ));
    }

    #[test]
    fn mixed_target_endpoints() {
        let y = Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]);
        let yinv = Matrix::from_rows(&[[0.2, 0.6, 0.2], [0.5, 0.0, 1.5]]);
        let t = TaskKind::MultiClass;
        assert_eq!(mixed_target(&y, &yinv, 0.0, t).unwrap(), y);
        assert_eq!(mixed_target(&y, &yinv, 1.0, t).unwrap(), normalize_target(&yinv, t).unwrap());
        assert_eq!(mixed_target(&y, &y, 0.5, t).unwrap(), y);
        assert!(mixed_target(&y, &yinv, 1.5, t).is_err());
        assert!(mixed_target(&y, &yinv, -0.1, t).is_err());
    }

    #[test]
    fn label_validation() {
        let bad = Matrix::from_rows(&[[0.5, 0.6]]);
        assert!(LabelMatrix::new(bad.clone(), TaskKind::MultiClass).is_err());
        assert!(LabelMatrix::new(bad, TaskKind::MultiLabelBinary).is_ok());
        assert!(LabelMatrix::new(Matrix::from_rows(&[[1.5]]), TaskKind::MultiLabelBinary).is_err());
        assert!(LabelMatrix::one_hot(&[3], 3).is_err());
    }
}
