use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::phases::{
    infer_features, phase_rng, prepare_ne_labels, train_glem_baseline, train_gnn_phase, train_joint_fullbatch,
    train_ne_phase, INIT_STREAM,
};
use crate::bundle::Dataset;
use crate::error::{Error, Result};
use crate::graph::{row_normalize, IsolatedPolicy, NodeSplit};
use crate::labels::{deconv_init, precompute_hop_labels, LabelMatrix, TaskKind};
use crate::matrix::Matrix;
use crate::metrics::{accuracy, roc_auc, Curves, MetricsRecord};
use crate::nn::{loss_full, MlpParams};
use crate::spectral::{fixed_filter, gnn_forward, SpectralGnnParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Encoder trained on deconvolved labels, then the GNN on frozen features.
    Ld,
    /// Encoder trained on the labels alone, then the GNN on frozen features.
    Glem,
    /// Encoder and GNN trained end to end, full batch.
    Joint,
    /// GNN on the raw attributes, no encoder.
    FrozenFeatures,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ld => "ld",
            Method::Glem => "glem",
            Method::Joint => "joint",
            Method::FrozenFeatures => "frozen",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ld" => Ok(Method::Ld),
            "glem" => Ok(Method::Glem),
            "joint" => Ok(Method::Joint),
            "frozen" | "frozen_features" => Ok(Method::FrozenFeatures),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected ld, glem, joint or frozen)"
            ))),
        }
    }
}

/// Metric name → value for each split; `None` for empty splits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: Option<BTreeMap<String, f64>>,
    pub val: Option<BTreeMap<String, f64>>,
    pub test: Option<BTreeMap<String, f64>>,
}

/// Final objective values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    /// Last encoder-phase epoch loss.
    pub ne: Option<f64>,
    /// Loss of the trained GNN on the training split.
    pub gnn: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Learned {
    pub gamma: Option<Vec<f64>>,
    pub filter: Vec<f64>,
}

/// Wall-clock milliseconds per phase; zero unless timing was requested.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub preprocess: u64,
    pub ne: u64,
    pub gnn: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub dataset: String,
    pub config: TrainConfig,
    pub metrics: SplitMetrics,
    pub objective: Objectives,
    pub learned: Learned,
    pub curves: Curves,
    pub timing_ms: Timing,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Everything a run produced, for callers that need more than the report.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub features: Matrix,
    /// Raw GNN outputs for every node.
    pub predictions: Matrix,
    pub encoder: Option<MlpParams>,
    pub gnn: SpectralGnnParams,
}

/// Metrics of `pred` against the true labels on one node set.
pub fn evaluate_nodes(
    pred: &Matrix,
    labels: &LabelMatrix,
    nodes: &[usize],
    split: &str,
    seed: u64,
) -> Result<Vec<MetricsRecord>> {
    let (name, value) = match labels.task {
        TaskKind::MultiClass => ("accuracy", accuracy(pred, &labels.values, nodes)?),
        TaskKind::MultiLabelBinary => ("roc_auc", roc_auc(pred, &labels.values, nodes)?),
        TaskKind::Regression => ("argmax_accuracy", accuracy(pred, &labels.values, nodes)?),
    };
    Ok(vec![MetricsRecord::new(name, value, split, seed)?])
}

pub fn evaluate_splits(pred: &Matrix, labels: &LabelMatrix, split: &NodeSplit, seed: u64) -> Result<SplitMetrics> {
    let one = |nodes: &[usize], name: &str| -> Result<Option<BTreeMap<String, f64>>> {
        if nodes.is_empty() {
            return Ok(None);
        }
        let records = evaluate_nodes(pred, labels, nodes, name, seed)?;
        Ok(Some(records.into_iter().map(|r| (r.name, r.value)).collect()))
    };
    Ok(SplitMetrics {
        train: one(&split.train, "train")?,
        val: one(&split.val, "val")?,
        test: one(&split.test, "test")?,
    })
}

fn elapsed_ms(t: Instant, on: bool) -> u64 {
    if on {
        t.elapsed().as_millis() as u64
    } else {
        0
    }
}

/// Runs one method end to end on `ds` and evaluates the resulting GNN.
pub fn run_experiment(ds: &Dataset, method: Method, cfg: &TrainConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    ds.validate()?;
    if ds.split.train.is_empty() {
        return Err(Error::InvalidData("the training split is empty".into()));
    }
    let task = ds.labels.task;
    let loss = cfg.loss_for(task);
    let d = ds.labels.num_classes();
    let attr_dim = ds.attrs.cols();
    let timing = cfg.record_timing;
    let mut timing_ms = Timing::default();
    let mut rng = phase_rng(cfg.seed, INIT_STREAM);
    let fdim = cfg.arch.feature_dim(attr_dim, d);

    let t = Instant::now();
    let adj = row_normalize(&ds.graph, IsolatedPolicy::SelfLoop);
    let filter = fixed_filter(cfg.filter);
    let mut curves = Curves::default();
    let mut gamma = None;
    let mut ne_objective = None;

    let (features, encoder, gnn) = match method {
        Method::Ld | Method::Glem => {
            let (ne_labels, nodes) = prepare_ne_labels(&adj, &ds.attrs, &ds.labels, &ds.split, cfg)?;
            let stack = match method {
                Method::Ld => Some(precompute_hop_labels(&adj, &ne_labels, cfg.n_hops)?),
                _ => None,
            };
            timing_ms.preprocess = elapsed_ms(t, timing);

            let t = Instant::now();
            let encoder = cfg.arch.encoder.build(attr_dim, fdim, &mut rng)?;
            let head = cfg.arch.ne_head.build(fdim, d, &mut rng)?;
            let ne = match &stack {
                Some(stack) => train_ne_phase(
                    &ds.attrs,
                    encoder,
                    head,
                    stack,
                    deconv_init(cfg.n_hops),
                    &nodes,
                    ne_labels.task,
                    cfg,
                )?,
                None => train_glem_baseline(&ds.attrs, encoder, head, &ne_labels.values, &nodes, task, cfg)?,
            };
            let features = infer_features(&ds.attrs, &ne.params.encoder, cfg.batch_size)?;
            timing_ms.ne = elapsed_ms(t, timing);
            ne_objective = ne.loss_curve.last().copied();
            curves.ne_loss = ne.loss_curve;
            curves.gamma = ne.gamma_curve;
            gamma = ne.params.deconv.as_ref().map(|w| w.gamma());

            let t = Instant::now();
            let head = if cfg.warm_start_head {
                ne.params.head.clone()
            } else {
                cfg.arch.gnn_head.build(fdim, d, &mut rng)?
            };
            let params = SpectralGnnParams { filter, head };
            let gnn = train_gnn_phase(&features, &adj, params, &ds.labels.values, &ds.split.train, loss, cfg)?;
            timing_ms.gnn = elapsed_ms(t, timing);
            curves.gnn_loss = gnn.loss_curve;
            (features, Some(ne.params.encoder), gnn.params)
        }
        Method::Joint => {
            timing_ms.preprocess = elapsed_ms(t, timing);
            let t = Instant::now();
            let encoder = cfg.arch.encoder.build(attr_dim, fdim, &mut rng)?;
            let head = cfg.arch.gnn_head.build(fdim, d, &mut rng)?;
            let params = SpectralGnnParams { filter, head };
            let joint = train_joint_fullbatch(
                &ds.attrs,
                &adj,
                encoder,
                params,
                &ds.labels.values,
                &ds.split.train,
                loss,
                cfg,
            )?;
            timing_ms.gnn = elapsed_ms(t, timing);
            curves.gnn_loss = joint.loss_curve;
            let features = infer_features(&ds.attrs, &joint.params.encoder, cfg.batch_size)?;
            (features, Some(joint.params.encoder), joint.params.gnn)
        }
        Method::FrozenFeatures => {
            timing_ms.preprocess = elapsed_ms(t, timing);
            let t = Instant::now();
            let head = cfg.arch.gnn_head.build(attr_dim, d, &mut rng)?;
            let params = SpectralGnnParams { filter, head };
            let gnn = train_gnn_phase(&ds.attrs, &adj, params, &ds.labels.values, &ds.split.train, loss, cfg)?;
            timing_ms.gnn = elapsed_ms(t, timing);
            curves.gnn_loss = gnn.loss_curve;
            (ds.attrs.clone(), None, gnn.params)
        }
    };

    let (predictions, _) = gnn_forward(&features, &adj, &gnn)?;
    let gnn_objective = loss_full(loss, &predictions, &ds.labels.values, &ds.split.train)?.loss;
    if !gnn_objective.is_finite() {
        return Err(Error::NumericFailure(format!("final GNN loss is {gnn_objective}")));
    }
    let metrics = evaluate_splits(&predictions, &ds.labels, &ds.split, cfg.seed)?;
    let report = ExperimentReport {
        method,
        dataset: ds.name.clone(),
        config: cfg.clone(),
        metrics,
        objective: Objectives {
            ne: ne_objective,
            gnn: gnn_objective,
        },
        learned: Learned {
            gamma,
            filter: gnn.filter.coeffs.clone(),
        },
        curves,
        timing_ms,
    };
    Ok(ExperimentOutcome {
        report,
        features,
        predictions,
        encoder,
        gnn,
    })
}
