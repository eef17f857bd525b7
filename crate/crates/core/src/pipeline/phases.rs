//! The two training phases of label deconvolution and the baselines that
//! share their loops.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::graph::{NodeSplit, NormalizedAdjacency};
use crate::labels::{
    inverse_labels, inverse_labels_grad, mixed_target, normalize_target_backward, softmax, DeconvWeights,
    HopLabelStack, LabelMatrix, TaskKind,
};
use crate::matrix::Matrix;
use crate::nn::{
    adam_step, loss_full, mlp_backward, mlp_forward, sigmoid, AdamConfig, LossKind, MlpGrads, MlpParams,
    OptimizerState,
};
use crate::spectral::{fixed_filter, gnn_backward, gnn_forward, SpectralGnnParams};

pub(crate) const INIT_STREAM: u64 = 0;
const NE_STREAM: u64 = 1;
const PSEUDO_STREAM: u64 = 3;

/// Independent deterministic random stream `stream` of `seed`.
pub(crate) fn phase_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult<P> {
    pub params: P,
    /// Mean training loss of each epoch.
    pub loss_curve: Vec<f64>,
    /// `γ` after each epoch; empty for phases without deconvolution.
    pub gamma_curve: Vec<Vec<f64>>,
}

/// Parameters trained in the encoder phase.
#[derive(Debug, Clone, PartialEq)]
pub struct NeParams {
    pub encoder: MlpParams,
    pub head: MlpParams,
    pub deconv: Option<DeconvWeights>,
}

impl NeParams {
    fn sizes(&self) -> Vec<usize> {
        let mut sizes = self.encoder.param_sizes();
        sizes.extend(self.head.param_sizes());
        if let Some(w) = &self.deconv {
            sizes.push(w.raw.len());
        }
        sizes
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.encoder.param_slices_mut();
        out.extend(self.head.param_slices_mut());
        if let Some(w) = &mut self.deconv {
            out.push(w.raw.as_mut_slice());
        }
        out
    }

    /// Every trainable value in optimizer order.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.encoder.flat();
        out.extend(self.head.flat());
        if let Some(w) = &self.deconv {
            out.extend(&w.raw);
        }
        out
    }
}

/// What the encoder is fitted to.
#[derive(Debug, Clone, Copy)]
pub enum NeTarget<'a> {
    /// Plain labels, one row per node.
    Labels(&'a Matrix),
    /// `(1 − α) K_0 + α · normalize(Σ γ_i K_i)` from precomputed hop labels.
    Deconvolved { stack: &'a HopLabelStack, alpha: f64 },
}

/// Gradients of the encoder-phase loss on one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct NeGrads {
    pub encoder: MlpGrads,
    pub head: MlpGrads,
    pub deconv: Option<Vec<f64>>,
}

impl NeGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.encoder.flat();
        out.extend(self.head.flat());
        if let Some(g) = &self.deconv {
            out.extend(g);
        }
        out
    }
}

/// Loss and exact gradients of `L(ψ(f(x_B)), target_B)`.
///
/// Work is proportional to the batch: attribute rows and hop-label rows are
/// gathered by index and the graph is never touched.
pub fn ne_batch_loss(
    attrs: &Matrix,
    target: NeTarget<'_>,
    params: &NeParams,
    task: TaskKind,
    loss: LossKind,
    batch: &[usize],
) -> Result<(f64, NeGrads)> {
    let x = attrs.gather_rows(batch)?;
    let (feat, enc_cache) = mlp_forward(&params.encoder, &x)?;
    let (out, head_cache) = mlp_forward(&params.head, &feat)?;
    let (t, deconv) = match target {
        NeTarget::Labels(y) => (y.gather_rows(batch)?, None),
        NeTarget::Deconvolved { stack, alpha } => {
            let w = params
                .deconv
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("deconvolved target needs deconvolution weights".into()))?;
            let yinv = inverse_labels(stack, batch, w)?;
            let y = stack.labels().gather_rows(batch)?;
            (mixed_target(&y, &yinv, alpha, task)?, Some((stack, alpha, w, yinv)))
        }
    };
    let mask: Vec<usize> = (0..batch.len()).collect();
    let lo = loss_full(loss, &out, &t, &mask)?;
    let head = mlp_backward(&params.head, &head_cache, &lo.grad_logits)?;
    let encoder = mlp_backward(&params.encoder, &enc_cache, &head.input)?;
    let deconv = match deconv {
        None => None,
        Some((stack, alpha, w, yinv)) => {
            let g = normalize_target_backward(&yinv, &lo.grad_target.scale(alpha), task)?;
            Some(inverse_labels_grad(stack, batch, w, &g)?)
        }
    };
    Ok((lo.loss, NeGrads { encoder, head, deconv }))
}

/// Owns the encoder-phase parameters and optimizer; one call to
/// [`NeTrainer::step`] is one optimizer step on one batch.
pub struct NeTrainer<'a> {
    attrs: &'a Matrix,
    target: NeTarget<'a>,
    task: TaskKind,
    loss: LossKind,
    params: NeParams,
    opt: OptimizerState,
}

impl<'a> NeTrainer<'a> {
    pub fn new(
        attrs: &'a Matrix,
        target: NeTarget<'a>,
        params: NeParams,
        task: TaskKind,
        loss: LossKind,
        optim: AdamConfig,
    ) -> Result<Self> {
        params.encoder.validate()?;
        params.head.validate()?;
        if let Some(d) = params.encoder.in_dim() {
            if d != attrs.cols() {
                return Err(Error::dims("encoder input", (attrs.rows(), d), attrs.shape()));
            }
        }
        let rows = match target {
            NeTarget::Labels(y) => y.rows(),
            NeTarget::Deconvolved { stack, alpha } => {
                crate::labels::check_alpha(alpha)?;
                let w = params
                    .deconv
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("deconvolved target needs deconvolution weights".into()))?;
                if w.raw.len() != stack.n_hops() + 1 {
                    return Err(Error::dims("deconvolution weights", (stack.n_hops() + 1, 1), (w.raw.len(), 1)));
                }
                stack.num_nodes()
            }
        };
        if rows != attrs.rows() {
            return Err(Error::dims("encoder targets", (attrs.rows(), 0), (rows, 0)));
        }
        let opt = OptimizerState::new(optim, &params.sizes());
        Ok(Self {
            attrs,
            target,
            task,
            loss,
            params,
            opt,
        })
    }

    /// Changes the learning rate for subsequent steps.
    pub fn set_lr(&mut self, lr: f64) {
        self.opt.config.lr = lr;
    }

    pub fn step(&mut self, batch: &[usize]) -> Result<f64> {
        let (loss, grads) = ne_batch_loss(self.attrs, self.target, &self.params, self.task, self.loss, batch)?;
        let mut g = grads.encoder.grad_slices();
        g.extend(grads.head.grad_slices());
        if let Some(d) = &grads.deconv {
            g.push(d);
        }
        adam_step(&mut self.opt, &mut self.params.slices_mut(), &g)?;
        Ok(loss)
    }

    pub fn params(&self) -> &NeParams {
        &self.params
    }

    pub fn into_params(self) -> NeParams {
        self.params
    }
}

fn check_finite(loss: f64, phase: &str, epoch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericFailure(format!("{phase} loss is {loss} in epoch {}", epoch + 1)))
    }
}

fn run_ne_loop(mut trainer: NeTrainer<'_>, nodes: &[usize], cfg: &TrainConfig) -> Result<PhaseResult<NeParams>> {
    if nodes.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut rng = phase_rng(cfg.seed, NE_STREAM);
    let mut order = nodes.to_vec();
    let mut loss_curve = Vec::with_capacity(cfg.ne_epochs);
    let mut gamma_curve = Vec::new();
    let total_steps = cfg.ne_epochs * order.len().div_ceil(cfg.batch_size);
    let mut t = 0;
    for epoch in 0..cfg.ne_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            trainer.set_lr(cfg.ne_optim.lr * cfg.schedule.factor(t, total_steps));
            t += 1;
            total += trainer.step(batch)? * batch.len() as f64;
        }
        let mean = total / order.len() as f64;
        check_finite(mean, "encoder", epoch)?;
        loss_curve.push(mean);
        if let Some(w) = &trainer.params().deconv {
            gamma_curve.push(w.gamma());
        }
        log::debug!("encoder epoch {}: loss {mean:.6e}", epoch + 1);
    }
    Ok(PhaseResult {
        params: trainer.into_params(),
        loss_curve,
        gamma_curve,
    })
}

/// Encoder phase of label deconvolution: encoder, head and `γ′` are updated
/// together on mini-batches drawn uniformly without replacement from `nodes`.
#[allow(clippy::too_many_arguments)]
pub fn train_ne_phase(
    attrs: &Matrix,
    encoder: MlpParams,
    head: MlpParams,
    stack: &HopLabelStack,
    w: DeconvWeights,
    nodes: &[usize],
    task: TaskKind,
    cfg: &TrainConfig,
) -> Result<PhaseResult<NeParams>> {
    cfg.validate()?;
    let params = NeParams {
        encoder,
        head,
        deconv: Some(w),
    };
    let target = NeTarget::Deconvolved {
        stack,
        alpha: cfg.alpha,
    };
    let trainer = NeTrainer::new(attrs, target, params, task, cfg.loss_for(task), cfg.ne_optim)?;
    run_ne_loop(trainer, nodes, cfg)
}

/// Encoder trained on the labels alone, with the same loop, batches and
/// optimizer as [`train_ne_phase`].
#[allow(clippy::too_many_arguments)]
pub fn train_glem_baseline(
    attrs: &Matrix,
    encoder: MlpParams,
    head: MlpParams,
    y: &Matrix,
    nodes: &[usize],
    task: TaskKind,
    cfg: &TrainConfig,
) -> Result<PhaseResult<NeParams>> {
    cfg.validate()?;
    let params = NeParams {
        encoder,
        head,
        deconv: None,
    };
    let trainer = NeTrainer::new(attrs, NeTarget::Labels(y), params, task, cfg.loss_for(task), cfg.ne_optim)?;
    run_ne_loop(trainer, nodes, cfg)
}

/// Encoder output for every node, computed `batch_size` rows at a time.
pub fn infer_features(attrs: &Matrix, encoder: &MlpParams, batch_size: usize) -> Result<Matrix> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
    }
    let width = encoder.out_dim().unwrap_or(attrs.cols());
    let mut out = Matrix::zeros(attrs.rows(), width);
    let rows: Vec<usize> = (0..attrs.rows()).collect();
    for chunk in rows.chunks(batch_size) {
        let (f, _) = mlp_forward(encoder, &attrs.gather_rows(chunk)?)?;
        for (b, &i) in chunk.iter().enumerate() {
            out.row_mut(i).copy_from_slice(f.row(b));
        }
    }
    Ok(out)
}

fn gnn_sizes(p: &SpectralGnnParams) -> Vec<usize> {
    let mut sizes = p.head.param_sizes();
    if p.filter.learnable {
        sizes.push(p.filter.coeffs.len());
    }
    sizes
}

fn gnn_slices_mut(p: &mut SpectralGnnParams) -> Vec<&mut [f64]> {
    let mut out = p.head.param_slices_mut();
    if p.filter.learnable {
        out.push(p.filter.coeffs.as_mut_slice());
    }
    out
}

/// GNN phase: the spectral GNN is trained full-batch on frozen features,
/// with the loss restricted to `train`.
pub fn train_gnn_phase(
    features: &Matrix,
    adj: &NormalizedAdjacency,
    mut params: SpectralGnnParams,
    y: &Matrix,
    train: &[usize],
    loss: LossKind,
    cfg: &TrainConfig,
) -> Result<PhaseResult<SpectralGnnParams>> {
    cfg.validate()?;
    let mut opt = OptimizerState::new(cfg.gnn_optim, &gnn_sizes(&params));
    let mut loss_curve = Vec::with_capacity(cfg.gnn_epochs);
    for epoch in 0..cfg.gnn_epochs {
        let (h, cache) = gnn_forward(features, adj, &params)?;
        let lo = loss_full(loss, &h, y, train)?;
        check_finite(lo.loss, "gnn", epoch)?;
        loss_curve.push(lo.loss);
        if opt.m.is_empty() {
            continue;
        }
        let g = gnn_backward(adj, &params, &cache, &lo.grad_logits)?;
        let mut grads = g.head.grad_slices();
        if params.filter.learnable {
            grads.push(&g.filter);
        }
        opt.config.lr = cfg.gnn_optim.lr * cfg.schedule.factor(epoch, cfg.gnn_epochs);
        adam_step(&mut opt, &mut gnn_slices_mut(&mut params), &grads)?;
    }
    Ok(PhaseResult {
        params,
        loss_curve,
        gamma_curve: Vec::new(),
    })
}

/// Encoder and spectral GNN trained end to end.
#[derive(Debug, Clone, PartialEq)]
pub struct JointParams {
    pub encoder: MlpParams,
    pub gnn: SpectralGnnParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointGrads {
    pub encoder: MlpGrads,
    pub head: MlpGrads,
    pub filter: Vec<f64>,
}

/// Loss of `GNN(f(X), A)` on `mask` with gradients for every parameter,
/// including the filter coefficients whether or not they are learnable.
pub fn joint_objective(
    attrs: &Matrix,
    adj: &NormalizedAdjacency,
    params: &JointParams,
    y: &Matrix,
    mask: &[usize],
    loss: LossKind,
) -> Result<(f64, JointGrads)> {
    let (feat, enc_cache) = mlp_forward(&params.encoder, attrs)?;
    let (h, cache) = gnn_forward(&feat, adj, &params.gnn)?;
    let lo = loss_full(loss, &h, y, mask)?;
    let g = gnn_backward(adj, &params.gnn, &cache, &lo.grad_logits)?;
    let encoder = mlp_backward(&params.encoder, &enc_cache, &g.features)?;
    Ok((
        lo.loss,
        JointGrads {
            encoder,
            head: g.head,
            filter: g.filter,
        },
    ))
}

/// Full-batch joint training; refuses graphs above `cfg.joint_cap` nodes.
#[allow(clippy::too_many_arguments)]
pub fn train_joint_fullbatch(
    attrs: &Matrix,
    adj: &NormalizedAdjacency,
    encoder: MlpParams,
    gnn: SpectralGnnParams,
    y: &Matrix,
    train: &[usize],
    loss: LossKind,
    cfg: &TrainConfig,
) -> Result<PhaseResult<JointParams>> {
    cfg.validate()?;
    if adj.num_nodes() > cfg.joint_cap {
        return Err(Error::CapExceeded {
            num_nodes: adj.num_nodes(),
            cap: cfg.joint_cap,
        });
    }
    let mut params = JointParams { encoder, gnn };
    let mut sizes = params.encoder.param_sizes();
    sizes.extend(gnn_sizes(&params.gnn));
    let mut opt = OptimizerState::new(cfg.gnn_optim, &sizes);
    let mut loss_curve = Vec::with_capacity(cfg.gnn_epochs);
    for epoch in 0..cfg.gnn_epochs {
        let (l, g) = joint_objective(attrs, adj, &params, y, train, loss)?;
        check_finite(l, "joint", epoch)?;
        loss_curve.push(l);
        if opt.m.is_empty() {
            continue;
        }
        let mut grads = g.encoder.grad_slices();
        grads.extend(g.head.grad_slices());
        if params.gnn.filter.learnable {
            grads.push(&g.filter);
        }
        let mut slices = params.encoder.param_slices_mut();
        slices.extend(gnn_slices_mut(&mut params.gnn));
        opt.config.lr = cfg.gnn_optim.lr * cfg.schedule.factor(epoch, cfg.gnn_epochs);
        adam_step(&mut opt, &mut slices, &grads)?;
    }
    Ok(PhaseResult {
        params,
        loss_curve,
        gamma_curve: Vec::new(),
    })
}

/// Maps raw GNN outputs onto the label domain of the task.
pub fn to_label_domain(h: &Matrix, task: TaskKind) -> Matrix {
    match task {
        TaskKind::MultiClass => {
            let mut out = h.clone();
            for i in 0..out.rows() {
                let p = softmax(h.row(i));
                out.row_mut(i).copy_from_slice(&p);
            }
            out
        }
        TaskKind::MultiLabelBinary => h.map(sigmoid),
        TaskKind::Regression => h.clone(),
    }
}

/// Trains a spectral GNN on the training split over frozen `features` and
/// writes its predictions into every row outside the training split.
/// Training rows keep their labels. One pass, no iteration.
pub fn generate_pseudo_labels(
    adj: &NormalizedAdjacency,
    features: &Matrix,
    y: &LabelMatrix,
    split: &NodeSplit,
    cfg: &TrainConfig,
) -> Result<LabelMatrix> {
    if split.train.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut rng = phase_rng(cfg.seed, PSEUDO_STREAM);
    let head = cfg.arch.gnn_head.build(features.cols(), y.num_classes(), &mut rng)?;
    let params = SpectralGnnParams {
        filter: fixed_filter(cfg.filter),
        head,
    };
    let task = y.task;
    let trained = train_gnn_phase(features, adj, params, &y.values, &split.train, cfg.loss_for(task), cfg)?;
    let (h, _) = gnn_forward(features, adj, &trained.params)?;
    let pred = to_label_domain(&h, task);
    let mut in_train = vec![false; y.num_nodes()];
    for &i in &split.train {
        in_train[i] = true;
    }
    let mut values = y.values.clone();
    for (i, _) in in_train.iter().enumerate().filter(|(_, &t)| !t) {
        values.row_mut(i).copy_from_slice(pred.row(i));
    }
    LabelMatrix::new(values, task)
}

/// Labels visible to the encoder phase and the nodes it trains on.
///
/// Rows outside the training split never expose their true labels: they are
/// replaced by pseudo labels when enabled, or zeroed and left out otherwise.
pub fn prepare_ne_labels(
    adj: &NormalizedAdjacency,
    attrs: &Matrix,
    labels: &LabelMatrix,
    split: &NodeSplit,
    cfg: &TrainConfig,
) -> Result<(LabelMatrix, Vec<usize>)> {
    let n = labels.num_nodes();
    if split.train.len() == n {
        return Ok((labels.clone(), (0..n).collect()));
    }
    let mut masked = LabelMatrix {
        values: Matrix::zeros(n, labels.num_classes()),
        task: labels.task,
    };
    for &i in &split.train {
        masked.values.row_mut(i).copy_from_slice(labels.values.row(i));
    }
    if cfg.pseudo_labels {
        let filled = generate_pseudo_labels(adj, attrs, &masked, split, cfg)?;
        Ok((filled, (0..n).collect()))
    } else {
        Ok((masked, split.train.clone()))
    }
}
