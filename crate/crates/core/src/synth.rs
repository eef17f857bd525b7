//! Synthetic datasets: the four-node motivating example, a family of
//! attribute-ambiguous 2-cycles generalizing it, and graphs whose labels
//! follow `Y = φ*(Â) ψ*(F*)` for a random filter and a random MLP.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bundle::Dataset;
use crate::error::{Error, Result};
use crate::graph::{row_normalize, CsrGraph, IsolatedPolicy, NodeSplit};
use crate::labels::{LabelMatrix, TaskKind};
use crate::matrix::Matrix;
use crate::nn::{mlp_forward, Activation, MlpParams};
use crate::oracle;
use crate::spectral::{filter_apply, FilterCoeffs};

/// Parameters of the generating model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `α*`, coefficients of `φ*(Â) = Σ α*_i Âⁱ`.
    pub filter: Vec<f64>,
    pub psi: MlpParams,
    /// `F*`, the latent features; equal to the stored attributes.
    pub latent: Matrix,
    /// `ψ*(F*)`, the labels before convolution.
    pub clean: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub dataset: Dataset,
    /// Continuous targets `φ*(Â) ψ*(F*)` when the generator has them.
    pub continuous: Option<Matrix>,
    pub truth: Option<GroundTruth>,
    /// Node pairs planted with identical attributes.
    pub duplicates: Vec<(usize, usize)>,
}

/// Two 2-cycles `{0,1}` and `{2,3}` with `X = (e₀,e₁,e₁,e₂)` and
/// `Y = (e₁,e₀,e₂,e₁)`, so that `Y = ÂX` while nodes 1 and 2 share an
/// attribute but not a label. Every node is in the training split.
pub fn build_motivating_example() -> GeneratedDataset {
    let graph = CsrGraph::from_edges(&[(0, 1), (1, 0), (2, 3), (3, 2)], 4).expect("static graph");
    let attrs = LabelMatrix::one_hot(&[0, 1, 1, 2], 3).expect("static").values;
    let labels = LabelMatrix::one_hot(&[1, 0, 2, 1], 3).expect("static");
    GeneratedDataset {
        dataset: Dataset {
            name: "motivating-example".into(),
            graph,
            attrs,
            labels,
            split: NodeSplit::all_train(4),
            provenance: json!({ "generator": "motivating_example" }),
        },
        continuous: None,
        truth: None,
        duplicates: Vec::new(),
    }
}

/// `num_pairs` disjoint 2-cycles. Cycle `k` joins attributes `c_k` and
/// `c_{k+1}` (with `c_k = k mod num_classes`) and each node is labeled with
/// its neighbor's attribute, so `Y = ÂX` and every attribute value is shared
/// by nodes with different labels. Node indices are shuffled by `seed`.
///
/// With two pairs and three classes this is the motivating example up to
/// node relabeling.
pub fn build_counterexample_family(num_pairs: usize, num_classes: usize, seed: u64) -> Result<GeneratedDataset> {
    if num_pairs < 2 {
        return Err(Error::InvalidConfig("counterexample family needs at least 2 pairs".into()));
    }
    if num_classes < 3 {
        return Err(Error::InvalidConfig("counterexample family needs at least 3 classes".into()));
    }
    let n = 2 * num_pairs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut attr = vec![0; n];
    let mut label = vec![0; n];
    let mut edges = Vec::with_capacity(n);
    for k in 0..num_pairs {
        let (a, b) = (k % num_classes, (k + 1) % num_classes);
        let (u, v) = (perm[2 * k], perm[2 * k + 1]);
        attr[u] = a;
        attr[v] = b;
        label[u] = b;
        label[v] = a;
        edges.push((u, v));
        edges.push((v, u));
    }
    Ok(GeneratedDataset {
        dataset: Dataset {
            name: format!("counterexample-{num_pairs}x{num_classes}"),
            graph: CsrGraph::from_edges(&edges, n)?,
            attrs: LabelMatrix::one_hot(&attr, num_classes)?.values,
            labels: LabelMatrix::one_hot(&label, num_classes)?,
            split: NodeSplit::all_train(n),
            provenance: json!({
                "generator": "counterexample_family",
                "num_pairs": num_pairs,
                "num_classes": num_classes,
                "seed": seed,
            }),
        },
        continuous: None,
        truth: None,
        duplicates: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_nodes: usize,
    /// `d_f`, the width of `F*`.
    pub attr_dim: usize,
    pub num_classes: usize,
    /// `α*`; drawn at random with degree `filter_degree` when absent.
    pub filter: Option<Vec<f64>>,
    pub filter_degree: usize,
    /// Hidden widths of the ReLU network `ψ*`.
    pub psi_hidden: Vec<usize>,
    /// Cycle lengths of the regular backbone are drawn from this range.
    pub min_cycle: usize,
    pub max_cycle: usize,
    /// Random extra undirected edges, per node.
    pub noise_edges_per_node: f64,
    /// Disjoint node pairs forced to share attribute vectors.
    pub duplicate_pairs: usize,
    /// `MultiClass` stores argmax one-hot labels, `MultiLabelBinary` the
    /// sign pattern, `Regression` the continuous targets.
    pub task: TaskKind,
    pub train_frac: f64,
    pub val_frac: f64,
    pub max_retries: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_nodes: 200,
            attr_dim: 8,
            num_classes: 4,
            filter: None,
            filter_degree: 2,
            psi_hidden: vec![16],
            min_cycle: 3,
            max_cycle: 8,
            noise_edges_per_node: 0.5,
            duplicate_pairs: 0,
            task: TaskKind::MultiClass,
            train_frac: 0.6,
            val_frac: 0.2,
            max_retries: 8,
            seed: 0,
        }
    }
}

/// Largest graph on which a dense invertibility check is attempted when the
/// diagonal-dominance certificate fails.
pub const DENSE_CHECK_LIMIT: usize = 512;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.num_nodes < 3 || self.attr_dim == 0 || self.num_classes == 0 {
            return bad("need at least 3 nodes and positive attribute/class widths");
        }
        if self.min_cycle < 3 || self.max_cycle < self.min_cycle {
            return bad("cycle lengths must satisfy 3 ≤ min_cycle ≤ max_cycle");
        }
        if !(self.noise_edges_per_node >= 0.0) {
            return bad("noise_edges_per_node must be non-negative");
        }
        if 2 * self.duplicate_pairs > self.num_nodes {
            return bad("too many duplicate pairs for the node count");
        }
        if let Some(f) = &self.filter {
            FilterCoeffs::new(f.clone(), false)?;
        }
        Ok(())
    }
}

/// A random union of cycles covering every node, plus noise edges, both
/// directions stored.
fn sample_graph(cfg: &SynthConfig, rng: &mut impl Rng) -> Result<CsrGraph> {
    let n = cfg.num_nodes;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    let mut start = 0;
    while start < n {
        let mut len = rng.random_range(cfg.min_cycle..=cfg.max_cycle);
        if n - start < len + cfg.min_cycle {
            len = n - start;
        }
        let cycle = &order[start..start + len];
        for i in 0..len {
            let (u, v) = (cycle[i], cycle[(i + 1) % len]);
            edges.push((u, v));
            edges.push((v, u));
        }
        start += len;
    }
    let noise = (cfg.noise_edges_per_node * n as f64).round() as usize;
    for _ in 0..noise {
        let u = rng.random_range(0..n);
        let mut v = rng.random_range(0..n - 1);
        if v >= u {
            v += 1;
        }
        edges.push((u, v));
        edges.push((v, u));
    }
    CsrGraph::from_edges(&edges, n)
}

fn random_filter(degree: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut f = vec![1.0];
    if degree > 0 {
        let budget = 0.6 / degree as f64;
        f.extend((0..degree).map(|_| rng.random_range(-budget..=budget)));
    }
    f
}

/// `|α_0| > Σ_{i≥1} |α_i|` suffices since every eigenvalue of a
/// row-stochastic `Â` lies in the unit disk.
fn dominance_certificate(filter: &[f64]) -> bool {
    filter[0].abs() > filter[1..].iter().map(|c| c.abs()).sum::<f64>()
}

fn dense_invertible(filter: &FilterCoeffs, g: &CsrGraph) -> bool {
    let adj = oracle::adjacency_dense(&row_normalize(g, IsolatedPolicy::SelfLoop));
    let phi = oracle::matrix_polynomial(&filter.coeffs, &adj);
    let scale = phi.amax().max(f64::MIN_POSITIVE);
    let lu = phi.lu();
    let u = lu.u();
    (0..u.nrows()).all(|i| u[(i, i)].abs() > 1e-10 * scale)
}

/// Samples a graph, `F* ~ N(0, I)`, a random ReLU network `ψ*` and a filter
/// `φ*` with `φ*(Â)` invertible, and labels `Y = φ*(Â) ψ*(F*)`.
pub fn generate_assumption1(cfg: &SynthConfig) -> Result<GeneratedDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.num_nodes;
    let mut accepted = None;
    for attempt in 0..=cfg.max_retries {
        let graph = sample_graph(cfg, &mut rng)?;
        let coeffs = match &cfg.filter {
            Some(f) => f.clone(),
            None => random_filter(cfg.filter_degree, &mut rng),
        };
        let filter = FilterCoeffs::new(coeffs, false)?;
        let ok = dominance_certificate(&filter.coeffs) || (n <= DENSE_CHECK_LIMIT && dense_invertible(&filter, &graph));
        if ok {
            accepted = Some((graph, filter));
            break;
        }
        log::debug!("attempt {attempt}: φ*(Â) not certified invertible, resampling");
    }
    let (graph, filter) = accepted.ok_or_else(|| {
        Error::NumericFailure(format!(
            "φ*(Â) not invertible after {} attempts",
            cfg.max_retries + 1
        ))
    })?;

    let mut latent = Matrix::from_fn(n, cfg.attr_dim, |_, _| rng.sample(StandardNormal));
    let mut pool: Vec<usize> = (0..n).collect();
    pool.shuffle(&mut rng);
    let duplicates: Vec<(usize, usize)> = pool
        .chunks_exact(2)
        .take(cfg.duplicate_pairs)
        .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
        .collect();
    for &(i, j) in &duplicates {
        let src = latent.row(i).to_vec();
        latent.row_mut(j).copy_from_slice(&src);
    }

    let mut dims = vec![cfg.attr_dim];
    dims.extend(&cfg.psi_hidden);
    dims.push(cfg.num_classes);
    let psi = MlpParams::init(&dims, Activation::Relu, &mut rng);
    let (clean, _) = mlp_forward(&psi, &latent)?;
    let adj = row_normalize(&graph, IsolatedPolicy::SelfLoop);
    let y = filter_apply(&adj, &filter, &clean)?;

    let labels = match cfg.task {
        TaskKind::MultiClass => {
            let classes: Vec<usize> = (0..n).map(|i| y.argmax_row(i)).collect();
            LabelMatrix::one_hot(&classes, cfg.num_classes)?
        }
        TaskKind::MultiLabelBinary => LabelMatrix {
            values: y.map(|v| if v > 0.0 { 1.0 } else { 0.0 }),
            task: TaskKind::MultiLabelBinary,
        },
        TaskKind::Regression => LabelMatrix {
            values: y.clone(),
            task: TaskKind::Regression,
        },
    };
    let split = NodeSplit::random(n, cfg.train_frac, cfg.val_frac, &mut rng)?;
    let dataset = Dataset {
        name: format!("assumption1-n{n}-seed{}", cfg.seed),
        graph,
        attrs: latent.clone(),
        labels,
        split,
        provenance: json!({
            "generator": "assumption1",
            "latent_distribution": "iid standard normal",
            "filter": filter.coeffs,
            "config": cfg,
        }),
    };
    Ok(GeneratedDataset {
        dataset,
        continuous: Some(y),
        truth: Some(GroundTruth {
            filter: filter.coeffs,
            psi,
            latent,
            clean,
        }),
        duplicates,
    })
}
