//! Spectral GNN `H = φ(Â; θ_φ) · ψ(F; θ_ψ)` with polynomial filter
//! `φ(Â) = Σ_i c_i Âⁱ` and an MLP head `ψ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::matrix::Matrix;
use crate::nn::{mlp_backward, mlp_forward, Checkpoint, MlpCache, MlpGrads, MlpParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCoeffs {
    pub coeffs: Vec<f64>,
    pub learnable: bool,
}

impl FilterCoeffs {
    pub fn new(coeffs: Vec<f64>, learnable: bool) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("filter needs at least one finite coefficient".into()));
        }
        Ok(Self { coeffs, learnable })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "hops")]
pub enum FilterKind {
    /// Fixed `Â^N`, the linear part of an N-layer GCN.
    GcnPower(usize),
    /// Learnable `Σ_{i≤N} θ_i Âⁱ`, uniformly initialized.
    LearnablePoly(usize),
}

impl FilterKind {
    pub fn hops(self) -> usize {
        match self {
            FilterKind::GcnPower(n) | FilterKind::LearnablePoly(n) => n,
        }
    }
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FilterKind::GcnPower(n) => write!(f, "gcn:{n}"),
            FilterKind::LearnablePoly(n) => write!(f, "poly:{n}"),
        }
    }
}

impl std::str::FromStr for FilterKind {
    type Err = Error;

    /// Parses `gcn:N` or `poly:N`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("filter must be gcn:N or poly:N, got {s:?}"));
        let (kind, n) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = n.parse().map_err(|_| bad())?;
        match kind {
            "gcn" => Ok(FilterKind::GcnPower(n)),
            "poly" => Ok(FilterKind::LearnablePoly(n)),
            _ => Err(bad()),
        }
    }
}

pub fn fixed_filter(kind: FilterKind) -> FilterCoeffs {
    match kind {
        FilterKind::GcnPower(n) => {
            let mut coeffs = vec![0.0; n + 1];
            coeffs[n] = 1.0;
            FilterCoeffs {
                coeffs,
                learnable: false,
            }
        }
        FilterKind::LearnablePoly(n) => FilterCoeffs {
            coeffs: vec![1.0 / (n + 1) as f64; n + 1],
            learnable: true,
        },
    }
}

/// `Σ_i c_i Âⁱ m` by Horner's rule: `N` sparse products, no dense powers.
pub fn filter_apply(adj: &NormalizedAdjacency, c: &FilterCoeffs, m: &Matrix) -> Result<Matrix> {
    if m.rows() != adj.num_nodes() {
        return Err(Error::dims("filter_apply", (adj.num_nodes(), m.cols()), m.shape()));
    }
    horner(c, m, |x| adj.spmm(x))
}

fn horner(c: &FilterCoeffs, m: &Matrix, mut apply: impl FnMut(&Matrix) -> Result<Matrix>) -> Result<Matrix> {
    let n = c.coeffs.len();
    let mut acc = m.scale(c.coeffs[n - 1]);
    for &ci in c.coeffs[..n - 1].iter().rev() {
        acc = apply(&acc)?;
        acc.axpy(ci, m)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGnnParams {
    pub filter: FilterCoeffs,
    pub head: MlpParams,
}

impl SpectralGnnParams {
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            filter: Some((self.filter.coeffs.clone(), self.filter.learnable)),
            mlp: self.head.clone(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let (coeffs, learnable) = ck
            .filter
            .ok_or_else(|| Error::InvalidData("checkpoint has no filter section".into()))?;
        Ok(Self {
            filter: FilterCoeffs::new(coeffs, learnable)?,
            head: ck.mlp,
        })
    }
}

/// Values kept by [`gnn_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct GnnCache {
    head: MlpCache,
    head_out: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnGrads {
    /// Gradient for every coefficient, whether or not the filter is learnable.
    pub filter: Vec<f64>,
    pub head: MlpGrads,
    pub features: Matrix,
}

pub fn gnn_forward(f: &Matrix, adj: &NormalizedAdjacency, p: &SpectralGnnParams) -> Result<(Matrix, GnnCache)> {
    if f.rows() != adj.num_nodes() {
        return Err(Error::dims("gnn_forward", (adj.num_nodes(), f.cols()), f.shape()));
    }
    let (head_out, head) = mlp_forward(&p.head, f)?;
    let h = filter_apply(adj, &p.filter, &head_out)?;
    Ok((h, GnnCache { head, head_out }))
}

/// Backward pass of [`gnn_forward`].
///
/// With `Z = ψ(F)` and upstream `U`, the coefficient gradient is
/// `⟨Âⁱ Z, U⟩ = ⟨Z, (Âᵀ)ⁱ U⟩` and `∂L/∂Z = Σ_i c_i (Âᵀ)ⁱ U`.
pub fn gnn_backward(
    adj: &NormalizedAdjacency,
    p: &SpectralGnnParams,
    cache: &GnnCache,
    upstream: &Matrix,
) -> Result<GnnGrads> {
    if upstream.shape() != cache.head_out.shape() {
        return Err(Error::dims("gnn_backward", cache.head_out.shape(), upstream.shape()));
    }
    let mut filter = Vec::with_capacity(p.filter.coeffs.len());
    let mut grad_z = Matrix::zeros(upstream.rows(), upstream.cols());
    let mut power = upstream.clone();
    for (i, &ci) in p.filter.coeffs.iter().enumerate() {
        if i > 0 {
            power = adj.spmm_transpose(&power)?;
        }
        filter.push(cache.head_out.dot(&power)?);
        grad_z.axpy(ci, &power)?;
    }
    let head = mlp_backward(&p.head, &cache.head, &grad_z)?;
    let features = head.input.clone();
    Ok(GnnGrads { filter, head, features })
}
