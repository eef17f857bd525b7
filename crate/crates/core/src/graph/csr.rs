use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Rows below this count are multiplied serially.
const PAR_ROWS: usize = 512;

/// Directed graph in compressed sparse row form.
///
/// Neighbors of node `u` are `col_idx[row_ptr[u]..row_ptr[u + 1]]`, sorted
/// strictly increasing. Self-loops are kept if the input had them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    num_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl CsrGraph {
    /// Builds a sorted, deduplicated CSR graph from directed edges.
    pub fn from_edges(edges: &[(usize, usize)], num_nodes: usize) -> Result<Self> {
        for (index, &(src, dst)) in edges.iter().enumerate() {
            if src >= num_nodes || dst >= num_nodes {
                return Err(Error::EdgeOutOfRange {
                    index,
                    src,
                    dst,
                    num_nodes,
                });
            }
        }
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        sorted.dedup();

        let mut row_ptr = vec![0usize; num_nodes + 1];
        for &(src, _) in &sorted {
            row_ptr[src + 1] += 1;
        }
        for i in 0..num_nodes {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = sorted.into_iter().map(|(_, dst)| dst).collect();
        Ok(Self {
            num_nodes,
            row_ptr,
            col_idx,
        })
    }

    /// Validates raw CSR arrays.
    pub fn from_parts(num_nodes: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Result<Self> {
        if row_ptr.len() != num_nodes + 1 || row_ptr[0] != 0 {
            return Err(Error::InvalidData(format!(
                "row_ptr must have length {} and start at 0",
                num_nodes + 1
            )));
        }
        if row_ptr[num_nodes] != col_idx.len() {
            return Err(Error::InvalidData(
                "row_ptr does not end at the edge count".into(),
            ));
        }
        for u in 0..num_nodes {
            if row_ptr[u] > row_ptr[u + 1] {
                return Err(Error::InvalidData(format!("row_ptr decreases at {u}")));
            }
            let row = &col_idx[row_ptr[u]..row_ptr[u + 1]];
            if row.iter().any(|&v| v >= num_nodes) {
                return Err(Error::InvalidData(format!("row {u} has an out-of-range column")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidData(format!(
                    "row {u} is not strictly increasing"
                )));
            }
        }
        Ok(Self {
            num_nodes,
            row_ptr,
            col_idx,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[u]..self.row_ptr[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row_ptr[u + 1] - self.row_ptr[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Adds the reverse of every edge.
    pub fn symmetrize(&self) -> Self {
        let mut edges: Vec<_> = self.edges().collect();
        edges.extend(self.edges().map(|(u, v)| (v, u)));
        Self::from_edges(&edges, self.num_nodes).expect("edges already validated")
    }
}

/// Policy for rows with no outgoing edges, where `D⁻¹` is undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IsolatedPolicy {
    /// Give the node a unit self-loop.
    #[default]
    SelfLoop,
}

/// Row-stochastic adjacency `Â = D⁻¹A` stored in CSR form.
///
/// The transpose is kept alongside so backward passes can apply `Âᵀ`
/// without scattering.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    forward: SparseRows,
    transposed: SparseRows,
}

/// Plain weighted CSR matrix.
#[derive(Debug, Clone, PartialEq)]
struct SparseRows {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRows {
    fn transpose(&self) -> Self {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.col_idx.len()];
        let mut values = vec![0.0; self.values.len()];
        // Visiting source rows in order keeps each transposed row sorted.
        for r in 0..n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let slot = next[c];
                col_idx[slot] = r;
                values[slot] = self.values[k];
                next[c] += 1;
            }
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    fn spmm(&self, m: &Matrix) -> Result<Matrix> {
        if m.rows() != self.n {
            return Err(Error::dims("spmm", (self.n, m.cols()), m.shape()));
        }
        let d = m.cols();
        let mut out = Matrix::zeros(self.n, d);
        if d == 0 {
            return Ok(out);
        }
        let kernel = |(i, out_row): (usize, &mut [f64])| {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let w = self.values[k];
                let src = m.row(self.col_idx[k]);
                for (o, &x) in out_row.iter_mut().zip(src) {
                    *o += w * x;
                }
            }
        };
        if self.n >= PAR_ROWS {
            out.as_mut_slice().par_chunks_mut(d).enumerate().for_each(kernel);
        } else {
            out.as_mut_slice().chunks_mut(d).enumerate().for_each(kernel);
        }
        Ok(out)
    }
}

impl NormalizedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.forward.n
    }

    pub fn num_entries(&self) -> usize {
        self.forward.values.len()
    }

    /// `(column, weight)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = &self.forward;
        (r.row_ptr[i]..r.row_ptr[i + 1]).map(move |k| (r.col_idx[k], r.values[k]))
    }

    /// `Â · m`, one output row at a time in column order.
    pub fn spmm(&self, m: &Matrix) -> Result<Matrix> {
        self.forward.spmm(m)
    }

    /// `Âᵀ · m`
    pub fn spmm_transpose(&self, m: &Matrix) -> Result<Matrix> {
        self.transposed.spmm(m)
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.num_nodes();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for (j, w) in self.row(i) {
                out.set(i, j, w);
            }
        }
        out
    }
}

/// Normalizes each row by its out-degree.
pub fn row_normalize(g: &CsrGraph, policy: IsolatedPolicy) -> NormalizedAdjacency {
    let n = g.num_nodes();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(g.num_edges());
    let mut values = Vec::with_capacity(g.num_edges());
    row_ptr.push(0);
    for u in 0..n {
        let nbrs = g.neighbors(u);
        if nbrs.is_empty() {
            match policy {
                IsolatedPolicy::SelfLoop => {
                    col_idx.push(u);
                    values.push(1.0);
                }
            }
        } else {
            let w = 1.0 / nbrs.len() as f64;
            col_idx.extend_from_slice(nbrs);
            values.extend(std::iter::repeat_n(w, nbrs.len()));
        }
        row_ptr.push(col_idx.len());
    }
    let forward = SparseRows {
        n,
        row_ptr,
        col_idx,
        values,
    };
    let transposed = forward.transpose();
    NormalizedAdjacency {
        forward,
        transposed,
    }
}

/// Free-function form of [`NormalizedAdjacency::spmm`].
pub fn spmm(adj: &NormalizedAdjacency, m: &Matrix) -> Result<Matrix> {
    adj.spmm(m)
}
