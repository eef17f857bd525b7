//! Sparse graph structure, row normalization and neighborhood sampling.

mod csr;
pub mod edge_list;
mod sampling;

pub use csr::{row_normalize, spmm, CsrGraph, IsolatedPolicy, NormalizedAdjacency};
pub use edge_list::{format_edge_list, parse_edge_list, read_edge_list, EdgeListError};
pub use sampling::{k_hop_subgraph, Subgraph};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Builds a sorted, deduplicated CSR graph. Edges are taken as directed.
pub fn build_csr(edges: &[(usize, usize)], num_nodes: usize) -> Result<CsrGraph> {
    CsrGraph::from_edges(edges, num_nodes)
}

/// Disjoint train/validation/test node sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl NodeSplit {
    pub fn new(train: Vec<usize>, val: Vec<usize>, test: Vec<usize>, num_nodes: usize) -> Result<Self> {
        let split = Self { train, val, test };
        split.validate(num_nodes)?;
        Ok(split)
    }

    /// Every node in the training split.
    pub fn all_train(num_nodes: usize) -> Self {
        Self {
            train: (0..num_nodes).collect(),
            ..Self::default()
        }
    }

    /// Random split with the given fractions; the remainder goes to test.
    pub fn random(num_nodes: usize, train_frac: f64, val_frac: f64, rng: &mut impl Rng) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_frac)
            || !(0.0..=1.0).contains(&val_frac)
            || train_frac + val_frac > 1.0 + 1e-12
        {
            return Err(Error::InvalidConfig(format!(
                "split fractions {train_frac}/{val_frac} are not a partition of [0,1]"
            )));
        }
        let mut order: Vec<usize> = (0..num_nodes).collect();
        order.shuffle(rng);
        let n_train = (train_frac * num_nodes as f64).round() as usize;
        let n_val = ((val_frac * num_nodes as f64).round() as usize).min(num_nodes - n_train);
        let mut train = order[..n_train].to_vec();
        let mut val = order[n_train..n_train + n_val].to_vec();
        let mut test = order[n_train + n_val..].to_vec();
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        Ok(Self { train, val, test })
    }

    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for (name, part) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in part {
                if i >= num_nodes {
                    return Err(Error::InvalidData(format!(
                        "{name} split contains node {i} but the graph has {num_nodes} nodes"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidData(format!("node {i} appears in more than one split")));
                }
            }
        }
        Ok(())
    }

    /// Nodes in any split, ascending.
    pub fn labeled_nodes(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .train
            .iter()
            .chain(&self.val)
            .chain(&self.test)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    /// Nodes outside the training split that still carry a split tag.
    pub fn eval_nodes(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.val.iter().chain(&self.test).copied().collect();
        all.sort_unstable();
        all
    }
}
