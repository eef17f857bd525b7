use std::collections::{HashMap, VecDeque};

use super::CsrGraph;

/// Induced subgraph around a seed set.
#[derive(Debug, Clone)]
pub struct Subgraph {
    pub graph: CsrGraph,
    /// `nodes[new] = old`. Seeds come first, in the order given.
    pub nodes: Vec<usize>,
    pub num_seeds: usize,
    index: HashMap<usize, usize>,
}

impl Subgraph {
    /// Local index of an original node, if it was sampled.
    pub fn local_index(&self, old: usize) -> Option<usize> {
        self.index.get(&old).copied()
    }
}

/// Collects every node reachable from `seeds` in at most `depth` hops along
/// outgoing edges and returns the induced subgraph.
///
/// Duplicate seeds are collapsed. Nodes beyond the seeds are numbered in BFS
/// order.
pub fn k_hop_subgraph(g: &CsrGraph, seeds: &[usize], depth: usize) -> Subgraph {
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut queue = VecDeque::new();
    for &s in seeds {
        assert!(s < g.num_nodes(), "seed {s} out of range");
        if let std::collections::hash_map::Entry::Vacant(e) = index.entry(s) {
            e.insert(nodes.len());
            nodes.push(s);
            queue.push_back((s, 0usize));
        }
    }
    let num_seeds = nodes.len();
    while let Some((u, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for &v in g.neighbors(u) {
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(v) {
                e.insert(nodes.len());
                nodes.push(v);
                queue.push_back((v, d + 1));
            }
        }
    }

    let mut edges = Vec::new();
    for (new_u, &u) in nodes.iter().enumerate() {
        for &v in g.neighbors(u) {
            if let Some(&new_v) = index.get(&v) {
                edges.push((new_u, new_v));
            }
        }
    }
    let graph = CsrGraph::from_edges(&edges, nodes.len()).expect("local indices are in range");
    Subgraph {
        graph,
        nodes,
        num_seeds,
        index,
    }
}
