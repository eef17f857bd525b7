#![allow(dead_code)]

use std::collections::BTreeSet;

use labeldeconv::graph::CsrGraph;
use labeldeconv::nn::MlpParams;
use nalgebra::DMatrix;
use rand::Rng;

/// Random graph on `n` nodes: each ordered pair is an edge with probability
/// `p`, mirrored unless `directed`. Returns the deduplicated edge set too.
pub fn random_graph(n: usize, p: f64, directed: bool, rng: &mut impl Rng) -> (CsrGraph, BTreeSet<(usize, usize)>) {
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(p) {
                edges.insert((u, v));
                if !directed {
                    edges.insert((v, u));
                }
            }
        }
    }
    let list: Vec<_> = edges.iter().copied().collect();
    (CsrGraph::from_edges(&list, n).unwrap(), edges)
}

/// `D⁻¹A` written out entry by entry; nodes without out-edges get a unit
/// self-loop.
pub fn dense_row_normalized(n: usize, edges: &BTreeSet<(usize, usize)>) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for &(u, v) in edges {
        a[(u, v)] = 1.0;
    }
    for i in 0..n {
        let deg: f64 = a.row(i).sum();
        if deg == 0.0 {
            a[(i, i)] = 1.0;
        } else {
            for j in 0..n {
                a[(i, j)] /= deg;
            }
        }
    }
    a
}

/// `Σ c_i Mⁱ` by explicit powers.
pub fn dense_poly(coeffs: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    let mut power = DMatrix::identity(n, n);
    for &c in coeffs {
        out += &power * c;
        power = &power * m;
    }
    out
}

/// Adds `delta` to the `k`-th trainable value of `p` (weights then bias,
/// layer by layer).
pub fn nudge_mlp(p: &mut MlpParams, mut k: usize, delta: f64) {
    for s in p.param_slices_mut() {
        if k < s.len() {
            s[k] += delta;
            return;
        }
        k -= s.len();
    }
    panic!("parameter index out of range");
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}
