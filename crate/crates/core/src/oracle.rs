//! Dense reference implementations of the linear-algebra facts behind label
//! deconvolution: Cayley–Hamilton inverses, polynomial inverses of graph
//! filters, exact deconvolved labels, and the Vandermonde universality
//! construction for spectral GNNs.
//!
//! These are brute-force routines for small graphs (n ≤ 64). LU, SVD and the
//! symmetric eigensolver come from nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, NormalizedAdjacency};
use crate::matrix::Matrix;
use crate::spectral::FilterCoeffs;

pub type DenseMatrix = DMatrix<f64>;
pub type DenseVector = DVector<f64>;

/// Largest matrix the characteristic-polynomial routines accept.
pub const MAX_CHAR_POLY_DIM: usize = 64;

/// Minimum eigengap accepted by [`universality_fit`].
pub const EIGENGAP_TOL: f64 = 1e-8;
/// Minimum spectral component norm accepted by [`universality_fit`].
pub const FREQUENCY_TOL: f64 = 1e-10;

/// Monic characteristic polynomial `det(λI − M)`, coefficients in ascending
/// order `p_0, …, p_n` with `p_n = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    pub coeffs: Vec<f64>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

pub fn to_dense(m: &Matrix) -> DenseMatrix {
    DenseMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_dense(m: &DenseMatrix) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn adjacency_dense(adj: &NormalizedAdjacency) -> DenseMatrix {
    to_dense(&adj.to_dense())
}

/// `D^{-1/2} A D^{-1/2}`; isolated nodes keep a zero row.
pub fn sym_normalized(g: &CsrGraph) -> DenseMatrix {
    let n = g.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| match g.degree(u) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect();
    let mut out = DenseMatrix::zeros(n, n);
    for (u, v) in g.edges() {
        out[(u, v)] = inv_sqrt[u] * inv_sqrt[v];
    }
    out
}

/// `Σ_i c_i Mⁱ` with explicit dense powers.
pub fn matrix_polynomial(coeffs: &[f64], m: &DenseMatrix) -> DenseMatrix {
    let n = m.nrows();
    let mut acc = DenseMatrix::zeros(n, n);
    let mut power = DenseMatrix::identity(n, n);
    for (i, &c) in coeffs.iter().enumerate() {
        if i > 0 {
            power = &power * m;
        }
        acc += &power * c;
    }
    acc
}

fn check_square(m: &DenseMatrix, limit: Option<usize>) -> Result<usize> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::dims("square matrix", (n, n), m.shape()));
    }
    if let Some(limit) = limit {
        if n > limit {
            return Err(Error::Oversize { size: n, limit });
        }
    }
    Ok(n)
}

/// Faddeev–LeVerrier trace recurrence:
/// `M_k = A M_{k−1} + p_{n−k+1} I`, `p_{n−k} = −tr(A M_k) / k`.
pub fn char_poly(m: &DenseMatrix) -> Result<CharPoly> {
    let n = check_square(m, Some(MAX_CHAR_POLY_DIM))?;
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut mk = DenseMatrix::zeros(n, n);
    for k in 1..=n {
        mk = m * &mk;
        for i in 0..n {
            mk[(i, i)] += coeffs[n - k + 1];
        }
        let am = m * &mk;
        coeffs[n - k] = -am.trace() / k as f64;
    }
    Ok(CharPoly { coeffs })
}

/// `M⁻¹ = −(1/p_0)(p_n M^{n−1} + … + p_2 M + p_1 I)`, evaluated by Horner's
/// rule on the characteristic polynomial.
pub fn inverse_via_cayley(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = check_square(m, Some(MAX_CHAR_POLY_DIM))?;
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let p = char_poly(m)?.coeffs;
    let scale = m.norm().max(1.0).powi(n as i32);
    if p[0].abs() <= 1e-12 * scale {
        return Err(Error::NearSingular { p0: p[0] });
    }
    let mut acc = DenseMatrix::identity(n, n) * p[n];
    for k in (1..n).rev() {
        acc = &acc * m;
        for i in 0..n {
            acc[(i, i)] += p[k];
        }
    }
    Ok(acc * (-1.0 / p[0]))
}

/// `a · b mod modulus` for a monic `modulus`; all in ascending order.
fn poly_mul_mod(a: &[f64], b: &[f64], modulus: &[f64]) -> Vec<f64> {
    let n = modulus.len() - 1;
    let mut prod = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] += x * y;
        }
    }
    // x^n ≡ −Σ_{j<n} m_j x^j
    for k in (n..prod.len()).rev() {
        let c = prod[k];
        if c != 0.0 {
            for j in 0..n {
                prod[k - n + j] -= c * modulus[j];
            }
            prod[k] = 0.0;
        }
    }
    prod.truncate(n);
    prod.resize(n, 0.0);
    prod
}

/// Coefficients `γ` (length `n`) with `Σ γ_i Âⁱ = φ(Â)⁻¹`.
///
/// `φ(Â)⁻¹` is first written as a polynomial in `φ(Â)` via its
/// characteristic polynomial, expanded in powers of `Â`, and reduced modulo
/// the characteristic polynomial of `Â` so the degree stays below `n`.
pub fn polynomial_inverse_coeffs(filter: &FilterCoeffs, adj: &DenseMatrix) -> Result<Vec<f64>> {
    let n = check_square(adj, Some(MAX_CHAR_POLY_DIM))?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let phi = matrix_polynomial(&filter.coeffs, adj);
    let p_phi = char_poly(&phi)?.coeffs;
    let scale = phi.norm().max(1.0).powi(n as i32);
    if p_phi[0].abs() <= 1e-12 * scale {
        return Err(Error::NearSingular { p0: p_phi[0] });
    }
    // φ⁻¹ = Σ_{j<n} q_j φ^j
    let q: Vec<f64> = (0..n).map(|j| -p_phi[j + 1] / p_phi[0]).collect();
    let p_adj = char_poly(adj)?.coeffs;
    let phi_poly = {
        let mut c = filter.coeffs.clone();
        c.resize(c.len().max(1), 0.0);
        c
    };
    let mut acc = vec![0.0; n];
    acc[0] = q[n - 1];
    for j in (0..n - 1).rev() {
        acc = poly_mul_mod(&acc, &phi_poly, &p_adj);
        acc[0] += q[j];
    }
    Ok(acc)
}

/// Solves `φ(Â) X = Y` by LU.
pub fn exact_inverse_labels(filter: &FilterCoeffs, adj: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    let n = check_square(adj, None)?;
    if y.nrows() != n {
        return Err(Error::dims("exact_inverse_labels", (n, y.ncols()), y.shape()));
    }
    let phi = matrix_polynomial(&filter.coeffs, adj);
    phi.lu().solve(y).ok_or(Error::NearSingular { p0: 0.0 })
}

/// Minimum-norm least-squares solution of `a x = b` via SVD.
pub fn least_squares(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::dims("least_squares", (a.nrows(), b.ncols()), b.shape()));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = 1e-12 * smax.max(f64::MIN_POSITIVE);
    svd.solve(b, eps)
        .map_err(|e| Error::NumericFailure(format!("least squares: {e}")))
}

/// Result of the Vandermonde universality construction.
#[derive(Debug, Clone)]
pub struct UniversalityFit {
    /// Filter coefficients `θ_0 … θ_{n−1}`.
    pub filter: Vec<f64>,
    /// Linear head `W*` (length = feature dimension).
    pub head: Vec<f64>,
    /// `‖Σ θ_i Âⁱ F W* − target‖₂`, evaluated in the node domain.
    pub residual: f64,
    pub min_eigengap: f64,
}

/// Finds a polynomial filter and linear head that reproduce `target` exactly.
///
/// Requires a symmetric adjacency with distinct eigenvalues, and features
/// with a non-zero component along every eigenvector.
pub fn universality_fit(
    adj_sym: &DenseMatrix,
    f: &DenseMatrix,
    target: &DVector<f64>,
    rng: &mut impl Rng,
) -> Result<UniversalityFit> {
    let n = check_square(adj_sym, Some(MAX_CHAR_POLY_DIM))?;
    if f.nrows() != n || target.len() != n {
        return Err(Error::dims("universality_fit", (n, f.ncols()), f.shape()));
    }
    if (adj_sym - adj_sym.transpose()).amax() > 1e-12 {
        return Err(Error::InvalidData("universality_fit needs a symmetric adjacency".into()));
    }
    let eig = SymmetricEigen::new(adj_sym.clone());
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let min_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if min_gap <= EIGENGAP_TOL {
        return Err(Error::MultipleEigenvalues {
            gap: min_gap,
            tol: EIGENGAP_TOL,
        });
    }
    let u = &eig.eigenvectors;
    let f_spec = u.transpose() * f;
    for i in 0..n {
        if f_spec.row(i).norm() <= FREQUENCY_TOL {
            return Err(Error::MissingFrequency { index: i });
        }
    }

    // Any W* off the hyperplanes {W : F̃_i W = 0} works; keep the best of a
    // few random draws so the Vandermonde right-hand side stays moderate.
    let d = f.ncols();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for _ in 0..64 {
        let w = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = &f_spec * &w;
        let worst = c.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min) / w.norm();
        if worst > FREQUENCY_TOL && best.as_ref().is_none_or(|(_, b)| worst > *b) {
            best = Some((w, worst));
        }
    }
    let (w, _) = best.ok_or_else(|| Error::NumericFailure("no head avoids the null hyperplanes".into()))?;
    let c = &f_spec * &w;
    let y_spec = u.transpose() * target;
    let r = DVector::from_fn(n, |i, _| y_spec[i] / c[i]);
    let vander = DenseMatrix::from_fn(n, n, |i, j| eig.eigenvalues[i].powi(j as i32));
    let theta = vander
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::NumericFailure("Vandermonde system is singular".into()))?;

    // Horner on the vector F W*.
    let v = f * &w;
    let mut h = &v * theta[n - 1];
    for j in (0..n - 1).rev() {
        h = adj_sym * h + &v * theta[j];
    }
    let residual = (h - target).norm();
    Ok(UniversalityFit {
        filter: theta.iter().copied().collect(),
        head: w.iter().copied().collect(),
        residual,
        min_eigengap: min_gap,
    })
}
