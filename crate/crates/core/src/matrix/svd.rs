use serde::Serialize;

use super::dense::dot;
use super::DenseMatrix;
use crate::error::{Error, Result};

/// Singular values below `RANK_TOL * sigma_1` count as zero.
pub const RANK_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;
const ORTHO_TOL: f64 = 1e-15;

/// Thin SVD `A = U diag(σ) V^T` with `p = min(m, n)` triplets.
///
/// Left vectors belonging to zero singular values are zero columns.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

/// Top-k singular triplets of a matrix.
#[derive(Debug, Clone, Serialize)]
pub struct SvdTopK {
    pub k: usize,
    /// m×k, orthonormal columns.
    pub left_vectors: DenseMatrix,
    /// Strictly positive, non-increasing.
    pub singular_values: Vec<f64>,
    /// n×k, orthonormal columns.
    pub right_vectors: DenseMatrix,
}

impl SvdTopK {
    /// Best rank-k approximation `U_k Σ_k V_k^T`.
    pub fn low_rank(&self) -> DenseMatrix {
        let m = self.left_vectors.rows();
        let n = self.right_vectors.rows();
        DenseMatrix::from_fn(m, n, |i, j| {
            (0..self.k)
                .map(|l| self.left_vectors[(i, l)] * self.singular_values[l] * self.right_vectors[(j, l)])
                .sum()
        })
    }
}

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Right singular vectors are sign-normalized so their first nonzero
/// component is non-negative.
pub fn svd(a: &DenseMatrix) -> Svd {
    if a.rows() >= a.cols() {
        one_sided_jacobi(a)
    } else {
        let t = one_sided_jacobi(&a.transpose());
        // A^T = U' Σ V'^T, so A = V' Σ U'^T; redo the sign convention on the new right side.
        let mut out = Svd { u: t.v, singular_values: t.singular_values, v: t.u };
        normalize_signs(&mut out);
        out
    }
}

fn one_sided_jacobi(a: &DenseMatrix) -> Svd {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut w = a.columns();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = DenseMatrix::from_fn(m, n, |i, c| {
        let j = order[c];
        if norms[j] > 0.0 {
            w[j][i] / norms[j]
        } else {
            0.0
        }
    });
    let v = DenseMatrix::from_fn(n, n, |i, c| v[order[c]][i]);
    let mut out = Svd { u, singular_values, v };
    normalize_signs(&mut out);
    out
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

fn normalize_signs(svd: &mut Svd) {
    let p = svd.singular_values.len();
    for c in 0..p {
        let first = (0..svd.v.rows()).map(|i| svd.v[(i, c)]).find(|x| *x != 0.0);
        if matches!(first, Some(x) if x < 0.0) {
            for i in 0..svd.v.rows() {
                svd.v[(i, c)] = -svd.v[(i, c)];
            }
            for i in 0..svd.u.rows() {
                svd.u[(i, c)] = -svd.u[(i, c)];
            }
        }
    }
}

/// All `min(m, n)` singular values, non-increasing.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    svd(a).singular_values
}

/// Number of singular values above `RANK_TOL * sigma_1`.
pub fn numerical_rank_of(values: &[f64]) -> usize {
    match values.first() {
        Some(&s1) if s1 > 0.0 => values.iter().filter(|&&s| s > RANK_TOL * s1).count(),
        _ => 0,
    }
}

pub fn numerical_rank(a: &DenseMatrix) -> usize {
    numerical_rank_of(&singular_values(a))
}

/// Top-k singular triplets; `A V_k V_k^T` is the best rank-k approximation.
pub fn svd_top_k(a: &DenseMatrix, k: usize) -> Result<SvdTopK> {
    if k == 0 || k > a.rows().min(a.cols()) {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            a.rows().min(a.cols())
        )));
    }
    let full = svd(a);
    let rank = numerical_rank_of(&full.singular_values);
    if rank < k {
        return Err(Error::RankDeficient { required: k, rank });
    }
    let left_vectors = DenseMatrix::from_fn(a.rows(), k, |i, j| full.u[(i, j)]);
    let right_vectors = DenseMatrix::from_fn(a.cols(), k, |i, j| full.v[(i, j)]);
    Ok(SvdTopK {
        k,
        left_vectors,
        singular_values: full.singular_values[..k].to_vec(),
        right_vectors,
    })
}

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.frobenius_norm_sq().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    singular_values(a)[0]
}

/// k-th largest singular value (1-based `k`).
pub fn sigma_k(a: &DenseMatrix, k: usize) -> Result<f64> {
    let p = a.rows().min(a.cols());
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("sigma index {k} outside 1..={p}")));
    }
    Ok(singular_values(a)[k - 1])
}
