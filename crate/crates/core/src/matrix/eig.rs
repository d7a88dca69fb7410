use serde::Serialize;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Asymmetry tolerated by [`sym_eig`], relative to `max(1, max|m_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

/// Full spectral decomposition `M = Q diag(λ) Q^T` of a symmetric matrix.
#[derive(Debug, Clone, Serialize)]
pub struct SymEig {
    /// Eigenvalues in non-decreasing order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `eigenvalues`.
    pub eigenvectors: DenseMatrix,
}

impl SymEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// `Q diag(λ) Q^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let q = &self.eigenvectors;
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|l| q[(i, l)] * self.eigenvalues[l] * q[(j, l)]).sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Coordinates of `x` in the eigenbasis, `Q^T x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let q = &self.eigenvectors;
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &qv) in out.iter_mut().zip(q.row(i)) {
                *o += qv * xi;
            }
        }
        out
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEig> {
    let asym = m.asymmetry().ok_or_else(|| {
        Error::DimensionMismatch(format!("eigendecomposition needs a square matrix, got {}x{}", m.rows(), m.cols()))
    })?;
    if asym > SYMMETRY_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let mut a = m.clone();
    a.symmetrize();
    Ok(jacobi(a))
}

fn jacobi(mut a: DenseMatrix) -> SymEig {
    let n = a.rows();
    let mut v = DenseMatrix::identity(n);
    let total = a.frobenius_norm_sq();

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off <= f64::EPSILON * f64::EPSILON * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        let np = c * akp - s * akq;
                        let nq = s * akp + c * akq;
                        a[(k, p)] = np;
                        a[(p, k)] = np;
                        a[(k, q)] = nq;
                        a[(q, k)] = nq;
                    }
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEig { eigenvalues, eigenvectors }
}
