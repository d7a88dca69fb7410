//! Randomized approximation of the top-k right singular subspace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::dot;
use super::svd::{numerical_rank_of, svd};
use super::DenseMatrix;
use crate::error::{Error, Result};

/// Extra test vectors beyond the target rank.
pub const OVERSAMPLING: usize = 10;
/// Subspace (power) iterations after the initial sketch.
pub const POWER_ITERATIONS: usize = 4;

/// Orthonormal basis `Z` (n×k) approximating the top-k right singular vectors of `a`.
///
/// Randomized subspace iteration with a Gaussian test matrix of width
/// `k + OVERSAMPLING`, `POWER_ITERATIONS` passes with re-orthonormalization,
/// then rank-k truncation of the projected problem `A Q`. The output always
/// has orthonormal columns and its residual `A - A Z Z^T` annihilates `Z`.
/// `epsilon` is the accuracy target of the expectation bound; the fixed
/// iteration schedule meets it on the supported range `(0, 1)`.
pub fn approx_svd_z(a: &DenseMatrix, k: usize, epsilon: f64, seed: u64) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    let p = m.min(n);
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={p}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    let width = (k + OVERSAMPLING).min(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DenseMatrix::from_fn(m, width, |_, _| StandardNormal.sample(&mut rng));

    let mut q = orthonormal_basis(&a.t_matmul(&g)?);
    for _ in 0..POWER_ITERATIONS {
        let w = orthonormal_basis(&a.matmul(&q)?);
        q = orthonormal_basis(&a.t_matmul(&w)?);
    }

    let projected = a.matmul(&q)?;
    let small = svd(&projected);
    let rank = numerical_rank_of(&small.singular_values);
    if rank < k {
        return Err(Error::RankDeficient { required: k, rank });
    }
    let wk = DenseMatrix::from_fn(q.cols(), k, |i, j| small.v[(i, j)]);
    q.matmul(&wk)
}

/// `A - A Z Z^T`.
pub fn residual(a: &DenseMatrix, z: &DenseMatrix) -> Result<DenseMatrix> {
    if z.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows but matrix has {} columns",
            z.rows(),
            a.cols()
        )));
    }
    let az = a.matmul(z)?;
    a.sub(&az.matmul(&z.transpose())?)
}

/// Orthonormal basis for the column space of `y` by twice-iterated modified
/// Gram-Schmidt. Columns that vanish after projection are dropped, so the
/// result may have fewer columns than `y` (but at least one).
pub fn orthonormal_basis(y: &DenseMatrix) -> DenseMatrix {
    let cols = y.columns();
    let scale = cols.iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut c in cols {
        for _ in 0..2 {
            for b in &basis {
                let h = dot(b, &c);
                for (x, bv) in c.iter_mut().zip(b) {
                    *x -= h * bv;
                }
            }
        }
        let norm = dot(&c, &c).sqrt();
        if norm > 1e-12 * scale && norm > 0.0 {
            c.iter_mut().for_each(|x| *x /= norm);
            basis.push(c);
        }
    }
    if basis.is_empty() {
        let mut e = vec![0.0; y.rows()];
        e[0] = 1.0;
        basis.push(e);
    }
    DenseMatrix::from_columns(&basis).expect("basis columns share a length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::svd_top_k;

    fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn exact_low_rank_is_recovered() {
        let a = gaussian(20, 3, 1).matmul(&gaussian(3, 15, 2)).unwrap();
        let z = approx_svd_z(&a, 3, 0.5, 7).unwrap();
        let e = residual(&a, &z).unwrap();
        assert!(e.frobenius_norm_sq().sqrt() < 1e-8);
    }

    #[test]
    fn contract_holds_for_every_seed() {
        let a = gaussian(30, 25, 3);
        for seed in 0..10 {
            let z = approx_svd_z(&a, 4, 0.5, seed).unwrap();
            let ztz = z.t_matmul(&z).unwrap();
            assert!(ztz.sub(&DenseMatrix::identity(4)).unwrap().max_abs() < 1e-9);
            let ez = residual(&a, &z).unwrap().matmul(&z).unwrap();
            assert!(ez.max_abs() < 1e-9);
        }
    }

    #[test]
    fn residual_cases() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let e1 = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        assert_eq!(residual(&a, &e1).unwrap(), DenseMatrix::from_rows(&[[0.0, 2.0]]).unwrap());
        let full = DenseMatrix::identity(2);
        assert_eq!(residual(&a, &full).unwrap().max_abs(), 0.0);
        assert!(residual(&a, &DenseMatrix::identity(3)).is_err());
    }

    #[test]
    fn residual_of_top_k_is_tail_energy() {
        let a = gaussian(9, 6, 4);
        let sv = crate::matrix::singular_values(&a);
        let s = svd_top_k(&a, 2).unwrap();
        let e = residual(&a, &s.right_vectors).unwrap();
        let tail: f64 = sv[2..].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((e.frobenius_norm_sq().sqrt() - tail).abs() < 1e-8);
    }

    #[test]
    fn argument_validation() {
        let a = gaussian(5, 4, 5);
        assert!(approx_svd_z(&a, 0, 0.5, 1).is_err());
        assert!(approx_svd_z(&a, 5, 0.5, 1).is_err());
        assert!(approx_svd_z(&a, 2, 1.0, 1).is_err());
        assert!(approx_svd_z(&a, 2, 0.0, 1).is_err());
    }
}
