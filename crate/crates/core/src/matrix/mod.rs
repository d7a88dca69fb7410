//! Dense matrices, decompositions and norms.

mod dense;
mod eig;
mod randomized;
mod svd;

pub use dense::{dot, DenseMatrix};
pub use eig::{sym_eig, SymEig, SYMMETRY_TOL};
pub use randomized::{approx_svd_z, orthonormal_basis, residual, OVERSAMPLING, POWER_ITERATIONS};
pub use svd::{
    frobenius_norm, numerical_rank, numerical_rank_of, sigma_k, singular_values, spectral_norm, svd,
    svd_top_k, Svd, SvdTopK, RANK_TOL,
};
