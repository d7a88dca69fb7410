//! Approximation factors of the three selection guarantees and instance-level
//! checks of the structural inequality behind them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{indicator, objective_matrix_form, Clustering};
use crate::matrix::{residual, singular_values, svd_top_k, DenseMatrix, RANK_TOL};
use crate::sparsifiers::{apply_plan, SamplingPlan, ORTHONORMAL_TOL};

/// Relative slack of every comparison.
pub const BOUND_SLACK: f64 = 1e-9;

/// Parameters an inequality was evaluated under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub gamma: f64,
    pub seed: Option<u64>,
}

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub factor: f64,
    pub holds: bool,
    pub context: BoundContext,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, factor: f64, context: BoundContext) -> Self {
        Self { name: name.into(), lhs, rhs, factor, holds: holds(lhs, rhs), context }
    }
}

/// `lhs ≤ rhs + 1e-9·max(1, rhs)`.
pub fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + BOUND_SLACK * rhs.max(1.0)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must be a finite real ≥ 1")));
    }
    Ok(())
}

fn check_k_r(k: usize, r: usize) -> Result<()> {
    if k == 0 || r <= k {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k < r, got k = {k}, r = {r}")));
    }
    Ok(())
}

fn gap(k: usize, r: usize) -> f64 {
    1.0 - (k as f64 / r as f64).sqrt()
}

/// `1 + 4γ / (1 - sqrt(k/r))²`, the supervised factor.
pub fn theorem1_factor(k: usize, r: usize, gamma: f64) -> Result<f64> {
    check_k_r(k, r)?;
    check_gamma(gamma)?;
    Ok(1.0 + 4.0 * gamma / gap(k, r).powi(2))
}

/// `1 + 4γ (1 + sqrt(n/r))² / (1 - sqrt(k/r))²`, the unsupervised factor.
pub fn theorem2_factor(n: usize, k: usize, r: usize, gamma: f64) -> Result<f64> {
    check_k_r(k, r)?;
    if r >= n {
        return Err(Error::InvalidArgument(format!("need r < n, got r = {r}, n = {n}")));
    }
    check_gamma(gamma)?;
    let spread = 1.0 + (n as f64 / r as f64).sqrt();
    Ok(1.0 + 4.0 * gamma * spread * spread / gap(k, r).powi(2))
}

/// `15 + 320γ ((1 + sqrt(16 k ln(20k) / r)) / (1 - sqrt(k/r)))²`, the randomized factor.
pub fn theorem3_factor(k: usize, r: usize, gamma: f64) -> Result<f64> {
    check_k_r(k, r)?;
    check_gamma(gamma)?;
    let kf = k as f64;
    let ratio = (1.0 + (16.0 * kf * (20.0 * kf).ln() / r as f64).sqrt()) / gap(k, r);
    Ok(15.0 + 320.0 * gamma * ratio * ratio)
}

struct Terms {
    lhs: f64,
    in_term: f64,
    sigma_k: f64,
    k: usize,
    r: usize,
}

/// Shared validation plus every term except those involving `E`.
fn common_terms(
    a: &DenseMatrix,
    basis: &DenseMatrix,
    in_clust: &Clustering,
    out_clust: &Clustering,
    plan: &SamplingPlan,
    gamma: f64,
) -> Result<Terms> {
    check_gamma(gamma)?;
    let (m, n) = a.shape();
    let k = basis.cols();
    if basis.rows() != n {
        return Err(Error::DimensionMismatch(format!("basis has {} rows, A has {n} columns", basis.rows())));
    }
    let dev = basis.gram().sub(&DenseMatrix::identity(k))?.max_abs();
    if dev > ORTHONORMAL_TOL {
        return Err(Error::InvalidArgument(format!(
            "basis must have orthonormal columns (max deviation {dev:e})"
        )));
    }
    if in_clust.num_points() != m || out_clust.num_points() != m {
        return Err(Error::DimensionMismatch(format!("clusterings must cover the {m} rows of A")));
    }
    if plan.source_dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "plan over {} columns, A has {n}",
            plan.source_dim()
        )));
    }
    let r = plan.target_dim();
    let sv = singular_values(&apply_plan(&basis.transpose(), plan)?);
    let sigma_k = if k <= sv.len() { sv[k - 1] } else { 0.0 };
    if sigma_k <= RANK_TOL * sv[0] || sigma_k == 0.0 {
        return Err(Error::StructuralInapplicable { sigma_k });
    }
    let in_residual = indicator(in_clust)?.residual(a)?;
    Ok(Terms {
        lhs: objective_matrix_form(a, out_clust)?,
        in_term: apply_plan(&in_residual, plan)?.frobenius_norm_sq(),
        sigma_k,
        k,
        r,
    })
}

fn report(name: &str, a: &DenseMatrix, t: &Terms, e: &DenseMatrix, plan: &SamplingPlan, gamma: f64) -> Result<BoundReport> {
    let factor = 2.0 * gamma / (t.sigma_k * t.sigma_k);
    let rhs = e.frobenius_norm_sq() + factor * (t.in_term + apply_plan(e, plan)?.frobenius_norm_sq());
    let context = BoundContext { m: a.rows(), n: a.cols(), k: t.k, r: t.r, gamma, seed: None };
    Ok(BoundReport::new(name, t.lhs, rhs, factor, context))
}

/// Structural inequality for an orthonormal `z` (n×k) and a selection `plan`:
///
/// `‖A - X_out X_outᵀ A‖² ≤ ‖E‖² + 2γ (‖(A - X_in X_inᵀ A) Ω S‖² + ‖E Ω S‖²) / σ_k²(Zᵀ Ω S)`
/// with `E = A - A Z Zᵀ`. The reported factor is `2γ / σ_k²(Zᵀ Ω S)`.
pub fn structural_check(
    a: &DenseMatrix,
    z: &DenseMatrix,
    in_clust: &Clustering,
    out_clust: &Clustering,
    plan: &SamplingPlan,
    gamma: f64,
) -> Result<BoundReport> {
    let t = common_terms(a, z, in_clust, out_clust, plan, gamma)?;
    let e = residual(a, z)?;
    report("structural", a, &t, &e, plan, gamma)
}

/// The structural inequality with `Z = V_k` and `E = A - A_k`, where `A_k` is
/// formed from the singular triplets rather than by projection.
pub fn top_k_structural_check(
    a: &DenseMatrix,
    k: usize,
    in_clust: &Clustering,
    out_clust: &Clustering,
    plan: &SamplingPlan,
    gamma: f64,
) -> Result<BoundReport> {
    let top = svd_top_k(a, k)?;
    let t = common_terms(a, &top.right_vectors, in_clust, out_clust, plan, gamma)?;
    let e = a.sub(&top.low_rank())?;
    report("structural_top_k", a, &t, &e, plan, gamma)
}
