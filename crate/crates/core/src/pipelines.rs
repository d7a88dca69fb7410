//! End-to-end feature selection: supervised and unsupervised deterministic
//! selection, two-stage randomized selection, and select-then-cluster runs.

use serde::{Deserialize, Serialize};

use crate::bounds::{theorem1_factor, theorem2_factor, theorem3_factor, BoundContext, BoundReport};
use crate::error::{Error, Result};
use crate::kmeans::{
    brute_force_optimal, cluster, indicator, objective, Backend, Clustering, ClusteringJson,
    BRUTE_FORCE_MAX_POINTS,
};
use crate::matrix::{approx_svd_z, residual, singular_values, svd_top_k, DenseMatrix};
use crate::sparsifiers::{
    apply_plan, deterministic_sampling_one, deterministic_sampling_two_identity, randomized_sampling,
    SamplingPlan,
};

/// Accuracy parameter of the approximate SVD inside randomized selection.
pub const RANDOMIZED_EPSILON: f64 = 0.5;
/// Reseeded attempts after the first when stage one loses rank.
pub const STAGE_ONE_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Supervised,
    Unsupervised,
    Randomized,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Supervised => "supervised",
            Method::Unsupervised => "unsupervised",
            Method::Randomized => "randomized",
        }
    }
}

/// Selected and rescaled columns `C = A Ω S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSelection {
    pub method: Method,
    pub k: usize,
    pub r: usize,
    pub seed: Option<u64>,
    /// Columns kept by the first randomized stage.
    pub stage1_size: Option<usize>,
    pub plan: SamplingPlan,
    #[serde(skip)]
    pub reduced: DenseMatrix,
    /// The n×k orthonormal basis the selection was driven by (`V_k` or `Z`).
    #[serde(skip)]
    pub basis: DenseMatrix,
}

/// SplitMix64 step: independent-looking seeds for distinct streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `c = max(r, ceil(16 k ln(20k)))`.
pub fn stage1_size(k: usize, r: usize) -> usize {
    let kf = k as f64;
    r.max((16.0 * kf * (20.0 * kf).ln()).ceil() as usize)
}

fn check_deterministic(a: &DenseMatrix, k: usize, r: usize) -> Result<()> {
    let n = a.cols();
    if k == 0 || r <= k || r >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ k < r < n, got k = {k}, r = {r}, n = {n}"
        )));
    }
    Ok(())
}

fn finish(
    a: &DenseMatrix,
    method: Method,
    k: usize,
    seed: Option<u64>,
    stage1_size: Option<usize>,
    plan: SamplingPlan,
    basis: DenseMatrix,
) -> Result<FeatureSelection> {
    let reduced = apply_plan(a, &plan)?;
    Ok(FeatureSelection { method, k, r: plan.target_dim(), seed, stage1_size, plan, reduced, basis })
}

/// Deterministic selection guided by a given k-partition of the rows.
pub fn supervised_select(a: &DenseMatrix, given: &Clustering, k: usize, r: usize) -> Result<FeatureSelection> {
    check_deterministic(a, k, r)?;
    if given.num_clusters() != k || given.num_points() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "given clustering has {} clusters over {} points, expected {k} over {}",
            given.num_clusters(),
            given.num_points(),
            a.rows()
        )));
    }
    let vk = svd_top_k(a, k)?.right_vectors;
    let b = residual(a, &vk)?.vstack(&indicator(given)?.residual(a)?)?;
    let plan = deterministic_sampling_one(&vk.transpose(), &b, r)?;
    finish(a, Method::Supervised, k, None, None, plan, vk)
}

/// Deterministic selection from `A`, `k`, `r` alone.
pub fn unsupervised_select(a: &DenseMatrix, k: usize, r: usize) -> Result<FeatureSelection> {
    check_deterministic(a, k, r)?;
    let vk = svd_top_k(a, k)?.right_vectors;
    let plan = deterministic_sampling_two_identity(&vk.transpose(), r)?;
    finish(a, Method::Unsupervised, k, None, None, plan, vk)
}

/// Leverage-score sampling of `c` columns, then deterministic selection of `r`
/// among them. When `c ≥ n` the first stage keeps every column.
pub fn randomized_select(a: &DenseMatrix, k: usize, r: usize, seed: u64) -> Result<FeatureSelection> {
    if k == 0 || r <= k {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k < r, got k = {k}, r = {r}")));
    }
    let z = approx_svd_z(a, k, RANDOMIZED_EPSILON, seed)?;
    let zt = z.transpose();
    let c = stage1_size(k, r);
    let n = a.cols();
    if c >= n {
        let plan = deterministic_sampling_two_identity(&zt, r)?;
        return finish(a, Method::Randomized, k, Some(seed), Some(n), plan, z);
    }
    for attempt in 0..=STAGE_ONE_RETRIES as u64 {
        let stage1 = randomized_sampling(&zt, c, derive_seed(seed, attempt))?;
        let sampled = apply_plan(&zt, &stage1)?;
        let top = match svd_top_k(&sampled, k) {
            Ok(top) => top,
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        };
        let stage2 = deterministic_sampling_two_identity(&top.right_vectors.transpose(), r)?;
        let plan = stage1.then(&stage2)?;
        return finish(a, Method::Randomized, k, Some(seed), Some(c), plan, z);
    }
    Err(Error::StageOneRank { attempts: STAGE_ONE_RETRIES + 1 })
}

/// Runs the pipeline for `method`. Only the supervised method reads `labels`.
pub fn select(
    a: &DenseMatrix,
    k: usize,
    r: usize,
    method: Method,
    labels: Option<&Clustering>,
    seed: u64,
) -> Result<FeatureSelection> {
    match method {
        Method::Supervised => {
            let given = labels.ok_or_else(|| {
                Error::InvalidArgument("the supervised method needs a labelled partition".into())
            })?;
            supervised_select(a, given, k, r)
        }
        Method::Unsupervised => unsupervised_select(a, k, r),
        Method::Randomized => randomized_select(a, k, r, seed),
    }
}

/// What the original-space objective is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Objective of the supplied partition.
    GivenPartition,
    /// Exact optimum by exhaustive search.
    Optimal,
    /// `‖A - A_k‖_F²`, which never exceeds the optimum.
    RankKLowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub selection: FeatureSelection,
    pub backend: Backend,
    pub clustering: ClusteringJson,
    pub reduced_objective: f64,
    pub original_objective: f64,
    pub reference_objective: f64,
    pub reference_kind: ReferenceKind,
    /// Whether the backend certifies the γ used for the factor.
    pub gamma_certified: bool,
    pub bound: BoundReport,
    pub bound_holds: bool,
}

/// Approximation factor of `method` at γ.
pub fn method_factor(method: Method, n: usize, k: usize, r: usize, gamma: f64) -> Result<f64> {
    match method {
        Method::Supervised => theorem1_factor(k, r, gamma),
        Method::Unsupervised => theorem2_factor(n, k, r, gamma),
        Method::Randomized => theorem3_factor(k, r, gamma),
    }
}

/// Selects features, clusters `C` with `backend`, and checks the original-space
/// objective against the method's factor times a reference objective.
///
/// The factor uses γ = 1; `gamma_certified` is true only for exhaustive search.
pub fn select_then_cluster(
    a: &DenseMatrix,
    k: usize,
    r: usize,
    method: Method,
    labels: Option<&Clustering>,
    backend: Backend,
    seed: u64,
) -> Result<SelectionReport> {
    let selection = select(a, k, r, method, labels, seed)?;
    let out = cluster(&selection.reduced, k, backend, seed)?;
    let reduced_objective = objective(&selection.reduced, &out)?;
    let original_objective = objective(a, &out)?;
    let (reference_objective, reference_kind) = match (method, labels) {
        (Method::Supervised, Some(given)) => (objective(a, given)?, ReferenceKind::GivenPartition),
        _ if a.rows() <= BRUTE_FORCE_MAX_POINTS => {
            (objective(a, &brute_force_optimal(a, k)?)?, ReferenceKind::Optimal)
        }
        _ => {
            let tail = singular_values(a).iter().skip(k).map(|s| s * s).sum();
            (tail, ReferenceKind::RankKLowerBound)
        }
    };
    let gamma = 1.0;
    let factor = method_factor(method, a.cols(), k, selection.r, gamma)?;
    let context = BoundContext {
        m: a.rows(),
        n: a.cols(),
        k,
        r: selection.r,
        gamma,
        seed: selection.seed,
    };
    let bound = BoundReport::new(method.name(), original_objective, factor * reference_objective, factor, context);
    Ok(SelectionReport {
        clustering: ClusteringJson {
            k,
            assignment: out.assignment().iter().map(|l| l + 1).collect(),
            objective: original_objective,
        },
        selection,
        backend,
        reduced_objective,
        original_objective,
        reference_objective,
        reference_kind,
        gamma_certified: backend.certified_gamma().is_some(),
        bound_holds: bound.holds,
        bound,
    })
}
