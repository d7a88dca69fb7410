use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Column selection with rescaling: the pair (Ω, S) in compact form.
///
/// Column `j` of `A Ω S` is `weights[j] * A[:, indices[j]]`. Indices are
/// 0-based in memory and 1-based in the JSON form. The same column may
/// appear more than once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PlanJson", try_from = "PlanJson")]
pub struct SamplingPlan {
    source_dim: usize,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PlanJson {
    source_dim: usize,
    target_dim: usize,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl From<SamplingPlan> for PlanJson {
    fn from(p: SamplingPlan) -> Self {
        PlanJson {
            source_dim: p.source_dim,
            target_dim: p.indices.len(),
            indices: p.indices.iter().map(|i| i + 1).collect(),
            weights: p.weights,
        }
    }
}

impl TryFrom<PlanJson> for SamplingPlan {
    type Error = Error;

    fn try_from(j: PlanJson) -> Result<Self> {
        if j.target_dim != j.indices.len() {
            return Err(Error::DimensionMismatch(format!(
                "target_dim {} but {} indices",
                j.target_dim,
                j.indices.len()
            )));
        }
        if j.indices.contains(&0) {
            return Err(Error::InvalidArgument("plan indices are 1-based".into()));
        }
        SamplingPlan::new(j.source_dim, j.indices.iter().map(|i| i - 1).collect(), j.weights)
    }
}

impl SamplingPlan {
    pub fn new(source_dim: usize, indices: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if indices.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} indices but {} weights",
                indices.len(),
                weights.len()
            )));
        }
        if indices.is_empty() {
            return Err(Error::InvalidArgument("plan must select at least one column".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= source_dim) {
            return Err(Error::InvalidArgument(format!(
                "index {} outside 1..={source_dim}",
                bad + 1
            )));
        }
        if let Some(&w) = weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("weight {w} is not a positive finite real")));
        }
        Ok(Self { source_dim, indices, weights })
    }

    /// Every column once, unit weights.
    pub fn identity(n: usize) -> Self {
        Self { source_dim: n, indices: (0..n).collect(), weights: vec![1.0; n] }
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.indices.len()
    }

    /// 0-based column indices.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Composes `self` (n → c) with a second-stage plan over its output (c → r).
    ///
    /// The result realizes `Ω1 S1 Ω2 S2`: index is the first-stage index at
    /// the second-stage position, weight is the product of both weights.
    pub fn then(&self, next: &SamplingPlan) -> Result<SamplingPlan> {
        if next.source_dim != self.target_dim() {
            return Err(Error::DimensionMismatch(format!(
                "second stage expects {} inputs, first stage yields {}",
                next.source_dim,
                self.target_dim()
            )));
        }
        let indices = next.indices.iter().map(|&j| self.indices[j]).collect();
        let weights = next
            .indices
            .iter()
            .zip(&next.weights)
            .map(|(&j, &w)| self.weights[j] * w)
            .collect();
        SamplingPlan::new(self.source_dim, indices, weights)
    }

    /// The dense n×r matrix `Ω S`.
    pub fn to_matrix(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.source_dim, self.target_dim());
        for (j, (&i, &w)) in self.indices.iter().zip(&self.weights).enumerate() {
            m[(i, j)] = w;
        }
        m
    }
}

/// `A Ω S`: gathers and rescales the planned columns of `a`.
pub fn apply_plan(a: &DenseMatrix, plan: &SamplingPlan) -> Result<DenseMatrix> {
    if plan.source_dim != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "plan over {} columns applied to matrix with {}",
            plan.source_dim,
            a.cols()
        )));
    }
    Ok(DenseMatrix::from_fn(a.rows(), plan.target_dim(), |i, j| {
        plan.weights[j] * a[(i, plan.indices[j])]
    }))
}
