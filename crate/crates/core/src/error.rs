//! Error type shared by every module of the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar argument is outside its admissible range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    /// Fewer than `required` singular values exceed the numerical-rank threshold.
    #[error("rank deficient: need rank {required}, numerical rank is {rank}")]
    RankDeficient { required: usize, rank: usize },

    /// A potential was evaluated with its shift point on the wrong side of the spectrum.
    #[error("barrier violation: shift {shift} vs extreme eigenvalue {eigenvalue}")]
    BarrierViolation { shift: f64, eigenvalue: f64 },

    #[error("degenerate potential: barrier shift leaves the potential unchanged")]
    DegeneratePotential,

    /// No column satisfied the selection inequality at some greedy step.
    #[error(
        "no admissible column at step {step} (barrier {barrier}, best lower gain {best_lower}, \
         smallest upper gain {best_upper})"
    )]
    NumericalSearch {
        step: usize,
        barrier: f64,
        best_lower: f64,
        best_upper: f64,
    },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("resource limit: {0}")]
    Resource(String),

    /// The structural inequality needs rank(Z^T Ω S) = k.
    #[error("structural inequality inapplicable: sigma_k(Z^T Omega S) = {sigma_k:e}")]
    StructuralInapplicable { sigma_k: f64 },

    /// Stage-one leverage sampling lost rank on every attempt.
    #[error("stage-one sampling lost rank after {attempts} attempts")]
    StageOneRank { attempts: usize },
}
