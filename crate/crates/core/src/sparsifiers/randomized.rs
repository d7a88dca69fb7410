use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::plan::SamplingPlan;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Leverage-score probabilities `p_i = ‖v_i‖² / k` of the columns of `V^T`.
pub fn leverage_probabilities(vt: &DenseMatrix) -> Vec<f64> {
    let k = vt.rows() as f64;
    vt.column_norms_sq().into_iter().map(|x| x / k).collect()
}

/// `r` i.i.d. leverage-score draws, each rescaled by `1/sqrt(p_i r)`.
///
/// All randomness comes from `seed`.
pub fn randomized_sampling(vt: &DenseMatrix, r: usize, seed: u64) -> Result<SamplingPlan> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be at least 1".into()));
    }
    let dev = vt
        .outer_gram()
        .sub(&DenseMatrix::identity(vt.rows()))?
        .max_abs();
    if dev > super::ORTHONORMAL_TOL {
        return Err(Error::InvalidArgument(format!(
            "V^T must have orthonormal rows (max deviation {dev:e})"
        )));
    }
    let probs = leverage_probabilities(vt);
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::InvalidArgument(format!("leverage scores unusable: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rf = r as f64;
    let indices: Vec<usize> = (0..r).map(|_| dist.sample(&mut rng)).collect();
    let weights = indices.iter().map(|&i| 1.0 / (probs[i] * rf).sqrt()).collect();
    SamplingPlan::new(vt.cols(), indices, weights)
}
