use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{centroids, sq_dist, Clustering};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-10;

fn check_k(a: &DenseMatrix, k: usize) -> Result<()> {
    if k == 0 || k > a.rows() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={} (number of points)",
            a.rows()
        )));
    }
    Ok(())
}

/// Row indices chosen by k-means++ seeding.
///
/// Once every remaining point coincides with a chosen one, the rest are drawn
/// uniformly from the unchosen rows, so `k = m` selects every row once.
pub fn kmeanspp_seed_indices(a: &DenseMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_k(a, k)?;
    let m = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.random_range(0..m)];
    let mut dist: Vec<f64> = (0..m).map(|i| sq_dist(a.row(i), a.row(chosen[0]))).collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&dist) {
            Ok(w) => w.sample(&mut rng),
            Err(_) => {
                let free: Vec<usize> = (0..m).filter(|i| !chosen.contains(i)).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        let c = a.row(next);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(a.row(i), c));
        }
        dist[next] = 0.0;
    }
    Ok(chosen)
}

/// k-means++ initial centroids.
pub fn kmeanspp_init(a: &DenseMatrix, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    Ok(kmeanspp_seed_indices(a, k, seed)?
        .into_iter()
        .map(|i| a.row(i).to_vec())
        .collect())
}

/// Result of one Lloyd run.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub clustering: Clustering,
    pub centroids: Vec<Vec<f64>>,
    /// Objective after each iteration; non-increasing.
    pub objectives: Vec<f64>,
    pub iterations: usize,
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Moves the point farthest from its centroid, taken from a cluster of size
/// at least two, into each empty cluster.
fn repair_empty(a: &DenseMatrix, labels: &mut [usize], centroids: &[Vec<f64>], k: usize) {
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] > 1 {
                let d = sq_dist(a.row(i), &centroids[l]);
                if d > far_d {
                    far = Some(i);
                    far_d = d;
                }
            }
        }
        let i = far.expect("k <= m leaves a cluster with two points");
        sizes[labels[i]] -= 1;
        sizes[empty] += 1;
        labels[i] = empty;
    }
}

/// Lloyd iterations from `init` until the objective decrease drops below
/// `tol`, the centroids stop moving, or `max_iter` is reached.
pub fn lloyd(a: &DenseMatrix, k: usize, init: &[Vec<f64>], max_iter: usize, tol: f64) -> Result<LloydRun> {
    check_k(a, k)?;
    if init.len() != k || init.iter().any(|c| c.len() != a.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "expected {k} initial centroids of length {}",
            a.cols()
        )));
    }
    if max_iter == 0 || !(tol >= 0.0) {
        return Err(Error::InvalidArgument("max_iter must be positive and tol non-negative".into()));
    }
    let mut mu = init.to_vec();
    let mut objectives: Vec<f64> = Vec::new();
    let mut labels = vec![0; a.rows()];
    for iter in 1..=max_iter {
        for (i, l) in labels.iter_mut().enumerate() {
            *l = nearest(a.row(i), &mu);
        }
        repair_empty(a, &mut labels, &mu, k);
        let clustering = Clustering::new(k, labels.clone())?;
        let next = centroids(a, &clustering)?;
        let f: f64 = labels.iter().enumerate().map(|(i, &l)| sq_dist(a.row(i), &next[l])).sum();
        let stalled = next == mu;
        let converged = objectives.last().is_some_and(|&prev| prev - f < tol);
        objectives.push(f);
        mu = next;
        if stalled || converged || iter == max_iter {
            return Ok(LloydRun { clustering, centroids: mu, objectives, iterations: iter });
        }
    }
    unreachable!("loop returns on the last iteration")
}

#[cfg(test)]
mod tests {
    use super::super::{objective, tests::rectangle};
    use super::*;
    use rand_distr::StandardNormal;

    #[test]
    fn kmeanspp_k_equals_m_selects_everything() {
        let a = DenseMatrix::from_rows(&[[0.0], [1.0], [1.0], [5.0], [0.0]]).unwrap();
        for seed in 0..20 {
            let mut idx = kmeanspp_seed_indices(&a, 5, seed).unwrap();
            idx.sort_unstable();
            assert_eq!(idx, vec![0, 1, 2, 3, 4]);
        }
        assert!(kmeanspp_init(&a, 6, 0).is_err());
        assert!(kmeanspp_init(&a, 0, 0).is_err());
    }

    #[test]
    fn kmeanspp_duplicates() {
        let a = DenseMatrix::from_rows(&[[2.0, 3.0], [2.0, 3.0], [2.0, 3.0]]).unwrap();
        assert_eq!(kmeanspp_init(&a, 1, 4).unwrap(), vec![vec![2.0, 3.0]]);
    }

    #[test]
    fn kmeanspp_covers_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DenseMatrix::from_fn(40, 3, |i, _| {
            let centre = if i < 20 { 0.0 } else { 50.0 };
            let z: f64 = StandardNormal.sample(&mut rng);
            centre + z
        });
        let hits = (0..500)
            .filter(|&s| {
                let idx = kmeanspp_seed_indices(&a, 2, s).unwrap();
                (idx[0] < 20) != (idx[1] < 20)
            })
            .count();
        assert!(hits >= 475, "{hits}/500");
    }

    #[test]
    fn fixed_point_converges_in_one_iteration() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0], [4.0, 0.0], [1.0, 1.0], [4.0, 0.0], [-2.0, 7.0]]).unwrap();
        let init = vec![vec![1.0, 1.0], vec![4.0, 0.0], vec![-2.0, 7.0]];
        let run = lloyd(&a, 3, &init, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert_eq!(run.iterations, 1);
        assert_eq!(run.objectives, vec![0.0]);
    }

    #[test]
    fn rectangle_with_good_init() {
        let a = rectangle();
        let run = lloyd(&a, 2, &[vec![0.0, 0.0], vec![10.0, 0.0]], 300, 1e-10).unwrap();
        assert_eq!(run.clustering.assignment(), &[0, 0, 1, 1]);
        assert!((run.objectives.last().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_cluster_is_repaired() {
        let a = rectangle();
        let far_away = vec![vec![0.0, 1.0], vec![1e6, 1e6]];
        let run = lloyd(&a, 2, &far_away, 300, 1e-10).unwrap();
        assert_eq!(run.clustering.sizes().iter().filter(|&&s| s == 0).count(), 0);
        assert!((objective(&a, &run.clustering).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_smallest_index() {
        assert_eq!(nearest(&[0.0], &[vec![1.0], vec![-1.0]]), 0);
    }

    #[test]
    fn objective_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..30 {
            let m = rng.random_range(5..60);
            let a = DenseMatrix::from_fn(m, 4, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
            let k = rng.random_range(1..=m.min(7));
            let init = kmeanspp_init(&a, k, trial).unwrap();
            let run = lloyd(&a, k, &init, 300, 1e-10).unwrap();
            for w in run.objectives.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", run.objectives);
            }
            assert!((objective(&a, &run.clustering).unwrap() - run.objectives.last().unwrap()).abs() < 1e-9);
        }
    }
}
