use super::Clustering;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Largest point count accepted by exhaustive search.
pub const BRUTE_FORCE_MAX_POINTS: usize = 12;

struct Search<'a> {
    points: &'a DenseMatrix,
    k: usize,
    labels: Vec<usize>,
    sums: Vec<Vec<f64>>,
    sizes: Vec<usize>,
    best: Vec<usize>,
    best_gain: f64,
    leaves: u64,
}

impl Search<'_> {
    /// Σ_j ‖sum_j‖² / s_j; the objective is the total square norm minus this.
    fn gain(&self) -> f64 {
        self.sums
            .iter()
            .zip(&self.sizes)
            .map(|(s, &n)| s.iter().map(|x| x * x).sum::<f64>() / n as f64)
            .sum()
    }

    fn place(&mut self, i: usize, label: usize, sign: f64) {
        for (s, v) in self.sums[label].iter_mut().zip(self.points.row(i)) {
            *s += sign * v;
        }
    }

    /// Restricted growth strings with exactly `k` blocks; `used` blocks open so far.
    fn visit(&mut self, i: usize, used: usize) {
        let m = self.labels.len();
        if i == m {
            self.leaves += 1;
            let g = self.gain();
            if g > self.best_gain {
                self.best_gain = g;
                self.best.clone_from(&self.labels);
            }
            return;
        }
        let remaining = m - i;
        let top = if used < self.k { used + 1 } else { used };
        for label in 0..top {
            let opened = if label == used { used + 1 } else { used };
            if self.k - opened > remaining - 1 {
                continue;
            }
            self.labels[i] = label;
            self.sizes[label] += 1;
            self.place(i, label, 1.0);
            self.visit(i + 1, opened);
            self.place(i, label, -1.0);
            self.sizes[label] -= 1;
        }
    }
}

/// Globally optimal k-partition by enumerating every partition into exactly
/// `k` non-empty blocks. Ties keep the first partition in enumeration order.
pub fn brute_force_optimal(a: &DenseMatrix, k: usize) -> Result<Clustering> {
    let m = a.rows();
    if m > BRUTE_FORCE_MAX_POINTS {
        return Err(Error::Resource(format!(
            "exhaustive search limited to {BRUTE_FORCE_MAX_POINTS} points, got {m}"
        )));
    }
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={m}")));
    }
    // Centring leaves the objective unchanged and keeps the gain well scaled.
    let mean: Vec<f64> = (0..a.cols())
        .map(|j| a.column(j).iter().sum::<f64>() / m as f64)
        .collect();
    let centred = DenseMatrix::from_fn(m, a.cols(), |i, j| a[(i, j)] - mean[j]);
    let mut search = Search {
        points: &centred,
        k,
        labels: vec![0; m],
        sums: vec![vec![0.0; a.cols()]; k],
        sizes: vec![0; k],
        best: Vec::new(),
        best_gain: f64::NEG_INFINITY,
        leaves: 0,
    };
    search.visit(0, 0);
    Clustering::new(k, search.best)
}

#[cfg(test)]
mod tests {
    use super::super::{objective, tests::rectangle};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stirling2(n: usize, k: usize) -> u64 {
        let mut s = vec![vec![0u64; k + 1]; n + 1];
        s[0][0] = 1;
        for i in 1..=n {
            for j in 1..=k.min(i) {
                s[i][j] = j as u64 * s[i - 1][j] + s[i - 1][j - 1];
            }
        }
        s[n][k]
    }

    #[test]
    fn enumerates_every_partition_once() {
        let a = DenseMatrix::zeros(7, 1);
        for k in 1..=7 {
            let mut search = Search {
                points: &a,
                k,
                labels: vec![0; 7],
                sums: vec![vec![0.0]; k],
                sizes: vec![0; k],
                best: Vec::new(),
                best_gain: f64::NEG_INFINITY,
                leaves: 0,
            };
            search.visit(0, 0);
            assert_eq!(search.leaves, stirling2(7, k));
        }
    }

    #[test]
    fn single_cluster_and_singletons() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [3.0, 2.0], [-1.0, 4.0]]).unwrap();
        let one = brute_force_optimal(&a, 1).unwrap();
        assert_eq!(one.assignment(), &[0, 0, 0]);
        assert!((objective(&a, &one).unwrap() - (8.0 + 8.0)).abs() < 1e-12);
        let all = brute_force_optimal(&a, 3).unwrap();
        assert_eq!(objective(&a, &all).unwrap(), 0.0);
    }

    #[test]
    fn rectangle_split() {
        let c = brute_force_optimal(&rectangle(), 2).unwrap();
        assert_eq!(c.assignment(), &[0, 0, 1, 1]);
        assert!((objective(&rectangle(), &c).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn guard_and_validation() {
        let big = DenseMatrix::zeros(13, 2);
        assert!(matches!(brute_force_optimal(&big, 2), Err(Error::Resource(_))));
        assert!(brute_force_optimal(&rectangle(), 5).is_err());
        assert!(brute_force_optimal(&rectangle(), 0).is_err());
    }

    #[test]
    fn beats_random_clusterings() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let m = rng.random_range(4..10);
            let k = rng.random_range(1..=m.min(4));
            let a = DenseMatrix::from_fn(m, 3, |_, _| rng.random_range(-3.0..3.0));
            let best = objective(&a, &brute_force_optimal(&a, k).unwrap()).unwrap();
            for _ in 0..50 {
                let labels: Vec<usize> = (0..m).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
                let c = Clustering::new(k, labels).unwrap();
                assert!(best <= objective(&a, &c).unwrap() + 1e-9);
            }
        }
    }

    #[test]
    fn rank_k_residual_lower_bounds_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let m = rng.random_range(4..10);
            let k = rng.random_range(1..=3.min(m));
            let a = DenseMatrix::from_fn(m, 5, |_, _| rng.random_range(-3.0..3.0));
            let f_opt = objective(&a, &brute_force_optimal(&a, k).unwrap()).unwrap();
            let sv = crate::matrix::singular_values(&a);
            let tail: f64 = sv.iter().skip(k).map(|s| s * s).sum();
            assert!(tail <= f_opt + 1e-9 * f_opt.max(1.0));
        }
    }
}
