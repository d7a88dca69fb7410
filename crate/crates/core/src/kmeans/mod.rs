//! Linear-algebraic k-means: partitions, indicator matrices, the objective,
//! and two clustering backends (exhaustive search and k-means++ with Lloyd).

mod brute;
mod lloyd;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub use brute::{brute_force_optimal, BRUTE_FORCE_MAX_POINTS};
pub use lloyd::{kmeanspp_init, kmeanspp_seed_indices, lloyd, LloydRun, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// A k-partition of `m` points into non-empty clusters. Labels are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clustering {
    num_clusters: usize,
    assignment: Vec<usize>,
}

impl Clustering {
    pub fn new(num_clusters: usize, assignment: Vec<usize>) -> Result<Self> {
        if num_clusters == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&l| l >= num_clusters) {
            return Err(Error::InvalidArgument(format!(
                "label {} outside 1..={num_clusters}",
                bad + 1
            )));
        }
        let sizes = cluster_sizes(num_clusters, &assignment);
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyCluster(empty + 1));
        }
        Ok(Self { num_clusters, assignment })
    }

    /// From 1-based labels, as read from a labels file.
    pub fn from_one_based(num_clusters: usize, labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::InvalidArgument("labels are 1-based".into()));
        }
        Self::new(num_clusters, labels.iter().map(|l| l - 1).collect())
    }

    pub fn num_points(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn sizes(&self) -> Vec<usize> {
        cluster_sizes(self.num_clusters, &self.assignment)
    }

    /// JSON view carrying the objective on `a`.
    pub fn report(&self, a: &DenseMatrix) -> Result<ClusteringJson> {
        Ok(ClusteringJson {
            k: self.num_clusters,
            assignment: self.assignment.iter().map(|l| l + 1).collect(),
            objective: objective(a, self)?,
        })
    }
}

fn cluster_sizes(k: usize, assignment: &[usize]) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for &l in assignment {
        if l < k {
            sizes[l] += 1;
        }
    }
    sizes
}

/// Serialized clustering: `{"k", "assignment" (1-based), "objective"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringJson {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub objective: f64,
}

impl TryFrom<&ClusteringJson> for Clustering {
    type Error = Error;

    fn try_from(j: &ClusteringJson) -> Result<Self> {
        Clustering::from_one_based(j.k, &j.assignment)
    }
}

/// Cluster indicator matrix: `X_ij = 1/sqrt(s_j)` iff point `i` is in cluster `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    matrix: DenseMatrix,
}

impl IndicatorMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Recovers the partition from the nonzero pattern.
    pub fn to_clustering(&self) -> Result<Clustering> {
        let k = self.matrix.cols();
        let assignment = (0..self.matrix.rows())
            .map(|i| {
                let nz: Vec<usize> = (0..k).filter(|&j| self.matrix[(i, j)] != 0.0).collect();
                match nz.as_slice() {
                    [j] => Ok(*j),
                    _ => Err(Error::InvalidArgument(format!(
                        "row {} of the indicator has {} nonzeros",
                        i + 1,
                        nz.len()
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Clustering::new(k, assignment)
    }

    /// `(I - X X^T) A`, each row minus its cluster centroid.
    pub fn residual(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        let xta = self.matrix.t_matmul(a)?;
        a.sub(&self.matrix.matmul(&xta)?)
    }
}

pub fn indicator(c: &Clustering) -> Result<IndicatorMatrix> {
    let sizes = c.sizes();
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(empty + 1));
    }
    let mut x = DenseMatrix::zeros(c.num_points(), c.num_clusters());
    for (i, &l) in c.assignment.iter().enumerate() {
        x[(i, l)] = 1.0 / (sizes[l] as f64).sqrt();
    }
    Ok(IndicatorMatrix { matrix: x })
}

/// Cluster means, one per label.
pub fn centroids(a: &DenseMatrix, c: &Clustering) -> Result<Vec<Vec<f64>>> {
    check_rows(a, c)?;
    let mut sums = vec![vec![0.0; a.cols()]; c.num_clusters()];
    for (i, &l) in c.assignment.iter().enumerate() {
        for (s, v) in sums[l].iter_mut().zip(a.row(i)) {
            *s += v;
        }
    }
    for (s, n) in sums.iter_mut().zip(c.sizes()) {
        s.iter_mut().for_each(|x| *x /= n as f64);
    }
    Ok(sums)
}

fn check_rows(a: &DenseMatrix, c: &Clustering) -> Result<()> {
    if a.rows() != c.num_points() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, clustering has {} points",
            a.rows(),
            c.num_points()
        )));
    }
    Ok(())
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means objective `Σ_i ‖p_i - μ(p_i)‖²`, equal to `‖A - X X^T A‖_F²`.
pub fn objective(a: &DenseMatrix, c: &Clustering) -> Result<f64> {
    let mu = centroids(a, c)?;
    let value: f64 = c
        .assignment
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(a.row(i), &mu[l]))
        .sum();
    #[cfg(debug_assertions)]
    {
        let matrix_form: f64 = objective_matrix_form(a, c)?;
        debug_assert!(
            (matrix_form - value).abs() <= 1e-8 * value.max(1.0),
            "centroid form {value} disagrees with matrix form {matrix_form}"
        );
    }
    Ok(value)
}

/// `‖A - X X^T A‖_F²` through the indicator matrix.
pub fn objective_matrix_form(a: &DenseMatrix, c: &Clustering) -> Result<f64> {
    check_rows(a, c)?;
    Ok(indicator(c)?.residual(a)?.frobenius_norm_sq())
}

/// Clustering routine used on reduced data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// Exhaustive search over all k-partitions (certified γ = 1).
    Brute,
    /// Best of `restarts` k-means++ seeded Lloyd runs.
    Lloyd { restarts: usize, max_iter: usize, tol: f64 },
}

impl Backend {
    pub fn lloyd(restarts: usize) -> Self {
        Backend::Lloyd { restarts, max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL }
    }

    /// Only exhaustive search certifies γ = 1.
    pub fn certified_gamma(&self) -> Option<f64> {
        match self {
            Backend::Brute => Some(1.0),
            Backend::Lloyd { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Brute => "brute",
            Backend::Lloyd { .. } => "lloyd",
        }
    }
}

/// Clusters the rows of `a` into `k` groups with the chosen backend.
pub fn cluster(a: &DenseMatrix, k: usize, backend: Backend, seed: u64) -> Result<Clustering> {
    match backend {
        Backend::Brute => brute_force_optimal(a, k),
        Backend::Lloyd { restarts, max_iter, tol } => {
            if restarts == 0 {
                return Err(Error::InvalidArgument("restarts must be at least 1".into()));
            }
            let mut best: Option<(f64, Clustering)> = None;
            for attempt in 0..restarts as u64 {
                let init = kmeanspp_init(a, k, seed.wrapping_add(attempt))?;
                let run = lloyd(a, k, &init, max_iter, tol)?;
                let f = objective(a, &run.clustering)?;
                if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                    best = Some((f, run.clustering));
                }
            }
            Ok(best.expect("at least one restart").1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn rectangle() -> DenseMatrix {
        DenseMatrix::from_rows(&[[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]]).unwrap()
    }

    fn random_clustering(m: usize, k: usize, rng: &mut ChaCha8Rng) -> Clustering {
        let mut labels: Vec<usize> = (0..m).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        for i in (1..m).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        Clustering::new(k, labels).unwrap()
    }

    #[test]
    fn indicator_direct_construction() {
        let c = Clustering::new(2, vec![0, 0, 1]).unwrap();
        let x = indicator(&c).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(x.matrix(), &DenseMatrix::from_rows(&[[h, 0.0], [h, 0.0], [0.0, 1.0]]).unwrap());

        let singletons = Clustering::new(3, vec![2, 0, 1]).unwrap();
        let x = indicator(&singletons).unwrap();
        assert_eq!(x.matrix(), &DenseMatrix::from_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap());
    }

    #[test]
    fn indicator_is_orthonormal_and_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = rng.random_range(3..30);
            let k = rng.random_range(1..=m.min(6));
            let c = random_clustering(m, k, &mut rng);
            let x = indicator(&c).unwrap();
            let xtx = x.matrix().t_matmul(x.matrix()).unwrap();
            assert!(xtx.sub(&DenseMatrix::identity(k)).unwrap().max_abs() < 1e-12);
            assert_eq!(x.to_clustering().unwrap(), c);
        }
    }

    #[test]
    fn empty_clusters_rejected() {
        assert_eq!(Clustering::new(3, vec![0, 0, 2]), Err(Error::EmptyCluster(2)));
        assert!(Clustering::new(2, vec![0, 2]).is_err());
        assert!(Clustering::from_one_based(2, &[0, 1]).is_err());
        assert_eq!(Clustering::from_one_based(2, &[2, 1, 1]).unwrap().assignment(), &[1, 0, 0]);
    }

    #[test]
    fn objective_hand_computed() {
        let a = rectangle();
        let split = Clustering::new(2, vec![0, 0, 1, 1]).unwrap();
        assert!((objective(&a, &split).unwrap() - 4.0).abs() < 1e-12);
        let dup = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [5.0, 0.0]]).unwrap();
        assert_eq!(objective(&dup, &Clustering::new(2, vec![0, 0, 1]).unwrap()).unwrap(), 0.0);
        assert!(objective(&a, &Clustering::new(2, vec![0, 1]).unwrap()).is_err());
    }

    #[test]
    fn objective_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let m = rng.random_range(2..25);
            let n = rng.random_range(1..8);
            let k = rng.random_range(1..=m.min(5));
            let a = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-5.0..5.0));
            let c = random_clustering(m, k, &mut rng);
            let f = objective(&a, &c).unwrap();
            let g = objective_matrix_form(&a, &c).unwrap();
            assert!((f - g).abs() <= 1e-9 * f.max(1e-300), "{f} vs {g}");
        }
    }

    #[test]
    fn clustering_json() {
        let a = rectangle();
        let c = Clustering::new(2, vec![0, 0, 1, 1]).unwrap();
        let j = c.report(&a).unwrap();
        let s = serde_json::to_string(&j).unwrap();
        assert_eq!(s, r#"{"k":2,"assignment":[1,1,2,2],"objective":4.0}"#);
        let back: ClusteringJson = serde_json::from_str(&s).unwrap();
        assert_eq!(Clustering::try_from(&back).unwrap(), c);
    }

    #[test]
    fn backends_find_rectangle_split() {
        let a = rectangle();
        for backend in [Backend::Brute, Backend::lloyd(5)] {
            let c = cluster(&a, 2, backend, 3).unwrap();
            assert!((objective(&a, &c).unwrap() - 4.0).abs() < 1e-12);
        }
        assert!(cluster(&a, 2, Backend::lloyd(0), 1).is_err());
        assert_eq!(Backend::Brute.certified_gamma(), Some(1.0));
        assert_eq!(Backend::lloyd(3).certified_gamma(), None);
    }
}
