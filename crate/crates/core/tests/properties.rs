use featsel::bounds::{theorem1_factor, theorem2_factor, theorem3_factor};
use featsel::cli::{read_matrix_csv, write_matrix_csv};
use featsel::kmeans::{
    brute_force_optimal, indicator, kmeanspp_init, lloyd, objective, objective_matrix_form, Clustering,
    ClusteringJson,
};
use featsel::matrix::{sigma_k, spectral_norm, DenseMatrix};
use featsel::sparsifiers::{
    apply_plan, deterministic_sampling_one, deterministic_sampling_two_identity, SamplingPlan,
};
use featsel::verify::{gaussian, random_orthonormal_rows};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(max_m: usize, max_n: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
        prop::collection::vec(-100.0..100.0f64, m * n).prop_map(move |d| DenseMatrix::new(m, n, d).unwrap())
    })
}

/// Matrix with `m ≥ k` rows plus a k-partition covering every cluster.
fn clustered(max_m: usize, max_n: usize, max_k: usize) -> impl Strategy<Value = (DenseMatrix, Clustering)> {
    (1..=max_k, 0..=max_m, 1..=max_n).prop_flat_map(|(k, extra, n)| {
        let m = k + extra;
        (
            prop::collection::vec(-50.0..50.0f64, m * n),
            prop::collection::vec(0..k, extra),
            Just((m, n, k)),
        )
            .prop_map(|(d, tail, (m, n, k))| {
                let labels: Vec<usize> = (0..k).chain(tail).collect();
                (DenseMatrix::new(m, n, d).unwrap(), Clustering::new(k, labels).unwrap())
            })
    })
}

fn plan(source_dim: usize, max_len: usize) -> impl Strategy<Value = SamplingPlan> {
    prop::collection::vec((0..source_dim, 0.01..10.0f64), 1..=max_len).prop_map(move |p| {
        let (i, w): (Vec<usize>, Vec<f64>) = p.into_iter().unzip();
        SamplingPlan::new(source_dim, i, w).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indicator_orthonormal_and_invertible((_, c) in clustered(20, 1, 6)) {
        let x = indicator(&c).unwrap();
        let xtx = x.matrix().gram();
        prop_assert!(xtx.sub(&DenseMatrix::identity(c.num_clusters())).unwrap().max_abs() < 1e-12);
        for i in 0..c.num_points() {
            prop_assert_eq!(x.matrix().row(i).iter().filter(|v| **v != 0.0).count(), 1);
        }
        prop_assert_eq!(x.to_clustering().unwrap(), c);
    }

    #[test]
    fn objective_forms_agree_and_are_non_negative((a, c) in clustered(25, 6, 5)) {
        let f = objective(&a, &c).unwrap();
        let g = objective_matrix_form(&a, &c).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert!((f - g).abs() <= 1e-9 * f.max(1e-9));
    }

    #[test]
    fn objective_zero_iff_points_sit_on_centroids((a, c) in clustered(12, 3, 4)) {
        let on_centroids = DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(c.assignment()[i], j)]);
        // Averaging identical values may round, so "zero" is relative to the data scale.
        let eps = 1e-24 * (1.0 + a.max_abs() * a.max_abs());
        prop_assert!(objective(&on_centroids, &c).unwrap() <= eps);
        let spread = (0..a.rows()).any(|i| {
            (0..a.rows()).any(|j| c.assignment()[i] == c.assignment()[j] && a.row(i) != a.row(j))
        });
        prop_assert_eq!(objective(&a, &c).unwrap() > eps, spread);
    }

    #[test]
    fn clustering_json_round_trip((a, c) in clustered(15, 3, 4)) {
        let j = c.report(&a).unwrap();
        let back: ClusteringJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        prop_assert_eq!(Clustering::try_from(&back).unwrap(), c);
        prop_assert_eq!(back.objective.to_bits(), j.objective.to_bits());
    }

    #[test]
    fn apply_plan_matches_dense_product((a, p) in matrix(6, 8).prop_flat_map(|a| {
        let n = a.cols();
        (Just(a), plan(n, 10))
    })) {
        let dense = a.matmul(&p.to_matrix()).unwrap();
        prop_assert!(apply_plan(&a, &p).unwrap().sub(&dense).unwrap().max_abs() <= 1e-12 * dense.max_abs().max(1.0));
    }

    #[test]
    fn plan_composition_matches_product(first in plan(9, 7), picks in prop::collection::vec((0..64usize, 0.01..5.0f64), 1..6)) {
        let c = first.target_dim();
        let (i, w): (Vec<usize>, Vec<f64>) = picks.into_iter().map(|(i, w)| (i % c, w)).unzip();
        let second = SamplingPlan::new(c, i, w).unwrap();
        let composed = first.then(&second).unwrap();
        let dense = first.to_matrix().matmul(&second.to_matrix()).unwrap();
        prop_assert!(composed.to_matrix().sub(&dense).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn plan_json_round_trip(p in plan(12, 9)) {
        let s = serde_json::to_string(&p).unwrap();
        prop_assert_eq!(serde_json::from_str::<SamplingPlan>(&s).unwrap(), p);
    }

    #[test]
    fn csv_round_trip_bit_exact(a in matrix(8, 8)) {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &a).unwrap();
        let back = read_matrix_csv(buf.as_slice(), false).unwrap();
        prop_assert!(a.as_slice().iter().zip(back.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn factor_ordering(k in 1usize..20, dr in 1usize..200, dn in 1usize..2000, gamma in 1.0..10.0f64) {
        let r = k + dr;
        let n = r + dn;
        let t1 = theorem1_factor(k, r, gamma).unwrap();
        prop_assert!(t1 < theorem2_factor(n, k, r, gamma).unwrap());
        prop_assert!(t1 > 1.0 + 4.0 * gamma);
        prop_assert!(theorem3_factor(k, r, gamma).unwrap() > 15.0 + 320.0 * gamma);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn brute_force_beats_any_partition((a, c) in clustered(9, 3, 3)) {
        let best = objective(&a, &brute_force_optimal(&a, c.num_clusters()).unwrap()).unwrap();
        prop_assert!(best <= objective(&a, &c).unwrap() + 1e-9 * best.max(1.0));
    }

    #[test]
    fn lloyd_history_non_increasing(a in matrix(40, 5), k in 1usize..6, seed in any::<u64>()) {
        let k = k.min(a.rows());
        let init = kmeanspp_init(&a, k, seed).unwrap();
        let run = lloyd(&a, k, &init, 300, 1e-10).unwrap();
        for w in run.objectives.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].max(1.0));
        }
        prop_assert!(run.clustering.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn sampler_two_bounds(k in 1usize..5, extra_r in 1usize..12, extra_n in 0usize..40, seed in any::<u64>()) {
        let r = k + extra_r;
        let n = (k + 1).max(r / 2) + extra_n;
        let vt = random_orthonormal_rows(k, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let p = deterministic_sampling_two_identity(&vt, r).unwrap();
        let s = sigma_k(&apply_plan(&vt, &p).unwrap(), k).unwrap();
        prop_assert!(s >= 1.0 - (k as f64 / r as f64).sqrt() - 1e-9);
        prop_assert!(spectral_norm(&p.to_matrix()) <= 1.0 + (n as f64 / r as f64).sqrt() + 1e-9);
    }

    #[test]
    fn sampler_one_bounds(k in 1usize..4, extra_r in 1usize..10, rows in 1usize..8, seed in any::<u64>()) {
        let r = k + extra_r;
        let n = r + 10;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vt = random_orthonormal_rows(k, n, &mut rng);
        let b = gaussian(rows, n, &mut rng);
        let p = deterministic_sampling_one(&vt, &b, r).unwrap();
        prop_assert!(sigma_k(&apply_plan(&vt, &p).unwrap(), k).unwrap() >= 1.0 - (k as f64 / r as f64).sqrt() - 1e-9);
        prop_assert!(apply_plan(&b, &p).unwrap().frobenius_norm_sq() <= b.frobenius_norm_sq() * (1.0 + 1e-9));
    }
}
