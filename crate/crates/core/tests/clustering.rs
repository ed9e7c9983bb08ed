use ndarray::{array, concatenate, Array1, Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ucsl::clustering::{fit_gmm, fit_kmeans, gmm_posterior, kmeans_assign, KmeansModel, ROW_SUM_TOLERANCE};

fn blob(rng: &mut ChaCha8Rng, n: usize, center: &[f64], scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, center.len()), |(_, j)| center[j] + scale * rng.sample::<f64, _>(StandardNormal))
}

fn mixture(seed: u64, centers: &[&[f64]], n: usize, scale: f64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<Array2<f64>> = centers.iter().map(|c| blob(&mut rng, n, c, scale)).collect();
    let views: Vec<_> = blobs.iter().map(|b| b.view()).collect();
    let truth = (0..centers.len()).flat_map(|c| std::iter::repeat_n(c, n)).collect();
    (concatenate(Axis(0), &views).unwrap(), truth)
}

#[test]
fn gmm_recovers_blob_means() {
    let (x, _) = mixture(1, &[&[-10.0, 0.0], &[10.0, 0.0]], 200, 1.0);
    let model = fit_gmm(x.view(), 2, 4, 1).unwrap();
    for blob in [x.slice(ndarray::s![..200, ..]), x.slice(ndarray::s![200.., ..])] {
        let mean = blob.mean_axis(Axis(0)).unwrap();
        let closest = model
            .means
            .rows()
            .into_iter()
            .map(|m| (&m - &mean).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b)))
            .fold(f64::INFINITY, f64::min);
        assert!(closest < 0.5, "{closest}");
    }
    let again = fit_gmm(x.view(), 2, 4, 1).unwrap();
    assert_eq!(model, again);
}

#[test]
fn posterior_at_a_component_mean_is_confident() {
    let (x, _) = mixture(2, &[&[-10.0, 0.0], &[10.0, 0.0]], 100, 1.0);
    let model = fit_gmm(x.view(), 2, 0, 1).unwrap();
    let post = gmm_posterior(&model, model.means.view()).unwrap();
    // independent density ratio from the log joint at each mean
    let lj = model.log_joint(model.means.view()).unwrap();
    for c in 0..2 {
        let other = 1 - c;
        let ratio = (lj[[c, other]] - lj[[c, c]]).exp();
        let oracle = 1.0 / (1.0 + ratio);
        assert!((post.values()[[c, c]] - oracle).abs() < 1e-12);
        assert!(post.values()[[c, c]] >= 0.999);
    }
}

#[test]
fn em_log_likelihood_never_decreases() {
    for seed in 0..10 {
        let (x, _) = mixture(seed, &[&[-1.5, 0.0, 0.0], &[1.5, 0.5, 0.0], &[0.0, 2.0, 1.0]], 60, 1.0);
        let model = fit_gmm(x.view(), 3, seed, 1).unwrap();
        for w in model.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn jensen_bound_is_tight_at_the_posterior() {
    let (x, _) = mixture(3, &[&[-2.0, 0.0], &[2.0, 0.0], &[0.0, 3.0]], 50, 1.0);
    let model = fit_gmm(x.view(), 3, 1, 1).unwrap();
    let lj = model.log_joint(x.view()).unwrap();
    let q = gmm_posterior(&model, x.view()).unwrap();
    let marginal = model.score_samples(x.view()).unwrap();
    for i in 0..x.nrows() {
        let bound: f64 = (0..3)
            .map(|k| {
                let qk = q.values()[[i, k]];
                if qk > 0.0 { qk * (lj[[i, k]] - qk.ln()) } else { 0.0 }
            })
            .sum();
        assert!((bound - marginal[i]).abs() < 1e-8, "row {i}: {bound} vs {}", marginal[i]);
        // any other distribution gives a strictly lower bound
        let flat: f64 = (0..3).map(|k| (lj[[i, k]] - (1.0f64 / 3.0).ln()) / 3.0).sum();
        assert!(flat <= marginal[i] + 1e-12);
    }
}

#[test]
fn kmeans_beats_random_centroids() {
    let (x, _) = mixture(4, &[&[0.0, 0.0], &[3.0, 1.0], &[1.0, 4.0]], 40, 1.0);
    let model = fit_kmeans(x.view(), 3, 9, 3).unwrap();
    assert!((model.inertia - KmeansModel::inertia_of(x.view(), &model.centroids)).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let centroids = Array2::from_shape_simple_fn((3, 2), || rng.random_range(-2.0..5.0));
        assert!(model.inertia <= KmeansModel::inertia_of(x.view(), &centroids) + 1e-9);
    }
    assert!(model.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn kmeans_matches_exhaustive_two_partition() {
    let (x, truth) = mixture(5, &[&[-8.0, 0.0], &[8.0, 1.0]], 6, 1.0);
    let n = x.nrows();
    let mut best = (f64::INFINITY, 0u32);
    for mask in 1..(1u32 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        let mut inertia = 0.0;
        for c in 0..2 {
            let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            let part = x.select(Axis(0), &rows);
            let mean = part.mean_axis(Axis(0)).unwrap();
            inertia += part.rows().into_iter().map(|r| (&r - &mean).mapv(|v| v * v).sum()).sum::<f64>();
        }
        if inertia < best.0 {
            best = (inertia, mask);
        }
    }
    let exhaustive: Vec<usize> = (0..n).map(|i| ((best.1 >> i) & 1) as usize).collect();
    let model = fit_kmeans(x.view(), 2, 0, 1).unwrap();
    let labels = model.labels(x.view()).unwrap();
    assert_eq!(ucsl::metrics::adjusted_rand_index(&labels, &exhaustive).unwrap(), 1.0);
    assert_eq!(ucsl::metrics::adjusted_rand_index(&labels, &truth).unwrap(), 1.0);
    assert!((model.inertia - best.0).abs() < 1e-9);
}

#[test]
fn kmeans_with_one_centroid_per_point() {
    let x = array![[0.0, 0.0], [1.0, 5.0], [-3.0, 2.0], [4.0, 4.0]];
    let model = fit_kmeans(x.view(), 4, 0, 1).unwrap();
    assert_eq!(model.inertia, 0.0);
    let assign = kmeans_assign(&model, x.view()).unwrap();
    let mut labels = assign.hard_labels();
    labels.sort();
    assert_eq!(labels, vec![0, 1, 2, 3]);
}

#[test]
fn too_few_samples() {
    let x = array![[0.0], [1.0]];
    assert!(fit_gmm(x.view(), 3, 0, 1).is_err());
    assert!(fit_kmeans(x.view(), 3, 0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn posterior_rows_sum_to_one(seed in 0u64..1000, k in 1usize..4, shift in -50.0f64..50.0) {
        let (x, _) = mixture(seed, &[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]], 15, 1.0);
        let model = fit_gmm(x.view(), k, seed, 1).unwrap();
        let probe = x.mapv(|v| v * 3.0 + shift);
        let q = gmm_posterior(&model, probe.view()).unwrap();
        prop_assert!(q.is_row_stochastic(ROW_SUM_TOLERANCE));
        prop_assert!(q.values().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        if k == 1 {
            prop_assert!(q.values().iter().all(|&v| v == 1.0));
            let mean: Array1<f64> = x.mean_axis(Axis(0)).unwrap();
            prop_assert!((&model.means.row(0) - &mean).iter().all(|d| d.abs() < 1e-12));
        }
    }
}
