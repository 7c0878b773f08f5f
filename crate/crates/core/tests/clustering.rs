use std::collections::HashMap;

use lss_core::{
    allocate_by_weights, cluster_stats, fit_kmeans, lloyd, nearest_index, potential, train_kmeans,
    AllocationPolicy, KMeansConfig, Model,
};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

fn zipf_samples(n: usize, support: f64, seed: u64) -> Vec<f64> {
    let zipf = Zipf::new(support, 1.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| zipf.sample(&mut rng).round()).collect()
}

#[test]
fn zipf_fit_close_to_best_random_restart() {
    let samples = zipf_samples(1_000, 1_000.0, 7);
    let ours = fit_kmeans(&samples, &KMeansConfig::with_k(30)).unwrap();

    let mut distinct = samples.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let best = (0..20)
        .map(|_| {
            let init: Vec<f64> = sample(&mut rng, distinct.len(), 30)
                .iter()
                .map(|i| distinct[i])
                .collect();
            lloyd(&samples, &init, 100, 1e-4).unwrap().potential()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(
        ours.potential() <= best * 1.05,
        "ours {} vs best restart {best}",
        ours.potential()
    );
}

#[test]
fn potential_never_increases_on_zipf() {
    let samples = zipf_samples(5_000, 10_000.0, 3);
    let fit = fit_kmeans(&samples, &KMeansConfig::with_k(30)).unwrap();
    for w in fit.potentials.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
    }
    let direct = potential(&samples, &fit.centers);
    assert!((direct - fit.potential()).abs() <= 1e-9 * direct.max(1.0));
}

#[test]
fn stats_match_histogram_recount() {
    let samples = zipf_samples(2_000, 1_000.0, 11);
    let model = Model::fit(&samples, &KMeansConfig::with_k(30)).unwrap();
    let centers = model.centers().as_slice();

    // Independent one-pass recount: per-cluster histogram by linear-scan assignment.
    let mut hist: Vec<HashMap<u64, u64>> = vec![HashMap::new(); centers.len()];
    for &v in &samples {
        let mut best = 0;
        for (i, c) in centers.iter().enumerate() {
            if (v - c).abs() < (v - centers[best]).abs() {
                best = i;
            }
        }
        *hist[best].entry(v as u64).or_default() += 1;
    }
    let center_sum: f64 = centers.iter().sum();
    let mut d_sum = 0.0;
    let mut w_sum = 0.0;
    for (i, s) in model.stats().iter().enumerate() {
        let size: u64 = hist[i].values().sum();
        assert_eq!(s.size, size);
        assert_eq!(s.distinct, hist[i].len());
        let density = size as f64 / samples.len() as f64;
        assert!((s.density - density).abs() < 1e-12);
        assert!((s.weight - centers[i] / center_sum).abs() < 1e-12);
        let h = if hist[i].len() < 2 {
            0.0
        } else {
            let raw: f64 = hist[i]
                .values()
                .map(|&c| {
                    let f = c as f64 / size as f64;
                    -f * f.log2()
                })
                .sum();
            raw / (hist[i].len() as f64).log2()
        };
        assert!(
            (s.entropy - h).abs() < 1e-9,
            "cluster {i}: {} vs {h}",
            s.entropy
        );
        assert!((0.0..=1.0).contains(&s.entropy));
        d_sum += s.density;
        w_sum += s.weight;
    }
    assert!((d_sum - 1.0).abs() < 1e-9);
    assert!((w_sum - 1.0).abs() < 1e-9);
}

#[test]
fn nearest_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut centers: Vec<f64> = (0..30)
        .map(|_| rng.random_range(0.0..1_000.0f64).round())
        .collect();
    centers.sort_by(f64::total_cmp);
    centers.dedup();
    for _ in 0..10_000 {
        let v = rng.random_range(-50.0..1_100.0f64);
        let mut best = 0;
        for i in 1..centers.len() {
            if (v - centers[i]).abs() < (v - centers[best]).abs() {
                best = i;
            }
        }
        assert_eq!(nearest_index(&centers, v), best, "value {v}");
    }
    // Exact midpoints go to the lower index.
    for i in 0..centers.len() - 1 {
        let mid = (centers[i] + centers[i + 1]) / 2.0;
        assert_eq!(nearest_index(&centers, mid), i);
    }
}

#[test]
fn retraining_on_a_new_epoch_moves_centers_little() {
    let a = zipf_samples(10_000, 1_000.0, 100);
    let b = zipf_samples(10_000, 1_000.0, 200);
    let ca = train_kmeans(&a, 30, 100, 1e-4, 0).unwrap();
    let cb = train_kmeans(&b, 30, 100, 1e-4, 0).unwrap();
    assert_eq!(ca.len(), cb.len());
    for (x, y) in ca.iter().zip(&cb) {
        assert!((x - y).abs() / x.max(*y) < 0.2, "centers {x} and {y}");
    }
}

#[test]
fn f32_and_f64_models_agree() {
    let samples = zipf_samples(1_000, 500.0, 8);
    let s32: Vec<f32> = samples.iter().map(|&v| v as f32).collect();
    let m64 = Model::fit(&samples, &KMeansConfig::with_k(8)).unwrap();
    let m32 = lss_core::Model32::fit(&s32, &KMeansConfig::with_k(8)).unwrap();
    assert_eq!(m64.k(), m32.k());
    for (a, b) in m64
        .centers()
        .as_slice()
        .iter()
        .zip(m32.centers().as_slice())
    {
        assert!((a - f64::from(*b)).abs() <= 1e-3 * a.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn model_json_round_trip_preserves_mapping() {
    let samples = zipf_samples(1_000, 1_000.0, 2);
    let model = Model::fit(&samples, &KMeansConfig::with_k(30)).unwrap();
    let back = Model::from_json(&model.to_json()).unwrap();
    assert_eq!(back.k(), model.k());
    for v in 0..1_200 {
        assert_eq!(
            back.nearest_center(f64::from(v)),
            model.nearest_center(f64::from(v))
        );
    }
    assert_eq!(
        back.allocate(1_000, AllocationPolicy::default()).unwrap(),
        model.allocate(1_000, AllocationPolicy::default()).unwrap()
    );
}

proptest! {
    #[test]
    fn allocation_sums_to_m(weights in prop::collection::vec(0.0f64..100.0, 1..40), extra in 0usize..2_000) {
        let m = weights.len() + extra;
        let alloc = allocate_by_weights(&weights, m).unwrap();
        prop_assert_eq!(alloc.len(), weights.len());
        prop_assert_eq!(alloc.iter().sum::<usize>(), m);
        prop_assert!(alloc.iter().all(|&a| a >= 1));
    }

    #[test]
    fn lloyd_potential_is_monotone(
        samples in prop::collection::vec(0u32..500, 5..200),
        k in 1usize..6,
        seed in any::<u64>(),
    ) {
        let samples: Vec<f64> = samples.into_iter().map(f64::from).collect();
        let mut distinct = samples.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        prop_assume!(k <= distinct.len());
        let fit = fit_kmeans(&samples, &KMeansConfig { k, seed, ..KMeansConfig::default() }).unwrap();
        for w in fit.potentials.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-9);
        }
        prop_assert!(fit.centers.windows(2).all(|w| w[0] < w[1]));
        let model = cluster_stats(&samples, &fit.centers).unwrap();
        prop_assert!(model.stats().iter().all(|s| (0.0..=1.0).contains(&s.entropy)));
    }
}
