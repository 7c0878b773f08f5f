use lss_core::baselines::DEFAULT_BANKS;
use lss_core::{expected_noisy_fraction, simulate_noisy_fraction, CmSketch, CsSketch, FlowKey};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

#[test]
fn cm_error_tail_is_bounded() {
    let zipf = Zipf::new(10_000.0f64, 1.1).unwrap();
    let (n, m, c) = (1_000usize, 300usize, DEFAULT_BANKS);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut bad, mut total) = (0usize, 0usize);
    for stream in 0..100u64 {
        let mut cm = CmSketch::new(m, c, stream).unwrap();
        let vals: Vec<u64> = (0..n).map(|_| zipf.sample(&mut rng) as u64).collect();
        for (i, &v) in vals.iter().enumerate() {
            cm.insert(&FlowKey::from_id(i as u64), v);
        }
        let l1: u64 = vals.iter().sum();
        let limit = 2.0 / (m / c) as f64 * l1 as f64;
        for (i, &v) in vals.iter().enumerate() {
            let err = cm.query(&FlowKey::from_id(i as u64)) - v;
            bad += usize::from(err as f64 >= limit);
            total += 1;
        }
    }
    let frac = bad as f64 / total as f64;
    assert!(frac <= 0.5f64.powi(c as i32) + 0.02, "{frac}");
}

#[test]
fn cs_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trials = 1_000;
    let errors: Vec<f64> = (0..trials)
        .map(|t| {
            let mut cs = CsSketch::new(30, 3, t).unwrap();
            let vals: Vec<u64> = (0..100).map(|_| rng.random_range(1..1_000)).collect();
            for (i, &v) in vals.iter().enumerate() {
                cs.insert(&FlowKey::from_id(i as u64), v);
            }
            (cs.query(&FlowKey::from_id(0)) - vals[0] as i64) as f64
        })
        .collect();
    let n = trials as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let sd = (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(
        mean.abs() <= 3.0 * sd / n.sqrt(),
        "mean {mean}, se {}",
        sd / n.sqrt()
    );
}

#[test]
fn noisy_fraction_matches_balls_into_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for c in [1, 3] {
        for m in [30, 300, 3_000] {
            let sim = simulate_noisy_fraction(m, 300, c, 2_000, &mut rng);
            let formula = expected_noisy_fraction(m, 300, c);
            assert!(
                (sim - formula).abs() <= 0.01,
                "m={m} c={c}: {sim} vs {formula}"
            );
        }
    }
    let sim = simulate_noisy_fraction(3_000, 100, 3, 20_000, &mut rng);
    assert!((sim - 0.0046).abs() <= 0.002, "{sim}");
}

proptest! {
    #[test]
    fn cm_never_underestimates(
        stream in prop::collection::vec((0u64..200, 0u64..10_000), 1..500),
        m in 3usize..100,
        seed in any::<u64>(),
    ) {
        let mut cm = CmSketch::new(m, 3, seed).unwrap();
        let mut truth = std::collections::HashMap::new();
        let mut last = vec![0u64; m];
        for &(id, v) in &stream {
            cm.insert(&FlowKey::from_id(id), v);
            *truth.entry(id).or_insert(0u64) += v;
            let now: Vec<u64> = (0..3).flat_map(|j| cm.bank(j).to_vec()).collect();
            prop_assert!(now.iter().zip(&last).all(|(a, b)| a >= b));
            last = now;
        }
        for (&id, &t) in &truth {
            prop_assert!(cm.query(&FlowKey::from_id(id)) >= t);
        }
    }

    #[test]
    fn single_key_is_exact(v in 0u64..1_000_000, seed in any::<u64>(), m in 3usize..50) {
        let k = FlowKey::from_id(seed);
        let mut cm = CmSketch::new(m, 3, seed).unwrap();
        let mut cs = CsSketch::new(m, 3, seed).unwrap();
        cm.insert(&k, v);
        cs.insert(&k, v);
        prop_assert_eq!(cm.query(&k), v);
        prop_assert_eq!(cs.query(&k), v as i64);
    }
}
