//! Expected fraction of noisy buckets (buckets shared by two or more keys) in a
//! hash sketch with `c` banks and `m` buckets in total.

use rand::Rng;

/// `1 - exp(-cN/m) - (cN/m) exp(-c(N-1)/m)`.
pub fn expected_noisy_fraction(m: usize, n: usize, c: usize) -> f64 {
    assert!(m > 0 && c > 0, "m and c must be positive");
    if n == 0 {
        return 0.0;
    }
    let (m, n, c) = (m as f64, n as f64, c as f64);
    let load = c * n / m;
    (1.0 - (-load).exp() - load * (-c * (n - 1.0) / m).exp()).max(0.0)
}

/// Balls-into-bins estimate of the same quantity: `n` keys hashed uniformly
/// into each of `c` banks of `m / c` buckets, averaged over `trials`.
pub fn simulate_noisy_fraction<R: Rng>(
    m: usize,
    n: usize,
    c: usize,
    trials: usize,
    rng: &mut R,
) -> f64 {
    assert!(
        c > 0 && m >= c && trials > 0,
        "need m >= c > 0 and at least one trial"
    );
    let width = m / c;
    let mut loads = vec![0u32; width];
    let mut noisy = 0u64;
    for _ in 0..trials {
        for _ in 0..c {
            loads.fill(0);
            for _ in 0..n {
                loads[rng.random_range(0..width)] += 1;
            }
            noisy += loads.iter().filter(|&&l| l >= 2).count() as u64;
        }
    }
    noisy as f64 / (trials * c * width) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_examples() {
        assert_eq!(expected_noisy_fraction(100, 0, 3), 0.0);
        let v = expected_noisy_fraction(1_000, 1_000, 1);
        assert!((v - 0.2639).abs() < 5e-4, "{v}");
        let v = expected_noisy_fraction(3_000, 100, 3);
        assert!((v - 0.0046).abs() < 2e-4, "{v}");
    }
}
