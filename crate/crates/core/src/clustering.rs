//! Offline one-dimensional K-means over flow sizes, nearest-center mapping and
//! the per-cluster statistics that drive bucket allocation.
//!
//! Training runs Lloyd iterations from a k-means++ seeding. Samples are
//! compressed to distinct values with multiplicities first, so an iteration
//! costs `O(d log k)` for `d` distinct sizes instead of `O(n k)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub const DEFAULT_CLUSTERS: usize = 30;
pub const DEFAULT_TRAIN_SAMPLES: usize = 10_000;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once every center moves less than `tol * max(|center|, 1)`.
    pub tol: f64,
    pub seed: u64,
    /// Independent k-means++ seedings; the lowest final potential wins.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_CLUSTERS,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

impl KMeansConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }
}

/// Result of a Lloyd run.
#[derive(Clone, Debug)]
pub struct KMeansFit<F> {
    /// Sorted, strictly ascending.
    pub centers: Vec<F>,
    /// Potential after every assignment step; the last entry belongs to `centers`.
    pub potentials: Vec<F>,
    pub iterations: usize,
    pub converged: bool,
}

impl<F: Real> KMeansFit<F> {
    pub fn potential(&self) -> F {
        *self
            .potentials
            .last()
            .expect("at least one assignment step")
    }
}

/// Sorted distinct sample values with their multiplicities.
struct Compressed<F> {
    values: Vec<F>,
    weights: Vec<u64>,
}

impl<F: Real> Compressed<F> {
    fn new(samples: &[F]) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("no training samples"));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite() || **v < F::zero()) {
            return Err(invalid(format!(
                "sample {bad} is not a finite non-negative value"
            )));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let mut values = Vec::new();
        let mut weights: Vec<u64> = Vec::new();
        for v in sorted {
            if values.last() == Some(&v) {
                *weights.last_mut().unwrap() += 1;
            } else {
                values.push(v);
                weights.push(1);
            }
        }
        Ok(Self { values, weights })
    }

    fn distinct(&self) -> usize {
        self.values.len()
    }
}

/// Index of the nearest center in a sorted slice; ties go to the lower index.
pub fn nearest_index<F: Real>(sorted_centers: &[F], value: F) -> usize {
    debug_assert!(!sorted_centers.is_empty());
    let hi = sorted_centers.partition_point(|c| *c < value);
    if hi == 0 {
        return 0;
    }
    if hi == sorted_centers.len() {
        return hi - 1;
    }
    let lo = hi - 1;
    if value - sorted_centers[lo] <= sorted_centers[hi] - value {
        lo
    } else {
        hi
    }
}

/// Sum of squared distances from every sample to its nearest center.
pub fn potential<F: Real>(samples: &[F], centers: &[F]) -> F {
    let mut sorted = centers.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite centers"));
    samples
        .iter()
        .map(|&v| {
            let d = v - sorted[nearest_index(&sorted, v)];
            d * d
        })
        .sum()
}

/// Trains `k` centers with k-means++ seeding followed by Lloyd iterations.
///
/// Duplicate centers are merged, so fewer than `k` may come back on
/// degenerate inputs.
pub fn train_kmeans<F: Real>(
    samples: &[F],
    k: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<F>> {
    fit_kmeans(
        samples,
        &KMeansConfig {
            k,
            max_iters,
            tol,
            seed,
            restarts: DEFAULT_RESTARTS,
        },
    )
    .map(|f| f.centers)
}

pub fn fit_kmeans<F: Real>(samples: &[F], config: &KMeansConfig) -> Result<KMeansFit<F>> {
    let data = Compressed::new(samples)?;
    if config.k == 0 {
        return Err(invalid("k must be positive"));
    }
    if config.k > data.distinct() {
        return Err(invalid(format!(
            "k = {} exceeds the {} distinct sample values",
            config.k,
            data.distinct()
        )));
    }
    if config.max_iters == 0 {
        return Err(invalid("max_iters must be positive"));
    }
    if !(config.tol >= 0.0) {
        return Err(invalid("tol must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<KMeansFit<F>> = None;
    for _ in 0..config.restarts.max(1) {
        let init = kmeans_pp(&data, config.k, &mut rng);
        let fit = run_lloyd(&data, init, config.max_iters, config.tol);
        if best
            .as_ref()
            .is_none_or(|b| fit.potential() < b.potential())
        {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Lloyd iterations from caller-provided initial centers.
pub fn lloyd<F: Real>(
    samples: &[F],
    init: &[F],
    max_iters: usize,
    tol: f64,
) -> Result<KMeansFit<F>> {
    let data = Compressed::new(samples)?;
    if init.is_empty() || init.iter().any(|c| !c.is_finite()) {
        return Err(invalid("initial centers must be non-empty and finite"));
    }
    if max_iters == 0 {
        return Err(invalid("max_iters must be positive"));
    }
    Ok(run_lloyd(&data, init.to_vec(), max_iters, tol))
}

fn kmeans_pp<F: Real>(data: &Compressed<F>, k: usize, rng: &mut ChaCha8Rng) -> Vec<F> {
    let total: u64 = data.weights.iter().sum();
    let mut pick = rng.random_range(0..total);
    let first = data
        .weights
        .iter()
        .position(|&w| {
            if pick < w {
                true
            } else {
                pick -= w;
                false
            }
        })
        .expect("pick < total");
    let mut centers = vec![data.values[first]];
    let mut d2: Vec<f64> = data
        .values
        .iter()
        .map(|&v| (v - data.values[first]).to_f64_lossy().powi(2))
        .collect();

    while centers.len() < k {
        let mass: f64 = d2
            .iter()
            .zip(&data.weights)
            .map(|(d, &w)| d * w as f64)
            .sum();
        let chosen = if mass > 0.0 {
            let mut u = rng.random::<f64>() * mass;
            let mut idx = None;
            for (i, (d, &w)) in d2.iter().zip(&data.weights).enumerate() {
                let m = d * w as f64;
                if m > 0.0 {
                    idx = Some(i);
                    if u < m {
                        break;
                    }
                    u -= m;
                }
            }
            idx.expect("positive mass")
        } else {
            // Every distinct value already hosts a center.
            break;
        };
        let c = data.values[chosen];
        centers.push(c);
        for (d, &v) in d2.iter_mut().zip(&data.values) {
            *d = d.min((v - c).to_f64_lossy().powi(2));
        }
    }
    centers
}

fn sort_centers<F: Real>(centers: &mut [F]) {
    centers.sort_by(|a, b| a.partial_cmp(b).expect("finite centers"));
}

fn run_lloyd<F: Real>(
    data: &Compressed<F>,
    mut centers: Vec<F>,
    max_iters: usize,
    tol: f64,
) -> KMeansFit<F> {
    let k = centers.len();
    sort_centers(&mut centers);
    let tol = F::from_f64_lossy(tol);
    let mut potentials = Vec::with_capacity(max_iters + 1);
    let mut assignment = vec![0usize; data.distinct()];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![F::zero(); k];
        let mut counts = vec![0u64; k];
        let mut cost = F::zero();
        for (i, (&v, &w)) in data.values.iter().zip(&data.weights).enumerate() {
            let c = nearest_index(&centers, v);
            assignment[i] = c;
            let wf = F::from_count(w);
            sums[c] = sums[c] + v * wf;
            counts[c] += w;
            let d = v - centers[c];
            cost = cost + d * d * wf;
        }
        potentials.push(cost);

        let mut next: Vec<F> = (0..k)
            .map(|c| {
                if counts[c] > 0 {
                    sums[c] / F::from_count(counts[c])
                } else {
                    centers[c]
                }
            })
            .collect();
        reseed_empty(data, &assignment, &centers, &counts, &mut next);
        sort_centers(&mut next);

        let settled = next
            .iter()
            .zip(&centers)
            .all(|(&n, &o)| (n - o).abs() <= tol * o.abs().max(F::one()));
        centers = next;
        if settled {
            converged = true;
            break;
        }
    }

    // Potential of the centers actually returned.
    let final_cost = data
        .values
        .iter()
        .zip(&data.weights)
        .map(|(&v, &w)| {
            let d = v - centers[nearest_index(&centers, v)];
            d * d * F::from_count(w)
        })
        .sum();
    potentials.push(final_cost);
    centers.dedup();
    KMeansFit {
        centers,
        potentials,
        iterations,
        converged,
    }
}

/// Moves every empty center onto the sample value farthest from its own center.
fn reseed_empty<F: Real>(
    data: &Compressed<F>,
    assignment: &[usize],
    centers: &[F],
    counts: &[u64],
    next: &mut [F],
) {
    let empty: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] == 0).collect();
    if empty.is_empty() {
        return;
    }
    let mut far: Vec<(F, usize)> = data
        .values
        .iter()
        .zip(assignment)
        .enumerate()
        .map(|(i, (&v, &c))| ((v - centers[c]).abs(), i))
        .filter(|(d, _)| *d > F::zero())
        .collect();
    far.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then(a.1.cmp(&b.1)));
    for (slot, (_, i)) in empty.into_iter().zip(far) {
        next[slot] = data.values[i];
    }
}

/// Sorted, strictly ascending, finite cluster centers.
#[derive(Clone, Debug, PartialEq)]
pub struct Centers<F>(Vec<F>);

impl<F: Real> Centers<F> {
    /// Sorts the input and merges duplicates.
    pub fn new(mut centers: Vec<F>) -> Result<Self> {
        if centers.is_empty() {
            return Err(invalid("at least one cluster center is required"));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(invalid("cluster centers must be finite"));
        }
        sort_centers(&mut centers);
        centers.dedup();
        Ok(Self(centers))
    }

    pub fn nearest(&self, value: F) -> usize {
        nearest_index(&self.0, value)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.0
            .iter()
            .map(|c| c.to_f32().unwrap_or(f32::NAN))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterStats<F> {
    /// Normalized entropy of the cluster's value distribution, in `[0, 1]`.
    pub entropy: F,
    /// Center divided by the sum of all centers.
    pub weight: F,
    /// Fraction of training samples in the cluster.
    pub density: F,
    pub size: u64,
    pub distinct: usize,
}

/// Trained clustering: centers plus the statistics used for bucket allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel<F = f64> {
    centers: Centers<F>,
    stats: Vec<ClusterStats<F>>,
}

impl<F: Real> ClusterModel<F> {
    pub fn fit(samples: &[F], config: &KMeansConfig) -> Result<Self> {
        let fit = fit_kmeans(samples, config)?;
        cluster_stats(samples, &fit.centers)
    }

    pub fn centers(&self) -> &Centers<F> {
        &self.centers
    }

    pub fn stats(&self) -> &[ClusterStats<F>] {
        &self.stats
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn nearest_center(&self, value: F) -> usize {
        self.centers.nearest(value)
    }

    pub fn allocate(&self, m: usize, policy: AllocationPolicy) -> Result<Vec<usize>> {
        allocate_buckets(self, m, policy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocument::from_model(self)).expect("plain data")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(s).map_err(|e| invalid(format!("cluster model document: {e}")))?;
        doc.into_model()
    }
}

/// Per-cluster statistics for `centers` over `samples`.
pub fn cluster_stats<F: Real>(samples: &[F], centers: &[F]) -> Result<ClusterModel<F>> {
    let data = Compressed::new(samples)?;
    let centers = Centers::new(centers.to_vec())?;
    let k = centers.len();
    let mut members: Vec<Vec<u64>> = vec![Vec::new(); k];
    for (&v, &w) in data.values.iter().zip(&data.weights) {
        members[centers.nearest(v)].push(w);
    }
    let total = F::from_count(data.weights.iter().sum());
    let center_sum: F = centers.as_slice().iter().copied().sum();
    let stats = members
        .iter()
        .zip(centers.as_slice())
        .map(|(counts, &c)| {
            let size: u64 = counts.iter().sum();
            let entropy = normalized_entropy::<F>(counts);
            let weight = if center_sum > F::zero() {
                c / center_sum
            } else {
                F::one() / F::from_count(k as u64)
            };
            ClusterStats {
                entropy,
                weight,
                density: F::from_count(size) / total,
                size,
                distinct: counts.len(),
            }
        })
        .collect();
    Ok(ClusterModel { centers, stats })
}

/// Shannon entropy (base 2) of the multiplicities, divided by `log2(len)`.
fn normalized_entropy<F: Real>(counts: &[u64]) -> F {
    if counts.len() < 2 {
        return F::zero();
    }
    let n = F::from_count(counts.iter().sum());
    let h: F = counts
        .iter()
        .map(|&c| {
            let f = F::from_count(c) / n;
            -f * f.log2()
        })
        .sum();
    (h / F::from_count(counts.len() as u64).log2())
        .min(F::one())
        .max(F::zero())
}

/// Which factors of the entropy x center x density product shape the allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AllocationPolicy {
    pub entropy: bool,
    pub center: bool,
    pub density: bool,
}

impl Default for AllocationPolicy {
    fn default() -> Self {
        Self {
            entropy: true,
            center: true,
            density: true,
        }
    }
}

impl AllocationPolicy {
    pub const UNIFORM: Self = Self {
        entropy: false,
        center: false,
        density: false,
    };

    /// The full product followed by each single-factor ablation.
    pub fn ablations() -> [Self; 4] {
        [
            Self::default(),
            Self {
                entropy: false,
                ..Self::default()
            },
            Self {
                center: false,
                ..Self::default()
            },
            Self {
                density: false,
                ..Self::default()
            },
        ]
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.entropy {
            parts.push("H");
        }
        if self.center {
            parts.push("mu");
        }
        if self.density {
            parts.push("d");
        }
        if parts.is_empty() {
            "uniform".to_string()
        } else {
            parts.join("*")
        }
    }

    fn weight<F: Real>(&self, s: &ClusterStats<F>) -> f64 {
        let mut w = 1.0;
        if self.entropy {
            w *= s.entropy.to_f64_lossy();
        }
        if self.center {
            w *= s.weight.to_f64_lossy();
        }
        if self.density {
            w *= s.density.to_f64_lossy();
        }
        w
    }
}

/// Splits `m` buckets across the model's clusters in proportion to the policy weights.
pub fn allocate_buckets<F: Real>(
    model: &ClusterModel<F>,
    m: usize,
    policy: AllocationPolicy,
) -> Result<Vec<usize>> {
    let weights: Vec<f64> = model.stats.iter().map(|s| policy.weight(s)).collect();
    allocate_by_weights(&weights, m)
}

/// `floor(w_i / sum(w) * m)`, then every entry raised to at least one bucket and
/// the total restored to exactly `m`: surplus is taken from the largest arrays,
/// shortfall handed out by largest fractional part. All-zero weights split uniformly.
pub fn allocate_by_weights(weights: &[f64], m: usize) -> Result<Vec<usize>> {
    let k = weights.len();
    if k == 0 {
        return Err(invalid("no clusters to allocate"));
    }
    if m < k {
        return Err(invalid(format!(
            "m = {m} buckets cannot cover k = {k} arrays"
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(invalid(
            "allocation weights must be finite and non-negative",
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Ok((0..k).map(|i| m / k + usize::from(i < m % k)).collect());
    }

    let shares: Vec<f64> = weights.iter().map(|w| w / total * m as f64).collect();
    let mut alloc: Vec<usize> = shares.iter().map(|s| (s.floor() as usize).max(1)).collect();
    let mut assigned: usize = alloc.iter().sum();

    while assigned > m {
        // Largest array gives one back; lowest index on ties.
        let i = (0..k)
            .filter(|&i| alloc[i] > 1)
            .max_by(|&a, &b| alloc[a].cmp(&alloc[b]).then(b.cmp(&a)));
        let i = i.ok_or_else(|| {
            Error::Inconsistent("allocation cannot shrink below one bucket each".into())
        })?;
        alloc[i] -= 1;
        assigned -= 1;
    }
    if assigned < m {
        let mut order: Vec<usize> = (0..k).collect();
        let frac = |i: usize| shares[i] - shares[i].floor();
        order.sort_by(|&a, &b| {
            frac(b)
                .partial_cmp(&frac(a))
                .expect("finite")
                .then(a.cmp(&b))
        });
        for &i in order.iter().cycle().take(m - assigned) {
            alloc[i] += 1;
        }
    }
    Ok(alloc)
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    centers: Vec<f32>,
    entropy: Vec<f64>,
    weight: Vec<f64>,
    density: Vec<f64>,
    size: Vec<u64>,
    distinct: Vec<usize>,
}

const MODEL_DOC_VERSION: u32 = 1;

impl ModelDocument {
    fn from_model<F: Real>(m: &ClusterModel<F>) -> Self {
        let col =
            |f: fn(&ClusterStats<F>) -> F| m.stats.iter().map(|s| f(s).to_f64_lossy()).collect();
        Self {
            version: MODEL_DOC_VERSION,
            centers: m.centers.to_f32(),
            entropy: col(|s| s.entropy),
            weight: col(|s| s.weight),
            density: col(|s| s.density),
            size: m.stats.iter().map(|s| s.size).collect(),
            distinct: m.stats.iter().map(|s| s.distinct).collect(),
        }
    }

    fn into_model<F: Real>(self) -> Result<ClusterModel<F>> {
        if self.version != MODEL_DOC_VERSION {
            return Err(invalid(format!(
                "unsupported cluster model version {}",
                self.version
            )));
        }
        let k = self.centers.len();
        if [
            self.entropy.len(),
            self.weight.len(),
            self.density.len(),
            self.size.len(),
            self.distinct.len(),
        ]
        .iter()
        .any(|&n| n != k)
        {
            return Err(invalid("cluster model columns differ in length"));
        }
        let raw: Vec<F> = self
            .centers
            .iter()
            .map(|&c| F::from_f64_lossy(c as f64))
            .collect();
        let centers = Centers::new(raw.clone())?;
        if centers.as_slice() != raw.as_slice() {
            return Err(invalid("cluster centers must be strictly ascending"));
        }
        let stats = (0..k)
            .map(|i| ClusterStats {
                entropy: F::from_f64_lossy(self.entropy[i]),
                weight: F::from_f64_lossy(self.weight[i]),
                density: F::from_f64_lossy(self.density[i]),
                size: self.size[i],
                distinct: self.distinct[i],
            })
            .collect();
        Ok(ClusterModel { centers, stats })
    }
}
