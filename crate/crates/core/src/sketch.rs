//! The locality-sensitive sketch: one bucket array per cluster, every flow
//! hashed into exactly one bucket of the array whose center is nearest to its
//! value, and point queries answered by the bucket average `val_sum / key_count`.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::clustering::{AllocationPolicy, Centers, ClusterModel};
use crate::codec::{Reader, StructureTag, Writer};
use crate::error::{invalid, Error, Result};
use crate::key::FlowKey;
use crate::membership::{CuckooTable, DEFAULT_MAX_KICKS};
use crate::scalar::Real;

/// Cluster indexes are stored in one byte.
pub const MAX_CLUSTERS: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bucket {
    pub val_sum: u64,
    pub key_count: u64,
}

impl Bucket {
    pub fn average(&self) -> Option<Ratio<u64>> {
        (self.key_count > 0).then(|| Ratio::new(self.val_sum, self.key_count))
    }
}

/// Width of each serialized bucket field. In memory every field is 64 bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CounterWidth {
    W16,
    #[default]
    W32,
    W64,
}

impl CounterWidth {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            16 => Ok(Self::W16),
            32 => Ok(Self::W32),
            64 => Ok(Self::W64),
            _ => Err(invalid(format!(
                "counter width must be 16, 32 or 64 bits, got {bits}"
            ))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Self::W16 => 16,
            Self::W32 => 32,
            Self::W64 => 64,
        }
    }

    pub fn bytes(self) -> usize {
        self.bits() as usize / 8
    }

    pub fn max_value(self) -> u64 {
        match self {
            Self::W64 => u64::MAX,
            w => (1u64 << w.bits()) - 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LssOptions {
    pub hash_seed: u64,
    pub counter_width: CounterWidth,
    pub policy: AllocationPolicy,
    /// Sizes the membership table; defaults to `10 * m` flows.
    pub expected_flows: Option<usize>,
    pub membership_seed: u64,
    pub max_kicks: usize,
}

impl Default for LssOptions {
    fn default() -> Self {
        Self {
            hash_seed: 0x5eed,
            counter_width: CounterWidth::default(),
            policy: AllocationPolicy::default(),
            expected_flows: None,
            membership_seed: 0xc0c0,
            max_kicks: DEFAULT_MAX_KICKS,
        }
    }
}

/// What a duplication-aware insert did with the record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    /// First record of the flow, placed in this cluster.
    New { cluster: usize },
    /// Accumulated in place.
    Accumulated { cluster: usize },
    /// Running total crossed to a nearer center and the flow moved arrays.
    Remapped { from: usize, to: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LssSketch<F = f64> {
    centers: Centers<F>,
    /// `offsets[i]..offsets[i + 1]` is array `i` inside `buckets`.
    offsets: Vec<usize>,
    buckets: Vec<Bucket>,
    hash_seed: u64,
    counter_width: CounterWidth,
    membership: CuckooTable,
    overflowed: bool,
    sealed: bool,
}

impl<F: Real> LssSketch<F> {
    /// Empty sketch with `m` buckets split across the model's clusters.
    pub fn new(model: &ClusterModel<F>, m: usize, options: LssOptions) -> Result<Self> {
        let allocation = model.allocate(m, options.policy)?;
        let membership = CuckooTable::new(
            CuckooTable::for_flows(options.expected_flows.unwrap_or(m.saturating_mul(10)), 0)
                .bucket_count(),
            options.max_kicks,
            options.membership_seed,
        )?;
        Self::with_allocation(
            model.centers().clone(),
            &allocation,
            options.hash_seed,
            options.counter_width,
            membership,
        )
    }

    pub fn with_allocation(
        centers: Centers<F>,
        allocation: &[usize],
        hash_seed: u64,
        counter_width: CounterWidth,
        membership: CuckooTable,
    ) -> Result<Self> {
        let k = centers.len();
        if k > MAX_CLUSTERS {
            return Err(invalid(format!(
                "{k} clusters exceed the one-byte cluster index"
            )));
        }
        if allocation.len() != k {
            return Err(invalid(format!(
                "allocation has {} arrays for {k} clusters",
                allocation.len()
            )));
        }
        if allocation.contains(&0) {
            return Err(invalid("every bucket array needs at least one bucket"));
        }
        let mut offsets = Vec::with_capacity(k + 1);
        offsets.push(0);
        for &n in allocation {
            offsets.push(offsets.last().unwrap() + n);
        }
        let m = *offsets.last().unwrap();
        Ok(Self {
            centers,
            offsets,
            buckets: vec![Bucket::default(); m],
            hash_seed,
            counter_width,
            membership,
            overflowed: false,
            sealed: false,
        })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn m(&self) -> usize {
        self.buckets.len()
    }

    pub fn centers(&self) -> &Centers<F> {
        &self.centers
    }

    pub fn allocation(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn array(&self, cluster: usize) -> &[Bucket] {
        &self.buckets[self.offsets[cluster]..self.offsets[cluster + 1]]
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn membership(&self) -> &CuckooTable {
        &self.membership
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }

    pub fn counter_width(&self) -> CounterWidth {
        self.counter_width
    }

    /// Set once any bucket field exceeded the serialized counter width.
    pub fn overflowed(&self) -> bool {
        self.overflowed
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    /// Closes the window: squeezes the membership table and rejects further inserts.
    pub fn seal(&mut self) {
        self.membership.squeeze();
        self.sealed = true;
    }

    /// Flat position of `key`'s bucket inside array `cluster`.
    pub fn bucket_index(&self, cluster: usize, key: &FlowKey) -> usize {
        let size = (self.offsets[cluster + 1] - self.offsets[cluster]) as u64;
        self.offsets[cluster] + (key.hash_with(self.hash_seed) % size) as usize
    }

    pub fn nearest_cluster(&self, value: u64) -> usize {
        self.centers.nearest(F::from_count(value))
    }

    fn check_overflow(&mut self, idx: usize) {
        let b = self.buckets[idx];
        let max = self.counter_width.max_value();
        if b.val_sum > max || b.key_count > max {
            self.overflowed = true;
        }
    }

    fn add(&mut self, idx: usize, value: u64, keys: u64) {
        let b = &mut self.buckets[idx];
        b.val_sum = b.val_sum.saturating_add(value);
        b.key_count += keys;
        self.check_overflow(idx);
    }

    /// Inserts a flow that has not been seen before.
    ///
    /// The caller guarantees novelty; use [`insert_duplicate`](Self::insert_duplicate)
    /// for streams that may repeat a key.
    pub fn insert(&mut self, key: &FlowKey, value: u64) -> Result<usize> {
        if self.sealed {
            return Err(Error::Sealed);
        }
        let cluster = self.nearest_cluster(value);
        self.membership.insert(key, cluster as u8, Some(value))?;
        let idx = self.bucket_index(cluster, key);
        self.add(idx, value, 1);
        Ok(cluster)
    }

    /// Duplication-aware insert.
    ///
    /// Unseen keys behave like [`insert`](Self::insert). Seen keys add `value`
    /// to their current bucket and cached total `v*`; if `v*` is now nearer a
    /// different center, `(v*, one key)` moves from the old bucket to the same
    /// hash slot in the new array.
    ///
    /// `Inconsistent` is returned when the old bucket cannot give up `v*`
    /// (only possible after a fingerprint collision). The value has then been
    /// accumulated in place and the move skipped, so totals stay conserved.
    pub fn insert_duplicate(&mut self, key: &FlowKey, value: u64) -> Result<Placement> {
        if self.sealed {
            return Err(Error::Sealed);
        }
        let Some(entry) = self.membership.lookup(key) else {
            return self
                .insert(key, value)
                .map(|cluster| Placement::New { cluster });
        };
        let current = entry.cluster as usize;
        let running = entry.cached.ok_or(Error::Sealed)?;
        if current >= self.k() {
            return Err(Error::Inconsistent(format!(
                "stored cluster {current} out of range"
            )));
        }
        let total = running.saturating_add(value);
        let old = self.bucket_index(current, key);
        self.add(old, value, 0);

        let target = self.nearest_cluster(total);
        if target == current {
            self.membership.update(key, current as u8, Some(total))?;
            return Ok(Placement::Accumulated { cluster: current });
        }
        let b = self.buckets[old];
        if b.val_sum < total || b.key_count == 0 {
            self.membership.update(key, current as u8, Some(total))?;
            return Err(Error::Inconsistent(format!(
                "bucket {{{}, {}}} cannot release a flow of total {total}",
                b.val_sum, b.key_count
            )));
        }
        self.buckets[old].val_sum -= total;
        self.buckets[old].key_count -= 1;
        let new = self.bucket_index(target, key);
        self.add(new, total, 1);
        self.membership.update(key, target as u8, Some(total))?;
        Ok(Placement::Remapped {
            from: current,
            to: target,
        })
    }

    /// The bucket holding `key`.
    pub fn bucket_for(&self, key: &FlowKey) -> Result<Bucket> {
        let entry = self.membership.lookup(key).ok_or(Error::NotFound)?;
        let cluster = entry.cluster as usize;
        if cluster >= self.k() {
            return Err(Error::Inconsistent(format!(
                "stored cluster {cluster} out of range"
            )));
        }
        Ok(self.buckets[self.bucket_index(cluster, key)])
    }

    /// Exact bucket average for `key`.
    pub fn estimate_ratio(&self, key: &FlowKey) -> Result<Ratio<u64>> {
        self.bucket_for(key)?
            .average()
            .ok_or_else(|| Error::Inconsistent("member key maps to an empty bucket".into()))
    }

    pub fn query(&self, key: &FlowKey) -> Result<F> {
        let b = self.bucket_for(key)?;
        if b.key_count == 0 {
            return Err(Error::Inconsistent(
                "member key maps to an empty bucket".into(),
            ));
        }
        Ok(F::from_count(b.val_sum) / F::from_count(b.key_count))
    }

    /// Exact number of distinct flows inserted.
    pub fn cardinality(&self) -> u64 {
        self.buckets.iter().map(|b| b.key_count).sum()
    }

    pub fn total_value(&self) -> u64 {
        self.buckets.iter().map(|b| b.val_sum).sum()
    }

    /// Per-key estimates, in input order.
    pub fn size_distribution(&self, keys: &[FlowKey]) -> Result<Vec<F>> {
        keys.iter().map(|k| self.query(k)).collect()
    }

    /// Base-2 entropy of the distribution of estimated flow sizes.
    ///
    /// Estimates are rounded to whole counter units before counting
    /// frequencies, since flow sizes are integral.
    pub fn entropy(&self, keys: &[FlowKey]) -> Result<f64> {
        if keys.is_empty() {
            return Err(invalid("entropy of an empty key set"));
        }
        let sizes = keys
            .iter()
            .map(|k| self.query(k).map(|e| e.to_f64_lossy()))
            .collect::<Result<Vec<_>>>()?;
        Ok(size_entropy(&sizes))
    }

    /// Frequency of every rounded estimate over all member flows.
    ///
    /// Each member of a bucket decodes to the bucket average, so this needs no
    /// key list and equals the histogram of `query` over every inserted key.
    pub fn estimate_histogram(&self) -> BTreeMap<u64, u64> {
        let mut freq = BTreeMap::new();
        for b in self.buckets.iter().filter(|b| b.key_count > 0) {
            let avg = (b.val_sum as f64 / b.key_count as f64).round() as u64;
            *freq.entry(avg).or_default() += b.key_count;
        }
        freq
    }

    /// Entropy of the estimated sizes of every member flow; 0 for an empty sketch.
    pub fn window_entropy(&self) -> f64 {
        let freq = self.estimate_histogram();
        let n: u64 = freq.values().sum();
        if n == 0 {
            return 0.0;
        }
        let h: f64 = freq
            .values()
            .map(|&c| {
                let p = c as f64 / n as f64;
                -p * p.log2()
            })
            .sum();
        h.max(0.0)
    }

    /// Members whose estimate exceeds `threshold`, largest first.
    pub fn heavy_hitters(&self, keys: &[FlowKey], threshold: F) -> Vec<(FlowKey, F)> {
        let mut hits: Vec<(FlowKey, F)> = keys
            .iter()
            .filter_map(|k| self.query(k).ok().map(|e| (k.clone(), e)))
            .filter(|(_, e)| *e > threshold)
            .collect();
        hits.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite estimates")
                .then_with(|| a.0.cmp(&b.0))
        });
        hits
    }

    /// Keys whose estimates differ by more than `threshold` between two windows.
    ///
    /// A key missing from one window counts as size 0 there; keys missing from
    /// both are skipped.
    pub fn heavy_changes(
        &self,
        other: &Self,
        keys: &[FlowKey],
        threshold: F,
    ) -> Result<Vec<FlowKey>> {
        if self.centers != other.centers {
            return Err(invalid(
                "heavy-change comparison needs sketches built from the same model",
            ));
        }
        let mut out = Vec::new();
        for k in keys {
            let a = self.query(k).ok();
            let b = other.query(k).ok();
            if a.is_none() && b.is_none() {
                continue;
            }
            let diff = (a.unwrap_or_else(F::zero) - b.unwrap_or_else(F::zero)).abs();
            if diff > threshold {
                out.push(k.clone());
            }
        }
        Ok(out)
    }

    /// Bytes of the bucket arrays plus four bytes per center.
    pub fn sketch_bytes(&self) -> usize {
        self.m() * 2 * self.counter_width.bytes() + self.k() * 4
    }

    /// Sketch footprint including the squeezed membership table.
    pub fn footprint_bytes(&self) -> usize {
        self.sketch_bytes() + self.membership.slot_count() * crate::membership::SQUEEZED_SLOT_BYTES
    }

    /// Container layout: header, `k: u16`, `m: u32`, `hash_seed: u64`,
    /// `counter_width: u8` (bits), `flags: u8`, `k` f32 centers, `k` u32 array
    /// sizes, `m` `(val_sum, key_count)` pairs at the counter width, then the
    /// membership table body. Fields wider than the counter width saturate.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(StructureTag::Lss);
        w.u16(self.k() as u16);
        w.u32(self.m() as u32);
        w.u64(self.hash_seed);
        w.u8(self.counter_width.bits() as u8);
        w.u8(u8::from(self.overflowed) | (u8::from(self.sealed) << 1));
        for c in self.centers.to_f32() {
            w.f32(c);
        }
        for n in self.allocation() {
            w.u32(n as u32);
        }
        let width = self.counter_width.bytes();
        let max = self.counter_width.max_value();
        for b in &self.buckets {
            w.uint(b.val_sum.min(max), width);
            w.uint(b.key_count.min(max), width);
        }
        self.membership.write_body(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::with_header(bytes, StructureTag::Lss)?;
        let k = r.u16()? as usize;
        let m = r.u32()? as usize;
        let hash_seed = r.u64()?;
        let width_at = r.offset();
        let counter_width = CounterWidth::from_bits(u32::from(r.u8()?))
            .map_err(|e| r.error_at(width_at, e.to_string()))?;
        let flags = r.u8()?;
        if flags & !0b11 != 0 {
            return Err(r
                .error_at(r.offset() - 1, format!("unknown flags {flags:#04x}"))
                .into());
        }
        if k == 0 || k > MAX_CLUSTERS {
            return Err(r
                .error_at(6, format!("cluster count {k} out of range"))
                .into());
        }
        let centers_at = r.offset();
        let mut raw = Vec::with_capacity(k);
        for _ in 0..k {
            raw.push(F::from_f64_lossy(f64::from(r.f32()?)));
        }
        let centers =
            Centers::new(raw.clone()).map_err(|e| r.error_at(centers_at, e.to_string()))?;
        if centers.as_slice() != raw.as_slice() {
            return Err(r
                .error_at(centers_at, "centers are not strictly ascending")
                .into());
        }
        let alloc_at = r.offset();
        let mut allocation = Vec::with_capacity(k);
        for _ in 0..k {
            allocation.push(r.u32()? as usize);
        }
        if allocation.iter().sum::<usize>() != m || allocation.contains(&0) {
            return Err(r
                .error_at(alloc_at, "array sizes do not cover m buckets")
                .into());
        }
        let width = counter_width.bytes();
        if r.remaining() < m * 2 * width {
            return Err(r.error("truncated bucket arrays").into());
        }
        let mut buckets = Vec::with_capacity(m);
        for _ in 0..m {
            let at = r.offset();
            let val_sum = r.uint(width)?;
            let key_count = r.uint(width)?;
            if key_count == 0 && val_sum != 0 {
                return Err(r
                    .error_at(at, "value stored in a bucket with no keys")
                    .into());
            }
            buckets.push(Bucket { val_sum, key_count });
        }
        let membership = CuckooTable::read_body(&mut r)?;
        r.finish()?;
        let mut sketch =
            Self::with_allocation(centers, &allocation, hash_seed, counter_width, membership)?;
        sketch.buckets = buckets;
        sketch.overflowed = flags & 1 != 0;
        sketch.sealed = flags & 2 != 0;
        Ok(sketch)
    }
}

/// Base-2 entropy of a list of sizes, each rounded to the nearest integer.
pub fn size_entropy(sizes: &[f64]) -> f64 {
    if sizes.is_empty() {
        return 0.0;
    }
    let mut freq: BTreeMap<i64, u64> = BTreeMap::new();
    for s in sizes {
        *freq.entry(s.round() as i64).or_default() += 1;
    }
    let n = sizes.len() as f64;
    let h: f64 = freq
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::cluster_stats;

    fn key(i: u64) -> FlowKey {
        FlowKey::from_id(i)
    }

    fn model(centers: &[f64], samples: &[f64]) -> ClusterModel<f64> {
        cluster_stats(samples, centers).unwrap()
    }

    fn one_cluster(m: usize) -> LssSketch<f64> {
        let centers = Centers::new(vec![1.0]).unwrap();
        LssSketch::with_allocation(
            centers,
            &[m],
            11,
            CounterWidth::W32,
            CuckooTable::new(64, 500, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn new_sizes_arrays_by_allocation() {
        let m = model(&[1.5, 101.5], &[1.0, 2.0, 101.0, 102.0]);
        let opts = LssOptions {
            policy: AllocationPolicy::UNIFORM,
            ..Default::default()
        };
        let s = LssSketch::new(&m, 10, opts).unwrap();
        assert_eq!(s.allocation(), vec![5, 5]);
        assert!(s.buckets().iter().all(|b| *b == Bucket::default()));
        assert!(matches!(
            LssSketch::new(&m, 1, LssOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn lone_key_is_exact() {
        let mut s = one_cluster(8);
        s.insert(&key(1), 42).unwrap();
        assert_eq!(s.query(&key(1)).unwrap(), 42.0);
        assert_eq!(
            s.bucket_for(&key(1)).unwrap(),
            Bucket {
                val_sum: 42,
                key_count: 1
            }
        );
    }

    #[test]
    fn colliding_keys_share_the_average() {
        let mut s = one_cluster(1);
        s.insert(&key(3), 18).unwrap();
        s.insert(&key(4), 17).unwrap();
        assert_eq!(
            s.buckets()[0],
            Bucket {
                val_sum: 35,
                key_count: 2
            }
        );
        assert_eq!(s.query(&key(3)).unwrap(), 17.5);
        assert_eq!(s.query(&key(4)).unwrap(), 17.5);
        assert_eq!(s.estimate_ratio(&key(4)).unwrap(), Ratio::new(35, 2));
    }

    #[test]
    fn identical_values_are_recovered() {
        let mut s = one_cluster(1);
        for i in 0..20 {
            s.insert(&key(i), 7).unwrap();
        }
        assert!((0..20).all(|i| s.query(&key(i)).unwrap() == 7.0));
        assert_eq!(s.cardinality(), 20);
    }

    #[test]
    fn unknown_key_is_not_found() {
        let s = one_cluster(4);
        assert!(matches!(s.query(&key(5)), Err(Error::NotFound)));
        assert!(matches!(
            s.size_distribution(&[key(5)]),
            Err(Error::NotFound)
        ));
        assert_eq!(s.size_distribution(&[]).unwrap(), Vec::<f64>::new());
    }

    fn two_centers() -> LssSketch<f64> {
        let centers = Centers::new(vec![15.0, 80.0]).unwrap();
        LssSketch::with_allocation(
            centers,
            &[4, 4],
            3,
            CounterWidth::W32,
            CuckooTable::new(16, 500, 9).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn duplicate_accumulates_in_place() {
        let mut s = two_centers();
        let f = key(77);
        assert_eq!(
            s.insert_duplicate(&f, 10).unwrap(),
            Placement::New { cluster: 0 }
        );
        assert_eq!(
            s.insert_duplicate(&f, 10).unwrap(),
            Placement::Accumulated { cluster: 0 }
        );
        assert_eq!(
            s.bucket_for(&f).unwrap(),
            Bucket {
                val_sum: 20,
                key_count: 1
            }
        );
        assert_eq!(s.membership().lookup(&f).unwrap().cached, Some(20));
    }

    #[test]
    fn duplicate_remaps_to_nearer_center() {
        let mut s = two_centers();
        let f = key(77);
        s.insert_duplicate(&f, 10).unwrap();
        let old = s.bucket_index(0, &f);
        assert_eq!(
            s.insert_duplicate(&f, 90).unwrap(),
            Placement::Remapped { from: 0, to: 1 }
        );
        assert_eq!(s.buckets()[old], Bucket::default());
        assert_eq!(
            s.bucket_for(&f).unwrap(),
            Bucket {
                val_sum: 100,
                key_count: 1
            }
        );
        assert_eq!(s.cardinality(), 1);
        assert_eq!(s.total_value(), 100);
    }

    #[test]
    fn sealed_sketch_rejects_inserts() {
        let mut s = two_centers();
        s.insert(&key(1), 5).unwrap();
        s.seal();
        assert!(matches!(s.insert(&key(2), 5), Err(Error::Sealed)));
        assert!(matches!(s.insert_duplicate(&key(1), 5), Err(Error::Sealed)));
        assert_eq!(s.query(&key(1)).unwrap(), 5.0);
    }

    #[test]
    fn entropy_examples() {
        assert!((size_entropy(&[2.0, 2.0, 4.0]) - 0.918_295_834_054_489_6).abs() < 1e-12);
        assert_eq!(size_entropy(&[3.0; 5]), 0.0);
        assert!((size_entropy(&[1.0, 2.0, 3.0, 4.0]) - 2.0).abs() < 1e-12);
        let s = one_cluster(4);
        assert!(matches!(s.entropy(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn window_entropy_equals_keyed_entropy() {
        let mut s = one_cluster(3);
        let keys: Vec<FlowKey> = (0..30).map(key).collect();
        for (i, k) in keys.iter().enumerate() {
            s.insert(k, (i as u64 % 7) * 3 + 1).unwrap();
        }
        assert!((s.window_entropy() - s.entropy(&keys).unwrap()).abs() < 1e-12);
        assert_eq!(s.estimate_histogram().values().sum::<u64>(), 30);
        assert_eq!(one_cluster(2).window_entropy(), 0.0);
    }

    #[test]
    fn heavy_hitters_and_changes() {
        let mut a = one_cluster(64);
        let keys: Vec<FlowKey> = (0..3).map(key).collect();
        // Distinct buckets for the three keys under this seed.
        let idx: std::collections::HashSet<usize> =
            keys.iter().map(|k| a.bucket_index(0, k)).collect();
        assert_eq!(idx.len(), 3);
        a.insert(&keys[0], 100).unwrap();
        a.insert(&keys[1], 1).unwrap();
        a.insert(&keys[2], 1).unwrap();
        let hh = a.heavy_hitters(&keys, 50.0);
        assert_eq!(hh, vec![(keys[0].clone(), 100.0)]);
        assert!(a.heavy_hitters(&keys, 1_000.0).is_empty());

        assert!(a.heavy_changes(&a.clone(), &keys, 0.0).unwrap().is_empty());
        let mut b = one_cluster(64);
        b.insert(&key(9), 100).unwrap();
        let changed = a.heavy_changes(&b, &[key(9)], 50.0).unwrap();
        assert_eq!(changed, vec![key(9)]);
        b.insert(&keys[1], 2).unwrap();
        assert_eq!(
            a.heavy_changes(&b, &[keys[1].clone()], 0.0).unwrap(),
            vec![keys[1].clone()]
        );
        assert!(a.heavy_changes(&b, &[key(12345)], 0.0).unwrap().is_empty());
    }

    #[test]
    fn overflow_flag_at_sixteen_bits() {
        let centers = Centers::new(vec![1.0]).unwrap();
        let mut s = LssSketch::<f64>::with_allocation(
            centers,
            &[1],
            0,
            CounterWidth::W16,
            CuckooTable::new(4, 500, 0).unwrap(),
        )
        .unwrap();
        s.insert(&key(1), 65_535).unwrap();
        assert!(!s.overflowed());
        s.insert(&key(2), 1).unwrap();
        assert!(s.overflowed());
        // In-memory accumulators stay exact.
        assert_eq!(s.total_value(), 65_536);
        let back = LssSketch::<f64>::from_bytes(&s.to_bytes()).unwrap();
        assert!(back.overflowed());
        assert_eq!(back.buckets()[0].val_sum, 65_535);
    }

    #[test]
    fn cluster_cap() {
        let centers = Centers::new((0..257).map(f64::from).collect()).unwrap();
        let alloc = vec![1; 257];
        let r = LssSketch::with_allocation(
            centers,
            &alloc,
            0,
            CounterWidth::W32,
            CuckooTable::new(4, 1, 0).unwrap(),
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn decode_errors_carry_offsets() {
        let mut s = two_centers();
        s.insert(&key(1), 20).unwrap();
        let bytes = s.to_bytes();
        let err = LssSketch::<f64>::from_bytes(&bytes[..40]).unwrap_err();
        assert!(
            matches!(err, Error::Decode(ref d) if d.offset <= 40),
            "{err}"
        );
        let mut bad = bytes.clone();
        bad[6] = 0;
        bad[7] = 0;
        assert!(
            matches!(LssSketch::<f64>::from_bytes(&bad), Err(Error::Decode(d)) if d.offset == 6)
        );
        let mut trailing = bytes;
        trailing.push(0);
        assert!(LssSketch::<f64>::from_bytes(&trailing).is_err());
    }
}
