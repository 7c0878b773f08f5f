//! (2,4) cuckoo table mapping 16-bit flow fingerprints to a cluster index and,
//! while the window is open, the flow's running total.
//!
//! Candidate buckets follow partial-key cuckoo hashing: `i1 = h(key)`,
//! `i2 = i1 ^ h(fingerprint)`, so a displaced fingerprint can find its
//! alternate bucket without the original key.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{DecodeError, Reader, StructureTag, Writer};
use crate::error::{invalid, Error, Result};
use crate::key::{seeded_hash, FlowKey};

pub const SLOTS_PER_BUCKET: usize = 4;
pub const DEFAULT_MAX_KICKS: usize = 500;
pub const MAX_LOAD_FACTOR: f64 = 0.95;
/// Bytes per slot once squeezed: fingerprint plus cluster index.
pub const SQUEEZED_SLOT_BYTES: usize = 3;
/// Bytes per slot while open: adds the cached 64-bit running total.
pub const OPEN_SLOT_BYTES: usize = 11;

const EMPTY: u16 = 0;
const ALT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const NO_VALUE: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Slot {
    fingerprint: u16,
    cluster: u8,
    cached: Option<u64>,
}

impl Slot {
    fn is_empty(&self) -> bool {
        self.fingerprint == EMPTY
    }
}

/// Payload stored for a flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Membership {
    pub cluster: u8,
    pub cached: Option<u64>,
}

/// Where a key lives in the table. Two keys with equal tags are indistinguishable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag {
    pub fingerprint: u16,
    /// Smaller of the two candidate bucket indexes.
    pub bucket: usize,
}

#[derive(Clone, Debug)]
pub struct CuckooTable {
    buckets: Vec<[Slot; SLOTS_PER_BUCKET]>,
    max_kicks: usize,
    seed: u64,
    len: usize,
    squeezed: bool,
    rng: ChaCha8Rng,
}

impl PartialEq for CuckooTable {
    fn eq(&self, other: &Self) -> bool {
        self.buckets == other.buckets
            && self.max_kicks == other.max_kicks
            && self.seed == other.seed
            && self.squeezed == other.squeezed
    }
}

impl CuckooTable {
    /// `bucket_count` must be a power of two.
    pub fn new(bucket_count: usize, max_kicks: usize, seed: u64) -> Result<Self> {
        if bucket_count == 0 || !bucket_count.is_power_of_two() {
            return Err(invalid(format!(
                "bucket count {bucket_count} is not a power of two"
            )));
        }
        if bucket_count > u32::MAX as usize {
            return Err(invalid("bucket count too large"));
        }
        Ok(Self {
            buckets: vec![[Slot::default(); SLOTS_PER_BUCKET]; bucket_count],
            max_kicks,
            seed,
            len: 0,
            squeezed: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Sized for `expected` flows: `1.2 * expected` slots rounded up to a power of two.
    pub fn for_flows(expected: usize, seed: u64) -> Self {
        let slots = ((expected.max(1) as f64 * 1.2).ceil() as usize).next_power_of_two();
        let buckets = (slots / SLOTS_PER_BUCKET).max(1);
        Self::new(buckets, DEFAULT_MAX_KICKS, seed).expect("power of two")
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn slot_count(&self) -> usize {
        self.buckets.len() * SLOTS_PER_BUCKET
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn load_factor(&self) -> f64 {
        self.len as f64 / self.slot_count() as f64
    }

    pub fn max_kicks(&self) -> usize {
        self.max_kicks
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_squeezed(&self) -> bool {
        self.squeezed
    }

    /// Serialized slot footprint.
    pub fn memory_bytes(&self) -> usize {
        self.slot_count()
            * if self.squeezed {
                SQUEEZED_SLOT_BYTES
            } else {
                OPEN_SLOT_BYTES
            }
    }

    fn mask(&self) -> usize {
        self.buckets.len() - 1
    }

    fn fingerprint_and_index(&self, key: &FlowKey) -> (u16, usize) {
        let h = key.hash_with(self.seed);
        let fp = match (h >> 48) as u16 {
            EMPTY => 1,
            fp => fp,
        };
        (fp, h as usize & self.mask())
    }

    fn alt_index(&self, index: usize, fp: u16) -> usize {
        index ^ (seeded_hash(&fp.to_le_bytes(), self.seed ^ ALT_SALT) as usize & self.mask())
    }

    /// Primary and alternate bucket of `key`; equal when the key has a single candidate.
    pub fn candidates(&self, key: &FlowKey) -> (usize, usize) {
        let (fp, i1) = self.fingerprint_and_index(key);
        (i1, self.alt_index(i1, fp))
    }

    pub fn tag(&self, key: &FlowKey) -> Tag {
        let (fp, i1) = self.fingerprint_and_index(key);
        Tag {
            fingerprint: fp,
            bucket: i1.min(self.alt_index(i1, fp)),
        }
    }

    fn find(&self, key: &FlowKey) -> Option<(usize, usize)> {
        let (fp, i1) = self.fingerprint_and_index(key);
        let i2 = self.alt_index(i1, fp);
        [i1, i2].into_iter().find_map(|b| {
            self.buckets[b]
                .iter()
                .position(|s| s.fingerprint == fp)
                .map(|s| (b, s))
        })
    }

    pub fn lookup(&self, key: &FlowKey) -> Option<Membership> {
        self.find(key).map(|(b, s)| {
            let slot = self.buckets[b][s];
            Membership {
                cluster: slot.cluster,
                cached: slot.cached,
            }
        })
    }

    pub fn contains(&self, key: &FlowKey) -> bool {
        self.find(key).is_some()
    }

    fn check_open(&self, value: Option<u64>) -> Result<()> {
        if self.squeezed && value.is_some() {
            return Err(Error::Sealed);
        }
        if value == Some(NO_VALUE) {
            return Err(invalid("cached value u64::MAX is reserved"));
        }
        Ok(())
    }

    /// Stores a new key. On `CapacityExceeded` the table is left as it was.
    pub fn insert(&mut self, key: &FlowKey, cluster: u8, value: Option<u64>) -> Result<()> {
        self.check_open(value)?;
        if (self.len + 1) as f64 > MAX_LOAD_FACTOR * self.slot_count() as f64 {
            return Err(Error::CapacityExceeded { kicks: 0 });
        }
        let (fp, i1) = self.fingerprint_and_index(key);
        let i2 = self.alt_index(i1, fp);
        let mut entry = Slot {
            fingerprint: fp,
            cluster,
            cached: value,
        };
        for b in [i1, i2] {
            if self.place(b, entry) {
                self.len += 1;
                return Ok(());
            }
        }

        let mut b = if self.rng.random::<bool>() { i1 } else { i2 };
        let mut path: Vec<(usize, usize)> = Vec::new();
        for _ in 0..self.max_kicks {
            let s = self.rng.random_range(0..SLOTS_PER_BUCKET);
            std::mem::swap(&mut entry, &mut self.buckets[b][s]);
            path.push((b, s));
            b = self.alt_index(b, entry.fingerprint);
            if self.place(b, entry) {
                self.len += 1;
                return Ok(());
            }
        }
        // Undo the displacement chain so no resident fingerprint is lost.
        for (b, s) in path.into_iter().rev() {
            std::mem::swap(&mut entry, &mut self.buckets[b][s]);
        }
        debug_assert_eq!(entry.fingerprint, fp);
        Err(Error::CapacityExceeded {
            kicks: self.max_kicks,
        })
    }

    fn place(&mut self, b: usize, entry: Slot) -> bool {
        match self.buckets[b].iter_mut().find(|s| s.is_empty()) {
            Some(slot) => {
                *slot = entry;
                true
            }
            None => false,
        }
    }

    pub fn update(&mut self, key: &FlowKey, cluster: u8, value: Option<u64>) -> Result<()> {
        self.check_open(value)?;
        let (b, s) = self.find(key).ok_or(Error::NotFound)?;
        let slot = &mut self.buckets[b][s];
        slot.cluster = cluster;
        slot.cached = value;
        Ok(())
    }

    pub fn delete(&mut self, key: &FlowKey) -> Result<()> {
        let (b, s) = self.find(key).ok_or(Error::NotFound)?;
        self.buckets[b][s] = Slot::default();
        self.len -= 1;
        Ok(())
    }

    /// Drops every cached running total, keeping fingerprint and cluster index.
    pub fn squeeze(&mut self) {
        for slot in self.buckets.iter_mut().flatten() {
            slot.cached = None;
        }
        self.squeezed = true;
    }

    pub fn squeezed(mut self) -> Self {
        self.squeeze();
        self
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(StructureTag::Membership);
        self.write_body(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::with_header(bytes, StructureTag::Membership)?;
        let t = Self::read_body(&mut r)?;
        r.finish()?;
        Ok(t)
    }

    /// bucket count, max kicks, seed, squeezed flag, then fixed-width slot records.
    pub(crate) fn write_body(&self, w: &mut Writer) {
        w.u32(self.buckets.len() as u32);
        w.u32(self.max_kicks as u32);
        w.u64(self.seed);
        w.u8(u8::from(self.squeezed));
        for slot in self.buckets.iter().flatten() {
            w.u16(slot.fingerprint);
            w.u8(slot.cluster);
            if !self.squeezed {
                w.u64(slot.cached.unwrap_or(NO_VALUE));
            }
        }
    }

    pub(crate) fn read_body(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.offset();
        let bucket_count = r.u32()? as usize;
        let max_kicks = r.u32()? as usize;
        let seed = r.u64()?;
        let squeezed = match r.u8()? {
            0 => false,
            1 => true,
            v => return Err(r.error_at(r.offset() - 1, format!("bad squeezed flag {v}"))),
        };
        let mut table =
            Self::new(bucket_count, max_kicks, seed).map_err(|e| r.error_at(at, e.to_string()))?;
        let record = if squeezed {
            SQUEEZED_SLOT_BYTES
        } else {
            OPEN_SLOT_BYTES
        };
        if r.remaining() < table.slot_count() * record {
            return Err(r.error("truncated membership slots"));
        }
        for b in 0..bucket_count {
            for s in 0..SLOTS_PER_BUCKET {
                let fingerprint = r.u16()?;
                let cluster = r.u8()?;
                let cached = if squeezed {
                    None
                } else {
                    Some(r.u64()?).filter(|&v| v != NO_VALUE)
                };
                if fingerprint == EMPTY && (cluster != 0 || cached.is_some()) {
                    return Err(r.error("payload stored in an empty slot"));
                }
                table.len += usize::from(fingerprint != EMPTY);
                table.buckets[b][s] = Slot {
                    fingerprint,
                    cluster,
                    cached,
                };
            }
        }
        table.squeezed = squeezed;
        Ok(table)
    }
}
