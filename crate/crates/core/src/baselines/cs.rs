//! Count-Sketch.

use super::{Banks, COUNTER_BYTES};
use crate::codec::{Reader, StructureTag, Writer};
use crate::error::Result;
use crate::key::FlowKey;

const SIGN_SALT: u64 = 0x51_6e_5a_17;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsSketch {
    banks: Banks,
    counters: Vec<i64>,
}

/// Lower median: for an even count the smaller of the two middle values.
pub fn lower_median(values: &mut [i64]) -> i64 {
    assert!(!values.is_empty(), "median of an empty set");
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

impl CsSketch {
    pub fn new(m: usize, c: usize, seed: u64) -> Result<Self> {
        let banks = Banks::new(m, c, seed)?;
        Ok(Self {
            counters: vec![0; banks.total()],
            banks,
        })
    }

    pub fn banks(&self) -> usize {
        self.banks.count()
    }

    pub fn m(&self) -> usize {
        self.counters.len()
    }

    /// `+1` or `-1`.
    pub fn sign(&self, bank: usize, key: &FlowKey) -> i64 {
        if key.hash_with(self.banks.bank_seed(bank) ^ SIGN_SALT) & 1 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn insert(&mut self, key: &FlowKey, value: u64) {
        let v = i64::try_from(value).unwrap_or(i64::MAX);
        for j in 0..self.banks.count() {
            let i = self.banks.index(j, key);
            self.counters[i] = self.counters[i].saturating_add(self.sign(j, key) * v);
        }
    }

    /// Signed reads `counter * sign` for every bank.
    pub fn reads(&self, key: &FlowKey) -> Vec<i64> {
        (0..self.banks.count())
            .map(|j| self.counters[self.banks.index(j, key)] * self.sign(j, key))
            .collect()
    }

    /// Raw estimate; may be negative.
    pub fn query(&self, key: &FlowKey) -> i64 {
        lower_median(&mut self.reads(key))
    }

    /// Estimate clamped at zero, for flow-size metrics.
    pub fn estimate(&self, key: &FlowKey) -> u64 {
        self.query(key).max(0) as u64
    }

    pub fn bank_total(&self, j: usize) -> i64 {
        let start = (0..j).map(|b| self.banks.width(b)).sum::<usize>();
        self.counters[start..start + self.banks.width(j)]
            .iter()
            .sum()
    }

    pub fn memory_bytes(&self) -> usize {
        self.m() * COUNTER_BYTES
    }

    /// Body: `c: u8`, `m: u32`, `seed: u64`, then `m` i64 counters.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(StructureTag::CountSketch);
        self.banks.write(&mut w);
        for &c in &self.counters {
            w.i64(c);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::with_header(bytes, StructureTag::CountSketch)?;
        let banks = Banks::read(&mut r)?;
        let mut counters = Vec::with_capacity(banks.total().min(r.remaining() / 8));
        for _ in 0..banks.total() {
            counters.push(r.i64()?);
        }
        r.finish()?;
        Ok(Self { banks, counters })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lone_key_is_exact() {
        let mut cs = CsSketch::new(30, 3, 4).unwrap();
        let k = FlowKey::from_id(77);
        cs.insert(&k, 9);
        assert_eq!(cs.query(&k), 9);
        assert_eq!(cs.reads(&k), vec![9, 9, 9]);
    }

    #[test]
    fn median_examples() {
        assert_eq!(lower_median(&mut [5, 3, 4]), 4);
        assert_eq!(lower_median(&mut [8, 2]), 2);
        assert_eq!(lower_median(&mut [1, 4, 3, 2]), 2);
    }

    #[test]
    fn bank_totals_track_signed_inserts() {
        let mut cs = CsSketch::new(12, 3, 2).unwrap();
        let mut expect = [0i64; 3];
        for i in 0..50 {
            let k = FlowKey::from_id(i);
            cs.insert(&k, i);
            for (j, e) in expect.iter_mut().enumerate() {
                *e += cs.sign(j, &k) * i as i64;
            }
        }
        for (j, e) in expect.iter().enumerate() {
            assert_eq!(cs.bank_total(j), *e);
        }
    }

    #[test]
    fn clamped_estimate() {
        let mut cs = CsSketch::new(3, 3, 0).unwrap();
        let k = FlowKey::from_id(1);
        cs.counters = vec![-5 * cs.sign(0, &k), -3 * cs.sign(1, &k), 4 * cs.sign(2, &k)];
        assert_eq!(cs.query(&k), -3);
        assert_eq!(cs.estimate(&k), 0);
    }

    #[test]
    fn round_trip() {
        let mut cs = CsSketch::new(20, 3, 5).unwrap();
        for i in 0..60 {
            cs.insert(&FlowKey::from_id(i), i);
        }
        assert_eq!(CsSketch::from_bytes(&cs.to_bytes()).unwrap(), cs);
    }
}
