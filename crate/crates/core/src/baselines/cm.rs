//! Count-Min sketch.

use super::{Banks, COUNTER_BYTES};
use crate::codec::{Reader, StructureTag, Writer};
use crate::error::Result;
use crate::key::FlowKey;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CmSketch {
    banks: Banks,
    counters: Vec<u64>,
}

impl CmSketch {
    /// `m` counters split across `c` banks.
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

    pub fn insert(&mut self, key: &FlowKey, value: u64) {
        for j in 0..self.banks.count() {
            let i = self.banks.index(j, key);
            self.counters[i] = self.counters[i].saturating_add(value);
        }
    }

    /// Minimum over the mapped counters; never below the true total.
    pub fn query(&self, key: &FlowKey) -> u64 {
        (0..self.banks.count())
            .map(|j| self.counters[self.banks.index(j, key)])
            .min()
            .expect("at least one bank")
    }

    /// The counter `key` maps to in each bank.
    pub fn mapped(&self, key: &FlowKey) -> Vec<u64> {
        (0..self.banks.count())
            .map(|j| self.counters[self.banks.index(j, key)])
            .collect()
    }

    pub fn bank(&self, j: usize) -> &[u64] {
        let start = (0..j).map(|b| self.banks.width(b)).sum::<usize>();
        &self.counters[start..start + self.banks.width(j)]
    }

    pub fn memory_bytes(&self) -> usize {
        self.m() * COUNTER_BYTES
    }

    /// Body: `c: u8`, `m: u32`, `seed: u64`, then `m` u64 counters.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(StructureTag::CountMin);
        self.banks.write(&mut w);
        for &c in &self.counters {
            w.u64(c);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::with_header(bytes, StructureTag::CountMin)?;
        let banks = Banks::read(&mut r)?;
        let mut counters = Vec::with_capacity(banks.total().min(r.remaining() / 8));
        for _ in 0..banks.total() {
            counters.push(r.u64()?);
        }
        r.finish()?;
        Ok(Self { banks, counters })
    }
}
