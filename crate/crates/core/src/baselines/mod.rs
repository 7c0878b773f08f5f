//! Count-Min and Count-Sketch baselines, collision analytics and the dense
//! linear-autoencoder oracle.

pub mod analytics;
pub mod cm;
pub mod cs;
pub mod oracle;

use crate::codec::{DecodeError, Reader, Writer};
use crate::error::{invalid, Result};
use crate::key::FlowKey;

/// Banks recommended for both baselines.
pub const DEFAULT_BANKS: usize = 3;

/// Bytes per baseline counter in memory accounting.
pub const COUNTER_BYTES: usize = 4;

const BANK_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// `c` hash banks sharing `m` counters. Widths differ by at most one so that
/// any `m >= c` can be split exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Banks {
    offsets: Vec<usize>,
    seed: u64,
}

impl Banks {
    pub(crate) fn new(m: usize, c: usize, seed: u64) -> Result<Self> {
        if c == 0 || c > usize::from(u8::MAX) {
            return Err(invalid(format!("bank count must be in 1..=255, got {c}")));
        }
        if m < c {
            return Err(invalid(format!("{m} counters cannot fill {c} banks")));
        }
        let mut offsets = Vec::with_capacity(c + 1);
        offsets.push(0);
        for j in 0..c {
            offsets.push(offsets[j] + m / c + usize::from(j < m % c));
        }
        Ok(Self { offsets, seed })
    }

    pub(crate) fn count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub(crate) fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub(crate) fn width(&self, bank: usize) -> usize {
        self.offsets[bank + 1] - self.offsets[bank]
    }

    pub(crate) fn bank_seed(&self, bank: usize) -> u64 {
        self.seed ^ BANK_SALT.wrapping_mul(bank as u64 + 1)
    }

    /// Flat counter index for `key` in `bank`.
    pub(crate) fn index(&self, bank: usize, key: &FlowKey) -> usize {
        self.offsets[bank]
            + (key.hash_with(self.bank_seed(bank)) % self.width(bank) as u64) as usize
    }

    pub(crate) fn write(&self, w: &mut Writer) {
        w.u8(self.count() as u8);
        w.u32(self.total() as u32);
        w.u64(self.seed);
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.offset();
        let c = r.u8()? as usize;
        let m = r.u32()? as usize;
        let seed = r.u64()?;
        Self::new(m, c, seed).map_err(|e| r.error_at(at, e.to_string()))
    }
}
