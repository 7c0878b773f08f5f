//! Packets entering ingestion and the flowlet batches it publishes.

use lss_core::codec::{Reader, Writer};
use lss_core::{FlowKey, FlowRecord};

use crate::error::{invalid, PipelineError, Result};

/// Bytes per flowlet record in traffic accounting: an 8-byte key-value pair.
pub const RECORD_BYTES: u64 = 8;

const BATCH_MAGIC: &[u8; 4] = b"LSSF";
const BATCH_VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub key: FlowKey,
    pub size_bytes: u64,
    pub ts_ns: u64,
}

impl Packet {
    pub fn new(key: FlowKey, size_bytes: u64, ts_ns: u64) -> Result<Self> {
        if size_bytes == 0 {
            return Err(invalid("packet size must be positive"));
        }
        Ok(Self {
            key,
            size_bytes,
            ts_ns,
        })
    }
}

/// Accumulated flow counters from one ingestion flush.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowletBatch {
    pub source_id: u32,
    pub sequence: u64,
    pub emitted_at: u64,
    pub records: Vec<FlowRecord>,
}

impl FlowletBatch {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_value(&self) -> u64 {
        self.records.iter().map(|r| r.value).sum()
    }

    /// `LSSF | version | source u32 | sequence u64 | emitted_at u64 | count u32`,
    /// then per record `key_len u8 | key | value u64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(BATCH_MAGIC);
        w.u8(BATCH_VERSION);
        w.u32(self.source_id);
        w.u64(self.sequence);
        w.u64(self.emitted_at);
        w.u32(self.records.len() as u32);
        for r in &self.records {
            let key = r.key.as_bytes();
            w.u8(key.len() as u8);
            w.bytes(key);
            w.u64(r.value);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != BATCH_MAGIC {
            return Err(r.error_at(0, "not a flowlet batch").into());
        }
        let version = r.u8()?;
        if version != BATCH_VERSION {
            return Err(r
                .error_at(4, format!("unsupported version {version}"))
                .into());
        }
        let source_id = r.u32()?;
        let sequence = r.u64()?;
        let emitted_at = r.u64()?;
        let count = r.u32()? as usize;
        let mut records = Vec::with_capacity(count.min(r.remaining() / 10));
        for _ in 0..count {
            let at = r.offset();
            let len = r.u8()? as usize;
            let key = FlowKey::new(r.take(len)?.to_vec()).map_err(|e| PipelineError::Decode {
                offset: at,
                reason: e.to_string(),
            })?;
            records.push(FlowRecord::new(key, r.u64()?));
        }
        r.finish()?;
        Ok(Self {
            source_id,
            sequence,
            emitted_at,
            records,
        })
    }
}
