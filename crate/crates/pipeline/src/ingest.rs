//! Flowlet aggregation: a bounded per-flow counter table that publishes all of
//! its entries in one batch whenever a new flow finds it full.

use indexmap::IndexMap;
use lss_core::{FlowKey, FlowRecord};

use crate::packet::{FlowletBatch, Packet, RECORD_BYTES};

pub const DEFAULT_INGEST_CAPACITY: usize = 1_000;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub packets: u64,
    pub packet_bytes: u64,
    pub batches: u64,
    pub records: u64,
    /// Emissions forced by a full table, as opposed to explicit flushes.
    pub full_flushes: u64,
}

impl IngestStats {
    /// Published record volume under the 8-byte record accounting.
    pub fn record_bytes(&self) -> u64 {
        self.records * RECORD_BYTES
    }

    /// Raw packet bytes per published record byte.
    pub fn reduction_factor(&self) -> f64 {
        if self.records == 0 {
            return f64::INFINITY;
        }
        self.packet_bytes as f64 / self.record_bytes() as f64
    }
}

#[derive(Debug)]
pub struct IngestStage {
    source_id: u32,
    capacity: usize,
    table: IndexMap<FlowKey, u64>,
    next_sequence: u64,
    last_ts: u64,
    stats: IngestStats,
}

impl IngestStage {
    pub fn new(source_id: u32, capacity: usize) -> Self {
        assert!(capacity > 0, "ingestion table needs room for one flow");
        Self {
            source_id,
            capacity,
            table: IndexMap::with_capacity(capacity),
            next_sequence: 0,
            last_ts: 0,
            stats: IngestStats::default(),
        }
    }

    pub fn source_id(&self) -> u32 {
        self.source_id
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    /// Accumulates one packet. A new flow arriving at a full table first
    /// empties the table into the returned batch.
    pub fn ingest(&mut self, pkt: &Packet) -> Option<FlowletBatch> {
        self.stats.packets += 1;
        self.stats.packet_bytes += pkt.size_bytes;
        self.last_ts = self.last_ts.max(pkt.ts_ns);
        if let Some(v) = self.table.get_mut(&pkt.key) {
            *v += pkt.size_bytes;
            return None;
        }
        let emitted = if self.table.len() >= self.capacity {
            self.stats.full_flushes += 1;
            Some(self.drain(pkt.ts_ns))
        } else {
            None
        };
        self.table.insert(pkt.key.clone(), pkt.size_bytes);
        emitted
    }

    /// Emits whatever is buffered; the batch may be empty.
    pub fn flush(&mut self) -> FlowletBatch {
        self.drain(self.last_ts)
    }

    fn drain(&mut self, at: u64) -> FlowletBatch {
        let records: Vec<FlowRecord> = self
            .table
            .drain(..)
            .map(|(k, v)| FlowRecord::new(k, v))
            .collect();
        let batch = FlowletBatch {
            source_id: self.source_id,
            sequence: self.next_sequence,
            emitted_at: at,
            records,
        };
        self.next_sequence += 1;
        self.stats.batches += 1;
        self.stats.records += batch.records.len() as u64;
        batch
    }
}
