//! End-to-end run: packets are sharded by flow over ingestion workers, each
//! publishing flowlets to its own topic; one sketching worker per topic
//! publishes closed windows to a shared topic; a query worker stores them.

use std::collections::{HashMap, HashSet};
use std::sync::mpsc::sync_channel;
use std::sync::Arc;
use std::thread;
use std::time::{SystemTime, UNIX_EPOCH};

use lss_core::{CounterWidth, FlowKey, LssOptions, Model};
use serde::Serialize;

use crate::bus::{Bus, DEFAULT_CHANNEL_BOUND};
use crate::envelope::SketchEnvelope;
use crate::error::{invalid, PipelineError, Result};
use crate::ingest::{IngestStage, IngestStats, DEFAULT_INGEST_CAPACITY};
use crate::packet::{FlowletBatch, Packet};
use crate::store::QueryStore;
use crate::window::{SketchingStage, SketchingStats, WindowConfig};

pub const SKETCH_TOPIC: &str = "sketches";
const DISPATCH_SEED: u64 = 0xd15_7a7c;

pub fn flowlet_topic(source: u32) -> String {
    format!("flowlets/{source}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrivalClock {
    /// Stamp arrivals with the window's end timestamp; reproducible.
    WindowEnd,
    WallClock,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub sources: usize,
    pub ingest_capacity: usize,
    pub window: WindowConfig,
    pub m: usize,
    pub options: LssOptions,
    pub channel_bound: usize,
    pub arrival: ArrivalClock,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sources: 2,
            ingest_capacity: DEFAULT_INGEST_CAPACITY,
            window: WindowConfig::Sequence { flows: 10_000 },
            m: 1_000,
            // Byte counts overflow narrower serialized counters.
            options: LssOptions {
                counter_width: CounterWidth::W64,
                ..LssOptions::default()
            },
            channel_bound: DEFAULT_CHANNEL_BOUND,
            arrival: ArrivalClock::WindowEnd,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PipelineReport {
    pub packets: u64,
    pub packet_bytes: u64,
    pub flows: u64,
    pub flowlet_batches: u64,
    pub flowlet_records: u64,
    pub full_flushes: u64,
    pub record_bytes: u64,
    pub reduction_factor: f64,
    pub envelopes: u64,
    pub stored_value_total: u64,
    pub stored_cardinality: u64,
    pub early_rotations: u64,
    pub inconsistencies: u64,
    /// Out-of-order messages seen by any consumer, per producer.
    pub fifo_violations: u64,
}

impl PipelineReport {
    pub fn conserved(&self) -> bool {
        self.packet_bytes == self.stored_value_total
    }
}

fn join<T>(h: thread::ScopedJoinHandle<'_, Result<T>>) -> Result<T> {
    h.join()
        .map_err(|_| PipelineError::Worker("worker panicked".into()))?
}

/// Replays `packets` through all three stages into `store`.
pub fn run_pipeline<I>(
    packets: I,
    model: &Model,
    config: &PipelineConfig,
    store: &QueryStore,
) -> Result<PipelineReport>
where
    I: IntoIterator<Item = Result<Packet>>,
{
    if config.sources == 0 || config.sources > u32::MAX as usize {
        return Err(invalid("need at least one source"));
    }
    config.window.validate()?;
    let flowlets: Bus<Arc<FlowletBatch>> = Bus::new(config.channel_bound);
    let sketches: Bus<Arc<SketchEnvelope>> = Bus::new(config.channel_bound);
    let sources = config.sources as u32;

    let flowlet_rx = (0..sources)
        .map(|s| flowlets.subscribe(&flowlet_topic(s)))
        .collect::<Result<Vec<_>>>()?;
    let sketch_rx = sketches.subscribe(SKETCH_TOPIC)?;

    thread::scope(|scope| {
        let query = scope.spawn(|| -> Result<(HashSet<(u32, u64)>, u64)> {
            let mut stored = HashSet::new();
            let mut last: HashMap<u32, u64> = HashMap::new();
            let mut violations = 0;
            for env in sketch_rx {
                let mut env = (*env).clone();
                if last
                    .insert(env.source_id, env.window_id)
                    .is_some_and(|prev| prev >= env.window_id)
                {
                    violations += 1;
                }
                env.arrival_ns = match config.arrival {
                    ArrivalClock::WindowEnd => env.window_end,
                    ArrivalClock::WallClock => SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map_or(0, |d| d.as_nanos() as u64),
                };
                store.put(&env)?;
                stored.insert((env.source_id, env.window_id));
            }
            Ok((stored, violations))
        });

        let sketchers: Vec<_> = flowlet_rx
            .into_iter()
            .enumerate()
            .map(|(i, rx)| {
                let sketches = &sketches;
                scope.spawn(move || -> Result<(SketchingStats, u64)> {
                    let mut stage = SketchingStage::new(
                        format!("sketch/{i}"),
                        i as u32,
                        model.clone(),
                        config.m,
                        config.window,
                        config.options.clone(),
                    )?;
                    let mut last = None;
                    let mut violations = 0;
                    for batch in rx {
                        if last.is_some_and(|prev| prev >= batch.sequence) {
                            violations += 1;
                        }
                        last = Some(batch.sequence);
                        for r in &batch.records {
                            for env in stage.feed(r, batch.emitted_at)? {
                                sketches.publish(SKETCH_TOPIC, Arc::new(env))?;
                            }
                        }
                    }
                    if let Some(env) = stage.flush()? {
                        sketches.publish(SKETCH_TOPIC, Arc::new(env))?;
                    }
                    Ok((stage.stats().clone(), violations))
                })
            })
            .collect();

        let mut packet_tx = Vec::new();
        let mut ingesters = Vec::new();
        for s in 0..sources {
            let (tx, rx) = sync_channel::<Packet>(config.channel_bound * 64);
            packet_tx.push(tx);
            let flowlets = &flowlets;
            ingesters.push(scope.spawn(move || -> Result<IngestStats> {
                let mut stage = IngestStage::new(s, config.ingest_capacity);
                let topic = flowlet_topic(s);
                for pkt in rx {
                    if let Some(batch) = stage.ingest(&pkt) {
                        flowlets.publish(&topic, Arc::new(batch))?;
                    }
                }
                let last = stage.flush();
                if !last.is_empty() {
                    flowlets.publish(&topic, Arc::new(last))?;
                }
                Ok(stage.stats().clone())
            }));
        }

        let mut flows: HashSet<FlowKey> = HashSet::new();
        let mut feed_error = None;
        for pkt in packets {
            let pkt = match pkt {
                Ok(p) => p,
                Err(e) => {
                    feed_error = Some(e);
                    break;
                }
            };
            let shard = (pkt.key.hash_with(DISPATCH_SEED) % u64::from(sources)) as usize;
            if !flows.contains(&pkt.key) {
                flows.insert(pkt.key.clone());
            }
            if packet_tx[shard].send(pkt).is_err() {
                feed_error = Some(PipelineError::Worker(format!(
                    "ingestion worker {shard} stopped"
                )));
                break;
            }
        }
        drop(packet_tx);

        let mut report = PipelineReport {
            flows: flows.len() as u64,
            ..PipelineReport::default()
        };
        let mut first_error = feed_error;
        for h in ingesters {
            match join(h) {
                Ok(st) => {
                    report.packets += st.packets;
                    report.packet_bytes += st.packet_bytes;
                    report.flowlet_batches += st.batches;
                    report.flowlet_records += st.records;
                    report.full_flushes += st.full_flushes;
                    report.record_bytes += st.record_bytes();
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        for s in 0..sources {
            flowlets.close(&flowlet_topic(s))?;
        }
        for h in sketchers {
            match join(h) {
                Ok((st, v)) => {
                    report.early_rotations += st.early_rotations;
                    report.inconsistencies += st.inconsistencies;
                    report.fifo_violations += v;
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        sketches.close(SKETCH_TOPIC)?;
        let (stored, violations) = join(query)?;
        if let Some(e) = first_error {
            return Err(e);
        }
        report.fifo_violations += violations;
        report.reduction_factor = if report.record_bytes == 0 {
            0.0
        } else {
            report.packet_bytes as f64 / report.record_bytes as f64
        };

        for env in store.all()? {
            if stored.contains(&(env.source_id, env.window_id)) {
                let sketch = env.sketch()?;
                report.envelopes += 1;
                report.stored_value_total += sketch.total_value();
                report.stored_cardinality += sketch.cardinality();
            }
        }
        Ok(report)
    })
}
