//! The sketching stage: feeds flowlet records into one LSS sketch per window
//! and emits each closed window as an envelope.

use lss_core::{Error as SketchError, FlowRecord, LssOptions, Model, Sketch};
use serde::{Deserialize, Serialize};

use crate::envelope::SketchEnvelope;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowConfig {
    /// Close after this many distinct flows.
    Sequence { flows: usize },
    /// Aligned intervals `[t - t % d, t - t % d + d)`.
    Time { duration_ns: u64 },
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Sequence { flows: 0 } | Self::Time { duration_ns: 0 } => {
                Err(invalid("window capacity must be positive"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchingStats {
    pub records: u64,
    pub value_total: u64,
    pub envelopes: u64,
    /// Windows closed early because the membership table was full.
    pub early_rotations: u64,
    /// Remaps skipped after a fingerprint collision; values stayed conserved.
    pub inconsistencies: u64,
}

pub struct SketchingStage {
    topic: String,
    source_id: u32,
    model: Model,
    m: usize,
    options: LssOptions,
    window: WindowConfig,
    sketch: Sketch,
    window_id: u64,
    bounds: Option<(u64, u64)>,
    stats: SketchingStats,
}

impl SketchingStage {
    pub fn new(
        topic: impl Into<String>,
        source_id: u32,
        model: Model,
        m: usize,
        window: WindowConfig,
        mut options: LssOptions,
    ) -> Result<Self> {
        window.validate()?;
        if let WindowConfig::Sequence { flows } = window {
            options.expected_flows = Some(flows);
        }
        let sketch = Sketch::new(&model, m, options.clone())?;
        Ok(Self {
            topic: topic.into(),
            source_id,
            model,
            m,
            options,
            window,
            sketch,
            window_id: 0,
            bounds: None,
            stats: SketchingStats::default(),
        })
    }

    pub fn stats(&self) -> &SketchingStats {
        &self.stats
    }

    pub fn current(&self) -> &Sketch {
        &self.sketch
    }

    pub fn window_id(&self) -> u64 {
        self.window_id
    }

    /// Inserts one record observed at `ts`. Returns the windows it closed:
    /// a time boundary, an early rotation, or a full sequence window.
    pub fn feed(&mut self, record: &FlowRecord, ts: u64) -> Result<Vec<SketchEnvelope>> {
        let mut out = Vec::new();
        if let (WindowConfig::Time { .. }, Some((_, end))) = (self.window, self.bounds) {
            if ts >= end {
                out.extend(self.rotate()?);
            }
        }
        self.open_bounds(ts);

        match self.sketch.insert_duplicate(&record.key, record.value) {
            Ok(_) => {}
            Err(SketchError::CapacityExceeded { kicks }) => {
                log::warn!(
                    "{}: membership table full after {kicks} kicks; closing window {} early",
                    self.topic,
                    self.window_id
                );
                self.stats.early_rotations += 1;
                let bounds = self.bounds;
                out.extend(self.rotate()?);
                if matches!(self.window, WindowConfig::Time { .. }) {
                    self.bounds = bounds;
                }
                self.open_bounds(ts);
                self.sketch.insert_duplicate(&record.key, record.value)?;
            }
            Err(SketchError::Inconsistent(msg)) => {
                log::warn!("{}: {msg}", self.topic);
                self.stats.inconsistencies += 1;
            }
            Err(e) => return Err(e.into()),
        }
        self.stats.records += 1;
        self.stats.value_total += record.value;
        if let Some((start, end)) = &mut self.bounds {
            if matches!(self.window, WindowConfig::Sequence { .. }) {
                *start = (*start).min(ts);
                *end = (*end).max(ts);
            }
        }

        if let WindowConfig::Sequence { flows } = self.window {
            if self.sketch.cardinality() >= flows as u64 {
                out.extend(self.rotate()?);
            }
        }
        Ok(out)
    }

    fn open_bounds(&mut self, ts: u64) {
        if self.bounds.is_none() {
            self.bounds = Some(match self.window {
                WindowConfig::Sequence { .. } => (ts, ts),
                WindowConfig::Time { duration_ns } => {
                    let start = ts - ts % duration_ns;
                    (start, start.saturating_add(duration_ns))
                }
            });
        }
    }

    /// Closes the current window if it holds anything.
    pub fn flush(&mut self) -> Result<Option<SketchEnvelope>> {
        self.rotate()
    }

    fn rotate(&mut self) -> Result<Option<SketchEnvelope>> {
        let Some((start, end)) = self.bounds.take() else {
            return Ok(None);
        };
        let fresh = Sketch::new(&self.model, self.m, self.options.clone())?;
        let mut closed = std::mem::replace(&mut self.sketch, fresh);
        closed.seal();
        let env = SketchEnvelope {
            topic: self.topic.clone(),
            source_id: self.source_id,
            window_id: self.window_id,
            window_start: start,
            window_end: end,
            arrival_ns: 0,
            payload: closed.to_bytes(),
        };
        self.window_id += 1;
        self.stats.envelopes += 1;
        Ok(Some(env))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lss_core::{cluster_stats, FlowKey};

    fn model() -> Model {
        cluster_stats(&[1.0, 10.0, 100.0], &[1.0, 10.0, 100.0]).unwrap()
    }

    fn rec(id: u64, v: u64) -> FlowRecord {
        FlowRecord::new(FlowKey::from_id(id), v)
    }

    #[test]
    fn sequence_window_counts_distinct_flows() {
        let mut s = SketchingStage::new(
            "s",
            0,
            model(),
            6,
            WindowConfig::Sequence { flows: 3 },
            LssOptions::default(),
        )
        .unwrap();
        for _ in 0..10 {
            assert!(s.feed(&rec(1, 5), 0).unwrap().is_empty());
        }
        assert!(s.feed(&rec(2, 5), 1).unwrap().is_empty());
        let out = s.feed(&rec(3, 5), 2).unwrap();
        assert_eq!(out.len(), 1);
        let sketch = out[0].sketch().unwrap();
        assert_eq!(sketch.cardinality(), 3);
        assert_eq!(sketch.total_value(), 60);
        assert_eq!((out[0].window_start, out[0].window_end), (0, 2));
        assert_eq!(s.current().cardinality(), 0);
        assert!(s.flush().unwrap().is_none());
    }

    #[test]
    fn time_window_closes_on_first_later_record() {
        const S: u64 = 1_000_000_000;
        let mut s = SketchingStage::new(
            "t",
            0,
            model(),
            6,
            WindowConfig::Time { duration_ns: S },
            LssOptions::default(),
        )
        .unwrap();
        for i in 1..10 {
            assert!(s.feed(&rec(i, 2), i * S / 10).unwrap().is_empty());
        }
        let out = s.feed(&rec(99, 2), 12 * S / 10).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].window_start, out[0].window_end), (0, S));
        assert_eq!(out[0].sketch().unwrap().cardinality(), 9);
        let last = s.flush().unwrap().unwrap();
        assert_eq!(
            (last.window_start, last.window_end, last.window_id),
            (S, 2 * S, 1)
        );
    }

    #[test]
    fn full_table_rotates_early_without_loss() {
        let opts = LssOptions {
            expected_flows: Some(1),
            ..LssOptions::default()
        };
        let mut s = SketchingStage::new(
            "c",
            0,
            model(),
            3,
            WindowConfig::Time {
                duration_ns: u64::MAX,
            },
            opts,
        )
        .unwrap();
        let mut envs = Vec::new();
        for i in 0..50 {
            envs.extend(s.feed(&rec(i, 1), i).unwrap());
        }
        envs.extend(s.flush().unwrap());
        assert!(s.stats().early_rotations > 0);
        let total: u64 = envs.iter().map(|e| e.sketch().unwrap().total_value()).sum();
        assert_eq!(total, 50);
        assert!(envs.windows(2).all(|w| w[0].window_id < w[1].window_id));
    }
}
