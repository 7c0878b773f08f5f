//! Network-wide queries over the envelopes stored for a time range.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use lss_core::{FlowKey, Sketch};
use serde::Serialize;

use crate::envelope::{SketchEnvelope, WindowRef};
use crate::error::{invalid, PipelineError, Result};
use crate::store::QueryStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryTask {
    FlowSize,
    Entropy,
    HeavyHitters,
    Cardinality,
    HeavyChanges,
}

impl QueryTask {
    pub const ALL: [Self; 5] = [
        Self::FlowSize,
        Self::Entropy,
        Self::HeavyHitters,
        Self::Cardinality,
        Self::HeavyChanges,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::FlowSize => "flow-size",
            Self::Entropy => "entropy",
            Self::HeavyHitters => "heavy-hitters",
            Self::Cardinality => "cardinality",
            Self::HeavyChanges => "heavy-changes",
        }
    }
}

impl fmt::Display for QueryTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueryTask {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| invalid(format!("unknown query task {s:?}")))
    }
}

#[derive(Clone, Debug, Default)]
pub struct QueryParams {
    /// Flows to evaluate. Sketches keep no key list, so per-flow tasks need them.
    pub keys: Vec<FlowKey>,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyEstimate {
    pub key: String,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowSizes {
    pub window: WindowRef,
    pub estimates: Vec<KeyEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowValue {
    pub window: WindowRef,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowEstimate {
    pub source_id: u32,
    pub window_id: u64,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeavyHitter {
    pub key: String,
    pub estimates: Vec<WindowEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowChange {
    pub source_id: u32,
    pub from_window: u64,
    pub to_window: u64,
    pub keys: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum QueryReport {
    FlowSize {
        windows: Vec<WindowSizes>,
    },
    Entropy {
        windows: Vec<WindowValue>,
    },
    HeavyHitters {
        hitters: Vec<HeavyHitter>,
    },
    Cardinality {
        total: u64,
        windows: Vec<WindowValue>,
    },
    HeavyChanges {
        changes: Vec<WindowChange>,
    },
}

pub fn network_wide_query(
    store: &QueryStore,
    t0: u64,
    t1: u64,
    task: QueryTask,
    params: &QueryParams,
) -> Result<QueryReport> {
    evaluate(&store.range(t0, t1)?, task, params)
}

/// Runs `task` over already loaded envelopes, in the given order.
pub fn evaluate(
    envelopes: &[SketchEnvelope],
    task: QueryTask,
    params: &QueryParams,
) -> Result<QueryReport> {
    let sketches: Vec<(WindowRef, Sketch)> = envelopes
        .iter()
        .map(|e| Ok((e.window(), e.sketch()?)))
        .collect::<Result<_>>()?;
    let need_keys = || {
        if params.keys.is_empty() {
            Err(invalid(format!("{task} queries need candidate flow keys")))
        } else {
            Ok(())
        }
    };

    Ok(match task {
        QueryTask::FlowSize => {
            need_keys()?;
            let windows = sketches
                .iter()
                .map(|(w, s)| WindowSizes {
                    window: w.clone(),
                    estimates: params
                        .keys
                        .iter()
                        .filter_map(|k| {
                            s.query(k).ok().map(|e| KeyEstimate {
                                key: k.to_string(),
                                estimate: e,
                            })
                        })
                        .collect(),
                })
                .collect();
            QueryReport::FlowSize { windows }
        }
        QueryTask::Entropy => {
            let mut windows = Vec::new();
            for (w, s) in &sketches {
                let value = if params.keys.is_empty() {
                    s.window_entropy()
                } else {
                    let present: Vec<FlowKey> = params
                        .keys
                        .iter()
                        .filter(|k| s.query(k).is_ok())
                        .cloned()
                        .collect();
                    if present.is_empty() {
                        continue;
                    }
                    s.entropy(&present)?
                };
                windows.push(WindowValue {
                    window: w.clone(),
                    value,
                });
            }
            QueryReport::Entropy { windows }
        }
        QueryTask::HeavyHitters => {
            need_keys()?;
            let mut hitters: BTreeMap<FlowKey, Vec<WindowEstimate>> = BTreeMap::new();
            for (w, s) in &sketches {
                for (k, e) in s.heavy_hitters(&params.keys, params.threshold) {
                    hitters.entry(k).or_default().push(WindowEstimate {
                        source_id: w.source_id,
                        window_id: w.window_id,
                        estimate: e,
                    });
                }
            }
            QueryReport::HeavyHitters {
                hitters: hitters
                    .into_iter()
                    .map(|(k, estimates)| HeavyHitter {
                        key: k.to_string(),
                        estimates,
                    })
                    .collect(),
            }
        }
        QueryTask::Cardinality => {
            let windows: Vec<WindowValue> = sketches
                .iter()
                .map(|(w, s)| WindowValue {
                    window: w.clone(),
                    value: s.cardinality() as f64,
                })
                .collect();
            let total = sketches.iter().map(|(_, s)| s.cardinality()).sum();
            QueryReport::Cardinality { total, windows }
        }
        QueryTask::HeavyChanges => {
            need_keys()?;
            let mut by_source: BTreeMap<u32, Vec<&(WindowRef, Sketch)>> = BTreeMap::new();
            for entry in &sketches {
                by_source.entry(entry.0.source_id).or_default().push(entry);
            }
            let mut changes = Vec::new();
            for (source_id, mut windows) in by_source {
                windows.sort_by_key(|(w, _)| w.window_id);
                for pair in windows.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    let keys = a.1.heavy_changes(&b.1, &params.keys, params.threshold)?;
                    changes.push(WindowChange {
                        source_id,
                        from_window: a.0.window_id,
                        to_window: b.0.window_id,
                        keys: keys.iter().map(ToString::to_string).collect(),
                    });
                }
            }
            QueryReport::HeavyChanges { changes }
        }
    })
}
