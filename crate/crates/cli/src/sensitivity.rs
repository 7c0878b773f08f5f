//! One-axis parameter sweeps of LSS accuracy.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use lss_core::AllocationPolicy;
use serde::Serialize;

use crate::benchmark::{
    evaluate_windows, load_workload, per_seed, BenchmarkConfig, KindResult, ModelCache, SketchKind,
};
use crate::error::{config, Result};
use crate::metrics::percentile;

/// Relative slack allowed before a trend counts as broken.
pub const NOISE_BAND: f64 = 0.05;

pub const CLUSTER_SWEEP: [usize; 5] = [2, 5, 10, 30, 60];
pub const RATIO_SWEEP: [f64; 5] = [0.001, 0.01, 0.05, 0.1, 0.5];
pub const THRESHOLD_SWEEP: [f64; 4] = [80.0, 90.0, 95.0, 99.0];
pub const EPOCHS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Clusters,
    Ratio,
    Threshold,
    Epochs,
    Policy,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Clusters => "clusters",
            Self::Ratio => "ratio",
            Self::Threshold => "threshold",
            Self::Epochs => "epochs",
            Self::Policy => "policy",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = crate::HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clusters" => Ok(Self::Clusters),
            "ratio" => Ok(Self::Ratio),
            "threshold" => Ok(Self::Threshold),
            "epochs" => Ok(Self::Epochs),
            "policy" => Ok(Self::Policy),
            other => Err(config(format!("unknown sweep axis {other:?}"))),
        }
    }
}

/// LSS metrics at one sweep value, averaged over seeds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub label: String,
    pub value: f64,
    pub flow_size_mean: f64,
    pub flow_size_p50: f64,
    pub flow_size_p99: f64,
    pub entropy_error: f64,
    pub f1: f64,
    pub cardinality_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub ratio: f64,
    pub seeds: Vec<u64>,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>14} {:>11} {:>11} {:>11} {:>9} {:>6}\n",
            self.axis, "fs_mean", "fs_p50", "fs_p99", "entropy", "hh_f1"
        );
        for p in &self.points {
            let _ = writeln!(
                out,
                "{:>14} {:>11.4e} {:>11.4e} {:>11.4e} {:>9.4} {:>6.3}",
                p.label, p.flow_size_mean, p.flow_size_p50, p.flow_size_p99, p.entropy_error, p.f1
            );
        }
        out
    }
}

struct Setting {
    label: String,
    value: f64,
    clusters: usize,
    ratio: f64,
    percentile: f64,
    policy: AllocationPolicy,
    /// Evaluate only this window; the model always comes from the leading samples.
    epoch: Option<usize>,
}

fn settings(cfg: &BenchmarkConfig, axis: SweepAxis) -> Vec<Setting> {
    let base = Setting {
        label: String::new(),
        value: 0.0,
        clusters: cfg.clusters,
        ratio: cfg.ratios[0],
        percentile: cfg.hh_percentile,
        policy: cfg.policy,
        epoch: None,
    };
    let with = |label: String, value: f64, f: &dyn Fn(&mut Setting)| {
        let mut s = Setting {
            label,
            value,
            ..base
        };
        f(&mut s);
        s
    };
    match axis {
        SweepAxis::Clusters => CLUSTER_SWEEP
            .iter()
            .map(|&k| with(k.to_string(), k as f64, &|s| s.clusters = k))
            .collect(),
        SweepAxis::Ratio => RATIO_SWEEP
            .iter()
            .map(|&r| with(r.to_string(), r, &|s| s.ratio = r))
            .collect(),
        SweepAxis::Threshold => THRESHOLD_SWEEP
            .iter()
            .map(|&p| with(p.to_string(), p, &|s| s.percentile = p))
            .collect(),
        SweepAxis::Epochs => (0..EPOCHS)
            .map(|e| with((e + 1).to_string(), (e + 1) as f64, &|s| s.epoch = Some(e)))
            .collect(),
        SweepAxis::Policy => std::iter::once(AllocationPolicy::UNIFORM)
            .chain(AllocationPolicy::ablations())
            .enumerate()
            .map(|(i, p)| with(p.label(), i as f64, &|s| s.policy = p))
            .collect(),
    }
}

/// Sweeps `axis` with every other parameter held at its configured value.
///
/// The epochs axis replays [`EPOCHS`] consecutive windows against a model fitted
/// on the leading training samples.
pub fn run_sensitivity(cfg: &BenchmarkConfig, axis: SweepAxis) -> Result<SweepReport> {
    cfg.validate()?;
    let mut cfg = BenchmarkConfig {
        kinds: vec![SketchKind::Lss],
        ..cfg.clone()
    };
    if axis == SweepAxis::Epochs {
        cfg.windows = cfg.windows.max(EPOCHS);
    }
    let settings = settings(&cfg, axis);
    let per_seed_results = per_seed(&cfg, |seed| {
        let work = load_workload(&cfg, seed)?;
        let mut models = ModelCache::new(&work.train, seed);
        let mut out = Vec::new();
        for s in &settings {
            let run_cfg = BenchmarkConfig {
                policy: s.policy,
                ..cfg.clone()
            };
            let m = run_cfg.buckets(s.ratio);
            let model = models.get(s.clusters.min(m))?;
            let threshold = percentile(&work.train, s.percentile).expect("non-empty training set");
            let windows = match s.epoch {
                Some(e) => work
                    .windows
                    .get(e..=e)
                    .ok_or_else(|| config("trace too short for the epoch sweep"))?,
                None => &work.windows[..],
            };
            let (_, results) = evaluate_windows(&run_cfg, windows, model, m, threshold, seed)?;
            out.push(results.into_iter().next().expect("LSS result"));
        }
        Ok(out)
    })?;

    let n = per_seed_results.len() as f64;
    let mean = |f: &dyn Fn(&KindResult) -> f64, i: usize| {
        per_seed_results.iter().map(|r| f(&r[i])).sum::<f64>() / n
    };
    let points = settings
        .iter()
        .enumerate()
        .map(|(i, s)| SweepPoint {
            label: s.label.clone(),
            value: s.value,
            flow_size_mean: mean(&|r| r.flow_size.mean, i),
            flow_size_p50: mean(&|r| r.flow_size.p50, i),
            flow_size_p99: mean(&|r| r.flow_size.p99, i),
            entropy_error: mean(&|r| r.entropy_error, i),
            f1: mean(&|r| r.heavy_hitters.f1, i),
            cardinality_error: mean(&|r| r.cardinality_error.unwrap_or(0.0), i),
        })
        .collect();
    Ok(SweepReport {
        axis,
        ratio: cfg.ratios[0],
        seeds: cfg.seeds.clone(),
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + NOISE_BAND))
}

/// Expected shape of a sweep, where one is defined.
pub fn trend_checks(report: &SweepReport) -> Vec<TrendCheck> {
    let pts = &report.points;
    let at = |v: f64| pts.iter().find(|p| p.value == v);
    match report.axis {
        SweepAxis::Clusters => {
            let upto: Vec<f64> = pts
                .iter()
                .filter(|p| p.value <= 30.0)
                .map(|p| p.flow_size_mean)
                .collect();
            let mut out = vec![TrendCheck {
                name: "error non-increasing up to 30 clusters".into(),
                passed: non_increasing(&upto),
                detail: format!("{upto:.4?}"),
            }];
            if let (Some(k10), Some(k30), Some(k60)) = (at(10.0), at(30.0), at(60.0)) {
                let early = (k10.flow_size_mean - k30.flow_size_mean) / 20.0;
                let late = (k30.flow_size_mean - k60.flow_size_mean) / 30.0;
                out.push(TrendCheck {
                    name: "gain per cluster flattens after 30".into(),
                    passed: late <= early.max(0.0) + NOISE_BAND * k30.flow_size_mean / 30.0,
                    detail: format!("10->30 {early:.3e}/cluster, 30->60 {late:.3e}/cluster"),
                });
            }
            out
        }
        SweepAxis::Threshold => {
            let f1: Vec<f64> = pts.iter().map(|p| p.f1).collect();
            vec![TrendCheck {
                name: "f1 non-increasing as the percentile rises".into(),
                passed: non_increasing(&f1),
                detail: format!("{f1:.4?}"),
            }]
        }
        SweepAxis::Epochs => {
            let Some(first) = pts.first() else {
                return Vec::new();
            };
            let worst = pts.iter().map(|p| p.flow_size_mean).fold(0.0, f64::max);
            vec![TrendCheck {
                name: "later epochs within 2x of epoch 1".into(),
                passed: worst < 2.0 * first.flow_size_mean,
                detail: format!("epoch 1 {:.4e}, worst {worst:.4e}", first.flow_size_mean),
            }]
        }
        SweepAxis::Ratio => {
            let err: Vec<f64> = pts.iter().map(|p| p.flow_size_mean).collect();
            vec![TrendCheck {
                name: "error non-increasing with memory".into(),
                passed: non_increasing(&err),
                detail: format!("{err:.4?}"),
            }]
        }
        SweepAxis::Policy => Vec::new(),
    }
}
