//! Equal-memory comparison of LSS against Count-Min and Count-Sketch.
//!
//! Each window is replayed into a fresh instance of every sketch kind. LSS is
//! charged for its buckets, centers and squeezed membership table; the
//! baselines get as many 4-byte counters as fit in that budget.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;
use std::thread;
use std::time::Instant;

use indexmap::IndexMap;
use lss_core::baselines::{COUNTER_BYTES, DEFAULT_BANKS};
use lss_core::clustering::{DEFAULT_CLUSTERS, DEFAULT_TRAIN_SAMPLES};
use lss_core::sketch::MAX_CLUSTERS;
use lss_core::{
    size_entropy, AllocationPolicy, CmSketch, CounterWidth, CsSketch, Error as SketchError,
    FlowKey, FlowRecord, KMeansConfig, LssOptions, Model, Sketch,
};
use lss_pipeline::{IngestStage, TraceReader};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{config, Result};
use crate::metrics::{detection, percentile, relative_error, Detection, ErrorSummary};
use crate::tracegen::{flow_key, flow_sizes, zipf_support};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchKind {
    Lss,
    Cm,
    Cs,
}

impl SketchKind {
    pub const ALL: [SketchKind; 3] = [SketchKind::Lss, SketchKind::Cm, SketchKind::Cs];
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lss => "lss",
            Self::Cm => "cm",
            Self::Cs => "cs",
        })
    }
}

impl FromStr for SketchKind {
    type Err = crate::HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lss" => Ok(Self::Lss),
            "cm" => Ok(Self::Cm),
            "cs" => Ok(Self::Cs),
            other => Err(config(format!("unknown sketch kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceSource {
    /// Flow sizes drawn directly, `window * windows` flows in total.
    Zipf { s: f64, mean_packets: f64 },
    /// A CSV packet trace, aggregated through an ingestion table.
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    pub kinds: Vec<SketchKind>,
    /// Bucket budget `m / N` for each comparison row.
    pub ratios: Vec<f64>,
    /// Distinct flows per window.
    pub window: usize,
    /// Windows replayed per seed.
    pub windows: usize,
    pub clusters: usize,
    pub hh_percentile: f64,
    pub counter_width: CounterWidth,
    pub seeds: Vec<u64>,
    pub trace: TraceSource,
    pub train_samples: usize,
    pub policy: AllocationPolicy,
    pub banks: usize,
    /// Generated flows arrive split into 1..=max_fragments records.
    pub max_fragments: u64,
    pub ingest_capacity: usize,
    /// Shard seeds across threads; rows come back in seed order either way.
    pub parallel: bool,
    /// Record wall-clock timings. They make the report non-reproducible.
    pub timings: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            kinds: SketchKind::ALL.to_vec(),
            ratios: vec![0.1],
            window: 10_000,
            windows: 1,
            clusters: DEFAULT_CLUSTERS,
            hh_percentile: 90.0,
            counter_width: CounterWidth::W32,
            seeds: vec![0],
            trace: TraceSource::Zipf {
                s: 1.1,
                mean_packets: 10.0,
            },
            train_samples: DEFAULT_TRAIN_SAMPLES,
            policy: AllocationPolicy::default(),
            banks: DEFAULT_BANKS,
            max_fragments: 4,
            ingest_capacity: lss_pipeline::ingest::DEFAULT_INGEST_CAPACITY,
            parallel: false,
            timings: false,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() || self.seeds.is_empty() || self.ratios.is_empty() {
            return Err(config("need at least one sketch kind, seed and ratio"));
        }
        if let Some(r) = self.ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(config(format!("ratio {r} outside (0, 1]")));
        }
        if self.window == 0 || self.windows == 0 || self.train_samples == 0 {
            return Err(config(
                "window size, window count and training samples must be positive",
            ));
        }
        if !(self.hh_percentile > 0.0 && self.hh_percentile < 100.0) {
            return Err(config("heavy-hitter percentile must lie in (0, 100)"));
        }
        if self.clusters == 0 || self.clusters > MAX_CLUSTERS {
            return Err(config(format!("clusters must lie in 1..={MAX_CLUSTERS}")));
        }
        if self.banks == 0
            || self.banks > 255
            || self.max_fragments == 0
            || self.ingest_capacity == 0
        {
            return Err(config(
                "banks, fragments and ingestion capacity must be positive",
            ));
        }
        if let TraceSource::Zipf { s, mean_packets } = self.trace {
            if !(s > 0.0 && mean_packets >= 1.0) {
                return Err(config(
                    "zipf exponent must be positive and mean size at least one packet",
                ));
            }
        }
        Ok(())
    }

    /// LSS bucket count for a ratio.
    pub fn buckets(&self, ratio: f64) -> usize {
        ((ratio * self.window as f64).round() as usize).max(1)
    }
}

/// One window of records plus its exact per-flow totals in first-seen order.
#[derive(Clone, Debug, Default)]
pub struct WindowData {
    pub records: Vec<FlowRecord>,
    pub truth: IndexMap<FlowKey, u64>,
}

#[derive(Clone, Debug)]
pub struct Workload {
    /// Flow totals the cluster model and the heavy-hitter threshold are fitted on.
    pub train: Vec<f64>,
    pub windows: Vec<WindowData>,
}

/// Splits `total` into between 1 and `max` positive parts.
fn fragment<R: Rng>(rng: &mut R, total: u64, max: u64) -> Vec<u64> {
    let parts = rng.random_range(1..=max.min(total));
    if parts == 1 {
        return vec![total];
    }
    let mut cuts: Vec<u64> = index::sample(rng, (total - 1) as usize, (parts - 1) as usize)
        .into_iter()
        .map(|c| c as u64 + 1)
        .collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out: Vec<u64> = cuts
        .into_iter()
        .map(|c| {
            let part = c - prev;
            prev = c;
            part
        })
        .collect();
    out.push(total - prev);
    out
}

pub fn load_workload(cfg: &BenchmarkConfig, seed: u64) -> Result<Workload> {
    let windows = match &cfg.trace {
        TraceSource::Zipf { s, mean_packets } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let support = zipf_support(*s, *mean_packets)?;
            let sizes = flow_sizes(&mut rng, cfg.window * cfg.windows, *s, support)?;
            sizes
                .chunks(cfg.window)
                .enumerate()
                .map(|(w, chunk)| {
                    let mut win = WindowData::default();
                    for (j, &size) in chunk.iter().enumerate() {
                        let key = flow_key(seed, (w * cfg.window + j) as u64);
                        for part in fragment(&mut rng, size, cfg.max_fragments) {
                            win.records.push(FlowRecord::new(key.clone(), part));
                        }
                        win.truth.insert(key, size);
                    }
                    win.records.shuffle(&mut rng);
                    win
                })
                .collect()
        }
        TraceSource::File(path) => file_windows(cfg, path)?,
    };
    let train: Vec<f64> = windows
        .iter()
        .flat_map(|w| w.truth.values())
        .take(cfg.train_samples)
        .map(|&v| v as f64)
        .collect();
    if train.is_empty() {
        return Err(config("trace holds no flows"));
    }
    Ok(Workload { train, windows })
}

fn file_windows(cfg: &BenchmarkConfig, path: &PathBuf) -> Result<Vec<WindowData>> {
    let reader = TraceReader::new(BufReader::new(File::open(path)?))?;
    let mut ingest = IngestStage::new(0, cfg.ingest_capacity);
    let mut windows = Vec::new();
    let mut current = WindowData::default();
    let mut push = |records: Vec<FlowRecord>, windows: &mut Vec<WindowData>| {
        for r in records {
            if !current.truth.contains_key(&r.key) && current.truth.len() == cfg.window {
                windows.push(std::mem::take(&mut current));
            }
            *current.truth.entry(r.key.clone()).or_default() += r.value;
            current.records.push(r);
        }
    };
    for p in reader {
        if let Some(batch) = ingest.ingest(&p?) {
            push(batch.records, &mut windows);
        }
        if windows.len() >= cfg.windows {
            break;
        }
    }
    push(ingest.flush().records, &mut windows);
    if !current.truth.is_empty() {
        windows.push(current);
    }
    windows.truncate(cfg.windows);
    Ok(windows)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MemoryAccount {
    /// Buckets plus centers.
    pub lss_sketch_bytes: usize,
    pub lss_membership_bytes: usize,
    pub lss_total_bytes: usize,
    /// Counters given to each baseline.
    pub baseline_counters: usize,
    pub baseline_bytes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub insert_seconds: f64,
    pub query_seconds: f64,
    pub insert_mops: f64,
    pub query_mops: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KindResult {
    pub kind: SketchKind,
    pub memory_bytes: usize,
    pub flow_size: ErrorSummary,
    /// Mean per-window relative error of the flow-size entropy.
    pub entropy_error: f64,
    pub heavy_hitters: Detection,
    /// Only LSS counts distinct flows.
    pub cardinality_error: Option<f64>,
    /// Whether every window's count equals the number of distinct membership tags.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cardinality_exact: Option<bool>,
    /// Keys sharing a membership tag with an earlier key of the same window.
    #[serde(skip_serializing_if = "is_zero")]
    pub tag_collisions: u64,
    #[serde(skip_serializing_if = "is_zero")]
    pub inconsistencies: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub ratio: f64,
    pub m: usize,
    pub window: usize,
    pub windows: usize,
    /// Centers in the trained model, which may be fewer than requested.
    pub clusters: usize,
    pub hh_percentile: f64,
    pub hh_threshold: f64,
    pub memory: MemoryAccount,
    pub results: Vec<KindResult>,
}

impl ComparisonRow {
    pub fn result(&self, kind: SketchKind) -> Option<&KindResult> {
        self.results.iter().find(|r| r.kind == kind)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rows: Vec<ComparisonRow>,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned text table, one line per (row, kind).
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>6} {:>7} {:>4} {:>9} {:>11} {:>11} {:>11} {:>11} {:>9} {:>6} {:>6}\n",
            "seed",
            "ratio",
            "kind",
            "bytes",
            "fs_mean",
            "fs_p50",
            "fs_p90",
            "fs_p99",
            "entropy",
            "hh_f1",
            "card"
        );
        for row in &self.rows {
            for r in &row.results {
                let card = r
                    .cardinality_error
                    .map_or_else(|| "-".to_string(), |c| format!("{c:.3}"));
                let _ = writeln!(
                    out,
                    "{:>6} {:>7} {:>4} {:>9} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>9.4} {:>6.3} {:>6}",
                    row.seed,
                    row.ratio,
                    r.kind,
                    r.memory_bytes,
                    r.flow_size.mean,
                    r.flow_size.p50,
                    r.flow_size.p90,
                    r.flow_size.p99,
                    r.entropy_error,
                    r.heavy_hitters.f1,
                    card
                );
            }
        }
        out
    }
}

/// Per-(seed, k) trained models.
pub(crate) struct ModelCache<'a> {
    train: &'a [f64],
    distinct: usize,
    seed: u64,
    models: HashMap<usize, Model>,
}

impl<'a> ModelCache<'a> {
    pub(crate) fn new(train: &'a [f64], seed: u64) -> Self {
        let mut values = train.to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();
        Self {
            train,
            distinct: values.len(),
            seed,
            models: HashMap::new(),
        }
    }

    /// Model with `k` centers, or one per distinct training value if there are fewer.
    pub(crate) fn get(&mut self, k: usize) -> Result<&Model> {
        let k = k.min(self.distinct);
        if !self.models.contains_key(&k) {
            let model = Model::fit(
                self.train,
                &KMeansConfig {
                    k,
                    seed: self.seed,
                    ..KMeansConfig::default()
                },
            )?;
            self.models.insert(k, model);
        }
        Ok(&self.models[&k])
    }
}

pub(crate) fn lss_options(cfg: &BenchmarkConfig, seed: u64) -> LssOptions {
    LssOptions {
        hash_seed: seed ^ 0x5eed_5eed,
        counter_width: cfg.counter_width,
        policy: cfg.policy,
        expected_flows: Some(cfg.window),
        membership_seed: seed.rotate_left(17) ^ 0xc0c0,
        ..LssOptions::default()
    }
}

struct Run {
    estimates: Vec<Vec<f64>>,
    cardinality: Option<Vec<u64>>,
    cardinality_exact: Option<bool>,
    tag_collisions: u64,
    inconsistencies: u64,
    insert_seconds: f64,
    query_seconds: f64,
}

fn run_lss(windows: &[WindowData], model: &Model, m: usize, opts: &LssOptions) -> Result<Run> {
    let mut run = Run {
        estimates: Vec::new(),
        cardinality: Some(Vec::new()),
        cardinality_exact: Some(true),
        tag_collisions: 0,
        inconsistencies: 0,
        insert_seconds: 0.0,
        query_seconds: 0.0,
    };
    for w in windows {
        let mut sketch = Sketch::new(model, m, opts.clone())?;
        let t = Instant::now();
        for r in &w.records {
            match sketch.insert_duplicate(&r.key, r.value) {
                Ok(_) => {}
                Err(SketchError::Inconsistent(_)) => run.inconsistencies += 1,
                Err(e) => return Err(e.into()),
            }
        }
        sketch.seal();
        run.insert_seconds += t.elapsed().as_secs_f64();
        let t = Instant::now();
        let est = w
            .truth
            .keys()
            .map(|k| sketch.query(k).unwrap_or(0.0))
            .collect();
        run.query_seconds += t.elapsed().as_secs_f64();
        run.estimates.push(est);
        let tags: HashSet<_> = w.truth.keys().map(|k| sketch.membership().tag(k)).collect();
        run.tag_collisions += (w.truth.len() - tags.len()) as u64;
        run.cardinality_exact =
            Some(run.cardinality_exact == Some(true) && sketch.cardinality() == tags.len() as u64);
        if let Some(c) = run.cardinality.as_mut() {
            c.push(sketch.cardinality());
        }
    }
    Ok(run)
}

fn run_baseline(
    windows: &[WindowData],
    kind: SketchKind,
    counters: usize,
    banks: usize,
    seed: u64,
) -> Result<Run> {
    let mut run = Run {
        estimates: Vec::new(),
        cardinality: None,
        cardinality_exact: None,
        tag_collisions: 0,
        inconsistencies: 0,
        insert_seconds: 0.0,
        query_seconds: 0.0,
    };
    for w in windows {
        let (insert, query) = match kind {
            SketchKind::Cm => {
                let mut cm = CmSketch::new(counters, banks, seed ^ 0xc0_47)?;
                let t = Instant::now();
                w.records.iter().for_each(|r| cm.insert(&r.key, r.value));
                let insert = t.elapsed().as_secs_f64();
                let t = Instant::now();
                run.estimates
                    .push(w.truth.keys().map(|k| cm.query(k) as f64).collect());
                (insert, t.elapsed().as_secs_f64())
            }
            SketchKind::Cs => {
                let mut cs = CsSketch::new(counters, banks, seed ^ 0xc5_47)?;
                let t = Instant::now();
                w.records.iter().for_each(|r| cs.insert(&r.key, r.value));
                let insert = t.elapsed().as_secs_f64();
                let t = Instant::now();
                run.estimates
                    .push(w.truth.keys().map(|k| cs.estimate(k) as f64).collect());
                (insert, t.elapsed().as_secs_f64())
            }
            SketchKind::Lss => unreachable!("LSS runs through run_lss"),
        };
        run.insert_seconds += insert;
        run.query_seconds += query;
    }
    Ok(run)
}

fn score(
    kind: SketchKind,
    windows: &[WindowData],
    run: Run,
    threshold: f64,
    bytes: usize,
    timings: bool,
) -> KindResult {
    let mut errors = Vec::new();
    let mut entropy = Vec::new();
    let mut heavy = HashSet::new();
    let mut flagged = HashSet::new();
    for (w, (win, est)) in windows.iter().zip(&run.estimates).enumerate() {
        let truth: Vec<f64> = win.truth.values().map(|&v| v as f64).collect();
        for (i, (&t, &e)) in truth.iter().zip(est).enumerate() {
            errors.extend(relative_error(t, e).ok());
            if t > threshold {
                heavy.insert((w, i));
            }
            if e > threshold {
                flagged.insert((w, i));
            }
        }
        entropy.extend(relative_error(size_entropy(&truth), size_entropy(est)).ok());
    }
    let cardinality_error = run.cardinality.map(|c| {
        let errs: Vec<f64> = windows
            .iter()
            .zip(c)
            .filter_map(|(w, c)| relative_error(w.truth.len() as f64, c as f64).ok())
            .collect();
        errs.iter().sum::<f64>() / errs.len().max(1) as f64
    });
    let records: usize = windows.iter().map(|w| w.records.len()).sum();
    let keys: usize = windows.iter().map(|w| w.truth.len()).sum();
    KindResult {
        kind,
        memory_bytes: bytes,
        flow_size: ErrorSummary::from_errors(&errors),
        entropy_error: entropy.iter().sum::<f64>() / entropy.len().max(1) as f64,
        heavy_hitters: detection(&heavy, &flagged),
        cardinality_error,
        cardinality_exact: run.cardinality_exact,
        tag_collisions: run.tag_collisions,
        inconsistencies: run.inconsistencies,
        timing: timings.then(|| Timing {
            insert_seconds: run.insert_seconds,
            query_seconds: run.query_seconds,
            insert_mops: records as f64 / run.insert_seconds.max(1e-12) / 1e6,
            query_mops: keys as f64 / run.query_seconds.max(1e-12) / 1e6,
        }),
    }
}

/// Replays `windows` into every configured sketch kind at the LSS memory budget for `m` buckets.
pub fn evaluate_windows(
    cfg: &BenchmarkConfig,
    windows: &[WindowData],
    model: &Model,
    m: usize,
    threshold: f64,
    seed: u64,
) -> Result<(MemoryAccount, Vec<KindResult>)> {
    let opts = lss_options(cfg, seed);
    let probe = Sketch::new(model, m, opts.clone())?;
    let lss_total_bytes = probe.footprint_bytes();
    let baseline_counters = lss_total_bytes / COUNTER_BYTES;
    if baseline_counters < cfg.banks {
        return Err(config("memory budget too small for the baseline banks"));
    }
    let memory = MemoryAccount {
        lss_sketch_bytes: probe.sketch_bytes(),
        lss_membership_bytes: lss_total_bytes - probe.sketch_bytes(),
        lss_total_bytes,
        baseline_counters,
        baseline_bytes: baseline_counters * COUNTER_BYTES,
    };
    let mut results = Vec::new();
    for &kind in &cfg.kinds {
        let (run, bytes) = match kind {
            SketchKind::Lss => (run_lss(windows, model, m, &opts)?, memory.lss_total_bytes),
            _ => (
                run_baseline(windows, kind, baseline_counters, cfg.banks, seed)?,
                memory.baseline_bytes,
            ),
        };
        results.push(score(kind, windows, run, threshold, bytes, cfg.timings));
    }
    Ok((memory, results))
}

fn seed_rows(cfg: &BenchmarkConfig, seed: u64) -> Result<Vec<ComparisonRow>> {
    let work = load_workload(cfg, seed)?;
    let threshold = percentile(&work.train, cfg.hh_percentile).expect("non-empty training set");
    let mut models = ModelCache::new(&work.train, seed);
    let mut rows = Vec::new();
    for &ratio in &cfg.ratios {
        let m = cfg.buckets(ratio);
        let model = models.get(cfg.clusters.min(m))?;
        let (memory, results) = evaluate_windows(cfg, &work.windows, model, m, threshold, seed)?;
        rows.push(ComparisonRow {
            seed,
            ratio,
            m,
            window: cfg.window,
            windows: work.windows.len(),
            clusters: model.k(),
            hh_percentile: cfg.hh_percentile,
            hh_threshold: threshold,
            memory,
            results,
        });
    }
    Ok(rows)
}

/// Runs `f` once per seed, optionally across threads, returning results in seed order.
pub(crate) fn per_seed<T: Send>(
    cfg: &BenchmarkConfig,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if !cfg.parallel || cfg.seeds.len() < 2 {
        return cfg.seeds.iter().map(|&s| f(s)).collect();
    }
    let workers = thread::available_parallelism()
        .map_or(4, |n| n.get())
        .min(cfg.seeds.len());
    let chunk = cfg.seeds.len().div_ceil(workers);
    thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .chunks(chunk)
            .map(|seeds| scope.spawn(|| seeds.iter().map(|&s| f(s)).collect::<Result<Vec<T>>>()))
            .collect();
        let mut out = Vec::new();
        for h in handles {
            out.extend(
                h.join()
                    .map_err(|_| config("benchmark worker panicked"))??,
            );
        }
        Ok(out)
    })
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let rows = per_seed(cfg, |seed| seed_rows(cfg, seed))?;
    Ok(MetricsReport {
        rows: rows.into_iter().flatten().collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub seed: u64,
    pub ratio: f64,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Comparison thresholds for every row that holds all three kinds.
pub fn comparison_checks(report: &MetricsReport) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for row in &report.rows {
        let (Some(lss), Some(cm), Some(cs)) = (
            row.result(SketchKind::Lss),
            row.result(SketchKind::Cm),
            row.result(SketchKind::Cs),
        ) else {
            continue;
        };
        let mut check = |name: &str, passed: bool, detail: String| {
            out.push(CheckOutcome {
                seed: row.seed,
                ratio: row.ratio,
                name: name.into(),
                passed,
                detail,
            })
        };
        let (l, c, s) = (lss.flow_size.mean, cm.flow_size.mean, cs.flow_size.mean);
        check(
            "flow-size vs cm",
            l <= 0.1 * c,
            format!("lss {l:.4e}, cm {c:.4e}"),
        );
        check(
            "flow-size vs cs",
            l <= 0.1 * s,
            format!("lss {l:.4e}, cs {s:.4e}"),
        );
        let (l, c) = (lss.entropy_error, cm.entropy_error);
        check(
            "entropy vs cm",
            l <= 0.25 * c,
            format!("lss {l:.4}, cm {c:.4}"),
        );
        let (l, c, s) = (
            lss.heavy_hitters.f1,
            cm.heavy_hitters.f1,
            cs.heavy_hitters.f1,
        );
        if row.ratio >= 0.1 {
            check("heavy-hitter f1", l >= 0.95, format!("lss {l:.4}"));
        }
        check(
            "heavy-hitter f1 vs baselines",
            l >= c.max(s),
            format!("lss {l:.4}, cm {c:.4}, cs {s:.4}"),
        );
        check(
            "cardinality exact",
            lss.cardinality_exact == Some(true),
            format!(
                "error {:?}, {} tag collisions",
                lss.cardinality_error, lss.tag_collisions
            ),
        );
    }
    out
}

/// Seeds whose checks all pass, and the number of seeds checked.
pub fn passing_seeds(checks: &[CheckOutcome]) -> (usize, usize) {
    let mut by_seed: IndexMap<u64, bool> = IndexMap::new();
    for c in checks {
        *by_seed.entry(c.seed).or_insert(true) &= c.passed;
    }
    (by_seed.values().filter(|p| **p).count(), by_seed.len())
}
