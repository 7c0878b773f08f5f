//! Benchmark harness for locality-sensitive sketches: synthetic Zipf traces,
//! accuracy metrics, equal-memory comparisons against Count-Min and
//! Count-Sketch, and one-axis sensitivity sweeps.

pub mod benchmark;
pub mod error;
pub mod metrics;
pub mod replay;
pub mod sensitivity;
pub mod tracegen;

pub use benchmark::{
    comparison_checks, evaluate_windows, load_workload, passing_seeds, run_benchmark,
    BenchmarkConfig, CheckOutcome, ComparisonRow, KindResult, MemoryAccount, MetricsReport,
    SketchKind, TraceSource, WindowData, Workload,
};
pub use error::{HarnessError, Result};
pub use metrics::{
    detection, f1_score, percentile, relative_error, Detection, ErrorSummary, MetricError,
};
pub use replay::{flow_totals, parse_flow_key, train_model};
pub use sensitivity::{
    run_sensitivity, trend_checks, SweepAxis, SweepPoint, SweepReport, TrendCheck,
};
pub use tracegen::{gen_trace, TraceGenerator, TraceSpec, TraceSummary};
