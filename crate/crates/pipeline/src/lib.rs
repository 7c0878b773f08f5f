//! Disaggregated flow monitoring: packet ingestion with flowlet aggregation,
//! windowed sketching, and a query stage over a persistent sketch store,
//! connected by an in-process ordered topic bus.

pub mod bus;
pub mod envelope;
pub mod error;
pub mod frame;
pub mod ingest;
pub mod packet;
pub mod query;
pub mod runner;
pub mod store;
pub mod trace;
pub mod window;

pub use bus::Bus;
pub use envelope::{SketchEnvelope, WindowRef};
pub use error::{PipelineError, Result};
pub use frame::{read_frame, write_frame, Frames};
pub use ingest::{IngestStage, IngestStats};
pub use packet::{FlowletBatch, Packet, RECORD_BYTES};
pub use query::{evaluate, network_wide_query, QueryParams, QueryReport, QueryTask};
pub use runner::{run_pipeline, ArrivalClock, PipelineConfig, PipelineReport};
pub use store::QueryStore;
pub use trace::{TraceReader, TraceRow, TraceWriter};
pub use window::{SketchingStage, SketchingStats, WindowConfig};
