use std::fs::{self, File};
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lss_cli::{
    comparison_checks, gen_trace, parse_flow_key, passing_seeds, run_benchmark, run_sensitivity,
    train_model, trend_checks, BenchmarkConfig, HarnessError, SketchKind, SweepAxis, TraceSource,
    TraceSpec,
};
use lss_core::{AllocationPolicy, CounterWidth, Model};
use lss_pipeline::{
    network_wide_query, run_pipeline, PipelineConfig, QueryParams, QueryStore, QueryTask,
    TraceReader, WindowConfig,
};

#[derive(Parser)]
#[command(
    name = "lss",
    version,
    about = "Locality-sensitive sketch benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Zipf packet trace as CSV.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        flows: usize,
        #[arg(long, default_value_t = 1.1)]
        zipf_s: f64,
        #[arg(long, default_value_t = 100.0)]
        mean_packets: f64,
        #[arg(long, default_value_t = 1_000)]
        packet_bytes: u64,
        #[arg(long, default_value_t = 64)]
        concurrency: usize,
    },
    /// Fit a cluster model on the leading flow totals of a trace.
    Train {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        clusters: usize,
        #[arg(long, default_value_t = 10_000)]
        train_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare LSS, Count-Min and Count-Sketch at equal memory.
    Bench {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long, value_delimiter = ',', default_value = "lss,cm,cs")]
        kinds: Vec<SketchKind>,
    },
    /// Sweep one parameter of LSS.
    Sweep {
        #[command(flatten)]
        bench: BenchArgs,
        /// clusters, ratio, threshold, epochs or policy.
        #[arg(long)]
        axis: SweepAxis,
    },
    /// Replay a trace through ingestion, sketching and the store.
    Pipeline {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        store: PathBuf,
        /// Model JSON; trained from the trace when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        clusters: usize,
        #[arg(long, default_value_t = 10_000)]
        train_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        sources: usize,
        /// Flows per sequence window.
        #[arg(long, default_value_t = 10_000)]
        window: usize,
        /// Use time windows of this length instead of sequence windows.
        #[arg(long)]
        window_ns: Option<u64>,
        #[arg(long, default_value_t = 0.1)]
        ratio: f64,
        #[arg(long, default_value_t = 1_000)]
        ingest_capacity: usize,
        /// Exit nonzero unless bytes are conserved and every topic stayed FIFO.
        #[arg(long)]
        check: bool,
    },
    /// Run a network-wide query over a store directory.
    Query {
        #[arg(long)]
        store: PathBuf,
        /// flow-size, entropy, heavy-hitters, cardinality or heavy-changes.
        #[arg(long)]
        task: QueryTask,
        #[arg(long, default_value_t = 0)]
        from: u64,
        #[arg(long, default_value_t = u64::MAX)]
        to: u64,
        /// Flow keys as src:port->dst:port/proto.
        #[arg(long = "key")]
        keys: Vec<String>,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// CSV trace; a Zipf trace is generated when absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1.1)]
    zipf_s: f64,
    #[arg(long, default_value_t = 10.0)]
    mean_packets: f64,
    #[arg(long, default_value_t = 10_000)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    windows: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    ratio: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    clusters: usize,
    #[arg(long, default_value_t = 90.0)]
    hh_percentile: f64,
    #[arg(long, default_value_t = 32)]
    counter_bits: u32,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    #[arg(long, default_value_t = 10_000)]
    train_samples: usize,
    #[arg(long, default_value_t = 3)]
    banks: usize,
    #[arg(long, default_value_t = 4)]
    fragments: u64,
    /// Allocate buckets uniformly instead of by entropy, center and density.
    #[arg(long)]
    uniform: bool,
    #[arg(long)]
    parallel: bool,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit nonzero when an acceptance threshold fails.
    #[arg(long)]
    check: bool,
}

impl BenchArgs {
    fn config(&self, kinds: Vec<SketchKind>) -> Result<BenchmarkConfig, HarnessError> {
        Ok(BenchmarkConfig {
            kinds,
            ratios: self.ratio.clone(),
            window: self.window,
            windows: self.windows,
            clusters: self.clusters,
            hh_percentile: self.hh_percentile,
            counter_width: CounterWidth::from_bits(self.counter_bits)?,
            seeds: self.seed.clone(),
            trace: match &self.trace {
                Some(p) => TraceSource::File(p.clone()),
                None => TraceSource::Zipf {
                    s: self.zipf_s,
                    mean_packets: self.mean_packets,
                },
            },
            train_samples: self.train_samples,
            policy: if self.uniform {
                AllocationPolicy::UNIFORM
            } else {
                AllocationPolicy::default()
            },
            banks: self.banks,
            max_fragments: self.fragments,
            parallel: self.parallel,
            timings: self.timings,
            ..BenchmarkConfig::default()
        })
    }

    fn emit(&self, json: &str, table: &str) -> Result<(), HarnessError> {
        match &self.out {
            Some(path) => {
                fs::write(path, json)?;
                print!("{table}");
            }
            None => {
                println!("{json}");
                eprint!("{table}");
            }
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Gen {
            out,
            seed,
            flows,
            zipf_s,
            mean_packets,
            packet_bytes,
            concurrency,
        } => {
            let spec = TraceSpec {
                seed,
                flows,
                zipf_s,
                mean_packets,
                packet_bytes,
                concurrency,
            };
            let summary = gen_trace(&spec, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(true)
        }
        Command::Train {
            trace,
            out,
            clusters,
            train_samples,
            seed,
        } => {
            let model = train_model(
                BufReader::new(File::open(trace)?),
                clusters,
                train_samples,
                seed,
            )?;
            fs::write(&out, model.to_json())?;
            log::info!("wrote {} centers to {}", model.k(), out.display());
            Ok(true)
        }
        Command::Bench { bench, kinds } => {
            let report = run_benchmark(&bench.config(kinds)?)?;
            bench.emit(&report.to_json()?, &report.table())?;
            if !bench.check {
                return Ok(true);
            }
            let checks = comparison_checks(&report);
            for c in checks.iter().filter(|c| !c.passed) {
                eprintln!(
                    "FAIL seed {} ratio {}: {} ({})",
                    c.seed, c.ratio, c.name, c.detail
                );
            }
            let (passed, total) = passing_seeds(&checks);
            eprintln!("{passed}/{total} seeds pass every comparison check");
            Ok(total > 0 && passed * 10 >= total * 9)
        }
        Command::Sweep { bench, axis } => {
            let report = run_sensitivity(&bench.config(vec![SketchKind::Lss])?, axis)?;
            bench.emit(&report.to_json()?, &report.table())?;
            let checks = trend_checks(&report);
            for c in &checks {
                eprintln!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(!bench.check || checks.iter().all(|c| c.passed))
        }
        Command::Pipeline {
            trace,
            store,
            model,
            clusters,
            train_samples,
            seed,
            sources,
            window,
            window_ns,
            ratio,
            ingest_capacity,
            check,
        } => {
            let model = match model {
                Some(p) => Model::from_json(&fs::read_to_string(p)?)?,
                None => train_model(
                    BufReader::new(File::open(&trace)?),
                    clusters,
                    train_samples,
                    seed,
                )?,
            };
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(HarnessError::Config(format!(
                    "ratio {ratio} outside (0, 1]"
                )));
            }
            let config = PipelineConfig {
                sources,
                ingest_capacity,
                window: match window_ns {
                    Some(duration_ns) => WindowConfig::Time { duration_ns },
                    None => WindowConfig::Sequence { flows: window },
                },
                m: ((ratio * window as f64).round() as usize).max(model.k()),
                ..PipelineConfig::default()
            };
            let store = QueryStore::open(&store)?;
            let packets = TraceReader::new(BufReader::new(File::open(&trace)?))?;
            let report = run_pipeline(packets, &model, &config, &store)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(!check || (report.conserved() && report.fifo_violations == 0))
        }
        Command::Query {
            store,
            task,
            from,
            to,
            keys,
            threshold,
        } => {
            let keys = keys
                .iter()
                .map(|k| parse_flow_key(k))
                .collect::<Result<Vec<_>, _>>()?;
            let store = QueryStore::open(&store)?;
            let report =
                network_wide_query(&store, from, to, task, &QueryParams { keys, threshold })?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
