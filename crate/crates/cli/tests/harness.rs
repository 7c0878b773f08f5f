use std::collections::HashSet;
use std::fs::{self, File};
use std::io::BufReader;

use lss_cli::tracegen::{flow_sizes, zipf_support};
use lss_cli::{
    detection, f1_score, flow_totals, gen_trace, percentile, relative_error, run_benchmark,
    BenchmarkConfig, MetricError, SketchKind, SweepAxis, TraceSource, TraceSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn relative_error_examples() {
    assert_eq!(relative_error(10.0, 10.0), Ok(0.0));
    assert_eq!(relative_error(10.0, 15.0), Ok(0.5));
    assert_eq!(relative_error(10.0, 0.0), Ok(1.0));
    assert_eq!(relative_error(0.0, 3.0), Err(MetricError::ZeroTruth));
}

#[test]
fn f1_examples() {
    let a: HashSet<u32> = [1, 2, 3].into();
    let b: HashSet<u32> = [4, 5].into();
    assert_eq!(f1_score(&a, &a), 1.0);
    assert_eq!(f1_score(&a, &b), 0.0);
    let truth: HashSet<u32> = [1].into();
    let predicted: HashSet<u32> = [1, 2].into();
    let d = detection(&truth, &predicted);
    assert_eq!((d.precision, d.recall), (0.5, 1.0));
    assert!((d.f1 - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(f1_score(&HashSet::<u32>::new(), &HashSet::new()), 1.0);
}

#[test]
fn percentile_interpolates() {
    let v = [4.0, 1.0, 3.0, 2.0];
    assert_eq!(percentile(&v, 0.0), Some(1.0));
    assert_eq!(percentile(&v, 100.0), Some(4.0));
    assert_eq!(percentile(&v, 50.0), Some(2.5));
    assert_eq!(percentile(&[], 50.0), None);
}

#[test]
fn same_seed_same_trace() {
    let dir = tempfile::tempdir().unwrap();
    let spec = TraceSpec {
        seed: 11,
        flows: 300,
        ..TraceSpec::default()
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let sa = gen_trace(&spec, &a).unwrap();
    let sb = gen_trace(&spec, &b).unwrap();
    assert_eq!(sa, sb);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let other = dir.path().join("c.csv");
    gen_trace(&TraceSpec { seed: 12, ..spec }, &other).unwrap();
    assert_ne!(fs::read(&a).unwrap(), fs::read(&other).unwrap());
}

#[test]
fn single_flow_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    let summary = gen_trace(
        &TraceSpec {
            flows: 1,
            ..TraceSpec::default()
        },
        &path,
    )
    .unwrap();
    let totals = flow_totals(BufReader::new(File::open(&path).unwrap()), usize::MAX).unwrap();
    assert_eq!(totals.len(), 1);
    assert_eq!(totals[0], summary.bytes as f64);
}

#[test]
fn zipf_sizes_follow_the_exponent() {
    let support = zipf_support(1.1, 100.0).unwrap();
    let sizes = flow_sizes(&mut ChaCha8Rng::seed_from_u64(5), 10_000, 1.1, support).unwrap();
    // Log-binned density: counts per bin divided by bin width.
    let mut bins = vec![0.0f64; 64];
    for &s in &sizes {
        bins[(s as f64).log2() as usize] += 1.0;
    }
    let pts: Vec<(f64, f64)> = bins
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= 5.0)
        .map(|(b, &c)| {
            (
                (1.5 * 2f64.powi(b as i32)).ln(),
                (c / 2f64.powi(b as i32)).ln(),
            )
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.1).abs() <= 0.15, "slope {slope}");
}

#[test]
fn unknown_sweep_axis() {
    assert!("bogus".parse::<SweepAxis>().is_err());
    assert_eq!(
        "clusters".parse::<SweepAxis>().unwrap(),
        SweepAxis::Clusters
    );
}

#[test]
fn benchmark_over_a_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    gen_trace(
        &TraceSpec {
            seed: 3,
            flows: 2_000,
            mean_packets: 10.0,
            ..TraceSpec::default()
        },
        &path,
    )
    .unwrap();
    let cfg = BenchmarkConfig {
        trace: TraceSource::File(path),
        window: 500,
        windows: 2,
        train_samples: 1_000,
        clusters: 10,
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&cfg).unwrap();
    let row = &report.rows[0];
    assert_eq!(row.m, 50);
    let lss = row.result(SketchKind::Lss).unwrap();
    assert_eq!(lss.flow_size.count, 1_000);
    assert_eq!(lss.cardinality_exact, Some(true));
    assert!(lss.flow_size.mean < row.result(SketchKind::Cm).unwrap().flow_size.mean);
    assert!(report.to_json().unwrap().contains("\"kind\": \"cs\""));
}

#[test]
fn bad_config_is_rejected() {
    let cfg = BenchmarkConfig {
        ratios: vec![0.0],
        ..BenchmarkConfig::default()
    };
    assert!(run_benchmark(&cfg).is_err());
}
