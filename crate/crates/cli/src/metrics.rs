//! Accuracy metrics shared by the benchmark and the sensitivity sweeps.

use std::collections::HashSet;
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("relative error is undefined for a zero true value")]
    ZeroTruth,
}

/// `|truth - estimate| / truth`.
pub fn relative_error(truth: f64, estimate: f64) -> Result<f64, MetricError> {
    if truth == 0.0 {
        return Err(MetricError::ZeroTruth);
    }
    Ok((truth - estimate).abs() / truth.abs())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Detection {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub truth: usize,
    pub predicted: usize,
}

/// Precision, recall and their harmonic mean. Two empty sets score 1; an
/// empty side against a non-empty one scores 0.
pub fn detection<T: Eq + Hash>(truth: &HashSet<T>, predicted: &HashSet<T>) -> Detection {
    let (t, p) = (truth.len(), predicted.len());
    if t == 0 && p == 0 {
        return Detection {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
            truth: 0,
            predicted: 0,
        };
    }
    let hits = truth.intersection(predicted).count() as f64;
    let precision = if p == 0 { 0.0 } else { hits / p as f64 };
    let recall = if t == 0 { 0.0 } else { hits / t as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Detection {
        precision,
        recall,
        f1,
        truth: t,
        predicted: p,
    }
}

pub fn f1_score<T: Eq + Hash>(truth: &HashSet<T>, predicted: &HashSet<T>) -> f64 {
    detection(truth, predicted).f1
}

/// Linear-interpolated percentile (`p` in 0..=100) of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(sorted_percentile(&v, p))
}

fn sorted_percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Mean and CDF points of a set of per-flow errors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub count: usize,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

impl ErrorSummary {
    pub fn from_errors(errors: &[f64]) -> Self {
        if errors.is_empty() {
            return Self::default();
        }
        let mut v = errors.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            p50: sorted_percentile(&v, 50.0),
            p90: sorted_percentile(&v, 90.0),
            p99: sorted_percentile(&v, 99.0),
        }
    }
}
