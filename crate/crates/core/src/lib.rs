//! Locality-sensitive sketching of flow-level network statistics.
//!
//! Flows are grouped by value with a one-dimensional K-means model. Each
//! cluster owns a bucket array; a flow lands in one bucket of the array whose
//! center is nearest its value, and is decoded as the bucket average. Flows
//! sharing a bucket therefore tend to have similar values, which keeps the
//! collision error small.
//!
//! ```
//! use lss_core::{FlowKey, KMeansConfig, LssOptions, Model, Sketch};
//!
//! let samples: Vec<f64> = (1..=200).map(|v| f64::from(v % 20 + 1)).collect();
//! let model = Model::fit(&samples, &KMeansConfig::with_k(4)).unwrap();
//! let mut sketch = Sketch::new(&model, 64, LssOptions::default()).unwrap();
//! sketch.insert(&FlowKey::from_id(7), 12).unwrap();
//! assert_eq!(sketch.query(&FlowKey::from_id(7)).unwrap(), 12.0);
//! ```

pub mod baselines;
pub mod clustering;
pub mod codec;
pub mod error;
pub mod key;
pub mod membership;
pub mod scalar;
pub mod sketch;

pub use baselines::analytics::{expected_noisy_fraction, simulate_noisy_fraction};
pub use baselines::cm::CmSketch;
pub use baselines::cs::CsSketch;
pub use baselines::oracle::{autoencoder_oracle, DenseMapping};
pub use clustering::{
    allocate_buckets, allocate_by_weights, cluster_stats, fit_kmeans, lloyd, nearest_index,
    potential, train_kmeans, AllocationPolicy, Centers, ClusterModel, ClusterStats, KMeansConfig,
    KMeansFit,
};
pub use codec::{DecodeError, StructureTag};
pub use error::{Error, Result};
pub use key::{seeded_hash, FlowKey, FlowRecord};
pub use membership::{CuckooTable, Membership};
pub use scalar::{Field, Real};
pub use sketch::{size_entropy, Bucket, CounterWidth, LssOptions, LssSketch, Placement};

/// Double-precision sketch.
pub type Sketch = LssSketch<f64>;
/// Single-precision sketch.
pub type Sketch32 = LssSketch<f32>;
/// Double-precision cluster model.
pub type Model = ClusterModel<f64>;
/// Single-precision cluster model.
pub type Model32 = ClusterModel<f32>;
/// Exact rational used by the dense oracle.
pub type Rational = num_rational::Ratio<i128>;
