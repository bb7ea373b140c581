//! Synthetic rating dataset generation from a reference implicit-feedback
//! dataset, plus the offline evaluation harness used to check that
//! recommender orderings carry over from the reference data to the
//! synthetic data.
//!
//! The pipeline:
//! 1. [`ingest`] parses and binarizes a source dataset into an
//!    [`InteractionSet`].
//! 2. [`clustering`] groups users into K communities with K-means over
//!    their binary item vectors.
//! 3. [`distributions`] learns the per-community empirical distributions
//!    (users per cluster, ratings per user, ratings per item) into a
//!    [`BehaviorModel`].
//! 4. [`generator`] samples a synthetic dataset with a configurable number
//!    of users from the model.
//! 5. [`recommenders`] and [`evaluation`] fit five recommendation
//!    algorithms and compare the metric orderings across datasets.

pub mod clustering;
pub mod data;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod generator;
pub mod ingest;
pub mod recommenders;

pub use clustering::{kmeans, ClusterModel, KmeansOptions};
pub use data::{DatasetStats, InteractionSet, UserVector};
pub use distributions::{BehaviorModel, EmpiricalDistribution};
pub use error::{Error, Result};
pub use evaluation::{
    compare_orderings, evaluate, random_split, run_suite, EvalReport, Metric, Metrics,
    OrderingComparison, SplitPair,
};
pub use generator::{
    generate, generate_baseline, sample_categorical, sample_without_replacement, Generated,
    GenerationConfig, GenerationMode,
};
pub use ingest::{parse, SourceFormat};
pub use recommenders::{fit, Algorithm, HyperParams, RatingsView, RecModel};
