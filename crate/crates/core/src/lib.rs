//! Event-sentiment analytics over tweet-style records.
//!
//! The pipeline runs in stages that each live in their own module:
//!
//! * [`ingest`]: newline-delimited JSON parsing, filter rules, trimmed CSV.
//! * [`features`]: tokenizer, N-gram and tag features, sparse document-term matrices.
//! * [`classifiers`]: eight supervised models behind one train/predict contract.
//! * [`evaluation`]: training-set composition, stratified k-fold CV, comparison tables.
//! * [`corpusgen`]: deterministic synthetic labeled corpora.
//! * [`scoring`]: Pro-Gun Public Sentiment Scores (PGPSS 1/2/3) and normalization.
//! * [`geo`]: state polygons, point-in-polygon and state assignment.
//! * [`aggregate`]: hourly/daily series, tag tables and the served snapshot.

pub mod aggregate;
pub mod classifiers;
pub mod corpusgen;
pub mod evaluation;
pub mod features;
pub mod geo;
pub mod ingest;
pub mod rng;
pub mod scoring;
pub mod time;

pub use classifiers::{AlgorithmSpec, SentimentLabel, TrainedModel};
pub use features::{DocumentTermMatrix, FeatureConfig, Vocabulary};
pub use ingest::{CorpusWindow, FilterRules, Tweet};
pub use scoring::{PgpssResult, SentimentCounts};

/// Runs `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always matches input order.
pub(crate) fn par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Where an artifact came from: crate version, seed and a hash of the
/// configuration that produced it.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(seed: u64, config_hash: impl Into<String>) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash: config_hash.into(),
        }
    }
}
