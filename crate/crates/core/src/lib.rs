//! Hybrid movie recommender: demographic segments, SOM user clusters, a
//! neural cluster classifier, genre-based cold start and resource-allocation
//! weighted collaborative filtering, plus a cross-validated MAE harness.

pub mod cf;
pub mod classifier;
pub mod config;
pub mod engine;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod profiles;
pub mod som;
pub mod synthetic;

pub use cf::{NeighborRule, Prediction, Provenance};
pub use config::Config;
pub use engine::{EngineParams, Recommender, Session, Variant};
pub use error::{Error, Result};
pub use eval::{run_baseline, run_experiment, EvaluationReport};
pub use ingest::{load_dataset, load_dir, Catalog, Dataset, RatingMatrix, Ratings, Segment};
