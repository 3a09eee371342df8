//! Domain types and analytics for broadband plan auditing.
//!
//! This crate holds everything that is pure computation: street-address
//! canonicalization and suggestion matching, carriage-value metrics and the
//! 30-bin plan-vector representation, spatial statistics (Moran's I, one-tailed
//! two-sample KS), competition-mode classification, income-stratified fiber
//! gaps, and the CSV/GeoJSON loaders plus block-group sampling that feed the
//! crawl and analysis pipelines.

pub mod address;
pub mod adjacency;
pub mod ingest;
pub mod metrics;
pub mod plan;
pub mod seed;
pub mod stats;

pub use address::{Address, CanonicalAddress};
pub use adjacency::AdjacencyGraph;
pub use metrics::{BlockGroupSummary, PlanVector};
pub use plan::{Plan, SanityWindow, Technology};
