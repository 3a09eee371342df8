//! Run-time coordination for the plan-auditing toolkit.
//!
//! The library behind the `planprobe` binary: crawl scheduling with a bounded
//! worker pool, per-host rate limiting and egress rotation, resumable JSONL
//! persistence, the worker-count scaling experiment, the full per-city
//! analysis pipeline, and privacy-preserving dataset release.

pub mod analyze;
pub mod config;
pub mod crawl;
pub mod dataset;
pub mod limiter;
pub mod release;
pub mod scale;
pub mod sink;
pub mod transport;

pub use analyze::{analyze, AnalyzeReport};
pub use config::CrawlConfig;
pub use crawl::{run_crawl, run_crawl_prepared, CrawlOutcome, PreparedCrawl, RunSummary};
pub use dataset::{DatasetRecord, RecordStatus};
pub use release::release;
pub use scale::{scale_experiment, ScaleInputs, ScaleReport};
