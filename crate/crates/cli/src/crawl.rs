//! Concurrent crawl orchestration: bounded workers, per-host rate limits,
//! egress rotation, and resumable persistence.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use planprobe_core::address::Address;
use planprobe_core::ingest;
use planprobe_engine::adapter::AdapterSpec;
use planprobe_engine::runner::run_session;
use planprobe_engine::session::TranscriptEntry;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use crate::config::CrawlConfig;
use crate::dataset::{load_completed, DatasetRecord, RecordStatus};
use crate::limiter::HostLimiter;
use crate::sink::{LineSink, RecordSink, SinkError};
use crate::transport::{CrawlMetrics, HttpTransport};

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("config invalid: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Sink(#[from] SinkError),
    #[error("worker task panicked: {0}")]
    WorkerPanicked(String),
}

/// A crawl with adapters, targets, and endpoints already loaded.
pub struct PreparedCrawl {
    pub adapters: Vec<(Arc<AdapterSpec>, String)>,
    pub targets: Vec<Address>,
    pub workers: usize,
    pub per_host_rate: u32,
    pub egress_pool: Vec<String>,
    pub seed: u64,
    pub output_path: PathBuf,
    /// When set, one JSON line per session with the full transcript.
    pub transcripts_path: Option<PathBuf>,
}

/// One session's transcript as persisted (one JSON line each).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub address_id: String,
    pub isp: String,
    pub status: RecordStatus,
    pub transcript: Vec<TranscriptEntry>,
    pub resolved_address: Option<Address>,
}

/// Per-ISP crawl summary (hit-rate and query-time analogues of the
/// microbenchmarks).
#[derive(Debug, Clone, Serialize)]
pub struct IspSummary {
    pub n: usize,
    pub hits: usize,
    pub misses: usize,
    pub unserviceable: usize,
    pub hit_rate: f64,
    pub answered_rate: f64,
    pub wall_ms_p50: u64,
    pub wall_ms_p90: u64,
    pub wall_ms_p99: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub per_isp: BTreeMap<String, IspSummary>,
    pub records_written: u64,
    pub resumed_skipped: usize,
    pub max_inflight_sessions: usize,
    pub total_requests: u64,
    /// Sessions that ended in a miss; a nonzero count is reported via exit
    /// code 2.
    pub partial_failures: usize,
    pub wall_ms: u64,
}

pub struct CrawlOutcome {
    pub summary: RunSummary,
    /// Server-reported per-request service times (scaling experiment input).
    pub service_samples: Vec<f64>,
}

/// Loads everything referenced by the config and runs the crawl.
pub async fn run_crawl(config: &CrawlConfig) -> Result<CrawlOutcome, CrawlError> {
    config
        .validate()
        .map_err(|e| CrawlError::ConfigInvalid(e.to_string()))?;
    let mut adapters = Vec::new();
    for binding in &config.adapters {
        let spec = AdapterSpec::load(&binding.spec)
            .map_err(|e| CrawlError::ConfigInvalid(e.to_string()))?;
        adapters.push((Arc::new(spec), binding.endpoint.clone()));
    }
    let report = ingest::load_addresses(&config.targets)
        .map_err(|e| CrawlError::ConfigInvalid(e.to_string()))?;
    if report.accepted.is_empty() {
        return Err(CrawlError::ConfigInvalid(format!(
            "no valid addresses in {}",
            config.targets.display()
        )));
    }
    run_crawl_prepared(&PreparedCrawl {
        adapters,
        targets: report.accepted,
        workers: config.workers,
        per_host_rate: config.per_host_rate,
        egress_pool: config.egress_pool.clone(),
        seed: config.seed,
        output_path: config.output_path.clone(),
        transcripts_path: config.transcripts_path.clone(),
    })
    .await
}

/// Runs a prepared crawl. Completed (ISP, address) pairs already in the
/// output file are skipped, so a killed run resumes where it stopped.
pub async fn run_crawl_prepared(prepared: &PreparedCrawl) -> Result<CrawlOutcome, CrawlError> {
    let started = std::time::Instant::now();
    let completed = if prepared.output_path.exists() {
        load_completed(&prepared.output_path)
    } else {
        Default::default()
    };

    let sink = Arc::new(RecordSink::open(&prepared.output_path)?);
    let transcripts: Option<Arc<LineSink<TranscriptLine>>> = prepared
        .transcripts_path
        .as_deref()
        .map(LineSink::open)
        .transpose()?
        .map(Arc::new);
    let client = reqwest::Client::new();
    let metrics = Arc::new(CrawlMetrics::default());
    let semaphore = Arc::new(Semaphore::new(prepared.workers));
    let egress_counter = Arc::new(AtomicUsize::new(0));
    let limiters: HashMap<String, Arc<HostLimiter>> = prepared
        .adapters
        .iter()
        .map(|(spec, _)| {
            (
                spec.isp_name.clone(),
                Arc::new(HostLimiter::per_minute(prepared.per_host_rate)),
            )
        })
        .collect();

    let mut tasks: JoinSet<(String, RecordStatus, u64)> = JoinSet::new();
    let mut resumed_skipped = 0usize;
    for (spec, endpoint) in &prepared.adapters {
        for address in &prepared.targets {
            if completed.contains(&(spec.isp_name.clone(), address.address_id.clone())) {
                resumed_skipped += 1;
                continue;
            }
            let spec = Arc::clone(spec);
            let endpoint = endpoint.clone();
            let address = address.clone();
            let client = client.clone();
            let metrics = Arc::clone(&metrics);
            let semaphore = Arc::clone(&semaphore);
            let limiter = Arc::clone(&limiters[&spec.isp_name]);
            let sink = Arc::clone(&sink);
            let transcripts = transcripts.clone();
            let egress_counter = Arc::clone(&egress_counter);
            let egress_pool = prepared.egress_pool.clone();
            let seed = prepared.seed;
            tasks.spawn(async move {
                let _permit = semaphore.acquire_owned().await.expect("semaphore open");
                let egress =
                    egress_pool[egress_counter.fetch_add(1, Ordering::Relaxed) % egress_pool.len()].clone();
                let mut transport =
                    HttpTransport::new(client, endpoint, egress, limiter, metrics);
                let outcome = run_session(&address, &spec, &mut transport, seed).await;
                drop(transport);
                let timestamp = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .unwrap_or_default()
                    .as_secs();
                let record = DatasetRecord::from_outcome(&address, &spec.isp_name, &outcome, timestamp);
                let status = record.status.clone();
                // Channel failure means the writer died; surface via counts.
                let _ = sink.write(record).await;
                if let Some(transcripts) = &transcripts {
                    let _ = transcripts
                        .write(TranscriptLine {
                            address_id: address.address_id.clone(),
                            isp: spec.isp_name.clone(),
                            status: status.clone(),
                            transcript: outcome.transcript.clone(),
                            resolved_address: outcome.resolved_address.clone(),
                        })
                        .await;
                }
                (spec.isp_name.clone(), status, outcome.total_ms)
            });
        }
    }

    let mut per_isp_status: BTreeMap<String, Vec<(RecordStatus, u64)>> = BTreeMap::new();
    while let Some(joined) = tasks.join_next().await {
        let (isp, status, wall_ms) = joined.map_err(|e| CrawlError::WorkerPanicked(e.to_string()))?;
        per_isp_status.entry(isp).or_default().push((status, wall_ms));
    }

    let sink = Arc::into_inner(sink).expect("all writers done");
    let records_written = sink.finish().await?;
    if let Some(transcripts) = transcripts {
        let transcripts = Arc::into_inner(transcripts).expect("all writers done");
        transcripts.finish().await?;
    }

    let mut per_isp = BTreeMap::new();
    let mut partial_failures = 0usize;
    for (isp, entries) in per_isp_status {
        let n = entries.len();
        let hits = entries.iter().filter(|(s, _)| matches!(s, RecordStatus::Hit)).count();
        let unserviceable = entries
            .iter()
            .filter(|(s, _)| matches!(s, RecordStatus::Unserviceable))
            .count();
        let misses = n - hits - unserviceable;
        partial_failures += misses;
        let mut walls: Vec<u64> = entries.iter().map(|(_, w)| *w).collect();
        walls.sort_unstable();
        per_isp.insert(
            isp,
            IspSummary {
                n,
                hits,
                misses,
                unserviceable,
                hit_rate: hits as f64 / n as f64,
                answered_rate: (hits + unserviceable) as f64 / n as f64,
                wall_ms_p50: quantile(&walls, 0.50),
                wall_ms_p90: quantile(&walls, 0.90),
                wall_ms_p99: quantile(&walls, 0.99),
            },
        );
    }

    Ok(CrawlOutcome {
        summary: RunSummary {
            per_isp,
            records_written,
            resumed_skipped,
            max_inflight_sessions: metrics.max_inflight_sessions(),
            total_requests: metrics.requests(),
            partial_failures,
            wall_ms: started.elapsed().as_millis() as u64,
        },
        service_samples: metrics.take_service_samples(),
    })
}

/// Nearest-rank quantile.
fn quantile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_pick_order_statistics() {
        let sorted: Vec<u64> = (1..=100).collect();
        assert_eq!(quantile(&sorted, 0.50), 50);
        assert_eq!(quantile(&sorted, 0.90), 90);
        assert_eq!(quantile(&sorted, 0.99), 99);
        assert_eq!(quantile(&[], 0.5), 0);
    }
}
