//! Worker-count scaling experiment.
//!
//! Repeats an identical crawl at each worker count against the same fleet
//! and compares the per-request response-time samples pairwise with both
//! one-tailed KS tests. Against a non-saturating fleet the samples are
//! identical multisets and every pair fails to reject; a fleet with a small
//! service capacity queues under load and the tests detect it.

use std::path::Path;
use std::sync::Arc;

use planprobe_core::address::Address;
use planprobe_core::stats::{ks_one_tailed, Alternative, KsResult};
use planprobe_engine::adapter::AdapterSpec;
use planprobe_sim::{build_fleet, FleetOptions, SimScenario};
use serde::Serialize;
use thiserror::Error;

use crate::crawl::{run_crawl_prepared, CrawlError, PreparedCrawl};

#[derive(Debug, Error)]
pub enum ScaleError {
    #[error("fleet unavailable: {0}")]
    FleetUnavailable(String),
    #[error("no adapter for scenario {0}")]
    MissingAdapter(String),
    #[error(transparent)]
    Crawl(#[from] CrawlError),
}

pub struct ScaleInputs {
    pub scenarios: Vec<SimScenario>,
    pub adapters: Vec<AdapterSpec>,
    pub targets: Vec<Address>,
    pub worker_counts: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleLeg {
    pub workers: usize,
    pub n_requests: usize,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairDecision {
    pub workers_a: usize,
    pub workers_b: usize,
    pub a_below_b: KsResult,
    pub a_above_b: KsResult,
    /// True when either one-tailed test is significant.
    pub reject: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleReport {
    pub legs: Vec<ScaleLeg>,
    /// Empty when fewer than two worker counts were supplied.
    pub pairwise: Vec<PairDecision>,
}

impl ScaleReport {
    pub fn any_rejection(&self) -> bool {
        self.pairwise.iter().any(|p| p.reject)
    }
}

/// Runs the same target set at each worker count and tests response-time
/// equality across the legs.
pub async fn scale_experiment(
    inputs: &ScaleInputs,
    scratch_dir: &Path,
) -> Result<ScaleReport, ScaleError> {
    let mut legs = Vec::new();
    for &workers in &inputs.worker_counts {
        // A fresh fleet per leg keeps session tables clean; behavior is
        // (scenario, seed)-determined either way.
        let fleet = build_fleet(inputs.scenarios.clone(), inputs.seed, FleetOptions::default())
            .await
            .map_err(|e| ScaleError::FleetUnavailable(e.to_string()))?;
        let mut adapters = Vec::new();
        for scenario in &inputs.scenarios {
            let spec = inputs
                .adapters
                .iter()
                .find(|a| a.isp_name == scenario.isp_name)
                .ok_or_else(|| ScaleError::MissingAdapter(scenario.isp_name.clone()))?;
            let url = fleet
                .url(&scenario.isp_name)
                .expect("endpoint exists for scenario")
                .to_string();
            adapters.push((Arc::new(spec.clone()), url));
        }
        let output_path = scratch_dir.join(format!("scale-w{workers}.jsonl"));
        if output_path.exists() {
            std::fs::remove_file(&output_path)
                .map_err(|e| ScaleError::FleetUnavailable(e.to_string()))?;
        }
        let outcome = run_crawl_prepared(&PreparedCrawl {
            adapters,
            targets: inputs.targets.clone(),
            workers,
            per_host_rate: 1_000_000, // pacing is not under test here
            egress_pool: vec!["scale-egress".to_string()],
            seed: inputs.seed,
            output_path,
            transcripts_path: None,
        })
        .await?;
        fleet.shutdown().await;
        let mut samples = outcome.service_samples;
        samples.sort_by(|a, b| a.total_cmp(b));
        legs.push(ScaleLeg {
            workers,
            n_requests: samples.len(),
            samples,
        });
    }

    let mut pairwise = Vec::new();
    for i in 0..legs.len() {
        for j in (i + 1)..legs.len() {
            let a_below_b =
                ks_one_tailed(&legs[i].samples, &legs[j].samples, Alternative::ABelowB)
                    .expect("legs have enough samples");
            let a_above_b =
                ks_one_tailed(&legs[i].samples, &legs[j].samples, Alternative::AAboveB)
                    .expect("legs have enough samples");
            pairwise.push(PairDecision {
                workers_a: legs[i].workers,
                workers_b: legs[j].workers,
                reject: a_below_b.rejects() || a_above_b.rejects(),
                a_below_b,
                a_above_b,
            });
        }
    }

    Ok(ScaleReport { legs, pairwise })
}
