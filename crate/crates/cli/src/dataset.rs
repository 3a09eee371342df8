//! Dataset records and JSONL persistence helpers.

use std::collections::HashSet;
use std::path::Path;

use planprobe_core::address::Address;
use planprobe_core::metrics;
use planprobe_core::plan::Plan;
use planprobe_engine::session::{QueryOutcome, QueryStatus};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot open dataset {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset {path} line {line} is malformed: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
}

/// Terminal status as persisted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordStatus {
    Hit,
    Miss { reason: String },
    Unserviceable,
}

impl From<&QueryStatus> for RecordStatus {
    fn from(status: &QueryStatus) -> Self {
        match status {
            QueryStatus::Hit => RecordStatus::Hit,
            QueryStatus::Miss { reason } => RecordStatus::Miss {
                reason: reason.clone(),
            },
            QueryStatus::Unserviceable => RecordStatus::Unserviceable,
        }
    }
}

/// One (address, ISP) query result, one JSON line in the dataset.
///
/// Street-level fields are present in private datasets and dropped by the
/// release pipeline; `total_ms` is the sum of server-reported service times,
/// which is stable across runs and worker counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub address_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub street: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zip: Option<String>,
    pub geoid: String,
    pub city: String,
    pub isp: String,
    pub status: RecordStatus,
    pub plans: Vec<Plan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_cv: Option<f64>,
    pub total_ms: u64,
    pub timestamp: u64,
}

impl DatasetRecord {
    pub fn from_outcome(
        address: &Address,
        isp: &str,
        outcome: &QueryOutcome,
        timestamp: u64,
    ) -> Self {
        let status = RecordStatus::from(&outcome.status);
        let best_cv = if status == RecordStatus::Hit {
            metrics::best_cv(&outcome.plans).ok()
        } else {
            None
        };
        Self {
            address_id: address.address_id.clone(),
            street: Some(address.street.clone()),
            unit: address.unit.clone(),
            state: Some(address.state.clone()),
            zip: Some(address.zip.clone()),
            geoid: address.block_group_id.clone(),
            city: address.city.clone(),
            isp: isp.to_string(),
            status,
            plans: outcome.plans.clone(),
            best_cv,
            total_ms: outcome.serviced_ms,
            timestamp,
        }
    }

    /// `best_cv` present iff the record is a hit, and equal to the best
    /// carriage value of the recorded plans.
    pub fn check_invariants(&self) -> Result<(), String> {
        match (&self.status, self.best_cv) {
            (RecordStatus::Hit, Some(cv)) => {
                let expected = metrics::best_cv(&self.plans).map_err(|e| e.to_string())?;
                if cv != expected {
                    return Err(format!("best_cv {cv} != computed {expected}"));
                }
                Ok(())
            }
            (RecordStatus::Hit, None) => Err("hit record without best_cv".into()),
            (_, Some(_)) => Err("non-hit record with best_cv".into()),
            (_, None) => Ok(()),
        }
    }

    /// Canonical serialization of everything except the collection timestamp;
    /// two crawls of the same targets agree on these bytes.
    pub fn content_fingerprint(&self) -> String {
        let mut shadow = self.clone();
        shadow.timestamp = 0;
        serde_json::to_string(&shadow).expect("record serializes")
    }
}

/// Reads a JSONL dataset. Malformed lines are skipped and reported by line
/// number (a crash mid-append leaves at most one torn line).
pub fn read_dataset(path: &Path) -> Result<(Vec<DatasetRecord>, Vec<usize>), DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<DatasetRecord>(line) {
            Ok(r) => records.push(r),
            Err(_) => skipped.push(i + 1),
        }
    }
    Ok((records, skipped))
}

/// (isp, address_id) pairs already present in the output, for resume.
pub fn load_completed(path: &Path) -> HashSet<(String, String)> {
    match read_dataset(path) {
        Ok((records, _)) => records
            .into_iter()
            .map(|r| (r.isp, r.address_id))
            .collect(),
        Err(_) => HashSet::new(),
    }
}
