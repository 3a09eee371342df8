//! Append-only JSONL sinks with a single writer task.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;
use tokio::sync::mpsc;

use crate::dataset::DatasetRecord;

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("output {path} is unwritable: {source}")]
    OutputUnwritable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sink writer task failed: {0}")]
    WriterFailed(String),
}

/// Dataset records, one flushed JSON line each.
pub type RecordSink = LineSink<DatasetRecord>;

/// Hands values to a dedicated writer task; each value is one flushed JSON
/// line, so a killed run loses at most the line being written.
pub struct LineSink<T> {
    tx: mpsc::Sender<T>,
    writer: tokio::task::JoinHandle<Result<u64, std::io::Error>>,
}

impl<T: Serialize + Send + 'static> LineSink<T> {
    pub fn open(path: &Path) -> Result<Self, SinkError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|source| SinkError::OutputUnwritable {
                    path: path.display().to_string(),
                    source,
                })?;
            }
        }
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| SinkError::OutputUnwritable {
                path: path.display().to_string(),
                source,
            })?;
        // A killed run can leave a torn final line; terminate it so appended
        // records stay parseable.
        if let Ok(contents) = std::fs::read(path) {
            if contents.last().is_some_and(|&b| b != b'\n') {
                file.write_all(b"\n").map_err(|source| SinkError::OutputUnwritable {
                    path: path.display().to_string(),
                    source,
                })?;
            }
        }
        let (tx, mut rx) = mpsc::channel::<T>(1024);
        let writer = tokio::task::spawn_blocking(move || {
            let mut out = std::io::BufWriter::new(file);
            let mut written = 0u64;
            while let Some(value) = rx.blocking_recv() {
                let line = serde_json::to_string(&value).expect("sink value serializes");
                writeln!(out, "{line}")?;
                out.flush()?;
                written += 1;
            }
            Ok(written)
        });
        Ok(Self { tx, writer })
    }

    pub async fn write(&self, value: T) -> Result<(), SinkError> {
        self.tx
            .send(value)
            .await
            .map_err(|e| SinkError::WriterFailed(e.to_string()))
    }

    /// Closes the sink and returns how many records were written.
    pub async fn finish(self) -> Result<u64, SinkError> {
        drop(self.tx);
        self.writer
            .await
            .map_err(|e| SinkError::WriterFailed(e.to_string()))?
            .map_err(|e| SinkError::WriterFailed(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{read_dataset, RecordStatus};

    fn record(id: &str) -> DatasetRecord {
        DatasetRecord {
            address_id: id.into(),
            street: None,
            unit: None,
            state: None,
            zip: None,
            geoid: "220710017001".into(),
            city: "x".into(),
            isp: "att".into(),
            status: RecordStatus::Miss { reason: "blocked".into() },
            plans: Vec::new(),
            best_cv: None,
            total_ms: 1,
            timestamp: 0,
        }
    }

    #[tokio::test]
    async fn writes_and_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        let sink = RecordSink::open(&path).unwrap();
        sink.write(record("a1")).await.unwrap();
        sink.write(record("a2")).await.unwrap();
        assert_eq!(sink.finish().await.unwrap(), 2);

        // Reopening appends rather than truncating.
        let sink = RecordSink::open(&path).unwrap();
        sink.write(record("a3")).await.unwrap();
        assert_eq!(sink.finish().await.unwrap(), 1);

        let (records, skipped) = read_dataset(&path).unwrap();
        assert_eq!(records.len(), 3);
        assert!(skipped.is_empty());
    }
}
