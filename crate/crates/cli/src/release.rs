//! Privacy-preserving dataset release.
//!
//! Street-level fields are dropped and the address id is replaced by a keyed
//! digest of the normalized address, so the released file joins to nothing
//! without the salt while block-group analytics stay intact.

use std::io::Write;
use std::path::Path;

use planprobe_core::address::{hash_address, Address, AddressError};
use thiserror::Error;

use crate::dataset::{read_dataset, DatasetError};

#[derive(Debug, Error)]
pub enum ReleaseError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Address(#[from] AddressError),
    #[error("record {index} is missing street-level fields; cannot hash")]
    MissingAddressFields { index: usize },
    #[error("dataset has malformed lines {0:?}; refusing to release a partial dataset")]
    MalformedInput(Vec<usize>),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct ReleaseSummary {
    pub records: u64,
}

/// Writes the hashed release of `dataset_path` to `out_path`.
pub fn release(dataset_path: &Path, salt: &[u8], out_path: &Path) -> Result<ReleaseSummary, ReleaseError> {
    let (records, skipped) = read_dataset(dataset_path)?;
    if !skipped.is_empty() {
        return Err(ReleaseError::MalformedInput(skipped));
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(out_path).map_err(|source| {
        ReleaseError::Output {
            path: out_path.display().to_string(),
            source,
        }
    })?);
    let mut written = 0u64;
    for (index, record) in records.into_iter().enumerate() {
        let (Some(street), Some(state), Some(zip)) =
            (record.street.clone(), record.state.clone(), record.zip.clone())
        else {
            return Err(ReleaseError::MissingAddressFields { index: index + 1 });
        };
        let address = Address {
            address_id: record.address_id.clone(),
            street,
            unit: record.unit.clone(),
            city: record.city.clone(),
            state,
            zip,
            block_group_id: record.geoid.clone(),
        };
        let mut released = record;
        released.address_id = hash_address(&address, salt)?;
        released.street = None;
        released.unit = None;
        released.state = None;
        released.zip = None;
        let line = serde_json::to_string(&released).expect("record serializes");
        writeln!(out, "{line}").map_err(|source| ReleaseError::Output {
            path: out_path.display().to_string(),
            source,
        })?;
        written += 1;
    }
    out.flush().map_err(|source| ReleaseError::Output {
        path: out_path.display().to_string(),
        source,
    })?;
    Ok(ReleaseSummary { records: written })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetRecord, RecordStatus};
    use planprobe_core::plan::{Plan, Technology};

    fn record(id: &str, street: &str) -> DatasetRecord {
        DatasetRecord {
            address_id: id.into(),
            street: Some(street.into()),
            unit: None,
            state: Some("LA".into()),
            zip: Some("70115".into()),
            geoid: "220710017001".into(),
            city: "New Orleans".into(),
            isp: "att".into(),
            status: RecordStatus::Hit,
            plans: vec![Plan::new(1000.0, 1000.0, 80.0, Technology::Fiber)],
            best_cv: Some(12.5),
            total_ms: 12,
            timestamp: 1_700_000_000,
        }
    }

    fn write_dataset(dir: &tempfile::TempDir, records: &[DatasetRecord]) -> std::path::PathBuf {
        let path = dir.path().join("dataset.jsonl");
        let lines: Vec<String> = records
            .iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect();
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        path
    }

    #[test]
    fn release_redacts_streets_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_dataset(
            &dir,
            &[record("a1", "123 Queensberry Ave"), record("a2", "77 Zanzibar Ct")],
        );
        let salt = b"0123456789abcdef";
        let out1 = dir.path().join("rel1.jsonl");
        let out2 = dir.path().join("rel2.jsonl");
        let summary = release(&dataset, salt, &out1).unwrap();
        assert_eq!(summary.records, 2);
        release(&dataset, salt, &out2).unwrap();

        let bytes1 = std::fs::read(&out1).unwrap();
        let bytes2 = std::fs::read(&out2).unwrap();
        assert_eq!(bytes1, bytes2, "same salt twice is byte-identical");

        let text = String::from_utf8(bytes1).unwrap().to_uppercase();
        for fragment in ["QUEENSBERRY", "ZANZIBAR", "QUEENSBERRY AVE", "ZANZIBAR CT"] {
            assert!(
                !text.contains(fragment),
                "released output leaks street fragment {fragment}"
            );
        }
        assert!(text.contains("220710017001"), "block group is public geography");

        // Different salt: ids change, analytics columns do not.
        let out3 = dir.path().join("rel3.jsonl");
        release(&dataset, b"fedcba9876543210", &out3).unwrap();
        let (rel1, _) = read_dataset(&out1).unwrap();
        let (rel3, _) = read_dataset(&out3).unwrap();
        for (a, b) in rel1.iter().zip(&rel3) {
            assert_ne!(a.address_id, b.address_id);
            assert_eq!(a.plans, b.plans);
            assert_eq!(a.best_cv, b.best_cv);
            assert_eq!(a.geoid, b.geoid);
        }
    }

    #[test]
    fn weak_salt_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_dataset(&dir, &[record("a1", "123 Main Ave")]);
        let out = dir.path().join("rel.jsonl");
        assert!(matches!(
            release(&dataset, b"short", &out),
            Err(ReleaseError::Address(AddressError::WeakSalt(5)))
        ));
    }

    #[test]
    fn already_released_input_cannot_be_rehashed() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = record("a1", "123 Main Ave");
        r.street = None;
        let dataset = write_dataset(&dir, &[r]);
        let out = dir.path().join("rel.jsonl");
        assert!(matches!(
            release(&dataset, b"0123456789abcdef", &out),
            Err(ReleaseError::MissingAddressFields { index: 1 })
        ));
    }
}
