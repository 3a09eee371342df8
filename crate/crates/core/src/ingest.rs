//! Input loaders and the per-block-group address sampler.
//!
//! Addresses, incomes, and adjacency come in as UTF-8 CSV (adjacency
//! alternatively as GeoJSON polygons, from which queen contiguity is
//! derived). Loaders reject invalid rows individually and report them by row
//! number rather than failing the whole file.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::Address;
use crate::adjacency::{AdjacencyError, AdjacencyGraph, EdgeListMode};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file missing: {0}")]
    FileMissing(String),
    #[error("malformed header in {path}: expected columns {expected:?}")]
    MalformedHeader { path: String, expected: Vec<String> },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("duplicate GEOID {geoid} with conflicting incomes {a} and {b}")]
    ConflictingDuplicate { geoid: String, a: f64, b: f64 },
    #[error("block group has no addresses")]
    EmptyBlockGroup,
    #[error("sampling rate must be in (0, 1], got {0}")]
    InvalidRate(f64),
    #[error("sampling floor must be >= 1, got {0}")]
    InvalidFloor(usize),
    #[error(transparent)]
    Adjacency(#[from] AdjacencyError),
    #[error("geojson error in {path}: {reason}")]
    GeoJson { path: String, reason: String },
}

/// A rejected input row and why.
#[derive(Debug, Clone, Serialize)]
pub struct RowRejection {
    pub line: usize,
    pub reason: String,
}

/// Accepted rows plus the per-row rejection report.
#[derive(Debug)]
pub struct LoadReport<T> {
    pub accepted: Vec<T>,
    pub rejected: Vec<RowRejection>,
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, IngestError> {
    if !path.exists() {
        return Err(IngestError::FileMissing(path.display().to_string()));
    }
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|source| IngestError::Csv {
            path: path.display().to_string(),
            source,
        })
}

fn check_header(
    reader: &mut csv::Reader<std::fs::File>,
    path: &Path,
    expected: &[&str],
) -> Result<(), IngestError> {
    let headers = reader.headers().map_err(|source| IngestError::Csv {
        path: path.display().to_string(),
        source,
    })?;
    let got: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if got != expected {
        return Err(IngestError::MalformedHeader {
            path: path.display().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(())
}

pub const ADDRESS_HEADER: [&str; 7] = [
    "address_id",
    "street",
    "unit",
    "city",
    "state",
    "zip",
    "block_group_id",
];

/// Loads the address CSV, rejecting rows that violate address invariants or
/// repeat an address_id.
pub fn load_addresses(path: &Path) -> Result<LoadReport<Address>, IngestError> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &ADDRESS_HEADER)?;
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|source| IngestError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let unit = record.get(2).unwrap_or("").trim();
        let address = Address {
            address_id: record.get(0).unwrap_or("").trim().to_string(),
            street: record.get(1).unwrap_or("").trim().to_string(),
            unit: if unit.is_empty() { None } else { Some(unit.to_string()) },
            city: record.get(3).unwrap_or("").trim().to_string(),
            state: record.get(4).unwrap_or("").trim().to_string(),
            zip: record.get(5).unwrap_or("").trim().to_string(),
            block_group_id: record.get(6).unwrap_or("").trim().to_string(),
        };
        if let Err(e) = address.validate() {
            rejected.push(RowRejection {
                line,
                reason: e.to_string(),
            });
            continue;
        }
        if !seen_ids.insert(address.address_id.clone()) {
            rejected.push(RowRejection {
                line,
                reason: format!("duplicate address_id {}", address.address_id),
            });
            continue;
        }
        accepted.push(address);
    }
    Ok(LoadReport { accepted, rejected })
}

pub const INCOME_HEADER: [&str; 2] = ["block_group_id", "median_household_income"];

/// Loads block-group median household incomes. Rows with non-positive or
/// unparseable incomes are rejected individually; a GEOID repeated with a
/// different income is a hard error.
pub fn load_income(path: &Path) -> Result<(BTreeMap<String, f64>, Vec<RowRejection>), IngestError> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &INCOME_HEADER)?;
    let mut incomes: BTreeMap<String, f64> = BTreeMap::new();
    let mut rejected = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|source| IngestError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let geoid = record.get(0).unwrap_or("").trim().to_string();
        let raw = record.get(1).unwrap_or("").trim();
        if geoid.len() != 12 || !geoid.bytes().all(|b| b.is_ascii_digit()) {
            rejected.push(RowRejection {
                line,
                reason: format!("invalid GEOID {geoid:?}"),
            });
            continue;
        }
        let income: f64 = match raw.parse() {
            Ok(v) => v,
            Err(_) => {
                rejected.push(RowRejection {
                    line,
                    reason: format!("unparseable income {raw:?}"),
                });
                continue;
            }
        };
        if income.is_nan() || income <= 0.0 {
            rejected.push(RowRejection {
                line,
                reason: format!("non-positive income {income}"),
            });
            continue;
        }
        if let Some(&existing) = incomes.get(&geoid) {
            if existing != income {
                return Err(IngestError::ConflictingDuplicate {
                    geoid,
                    a: existing,
                    b: income,
                });
            }
            continue;
        }
        incomes.insert(geoid, income);
    }
    Ok((incomes, rejected))
}

pub const EDGE_HEADER: [&str; 2] = ["geoid_a", "geoid_b"];

/// Loads the adjacency graph from an edge-list CSV or a GeoJSON polygon file
/// (queen contiguity). Format is picked by extension: `.geojson`/`.json` are
/// polygons, anything else is an edge list.
pub fn load_adjacency(path: &Path, mode: EdgeListMode) -> Result<AdjacencyGraph, IngestError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let graph = if ext == "geojson" || ext == "json" {
        load_adjacency_geojson(path)?
    } else {
        let mut reader = open_reader(path)?;
        check_header(&mut reader, path, &EDGE_HEADER)?;
        let mut edges = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|source| IngestError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            edges.push((
                record.get(0).unwrap_or("").trim().to_string(),
                record.get(1).unwrap_or("").trim().to_string(),
            ));
        }
        AdjacencyGraph::from_edges(edges, mode)?
    };
    graph.check_invariants()?;
    Ok(graph)
}

/// Parses a GeoJSON FeatureCollection of Polygon/MultiPolygon features whose
/// id (or `GEOID` property) names the block group.
fn load_adjacency_geojson(path: &Path) -> Result<AdjacencyGraph, IngestError> {
    if !path.exists() {
        return Err(IngestError::FileMissing(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| IngestError::GeoJson {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| IngestError::GeoJson {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let err = |reason: &str| IngestError::GeoJson {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let features = doc
        .get("features")
        .and_then(|f| f.as_array())
        .ok_or_else(|| err("missing features array"))?;

    let mut parsed: Vec<(String, crate::adjacency::PolygonRings)> = Vec::new();
    for feature in features {
        let geoid = feature
            .get("id")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .or_else(|| {
                feature
                    .get("properties")
                    .and_then(|p| p.get("GEOID"))
                    .and_then(|v| v.as_str())
                    .map(str::to_string)
            })
            .ok_or_else(|| err("feature missing id/GEOID"))?;
        let geometry = feature.get("geometry").ok_or_else(|| err("feature missing geometry"))?;
        let gtype = geometry
            .get("type")
            .and_then(|t| t.as_str())
            .ok_or_else(|| err("geometry missing type"))?;
        let coords = geometry
            .get("coordinates")
            .ok_or_else(|| err("geometry missing coordinates"))?;
        let mut rings: Vec<Vec<(f64, f64)>> = Vec::new();
        let parse_ring = |ring: &serde_json::Value| -> Option<Vec<(f64, f64)>> {
            ring.as_array()?
                .iter()
                .map(|pt| {
                    let pt = pt.as_array()?;
                    Some((pt.first()?.as_f64()?, pt.get(1)?.as_f64()?))
                })
                .collect()
        };
        match gtype {
            "Polygon" => {
                for ring in coords.as_array().ok_or_else(|| err("bad polygon"))? {
                    rings.push(parse_ring(ring).ok_or_else(|| err("bad ring"))?);
                }
            }
            "MultiPolygon" => {
                for polygon in coords.as_array().ok_or_else(|| err("bad multipolygon"))? {
                    for ring in polygon.as_array().ok_or_else(|| err("bad polygon"))? {
                        rings.push(parse_ring(ring).ok_or_else(|| err("bad ring"))?);
                    }
                }
            }
            other => return Err(err(&format!("unsupported geometry type {other}"))),
        }
        parsed.push((geoid, rings));
    }
    Ok(AdjacencyGraph::queen_from_polygons(&parsed))
}

pub const DEFAULT_SAMPLE_RATE: f64 = 0.10;
pub const DEFAULT_SAMPLE_FLOOR: usize = 30;

/// Sample size rule: `min(n, max(ceil(rate * n), floor))`.
pub fn sample_size(n: usize, rate: f64, floor: usize) -> usize {
    let by_rate = (rate * n as f64).ceil() as usize;
    n.min(by_rate.max(floor))
}

/// Uniform random subset of a block group's addresses, without replacement.
/// Deterministic given the seed.
pub fn sample_block_group(
    addresses: &[Address],
    rate: f64,
    floor: usize,
    seed: u64,
) -> Result<Vec<Address>, IngestError> {
    if addresses.is_empty() {
        return Err(IngestError::EmptyBlockGroup);
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(IngestError::InvalidRate(rate));
    }
    if floor == 0 {
        return Err(IngestError::InvalidFloor(floor));
    }
    let k = sample_size(addresses.len(), rate, floor);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, addresses.len(), k);
    let mut picks: Vec<usize> = chosen.into_iter().collect();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| addresses[i].clone()).collect())
}

/// The chosen addresses per block group, plus the parameters that produced
/// them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplePlan {
    pub rate: f64,
    pub floor: usize,
    pub seed: u64,
    /// GEOID -> chosen address_ids.
    pub groups: BTreeMap<String, Vec<String>>,
}

/// Samples every block group in the address list. Per-group RNG seeds derive
/// from the base seed and the GEOID, so adding a block group does not change
/// the picks in the others.
pub fn build_sample_plan(
    addresses: &[Address],
    rate: f64,
    floor: usize,
    seed: u64,
) -> Result<(SamplePlan, Vec<Address>), IngestError> {
    let mut by_group: BTreeMap<String, Vec<Address>> = BTreeMap::new();
    for address in addresses {
        by_group
            .entry(address.block_group_id.clone())
            .or_default()
            .push(address.clone());
    }
    let mut groups = BTreeMap::new();
    let mut chosen_addresses = Vec::new();
    for (geoid, members) in &by_group {
        let group_seed = derive_seed(seed, &["sample", geoid]);
        let chosen = sample_block_group(members, rate, floor, group_seed)?;
        groups.insert(
            geoid.clone(),
            chosen.iter().map(|a| a.address_id.clone()).collect(),
        );
        chosen_addresses.extend(chosen);
    }
    Ok((
        SamplePlan {
            rate,
            floor,
            seed,
            groups,
        },
        chosen_addresses,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    fn make_addresses(n: usize, geoid: &str) -> Vec<Address> {
        (0..n)
            .map(|i| Address {
                address_id: format!("{geoid}-{i}"),
                street: format!("{} Oak Street", 100 + i),
                unit: None,
                city: "Testville".into(),
                state: "LA".into(),
                zip: "70115".into(),
                block_group_id: geoid.into(),
            })
            .collect()
    }

    #[test]
    fn load_addresses_accepts_clean_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "addr.csv",
            "address_id,street,unit,city,state,zip,block_group_id\n\
             a1,123 Main Ave,,New Orleans,LA,70115,220710017001\n\
             a2,124 Main Ave,2B,New Orleans,LA,70115,220710017001\n\
             a3,125 Main Ave,,New Orleans,LA,70115,220710017001\n\
             a4,45-B Elm Ct,,Wichita,KS,67202,201730043002\n\
             a5,9 Pine Rd,,Wichita,KS,67202,201730043002\n",
        );
        let report = load_addresses(&path).unwrap();
        assert_eq!(report.accepted.len(), 5);
        assert!(report.rejected.is_empty());
        assert_eq!(report.accepted[1].unit.as_deref(), Some("2B"));
    }

    #[test]
    fn load_addresses_rejects_bad_zip_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "addr.csv",
            "address_id,street,unit,city,state,zip,block_group_id\n\
             a1,123 Main Ave,,New Orleans,LA,7011,220710017001\n\
             a2,124 Main Ave,,New Orleans,LA,70115,220710017001\n\
             a2,125 Main Ave,,New Orleans,LA,70115,220710017001\n",
        );
        let report = load_addresses(&path).unwrap();
        assert_eq!(report.accepted.len(), 1);
        assert_eq!(report.rejected.len(), 2);
        assert_eq!(report.rejected[0].line, 2);
        assert!(report.rejected[1].reason.contains("duplicate"));
    }

    #[test]
    fn load_addresses_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.csv");
        assert!(matches!(
            load_addresses(&missing),
            Err(IngestError::FileMissing(_))
        ));
        let path = write_file(&dir, "bad.csv", "id,road\n1,2\n");
        assert!(matches!(
            load_addresses(&path),
            Err(IngestError::MalformedHeader { .. })
        ));
    }

    #[test]
    fn load_income_rules() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "income.csv",
            "block_group_id,median_household_income\n\
             220710017001,41000\n\
             220710017002,-1\n\
             220710017003,52000\n\
             220710017003,52000\n",
        );
        let (incomes, rejected) = load_income(&path).unwrap();
        assert_eq!(incomes.len(), 2);
        assert_eq!(incomes["220710017001"], 41000.0);
        assert_eq!(rejected.len(), 1);

        let conflict = write_file(
            &dir,
            "conflict.csv",
            "block_group_id,median_household_income\n\
             220710017001,41000\n\
             220710017001,42000\n",
        );
        assert!(matches!(
            load_income(&conflict),
            Err(IngestError::ConflictingDuplicate { .. })
        ));
    }

    #[test]
    fn load_adjacency_edge_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "adj.csv",
            "geoid_a,geoid_b\nA,B\nA,A\n",
        );
        let graph = load_adjacency(&path, EdgeListMode::Symmetrize).unwrap();
        assert_eq!(graph.neighbors("A").unwrap(), vec!["B"]);
        assert_eq!(graph.neighbors("B").unwrap(), vec!["A"]);
        assert_eq!(graph.self_loops_dropped(), 1);
    }

    #[test]
    fn load_adjacency_geojson_grid() {
        let dir = tempfile::tempdir().unwrap();
        let mut features = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                let (x, y) = (c as f64, r as f64);
                features.push(format!(
                    r#"{{"type":"Feature","id":"g{r}{c}","properties":{{}},"geometry":{{"type":"Polygon","coordinates":[[[{x},{y}],[{x1},{y}],[{x1},{y1}],[{x},{y1}],[{x},{y}]]]}}}}"#,
                    x1 = x + 1.0,
                    y1 = y + 1.0,
                ));
            }
        }
        let doc = format!(
            r#"{{"type":"FeatureCollection","features":[{}]}}"#,
            features.join(",")
        );
        let path = write_file(&dir, "grid.geojson", &doc);
        let graph = load_adjacency(&path, EdgeListMode::Symmetrize).unwrap();
        assert_eq!(graph.neighbors("g00").unwrap().len(), 3);
        assert_eq!(graph.neighbors("g11").unwrap().len(), 8);
    }

    #[test]
    fn sample_size_rule() {
        assert_eq!(sample_size(1000, 0.10, 30), 100);
        assert_eq!(sample_size(200, 0.10, 30), 30);
        assert_eq!(sample_size(25, 0.10, 30), 25);
    }

    #[test]
    fn sampling_is_deterministic_and_capped() {
        let addresses = make_addresses(200, "220710017001");
        let a = sample_block_group(&addresses, 0.10, 30, 99).unwrap();
        let b = sample_block_group(&addresses, 0.10, 30, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
        let all = sample_block_group(&make_addresses(25, "220710017001"), 0.10, 30, 99).unwrap();
        assert_eq!(all.len(), 25);
    }

    #[test]
    fn sampling_rejects_bad_parameters() {
        let addresses = make_addresses(10, "220710017001");
        assert!(matches!(
            sample_block_group(&[], 0.10, 30, 1),
            Err(IngestError::EmptyBlockGroup)
        ));
        assert!(matches!(
            sample_block_group(&addresses, 0.0, 30, 1),
            Err(IngestError::InvalidRate(_))
        ));
        assert!(matches!(
            sample_block_group(&addresses, 0.10, 0, 1),
            Err(IngestError::InvalidFloor(0))
        ));
    }

    #[test]
    fn sampling_inclusion_is_uniform() {
        // 10k seeded trials on n=100, k=30: per-address inclusion frequency
        // should sit at 0.30 within +/- 0.02.
        let addresses = make_addresses(100, "220710017001");
        let mut counts = vec![0u32; 100];
        for trial in 0..10_000u64 {
            let picks = sample_block_group(&addresses, 0.10, 30, trial).unwrap();
            for p in picks {
                let idx: usize = p.address_id.rsplit('-').next().unwrap().parse().unwrap();
                counts[idx] += 1;
            }
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / 10_000.0;
            assert!(
                (freq - 0.30).abs() <= 0.02,
                "address {i} inclusion frequency {freq} outside 0.30 +/- 0.02"
            );
        }
    }

    #[test]
    fn sample_plan_covers_every_group() {
        let mut addresses = make_addresses(400, "220710017001");
        addresses.extend(make_addresses(50, "201730043002"));
        let (plan, chosen) = build_sample_plan(&addresses, 0.10, 30, 7).unwrap();
        assert_eq!(plan.groups["220710017001"].len(), 40);
        assert_eq!(plan.groups["201730043002"].len(), 30);
        assert_eq!(chosen.len(), 70);
    }
}
