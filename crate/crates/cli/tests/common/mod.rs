//! Shared helpers for the integration and acceptance suites: independent
//! oracles, planted-effect dataset generators, and fleet scaffolding.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use planprobe_cli::dataset::{DatasetRecord, RecordStatus};
use planprobe_core::adjacency::AdjacencyGraph;
use planprobe_core::address::Address;
use planprobe_core::plan::{Plan, Technology};
use planprobe_core::stats::Alternative;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Brute-force Moran's I: dense row-standardized weight matrix and the
/// literal double sum. Independent of the implementation's sparse path.
pub fn morans_i_oracle(values: &HashMap<String, f64>, graph: &AdjacencyGraph) -> Option<f64> {
    let names: Vec<&String> = graph
        .nodes()
        .iter()
        .filter(|n| {
            values.contains_key(*n)
                && graph
                    .neighbors(n)
                    .unwrap()
                    .iter()
                    .any(|m| values.contains_key(*m))
        })
        .collect();
    let n = names.len();
    if n < 2 {
        return None;
    }
    let xs: Vec<f64> = names.iter().map(|n| values[*n]).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let denom: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if denom == 0.0 {
        return None;
    }
    let mut w = vec![vec![0.0f64; n]; n];
    for (i, a) in names.iter().enumerate() {
        let neighbors = graph.neighbors(a).unwrap();
        for (j, b) in names.iter().enumerate() {
            if neighbors.contains(&b.as_str()) {
                w[i][j] = 1.0;
            }
        }
        let row: f64 = w[i].iter().sum();
        if row > 0.0 {
            for cell in &mut w[i] {
                *cell /= row;
            }
        }
    }
    let total_w: f64 = w.iter().flatten().sum();
    let mut num = 0.0;
    for i in 0..n {
        for j in 0..n {
            num += w[i][j] * (xs[i] - mean) * (xs[j] - mean);
        }
    }
    Some((n as f64 / total_w) * (num / denom))
}

/// Exhaustive one-sided KS statistic: evaluate both ECDFs at every pooled
/// point by counting.
pub fn ks_d_oracle(a: &[f64], b: &[f64], alternative: Alternative) -> f64 {
    let mut d = 0.0f64;
    for &x in a.iter().chain(b) {
        let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
        let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
        let diff = match alternative {
            Alternative::ABelowB => fa - fb,
            Alternative::AAboveB => fb - fa,
        };
        if diff > d {
            d = diff;
        }
    }
    d
}

/// Standard normal draw (Box-Muller).
pub fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    mean + sd * z
}

/// `n` normal draws shifted so the sample median lands exactly on `median`,
/// clamped into the plan-vector domain.
pub fn normal_sample_with_median(
    rng: &mut ChaCha8Rng,
    n: usize,
    median: f64,
    sd: f64,
) -> Vec<f64> {
    let mut values: Vec<f64> = (0..n).map(|_| normal(rng, median, sd)).collect();
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let observed = sorted[n / 2];
    let shift = median - observed;
    for v in &mut values {
        *v = (*v + shift).clamp(1.0, 29.0);
    }
    values
}

fn hit_record(
    address_id: &str,
    geoid: &str,
    city: &str,
    isp: &str,
    street: &str,
    plans: Vec<Plan>,
) -> DatasetRecord {
    let best = planprobe_core::metrics::best_cv(&plans).expect("plans valid");
    DatasetRecord {
        address_id: address_id.to_string(),
        street: Some(street.to_string()),
        unit: None,
        state: Some("LA".into()),
        zip: Some("70115".into()),
        geoid: geoid.to_string(),
        city: city.to_string(),
        isp: isp.to_string(),
        status: RecordStatus::Hit,
        plans,
        best_cv: Some(best),
        total_ms: 5,
        timestamp: 1_700_000_000,
    }
}

/// Single-plan record pinning the block group's carriage value exactly.
fn cable_record(address_id: &str, geoid: &str, city: &str, isp: &str, cv: f64) -> DatasetRecord {
    let price = 50.0;
    let down = price * cv;
    let plan = Plan::new(down, down / 30.0, price, Technology::Cable);
    hit_record(address_id, geoid, city, isp, "10 Synthetic Way", vec![plan])
}

pub const COMPETITION_CITY: &str = "plantville";
pub const CABLE_ISP: &str = "cox";
pub const WIRELINE_ISP: &str = "att";
pub const MONOPOLY_MEDIAN: f64 = 11.38;
pub const FIBER_DUOPOLY_MEDIAN: f64 = 14.63;
const COMPETITION_SD: f64 = 1.74;
const BGS_PER_MODE: usize = 201;

/// A synthetic city with three planted market modes for the cable ISP:
/// monopoly (median 11.38), a no-effect DSL duopoly drawn from the same
/// distribution, and a fiber duopoly shifted to median 14.63.
pub fn planted_competition_city(seed: u64) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let monopoly = normal_sample_with_median(&mut rng, BGS_PER_MODE, MONOPOLY_MEDIAN, COMPETITION_SD);
    let dsl = normal_sample_with_median(&mut rng, BGS_PER_MODE, MONOPOLY_MEDIAN, COMPETITION_SD);
    let fiber =
        normal_sample_with_median(&mut rng, BGS_PER_MODE, FIBER_DUOPOLY_MEDIAN, COMPETITION_SD);

    let mut records = Vec::new();
    let mut geoid_counter = 0u32;
    let mut next_geoid = || {
        geoid_counter += 1;
        format!("22071{geoid_counter:07}")
    };
    for (mode, cvs) in [("mono", &monopoly), ("dsl", &dsl), ("fiber", &fiber)] {
        for (i, &cv) in cvs.iter().enumerate() {
            let geoid = next_geoid();
            for a in 0..3 {
                records.push(cable_record(
                    &format!("{mode}-{i:04}-{a}"),
                    &geoid,
                    COMPETITION_CITY,
                    CABLE_ISP,
                    cv,
                ));
            }
            let competitor_plan = match mode {
                "dsl" => Some(Plan::new(10.0, 1.25, 55.0, Technology::Dsl)),
                "fiber" => Some(Plan::new(940.0, 940.0, 65.0, Technology::Fiber)),
                _ => None,
            };
            if let Some(plan) = competitor_plan {
                for a in 0..2 {
                    records.push(hit_record(
                        &format!("{mode}-{i:04}-w{a}"),
                        &geoid,
                        COMPETITION_CITY,
                        WIRELINE_ISP,
                        "11 Synthetic Way",
                        vec![plan.clone()],
                    ));
                }
            }
        }
    }
    records
}

pub const INCOME_CITY: &str = "gapville";

/// A synthetic city with fiber in exactly 41 of 100 low-income and 57 of 100
/// high-income block groups. Returns (records, income rows).
pub fn planted_income_city() -> (Vec<DatasetRecord>, Vec<(String, f64)>) {
    let mut records = Vec::new();
    let mut incomes = Vec::new();
    let mut make_group = |label: &str, count: usize, fibered: usize, base_income: f64| {
        let group_digit = if label == "low" { 1 } else { 2 };
        for i in 0..count {
            let geoid = format!("22071{group_digit}{i:06}");
            incomes.push((geoid.clone(), base_income + i as f64 * 10.0));
            let plans = if i < fibered {
                vec![Plan::new(940.0, 940.0, 65.0, Technology::Fiber)]
            } else {
                vec![Plan::new(10.0, 1.25, 55.0, Technology::Dsl)]
            };
            for a in 0..2 {
                records.push(hit_record(
                    &format!("{label}-{i:03}-{a}"),
                    &geoid,
                    INCOME_CITY,
                    WIRELINE_ISP,
                    "12 Synthetic Way",
                    plans.clone(),
                ));
            }
        }
    };
    make_group("low", 100, 41, 30_000.0);
    make_group("high", 100, 57, 60_000.0);
    (records, incomes)
}

/// Writes records as a JSONL dataset file.
pub fn write_dataset(dir: &Path, name: &str, records: &[DatasetRecord]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    std::fs::write(&path, text).expect("dataset written");
    path
}

/// Writes an income CSV for the given (geoid, income) rows.
pub fn write_income(dir: &Path, name: &str, rows: &[(String, f64)]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("block_group_id,median_household_income\n");
    for (geoid, income) in rows {
        text.push_str(&format!("{geoid},{income}\n"));
    }
    std::fs::write(&path, text).expect("income written");
    path
}

/// Writes a chain-adjacency CSV over the given geoids.
pub fn write_chain_adjacency(dir: &Path, name: &str, geoids: &[String]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("geoid_a,geoid_b\n");
    for pair in geoids.windows(2) {
        text.push_str(&format!("{},{}\n", pair[0], pair[1]));
    }
    std::fs::write(&path, text).expect("adjacency written");
    path
}

/// Distinct geoids of a record set, in first-seen order.
pub fn geoids_of(records: &[DatasetRecord]) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for r in records {
        if seen.insert(r.geoid.clone()) {
            out.push(r.geoid.clone());
        }
    }
    out
}

/// Synthetic crawl targets with distinctive street-name tokens (for privacy
/// scans) and mixed suffix noise.
pub fn crawl_targets(n: usize, geoid: &str, zip: &str) -> Vec<Address> {
    (0..n)
        .map(|i| {
            let suffix = if i % 3 == 0 { "Ave" } else { "Avenue" };
            Address {
                address_id: format!("t-{i:05}"),
                street: format!("{} Kwxqzj{} {suffix}", 100 + i, alpha_token(i)),
                unit: None,
                city: "Riverton".into(),
                state: "LA".into(),
                zip: zip.into(),
                block_group_id: geoid.into(),
            }
        })
        .collect()
}

fn alpha_token(mut i: usize) -> String {
    let mut out = String::new();
    loop {
        out.push((b'a' + (i % 26) as u8) as char);
        i /= 26;
        if i == 0 {
            break;
        }
    }
    out
}
