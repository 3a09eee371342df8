//! Per-city analysis pipeline: block-group summaries, plan vectors and L1
//! distances, spatial autocorrelation, competition tests, and income gaps.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use planprobe_core::adjacency::{AdjacencyGraph, EdgeListMode};
use planprobe_core::ingest;
use planprobe_core::metrics::{l1_distance, median, plan_vector, BlockGroupSummary, PlanVector};
use planprobe_core::plan::Plan;
use planprobe_core::stats::{
    classify_competition, competition_effect, income_fiber_gap, morans_i, split_by_median_income,
    CompetitionReport, FiberGap, ModeSamples,
};
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{read_dataset, DatasetRecord, RecordStatus};

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv write failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct MoranRow {
    pub isp: String,
    pub city: String,
    pub n_block_groups: usize,
    pub morans_i: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct L1Row {
    pub isp: String,
    pub city_a: String,
    pub city_b: String,
    pub l1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompetitionRow {
    pub city: String,
    pub isp: String,
    pub report: CompetitionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncomeRow {
    pub city: String,
    pub isp: String,
    pub gap: Result<FiberGap, String>,
}

/// Everything the pipeline computed, for reporting and assertions.
#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub n_records: usize,
    pub n_hits: usize,
    pub cities: Vec<String>,
    pub isps: Vec<String>,
    /// (city, summary) pairs.
    pub summaries: Vec<(String, BlockGroupSummary)>,
    pub plan_vectors: BTreeMap<String, PlanVector>,
    pub l1_rows: Vec<L1Row>,
    pub moran_rows: Vec<MoranRow>,
    pub moran_medians: BTreeMap<String, f64>,
    pub competition_rows: Vec<CompetitionRow>,
    pub income_rows: Vec<IncomeRow>,
    /// Non-fatal issues, each tagged with its (city, ISP) context.
    pub section_errors: Vec<String>,
}

fn vector_key(isp: &str, city: &str) -> String {
    format!("{isp}|{city}")
}

impl AnalyzeReport {
    pub fn plan_vector_for(&self, isp: &str, city: &str) -> Option<&PlanVector> {
        self.plan_vectors.get(&vector_key(isp, city))
    }

    pub fn competition_for(&self, city: &str, isp: &str) -> Option<&CompetitionReport> {
        self.competition_rows
            .iter()
            .find(|r| r.city == city && r.isp == isp)
            .map(|r| &r.report)
    }

    pub fn income_gap_for(&self, city: &str, isp: &str) -> Option<&Result<FiberGap, String>> {
        self.income_rows
            .iter()
            .find(|r| r.city == city && r.isp == isp)
            .map(|r| &r.gap)
    }
}

/// Runs the full pipeline and writes the report files into `out_dir`.
pub fn analyze(
    dataset_path: &Path,
    income_path: &Path,
    adjacency_path: &Path,
    out_dir: &Path,
) -> Result<AnalyzeReport, AnalyzeError> {
    let (records, skipped) = read_dataset(dataset_path)?;
    if records.is_empty() {
        return Err(AnalyzeError::EmptyDataset);
    }
    let (incomes, income_rejects) = ingest::load_income(income_path)?;
    let graph = ingest::load_adjacency(adjacency_path, EdgeListMode::Symmetrize)?;

    let mut report = compute(&records, &incomes, &graph);
    for line in skipped {
        report
            .section_errors
            .push(format!("dataset: skipped malformed line {line}"));
    }
    for reject in income_rejects {
        report
            .section_errors
            .push(format!("income: rejected row {}: {}", reject.line, reject.reason));
    }
    write_outputs(&report, out_dir)?;
    Ok(report)
}

/// The pure computation behind `analyze`.
pub fn compute(
    records: &[DatasetRecord],
    incomes: &BTreeMap<String, f64>,
    graph: &AdjacencyGraph,
) -> AnalyzeReport {
    let mut section_errors = Vec::new();
    for (i, record) in records.iter().enumerate() {
        if let Err(e) = record.check_invariants() {
            section_errors.push(format!("dataset record {}: {e}", i + 1));
        }
    }

    // geoid -> city (block groups never span cities).
    let mut geoid_city: BTreeMap<String, String> = BTreeMap::new();
    for r in records {
        geoid_city.insert(r.geoid.clone(), r.city.clone());
    }

    // (city, isp, geoid) -> per-address plan lists, hits only.
    let mut groups: BTreeMap<(String, String, String), Vec<Vec<Plan>>> = BTreeMap::new();
    let mut n_hits = 0usize;
    for r in records {
        if r.status == RecordStatus::Hit {
            n_hits += 1;
            groups
                .entry((r.city.clone(), r.isp.clone(), r.geoid.clone()))
                .or_default()
                .push(r.plans.clone());
        }
    }

    let mut summaries: Vec<(String, BlockGroupSummary)> = Vec::new();
    for ((city, isp, geoid), per_address) in &groups {
        match BlockGroupSummary::from_plans(geoid, isp, per_address) {
            Ok(summary) => summaries.push((city.clone(), summary)),
            Err(e) => section_errors.push(format!("({city}, {isp}) block group {geoid}: {e}")),
        }
    }

    let cities: Vec<String> = {
        let set: BTreeSet<&String> = records.iter().map(|r| &r.city).collect();
        set.into_iter().cloned().collect()
    };
    let isps: Vec<String> = {
        let set: BTreeSet<&String> = records.iter().map(|r| &r.isp).collect();
        set.into_iter().cloned().collect()
    };

    // (isp, city) -> geoid -> summary reference.
    let mut by_isp_city: BTreeMap<(String, String), BTreeMap<String, &BlockGroupSummary>> =
        BTreeMap::new();
    // (city, geoid) -> summaries across ISPs.
    let mut by_city_geoid: BTreeMap<(String, String), Vec<&BlockGroupSummary>> = BTreeMap::new();
    for (city, summary) in &summaries {
        by_isp_city
            .entry((summary.isp.clone(), city.clone()))
            .or_default()
            .insert(summary.geoid.clone(), summary);
        by_city_geoid
            .entry((city.clone(), summary.geoid.clone()))
            .or_default()
            .push(summary);
    }

    // Plan vectors and inter-city L1 distances per ISP.
    let mut plan_vectors: BTreeMap<String, PlanVector> = BTreeMap::new();
    let mut vector_cities: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for ((isp, city), geo_summaries) in &by_isp_city {
        let cvs: Vec<f64> = geo_summaries.values().map(|s| s.median_best_cv).collect();
        match plan_vector(&cvs) {
            Ok(v) => {
                plan_vectors.insert(vector_key(isp, city), v);
                vector_cities.entry(isp.clone()).or_default().push(city.clone());
            }
            Err(e) => section_errors.push(format!("({city}, {isp}) plan vector: {e}")),
        }
    }
    let mut l1_rows = Vec::new();
    for (isp, cities) in &vector_cities {
        for i in 0..cities.len() {
            for j in (i + 1)..cities.len() {
                let a = &plan_vectors[&vector_key(isp, &cities[i])];
                let b = &plan_vectors[&vector_key(isp, &cities[j])];
                l1_rows.push(L1Row {
                    isp: isp.clone(),
                    city_a: cities[i].clone(),
                    city_b: cities[j].clone(),
                    l1: l1_distance(a, b),
                });
            }
        }
    }

    // Moran's I per (ISP, city) on the city's block-group subgraph.
    let mut moran_rows = Vec::new();
    let mut moran_by_isp: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for ((isp, city), geo_summaries) in &by_isp_city {
        let values: HashMap<String, f64> = geo_summaries
            .iter()
            .map(|(geoid, s)| (geoid.clone(), s.median_best_cv))
            .collect();
        let city_geoids: Vec<&str> = geo_summaries.keys().map(String::as_str).collect();
        let subgraph = graph.subgraph(city_geoids);
        let row = match morans_i(&values, &subgraph) {
            Ok(i) => {
                moran_by_isp.entry(isp.clone()).or_default().push(i);
                MoranRow {
                    isp: isp.clone(),
                    city: city.clone(),
                    n_block_groups: geo_summaries.len(),
                    morans_i: Some(i),
                    note: None,
                }
            }
            Err(e) => MoranRow {
                isp: isp.clone(),
                city: city.clone(),
                n_block_groups: geo_summaries.len(),
                morans_i: None,
                note: Some(e.to_string()),
            },
        };
        moran_rows.push(row);
    }
    let moran_medians: BTreeMap<String, f64> = moran_by_isp
        .iter()
        .filter_map(|(isp, values)| median(values).ok().map(|m| (isp.clone(), m)))
        .collect();

    // Competition: per city, per cable ISP present there.
    let mut competition_rows = Vec::new();
    for city in &cities {
        let cable_isps: BTreeSet<String> = summaries
            .iter()
            .filter(|(c, s)| c == city && s.has_cable)
            .map(|(_, s)| s.isp.clone())
            .collect();
        if cable_isps.is_empty() {
            section_errors.push(format!("({city}) competition: no cable ISP present"));
            continue;
        }
        for cable_isp in cable_isps {
            let mut samples = ModeSamples::default();
            for ((c, _geoid), bg_summaries) in &by_city_geoid {
                if c != city {
                    continue;
                }
                let Some(cable_summary) =
                    bg_summaries.iter().find(|s| s.isp == cable_isp && s.has_cable)
                else {
                    continue;
                };
                match classify_competition(
                    &bg_summaries.iter().map(|s| (*s).clone()).collect::<Vec<_>>(),
                ) {
                    Ok(mode) => samples.push(mode, cable_summary.median_best_cv),
                    Err(e) => section_errors.push(format!(
                        "({city}, {cable_isp}) block group {}: {e}",
                        cable_summary.geoid
                    )),
                }
            }
            competition_rows.push(CompetitionRow {
                city: city.clone(),
                isp: cable_isp.clone(),
                report: competition_effect(&samples),
            });
        }
    }

    // Income-stratified fiber gap per city, for non-cable ISPs.
    let mut income_rows = Vec::new();
    for city in &cities {
        let city_incomes: BTreeMap<String, f64> = geoid_city
            .iter()
            .filter(|(_, c)| *c == city)
            .filter_map(|(g, _)| incomes.get(g).map(|&v| (g.clone(), v)))
            .collect();
        let groups = split_by_median_income(&city_incomes);
        let wireline_isps: BTreeSet<String> = summaries
            .iter()
            .filter(|(c, s)| c == city && !s.has_cable && (s.has_fiber || s.has_dsl))
            .map(|(_, s)| s.isp.clone())
            .collect();
        for isp in wireline_isps {
            let gap = match &groups {
                Err(e) => Err(e.to_string()),
                Ok(groups) => {
                    let has_fiber: BTreeMap<String, bool> = by_isp_city
                        .get(&(isp.clone(), city.clone()))
                        .map(|geo| {
                            geo.iter().map(|(g, s)| (g.clone(), s.has_fiber)).collect()
                        })
                        .unwrap_or_default();
                    income_fiber_gap(groups, &has_fiber).map_err(|e| e.to_string())
                }
            };
            income_rows.push(IncomeRow {
                city: city.clone(),
                isp,
                gap,
            });
        }
    }

    AnalyzeReport {
        n_records: records.len(),
        n_hits,
        cities,
        isps,
        summaries,
        plan_vectors,
        l1_rows,
        moran_rows,
        moran_medians,
        competition_rows,
        income_rows,
        section_errors,
    }
}

fn write_outputs(report: &AnalyzeReport, out_dir: &Path) -> Result<(), AnalyzeError> {
    std::fs::create_dir_all(out_dir).map_err(|source| AnalyzeError::Output {
        path: out_dir.display().to_string(),
        source,
    })?;

    let mut w = csv::Writer::from_path(out_dir.join("block_group_summaries.csv"))?;
    w.write_record([
        "geoid",
        "isp",
        "median_best_cv",
        "cov",
        "n",
        "has_fiber",
        "has_dsl",
        "has_cable",
    ])?;
    for (_, s) in &report.summaries {
        w.write_record([
            s.geoid.clone(),
            s.isp.clone(),
            s.median_best_cv.to_string(),
            s.cov.to_string(),
            s.n_addresses.to_string(),
            s.has_fiber.to_string(),
            s.has_dsl.to_string(),
            s.has_cable.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;

    let mut w = csv::Writer::from_path(out_dir.join("plan_vectors.csv"))?;
    let mut header = vec!["isp".to_string(), "city".to_string()];
    header.extend((1..=30).map(|k| format!("bin_{k}")));
    w.write_record(&header)?;
    for (key, vector) in &report.plan_vectors {
        let (isp, city) = key.split_once('|').expect("key format");
        let mut row = vec![isp.to_string(), city.to_string()];
        row.extend(vector.weights.iter().map(|w| w.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;

    let mut w = csv::Writer::from_path(out_dir.join("l1_matrix.csv"))?;
    w.write_record(["isp", "city_a", "city_b", "l1"])?;
    for row in &report.l1_rows {
        w.write_record([
            row.isp.clone(),
            row.city_a.clone(),
            row.city_b.clone(),
            row.l1.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;

    let mut w = csv::Writer::from_path(out_dir.join("morans_i.csv"))?;
    w.write_record(["isp", "city", "n_block_groups", "morans_i", "note"])?;
    for row in &report.moran_rows {
        w.write_record([
            row.isp.clone(),
            row.city.clone(),
            row.n_block_groups.to_string(),
            row.morans_i.map(|v| v.to_string()).unwrap_or_default(),
            row.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;

    let mut w = csv::Writer::from_path(out_dir.join("morans_median.csv"))?;
    w.write_record(["isp", "median_morans_i"])?;
    for (isp, m) in &report.moran_medians {
        w.write_record([isp.clone(), m.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;

    let mut w = csv::Writer::from_path(out_dir.join("competition.csv"))?;
    w.write_record([
        "city",
        "isp",
        "comparison",
        "n_monopoly",
        "n_duopoly",
        "median_monopoly",
        "median_duopoly",
        "d_monopoly_below",
        "p_monopoly_below",
        "d_monopoly_above",
        "p_monopoly_above",
        "decision",
    ])?;
    for row in &report.competition_rows {
        for (label, side) in [("cable_dsl", &row.report.dsl), ("cable_fiber", &row.report.fiber)] {
            match side {
                Ok(cmp) => {
                    let decision = if cmp.duopoly_greater() {
                        "duopoly_greater"
                    } else if cmp.no_effect() {
                        "no_effect"
                    } else {
                        "monopoly_greater"
                    };
                    w.write_record([
                        row.city.clone(),
                        row.isp.clone(),
                        label.to_string(),
                        cmp.n_monopoly.to_string(),
                        cmp.n_duopoly.to_string(),
                        cmp.median_monopoly.to_string(),
                        cmp.median_duopoly.to_string(),
                        cmp.monopoly_below.d_statistic.to_string(),
                        cmp.monopoly_below.p_value.to_string(),
                        cmp.monopoly_above.d_statistic.to_string(),
                        cmp.monopoly_above.p_value.to_string(),
                        decision.to_string(),
                    ])?;
                }
                Err(e) => {
                    w.write_record([
                        row.city.clone(),
                        row.isp.clone(),
                        label.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        e.clone(),
                    ])?;
                }
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;

    let mut w = csv::Writer::from_path(out_dir.join("income_gap.csv"))?;
    w.write_record(["city", "isp", "pct_low", "pct_high", "gap_points", "n_low", "n_high", "note"])?;
    for row in &report.income_rows {
        match &row.gap {
            Ok(gap) => w.write_record([
                row.city.clone(),
                row.isp.clone(),
                gap.pct_low.to_string(),
                gap.pct_high.to_string(),
                gap.gap.to_string(),
                gap.n_low.to_string(),
                gap.n_high.to_string(),
                String::new(),
            ])?,
            Err(e) => w.write_record([
                row.city.clone(),
                row.isp.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ])?,
        }
    }
    w.flush().map_err(csv::Error::from)?;

    // Plot-ready ECDF of block-group carriage values per (ISP, city).
    let mut w = csv::Writer::from_path(out_dir.join("cv_cdf.csv"))?;
    w.write_record(["isp", "city", "cv", "ecdf"])?;
    let mut by_pair: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for (city, s) in &report.summaries {
        by_pair
            .entry((s.isp.clone(), city.clone()))
            .or_default()
            .push(s.median_best_cv);
    }
    for ((isp, city), mut cvs) in by_pair {
        cvs.sort_by(|a, b| a.total_cmp(b));
        let n = cvs.len() as f64;
        for (i, cv) in cvs.iter().enumerate() {
            w.write_record([
                isp.clone(),
                city.clone(),
                cv.to_string(),
                ((i + 1) as f64 / n).to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;

    // Choropleth-ready per-block-group export.
    let mut w = csv::Writer::from_path(out_dir.join("map_export.csv"))?;
    w.write_record(["geoid", "city", "isp", "median_best_cv", "has_fiber"])?;
    for (city, s) in &report.summaries {
        w.write_record([
            s.geoid.clone(),
            city.clone(),
            s.isp.clone(),
            s.median_best_cv.to_string(),
            s.has_fiber.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;

    let report_path = out_dir.join("report.txt");
    let mut out = std::fs::File::create(&report_path).map_err(|source| AnalyzeError::Output {
        path: report_path.display().to_string(),
        source,
    })?;
    write_text_report(report, &mut out).map_err(|source| AnalyzeError::Output {
        path: report_path.display().to_string(),
        source,
    })?;
    Ok(())
}

fn write_text_report(report: &AnalyzeReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "== 1. Dataset overview ==")?;
    writeln!(
        out,
        "records: {}  hits: {}  cities: {}  isps: {}",
        report.n_records,
        report.n_hits,
        report.cities.join(", "),
        report.isps.join(", ")
    )?;

    writeln!(out, "\n== 2. Carriage values per block group ==")?;
    let mut by_pair: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for (city, s) in &report.summaries {
        by_pair
            .entry((s.isp.clone(), city.clone()))
            .or_default()
            .push(s.median_best_cv);
    }
    for ((isp, city), cvs) in &by_pair {
        let med = median(cvs).unwrap_or(f64::NAN);
        writeln!(
            out,
            "{isp} in {city}: {} block groups, median block-group cv {med:.2} Mbps/$",
            cvs.len()
        )?;
    }

    writeln!(out, "\n== 3. Plan vectors and inter-city L1 distances ==")?;
    for row in &report.l1_rows {
        writeln!(
            out,
            "{}: {} vs {} -> L1 {:.3}",
            row.isp, row.city_a, row.city_b, row.l1
        )?;
    }
    if report.l1_rows.is_empty() {
        writeln!(out, "(needs an ISP present in at least two cities)")?;
    }

    writeln!(out, "\n== 4. Spatial autocorrelation (Moran's I) ==")?;
    for row in &report.moran_rows {
        match row.morans_i {
            Some(i) => writeln!(
                out,
                "{} in {}: I = {:.4} over {} block groups",
                row.isp, row.city, i, row.n_block_groups
            )?,
            None => writeln!(
                out,
                "{} in {}: n/a ({})",
                row.isp,
                row.city,
                row.note.as_deref().unwrap_or("")
            )?,
        }
    }
    for (isp, m) in &report.moran_medians {
        writeln!(out, "median across cities: {isp} -> {m:.4}")?;
    }

    writeln!(out, "\n== 5. Competition effect on cable carriage values ==")?;
    for row in &report.competition_rows {
        writeln!(out, "{} in {}:", row.isp, row.city)?;
        for (label, side) in [("cable-dsl", &row.report.dsl), ("cable-fiber", &row.report.fiber)] {
            match side {
                Ok(cmp) => {
                    let decision = if cmp.duopoly_greater() {
                        "reject H0: duopoly carriage values are greater"
                    } else if cmp.no_effect() {
                        "fail to reject H0"
                    } else {
                        "reject H0: monopoly carriage values are greater"
                    };
                    writeln!(
                        out,
                        "  {label}: monopoly median {:.2} (n={}), duopoly median {:.2} (n={}), D(below)={:.3} p={:.4}, D(above)={:.3} p={:.4} -> {decision}",
                        cmp.median_monopoly,
                        cmp.n_monopoly,
                        cmp.median_duopoly,
                        cmp.n_duopoly,
                        cmp.monopoly_below.d_statistic,
                        cmp.monopoly_below.p_value,
                        cmp.monopoly_above.d_statistic,
                        cmp.monopoly_above.p_value,
                    )?;
                }
                Err(e) => writeln!(out, "  {label}: {e}")?,
            }
        }
    }

    writeln!(out, "\n== 6. Income-stratified fiber deployment ==")?;
    for row in &report.income_rows {
        match &row.gap {
            Ok(gap) => writeln!(
                out,
                "{} in {}: fiber reaches {:.1}% of low-income and {:.1}% of high-income block groups (gap {:.1} points)",
                row.isp, row.city, gap.pct_low, gap.pct_high, gap.gap
            )?,
            Err(e) => writeln!(out, "{} in {}: n/a ({e})", row.isp, row.city)?,
        }
    }

    if !report.section_errors.is_empty() {
        writeln!(out, "\n== Notes ==")?;
        for e in &report.section_errors {
            writeln!(out, "- {e}")?;
        }
    }
    Ok(())
}
