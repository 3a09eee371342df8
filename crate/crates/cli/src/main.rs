use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use planprobe_cli::config::CrawlConfig;
use planprobe_cli::scale::{scale_experiment, ScaleInputs};
use planprobe_cli::{analyze, release, run_crawl};
use planprobe_core::ingest;
use planprobe_engine::adapter::AdapterSpec;
use planprobe_sim::fleet::{build_fleet, FleetOptions};
use planprobe_sim::scenario::load_scenario_dir;

/// Broadband-plan auditing toolkit: drive simulated ISP availability portals,
/// build plan datasets, and compute affordability analytics.
#[derive(Parser)]
#[command(name = "planprobe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crawl the configured portals over the sampled addresses.
    Crawl {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the portal simulator fleet until interrupted.
    Simulate {
        /// Directory of scenario .toml files.
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First port; endpoints bind consecutively from here.
        #[arg(long, default_value_t = 4100)]
        port_base: u16,
        /// Expose the test-only GET /truth endpoint.
        #[arg(long, default_value_t = false)]
        allow_truth: bool,
    },
    /// Sample addresses per census block group.
    Sample {
        #[arg(long)]
        addresses: PathBuf,
        #[arg(long, default_value_t = ingest::DEFAULT_SAMPLE_RATE)]
        rate: f64,
        #[arg(long, default_value_t = ingest::DEFAULT_SAMPLE_FLOOR)]
        floor: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV of chosen addresses (a sampling-plan JSON is written
        /// alongside).
        #[arg(long, default_value = "targets.csv")]
        out: PathBuf,
    },
    /// Crawl the same targets at several worker counts and test
    /// response-time equality.
    ScaleTest {
        #[arg(long)]
        scenarios: PathBuf,
        /// Directory of adapter .toml files matching the scenario ISPs.
        #[arg(long)]
        adapters: PathBuf,
        #[arg(long)]
        addresses: PathBuf,
        /// Comma-separated worker counts.
        #[arg(long, default_value = "1,50,100,200", value_delimiter = ',')]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full analysis pipeline over a crawled dataset.
    Analyze {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        income: PathBuf,
        #[arg(long)]
        adjacency: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Produce the privacy-preserving public dataset.
    Release {
        #[arg(long)]
        dataset: PathBuf,
        /// Environment variable holding the salt (never stored in output).
        #[arg(long)]
        salt_env: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).await {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

async fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Crawl { config } => {
            let config = CrawlConfig::load(&config)?;
            let outcome = run_crawl(&config).await?;
            let summary = &outcome.summary;
            println!(
                "crawl finished in {} ms: {} records written, {} resumed-skipped, {} requests, max {} sessions in flight",
                summary.wall_ms,
                summary.records_written,
                summary.resumed_skipped,
                summary.total_requests,
                summary.max_inflight_sessions,
            );
            for (isp, s) in &summary.per_isp {
                println!(
                    "  {isp}: n={} hit_rate={:.3} answered_rate={:.3} (hits={} misses={} unserviceable={}) wall ms p50/p90/p99 = {}/{}/{}",
                    s.n, s.hit_rate, s.answered_rate, s.hits, s.misses, s.unserviceable,
                    s.wall_ms_p50, s.wall_ms_p90, s.wall_ms_p99,
                );
            }
            Ok(if summary.partial_failures > 0 {
                println!("{} sessions missed; recorded as miss records", summary.partial_failures);
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Simulate {
            scenarios,
            seed,
            port_base,
            allow_truth,
        } => {
            let scenarios = load_scenario_dir(&scenarios)?;
            let ports = (0..scenarios.len())
                .map(|i| port_base + i as u16)
                .collect();
            let fleet = build_fleet(
                scenarios,
                seed,
                FleetOptions {
                    expose_truth: allow_truth,
                    ports,
                },
            )
            .await?;
            for endpoint in fleet.endpoints() {
                println!("{} -> {}", endpoint.isp_name, endpoint.url);
            }
            println!("fleet running; press Ctrl-C to stop");
            tokio::signal::ctrl_c().await?;
            fleet.shutdown().await;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample {
            addresses,
            rate,
            floor,
            seed,
            out,
        } => {
            let report = ingest::load_addresses(&addresses)?;
            for rejection in &report.rejected {
                eprintln!("rejected row {}: {}", rejection.line, rejection.reason);
            }
            let (plan, chosen) = ingest::build_sample_plan(&report.accepted, rate, floor, seed)?;
            let mut w = csv::Writer::from_path(&out)?;
            w.write_record(ingest::ADDRESS_HEADER)?;
            for a in &chosen {
                w.write_record([
                    a.address_id.as_str(),
                    a.street.as_str(),
                    a.unit.as_deref().unwrap_or(""),
                    a.city.as_str(),
                    a.state.as_str(),
                    a.zip.as_str(),
                    a.block_group_id.as_str(),
                ])?;
            }
            w.flush()?;
            let plan_path = out.with_extension("plan.json");
            std::fs::write(&plan_path, serde_json::to_string_pretty(&plan)?)?;
            println!(
                "sampled {} of {} addresses across {} block groups -> {} (plan: {})",
                chosen.len(),
                report.accepted.len(),
                plan.groups.len(),
                out.display(),
                plan_path.display(),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::ScaleTest {
            scenarios,
            adapters,
            addresses,
            workers,
            seed,
            out,
        } => {
            let scenarios = load_scenario_dir(&scenarios)?;
            let mut specs = Vec::new();
            let mut paths: Vec<_> = std::fs::read_dir(&adapters)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "toml"))
                .collect();
            paths.sort();
            for path in paths {
                specs.push(AdapterSpec::load(&path)?);
            }
            let targets = ingest::load_addresses(&addresses)?.accepted;
            let scratch = tempfile::tempdir()?;
            let report = scale_experiment(
                &ScaleInputs {
                    scenarios,
                    adapters: specs,
                    targets,
                    worker_counts: workers,
                    seed,
                },
                scratch.path(),
            )
            .await?;
            for leg in &report.legs {
                println!("workers={}: {} requests sampled", leg.workers, leg.n_requests);
            }
            for pair in &report.pairwise {
                println!(
                    "workers {} vs {}: D(below)={:.4} p={:.4}, D(above)={:.4} p={:.4} -> {}",
                    pair.workers_a,
                    pair.workers_b,
                    pair.a_below_b.d_statistic,
                    pair.a_below_b.p_value,
                    pair.a_above_b.d_statistic,
                    pair.a_above_b.p_value,
                    if pair.reject { "REJECT (distributions differ)" } else { "fail to reject" },
                );
            }
            if report.pairwise.is_empty() {
                println!("single worker count supplied; no pairwise comparisons");
            }
            if let Some(out) = out {
                std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
                println!("report written to {}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze {
            dataset,
            income,
            adjacency,
            out,
        } => {
            let report = analyze(&dataset, &income, &adjacency, &out)?;
            println!(
                "analysis of {} records ({} hits) across {} cities written to {}",
                report.n_records,
                report.n_hits,
                report.cities.len(),
                out.display(),
            );
            Ok(if report.section_errors.is_empty() {
                ExitCode::SUCCESS
            } else {
                for e in &report.section_errors {
                    eprintln!("note: {e}");
                }
                ExitCode::from(2)
            })
        }
        Command::Release {
            dataset,
            salt_env,
            out,
        } => {
            let salt = std::env::var(&salt_env)
                .map_err(|_| anyhow::anyhow!("salt env var {salt_env} is not set"))?;
            let out = out.unwrap_or_else(|| dataset.with_extension("released.jsonl"));
            let summary = release(&dataset, salt.as_bytes(), &out)?;
            println!("released {} records to {}", summary.records, out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
