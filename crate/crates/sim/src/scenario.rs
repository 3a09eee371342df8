//! Scenario documents: ground truth, noise, latency, and capacity.

use std::collections::BTreeMap;
use std::path::Path;

use planprobe_core::address::AbbreviationTable;
use planprobe_core::plan::{Plan, SanityWindow, Technology};
use planprobe_core::seed::{derive_seed, unit_fraction};
use planprobe_engine::template::TemplateKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("port unavailable: {0}")]
    PortUnavailable(#[source] std::io::Error),
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("unknown ISP {0}")]
    UnknownIsp(String),
    #[error("unknown address {0}")]
    UnknownAddress(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
}

/// Probability of routing a session through each interstitial. The draws are
/// exclusive, so the probabilities must sum to at most 1.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct NoiseProfile {
    #[serde(default)]
    pub p_incorrect_address: f64,
    #[serde(default)]
    pub p_mdu: f64,
    #[serde(default)]
    pub p_existing_customer: f64,
    #[serde(default)]
    pub p_blocked: f64,
}

impl NoiseProfile {
    fn validate(&self) -> Result<(), SimError> {
        let ps = [
            self.p_incorrect_address,
            self.p_mdu,
            self.p_existing_customer,
            self.p_blocked,
        ];
        for p in ps {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidScenario(format!(
                    "noise probability {p} outside [0, 1]"
                )));
            }
        }
        let total: f64 = ps.iter().sum();
        if total > 1.0 {
            return Err(SimError::InvalidScenario(format!(
                "noise probabilities sum to {total} > 1"
            )));
        }
        Ok(())
    }
}

/// Service-time distribution for one template.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum LatencySpec {
    Fixed { ms: u64 },
    Uniform { lo_ms: u64, hi_ms: u64 },
}

impl LatencySpec {
    /// Deterministic draw from a derived seed.
    pub fn sample(&self, seed: u64) -> u64 {
        match *self {
            LatencySpec::Fixed { ms } => ms,
            LatencySpec::Uniform { lo_ms, hi_ms } => lo_ms + seed % (hi_ms - lo_ms + 1),
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if let LatencySpec::Uniform { lo_ms, hi_ms } = self {
            if lo_ms > hi_ms {
                return Err(SimError::InvalidScenario(format!(
                    "uniform latency lo {lo_ms} > hi {hi_ms}"
                )));
            }
        }
        Ok(())
    }
}

const DEFAULT_SERVICE_MS: u64 = 2;

/// Authoritative outcome for an address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TruthOutcome {
    Plans { plans: Vec<Plan> },
    Unserviceable,
}

/// One weighted plan-set in the profile rule.
#[derive(Debug, Clone, Deserialize)]
pub struct ProfileChoice {
    pub weight: f64,
    pub plans: Vec<PlanSpec>,
}

/// Assigns ground truth to addresses without an explicit entry: a weighted
/// plan-set choice plus an unserviceable share, both hashed from the
/// canonical address.
#[derive(Debug, Clone, Deserialize)]
pub struct ProfileRule {
    #[serde(default)]
    pub p_unserviceable: f64,
    pub choices: Vec<ProfileChoice>,
}

/// Plan literal in scenario files.
#[derive(Debug, Clone, Deserialize)]
pub struct PlanSpec {
    pub down: f64,
    pub up: f64,
    pub price: f64,
    pub tech: String,
}

impl PlanSpec {
    fn to_plan(&self) -> Result<Plan, SimError> {
        let tech = Technology::parse(&self.tech)
            .ok_or_else(|| SimError::InvalidScenario(format!("unknown technology {}", self.tech)))?;
        let plan = Plan::new(self.down, self.up, self.price, tech);
        plan.validate(&SanityWindow::default())
            .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        Ok(plan)
    }
}

#[derive(Debug, Clone, Deserialize)]
struct TruthEntryFile {
    street: String,
    zip: String,
    #[serde(default)]
    plans: Option<Vec<PlanSpec>>,
    #[serde(default)]
    unserviceable: bool,
}

#[derive(Debug, Deserialize)]
struct ScenarioFile {
    isp_name: String,
    #[serde(default)]
    capacity: Option<usize>,
    #[serde(default)]
    noise: NoiseProfile,
    #[serde(default)]
    latency: BTreeMap<TemplateKind, LatencySpec>,
    #[serde(default)]
    canonical_suffixes: Option<Vec<(String, String)>>,
    #[serde(default)]
    truth: Vec<TruthEntryFile>,
    #[serde(default)]
    profiles: Option<ProfileRule>,
}

/// A fully validated portal scenario.
#[derive(Debug, Clone)]
pub struct SimScenario {
    pub isp_name: String,
    /// Maximum concurrently serviced requests; `None` is unbounded.
    pub capacity: Option<usize>,
    pub noise: NoiseProfile,
    pub latency: BTreeMap<TemplateKind, LatencySpec>,
    pub canon: AbbreviationTable,
    /// Explicit truth entries keyed by "CANONICAL STREET|zip".
    truth: BTreeMap<String, TruthOutcome>,
    pub profiles: Option<ProfileRule>,
}

impl SimScenario {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            SimError::Parse { source, .. } => SimError::Parse {
                path: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|source| SimError::Parse {
            path: "<inline>".to_string(),
            source,
        })?;
        Self::from_file(file)
    }

    fn from_file(file: ScenarioFile) -> Result<Self, SimError> {
        if file.isp_name.trim().is_empty() {
            return Err(SimError::InvalidScenario("isp_name is empty".into()));
        }
        file.noise.validate()?;
        for spec in file.latency.values() {
            spec.validate()?;
        }
        let canon = match &file.canonical_suffixes {
            None => AbbreviationTable::shipped(),
            Some(pairs) => {
                let text: String = pairs
                    .iter()
                    .map(|(a, b)| format!("{a} {b}\n"))
                    .collect();
                AbbreviationTable::parse(&text)
                    .map_err(|e| SimError::InvalidScenario(e.to_string()))?
            }
        };
        let mut truth = BTreeMap::new();
        for entry in &file.truth {
            let outcome = match (&entry.plans, entry.unserviceable) {
                (Some(specs), false) => {
                    if specs.is_empty() {
                        return Err(SimError::InvalidScenario(format!(
                            "truth entry {} has an empty plan list",
                            entry.street
                        )));
                    }
                    TruthOutcome::Plans {
                        plans: specs.iter().map(|s| s.to_plan()).collect::<Result<_, _>>()?,
                    }
                }
                (None, true) => TruthOutcome::Unserviceable,
                _ => {
                    return Err(SimError::InvalidScenario(format!(
                        "truth entry {} must set exactly one of plans / unserviceable",
                        entry.street
                    )))
                }
            };
            let key = truth_key(&canonical_street(&entry.street, &canon), &entry.zip);
            truth.insert(key, outcome);
        }
        if let Some(profiles) = &file.profiles {
            if profiles.choices.is_empty() {
                return Err(SimError::InvalidScenario("profile rule has no choices".into()));
            }
            if !(0.0..=1.0).contains(&profiles.p_unserviceable) {
                return Err(SimError::InvalidScenario(format!(
                    "p_unserviceable {} outside [0, 1]",
                    profiles.p_unserviceable
                )));
            }
            for choice in &profiles.choices {
                if choice.weight.is_nan() || choice.weight <= 0.0 {
                    return Err(SimError::InvalidScenario(format!(
                        "profile weight {} must be positive",
                        choice.weight
                    )));
                }
                if choice.plans.is_empty() {
                    return Err(SimError::InvalidScenario("profile choice has no plans".into()));
                }
                for spec in &choice.plans {
                    spec.to_plan()?;
                }
            }
        }
        if truth.is_empty() && file.profiles.is_none() {
            return Err(SimError::InvalidScenario(
                "scenario needs truth entries or a profile rule".into(),
            ));
        }
        Ok(Self {
            isp_name: file.isp_name,
            capacity: file.capacity.filter(|&c| c > 0),
            noise: file.noise,
            latency: file.latency,
            canon,
            truth,
            profiles: file.profiles,
        })
    }

    /// Canonical (expanded, uppercase) street form under this portal's canon.
    pub fn canonical_street(&self, street: &str) -> String {
        canonical_street(street, &self.canon)
    }

    /// Ground truth for an address. Explicit entries win; otherwise the
    /// profile rule assigns an outcome from the canonical-address hash.
    pub fn ground_truth(&self, seed: u64, street: &str, zip: &str) -> Option<TruthOutcome> {
        let canonical = self.canonical_street(street);
        let key = truth_key(&canonical, zip);
        if let Some(outcome) = self.truth.get(&key) {
            return Some(outcome.clone());
        }
        let profiles = self.profiles.as_ref()?;
        let serv = unit_fraction(derive_seed(seed, &[&self.isp_name, "serviceable", &key]));
        if serv < profiles.p_unserviceable {
            return Some(TruthOutcome::Unserviceable);
        }
        let total: f64 = profiles.choices.iter().map(|c| c.weight).sum();
        let mut pick = unit_fraction(derive_seed(seed, &[&self.isp_name, "profile", &key])) * total;
        for choice in &profiles.choices {
            pick -= choice.weight;
            if pick < 0.0 {
                let plans = choice
                    .plans
                    .iter()
                    .map(|s| s.to_plan().expect("validated at load"))
                    .collect();
                return Some(TruthOutcome::Plans { plans });
            }
        }
        // Floating-point edge: fall back to the last choice.
        let last = profiles.choices.last().expect("validated nonempty");
        Some(TruthOutcome::Plans {
            plans: last.plans.iter().map(|s| s.to_plan().expect("validated")).collect(),
        })
    }

    /// Service time for the `step_index`-th page of a session, keyed by the
    /// canonical address so it is stable across runs and worker counts.
    pub fn service_ms(&self, seed: u64, key: &str, step_index: u32, kind: TemplateKind) -> u64 {
        let spec = self
            .latency
            .get(&kind)
            .copied()
            .unwrap_or(LatencySpec::Fixed { ms: DEFAULT_SERVICE_MS });
        let draw = derive_seed(
            seed,
            &[&self.isp_name, "latency", key, &step_index.to_string(), &kind.to_string()],
        );
        spec.sample(draw)
    }
}

pub(crate) fn canonical_street(street: &str, canon: &AbbreviationTable) -> String {
    let cleaned: String = street
        .to_uppercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' { c } else { ' ' })
        .collect();
    cleaned
        .split_whitespace()
        .map(|t| canon.expand(t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Uppercase, punctuation-stripped form without suffix expansion; differs
/// from the canonical form exactly when the input uses abbreviations.
pub(crate) fn raw_street(street: &str) -> String {
    let cleaned: String = street
        .to_uppercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub(crate) fn truth_key(canonical_street: &str, zip: &str) -> String {
    format!("{canonical_street}|{zip}")
}

/// Loads every `.toml` scenario in a directory, sorted by file name.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<SimScenario>, SimError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|source| SimError::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    paths.iter().map(|p| SimScenario::load(p)).collect()
}
