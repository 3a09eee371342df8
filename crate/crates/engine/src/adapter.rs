//! Per-ISP adapter specs: template patterns, extraction rules, and timing.
//!
//! An adapter is loaded from a TOML document and fully describes how to drive
//! one portal: regex patterns that identify each page template, regexes with
//! named groups that pull plans, address suggestions, and unit lists out of
//! page bodies, the per-template wait budgets, and the step budget.

use std::collections::BTreeMap;
use std::path::Path;

use planprobe_core::plan::{Plan, SanityWindow, Technology};
use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

use crate::template::TemplateKind;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("cannot read adapter file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse adapter file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("isp_name is empty")]
    EmptyIspName,
    #[error("template {0} has no pattern")]
    MissingPattern(TemplateKind),
    #[error("invalid pattern for {kind}: {source}")]
    BadPattern {
        kind: String,
        #[source]
        source: regex::Error,
    },
    #[error("timing for {0} must be > 0")]
    NonPositiveTiming(TemplateKind),
    #[error("missing timing for {0}")]
    MissingTiming(TemplateKind),
    #[error("max_steps must be >= 3, got {0}")]
    MaxStepsTooSmall(usize),
    #[error("extract.{0} must define named groups {1}")]
    MissingCaptureGroups(&'static str, &'static str),
}

/// Wait budgets per template kind, in milliseconds.
pub type TimingTable = BTreeMap<TemplateKind, u64>;

/// Compiled per-ISP adapter.
#[derive(Debug, Clone)]
pub struct AdapterSpec {
    pub isp_name: String,
    pub max_steps: usize,
    pub timing_table_ms: TimingTable,
    pub sanity: SanityWindow,
    patterns: Vec<(TemplateKind, Regex)>,
    plan_pattern: Regex,
    suggestion_pattern: Regex,
    unit_pattern: Regex,
}

/// On-disk adapter document.
#[derive(Debug, Deserialize)]
struct AdapterFile {
    isp_name: String,
    #[serde(default = "default_max_steps")]
    max_steps: usize,
    patterns: BTreeMap<TemplateKind, Vec<String>>,
    timing_table_ms: BTreeMap<TemplateKind, u64>,
    extract: ExtractSection,
    #[serde(default)]
    sanity: Option<SanityFile>,
}

#[derive(Debug, Deserialize)]
struct ExtractSection {
    plan: String,
    suggestion: String,
    unit: String,
}

#[derive(Debug, Deserialize)]
struct SanityFile {
    download_mbps: (f64, f64),
    price_usd: (f64, f64),
}

fn default_max_steps() -> usize {
    8
}

impl AdapterSpec {
    pub fn load(path: &Path) -> Result<Self, AdapterError> {
        let text = std::fs::read_to_string(path).map_err(|source| AdapterError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            AdapterError::Parse { source, .. } => AdapterError::Parse {
                path: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, AdapterError> {
        let file: AdapterFile = toml::from_str(text).map_err(|source| AdapterError::Parse {
            path: "<inline>".to_string(),
            source,
        })?;
        Self::from_file(file)
    }

    fn from_file(file: AdapterFile) -> Result<Self, AdapterError> {
        if file.isp_name.trim().is_empty() {
            return Err(AdapterError::EmptyIspName);
        }
        if file.max_steps < 3 {
            return Err(AdapterError::MaxStepsTooSmall(file.max_steps));
        }
        let mut patterns = Vec::new();
        for kind in TemplateKind::PRIORITY {
            let raw = file.patterns.get(&kind).filter(|v| !v.is_empty());
            let Some(raw) = raw else {
                return Err(AdapterError::MissingPattern(kind));
            };
            for p in raw {
                let regex = Regex::new(p).map_err(|source| AdapterError::BadPattern {
                    kind: kind.to_string(),
                    source,
                })?;
                patterns.push((kind, regex));
            }
        }
        for kind in TemplateKind::PRIORITY {
            match file.timing_table_ms.get(&kind) {
                None => return Err(AdapterError::MissingTiming(kind)),
                Some(0) => return Err(AdapterError::NonPositiveTiming(kind)),
                Some(_) => {}
            }
        }
        let compile = |expr: &str, which: &'static str| {
            Regex::new(expr).map_err(|source| AdapterError::BadPattern {
                kind: format!("extract.{which}"),
                source,
            })
        };
        let plan_pattern = compile(&file.extract.plan, "plan")?;
        for group in ["down", "up", "price", "tech"] {
            if !plan_pattern.capture_names().flatten().any(|n| n == group) {
                return Err(AdapterError::MissingCaptureGroups("plan", "down, up, price, tech"));
            }
        }
        let suggestion_pattern = compile(&file.extract.suggestion, "suggestion")?;
        for group in ["text", "zip"] {
            if !suggestion_pattern.capture_names().flatten().any(|n| n == group) {
                return Err(AdapterError::MissingCaptureGroups("suggestion", "text, zip"));
            }
        }
        let unit_pattern = compile(&file.extract.unit, "unit")?;
        if !unit_pattern.capture_names().flatten().any(|n| n == "unit") {
            return Err(AdapterError::MissingCaptureGroups("unit", "unit"));
        }
        let sanity = file
            .sanity
            .map(|s| SanityWindow {
                download_mbps: s.download_mbps,
                price_usd: s.price_usd,
            })
            .unwrap_or_default();
        Ok(Self {
            isp_name: file.isp_name,
            max_steps: file.max_steps,
            timing_table_ms: file.timing_table_ms,
            sanity,
            patterns,
            plan_pattern,
            suggestion_pattern,
            unit_pattern,
        })
    }

    /// First kind in priority order with a matching pattern; `Unknown` if
    /// nothing matches.
    pub fn classify(&self, body: &str) -> TemplateKind {
        for kind in TemplateKind::PRIORITY {
            if self
                .patterns
                .iter()
                .any(|(k, re)| *k == kind && re.is_match(body))
            {
                return kind;
            }
        }
        TemplateKind::Unknown
    }

    /// Extracts plans from a plans page, dropping entries that fail the
    /// sanity window.
    pub fn parse_plans(&self, body: &str) -> Vec<Plan> {
        let mut plans = Vec::new();
        for caps in self.plan_pattern.captures_iter(body) {
            let field = |name: &str| caps.name(name).map(|m| m.as_str());
            let (Some(down), Some(up), Some(price), Some(tech)) =
                (field("down"), field("up"), field("price"), field("tech"))
            else {
                continue;
            };
            let (Ok(down), Ok(up), Ok(price)) =
                (down.parse::<f64>(), up.parse::<f64>(), price.parse::<f64>())
            else {
                continue;
            };
            let Some(tech) = Technology::parse(tech) else {
                continue;
            };
            let plan = Plan::new(down, up, price, tech);
            if plan.validate(&self.sanity).is_ok() {
                plans.push(plan);
            }
        }
        plans
    }

    /// Extracts the (text, zip) suggestion list from an incorrect-address
    /// page.
    pub fn parse_suggestions(&self, body: &str) -> (Vec<String>, Vec<String>) {
        let mut texts = Vec::new();
        let mut zips = Vec::new();
        for caps in self.suggestion_pattern.captures_iter(body) {
            if let (Some(text), Some(zip)) = (caps.name("text"), caps.name("zip")) {
                texts.push(text.as_str().trim().to_string());
                zips.push(zip.as_str().to_string());
            }
        }
        (texts, zips)
    }

    /// Extracts the unit labels from a multi-dwelling-unit page.
    pub fn parse_units(&self, body: &str) -> Vec<String> {
        self.unit_pattern
            .captures_iter(body)
            .filter_map(|caps| caps.name("unit").map(|m| m.as_str().trim().to_string()))
            .collect()
    }

    /// The per-template budget, used by `wait_for_ready`.
    pub fn wait_budget_ms(&self, kind: TemplateKind) -> Option<u64> {
        self.timing_table_ms.get(&kind).copied()
    }

    /// The kind carrying the largest budget. Sessions wait on this budget
    /// when the upcoming template cannot be known in advance, matching the
    /// pause-for-the-maximum-observed-time discipline.
    pub fn longest_wait_kind(&self) -> TemplateKind {
        self.timing_table_ms
            .iter()
            .max_by_key(|(_, &ms)| ms)
            .map(|(&k, _)| k)
            .unwrap_or(TemplateKind::PlansPage)
    }
}

#[cfg(test)]
pub(crate) fn test_adapter(isp: &str) -> AdapterSpec {
    let doc = format!(
        r#"
isp_name = "{isp}"
max_steps = 8

[patterns]
plans_page = ['class="plans-grid"']
incorrect_address = ['class="address-suggestions"']
multi_dwelling_unit = ['class="unit-picker"']
existing_customer = ['class="existing-customer"']
unserviceable = ['class="no-service"']
blocked = ['class="access-blocked"']

[timing_table_ms]
plans_page = 30000
incorrect_address = 5000
multi_dwelling_unit = 5000
existing_customer = 5000
unserviceable = 5000
blocked = 5000

[extract]
plan = '<li class="plan" data-down="(?P<down>[0-9.]+)" data-up="(?P<up>[0-9.]+)" data-price="(?P<price>[0-9.]+)" data-tech="(?P<tech>[a-z]+)">'
suggestion = '<li class="suggestion" data-zip="(?P<zip>[0-9]{{5}})">(?P<text>[^<]+)</li>'
unit = '<li class="unit">(?P<unit>[^<]+)</li>'
"#
    );
    AdapterSpec::parse(&doc).expect("test adapter parses")
}
