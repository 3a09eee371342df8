//! Competition-mode classification and the monopoly-vs-duopoly effect tests.
//!
//! A cable ISP in a block group operates in one of three modes depending on
//! the competing technology present: cable monopoly, cable-dsl duopoly, or
//! cable-fiber duopoly. The effect analysis partitions the cable ISP's
//! block-group carriage values by mode and runs both one-tailed KS tests per
//! duopoly type so a shift in either direction is detected.

use serde::{Deserialize, Serialize};

use crate::metrics::{median, BlockGroupSummary};

use super::ks::{ks_one_tailed, Alternative, KsResult};
use super::StatsError;

/// Operating mode of the cable ISP in a block group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetitionMode {
    CableMonopoly,
    CableDslDuopoly,
    CableFiberDuopoly,
}

impl std::fmt::Display for CompetitionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::CableMonopoly => write!(f, "cable_monopoly"),
            Self::CableDslDuopoly => write!(f, "cable_dsl_duopoly"),
            Self::CableFiberDuopoly => write!(f, "cable_fiber_duopoly"),
        }
    }
}

/// Classifies one block group from the per-ISP summaries observed there.
///
/// Exactly one cable ISP must be present. A competitor offering any fiber
/// plan makes it a cable-fiber duopoly; a competitor with only DSL plans a
/// cable-dsl duopoly; no competitor a cable monopoly.
pub fn classify_competition(
    summaries: &[BlockGroupSummary],
) -> Result<CompetitionMode, StatsError> {
    let cable: Vec<&BlockGroupSummary> = summaries.iter().filter(|s| s.has_cable).collect();
    match cable.len() {
        0 => return Err(StatsError::NoCablePresence),
        1 => {}
        _ => {
            return Err(StatsError::MultipleCableISPs(
                cable.iter().map(|s| s.isp.clone()).collect(),
            ))
        }
    }
    let competitors: Vec<&BlockGroupSummary> =
        summaries.iter().filter(|s| !s.has_cable).collect();
    if competitors.is_empty() {
        Ok(CompetitionMode::CableMonopoly)
    } else if competitors.iter().any(|s| s.has_fiber) {
        Ok(CompetitionMode::CableFiberDuopoly)
    } else {
        Ok(CompetitionMode::CableDslDuopoly)
    }
}

/// The cable ISP's block-group median carriage values, split by mode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeSamples {
    pub monopoly: Vec<f64>,
    pub dsl_duopoly: Vec<f64>,
    pub fiber_duopoly: Vec<f64>,
}

impl ModeSamples {
    pub fn push(&mut self, mode: CompetitionMode, cv: f64) {
        match mode {
            CompetitionMode::CableMonopoly => self.monopoly.push(cv),
            CompetitionMode::CableDslDuopoly => self.dsl_duopoly.push(cv),
            CompetitionMode::CableFiberDuopoly => self.fiber_duopoly.push(cv),
        }
    }
}

/// Both one-tailed tests for one duopoly type against the monopoly sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuopolyComparison {
    pub duopoly_mode: CompetitionMode,
    pub n_monopoly: usize,
    pub n_duopoly: usize,
    pub median_monopoly: f64,
    pub median_duopoly: f64,
    /// Alternative: monopoly carriage values sit below the duopoly's.
    pub monopoly_below: KsResult,
    /// Alternative: monopoly carriage values sit above the duopoly's.
    pub monopoly_above: KsResult,
}

impl DuopolyComparison {
    /// True when competition lifted the duopoly distribution and only that
    /// direction is significant.
    pub fn duopoly_greater(&self) -> bool {
        self.monopoly_below.rejects() && !self.monopoly_above.rejects()
    }

    pub fn no_effect(&self) -> bool {
        !self.monopoly_below.rejects() && !self.monopoly_above.rejects()
    }
}

/// Per-city competition analysis for one cable ISP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionReport {
    pub median_monopoly: Option<f64>,
    pub dsl: Result<DuopolyComparison, String>,
    pub fiber: Result<DuopolyComparison, String>,
}

const MIN_MODE_COVERAGE: usize = 5;

/// Runs both one-tailed tests per duopoly type. A duopoly type without the
/// required coverage is reported as an error string while the other pair is
/// still produced.
pub fn competition_effect(samples: &ModeSamples) -> CompetitionReport {
    let compare = |duopoly: &[f64], mode: CompetitionMode, label: &'static str| {
        if samples.monopoly.len() < MIN_MODE_COVERAGE || duopoly.len() < MIN_MODE_COVERAGE {
            return Err(StatsError::InsufficientModeCoverage {
                mode: label,
                n_monopoly: samples.monopoly.len(),
                n_duopoly: duopoly.len(),
            }
            .to_string());
        }
        let monopoly_below =
            ks_one_tailed(&samples.monopoly, duopoly, Alternative::ABelowB).expect("sizes checked");
        let monopoly_above =
            ks_one_tailed(&samples.monopoly, duopoly, Alternative::AAboveB).expect("sizes checked");
        Ok(DuopolyComparison {
            duopoly_mode: mode,
            n_monopoly: samples.monopoly.len(),
            n_duopoly: duopoly.len(),
            median_monopoly: median(&samples.monopoly).expect("nonempty"),
            median_duopoly: median(duopoly).expect("nonempty"),
            monopoly_below,
            monopoly_above,
        })
    };
    CompetitionReport {
        median_monopoly: median(&samples.monopoly).ok(),
        dsl: compare(
            &samples.dsl_duopoly,
            CompetitionMode::CableDslDuopoly,
            "cable_dsl_duopoly",
        ),
        fiber: compare(
            &samples.fiber_duopoly,
            CompetitionMode::CableFiberDuopoly,
            "cable_fiber_duopoly",
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(isp: &str, fiber: bool, dsl: bool, cable: bool) -> BlockGroupSummary {
        BlockGroupSummary {
            geoid: "220710017001".into(),
            isp: isp.into(),
            median_best_cv: 10.0,
            cov: 0.1,
            n_addresses: 30,
            has_fiber: fiber,
            has_dsl: dsl,
            has_cable: cable,
        }
    }

    #[test]
    fn cable_alone_is_monopoly() {
        let got = classify_competition(&[summary("cox", false, false, true)]).unwrap();
        assert_eq!(got, CompetitionMode::CableMonopoly);
    }

    #[test]
    fn dsl_only_competitor_is_dsl_duopoly() {
        let got = classify_competition(&[
            summary("cox", false, false, true),
            summary("att", false, true, false),
        ])
        .unwrap();
        assert_eq!(got, CompetitionMode::CableDslDuopoly);
    }

    #[test]
    fn fiber_competitor_is_fiber_duopoly() {
        // Competitor offers both DSL and fiber plans; fiber wins.
        let got = classify_competition(&[
            summary("cox", false, false, true),
            summary("att", true, true, false),
        ])
        .unwrap();
        assert_eq!(got, CompetitionMode::CableFiberDuopoly);
    }

    #[test]
    fn missing_or_duplicate_cable_is_an_error() {
        assert_eq!(
            classify_competition(&[summary("att", true, false, false)]),
            Err(StatsError::NoCablePresence)
        );
        let err = classify_competition(&[
            summary("cox", false, false, true),
            summary("spectrum", false, false, true),
        ])
        .unwrap_err();
        assert!(matches!(err, StatsError::MultipleCableISPs(_)));
    }

    #[test]
    fn effect_reports_partial_coverage() {
        let mut samples = ModeSamples::default();
        for i in 0..10 {
            samples.push(CompetitionMode::CableMonopoly, 10.0 + i as f64 * 0.1);
            samples.push(CompetitionMode::CableDslDuopoly, 10.0 + i as f64 * 0.1);
        }
        // Only 2 fiber-duopoly block groups: below coverage.
        samples.push(CompetitionMode::CableFiberDuopoly, 14.0);
        samples.push(CompetitionMode::CableFiberDuopoly, 15.0);
        let report = competition_effect(&samples);
        let dsl = report.dsl.expect("dsl pair has coverage");
        assert!(dsl.no_effect());
        assert_eq!(dsl.median_monopoly, dsl.median_duopoly);
        assert!(report.fiber.is_err());
    }

    #[test]
    fn planted_uplift_rejects_in_one_direction_only() {
        let mut samples = ModeSamples::default();
        for i in 0..40 {
            samples.push(CompetitionMode::CableMonopoly, 10.0 + (i % 7) as f64 * 0.2);
            samples.push(CompetitionMode::CableFiberDuopoly, 14.0 + (i % 7) as f64 * 0.2);
        }
        let report = competition_effect(&samples);
        let fiber = report.fiber.expect("coverage");
        assert!(fiber.duopoly_greater());
        assert!(fiber.monopoly_below.rejects());
        assert!(!fiber.monopoly_above.rejects());
    }
}
