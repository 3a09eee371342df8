//! Spatial autocorrelation, distribution tests, and market-structure analytics.

mod competition;
mod income;
mod ks;
mod moran;

pub use competition::{
    classify_competition, competition_effect, CompetitionMode, CompetitionReport, DuopolyComparison,
    ModeSamples,
};
pub use income::{income_fiber_gap, split_by_median_income, FiberGap, IncomeGroups};
pub use ks::{ks_one_tailed, Alternative, KsResult, REJECT_ALPHA};
pub use moran::morans_i;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("all values are equal; Moran's I variance is degenerate")]
    DegenerateVariance,
    #[error("need at least 2 non-isolated nodes with values, got {0}")]
    TooFewNodes(usize),
    #[error("sample too small: n1={n1}, n2={n2} (need at least {min} each)")]
    SampleTooSmall { n1: usize, n2: usize, min: usize },
    #[error("no cable ISP present in block group")]
    NoCablePresence,
    #[error("multiple cable ISPs present in block group: {0:?}")]
    MultipleCableISPs(Vec<String>),
    #[error("insufficient coverage for {mode}: monopoly n={n_monopoly}, duopoly n={n_duopoly}")]
    InsufficientModeCoverage {
        mode: &'static str,
        n_monopoly: usize,
        n_duopoly: usize,
    },
    #[error("no income data for any block group")]
    NoIncomeData,
    #[error("all block groups fall in a single income group")]
    SingleGroupOnly,
}
