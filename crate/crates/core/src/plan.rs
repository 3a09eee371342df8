//! Broadband plan records and their sanity window.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("{field} {value} outside sanity window [{lo}, {hi}]")]
    OutOfWindow {
        field: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

/// Access technology of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technology {
    Dsl,
    Fiber,
    Cable,
}

impl Technology {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dsl" => Some(Self::Dsl),
            "fiber" => Some(Self::Fiber),
            "cable" => Some(Self::Cable),
            _ => None,
        }
    }
}

impl std::fmt::Display for Technology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Dsl => write!(f, "dsl"),
            Self::Fiber => write!(f, "fiber"),
            Self::Cable => write!(f, "cable"),
        }
    }
}

/// One offered broadband plan at an address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub download_mbps: f64,
    pub upload_mbps: f64,
    pub monthly_price_usd: f64,
    pub technology: Technology,
}

impl Plan {
    pub fn new(download_mbps: f64, upload_mbps: f64, monthly_price_usd: f64, technology: Technology) -> Self {
        Self {
            download_mbps,
            upload_mbps,
            monthly_price_usd,
            technology,
        }
    }

    /// Positive speeds and price, and download/price within the window.
    pub fn validate(&self, window: &SanityWindow) -> Result<(), PlanError> {
        for (field, value) in [
            ("download_mbps", self.download_mbps),
            ("upload_mbps", self.upload_mbps),
            ("monthly_price_usd", self.monthly_price_usd),
        ] {
            if value.is_nan() || value <= 0.0 || !value.is_finite() {
                return Err(PlanError::NonPositive { field, value });
            }
        }
        window.check("download_mbps", self.download_mbps, window.download_mbps)?;
        window.check("monthly_price_usd", self.monthly_price_usd, window.price_usd)?;
        Ok(())
    }
}

/// Accepted value ranges for extracted plans. Defaults cover the ranges
/// observed across major US wireline ISPs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SanityWindow {
    pub download_mbps: (f64, f64),
    pub price_usd: (f64, f64),
}

impl Default for SanityWindow {
    fn default() -> Self {
        Self {
            download_mbps: (0.2, 2000.0),
            price_usd: (20.0, 120.0),
        }
    }
}

impl SanityWindow {
    fn check(&self, field: &'static str, value: f64, (lo, hi): (f64, f64)) -> Result<(), PlanError> {
        if value < lo || value > hi {
            return Err(PlanError::OutOfWindow { field, value, lo, hi });
        }
        Ok(())
    }
}
