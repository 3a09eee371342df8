//! Income-stratified fiber-deployment gap.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::metrics::median;

use super::StatsError;

/// A city's block groups split at the median household income.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeGroups {
    /// Strictly below the city median.
    pub low: BTreeSet<String>,
    /// At or above the city median (ties break upward).
    pub high: BTreeSet<String>,
    pub city_median_income: f64,
}

/// Splits block groups with known income at the city's median income.
pub fn split_by_median_income(
    incomes: &BTreeMap<String, f64>,
) -> Result<IncomeGroups, StatsError> {
    if incomes.is_empty() {
        return Err(StatsError::NoIncomeData);
    }
    let values: Vec<f64> = incomes.values().copied().collect();
    let city_median = median(&values).expect("nonempty");
    let mut low = BTreeSet::new();
    let mut high = BTreeSet::new();
    for (geoid, &income) in incomes {
        if income < city_median {
            low.insert(geoid.clone());
        } else {
            high.insert(geoid.clone());
        }
    }
    if low.is_empty() || high.is_empty() {
        return Err(StatsError::SingleGroupOnly);
    }
    Ok(IncomeGroups {
        low,
        high,
        city_median_income: city_median,
    })
}

/// Fiber deployment percentage per income group, and their difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberGap {
    pub pct_low: f64,
    pub pct_high: f64,
    /// Percentage points: `pct_high - pct_low`.
    pub gap: f64,
    pub n_low: usize,
    pub n_high: usize,
}

/// Computes the fiber-deployment percentage for each income group and the
/// high-minus-low gap in percentage points. Block groups absent from
/// `has_fiber` count as not fibered.
pub fn income_fiber_gap(
    groups: &IncomeGroups,
    has_fiber: &BTreeMap<String, bool>,
) -> Result<FiberGap, StatsError> {
    if groups.low.is_empty() || groups.high.is_empty() {
        return Err(StatsError::SingleGroupOnly);
    }
    let pct = |set: &BTreeSet<String>| {
        let fibered = set
            .iter()
            .filter(|g| has_fiber.get(*g).copied().unwrap_or(false))
            .count();
        100.0 * fibered as f64 / set.len() as f64
    };
    let pct_low = pct(&groups.low);
    let pct_high = pct(&groups.high);
    Ok(FiberGap {
        pct_low,
        pct_high,
        gap: pct_high - pct_low,
        n_low: groups.low.len(),
        n_high: groups.high.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn incomes(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(g, v)| (g.to_string(), *v)).collect()
    }

    #[test]
    fn split_puts_ties_in_high() {
        let groups = split_by_median_income(&incomes(&[
            ("a", 30_000.0),
            ("b", 50_000.0),
            ("c", 70_000.0),
        ]))
        .unwrap();
        assert!(groups.low.contains("a"));
        // b equals the median and goes high.
        assert!(groups.high.contains("b"));
        assert!(groups.high.contains("c"));
    }

    #[test]
    fn degenerate_splits_are_errors() {
        assert_eq!(
            split_by_median_income(&BTreeMap::new()),
            Err(StatsError::NoIncomeData)
        );
        // All equal incomes: everything lands in high.
        assert_eq!(
            split_by_median_income(&incomes(&[("a", 40_000.0), ("b", 40_000.0)])),
            Err(StatsError::SingleGroupOnly)
        );
    }

    fn groups_of(nl: usize, nh: usize) -> IncomeGroups {
        IncomeGroups {
            low: (0..nl).map(|i| format!("low{i}")).collect(),
            high: (0..nh).map(|i| format!("high{i}")).collect(),
            city_median_income: 50_000.0,
        }
    }

    fn fiber_flags(groups: &IncomeGroups, low_fibered: usize, high_fibered: usize) -> BTreeMap<String, bool> {
        let mut flags = BTreeMap::new();
        for (i, g) in groups.low.iter().enumerate() {
            flags.insert(g.clone(), i < low_fibered);
        }
        for (i, g) in groups.high.iter().enumerate() {
            flags.insert(g.clone(), i < high_fibered);
        }
        flags
    }

    #[test]
    fn planted_city_gap() {
        let groups = groups_of(100, 100);
        let gap = income_fiber_gap(&groups, &fiber_flags(&groups, 41, 57)).unwrap();
        assert_eq!(gap.pct_low, 41.0);
        assert_eq!(gap.pct_high, 57.0);
        assert_eq!(gap.gap, 16.0);
    }

    #[test]
    fn saturation_and_extreme_separation() {
        let groups = groups_of(10, 10);
        let gap = income_fiber_gap(&groups, &fiber_flags(&groups, 10, 10)).unwrap();
        assert_eq!(gap.gap, 0.0);
        let gap = income_fiber_gap(&groups, &fiber_flags(&groups, 0, 10)).unwrap();
        assert_eq!(gap.gap, 100.0);
    }
}
