//! Carriage-value metrics and the 30-bin plan-vector representation.
//!
//! The carriage value of a plan is the download Mbps delivered per dollar of
//! monthly price; the best carriage value at an address summarizes the deal a
//! household can get, and block groups aggregate addresses by the median of
//! those best values. City-level plan mixes are compared as 30-dimensional
//! ceil-discretized distributions under the L1 norm.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{Plan, Technology};

pub const PLAN_VECTOR_BINS: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{field} must be positive, got {value}")]
    NonPositiveInput { field: &'static str, value: f64 },
    #[error("plan list is empty")]
    EmptyPlans,
    #[error("input list is empty")]
    EmptyInput,
    #[error("mean is zero; coefficient of variation undefined")]
    ZeroMean,
    #[error("carriage value {0} outside (0, 30]")]
    OutOfRange(f64),
}

/// Mbps carried per dollar of monthly price.
pub fn carriage_value(download_mbps: f64, monthly_price_usd: f64) -> Result<f64, MetricsError> {
    if download_mbps.is_nan() || download_mbps <= 0.0 {
        return Err(MetricsError::NonPositiveInput {
            field: "download_mbps",
            value: download_mbps,
        });
    }
    if monthly_price_usd.is_nan() || monthly_price_usd <= 0.0 {
        return Err(MetricsError::NonPositiveInput {
            field: "monthly_price_usd",
            value: monthly_price_usd,
        });
    }
    Ok(download_mbps / monthly_price_usd)
}

/// Best (maximum) carriage value across the plans offered at one address.
pub fn best_cv(plans: &[Plan]) -> Result<f64, MetricsError> {
    if plans.is_empty() {
        return Err(MetricsError::EmptyPlans);
    }
    let mut best = f64::NEG_INFINITY;
    for p in plans {
        let cv = carriage_value(p.download_mbps, p.monthly_price_usd)?;
        best = best.max(cv);
    }
    Ok(best)
}

/// A block group's carriage value: the median of the best carriage values
/// across its queried addresses.
pub fn block_group_median_cv(best_cvs: &[f64]) -> Result<f64, MetricsError> {
    median(best_cvs)
}

/// Statistical median; even counts take the mean of the two central order
/// statistics.
pub fn median(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

/// Population standard deviation over mean.
pub fn coefficient_of_variation(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(MetricsError::ZeroMean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

/// 30-bin distribution of block-group carriage values for one (ISP, city).
///
/// Bin `k` (1-based) holds values `v` with `ceil(v) == k`; weights are the
/// fraction of block groups falling in each bin and sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanVector {
    pub weights: Vec<f64>,
}

/// Builds the plan vector from block-group median carriage values.
pub fn plan_vector(bg_median_cvs: &[f64]) -> Result<PlanVector, MetricsError> {
    if bg_median_cvs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut counts = [0usize; PLAN_VECTOR_BINS];
    for &cv in bg_median_cvs {
        if cv.is_nan() || cv <= 0.0 || cv > PLAN_VECTOR_BINS as f64 || !cv.is_finite() {
            return Err(MetricsError::OutOfRange(cv));
        }
        let bin = cv.ceil() as usize; // integer cv k maps to bin k
        counts[bin - 1] += 1;
    }
    let n = bg_median_cvs.len() as f64;
    Ok(PlanVector {
        weights: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}

/// L1 distance between two plan vectors; ranges over [0, 2].
pub fn l1_distance(a: &PlanVector, b: &PlanVector) -> f64 {
    a.weights
        .iter()
        .zip(&b.weights)
        .map(|(x, y)| (x - y).abs())
        .sum()
}

/// Per (ISP, block group) aggregate over the queried addresses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGroupSummary {
    pub geoid: String,
    pub isp: String,
    pub median_best_cv: f64,
    pub cov: f64,
    pub n_addresses: usize,
    pub has_fiber: bool,
    pub has_dsl: bool,
    pub has_cable: bool,
}

impl BlockGroupSummary {
    /// Aggregates one block group from per-address plan lists. Addresses with
    /// no plans contribute no carriage value but are not counted either;
    /// callers pass only addresses where plans were extracted.
    pub fn from_plans(
        geoid: &str,
        isp: &str,
        per_address_plans: &[Vec<Plan>],
    ) -> Result<Self, MetricsError> {
        if per_address_plans.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let best_cvs = per_address_plans
            .iter()
            .map(|plans| best_cv(plans))
            .collect::<Result<Vec<_>, _>>()?;
        let mut has_fiber = false;
        let mut has_dsl = false;
        let mut has_cable = false;
        for plan in per_address_plans.iter().flatten() {
            match plan.technology {
                Technology::Fiber => has_fiber = true,
                Technology::Dsl => has_dsl = true,
                Technology::Cable => has_cable = true,
            }
        }
        Ok(Self {
            geoid: geoid.to_string(),
            isp: isp.to_string(),
            median_best_cv: median(&best_cvs)?,
            cov: coefficient_of_variation(&best_cvs)?,
            n_addresses: per_address_plans.len(),
            has_fiber,
            has_dsl,
            has_cable,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::Technology;
    use proptest::prelude::*;

    fn plan(down: f64, price: f64) -> Plan {
        Plan::new(down, down / 2.0, price, Technology::Fiber)
    }

    #[test]
    fn carriage_value_examples() {
        assert_eq!(carriage_value(100.0, 50.0).unwrap(), 2.0);
        assert_eq!(carriage_value(1000.0, 80.0).unwrap(), 12.5);
        assert_eq!(carriage_value(50.0, 50.0).unwrap(), 1.0);
    }

    #[test]
    fn carriage_value_rejects_nonpositive() {
        assert!(carriage_value(0.0, 50.0).is_err());
        assert!(carriage_value(100.0, 0.0).is_err());
        assert!(carriage_value(-5.0, 50.0).is_err());
    }

    #[test]
    fn best_cv_picks_maximum() {
        let plans = vec![plan(1000.0, 80.0), plan(500.0, 65.0), plan(300.0, 55.0)];
        assert_eq!(best_cv(&plans).unwrap(), 12.5);
        assert_eq!(best_cv(&[plan(30.0, 20.0)]).unwrap(), 1.5);
        // Equal carriage values collapse to the same maximum.
        assert_eq!(best_cv(&[plan(100.0, 50.0), plan(200.0, 100.0)]).unwrap(), 2.0);
        assert!(matches!(best_cv(&[]), Err(MetricsError::EmptyPlans)));
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(block_group_median_cv(&[10.5, 11.3, 14.6]).unwrap(), 11.3);
        assert_eq!(block_group_median_cv(&[10.0, 20.0]).unwrap(), 15.0);
        assert!(block_group_median_cv(&[]).is_err());
    }

    #[test]
    fn median_matches_sort_oracle_on_planted_sample() {
        // 31 values from a planted mixture, unordered.
        let mut vals: Vec<f64> = (0..31).map(|i| ((i * 17) % 31) as f64 / 3.0 + 1.0).collect();
        let got = median(&vals).unwrap();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, vals[15]);
    }

    #[test]
    fn cov_examples() {
        assert_eq!(coefficient_of_variation(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        let cov = coefficient_of_variation(&[2.0, 4.0]).unwrap();
        assert!((cov - 1.0 / 3.0).abs() < 1e-12, "got {cov}");
        // Mixed DSL + fiber block group.
        let cov = coefficient_of_variation(&[0.5, 0.5, 12.5, 12.5]).unwrap();
        assert!((cov - 0.923).abs() < 5e-4, "got {cov}");
    }

    #[test]
    fn plan_vector_examples() {
        let v = plan_vector(&[10.5, 11.3, 14.63]).unwrap();
        for (bin, expect) in [(11, 1.0 / 3.0), (12, 1.0 / 3.0), (15, 1.0 / 3.0)] {
            assert!((v.weights[bin - 1] - expect).abs() < 1e-12);
        }
        let point = plan_vector(&[2.0, 2.0]).unwrap();
        assert_eq!(point.weights[1], 1.0); // ceil(2.0) == 2
        assert!(matches!(plan_vector(&[31.0]), Err(MetricsError::OutOfRange(_))));
        assert!(matches!(plan_vector(&[0.0]), Err(MetricsError::OutOfRange(_))));
    }

    #[test]
    fn l1_examples() {
        let a = plan_vector(&[3.0; 4]).unwrap();
        let b = plan_vector(&[20.0; 4]).unwrap();
        assert_eq!(l1_distance(&a, &a), 0.0);
        assert_eq!(l1_distance(&a, &b), 2.0);
    }

    #[test]
    fn summary_flags_and_aggregates() {
        let per_addr = vec![
            vec![Plan::new(100.0, 10.0, 50.0, Technology::Cable)],
            vec![
                Plan::new(10.0, 1.0, 50.0, Technology::Dsl),
                Plan::new(1000.0, 1000.0, 80.0, Technology::Fiber),
            ],
            vec![Plan::new(200.0, 20.0, 50.0, Technology::Cable)],
        ];
        let s = BlockGroupSummary::from_plans("220710017001", "att", &per_addr).unwrap();
        assert_eq!(s.n_addresses, 3);
        assert!(s.has_fiber && s.has_dsl && s.has_cable);
        // best cvs: 2.0, 12.5, 4.0 -> median 4.0
        assert_eq!(s.median_best_cv, 4.0);
        assert!(s.cov > 0.0);
    }

    proptest! {
        #[test]
        fn carriage_value_scale_consistent(d in 0.1f64..2000.0, p in 1.0f64..200.0, k in 0.1f64..50.0) {
            let a = carriage_value(d, p).unwrap();
            let b = carriage_value(k * d, k * p).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn best_cv_dominates_members(downs in proptest::collection::vec(1.0f64..1500.0, 1..8)) {
            let plans: Vec<Plan> = downs.iter().map(|&d| plan(d, 50.0)).collect();
            let best = best_cv(&plans).unwrap();
            for p in &plans {
                prop_assert!(best >= carriage_value(p.download_mbps, p.monthly_price_usd).unwrap());
            }
        }

        #[test]
        fn plan_vector_sums_to_one_and_is_permutation_invariant(
            cvs in proptest::collection::vec(0.01f64..30.0, 1..60),
        ) {
            let v = plan_vector(&cvs).unwrap();
            let total: f64 = v.weights.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            let mut rev = cvs.clone();
            rev.reverse();
            prop_assert_eq!(v, plan_vector(&rev).unwrap());
        }

        #[test]
        fn l1_is_a_metric(
            xs in proptest::collection::vec(0.01f64..30.0, 1..40),
            ys in proptest::collection::vec(0.01f64..30.0, 1..40),
            zs in proptest::collection::vec(0.01f64..30.0, 1..40),
        ) {
            let a = plan_vector(&xs).unwrap();
            let b = plan_vector(&ys).unwrap();
            let c = plan_vector(&zs).unwrap();
            prop_assert!((l1_distance(&a, &b) - l1_distance(&b, &a)).abs() < 1e-12);
            prop_assert!(l1_distance(&a, &c) <= l1_distance(&a, &b) + l1_distance(&b, &c) + 1e-12);
            if a == b {
                prop_assert_eq!(l1_distance(&a, &b), 0.0);
            }
        }
    }
}
