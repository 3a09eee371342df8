//! One-tailed two-sample Kolmogorov-Smirnov test.

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Significance threshold used throughout the analysis.
pub const REJECT_ALPHA: f64 = 0.05;

const MIN_SAMPLE: usize = 5;

/// Directional alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Sample A is stochastically below sample B: D = sup_x (F_a(x) - F_b(x)).
    ABelowB,
    /// Sample A is stochastically above sample B: D = sup_x (F_b(x) - F_a(x)).
    AAboveB,
}

impl std::fmt::Display for Alternative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ABelowB => write!(f, "a_below_b"),
            Self::AAboveB => write!(f, "a_above_b"),
        }
    }
}

/// Outcome of a one-tailed two-sample KS test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_statistic: f64,
    pub p_value: f64,
    pub direction: Alternative,
    pub n1: usize,
    pub n2: usize,
}

impl KsResult {
    pub fn rejects(&self) -> bool {
        self.p_value < REJECT_ALPHA
    }
}

/// Runs the one-tailed two-sample KS test.
///
/// D is the supremum of the signed ECDF difference over the pooled support;
/// the p-value uses the asymptotic one-sided formula
/// `p = exp(-2 D^2 n1 n2 / (n1 + n2))`.
pub fn ks_one_tailed(
    sample_a: &[f64],
    sample_b: &[f64],
    alternative: Alternative,
) -> Result<KsResult, StatsError> {
    let (n1, n2) = (sample_a.len(), sample_b.len());
    if n1 < MIN_SAMPLE || n2 < MIN_SAMPLE {
        return Err(StatsError::SampleTooSmall {
            n1,
            n2,
            min: MIN_SAMPLE,
        });
    }

    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));

    // Sweep the merged pooled support; at each distinct value x, compare
    // F_a(x) = |{a <= x}| / n1 against F_b(x).
    let mut d = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n1 || j < n2 {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < n1 && a[i] <= x {
            i += 1;
        }
        while j < n2 && b[j] <= x {
            j += 1;
        }
        let fa = i as f64 / n1 as f64;
        let fb = j as f64 / n2 as f64;
        let diff = match alternative {
            Alternative::ABelowB => fa - fb,
            Alternative::AAboveB => fb - fa,
        };
        if diff > d {
            d = diff;
        }
    }

    let m = n1 as f64 * n2 as f64 / (n1 + n2) as f64;
    let p_value = (-2.0 * d * d * m).exp().min(1.0);
    Ok(KsResult {
        d_statistic: d,
        p_value,
        direction: alternative,
        n1,
        n2,
    })
}
