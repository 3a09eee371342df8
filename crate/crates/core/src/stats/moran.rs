//! Global Moran's I spatial autocorrelation over a contiguity graph.

use std::collections::HashMap;

use crate::adjacency::AdjacencyGraph;

use super::StatsError;

/// Moran's I with row-standardized weights.
///
/// `I = (N / W) * sum_ij w_ij (x_i - mean)(x_j - mean) / sum_i (x_i - mean)^2`
/// where rows of the weight matrix are normalized to sum to 1 and `W` is the
/// total weight. Nodes without a value are dropped; nodes with no valued
/// neighbor are excluded from `N`, the mean, and both sums.
pub fn morans_i(
    values: &HashMap<String, f64>,
    graph: &AdjacencyGraph,
) -> Result<f64, StatsError> {
    // Valued nodes, then the subset with at least one valued neighbor.
    let mut included: Vec<(usize, f64, Vec<usize>)> = Vec::new();
    let node_value: Vec<Option<f64>> = graph
        .nodes()
        .iter()
        .map(|n| values.get(n).copied())
        .collect();
    for i in 0..graph.len() {
        let Some(x) = node_value[i] else { continue };
        let neighbor_ids: Vec<usize> = graph
            .neighbor_indices(i)
            .iter()
            .copied()
            .filter(|&j| node_value[j].is_some())
            .collect();
        if !neighbor_ids.is_empty() {
            included.push((i, x, neighbor_ids));
        }
    }

    let n = included.len();
    if n < 2 {
        return Err(StatsError::TooFewNodes(n));
    }

    let mean = included.iter().map(|(_, x, _)| x).sum::<f64>() / n as f64;
    let denom: f64 = included.iter().map(|(_, x, _)| (x - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }

    // Row standardization: each included row's weights sum to 1, so the total
    // weight W equals the number of included nodes.
    let mut num = 0.0f64;
    let mut total_weight = 0.0f64;
    for (_, x, neighbors) in &included {
        let w = 1.0 / neighbors.len() as f64;
        for &j in neighbors {
            let y = node_value[j].expect("filtered to valued neighbors");
            num += w * (x - mean) * (y - mean);
            total_weight += w;
        }
    }

    Ok((n as f64 / total_weight) * (num / denom))
}
