//! Block-group neighborhood graphs for spatial statistics.
//!
//! Graphs are symmetric and self-loop-free. They come either from an explicit
//! edge list or from polygon geometry under queen contiguity (polygons are
//! neighbors when they share at least one boundary vertex, which covers both
//! shared edges and shared corners on well-noded layers).

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdjacencyError {
    #[error("edge list declared directed-strict but ({0}, {1}) has no reverse edge")]
    AsymmetryAfterClose(String, String),
    #[error("unknown node {0}")]
    UnknownNode(String),
}

/// Rings of (x, y) vertices describing one feature's polygons.
pub type PolygonRings = Vec<Vec<(f64, f64)>>;

/// How to interpret an edge list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListMode {
    /// Add the reverse of every edge (default).
    Symmetrize,
    /// Require the file to already contain both directions.
    Strict,
}

/// Symmetric, self-loop-free neighborhood graph over GEOIDs.
#[derive(Debug, Clone)]
pub struct AdjacencyGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    neighbors: Vec<Vec<usize>>,
    self_loops_dropped: usize,
}

impl AdjacencyGraph {
    pub fn from_edges<I, S>(edges: I, mode: EdgeListMode) -> Result<Self, AdjacencyError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut nodes: Vec<String> = Vec::new();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut self_loops_dropped = 0usize;

        let intern = |name: String, nodes: &mut Vec<String>, index: &mut HashMap<String, usize>| {
            *index.entry(name.clone()).or_insert_with(|| {
                nodes.push(name);
                nodes.len() - 1
            })
        };

        for (a, b) in edges {
            let (a, b) = (a.into(), b.into());
            if a == b {
                self_loops_dropped += 1;
                // Register the node so isolated self-loop nodes still exist.
                intern(a, &mut nodes, &mut index);
                continue;
            }
            let ia = intern(a, &mut nodes, &mut index);
            let ib = intern(b, &mut nodes, &mut index);
            pairs.push((ia, ib));
        }

        let mut present: std::collections::HashSet<(usize, usize)> = pairs.iter().copied().collect();
        if mode == EdgeListMode::Strict {
            for &(a, b) in &pairs {
                if !present.contains(&(b, a)) {
                    return Err(AdjacencyError::AsymmetryAfterClose(
                        nodes[a].clone(),
                        nodes[b].clone(),
                    ));
                }
            }
        } else {
            for &(a, b) in &pairs.clone() {
                if present.insert((b, a)) {
                    pairs.push((b, a));
                }
            }
        }

        let mut neighbors = vec![Vec::new(); nodes.len()];
        let mut seen: std::collections::HashSet<(usize, usize)> = Default::default();
        for (a, b) in pairs {
            if seen.insert((a, b)) {
                neighbors[a].push(b);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        Ok(Self {
            nodes,
            index,
            neighbors,
            self_loops_dropped,
        })
    }

    /// Queen contiguity from polygon rings: two features are neighbors when
    /// any of their (quantized) vertices coincide.
    pub fn queen_from_polygons(features: &[(String, PolygonRings)]) -> Self {
        // Quantize coordinates so exactly-shared vertices bucket together.
        const SCALE: f64 = 1e7;
        let mut vertex_owners: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for (fi, (_, rings)) in features.iter().enumerate() {
            for ring in rings {
                for &(x, y) in ring {
                    let key = ((x * SCALE).round() as i64, (y * SCALE).round() as i64);
                    let owners = vertex_owners.entry(key).or_default();
                    if owners.last() != Some(&fi) {
                        owners.push(fi);
                    }
                }
            }
        }
        let mut edges: Vec<(String, String)> = Vec::new();
        for owners in vertex_owners.values() {
            for i in 0..owners.len() {
                for j in (i + 1)..owners.len() {
                    edges.push((features[owners[i]].0.clone(), features[owners[j]].0.clone()));
                }
            }
        }
        // Features with no shared vertex still need to appear as nodes.
        let mut graph = Self::from_edges(edges, EdgeListMode::Symmetrize)
            .expect("symmetrize mode cannot fail");
        for (name, _) in features {
            if !graph.index.contains_key(name) {
                graph.index.insert(name.clone(), graph.nodes.len());
                graph.nodes.push(name.clone());
                graph.neighbors.push(Vec::new());
            }
        }
        graph
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn contains(&self, geoid: &str) -> bool {
        self.index.contains_key(geoid)
    }

    pub fn node_index(&self, geoid: &str) -> Option<usize> {
        self.index.get(geoid).copied()
    }

    pub fn neighbor_indices(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn neighbors(&self, geoid: &str) -> Option<Vec<&str>> {
        let &i = self.index.get(geoid)?;
        Some(self.neighbors[i].iter().map(|&j| self.nodes[j].as_str()).collect())
    }

    pub fn isolated_count(&self) -> usize {
        self.neighbors.iter().filter(|n| n.is_empty()).count()
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    /// Asserts symmetry and the absence of self-loops; loaders call this after
    /// construction.
    pub fn check_invariants(&self) -> Result<(), AdjacencyError> {
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                if i == j {
                    return Err(AdjacencyError::AsymmetryAfterClose(
                        self.nodes[i].clone(),
                        self.nodes[i].clone(),
                    ));
                }
                if !self.neighbors[j].contains(&i) {
                    return Err(AdjacencyError::AsymmetryAfterClose(
                        self.nodes[i].clone(),
                        self.nodes[j].clone(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Restricts the graph to the given GEOIDs (missing ids ignored).
    pub fn subgraph<'a, I: IntoIterator<Item = &'a str>>(&self, keep: I) -> AdjacencyGraph {
        let keep: std::collections::HashSet<&str> = keep.into_iter().collect();
        let mut edges = Vec::new();
        let mut solo: Vec<String> = Vec::new();
        for (i, name) in self.nodes.iter().enumerate() {
            if !keep.contains(name.as_str()) {
                continue;
            }
            let mut any = false;
            for &j in &self.neighbors[i] {
                if keep.contains(self.nodes[j].as_str()) {
                    edges.push((name.clone(), self.nodes[j].clone()));
                    any = true;
                }
            }
            if !any {
                solo.push(name.clone());
            }
        }
        let mut g = Self::from_edges(edges, EdgeListMode::Symmetrize).expect("symmetrize");
        for name in solo {
            if !g.index.contains_key(&name) {
                g.index.insert(name.clone(), g.nodes.len());
                g.nodes.push(name);
                g.neighbors.push(Vec::new());
            }
        }
        g
    }
}
