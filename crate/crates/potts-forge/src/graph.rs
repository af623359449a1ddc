//! Finite undirected simple graphs with stable vertex and edge indexing.
//!
//! Vertices are 1-based in every external format and 0-based internally.
//! Edge k's endpoints are available as `edges()[k] = (a, b)` with `a < b`;
//! the edge list is sorted lexicographically so edge indices are stable
//! across runs and serialization round-trips.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

/// Undirected simple graph: `n_vertices` vertices, canonicalized edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    n_vertices: usize,
    /// 0-based, each pair `(a, b)` with `a < b`, sorted lexicographically.
    edges: Vec<(usize, usize)>,
}

/// On-disk form: 1-based vertex indices.
#[derive(Debug, Serialize, Deserialize)]
struct GraphJson {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = GraphError;
    fn try_from(raw: GraphJson) -> Result<Self, GraphError> {
        Graph::new(raw.n_vertices, &raw.edges)
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> GraphJson {
        GraphJson {
            n_vertices: g.n_vertices,
            edges: g.edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect(),
        }
    }
}

impl Graph {
    /// Builds a graph from 1-based endpoint pairs. Pairs are canonicalized
    /// to `(min, max)` and sorted; self-loops, duplicates, and out-of-range
    /// indices are rejected.
    pub fn new(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Graph, GraphError> {
        if n_vertices < 1 {
            return Err(GraphError::InvalidGraph("need at least one vertex".into()));
        }
        let mut canon = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(GraphError::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if a < 1 || b < 1 || a > n_vertices || b > n_vertices {
                return Err(GraphError::InvalidGraph(format!(
                    "edge ({a},{b}) out of range 1..={n_vertices}"
                )));
            }
            canon.push((a.min(b) - 1, a.max(b) - 1));
        }
        canon.sort_unstable();
        if canon.windows(2).any(|w| w[0] == w[1]) {
            return Err(GraphError::InvalidGraph("duplicate edge".into()));
        }
        Ok(Graph { n_vertices, edges: canon })
    }

    /// The standard Petersen graph: outer 5-cycle on vertices 1-5, inner
    /// pentagram on 6-10, spokes (i, i+5).
    pub fn petersen() -> Graph {
        let mut edges = Vec::with_capacity(15);
        for i in 1..=5usize {
            edges.push((i, i % 5 + 1)); // outer cycle
            edges.push((i, i + 5)); // spoke
            edges.push((i + 5, (i + 1) % 5 + 6)); // pentagram: i+5 to ((i+2-1) mod 5)+6
        }
        Graph::new(10, &edges).expect("Petersen construction is valid")
    }

    /// Complete graph on `n` vertices.
    pub fn complete(n: usize) -> Result<Graph, GraphError> {
        let mut edges = Vec::new();
        for a in 1..=n {
            for b in a + 1..=n {
                edges.push((a, b));
            }
        }
        Graph::new(n, &edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// 0-based endpoint pairs, each `(a, b)` with `a < b`, lexicographically
    /// sorted. The position in this slice is the edge index `k`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == vertex || b == vertex).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_and_sorts() {
        let g = Graph::new(3, &[(3, 1), (2, 1), (2, 3)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn rejects_self_loop_duplicate_and_range() {
        assert!(Graph::new(2, &[(1, 1)]).is_err());
        assert!(Graph::new(3, &[(1, 2), (2, 1)]).is_err());
        assert!(Graph::new(2, &[(1, 3)]).is_err());
        assert!(Graph::new(0, &[]).is_err());
    }

    #[test]
    fn complete_sizes() {
        assert_eq!(Graph::complete(3).unwrap().n_edges(), 3);
        assert_eq!(Graph::complete(1).unwrap().n_edges(), 0);
        assert_eq!(Graph::complete(4).unwrap().n_edges(), 6);
    }

    #[test]
    fn petersen_shape() {
        let g = Graph::petersen();
        assert_eq!(g.n_vertices(), 10);
        assert_eq!(g.n_edges(), 15);
        for v in 0..10 {
            assert_eq!(g.degree(v), 3, "vertex {v}");
        }
    }
}
