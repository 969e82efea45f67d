//! Test suite generation: root-anchored paths that cover every edge of a
//! single-source directed multigraph.
//!
//! Three generators are provided. [`baseline_suite`] emits one BFS-tree path
//! per edge. [`flow_suite`] and [`min_suite`] route a circulation with unit
//! lower bounds through the graph extended by backward edges `v -> s`, walk
//! an Euler circuit of the flow multigraph and cut it at the backward edges.
//! [`min_suite`] uses a minimum-cost circulation and so produces a suite of
//! minimum total length.

mod euler;
mod flow;
mod suite;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use euler::euler_circuit;
pub use flow::{max_flow, min_cost_circulation, solve_circulation, FlowEdge, FlowNetwork};
pub use suite::{baseline_suite, flow_suite, generate, min_suite, verify_coverage, CoverageReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TsgError {
    #[error("vertex {0} is unreachable from the source")]
    UnreachableVertex(usize),
    #[error("edge {edge} references vertex {vertex} outside 0..{n}")]
    VertexOutOfRange { edge: usize, vertex: usize, n: usize },
    #[error("circulation is infeasible: {0}")]
    Infeasible(String),
    #[error("vertex {0} has unequal in- and out-degree")]
    UnbalancedDegree(usize),
    #[error("edges with positive multiplicity are not connected to the start vertex")]
    Disconnected,
    #[error("path {path} is malformed: {reason}")]
    MalformedPath { path: usize, reason: String },
}

/// Directed multigraph with a single source. Vertices are `0..n`, edges are
/// identified by their position in [`CoverGraph::edges`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverGraph {
    n: usize,
    source: usize,
    edges: Vec<(usize, usize)>,
}

impl CoverGraph {
    /// Graph with source 0.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<CoverGraph, TsgError> {
        CoverGraph::with_source(n, 0, edges)
    }

    pub fn with_source(
        n: usize,
        source: usize,
        edges: Vec<(usize, usize)>,
    ) -> Result<CoverGraph, TsgError> {
        let n = n.max(1);
        if source >= n {
            return Err(TsgError::VertexOutOfRange { edge: usize::MAX, vertex: source, n });
        }
        for (id, &(u, v)) in edges.iter().enumerate() {
            for w in [u, v] {
                if w >= n {
                    return Err(TsgError::VertexOutOfRange { edge: id, vertex: w, n });
                }
            }
        }
        Ok(CoverGraph { n, source, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> (usize, usize) {
        self.edges[id]
    }

    /// Outgoing edge ids per vertex, ascending.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for (id, &(u, _)) in self.edges.iter().enumerate() {
            out[u].push(id);
        }
        out
    }

    /// BFS from the source scanning out-edges by ascending id. Returns the
    /// distance of every vertex and the edge that first discovered it.
    pub fn bfs_tree(&self) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        let out = self.out_edges();
        let mut dist = vec![None; self.n];
        let mut parent = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[self.source] = Some(0);
        queue.push_back(self.source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &e in &out[u] {
                let v = self.edges[e].1;
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    parent[v] = Some(e);
                    queue.push_back(v);
                }
            }
        }
        (dist, parent)
    }

    /// Fails with the first vertex not reachable from the source.
    pub fn check_reachable(&self) -> Result<(), TsgError> {
        let (dist, _) = self.bfs_tree();
        match dist.iter().position(Option::is_none) {
            Some(v) => Err(TsgError::UnreachableVertex(v)),
            None => Ok(()),
        }
    }
}

/// Largest BFS distance from the source to any vertex.
pub fn diameter(g: &CoverGraph) -> Result<usize, TsgError> {
    let (dist, _) = g.bfs_tree();
    let mut max = 0;
    for (v, d) in dist.iter().enumerate() {
        match d {
            Some(d) => max = max.max(*d),
            None => return Err(TsgError::UnreachableVertex(v)),
        }
    }
    Ok(max)
}

/// Edge ids walked from the source.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Path {
    pub edges: Vec<usize>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestSuite {
    pub paths: Vec<Path>,
}

impl TestSuite {
    pub fn total_length(&self) -> usize {
        self.paths.iter().map(Path::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    Baseline,
    Flow,
    #[default]
    Min,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Flow => "flow",
            Algorithm::Min => "min",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Algorithm::Baseline),
            "flow" => Ok(Algorithm::Flow),
            "min" => Ok(Algorithm::Min),
            other => Err(format!("unknown algorithm {other:?} (expected baseline, flow or min)")),
        }
    }
}
