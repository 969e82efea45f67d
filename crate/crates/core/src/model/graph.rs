use std::fmt;

use super::{Bounds, InvariantViolation, Model, ModelState};
use crate::actor::Action;
use crate::tsg::{self, CoverGraph, TsgError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphEdge {
    pub src: usize,
    pub dst: usize,
    pub action: Action,
}

/// Explored state space. State 0 is the initial state (index 1 in files);
/// states are numbered in BFS discovery order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionGraph {
    pub model: String,
    pub bounds: Bounds,
    pub states: Vec<ModelState>,
    pub edges: Vec<GraphEdge>,
}

/// Summary record: |V|, |E|, diameter and sink count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    pub states: usize,
    pub edges: usize,
    pub diameter: usize,
    pub sinks: usize,
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "states={} edges={} diameter={} sinks={}",
            self.states, self.edges, self.diameter, self.sinks
        )
    }
}

impl TransitionGraph {
    pub fn initial(&self) -> &ModelState {
        &self.states[0]
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.states.len()];
        for e in &self.edges {
            deg[e.src] += 1;
        }
        deg
    }

    /// States without outgoing edges, ascending.
    pub fn sinks(&self) -> Vec<usize> {
        self.out_degrees()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(v, _)| v)
            .collect()
    }

    pub fn cover_graph(&self) -> CoverGraph {
        CoverGraph::new(
            self.states.len(),
            self.edges.iter().map(|e| (e.src, e.dst)).collect(),
        )
        .expect("edge endpoints index the state table")
    }

    pub fn stats(&self) -> Result<GraphStats, TsgError> {
        Ok(GraphStats {
            states: self.states.len(),
            edges: self.edges.len(),
            diameter: tsg::diameter(&self.cover_graph())?,
            sinks: self.sinks().len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QuiescentReport {
    pub sinks: usize,
    /// Sinks in which every bound is exhausted; only these are checked.
    pub checked: usize,
    pub violations: Vec<InvariantViolation>,
}

impl QuiescentReport {
    /// Passing without any state to check proves nothing.
    pub fn is_vacuous(&self) -> bool {
        self.checked == 0
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Bounded progress check: in every sink where the model reports its bounds
/// exhausted, every progress condition must hold.
pub fn check_quiescent_progress<M: Model + ?Sized>(
    model: &M,
    graph: &TransitionGraph,
) -> QuiescentReport {
    let sinks = graph.sinks();
    let mut report = QuiescentReport {
        sinks: sinks.len(),
        ..QuiescentReport::default()
    };
    for v in sinks {
        let Some(problems) = model.quiescent_progress(&graph.states[v]) else {
            continue;
        };
        report.checked += 1;
        for p in problems {
            report.violations.push(InvariantViolation {
                state: Some(v),
                invariant: "QuiescentProgress".into(),
                detail: p,
            });
        }
    }
    report
}
