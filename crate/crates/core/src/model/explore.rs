use std::collections::HashMap;
use std::fmt;
use std::thread;

use thiserror::Error;

use super::{canonical_key, GraphEdge, InvariantViolation, Model, ModelState, TransitionGraph};
use crate::actor::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    /// Exploration fails once more than this many states are discovered.
    pub state_cap: usize,
    /// Stop at the first violated invariant instead of collecting them all.
    pub stop_on_violation: bool,
    /// Worker threads used to expand each BFS level. Output is identical
    /// for every value.
    pub threads: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            state_cap: 10_000_000,
            stop_on_violation: true,
            threads: 1,
        }
    }
}

/// Shortest action sequence from the initial state to a violating state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub violation: InvariantViolation,
    pub init: ModelState,
    /// Zero-based state indices along the path, starting with 0.
    pub indices: Vec<usize>,
    pub steps: Vec<(Action, ModelState)>,
}

impl Counterexample {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.violation)?;
        writeln!(f, "  #1 {}", self.init)?;
        for ((action, state), idx) in self.steps.iter().zip(&self.indices[1..]) {
            writeln!(f, "  -- {action}")?;
            writeln!(f, "  #{} {}", idx + 1, state)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("state cap of {cap} exceeded after {states} states, {edges} edges, depth {depth}")]
    StateCapExceeded {
        cap: usize,
        states: usize,
        edges: usize,
        depth: usize,
    },
    #[error("invariant violated\n{0}")]
    InvariantViolated(Box<Counterexample>),
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub graph: TransitionGraph,
    /// Violations found when `stop_on_violation` is off, in state order.
    pub violations: Vec<InvariantViolation>,
    /// Edge through which each state was first discovered.
    parents: Vec<Option<usize>>,
}

impl Exploration {
    /// Shortest path from the initial state to `state` in the graph.
    pub fn path_to(&self, state: usize) -> Vec<usize> {
        path_to(&self.parents, &self.graph.edges, state)
    }

    pub fn counterexample(&self, violation: &InvariantViolation) -> Option<Counterexample> {
        let state = violation.state?;
        Some(build_counterexample(
            &self.graph.states,
            &self.graph.edges,
            &self.parents,
            violation.clone(),
            state,
        ))
    }
}

fn path_to(parents: &[Option<usize>], edges: &[GraphEdge], mut state: usize) -> Vec<usize> {
    let mut path = Vec::new();
    while let Some(e) = parents[state] {
        path.push(e);
        state = edges[e].src;
    }
    path.reverse();
    path
}

fn build_counterexample(
    states: &[ModelState],
    edges: &[GraphEdge],
    parents: &[Option<usize>],
    violation: InvariantViolation,
    state: usize,
) -> Counterexample {
    let path = path_to(parents, edges, state);
    let mut indices = vec![0];
    let mut steps = Vec::with_capacity(path.len());
    for e in path {
        indices.push(edges[e].dst);
        steps.push((edges[e].action.clone(), states[edges[e].dst].clone()));
    }
    Counterexample {
        violation,
        init: states[0].clone(),
        indices,
        steps,
    }
}

struct Search<'m, M: Model + ?Sized> {
    model: &'m M,
    options: ExploreOptions,
    states: Vec<ModelState>,
    depth: Vec<u32>,
    parents: Vec<Option<usize>>,
    edges: Vec<GraphEdge>,
    index: HashMap<Vec<u8>, u32>,
    violations: Vec<InvariantViolation>,
}

struct Successor {
    action: Action,
    state: ModelState,
    key: Vec<u8>,
}

impl<M: Model + ?Sized> Search<'_, M> {
    fn cap_error(&self) -> ExploreError {
        ExploreError::StateCapExceeded {
            cap: self.options.state_cap,
            states: self.states.len(),
            edges: self.edges.len(),
            depth: self.depth.last().copied().unwrap_or(0) as usize,
        }
    }

    /// Records the violations of a freshly discovered state.
    fn record(&mut self, state: usize, found: Vec<InvariantViolation>) -> Result<(), ExploreError> {
        for mut v in found {
            v.state = Some(state);
            if self.options.stop_on_violation {
                return Err(ExploreError::InvariantViolated(Box::new(build_counterexample(
                    &self.states,
                    &self.edges,
                    &self.parents,
                    v,
                    state,
                ))));
            }
            self.violations.push(v);
        }
        Ok(())
    }

    /// Adds the edge `src -> succ` and returns the destination if it is new.
    fn add_edge(&mut self, src: usize, succ: Successor) -> Result<Option<usize>, ExploreError> {
        let edge_id = self.edges.len();
        let (dst, fresh) = match self.index.get(&succ.key) {
            Some(&i) => (i as usize, false),
            None => {
                if self.states.len() >= self.options.state_cap {
                    return Err(self.cap_error());
                }
                let i = self.states.len();
                self.index.insert(succ.key, i as u32);
                self.states.push(succ.state);
                self.depth.push(self.depth[src] + 1);
                self.parents.push(Some(edge_id));
                (i, true)
            }
        };
        self.edges.push(GraphEdge { src, dst, action: succ.action });
        Ok(fresh.then_some(dst))
    }

    fn expand(model: &M, state: &ModelState) -> Vec<Successor> {
        model
            .successors(state)
            .into_iter()
            .map(|(action, state)| Successor {
                key: canonical_key(&state),
                action,
                state,
            })
            .collect()
    }

    fn run_sequential(&mut self) -> Result<(), ExploreError> {
        let mut next = 0;
        while next < self.states.len() {
            let succs = Self::expand(self.model, &self.states[next]);
            for succ in succs {
                if let Some(dst) = self.add_edge(next, succ)? {
                    let found = self.model.check_invariants(&self.states[dst]);
                    self.record(dst, found)?;
                }
            }
            next += 1;
        }
        Ok(())
    }

    /// Level-synchronous BFS: successors of one level are computed in
    /// parallel and merged in frontier order, which reproduces the
    /// sequential numbering exactly.
    fn run_parallel(&mut self, threads: usize) -> Result<(), ExploreError>
    where
        M: Sync,
    {
        let model = self.model;
        let mut lo = 0;
        while lo < self.states.len() {
            let hi = self.states.len();
            let level = &self.states[lo..hi];
            let chunk = level.len().div_ceil(threads).max(1);
            let expanded: Vec<Vec<Successor>> = thread::scope(|scope| {
                let handles: Vec<_> = level
                    .chunks(chunk)
                    .map(|part| {
                        scope.spawn(move || {
                            part.iter().map(|s| Self::expand(model, s)).collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("explorer worker panicked"))
                    .collect()
            });
            let mut fresh = Vec::new();
            for (offset, succs) in expanded.into_iter().enumerate() {
                for succ in succs {
                    if let Some(dst) = self.add_edge(lo + offset, succ)? {
                        fresh.push(dst);
                    }
                }
            }
            let new_states = &self.states[hi..];
            let chunk = new_states.len().div_ceil(threads).max(1);
            let checks: Vec<Vec<InvariantViolation>> = thread::scope(|scope| {
                let handles: Vec<_> = new_states
                    .chunks(chunk)
                    .map(|part| {
                        scope.spawn(move || {
                            part.iter().map(|s| model.check_invariants(s)).collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("explorer worker panicked"))
                    .collect()
            });
            for (dst, found) in fresh.into_iter().zip(checks) {
                self.record(dst, found)?;
            }
            lo = hi;
        }
        Ok(())
    }
}

/// Breadth-first enumeration of every state reachable from `model.init()`.
///
/// Each distinct canonical state appears once; every enabled action of every
/// state yields one edge; invariants are checked when a state is first
/// discovered.
pub fn explore<M: Model + ?Sized>(
    model: &M,
    options: ExploreOptions,
) -> Result<Exploration, ExploreError> {
    let init = model.init();
    let mut search = Search {
        model,
        options,
        index: HashMap::from([(canonical_key(&init), 0u32)]),
        states: vec![init],
        depth: vec![0],
        parents: vec![None],
        edges: Vec::new(),
        violations: Vec::new(),
    };
    if options.state_cap == 0 {
        return Err(ExploreError::StateCapExceeded {
            cap: 0,
            states: 0,
            edges: 0,
            depth: 0,
        });
    }
    let found = model.check_invariants(&search.states[0]);
    search.record(0, found)?;
    if options.threads > 1 {
        search.run_parallel(options.threads)?;
    } else {
        search.run_sequential()?;
    }
    Ok(Exploration {
        graph: TransitionGraph {
            model: model.name().to_string(),
            bounds: model.bounds(),
            states: search.states,
            edges: search.edges,
        },
        violations: search.violations,
        parents: search.parents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actor::{ActorId, Endpoint, Event};
    use crate::model::Bounds;
    use crate::value::Value;

    /// Counter actor 0 incremented by FIRE up to `limit`, wrapping to 0;
    /// `bad` is a value that violates the invariant.
    struct Counter {
        limit: i64,
        bad: Option<i64>,
    }

    fn tick() -> Action {
        Action::Fire {
            event: Event::new("Tick", Endpoint::External, Endpoint::Actor(ActorId(0)), Value::Nil),
        }
    }

    fn reset() -> Action {
        Action::Fire {
            event: Event::new("Reset", Endpoint::External, Endpoint::Actor(ActorId(0)), Value::Nil),
        }
    }

    impl Model for Counter {
        fn name(&self) -> &str {
            "counter"
        }
        fn bounds(&self) -> Bounds {
            Bounds::new().with("limit", self.limit)
        }
        fn init(&self) -> ModelState {
            ModelState::new(vec![Value::Int(0)], Value::empty_record())
        }
        fn enabled_actions(&self, s: &ModelState) -> Vec<Action> {
            let mut out = Vec::new();
            if s.actors[0].as_int().unwrap() < self.limit {
                out.push(tick());
            }
            if s.actors[0].as_int().unwrap() > 0 {
                out.push(reset());
            }
            out
        }
        fn successor(&self, s: &ModelState, a: &Action) -> ModelState {
            let mut next = s.clone();
            let v = s.actors[0].as_int().unwrap();
            next.actors[0] = Value::Int(if *a == tick() { v + 1 } else { 0 });
            next
        }
        fn check_invariants(&self, s: &ModelState) -> Vec<InvariantViolation> {
            match self.bad {
                Some(b) if s.actors[0].as_int() == Some(b) => {
                    vec![InvariantViolation::new("NotBad", format!("value {b}"))]
                }
                _ => Vec::new(),
            }
        }
    }

    #[test]
    fn no_actions_gives_single_vertex() {
        let e = explore(&Counter { limit: 0, bad: None }, ExploreOptions::default()).unwrap();
        assert_eq!(e.graph.states.len(), 1);
        assert!(e.graph.edges.is_empty());
    }

    #[test]
    fn counter_graph_shape() {
        let e = explore(&Counter { limit: 3, bad: None }, ExploreOptions::default()).unwrap();
        assert_eq!(e.graph.states.len(), 4);
        // 3 ticks + 3 resets.
        assert_eq!(e.graph.edges.len(), 6);
        assert_eq!(e.graph.stats().unwrap().diameter, 3);
    }

    #[test]
    fn shortest_counterexample() {
        let err = explore(&Counter { limit: 5, bad: Some(3) }, ExploreOptions::default()).unwrap_err();
        let ExploreError::InvariantViolated(cex) = err else { panic!("{err}") };
        assert_eq!(cex.len(), 3);
        assert_eq!(cex.indices, vec![0, 1, 2, 3]);
        assert_eq!(cex.violation.state, Some(3));
    }

    #[test]
    fn collects_violations_when_asked() {
        let opts = ExploreOptions { stop_on_violation: false, ..Default::default() };
        let e = explore(&Counter { limit: 5, bad: Some(0) }, opts).unwrap();
        assert_eq!(e.violations.len(), 1);
        assert_eq!(e.counterexample(&e.violations[0]).unwrap().len(), 0);
    }

    #[test]
    fn state_cap_is_enforced() {
        let opts = ExploreOptions { state_cap: 3, ..Default::default() };
        let err = explore(&Counter { limit: 10, bad: None }, opts).unwrap_err();
        assert!(matches!(err, ExploreError::StateCapExceeded { cap: 3, states: 3, .. }));
    }

    #[test]
    fn parallel_matches_sequential() {
        let m = Counter { limit: 40, bad: None };
        let a = explore(&m, ExploreOptions::default()).unwrap();
        let b = explore(&m, ExploreOptions { threads: 4, ..Default::default() }).unwrap();
        assert_eq!(a.graph, b.graph);
    }
}
