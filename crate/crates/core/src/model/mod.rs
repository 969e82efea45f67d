//! Executable reference models and explicit-state exploration.
//!
//! A [`Model`] describes the initial state, which [`Action`]s are enabled in
//! a state, and the successor each one produces. [`explore`] enumerates every
//! reachable state breadth first and returns the labelled transition graph
//! that test suites are generated from.

mod dot;
mod explore;
mod graph;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::actor::{Action, ActorId, Event};
use crate::value::{ParseError, Value};

pub use dot::{export_dot, import_dot, DotError};
pub use explore::{explore, Counterexample, ExploreError, ExploreOptions, Exploration};
pub use graph::{check_quiescent_progress, GraphEdge, GraphStats, QuiescentReport, TransitionGraph};

/// One global system state as the model sees it: every actor's variables,
/// the set of crashed actors, environment counters and the set of
/// unprocessed events.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelState {
    pub actors: Vec<Value>,
    pub down: BTreeSet<ActorId>,
    /// Record of environment variables (bounded counters and the like).
    pub env: Value,
    pub events: BTreeSet<Event>,
}

impl ModelState {
    pub fn new(actors: Vec<Value>, env: Value) -> Self {
        ModelState {
            actors,
            down: BTreeSet::new(),
            env,
            events: BTreeSet::new(),
        }
    }

    pub fn env_int(&self, name: &str) -> i64 {
        self.env.get(name).and_then(Value::as_int).unwrap_or(0)
    }

    pub fn set_env(&mut self, name: &str, v: Value) {
        self.env.set_field(name, v);
    }

    pub fn is_down(&self, id: ActorId) -> bool {
        self.down.contains(&id)
    }

    pub fn to_value(&self) -> Value {
        Value::record([
            ("actors", Value::seq(self.actors.iter().cloned())),
            (
                "down",
                Value::set(self.down.iter().map(|a| Value::Int(a.0 as i64))),
            ),
            ("env", self.env.clone()),
            ("events", Value::set(self.events.iter().map(Event::to_value))),
        ])
    }

    pub fn from_value(v: &Value) -> Option<ModelState> {
        Some(ModelState {
            actors: v.get("actors")?.as_seq()?.to_vec(),
            down: v
                .get("down")?
                .as_set()?
                .iter()
                .map(|i| i.as_int().and_then(|i| u16::try_from(i).ok()).map(ActorId))
                .collect::<Option<_>>()?,
            env: v.get("env")?.clone(),
            events: v
                .get("events")?
                .as_set()?
                .iter()
                .map(Event::from_value)
                .collect::<Option<_>>()?,
        })
    }

    pub fn to_canonical(&self) -> String {
        self.to_value().to_canonical()
    }

    pub fn parse(text: &str) -> Result<ModelState, ParseError> {
        let v = Value::parse(text)?;
        ModelState::from_value(&v).ok_or_else(|| ParseError {
            offset: 0,
            message: "not a model state".into(),
        })
    }
}

impl fmt::Display for ModelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

/// Byte key used to deduplicate states. Equal states give equal keys in any
/// process; distinct states give distinct keys.
pub fn canonical_key(state: &ModelState) -> Vec<u8> {
    state.to_canonical().into_bytes()
}

/// Named exploration limits, e.g. `replicas`, `max_queries`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bounds(BTreeMap<String, i64>);

impl Bounds {
    pub fn new() -> Self {
        Bounds::default()
    }

    pub fn with(mut self, name: &str, value: i64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn to_value(&self) -> Value {
        Value::record(self.0.iter().map(|(k, v)| (k.as_str(), Value::Int(*v))))
    }

    pub fn from_value(v: &Value) -> Option<Bounds> {
        let mut out = BTreeMap::new();
        for (k, v) in v.as_record()? {
            out.insert(k.to_string(), v.as_int()?);
        }
        Some(Bounds(out))
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_value().to_canonical())
    }
}

/// A safety property that failed in some state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantViolation {
    /// Zero-based index into the graph's state table, when known.
    pub state: Option<usize>,
    pub invariant: String,
    pub detail: String,
}

impl InvariantViolation {
    pub fn new(invariant: &str, detail: impl Into<String>) -> Self {
        InvariantViolation {
            state: None,
            invariant: invariant.to_string(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.state {
            Some(s) => write!(f, "{} violated in state {}: {}", self.invariant, s + 1, self.detail),
            None => write!(f, "{} violated: {}", self.invariant, self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("guard violation: {0} is not enabled")]
    GuardViolation(String),
}

pub trait Model: Sync {
    fn name(&self) -> &str;

    fn bounds(&self) -> Bounds;

    fn init(&self) -> ModelState;

    /// Every enabled action in a fixed, deterministic order.
    fn enabled_actions(&self, state: &ModelState) -> Vec<Action>;

    /// Successor of `state` under `action`, assuming the action is enabled.
    fn successor(&self, state: &ModelState, action: &Action) -> ModelState;

    /// Evaluates every state predicate of the model.
    fn check_invariants(&self, state: &ModelState) -> Vec<InvariantViolation>;

    /// Progress check for quiescent states. `None` means the exploration
    /// bounds are not exhausted in `state` so nothing is asserted; otherwise
    /// the list of unmet progress conditions.
    fn quiescent_progress(&self, _state: &ModelState) -> Option<Vec<String>> {
        None
    }

    fn successors(&self, state: &ModelState) -> Vec<(Action, ModelState)> {
        self.enabled_actions(state)
            .into_iter()
            .map(|a| {
                let next = self.successor(state, &a);
                (a, next)
            })
            .collect()
    }
}

/// Guarded application of `action`.
pub fn apply_action<M: Model + ?Sized>(
    model: &M,
    state: &ModelState,
    action: &Action,
) -> Result<ModelState, ModelError> {
    if !model.enabled_actions(state).contains(action) {
        return Err(ModelError::GuardViolation(action.to_canonical()));
    }
    Ok(model.successor(state, action))
}
