//! Deterministic single-threaded emulation of an actor system.
//!
//! An [`Actor`] owns its state and reacts to one event at a time, returning
//! [`OperationRequest`]s instead of performing side effects. The
//! [`Emulator`] keeps every actor plus the collection of unprocessed events
//! in one thread and advances the whole system one [`Action`] at a time, so
//! any execution can be replayed exactly from its action sequence.

mod action;
mod emulator;
mod store;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::value::{Name, Value};

pub use action::{Action, ActionKind, ActionLog, ActionLogError};
pub use emulator::{Emulator, EmulatorConfig, StepError, StepOutcome, SystemState};
pub use store::{Discipline, EventStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorId(pub u16);

impl ActorId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Source or destination of an event. `External` stands for everything
/// outside the system under test (clients, timers, operators).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    External,
    Actor(ActorId),
}

impl Endpoint {
    pub fn actor(self) -> Option<ActorId> {
        match self {
            Endpoint::Actor(id) => Some(id),
            Endpoint::External => None,
        }
    }

    pub fn to_value(self) -> Value {
        match self {
            Endpoint::External => Value::Nil,
            Endpoint::Actor(id) => Value::Int(id.0 as i64),
        }
    }

    pub fn from_value(v: &Value) -> Option<Endpoint> {
        match v {
            Value::Nil => Some(Endpoint::External),
            Value::Int(i) => u16::try_from(*i).ok().map(|i| Endpoint::Actor(ActorId(i))),
            _ => None,
        }
    }
}

impl From<ActorId> for Endpoint {
    fn from(id: ActorId) -> Self {
        Endpoint::Actor(id)
    }
}

/// Model-level image of one unprocessed event.
///
/// Two events are the same event iff their canonical serializations agree;
/// this is what action selectors match on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub dst: Endpoint,
    pub kind: Name,
    pub src: Endpoint,
    pub payload: Value,
}

impl Event {
    pub fn new(kind: &str, src: Endpoint, dst: Endpoint, payload: Value) -> Self {
        Event {
            dst,
            kind: Arc::from(kind),
            src,
            payload,
        }
    }

    pub fn to_value(&self) -> Value {
        Value::record([
            ("dst", self.dst.to_value()),
            ("kind", Value::Str(self.kind.clone())),
            ("p", self.payload.clone()),
            ("src", self.src.to_value()),
        ])
    }

    pub fn from_value(v: &Value) -> Option<Event> {
        Some(Event {
            dst: Endpoint::from_value(v.get("dst")?)?,
            kind: match v.get("kind")? {
                Value::Str(s) => s.clone(),
                _ => return None,
            },
            src: Endpoint::from_value(v.get("src")?)?,
            payload: v.get("p")?.clone(),
        })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_value())
    }
}

/// Implementation-side message type. `to_model` may drop implementation-only
/// detail; only the image is ever compared against a model.
pub trait Message: Clone + fmt::Debug {
    fn kind(&self) -> &'static str;

    fn to_model(&self) -> Value;

    /// Rebuilds a message from its model image, used when an action injects
    /// or corrupts an event.
    fn from_model(kind: &str, payload: &Value) -> Result<Self, DecodeError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot decode {kind} event from {payload}: {reason}")]
pub struct DecodeError {
    pub kind: String,
    pub payload: String,
    pub reason: String,
}

impl DecodeError {
    pub fn new(kind: &str, payload: &Value, reason: impl Into<String>) -> Self {
        DecodeError {
            kind: kind.to_string(),
            payload: payload.to_canonical(),
            reason: reason.into(),
        }
    }
}

/// A side effect requested by an actor. Each request turns into exactly one
/// future event once the emulator applies it.
#[derive(Debug, Clone, PartialEq)]
pub enum OperationRequest<M> {
    /// Send `msg` to `to`.
    Send { to: Endpoint, msg: M },
    /// Persist something; `ack` is delivered back to the requesting actor
    /// once the write completes.
    Persist { ack: M },
}

impl<M> OperationRequest<M> {
    pub fn send(to: impl Into<Endpoint>, msg: M) -> Self {
        OperationRequest::Send { to: to.into(), msg }
    }
}

/// What an actor may know about the system it runs in.
#[derive(Debug, Clone, Copy)]
pub struct ActorContext {
    pub id: ActorId,
    pub participants: u16,
}

impl ActorContext {
    pub fn participants(&self) -> impl Iterator<Item = ActorId> {
        (0..self.participants).map(ActorId)
    }
}

/// Unexpected internal error inside an actor. Always aborts the test.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("actor {actor} failed: {reason}")]
pub struct ActorFailure {
    pub actor: ActorId,
    pub reason: String,
}

pub trait Actor {
    type Msg: Message;

    fn on_event(
        &mut self,
        ctx: &ActorContext,
        from: Endpoint,
        msg: Self::Msg,
    ) -> Result<Vec<OperationRequest<Self::Msg>>, ActorFailure>;

    /// Projection of the actor's state onto the model vocabulary.
    fn to_model(&self) -> Value;

    /// The part of the state that survives a crash.
    fn persistent(&self) -> Value;

    /// Clears the volatile part of the state.
    fn crash(&mut self);
}
