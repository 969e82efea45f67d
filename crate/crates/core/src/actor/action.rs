use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::{ActorId, Endpoint, Event};
use crate::value::{ParseError, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Inject,
    Fire,
    Deliver,
    Drop,
    Corrupt,
    Crash,
    Restart,
}

impl ActionKind {
    pub fn tag(self) -> &'static str {
        match self {
            ActionKind::Inject => "inject",
            ActionKind::Fire => "fire",
            ActionKind::Deliver => "deliver",
            ActionKind::Drop => "drop",
            ActionKind::Corrupt => "corrupt",
            ActionKind::Crash => "crash",
            ActionKind::Restart => "restart",
        }
    }

    pub fn all() -> [ActionKind; 7] {
        [
            ActionKind::Inject,
            ActionKind::Fire,
            ActionKind::Deliver,
            ActionKind::Drop,
            ActionKind::Corrupt,
            ActionKind::Crash,
            ActionKind::Restart,
        ]
    }
}

/// One transition of the system. Shared vocabulary between models (edge
/// labels) and the emulator (replayed steps).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    /// Add an external event to the unprocessed collection.
    Inject { event: Event },
    /// Hand an external stimulus (a timer, an operator command) straight to
    /// its destination actor without queueing it.
    Fire { event: Event },
    /// Withdraw `event` and let its destination actor process it.
    Deliver { event: Event },
    /// Withdraw `event` without processing it.
    Drop { event: Event },
    /// Replace the payload of `event`.
    Corrupt { event: Event, payload: Value },
    /// Stop `actor`, clear its volatile state and discard every pending event
    /// equal to one listed in `dropped`.
    Crash { actor: ActorId, dropped: BTreeSet<Event> },
    Restart { actor: ActorId },
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Inject { .. } => ActionKind::Inject,
            Action::Fire { .. } => ActionKind::Fire,
            Action::Deliver { .. } => ActionKind::Deliver,
            Action::Drop { .. } => ActionKind::Drop,
            Action::Corrupt { .. } => ActionKind::Corrupt,
            Action::Crash { .. } => ActionKind::Crash,
            Action::Restart { .. } => ActionKind::Restart,
        }
    }

    /// Actor whose state this action may change, if any.
    pub fn target(&self) -> Option<ActorId> {
        match self {
            Action::Fire { event } | Action::Deliver { event } => event.dst.actor(),
            Action::Crash { actor, .. } | Action::Restart { actor } => Some(*actor),
            _ => None,
        }
    }

    pub fn to_value(&self) -> Value {
        let op = ("op", Value::str(self.kind().tag()));
        match self {
            Action::Inject { event }
            | Action::Fire { event }
            | Action::Deliver { event }
            | Action::Drop { event } => Value::record([("e", event.to_value()), op]),
            Action::Corrupt { event, payload } => {
                Value::record([("e", event.to_value()), op, ("p", payload.clone())])
            }
            Action::Crash { actor, dropped } => Value::record([
                ("actor", Value::Int(actor.0 as i64)),
                ("drop", Value::set(dropped.iter().map(Event::to_value))),
                op,
            ]),
            Action::Restart { actor } => {
                Value::record([("actor", Value::Int(actor.0 as i64)), op])
            }
        }
    }

    pub fn from_value(v: &Value) -> Option<Action> {
        let event = || v.get("e").and_then(Event::from_value);
        let actor = || {
            v.get("actor")
                .and_then(Value::as_int)
                .and_then(|i| u16::try_from(i).ok())
                .map(ActorId)
        };
        Some(match v.get("op")?.as_str()? {
            "inject" => Action::Inject { event: event()? },
            "fire" => Action::Fire { event: event()? },
            "deliver" => Action::Deliver { event: event()? },
            "drop" => Action::Drop { event: event()? },
            "corrupt" => Action::Corrupt {
                event: event()?,
                payload: v.get("p")?.clone(),
            },
            "crash" => Action::Crash {
                actor: actor()?,
                dropped: v
                    .get("drop")?
                    .as_set()?
                    .iter()
                    .map(Event::from_value)
                    .collect::<Option<_>>()?,
            },
            "restart" => Action::Restart { actor: actor()? },
            _ => return None,
        })
    }

    pub fn to_canonical(&self) -> String {
        self.to_value().to_canonical()
    }

    pub fn parse(text: &str) -> Result<Action, ParseError> {
        let v = Value::parse(text)?;
        Action::from_value(&v).ok_or_else(|| ParseError {
            offset: 0,
            message: format!("not an action: {text}"),
        })
    }

    pub fn inject(event: Event) -> Self {
        Action::Inject { event }
    }

    pub fn deliver(event: Event) -> Self {
        Action::Deliver { event }
    }

    /// Convenience for events whose source is outside the system.
    pub fn external(kind: &str, dst: ActorId, payload: Value) -> Event {
        Event::new(kind, Endpoint::External, Endpoint::Actor(dst), payload)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

#[derive(Debug, Error)]
pub enum ActionLogError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("missing or unsupported action log header {0:?}")]
    Header(String),
}

/// Line-delimited action log: a header line followed by one canonical action
/// per line. Replaying the actions from a fresh emulator reproduces the run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionLog {
    pub actions: Vec<Action>,
}

impl ActionLog {
    pub const HEADER: &'static str = "ACTIONS v1";

    pub fn to_text(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for a in &self.actions {
            out.push_str(&a.to_canonical());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<ActionLog, ActionLogError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(Self::HEADER) => {}
            other => return Err(ActionLogError::Header(other.unwrap_or("").to_string())),
        }
        let actions = lines
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| {
                Action::parse(l).map_err(|source| ActionLogError::Parse { line: i + 2, source })
            })
            .collect::<Result<_, _>>()?;
        Ok(ActionLog { actions })
    }
}
