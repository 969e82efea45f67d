//! Broadcasting key-value store: every actor keeps a map; a SET updates the
//! receiving actor and notifies every participant with `KeyUpdated`, a GET
//! answers the sender with `ValueResponse`.
//!
//! `KeyUpdated` and `ValueResponse` are outputs of the system. The model
//! never delivers them, so they stay in the unprocessed set once produced.

use std::collections::BTreeMap;

use crate::actor::{
    Action, ActionKind, Actor, ActorContext, ActorFailure, ActorId, DecodeError, EmulatorConfig,
    Endpoint, Event, Message, OperationRequest,
};
use crate::model::{Bounds, InvariantViolation, Model, ModelState};
use crate::value::Value;

pub const KEY: &str = "k";
pub const CORRUPTED: &str = "corrupt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KvMsg {
    Get { key: String },
    Set { key: String, value: String },
    KeyUpdated { key: String },
    ValueResponse { value: Option<String> },
}

impl Message for KvMsg {
    fn kind(&self) -> &'static str {
        match self {
            KvMsg::Get { .. } => "Get",
            KvMsg::Set { .. } => "Set",
            KvMsg::KeyUpdated { .. } => "KeyUpdated",
            KvMsg::ValueResponse { .. } => "ValueResponse",
        }
    }

    fn to_model(&self) -> Value {
        match self {
            KvMsg::Get { key } | KvMsg::KeyUpdated { key } => Value::record([("key", Value::str(key))]),
            KvMsg::Set { key, value } => {
                Value::record([("key", Value::str(key)), ("value", Value::str(value))])
            }
            KvMsg::ValueResponse { value } => Value::record([(
                "value",
                value.as_deref().map_or(Value::Nil, Value::str),
            )]),
        }
    }

    fn from_model(kind: &str, payload: &Value) -> Result<Self, DecodeError> {
        let text = |field: &str| {
            payload
                .get(field)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| DecodeError::new(kind, payload, format!("missing string field {field}")))
        };
        match kind {
            "Get" => Ok(KvMsg::Get { key: text("key")? }),
            "Set" => Ok(KvMsg::Set { key: text("key")?, value: text("value")? }),
            "KeyUpdated" => Ok(KvMsg::KeyUpdated { key: text("key")? }),
            "ValueResponse" => match payload.get("value") {
                Some(Value::Nil) => Ok(KvMsg::ValueResponse { value: None }),
                Some(_) => Ok(KvMsg::ValueResponse { value: Some(text("value")?) }),
                None => Err(DecodeError::new(kind, payload, "missing field value")),
            },
            _ => Err(DecodeError::new(kind, payload, "unknown kind")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct KvActor {
    storage: BTreeMap<String, String>,
    /// Requests answered since the last start; volatile.
    served: u64,
}

impl KvActor {
    pub fn new() -> Self {
        KvActor::default()
    }

    pub fn storage(&self) -> &BTreeMap<String, String> {
        &self.storage
    }

    pub fn served(&self) -> u64 {
        self.served
    }
}

impl Actor for KvActor {
    type Msg = KvMsg;

    fn on_event(
        &mut self,
        ctx: &ActorContext,
        from: Endpoint,
        msg: KvMsg,
    ) -> Result<Vec<OperationRequest<KvMsg>>, ActorFailure> {
        match msg {
            KvMsg::Get { key } => {
                self.served += 1;
                let value = self.storage.get(&key).cloned();
                Ok(vec![OperationRequest::send(from, KvMsg::ValueResponse { value })])
            }
            KvMsg::Set { key, value } => {
                self.served += 1;
                self.storage.insert(key.clone(), value);
                Ok(ctx
                    .participants()
                    .map(|p| OperationRequest::send(p, KvMsg::KeyUpdated { key: key.clone() }))
                    .collect())
            }
            KvMsg::KeyUpdated { .. } => Ok(Vec::new()),
            KvMsg::ValueResponse { .. } => Err(ActorFailure {
                actor: ctx.id,
                reason: "received a ValueResponse".into(),
            }),
        }
    }

    fn to_model(&self) -> Value {
        self.persistent()
    }

    fn persistent(&self) -> Value {
        storage_value(self.storage.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    fn crash(&mut self) {
        self.served = 0;
    }
}

fn storage_value<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> Value {
    Value::record([(
        "storage",
        Value::map(entries.into_iter().map(|(k, v)| (Value::str(k), Value::str(v)))),
    )])
}

/// Exploration limits of the key-value model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KvBounds {
    pub actors: u16,
    pub sets: i64,
    pub gets: i64,
    pub crashes: i64,
    pub drops: i64,
    pub corruptions: i64,
}

impl Default for KvBounds {
    fn default() -> Self {
        KvBounds { actors: 1, sets: 1, gets: 0, crashes: 0, drops: 0, corruptions: 0 }
    }
}

impl KvBounds {
    pub fn to_bounds(&self) -> Bounds {
        Bounds::new()
            .with("actors", self.actors as i64)
            .with("max_sets", self.sets)
            .with("max_gets", self.gets)
            .with("max_crashes", self.crashes)
            .with("max_drops", self.drops)
            .with("max_corruptions", self.corruptions)
    }

    /// Inverse of [`KvBounds::to_bounds`].
    pub fn from_bounds(b: &Bounds) -> Option<KvBounds> {
        Some(KvBounds {
            actors: u16::try_from(b.get("actors")?).ok()?,
            sets: b.get("max_sets")?,
            gets: b.get("max_gets")?,
            crashes: b.get("max_crashes")?,
            drops: b.get("max_drops")?,
            corruptions: b.get("max_corruptions")?,
        })
    }

    /// Emulator configuration accepting exactly the faults these bounds can
    /// produce.
    pub fn emulator_config(&self) -> EmulatorConfig<KvActor> {
        let mut faults = Vec::new();
        if self.crashes > 0 {
            faults.extend([ActionKind::Crash, ActionKind::Restart]);
        }
        if self.drops > 0 {
            faults.push(ActionKind::Drop);
        }
        if self.corruptions > 0 {
            faults.push(ActionKind::Corrupt);
        }
        EmulatorConfig::new(self.actors, |_| KvActor::new()).allow(faults)
    }
}

/// Executable reference model of [`KvActor`] systems.
#[derive(Debug, Clone, Default)]
pub struct KvModel {
    pub bounds: KvBounds,
}

impl KvModel {
    pub fn new(bounds: KvBounds) -> Self {
        KvModel { bounds }
    }

    fn ids(&self) -> impl Iterator<Item = ActorId> {
        (0..self.bounds.actors).map(ActorId)
    }

    fn set_event(&self, dst: ActorId, slot: i64) -> Event {
        Action::external(
            "Set",
            dst,
            Value::record([("key", Value::str(KEY)), ("value", Value::str(&format!("v{slot}")))]),
        )
    }

    fn get_event(&self, dst: ActorId) -> Event {
        Action::external("Get", dst, Value::record([("key", Value::str(KEY))]))
    }

    fn is_request(e: &Event) -> bool {
        &*e.kind == "Get" || &*e.kind == "Set"
    }

    fn deliver(&self, state: &mut ModelState, e: &Event) {
        let id = e.dst.actor().expect("requests are addressed to actors");
        let key = e.payload.get("key").cloned().unwrap_or(Value::Nil);
        let actor = &mut state.actors[id.index()];
        let storage = actor.get("storage").and_then(Value::as_map).cloned().unwrap_or_default();
        match &*e.kind {
            "Get" => {
                let value = storage.get(&key).cloned().unwrap_or(Value::Nil);
                state.events.insert(Event::new(
                    "ValueResponse",
                    Endpoint::Actor(id),
                    e.src,
                    Value::record([("value", value)]),
                ));
            }
            "Set" => {
                let mut storage = storage;
                storage.insert(key.clone(), e.payload.get("value").cloned().unwrap_or(Value::Nil));
                actor.set_field("storage", Value::map(storage));
                for p in self.ids() {
                    state.events.insert(Event::new(
                        "KeyUpdated",
                        Endpoint::Actor(id),
                        Endpoint::Actor(p),
                        Value::record([("key", key.clone())]),
                    ));
                }
            }
            other => unreachable!("model never delivers {other}"),
        }
    }

    fn corrupted(e: &Event) -> Option<Value> {
        (&*e.kind == "Set" && e.payload.get("value").and_then(Value::as_str) != Some(CORRUPTED))
            .then(|| e.payload.with("value", Value::str(CORRUPTED)))
    }
}

impl Model for KvModel {
    fn name(&self) -> &str {
        "kv"
    }

    fn bounds(&self) -> Bounds {
        self.bounds.to_bounds()
    }

    fn init(&self) -> ModelState {
        let actors = self.ids().map(|_| storage_value([])).collect();
        ModelState::new(
            actors,
            Value::record([
                ("corruptions", Value::Int(0)),
                ("crashes", Value::Int(0)),
                ("drops", Value::Int(0)),
                ("gets", Value::Int(0)),
                ("sets", Value::Int(0)),
            ]),
        )
    }

    fn enabled_actions(&self, s: &ModelState) -> Vec<Action> {
        let b = &self.bounds;
        let mut out = Vec::new();
        let sets = s.env_int("sets");
        if sets < b.sets {
            out.extend(self.ids().map(|id| Action::inject(self.set_event(id, sets + 1))));
        }
        if s.env_int("gets") < b.gets {
            out.extend(self.ids().map(|id| Action::inject(self.get_event(id))));
        }
        let requests: Vec<&Event> = s.events.iter().filter(|e| Self::is_request(e)).collect();
        for e in &requests {
            if e.dst.actor().is_some_and(|id| !s.is_down(id)) {
                out.push(Action::deliver((*e).clone()));
            }
        }
        if s.env_int("drops") < b.drops {
            out.extend(requests.iter().map(|e| Action::Drop { event: (*e).clone() }));
        }
        if s.env_int("corruptions") < b.corruptions {
            for e in &requests {
                if let Some(payload) = Self::corrupted(e) {
                    out.push(Action::Corrupt { event: (*e).clone(), payload });
                }
            }
        }
        if s.env_int("crashes") < b.crashes {
            for id in self.ids().filter(|id| !s.is_down(*id)) {
                let dropped = s
                    .events
                    .iter()
                    .filter(|e| e.dst == Endpoint::Actor(id))
                    .cloned()
                    .collect();
                out.push(Action::Crash { actor: id, dropped });
            }
        }
        out.extend(s.down.iter().map(|&actor| Action::Restart { actor }));
        out
    }

    fn successor(&self, s: &ModelState, action: &Action) -> ModelState {
        let mut next = s.clone();
        let bump = |st: &mut ModelState, name: &str| {
            let v = st.env_int(name);
            st.set_env(name, Value::Int(v + 1));
        };
        match action {
            Action::Inject { event } => {
                bump(&mut next, if &*event.kind == "Set" { "sets" } else { "gets" });
                next.events.insert(event.clone());
            }
            Action::Deliver { event } => {
                next.events.remove(event);
                self.deliver(&mut next, event);
            }
            Action::Drop { event } => {
                next.events.remove(event);
                bump(&mut next, "drops");
            }
            Action::Corrupt { event, payload } => {
                next.events.remove(event);
                next.events.insert(Event { payload: payload.clone(), ..event.clone() });
                bump(&mut next, "corruptions");
            }
            Action::Crash { actor, dropped } => {
                for e in dropped {
                    next.events.remove(e);
                }
                next.down.insert(*actor);
                bump(&mut next, "crashes");
            }
            Action::Restart { actor } => {
                next.down.remove(actor);
            }
            Action::Fire { .. } => unreachable!("the key-value model has no timers"),
        }
        next
    }

    fn check_invariants(&self, s: &ModelState) -> Vec<InvariantViolation> {
        let mut out = Vec::new();
        for (i, actor) in s.actors.iter().enumerate() {
            let Some(storage) = actor.get("storage").and_then(Value::as_map) else {
                out.push(InvariantViolation::new("StorageShape", format!("actor {i} has no storage map")));
                continue;
            };
            for (k, v) in storage.iter() {
                let known = v.as_str().is_some_and(|v| {
                    v == CORRUPTED
                        || v.strip_prefix('v')
                            .and_then(|n| n.parse::<i64>().ok())
                            .is_some_and(|n| 1 <= n && n <= self.bounds.sets)
                });
                if !known {
                    out.push(InvariantViolation::new(
                        "KnownValues",
                        format!("actor {i} stores {k} = {v}, which was never written"),
                    ));
                }
            }
        }
        out
    }
}
