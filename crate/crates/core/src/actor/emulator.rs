use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::{
    Action, ActionKind, Actor, ActorContext, ActorFailure, ActorId, Discipline, Endpoint, Event,
    EventStore, Message, OperationRequest,
};
use crate::value::Value;

type Factory<A> = Arc<dyn Fn(ActorId) -> A + Send + Sync>;

pub struct EmulatorConfig<A> {
    pub actors: u16,
    pub discipline: Discipline,
    pub factory: Factory<A>,
    /// Fault action kinds the emulator accepts. INJECT, FIRE and DELIVER are
    /// always accepted.
    pub faults: BTreeSet<ActionKind>,
}

impl<A> Clone for EmulatorConfig<A> {
    fn clone(&self) -> Self {
        EmulatorConfig {
            actors: self.actors,
            discipline: self.discipline,
            factory: self.factory.clone(),
            faults: self.faults.clone(),
        }
    }
}

impl<A> fmt::Debug for EmulatorConfig<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmulatorConfig")
            .field("actors", &self.actors)
            .field("discipline", &self.discipline)
            .field("faults", &self.faults)
            .finish_non_exhaustive()
    }
}

impl<A> EmulatorConfig<A> {
    pub fn new(actors: u16, factory: impl Fn(ActorId) -> A + Send + Sync + 'static) -> Self {
        EmulatorConfig {
            actors,
            discipline: Discipline::Set,
            factory: Arc::new(factory),
            faults: BTreeSet::new(),
        }
    }

    pub fn discipline(mut self, discipline: Discipline) -> Self {
        self.discipline = discipline;
        self
    }

    pub fn allow(mut self, kinds: impl IntoIterator<Item = ActionKind>) -> Self {
        self.faults.extend(kinds);
        self
    }

    pub fn allow_all_faults(self) -> Self {
        self.allow([
            ActionKind::Drop,
            ActionKind::Corrupt,
            ActionKind::Crash,
            ActionKind::Restart,
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: String, reason: String },
    #[error(transparent)]
    ActorFailure(#[from] ActorFailure),
    #[error("emulator needs at least one actor")]
    NoActors,
}

/// Composite snapshot of the emulated system in model vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemState {
    pub actors: Vec<Value>,
    pub down: BTreeSet<ActorId>,
    pub events: BTreeSet<Event>,
}

/// Bookkeeping returned by [`Emulator::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepOutcome {
    /// Events withdrawn or discarded from the store.
    pub removed: usize,
    /// Events added to the store (injected or requested by an actor).
    pub added: usize,
}

pub struct Emulator<A: Actor> {
    config: EmulatorConfig<A>,
    actors: Vec<A>,
    alive: Vec<bool>,
    store: EventStore<A::Msg>,
}

impl<A: Actor> fmt::Debug for Emulator<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Emulator")
            .field("config", &self.config)
            .field("alive", &self.alive)
            .field("pending", &self.store.len())
            .finish_non_exhaustive()
    }
}

impl<A: Actor> Emulator<A> {
    pub fn new(config: EmulatorConfig<A>) -> Result<Self, StepError> {
        if config.actors == 0 {
            return Err(StepError::NoActors);
        }
        let actors = (0..config.actors).map(|i| (config.factory)(ActorId(i))).collect();
        Ok(Emulator {
            alive: vec![true; config.actors as usize],
            store: EventStore::new(config.discipline),
            actors,
            config,
        })
    }

    pub fn config(&self) -> &EmulatorConfig<A> {
        &self.config
    }

    pub fn actor(&self, id: ActorId) -> Option<&A> {
        self.actors.get(id.index())
    }

    pub fn is_alive(&self, id: ActorId) -> bool {
        self.alive.get(id.index()).copied().unwrap_or(false)
    }

    pub fn store(&self) -> &EventStore<A::Msg> {
        &self.store
    }

    pub fn snapshot(&self) -> SystemState {
        SystemState {
            actors: self.actors.iter().map(Actor::to_model).collect(),
            down: self
                .alive
                .iter()
                .enumerate()
                .filter(|(_, a)| !**a)
                .map(|(i, _)| ActorId(i as u16))
                .collect(),
            events: self.store.images(),
        }
    }

    fn illegal(action: &Action, reason: impl Into<String>) -> StepError {
        StepError::IllegalAction {
            action: action.to_canonical(),
            reason: reason.into(),
        }
    }

    fn check_actor(&self, action: &Action, id: ActorId) -> Result<(), StepError> {
        if id.index() >= self.actors.len() {
            return Err(Self::illegal(action, format!("no actor {id}")));
        }
        Ok(())
    }

    fn decode(action: &Action, kind: &str, payload: &Value) -> Result<A::Msg, StepError> {
        A::Msg::from_model(kind, payload).map_err(|e| Self::illegal(action, e.to_string()))
    }

    fn image(src: Endpoint, dst: Endpoint, msg: &A::Msg) -> Event {
        Event::new(msg.kind(), src, dst, msg.to_model())
    }

    fn require_fault(&self, action: &Action) -> Result<(), StepError> {
        if self.config.faults.contains(&action.kind()) {
            Ok(())
        } else {
            Err(Self::illegal(action, "fault kind not enabled"))
        }
    }

    fn live_destination(&self, action: &Action, event: &Event) -> Result<ActorId, StepError> {
        let id = event
            .dst
            .actor()
            .ok_or_else(|| Self::illegal(action, "destination is external"))?;
        self.check_actor(action, id)?;
        if !self.alive[id.index()] {
            return Err(Self::illegal(action, format!("actor {id} is crashed")));
        }
        Ok(id)
    }

    fn run_handler(&mut self, id: ActorId, from: Endpoint, msg: A::Msg) -> Result<usize, StepError> {
        let ctx = ActorContext {
            id,
            participants: self.config.actors,
        };
        let requests = self.actors[id.index()].on_event(&ctx, from, msg)?;
        let added = requests.len();
        for req in requests {
            let (dst, msg) = match req {
                OperationRequest::Send { to, msg } => (to, msg),
                OperationRequest::Persist { ack } => (Endpoint::Actor(id), ack),
            };
            if let Endpoint::Actor(d) = dst {
                if d.index() >= self.actors.len() {
                    return Err(ActorFailure {
                        actor: id,
                        reason: format!("send to unknown actor {d}"),
                    }
                    .into());
                }
            }
            let image = Self::image(Endpoint::Actor(id), dst, &msg);
            self.store.insert(image, msg);
        }
        Ok(added)
    }

    /// Applies one action. On error the emulator may be left partially
    /// updated and should be discarded.
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome, StepError> {
        match action {
            Action::Inject { event } => {
                let id = event
                    .dst
                    .actor()
                    .ok_or_else(|| Self::illegal(action, "destination is external"))?;
                self.check_actor(action, id)?;
                let msg = Self::decode(action, &event.kind, &event.payload)?;
                let image = Self::image(event.src, event.dst, &msg);
                self.store.insert(image, msg);
                Ok(StepOutcome { removed: 0, added: 1 })
            }
            Action::Fire { event } => {
                let id = self.live_destination(action, event)?;
                let msg = Self::decode(action, &event.kind, &event.payload)?;
                let added = self.run_handler(id, event.src, msg)?;
                Ok(StepOutcome { removed: 0, added })
            }
            Action::Deliver { event } => {
                let id = self.live_destination(action, event)?;
                let msg = self
                    .store
                    .withdraw(event)
                    .ok_or_else(|| Self::illegal(action, "event not withdrawable"))?;
                let added = self.run_handler(id, event.src, msg)?;
                Ok(StepOutcome { removed: 1, added })
            }
            Action::Drop { event } => {
                self.require_fault(action)?;
                self.store
                    .withdraw(event)
                    .ok_or_else(|| Self::illegal(action, "event not withdrawable"))?;
                Ok(StepOutcome { removed: 1, added: 0 })
            }
            Action::Corrupt { event, payload } => {
                self.require_fault(action)?;
                let msg = Self::decode(action, &event.kind, payload)?;
                let image = Self::image(event.src, event.dst, &msg);
                if !self.store.replace(event, image, msg) {
                    return Err(Self::illegal(action, "event not pending"));
                }
                Ok(StepOutcome { removed: 1, added: 1 })
            }
            Action::Crash { actor, dropped } => {
                self.require_fault(action)?;
                self.check_actor(action, *actor)?;
                if !self.alive[actor.index()] {
                    return Err(Self::illegal(action, "actor already crashed"));
                }
                if let Some(missing) = dropped.iter().find(|e| !self.store.contains(e)) {
                    return Err(Self::illegal(action, format!("event {missing} not pending")));
                }
                let removed = dropped.iter().map(|e| self.store.remove_all(e)).sum();
                self.actors[actor.index()].crash();
                self.alive[actor.index()] = false;
                Ok(StepOutcome { removed, added: 0 })
            }
            Action::Restart { actor } => {
                self.require_fault(action)?;
                self.check_actor(action, *actor)?;
                if self.alive[actor.index()] {
                    return Err(Self::illegal(action, "actor is not crashed"));
                }
                self.alive[actor.index()] = true;
                Ok(StepOutcome::default())
            }
        }
    }

    /// Runs `actions` from the current state, stopping at the first error.
    pub fn run<'a>(&mut self, actions: impl IntoIterator<Item = &'a Action>) -> Result<(), StepError> {
        for a in actions {
            self.step(a)?;
        }
        Ok(())
    }
}
