use std::collections::BTreeSet;

use super::{master_of, quorum_others, VrBounds, NONE};
use crate::actor::{Action, ActorId, Endpoint, Event};
use crate::model::{Bounds, InvariantViolation, Model, ModelState};
use crate::value::Value;

/// Which protocol the model describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VrModelVariant {
    #[default]
    Correct,
    /// A master commits an entry as soon as it appends it.
    CommitWithoutQuorum,
}

/// Executable reference model of the replication protocol.
#[derive(Debug, Clone, Default)]
pub struct VrModel {
    pub bounds: VrBounds,
    pub variant: VrModelVariant,
}

/// Decoded replica record. Written back with [`Rep::to_value`].
#[derive(Debug, Clone)]
struct Rep {
    status: &'static str,
    log: Vec<Value>,
    view: i64,
    commit: i64,
    download: Value,
    catchup: i64,
    phase2: bool,
    votes: BTreeSet<Value>,
}

impl Rep {
    fn init(id: usize) -> Rep {
        Rep {
            status: "Normal",
            log: Vec::new(),
            view: 0,
            commit: 0,
            download: Value::Int(id as i64),
            catchup: 0,
            phase2: false,
            votes: BTreeSet::new(),
        }
    }

    fn from_value(v: &Value) -> Rep {
        let int = |f: &str| v.get(f).and_then(Value::as_int).unwrap_or(0);
        Rep {
            status: if v.get("status").and_then(Value::as_str) == Some("ViewChange") {
                "ViewChange"
            } else {
                "Normal"
            },
            log: v.get("log").and_then(Value::as_seq).map(<[Value]>::to_vec).unwrap_or_default(),
            view: int("viewNumber"),
            commit: int("commitNumber"),
            download: v.get("downloadReplica").cloned().unwrap_or(Value::Nil),
            catchup: int("catchupPos"),
            phase2: v.get("phase2").and_then(Value::as_bool).unwrap_or(false),
            votes: v.get("votes").and_then(Value::as_set).cloned().unwrap_or_default(),
        }
    }

    fn to_value(&self) -> Value {
        let mut fields = vec![
            ("catchupPos", Value::Int(self.catchup)),
            ("commitNumber", Value::Int(self.commit)),
            ("downloadReplica", self.download.clone()),
            ("log", Value::seq(self.log.iter().cloned())),
            ("phase2", Value::Bool(self.phase2)),
            ("status", Value::str(self.status)),
            ("viewNumber", Value::Int(self.view)),
        ];
        if !self.votes.is_empty() {
            fields.push(("votes", Value::set(self.votes.iter().cloned())));
        }
        Value::record(fields)
    }

    fn len(&self) -> i64 {
        self.log.len() as i64
    }

    fn lastview(&self) -> i64 {
        self.log.last().and_then(|e| e.get("v")).and_then(Value::as_int).unwrap_or(-1)
    }

    fn normal(&self) -> bool {
        self.status == "Normal"
    }

    fn deciding(&self) -> bool {
        self.download == Value::str(NONE)
    }
}

fn rec(fields: &[(&str, i64)]) -> Value {
    Value::record(fields.iter().map(|&(k, v)| (k, Value::Int(v))))
}

fn field(e: &Event, name: &str) -> i64 {
    e.payload.get(name).and_then(Value::as_int).unwrap_or(0)
}

/// One delivery in progress: the receiving replica plus the events it emits.
struct Step<'a> {
    model: &'a VrModel,
    me: usize,
    r: Rep,
    out: Vec<Event>,
}

impl Step<'_> {
    fn n(&self) -> u16 {
        self.model.bounds.replicas
    }

    fn need(&self) -> usize {
        quorum_others(self.n())
    }

    fn master(&self) -> usize {
        master_of(self.r.view, self.n()) as usize
    }

    fn send(&mut self, to: usize, kind: &str, payload: Value) {
        self.out.push(Event::new(
            kind,
            Endpoint::Actor(ActorId(self.me as u16)),
            Endpoint::Actor(ActorId(to as u16)),
            payload,
        ));
    }

    fn send_others(&mut self, kind: &str, payload: Value) {
        for to in 0..self.n() as usize {
            if to != self.me {
                self.send(to, kind, payload.clone());
            }
        }
    }

    fn new_view(&mut self, view: i64) {
        self.r.status = "ViewChange";
        self.r.view = view;
        self.r.download = Value::str(NONE);
        self.r.catchup = 0;
        self.r.phase2 = false;
        self.r.votes.clear();
        self.send_others("StartViewChange", rec(&[("view", view)]));
    }

    fn count(&self, dvc: bool) -> usize {
        self.r.votes.iter().filter(|v| matches!(v, Value::Record(_)) == dvc).count()
    }

    fn svc_quorum(&mut self) {
        if self.r.phase2 || self.count(false) < self.need() {
            return;
        }
        self.r.phase2 = true;
        self.r.votes.retain(|v| matches!(v, Value::Record(_)));
        if self.master() == self.me {
            self.dvc_quorum();
        } else {
            let payload = rec(&[("lastview", self.r.lastview()), ("len", self.r.len()), ("view", self.r.view)]);
            self.send(self.master(), "DoViewChange", payload);
        }
    }

    fn dvc_quorum(&mut self) {
        if !self.r.deciding() || self.count(true) < self.need() {
            return;
        }
        self.r.phase2 = true;
        let mut best = (self.r.lastview(), self.r.len(), self.me as i64);
        for v in &self.r.votes {
            let get = |f: &str| v.get(f).and_then(Value::as_int).unwrap_or(-1);
            if (get("lastview"), get("len")) > (best.0, best.1) {
                best = (get("lastview"), get("len"), get("r"));
            }
        }
        self.r.votes.clear();
        if best.2 == self.me as i64 {
            self.become_normal();
        } else {
            self.r.download = Value::Int(best.2);
            self.download_from(best.1);
        }
    }

    fn download_from(&mut self, len: i64) {
        let start = self.r.commit.min(len);
        if start == len {
            self.r.log.truncate(len as usize);
            self.r.commit = self.r.commit.min(len);
            self.become_normal();
        } else {
            self.r.catchup = start;
            let src = self.r.download.as_int().unwrap_or(0) as usize;
            self.send(src, "CatchupQuery", rec(&[("pos", start), ("view", self.r.view)]));
        }
    }

    fn become_normal(&mut self) {
        self.r.status = "Normal";
        self.r.catchup = 0;
        if self.master() == self.me {
            self.r.download = Value::Int(self.me as i64);
            if self.need() == 0 {
                self.r.commit = self.r.len();
            }
            self.send_others("StartView", rec(&[("len", self.r.len()), ("view", self.r.view)]));
        } else if self.r.len() > 0 {
            let payload = rec(&[("n", self.r.len()), ("view", self.r.view)]);
            self.send(self.master(), "PrepareOk", payload);
        }
    }

    fn deliver(&mut self, e: &Event) {
        let from = e.src.actor().map(|a| a.index());
        let view = field(e, "view");
        let same_view = view == self.r.view;
        match (&*e.kind, from) {
            ("Request", None) => {
                if self.master() != self.me || !self.r.normal() || self.r.commit != self.r.len() {
                    return;
                }
                let entry = rec(&[("q", field(e, "q")), ("v", self.r.view)]);
                self.r.log.push(entry.clone());
                let payload = Value::record([
                    ("entry", entry),
                    ("n", Value::Int(self.r.len())),
                    ("view", Value::Int(self.r.view)),
                ]);
                self.send_others("Prepare", payload);
                if self.need() == 0 || self.model.variant == VrModelVariant::CommitWithoutQuorum {
                    self.r.commit = self.r.len();
                }
            }
            ("Timeout", None) => {
                self.new_view(self.r.view + 1);
                self.svc_quorum();
            }
            ("Prepare", Some(_)) => {
                if same_view && self.r.normal() && self.master() != self.me && field(e, "n") == self.r.len() + 1 {
                    self.r.log.push(e.payload.get("entry").cloned().unwrap_or(Value::Nil));
                    let payload = rec(&[("n", self.r.len()), ("view", view)]);
                    self.send(self.master(), "PrepareOk", payload);
                }
            }
            ("PrepareOk", Some(src)) => {
                if !same_view || !self.r.normal() || self.master() != self.me {
                    return;
                }
                let n = field(e, "n");
                if n <= self.r.commit {
                    self.send(src, "Commit", rec(&[("commit", n), ("view", view)]));
                } else if n == self.r.len() {
                    self.r.votes.insert(Value::Int(src as i64));
                    if self.r.votes.len() >= self.need() {
                        self.r.commit = n;
                        for voter in std::mem::take(&mut self.r.votes) {
                            let to = voter.as_int().unwrap_or(0) as usize;
                            self.send(to, "Commit", rec(&[("commit", n), ("view", view)]));
                        }
                    }
                }
            }
            ("Commit", Some(_)) => {
                if same_view && self.r.normal() {
                    self.r.commit = self.r.commit.max(field(e, "commit").min(self.r.len()));
                }
            }
            ("StartViewChange", Some(src)) => {
                if view > self.r.view {
                    self.new_view(view);
                } else if !(same_view && !self.r.normal() && !self.r.phase2) {
                    return;
                }
                self.r.votes.insert(Value::Int(src as i64));
                self.svc_quorum();
            }
            ("DoViewChange", Some(src)) => {
                if master_of(view, self.n()) as usize != self.me {
                    return;
                }
                if view > self.r.view {
                    self.new_view(view);
                } else if !(same_view && !self.r.normal() && self.r.deciding()) {
                    return;
                }
                self.r.votes.insert(rec(&[
                    ("lastview", field(e, "lastview")),
                    ("len", field(e, "len")),
                    ("r", src as i64),
                ]));
                self.dvc_quorum();
            }
            ("StartView", Some(src)) => {
                if view > self.r.view || (same_view && !self.r.normal()) {
                    self.r.status = "ViewChange";
                    self.r.view = view;
                    self.r.phase2 = true;
                    self.r.votes.clear();
                    self.r.download = Value::Int(src as i64);
                    self.download_from(field(e, "len"));
                }
            }
            ("CatchupQuery", Some(src)) => {
                let pos = field(e, "pos");
                if same_view && 0 <= pos && pos < self.r.len() {
                    let payload = Value::record([
                        ("entry", self.r.log[pos as usize].clone()),
                        ("last", Value::Bool(pos + 1 == self.r.len())),
                        ("pos", Value::Int(pos)),
                        ("view", Value::Int(view)),
                    ]);
                    self.send(src, "CatchupReply", payload);
                }
            }
            ("CatchupReply", Some(src)) => {
                let pos = field(e, "pos");
                if !same_view || self.r.normal() || self.r.download != Value::Int(src as i64) || self.r.catchup != pos {
                    return;
                }
                self.r.log.truncate(pos as usize);
                self.r.log.push(e.payload.get("entry").cloned().unwrap_or(Value::Nil));
                self.r.catchup = pos + 1;
                if e.payload.get("last") == Some(&Value::Bool(true)) {
                    self.become_normal();
                } else {
                    self.send(src, "CatchupQuery", rec(&[("pos", pos + 1), ("view", view)]));
                }
            }
            _ => {}
        }
    }
}

impl VrModel {
    pub fn new(bounds: VrBounds) -> Self {
        VrModel { bounds, variant: VrModelVariant::Correct }
    }

    pub fn buggy(bounds: VrBounds) -> Self {
        VrModel { bounds, variant: VrModelVariant::CommitWithoutQuorum }
    }

    fn ids(&self) -> impl Iterator<Item = ActorId> {
        (0..self.bounds.replicas).map(ActorId)
    }

    fn apply(&self, state: &mut ModelState, e: &Event) {
        let Some(id) = e.dst.actor() else { return };
        let me = id.index();
        let mut step = Step { model: self, me, r: Rep::from_value(&state.actors[me]), out: Vec::new() };
        step.deliver(e);
        state.actors[me] = step.r.to_value();
        state.events.extend(step.out);
    }

    /// Delivering `e` is a transition iff its receiver acts on it. A
    /// `Prepare` from an older view is also consumed, so that rejecting it
    /// is observable; every other ignored event stays pending.
    fn deliverable(&self, s: &ModelState, e: &Event) -> bool {
        let Some(id) = e.dst.actor() else { return false };
        let me = id.index();
        let r = Rep::from_value(&s.actors[me]);
        if &*e.kind == "Prepare" && field(e, "view") < r.view {
            return true;
        }
        let mut step = Step { model: self, me, r, out: Vec::new() };
        step.deliver(e);
        !step.out.is_empty() || step.r.to_value() != s.actors[me]
    }

    fn logs(s: &ModelState) -> Vec<(Vec<Value>, i64)> {
        s.actors
            .iter()
            .map(|a| {
                let r = Rep::from_value(a);
                (r.log, r.commit)
            })
            .collect()
    }
}

impl Model for VrModel {
    fn name(&self) -> &str {
        match self.variant {
            VrModelVariant::Correct => "vr",
            VrModelVariant::CommitWithoutQuorum => "vr-commit-without-quorum",
        }
    }

    fn bounds(&self) -> Bounds {
        self.bounds.to_bounds()
    }

    fn init(&self) -> ModelState {
        let actors = self.ids().map(|id| Rep::init(id.index()).to_value()).collect();
        ModelState::new(actors, Value::record([("queriesCount", Value::Int(0))]))
    }

    fn enabled_actions(&self, s: &ModelState) -> Vec<Action> {
        let mut out = Vec::new();
        let queries = s.env_int("queriesCount");
        if queries < self.bounds.max_queries {
            for id in self.ids() {
                let r = Rep::from_value(&s.actors[id.index()]);
                let master = master_of(r.view, self.bounds.replicas) == id.0;
                if master && r.normal() && r.commit == r.len() {
                    let event = Action::external("Request", id, rec(&[("q", queries + 1)]));
                    out.push(Action::Fire { event });
                }
            }
        }
        for id in self.ids() {
            let view = s.actors[id.index()].get("viewNumber").and_then(Value::as_int).unwrap_or(0);
            if view < self.bounds.max_views {
                out.push(Action::Fire { event: Action::external("Timeout", id, Value::Nil) });
            }
        }
        out.extend(s.events.iter().filter(|e| self.deliverable(s, e)).cloned().map(Action::deliver));
        out
    }

    fn successor(&self, s: &ModelState, action: &Action) -> ModelState {
        let mut next = s.clone();
        match action {
            Action::Fire { event } => {
                if &*event.kind == "Request" {
                    let q = next.env_int("queriesCount");
                    next.set_env("queriesCount", Value::Int(q + 1));
                }
                self.apply(&mut next, event);
            }
            Action::Deliver { event } => {
                next.events.remove(event);
                self.apply(&mut next, event);
            }
            other => unreachable!("the replication model has no {:?} actions", other.kind()),
        }
        next
    }

    fn check_invariants(&self, s: &ModelState) -> Vec<InvariantViolation> {
        let mut out = Vec::new();
        let logs = Self::logs(s);
        for (i, (log, commit)) in logs.iter().enumerate() {
            if *commit < 0 || *commit > log.len() as i64 {
                out.push(InvariantViolation::new(
                    "CommitWithinLog",
                    format!("replica {i} has commit number {commit} but {} entries", log.len()),
                ));
            }
        }
        for (i, (li, ci)) in logs.iter().enumerate() {
            for (j, (lj, cj)) in logs.iter().enumerate().skip(i + 1) {
                let c = (*ci).min(*cj).clamp(0, li.len().min(lj.len()) as i64) as usize;
                if li[..c] != lj[..c] {
                    out.push(InvariantViolation::new(
                        "PrefixLogConsistency",
                        format!("replicas {i} and {j} disagree on their first {c} committed entries"),
                    ));
                }
            }
        }
        out
    }

    fn quiescent_progress(&self, s: &ModelState) -> Option<Vec<String>> {
        let mut problems = Vec::new();
        if s.env_int("queriesCount") != self.bounds.max_queries {
            problems.push(format!("only {} of {} queries issued", s.env_int("queriesCount"), self.bounds.max_queries));
        }
        let reps: Vec<Rep> = s.actors.iter().map(Rep::from_value).collect();
        for (i, r) in reps.iter().enumerate() {
            if !r.normal() {
                problems.push(format!("replica {i} is stuck in {}", r.status));
            }
            if r.commit != r.len() {
                problems.push(format!("replica {i} committed {} of {} entries", r.commit, r.len()));
            }
            if r.log != reps[0].log {
                problems.push(format!("replica {i} has a different log from replica 0"));
            }
        }
        Some(problems)
    }
}
