use std::collections::BTreeSet;

use super::{master_of, quorum_others, Mutation, NONE};
use crate::actor::{
    Actor, ActorContext, ActorFailure, ActorId, DecodeError, Endpoint, Message, OperationRequest,
};
use crate::value::Value;

/// Log entry: client query id and the view it was appended in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Entry {
    pub q: i64,
    pub v: i64,
}

impl Entry {
    fn to_value(self) -> Value {
        Value::record([("q", Value::Int(self.q)), ("v", Value::Int(self.v))])
    }

    fn from_value(v: &Value) -> Option<Entry> {
        Some(Entry { q: v.get("q")?.as_int()?, v: v.get("v")?.as_int()? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Normal,
    ViewChange,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Normal => "Normal",
            Status::ViewChange => "ViewChange",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VrMsg {
    Request { q: i64 },
    Prepare { view: i64, n: i64, entry: Entry },
    PrepareOk { view: i64, n: i64 },
    Commit { view: i64, commit: i64 },
    Timeout,
    StartViewChange { view: i64 },
    DoViewChange { view: i64, len: i64, lastview: i64 },
    StartView { view: i64, len: i64 },
    CatchupQuery { view: i64, pos: i64 },
    CatchupReply { view: i64, pos: i64, entry: Entry, last: bool },
}

impl Message for VrMsg {
    fn kind(&self) -> &'static str {
        match self {
            VrMsg::Request { .. } => "Request",
            VrMsg::Prepare { .. } => "Prepare",
            VrMsg::PrepareOk { .. } => "PrepareOk",
            VrMsg::Commit { .. } => "Commit",
            VrMsg::Timeout => "Timeout",
            VrMsg::StartViewChange { .. } => "StartViewChange",
            VrMsg::DoViewChange { .. } => "DoViewChange",
            VrMsg::StartView { .. } => "StartView",
            VrMsg::CatchupQuery { .. } => "CatchupQuery",
            VrMsg::CatchupReply { .. } => "CatchupReply",
        }
    }

    fn to_model(&self) -> Value {
        let int = |name, i: i64| (name, Value::Int(i));
        match *self {
            VrMsg::Request { q } => Value::record([int("q", q)]),
            VrMsg::Prepare { view, n, entry } => {
                Value::record([("entry", entry.to_value()), int("n", n), int("view", view)])
            }
            VrMsg::PrepareOk { view, n } => Value::record([int("n", n), int("view", view)]),
            VrMsg::Commit { view, commit } => Value::record([int("commit", commit), int("view", view)]),
            VrMsg::Timeout => Value::Nil,
            VrMsg::StartViewChange { view } => Value::record([int("view", view)]),
            VrMsg::DoViewChange { view, len, lastview } => {
                Value::record([int("lastview", lastview), int("len", len), int("view", view)])
            }
            VrMsg::StartView { view, len } => Value::record([int("len", len), int("view", view)]),
            VrMsg::CatchupQuery { view, pos } => Value::record([int("pos", pos), int("view", view)]),
            VrMsg::CatchupReply { view, pos, entry, last } => Value::record([
                ("entry", entry.to_value()),
                ("last", Value::Bool(last)),
                int("pos", pos),
                int("view", view),
            ]),
        }
    }

    fn from_model(kind: &str, payload: &Value) -> Result<Self, DecodeError> {
        let err = |why: &str| DecodeError::new(kind, payload, why);
        let int = |name: &str| {
            payload.get(name).and_then(Value::as_int).ok_or_else(|| err(&format!("missing integer {name}")))
        };
        let entry = || payload.get("entry").and_then(Entry::from_value).ok_or_else(|| err("missing entry"));
        let flag = |name: &str| {
            payload.get(name).and_then(Value::as_bool).ok_or_else(|| err(&format!("missing boolean {name}")))
        };
        Ok(match kind {
            "Request" => VrMsg::Request { q: int("q")? },
            "Prepare" => VrMsg::Prepare { view: int("view")?, n: int("n")?, entry: entry()? },
            "PrepareOk" => VrMsg::PrepareOk { view: int("view")?, n: int("n")? },
            "Commit" => VrMsg::Commit { view: int("view")?, commit: int("commit")? },
            "Timeout" => VrMsg::Timeout,
            "StartViewChange" => VrMsg::StartViewChange { view: int("view")? },
            "DoViewChange" => {
                VrMsg::DoViewChange { view: int("view")?, len: int("len")?, lastview: int("lastview")? }
            }
            "StartView" => VrMsg::StartView { view: int("view")?, len: int("len")? },
            "CatchupQuery" => VrMsg::CatchupQuery { view: int("view")?, pos: int("pos")? },
            "CatchupReply" => VrMsg::CatchupReply {
                view: int("view")?,
                pos: int("pos")?,
                entry: entry()?,
                last: flag("last")?,
            },
            _ => return Err(err("unknown kind")),
        })
    }
}

/// One vote in a running count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Vote {
    /// `StartViewChange` or `PrepareOk` from a replica.
    From(u16),
    /// `DoViewChange` with the sender's log summary.
    Log { r: u16, len: i64, lastview: i64 },
}

impl Vote {
    fn to_value(self) -> Value {
        match self {
            Vote::From(r) => Value::Int(r as i64),
            Vote::Log { r, len, lastview } => Value::record([
                ("lastview", Value::Int(lastview)),
                ("len", Value::Int(len)),
                ("r", Value::Int(r as i64)),
            ]),
        }
    }
}

type Out = Vec<OperationRequest<VrMsg>>;

/// A replication replica. `log`, `view` and `commit` are persistent; the
/// rest is volatile.
#[derive(Debug, Clone)]
pub struct VrReplica {
    id: u16,
    replicas: u16,
    mutation: Option<Mutation>,
    log: Vec<Entry>,
    view: i64,
    commit: usize,
    status: Status,
    /// Replica whose log is being downloaded; `None` while a new master is
    /// still collecting `DoViewChange` votes.
    download: Option<u16>,
    catchup_pos: usize,
    phase2: bool,
    votes: BTreeSet<Vote>,
}

impl VrReplica {
    pub fn new(id: ActorId, replicas: u16, mutation: Option<Mutation>) -> Self {
        VrReplica {
            id: id.0,
            replicas,
            mutation,
            log: Vec::new(),
            view: 0,
            commit: 0,
            status: Status::Normal,
            download: Some(id.0),
            catchup_pos: 0,
            phase2: false,
            votes: BTreeSet::new(),
        }
    }

    pub fn log(&self) -> &[Entry] {
        &self.log
    }

    pub fn view(&self) -> i64 {
        self.view
    }

    pub fn commit(&self) -> usize {
        self.commit
    }

    pub fn status(&self) -> Status {
        self.status
    }

    fn bug(&self, m: Mutation) -> bool {
        self.mutation == Some(m)
    }

    fn is_master(&self) -> bool {
        master_of(self.view, self.replicas) == self.id
    }

    fn master(&self) -> ActorId {
        ActorId(master_of(self.view, self.replicas))
    }

    fn others(&self) -> impl Iterator<Item = ActorId> + '_ {
        (0..self.replicas).filter(move |&r| r != self.id).map(ActorId)
    }

    fn need(&self) -> usize {
        quorum_others(self.replicas)
    }

    fn len(&self) -> i64 {
        self.log.len() as i64
    }

    fn lastview(&self) -> i64 {
        self.log.last().map_or(-1, |e| e.v)
    }

    fn broadcast(&self, out: &mut Out, msg: VrMsg) {
        out.extend(self.others().map(|r| OperationRequest::send(r, msg.clone())));
    }

    fn enter_view(&mut self, view: i64, out: &mut Out) {
        self.status = Status::ViewChange;
        self.view = view;
        self.download = None;
        self.catchup_pos = 0;
        self.phase2 = false;
        self.votes.clear();
        self.broadcast(out, VrMsg::StartViewChange { view });
    }

    fn svc_votes(&self) -> usize {
        self.votes.iter().filter(|v| matches!(v, Vote::From(_))).count()
    }

    fn dvc_votes(&self) -> usize {
        self.votes.iter().filter(|v| matches!(v, Vote::Log { .. })).count()
    }

    fn check_svc_quorum(&mut self, out: &mut Out) {
        if self.phase2 || self.svc_votes() < self.need() {
            return;
        }
        self.phase2 = true;
        self.votes.retain(|v| matches!(v, Vote::Log { .. }));
        if self.is_master() {
            self.check_dvc_quorum(out);
        } else {
            out.push(OperationRequest::send(
                self.master(),
                VrMsg::DoViewChange { view: self.view, len: self.len(), lastview: self.lastview() },
            ));
        }
    }

    fn check_dvc_quorum(&mut self, out: &mut Out) {
        if self.download.is_some() || self.dvc_votes() < self.need() {
            return;
        }
        self.phase2 = true;
        let mut best = (self.lastview(), self.len(), self.id);
        for v in &self.votes {
            if let Vote::Log { r, len, lastview } = *v {
                if (lastview, len) > (best.0, best.1) {
                    best = (lastview, len, r);
                }
            }
        }
        self.votes.clear();
        if best.2 == self.id {
            self.finish_master(out);
        } else {
            self.download = Some(best.2);
            self.start_download(best.1 as usize, out);
        }
    }

    /// Keeps the log up to the commit point (capped at `len`) and fetches
    /// the rest from the download source.
    fn start_download(&mut self, len: usize, out: &mut Out) {
        let start = self.commit.min(len);
        if start == len {
            self.log.truncate(len);
            self.commit = self.commit.min(len);
            self.finish_download(out);
        } else {
            self.catchup_pos = start;
            let src = self.download.expect("download source set");
            out.push(OperationRequest::send(
                ActorId(src),
                VrMsg::CatchupQuery { view: self.view, pos: start as i64 },
            ));
        }
    }

    fn finish_download(&mut self, out: &mut Out) {
        if self.is_master() {
            self.finish_master(out);
        } else {
            self.status = Status::Normal;
            self.catchup_pos = 0;
            if !self.log.is_empty() {
                out.push(OperationRequest::send(self.master(), VrMsg::PrepareOk { view: self.view, n: self.len() }));
            }
        }
    }

    fn finish_master(&mut self, out: &mut Out) {
        self.status = Status::Normal;
        self.download = Some(self.id);
        self.catchup_pos = 0;
        if self.need() == 0 {
            self.commit = self.log.len();
        }
        self.broadcast(out, VrMsg::StartView { view: self.view, len: self.len() });
    }

    fn on_request(&mut self, q: i64, out: &mut Out) {
        if !(self.is_master() && self.status == Status::Normal && self.commit == self.log.len()) {
            return;
        }
        let entry = Entry { q, v: self.view };
        self.log.push(entry);
        let n = self.len();
        let skip = self.bug(Mutation::DropPrepareBroadcast).then(|| self.others().last()).flatten();
        for r in self.others().filter(|&r| Some(r) != skip) {
            out.push(OperationRequest::send(r, VrMsg::Prepare { view: self.view, n, entry }));
        }
        if self.need() == 0 {
            self.commit = self.log.len();
        }
    }

    fn on_prepare(&mut self, view: i64, n: i64, entry: Entry, out: &mut Out) {
        let view_ok = if self.bug(Mutation::AcceptStalePrepare) { view <= self.view } else { view == self.view };
        if !view_ok || self.status != Status::Normal || self.is_master() || n != self.len() + 1 {
            return;
        }
        self.log.push(entry);
        out.push(OperationRequest::send(self.master(), VrMsg::PrepareOk { view: self.view, n }));
    }

    fn on_prepare_ok(&mut self, from: u16, view: i64, n: i64, out: &mut Out) {
        if view != self.view || self.status != Status::Normal || !self.is_master() {
            return;
        }
        if n <= self.commit as i64 {
            out.push(OperationRequest::send(ActorId(from), VrMsg::Commit { view, commit: n }));
        } else if n == self.len() {
            self.votes.insert(Vote::From(from));
            if self.votes.len() >= self.need() {
                if !self.bug(Mutation::SkipCommitIncrement) {
                    self.commit = self.log.len();
                }
                for voter in std::mem::take(&mut self.votes) {
                    if let Vote::From(r) = voter {
                        out.push(OperationRequest::send(ActorId(r), VrMsg::Commit { view, commit: n }));
                    }
                }
            }
        }
    }

    fn on_commit(&mut self, view: i64, commit: i64) {
        if view == self.view && self.status == Status::Normal {
            self.commit = self.commit.max((commit.max(0) as usize).min(self.log.len()));
        }
    }

    fn on_timeout(&mut self, out: &mut Out) {
        let keep = self.phase2 && self.bug(Mutation::KeepPhase2OnTimeout);
        self.enter_view(self.view + 1, out);
        self.phase2 = keep;
        self.check_svc_quorum(out);
    }

    fn on_start_view_change(&mut self, from: u16, view: i64, out: &mut Out) {
        if view > self.view {
            self.enter_view(view, out);
        } else if !(view == self.view && self.status == Status::ViewChange && !self.phase2) {
            return;
        }
        self.votes.insert(Vote::From(from));
        self.check_svc_quorum(out);
    }

    fn on_do_view_change(&mut self, from: u16, view: i64, len: i64, lastview: i64, out: &mut Out) {
        if master_of(view, self.replicas) != self.id {
            return;
        }
        if view > self.view {
            self.enter_view(view, out);
        } else if !(view == self.view && self.status == Status::ViewChange && self.download.is_none()) {
            return;
        }
        self.votes.insert(Vote::Log { r: from, len, lastview });
        self.check_dvc_quorum(out);
    }

    fn on_start_view(&mut self, from: u16, view: i64, len: i64, out: &mut Out) {
        if !(view > self.view || (view == self.view && self.status == Status::ViewChange)) {
            return;
        }
        self.status = Status::ViewChange;
        self.view = view;
        self.phase2 = true;
        self.votes.clear();
        self.download = Some(from);
        self.start_download(len as usize, out);
    }

    fn on_catchup_query(&mut self, from: u16, view: i64, pos: i64, out: &mut Out) {
        if view != self.view || pos < 0 || pos >= self.len() {
            return;
        }
        let entry = self.log[pos as usize];
        out.push(OperationRequest::send(
            ActorId(from),
            VrMsg::CatchupReply { view, pos, entry, last: pos + 1 == self.len() },
        ));
    }

    fn on_catchup_reply(&mut self, from: u16, view: i64, pos: i64, entry: Entry, last: bool, out: &mut Out) {
        if view != self.view
            || self.status != Status::ViewChange
            || self.download != Some(from)
            || self.catchup_pos as i64 != pos
        {
            return;
        }
        if !self.bug(Mutation::UnorderedCatchup) {
            self.log.truncate(self.catchup_pos);
        }
        self.log.push(entry);
        self.catchup_pos += 1;
        if last {
            self.finish_download(out);
        } else {
            out.push(OperationRequest::send(
                ActorId(from),
                VrMsg::CatchupQuery { view, pos: self.catchup_pos as i64 },
            ));
        }
    }
}

impl Actor for VrReplica {
    type Msg = VrMsg;

    fn on_event(&mut self, ctx: &ActorContext, from: Endpoint, msg: VrMsg) -> Result<Out, ActorFailure> {
        let mut out = Vec::new();
        let peer = from.actor().map(|a| a.0);
        let fail = |what: &str| ActorFailure { actor: ctx.id, reason: format!("{what} from {from:?}") };
        match (msg, peer) {
            (VrMsg::Request { q }, None) => self.on_request(q, &mut out),
            (VrMsg::Timeout, None) => self.on_timeout(&mut out),
            (VrMsg::Request { .. } | VrMsg::Timeout, Some(_)) => return Err(fail("client message")),
            (_, None) => return Err(fail("replica message")),
            (VrMsg::Prepare { view, n, entry, .. }, Some(_)) => self.on_prepare(view, n, entry, &mut out),
            (VrMsg::PrepareOk { view, n }, Some(r)) => self.on_prepare_ok(r, view, n, &mut out),
            (VrMsg::Commit { view, commit, .. }, Some(_)) => self.on_commit(view, commit),
            (VrMsg::StartViewChange { view }, Some(r)) => self.on_start_view_change(r, view, &mut out),
            (VrMsg::DoViewChange { view, len, lastview }, Some(r)) => {
                self.on_do_view_change(r, view, len, lastview, &mut out)
            }
            (VrMsg::StartView { view, len }, Some(r)) => self.on_start_view(r, view, len, &mut out),
            (VrMsg::CatchupQuery { view, pos }, Some(r)) => self.on_catchup_query(r, view, pos, &mut out),
            (VrMsg::CatchupReply { view, pos, entry, last }, Some(r)) => {
                self.on_catchup_reply(r, view, pos, entry, last, &mut out)
            }
        }
        Ok(out)
    }

    fn to_model(&self) -> Value {
        let mut fields = vec![
            ("catchupPos", Value::Int(self.catchup_pos as i64)),
            ("commitNumber", Value::Int(self.commit as i64)),
            ("downloadReplica", self.download.map_or(Value::str(NONE), |r| Value::Int(r as i64))),
            ("log", Value::seq(self.log.iter().map(|e| e.to_value()))),
            ("phase2", Value::Bool(self.phase2)),
            ("status", Value::str(self.status.name())),
            ("viewNumber", Value::Int(self.view)),
        ];
        if !self.votes.is_empty() {
            fields.push(("votes", Value::set(self.votes.iter().map(|v| v.to_value()))));
        }
        Value::record(fields)
    }

    fn persistent(&self) -> Value {
        Value::record([
            ("commitNumber", Value::Int(self.commit as i64)),
            ("log", Value::seq(self.log.iter().map(|e| e.to_value()))),
            ("viewNumber", Value::Int(self.view)),
        ])
    }

    fn crash(&mut self) {
        self.status = Status::Normal;
        self.download = Some(self.id);
        self.catchup_pos = 0;
        self.phase2 = false;
        self.votes.clear();
    }
}
