//! Viewstamped Replication with view change and one-entry-at-a-time log
//! catch-up.
//!
//! Master of view `v` is replica `v mod N`; a quorum is a majority, so a
//! master needs `N / 2` agreeing replicas besides itself. The normal case
//! runs one request at a time: a master appends only when its whole log is
//! committed. Replica variables are `status`, `log`, `viewNumber`,
//! `commitNumber`, `downloadReplica`, `catchupPos`, `phase2`, plus a `votes`
//! set that is present only while a count is in progress (with three
//! replicas every count completes on its first vote).
//!
//! Messages (payload fields in brackets):
//!
//! * `Request[q]`, fired by a client at a normal master whose log is fully
//!   committed; the master appends `(q, v)`.
//! * `Prepare[view, n, entry]` master to backups; a normal backup of the
//!   same view appends when `n = len + 1` and answers `PrepareOk`.
//! * `PrepareOk[view, n]` backup to master. `n = len > commit` is a vote;
//!   a quorum commits the log and answers every voter with `Commit`. A
//!   report with `n <= commit` is answered with `Commit[commit = n]`.
//! * `Commit[view, commit]` raises a normal backup's commit number up to
//!   its log length.
//! * `Timeout` (fired, never queued) moves a replica to the next view and
//!   sends `StartViewChange` to every other replica.
//! * `StartViewChange[view]` adopts a higher view (echoing it) or counts a
//!   vote; after `N / 2` votes the replica sets `phase2` and sends
//!   `DoViewChange` to the new master.
//! * `DoViewChange[view, len, lastview]` is counted by the new master; on
//!   quorum it picks the freshest log by (view of last entry, length),
//!   itself first, and downloads it unless it is its own.
//! * `StartView[view, len]` makes a backup download the master's log from
//!   its commit point on.
//! * `CatchupQuery[view, pos]` / `CatchupReply[view, pos, entry, last]`
//!   transfer one entry; the downloader keeps `log[..pos]` and appends.
//!
//! Finishing a download returns the replica to `Normal`. A master then
//! sends `StartView`; a backup with a non-empty log reports it with
//! `PrepareOk`.
//!
//! In the model an event is delivered only when its receiver acts on it;
//! anything else stays pending and may become deliverable later. The one
//! exception is a `Prepare` from an older view, which is consumed and
//! discarded.

mod model;
mod mutation;
mod replica;

pub use model::{VrModel, VrModelVariant};
pub use mutation::Mutation;
pub use replica::{Entry, Status, VrMsg, VrReplica};

use crate::actor::EmulatorConfig;
use crate::model::Bounds;

pub const NONE: &str = "None";

/// Exploration limits of the replication model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VrBounds {
    pub replicas: u16,
    pub max_queries: i64,
    pub max_views: i64,
}

impl Default for VrBounds {
    fn default() -> Self {
        VrBounds { replicas: 3, max_queries: 1, max_views: 1 }
    }
}

impl VrBounds {
    pub fn to_bounds(&self) -> Bounds {
        Bounds::new()
            .with("max_queries", self.max_queries)
            .with("max_views", self.max_views)
            .with("replicas", self.replicas as i64)
    }

    /// Inverse of [`VrBounds::to_bounds`].
    pub fn from_bounds(b: &Bounds) -> Option<VrBounds> {
        Some(VrBounds {
            replicas: u16::try_from(b.get("replicas")?).ok()?,
            max_queries: b.get("max_queries")?,
            max_views: b.get("max_views")?,
        })
    }

    pub fn emulator_config(&self) -> EmulatorConfig<VrReplica> {
        vr_config(self.replicas, None)
    }
}

/// Emulator configuration for `replicas` replicas, optionally all carrying
/// a seeded bug.
pub fn vr_config(replicas: u16, mutation: Option<Mutation>) -> EmulatorConfig<VrReplica> {
    EmulatorConfig::new(replicas, move |id| VrReplica::new(id, replicas, mutation))
}

/// Votes a master needs from other replicas.
pub fn quorum_others(replicas: u16) -> usize {
    replicas as usize / 2
}

pub fn master_of(view: i64, replicas: u16) -> u16 {
    (view.rem_euclid(replicas as i64)) as u16
}
