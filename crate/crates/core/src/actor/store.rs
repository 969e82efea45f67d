use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{Endpoint, Event};

/// How unprocessed events may be withdrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discipline {
    /// Any pending event may be processed next (unordered network).
    #[default]
    Set,
    /// One FIFO queue per ordered (source, destination) pair; external
    /// senders get one queue per destination. Only queue heads are
    /// withdrawable.
    FifoPairwise,
}

#[derive(Debug, Clone)]
struct Entry<M> {
    image: Event,
    msg: M,
}

/// Multiset of unprocessed events, each kept together with its model image.
///
/// Duplicates are retained so that event conservation can be checked; the
/// set projection used for state comparison is computed by [`images`].
///
/// [`images`]: EventStore::images
#[derive(Debug, Clone)]
pub struct EventStore<M> {
    discipline: Discipline,
    // Set discipline keeps a single pseudo-queue under (External, External).
    queues: BTreeMap<(Endpoint, Endpoint), VecDeque<Entry<M>>>,
    len: usize,
}

impl<M: Clone> EventStore<M> {
    pub fn new(discipline: Discipline) -> Self {
        EventStore {
            discipline,
            queues: BTreeMap::new(),
            len: 0,
        }
    }

    pub fn discipline(&self) -> Discipline {
        self.discipline
    }

    fn queue_key(&self, image: &Event) -> (Endpoint, Endpoint) {
        match self.discipline {
            Discipline::Set => (Endpoint::External, Endpoint::External),
            Discipline::FifoPairwise => (image.src, image.dst),
        }
    }

    pub fn insert(&mut self, image: Event, msg: M) {
        let key = self.queue_key(&image);
        self.queues.entry(key).or_default().push_back(Entry { image, msg });
        self.len += 1;
    }

    /// Number of stored events, counting duplicates.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, selector: &Event) -> bool {
        self.queues
            .get(&self.queue_key(selector))
            .is_some_and(|q| q.iter().any(|e| &e.image == selector))
    }

    /// True iff `selector` may be withdrawn right now.
    pub fn is_withdrawable(&self, selector: &Event) -> bool {
        let Some(q) = self.queues.get(&self.queue_key(selector)) else {
            return false;
        };
        match self.discipline {
            Discipline::Set => q.iter().any(|e| &e.image == selector),
            Discipline::FifoPairwise => q.front().is_some_and(|e| &e.image == selector),
        }
    }

    /// Removes one event equal to `selector`, honouring the discipline.
    pub fn withdraw(&mut self, selector: &Event) -> Option<M> {
        let key = self.queue_key(selector);
        let q = self.queues.get_mut(&key)?;
        let pos = match self.discipline {
            Discipline::Set => q.iter().position(|e| &e.image == selector)?,
            Discipline::FifoPairwise => {
                if q.front().is_some_and(|e| &e.image == selector) {
                    0
                } else {
                    return None;
                }
            }
        };
        let entry = q.remove(pos)?;
        if q.is_empty() {
            self.queues.remove(&key);
        }
        self.len -= 1;
        Some(entry.msg)
    }

    /// Removes every stored copy of `selector` wherever it sits; returns how
    /// many were removed.
    pub fn remove_all(&mut self, selector: &Event) -> usize {
        let key = self.queue_key(selector);
        let Some(q) = self.queues.get_mut(&key) else {
            return 0;
        };
        let before = q.len();
        q.retain(|e| &e.image != selector);
        let removed = before - q.len();
        if q.is_empty() {
            self.queues.remove(&key);
        }
        self.len -= removed;
        removed
    }

    /// Replaces the first copy of `selector` in place, keeping its queue
    /// position.
    pub fn replace(&mut self, selector: &Event, image: Event, msg: M) -> bool {
        let key = self.queue_key(selector);
        debug_assert_eq!(key, self.queue_key(&image));
        let Some(q) = self.queues.get_mut(&key) else {
            return false;
        };
        match q.iter_mut().find(|e| &e.image == selector) {
            Some(entry) => {
                *entry = Entry { image, msg };
                true
            }
            None => false,
        }
    }

    /// Set projection of the stored events (duplicates collapse).
    pub fn images(&self) -> BTreeSet<Event> {
        self.queues
            .values()
            .flat_map(|q| q.iter().map(|e| e.image.clone()))
            .collect()
    }

    /// Events that may be withdrawn right now, deduplicated.
    pub fn withdrawable(&self) -> BTreeSet<Event> {
        match self.discipline {
            Discipline::Set => self.images(),
            Discipline::FifoPairwise => self
                .queues
                .values()
                .filter_map(|q| q.front().map(|e| e.image.clone()))
                .collect(),
        }
    }
}
