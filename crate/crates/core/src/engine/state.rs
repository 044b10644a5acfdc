use std::collections::{BTreeMap, BTreeSet};

use crate::time::SimTime;
use crate::trace::NodeId;
use crate::Point;

/// One content generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Message {
    pub id: usize,
    pub created_at: SimTime,
    pub expires_at: SimTime,
    pub size: u64,
}

impl Message {
    /// Fraction of the lifetime elapsed at `now`, clamped to `[0, 1]`.
    pub fn elapsed_fraction(&self, now: SimTime) -> f64 {
        let life = (self.expires_at - self.created_at).nanos() as f64;
        let done = now.saturating_sub(self.created_at).nanos() as f64;
        (done / life).clamp(0.0, 1.0)
    }

    pub fn time_left(&self, now: SimTime) -> SimTime {
        self.expires_at.saturating_sub(now)
    }
}

/// The controller's picture of the network, built only from control
/// messages that actually reached it.
///
/// `pushing` holds nodes the controller has pushed content to and that have
/// not acknowledged yet; together with `acked` it is the set the controller
/// counts as infected.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkState {
    pub subscribers: BTreeSet<NodeId>,
    pub acked: BTreeSet<NodeId>,
    pub pushing: BTreeSet<NodeId>,
    /// Entry time in seconds, as carried by the ENTER message.
    pub entry_time: BTreeMap<NodeId, f64>,
    /// Last reported position and the report's send time in seconds.
    pub last_position: BTreeMap<NodeId, (Point, f64)>,
    pub last_neighbors: BTreeMap<NodeId, (BTreeSet<NodeId>, f64)>,
}

impl NetworkState {
    pub fn is_infected(&self, n: NodeId) -> bool {
        self.acked.contains(&n) || self.pushing.contains(&n)
    }

    /// Subscribers the controller does not yet count as infected, in id order.
    pub fn candidates(&self) -> Vec<NodeId> {
        self.subscribers
            .iter()
            .copied()
            .filter(|n| !self.is_infected(*n))
            .collect()
    }

    /// Controller-infected subscribers. `acked` and `pushing` only ever
    /// hold subscribers, so this is a size sum.
    pub fn infected_count(&self) -> usize {
        self.acked.len() + self.pushing.len()
    }

    /// Controller-view infection ratio; an empty population counts as fully
    /// covered.
    pub fn ratio(&self) -> f64 {
        if self.subscribers.is_empty() {
            1.0
        } else {
            self.infected_count() as f64 / self.subscribers.len() as f64
        }
    }

    pub(crate) fn subscribe(&mut self, n: NodeId, entry: f64) {
        self.subscribers.insert(n);
        self.entry_time.insert(n, entry);
    }

    pub(crate) fn unsubscribe(&mut self, n: NodeId) {
        self.subscribers.remove(&n);
        self.acked.remove(&n);
        self.pushing.remove(&n);
        self.entry_time.remove(&n);
        self.last_position.remove(&n);
        self.last_neighbors.remove(&n);
    }

    pub(crate) fn reset_message(&mut self) {
        self.acked.clear();
        self.pushing.clear();
    }
}
