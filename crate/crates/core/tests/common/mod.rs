#![allow(dead_code)]

use pushtrack::engine::{Config, Outcome, RunOutput, Scenario, TransferRecord};
use pushtrack::metrics::TransferKind;
use pushtrack::trace::{EventKind, NodeId, Trace, TraceEvent, TraceKind};
use pushtrack::Rect;

pub fn n(i: u32) -> NodeId {
    NodeId(i)
}

/// Builder for hand-written contact scenarios.
#[derive(Default)]
pub struct Contacts {
    events: Vec<TraceEvent>,
}

impl Contacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn enter(mut self, t: f64, i: u32) -> Self {
        self.events.push(TraceEvent::new(t, EventKind::Enter { node: n(i), pos: None }));
        self
    }

    pub fn leave(mut self, t: f64, i: u32) -> Self {
        self.events.push(TraceEvent::new(t, EventKind::Leave { node: n(i) }));
        self
    }

    pub fn up(mut self, t: f64, a: u32, b: u32) -> Self {
        self.events.push(TraceEvent::new(t, EventKind::contact_up(n(a), n(b))));
        self
    }

    pub fn down(mut self, t: f64, a: u32, b: u32) -> Self {
        self.events.push(TraceEvent::new(t, EventKind::contact_down(n(a), n(b))));
        self
    }

    pub fn trace(self, duration: f64) -> Trace {
        let mut events = self.events;
        events.sort_by(|a, b| a.canonical_cmp(b));
        Trace::new(TraceKind::Contact, events, Some(Rect::sized(1000.0, 1000.0)), Some(duration)).unwrap()
    }

    pub fn scenario(self, duration: f64) -> Scenario {
        Scenario::from_trace(&self.trace(duration), 100.0).unwrap()
    }
}

pub fn config() -> Config {
    Config::default()
}

pub fn completed(out: &RunOutput, kind: TransferKind) -> Vec<TransferRecord> {
    out.transfers
        .iter()
        .filter(|t| t.kind == kind && t.outcome == Outcome::Completed)
        .copied()
        .collect()
}

pub fn secs(t: pushtrack::time::SimTime) -> f64 {
    t.as_secs()
}

/// Random valid contact trace on the integer grid of `[0, horizon]`: every
/// node enters once and may leave; each co-present pair gets up to two
/// disjoint contact intervals. Integer times produce plenty of ties.
pub fn random_contacts(rng: &mut impl rand::Rng, nodes: u32, horizon: u32) -> Contacts {
    let mut c = Contacts::new();
    let mut life = Vec::new();
    for i in 0..nodes {
        let enter = rng.random_range(0..horizon / 2);
        let leave = if rng.random_bool(0.4) {
            Some(rng.random_range(enter + 1..=horizon))
        } else {
            None
        };
        c = c.enter(enter as f64, i);
        if let Some(l) = leave {
            c = c.leave(l as f64, i);
        }
        life.push((enter, leave.unwrap_or(horizon), leave.is_some()));
    }
    for a in 0..nodes {
        for b in a + 1..nodes {
            let lo = life[a as usize].0.max(life[b as usize].0);
            let hi = life[a as usize].1.min(life[b as usize].1);
            if hi <= lo || !rng.random_bool(0.35) {
                continue;
            }
            let mut t = lo;
            for _ in 0..2 {
                if t >= hi {
                    break;
                }
                let up = rng.random_range(t..hi);
                let down = rng.random_range(up + 1..=hi);
                c = c.up(up as f64, a, b);
                // a contact still up at the horizon stays open when neither node leaves
                if down < horizon || life[a as usize].2 || life[b as usize].2 {
                    c = c.down(down as f64, a, b);
                }
                t = down;
            }
        }
    }
    c
}
