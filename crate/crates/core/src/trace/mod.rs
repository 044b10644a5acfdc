//! Mobility and contact traces.
//!
//! A trace is a time-ordered list of [`TraceEvent`]s for a population of
//! nodes. Position traces carry `Enter`/`Position`/`Leave` events; contact
//! traces carry `Enter`/`Leave` plus `ContactUp`/`ContactDown` for unordered
//! node pairs. Both are validated on construction, see [`Trace::new`].

mod contacts;
mod format;
mod rwp;
mod stats;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Point, Rect};

pub use contacts::{derive_contacts, derive_contacts_with_positions};
pub use format::{detect_format, load_trace, parse_trace, write_trace};
pub use rwp::{generate_rwp, RwpParams};
pub use stats::{ccdf, trace_stats, TraceStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Position,
    Contact,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceKind::Position => "position",
            TraceKind::Contact => "contact",
        })
    }
}

impl std::str::FromStr for TraceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "position" => Ok(TraceKind::Position),
            "contact" => Ok(TraceKind::Contact),
            other => Err(Error::Config(format!("unknown trace format `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    /// Coordinates are present in position traces and absent in contact traces.
    Enter { node: NodeId, pos: Option<Point> },
    Leave { node: NodeId },
    Position { node: NodeId, pos: Point },
    /// `a < b` always; see [`EventKind::contact_up`].
    ContactUp { a: NodeId, b: NodeId },
    ContactDown { a: NodeId, b: NodeId },
}

impl EventKind {
    pub fn contact_up(a: NodeId, b: NodeId) -> EventKind {
        let (a, b) = ordered(a, b);
        EventKind::ContactUp { a, b }
    }

    pub fn contact_down(a: NodeId, b: NodeId) -> EventKind {
        let (a, b) = ordered(a, b);
        EventKind::ContactDown { a, b }
    }

    /// Tie-break rank at equal timestamps: arrivals first, then movement,
    /// then contact changes (down before up), departures last.
    pub fn rank(&self) -> u8 {
        match self {
            EventKind::Enter { .. } => 0,
            EventKind::Position { .. } => 1,
            EventKind::ContactDown { .. } => 2,
            EventKind::ContactUp { .. } => 3,
            EventKind::Leave { .. } => 4,
        }
    }

    pub fn nodes(&self) -> (NodeId, Option<NodeId>) {
        match *self {
            EventKind::Enter { node, .. }
            | EventKind::Leave { node }
            | EventKind::Position { node, .. } => (node, None),
            EventKind::ContactUp { a, b } | EventKind::ContactDown { a, b } => (a, Some(b)),
        }
    }
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEvent {
    /// Seconds since the start of the trace.
    pub time: f64,
    pub kind: EventKind,
}

impl TraceEvent {
    pub fn new(time: f64, kind: EventKind) -> Self {
        TraceEvent { time, kind }
    }

    /// Total order used for canonical sorting.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.rank().cmp(&other.kind.rank()))
            .then(self.kind.nodes().cmp(&other.kind.nodes()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub bounds: Rect,
    pub duration: f64,
    pub node_count: usize,
    pub kind: TraceKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    meta: TraceMeta,
    events: Vec<TraceEvent>,
}

impl Trace {
    /// Sorts `events` canonically and validates them against `kind`.
    ///
    /// `bounds`/`duration` default to the bounding box of all positions and
    /// the last event time. Line numbers in errors are 1-based event indices
    /// of the input order; [`parse_trace`] maps them back to file lines.
    pub fn new(
        kind: TraceKind,
        events: Vec<TraceEvent>,
        bounds: Option<Rect>,
        duration: Option<f64>,
    ) -> Result<Trace> {
        let lines: Vec<usize> = (1..=events.len()).collect();
        Trace::with_lines(kind, events, &lines, bounds, duration)
    }

    pub(crate) fn with_lines(
        kind: TraceKind,
        events: Vec<TraceEvent>,
        lines: &[usize],
        bounds: Option<Rect>,
        duration: Option<f64>,
    ) -> Result<Trace> {
        debug_assert_eq!(events.len(), lines.len());
        let mut previous = 0.0f64;
        for (ev, &line) in events.iter().zip(lines) {
            if !ev.time.is_finite() || ev.time < 0.0 {
                return Err(Error::Parse {
                    line,
                    msg: format!("invalid time {}", ev.time),
                });
            }
            if ev.time < previous {
                return Err(Error::Ordering {
                    line,
                    time: ev.time,
                    previous,
                });
            }
            previous = ev.time;
        }

        let mut indexed: Vec<(TraceEvent, usize)> =
            events.into_iter().zip(lines.iter().copied()).collect();
        indexed.sort_by(|x, y| x.0.canonical_cmp(&y.0));

        let bounds = match bounds {
            Some(b) => b,
            None => Rect::bounding(indexed.iter().filter_map(|(e, _)| match e.kind {
                EventKind::Enter { pos, .. } => pos,
                EventKind::Position { pos, .. } => Some(pos),
                _ => None,
            }).collect::<Vec<_>>().iter())
            .unwrap_or(Rect::sized(0.0, 0.0)),
        };

        let node_count = validate(kind, &indexed, &bounds)?;
        let last = indexed.last().map_or(0.0, |(e, _)| e.time);
        let duration = duration.unwrap_or(last);
        if duration < last {
            return Err(Error::InvalidTrace(format!(
                "duration {duration} precedes last event at {last}"
            )));
        }

        Ok(Trace {
            meta: TraceMeta {
                bounds,
                duration,
                node_count,
                kind,
            },
            events: indexed.into_iter().map(|(e, _)| e).collect(),
        })
    }

    pub fn empty(kind: TraceKind, bounds: Rect, duration: f64) -> Trace {
        Trace {
            meta: TraceMeta {
                bounds,
                duration,
                node_count: 0,
                kind,
            },
            events: Vec::new(),
        }
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn kind(&self) -> TraceKind {
        self.meta.kind
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceEvent> {
        self.events.iter()
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }

    /// Presence interval `[enter, leave)` of every node; `leave` is `None`
    /// for nodes still present when the trace ends.
    pub fn presence(&self) -> BTreeMap<NodeId, (f64, Option<f64>)> {
        let mut out = BTreeMap::new();
        for ev in &self.events {
            match ev.kind {
                EventKind::Enter { node, .. } => {
                    out.insert(node, (ev.time, None));
                }
                EventKind::Leave { node } => {
                    if let Some(p) = out.get_mut(&node) {
                        p.1 = Some(ev.time);
                    }
                }
                _ => {}
            }
        }
        out
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a TraceEvent;
    type IntoIter = std::slice::Iter<'a, TraceEvent>;
    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Presence {
    Present,
    Left,
}

/// Checks the per-node and per-pair invariants on canonically sorted events,
/// returning the number of distinct nodes.
fn validate(kind: TraceKind, events: &[(TraceEvent, usize)], bounds: &Rect) -> Result<usize> {
    let mut nodes: BTreeMap<NodeId, Presence> = BTreeMap::new();
    let mut up: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut degree: BTreeMap<NodeId, usize> = BTreeMap::new();

    let present = |nodes: &BTreeMap<NodeId, Presence>, node: NodeId, line: usize| -> Result<()> {
        match nodes.get(&node) {
            Some(Presence::Present) => Ok(()),
            Some(Presence::Left) => Err(Error::Orphan {
                line,
                node,
                msg: "event after LEAVE".into(),
            }),
            None => Err(Error::Orphan {
                line,
                node,
                msg: "node never entered".into(),
            }),
        }
    };
    let in_bounds = |pos: &Point, line: usize| -> Result<()> {
        if pos.x.is_finite() && pos.y.is_finite() && bounds.contains(pos) {
            Ok(())
        } else {
            Err(Error::Parse {
                line,
                msg: format!("position ({}, {}) outside bounds", pos.x, pos.y),
            })
        }
    };

    for (ev, line) in events {
        let line = *line;
        match ev.kind {
            EventKind::Enter { node, pos } => {
                if nodes.contains_key(&node) {
                    return Err(Error::Orphan {
                        line,
                        node,
                        msg: "node id entered twice".into(),
                    });
                }
                match (kind, pos) {
                    (TraceKind::Position, Some(p)) => in_bounds(&p, line)?,
                    (TraceKind::Position, None) => {
                        return Err(Error::Parse {
                            line,
                            msg: "ENTER requires coordinates in a position trace".into(),
                        })
                    }
                    (TraceKind::Contact, Some(_)) => {
                        return Err(Error::Parse {
                            line,
                            msg: "ENTER carries no coordinates in a contact trace".into(),
                        })
                    }
                    (TraceKind::Contact, None) => {}
                }
                nodes.insert(node, Presence::Present);
            }
            EventKind::Leave { node } => {
                present(&nodes, node, line)?;
                if degree.get(&node).copied().unwrap_or(0) > 0 {
                    return Err(Error::InvalidTrace(format!(
                        "line {line}: node {node} leaves with contacts still up"
                    )));
                }
                nodes.insert(node, Presence::Left);
            }
            EventKind::Position { node, pos } => {
                if kind == TraceKind::Contact {
                    return Err(Error::Parse {
                        line,
                        msg: "POS line in a contact trace".into(),
                    });
                }
                present(&nodes, node, line)?;
                in_bounds(&pos, line)?;
            }
            EventKind::ContactUp { a, b } | EventKind::ContactDown { a, b } => {
                let is_up = matches!(ev.kind, EventKind::ContactUp { .. });
                if kind == TraceKind::Position {
                    return Err(Error::Parse {
                        line,
                        msg: "contact line in a position trace".into(),
                    });
                }
                if a == b {
                    return Err(Error::Parse {
                        line,
                        msg: format!("self-contact on node {a}"),
                    });
                }
                present(&nodes, a, line)?;
                present(&nodes, b, line)?;
                if is_up {
                    if !up.insert((a, b)) {
                        return Err(Error::InvalidTrace(format!(
                            "line {line}: contact {a}-{b} is already up"
                        )));
                    }
                    *degree.entry(a).or_default() += 1;
                    *degree.entry(b).or_default() += 1;
                } else {
                    if !up.remove(&(a, b)) {
                        return Err(Error::InvalidTrace(format!(
                            "line {line}: contact {a}-{b} goes down without being up"
                        )));
                    }
                    *degree.get_mut(&a).expect("degree tracked") -= 1;
                    *degree.get_mut(&b).expect("degree tracked") -= 1;
                }
            }
        }
    }
    Ok(nodes.len())
}
