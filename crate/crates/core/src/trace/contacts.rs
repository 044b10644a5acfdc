use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::Point;

use super::{EventKind, NodeId, Trace, TraceEvent, TraceKind};

/// Turns a position trace into a contact trace: two co-present nodes are in
/// contact while their distance is `<= range`. Pairs are re-evaluated only
/// when one of them reports a position; a departing node drops all its
/// contacts at its leave time.
pub fn derive_contacts(trace: &Trace, range: f64) -> Result<Trace> {
    let events = sweep(trace, range, false)?;
    Trace::new(
        TraceKind::Contact,
        events
            .into_iter()
            .map(|e| match e.kind {
                EventKind::Enter { node, .. } => TraceEvent::new(e.time, EventKind::Enter { node, pos: None }),
                _ => e,
            })
            .collect(),
        Some(trace.meta().bounds),
        Some(trace.meta().duration),
    )
}

/// Same as [`derive_contacts`] but keeps the original `Enter` coordinates and
/// `Position` events interleaved with the derived contact events. The result
/// is the stream the engine consumes for position-based scenarios; it is not
/// a valid contact [`Trace`] on its own.
pub fn derive_contacts_with_positions(trace: &Trace, range: f64) -> Result<Vec<TraceEvent>> {
    sweep(trace, range, true)
}

type Cell = (i64, i64);

struct Geo {
    pos: Point,
    cell: Cell,
    contacts: BTreeSet<NodeId>,
}

struct Grid {
    cell_size: f64,
    cells: HashMap<Cell, Vec<NodeId>>,
}

impl Grid {
    fn cell(&self, p: &Point) -> Cell {
        (
            (p.x / self.cell_size).floor() as i64,
            (p.y / self.cell_size).floor() as i64,
        )
    }

    fn insert(&mut self, cell: Cell, n: NodeId) {
        self.cells.entry(cell).or_default().push(n);
    }

    fn remove(&mut self, cell: Cell, n: NodeId) {
        if let Some(v) = self.cells.get_mut(&cell) {
            if let Some(i) = v.iter().position(|&m| m == n) {
                v.swap_remove(i);
            }
            if v.is_empty() {
                self.cells.remove(&cell);
            }
        }
    }
}

fn sweep(trace: &Trace, range: f64, keep_positions: bool) -> Result<Vec<TraceEvent>> {
    if trace.kind() != TraceKind::Position {
        return Err(Error::InvalidTrace(
            "contact derivation needs a position trace".into(),
        ));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::Config(format!("contact range must be positive, got {range}")));
    }
    let range2 = range * range;
    let mut grid = Grid {
        cell_size: range,
        cells: HashMap::new(),
    };
    let mut geo: HashMap<NodeId, Geo> = HashMap::new();
    let mut out = Vec::with_capacity(trace.events().len());
    let events = trace.events();

    let mut i = 0;
    while i < events.len() {
        let time = events[i].time;
        let mut j = i;
        while j < events.len() && events[j].time == time {
            j += 1;
        }
        let batch = &events[i..j];
        let mut group: Vec<TraceEvent> = Vec::new();
        let mut moved: Vec<NodeId> = Vec::new();
        let mut leaving: Vec<NodeId> = Vec::new();

        for ev in batch {
            match ev.kind {
                EventKind::Enter { node, pos } => {
                    let pos = pos.expect("validated position trace");
                    let cell = grid.cell(&pos);
                    grid.insert(cell, node);
                    geo.insert(
                        node,
                        Geo {
                            pos,
                            cell,
                            contacts: BTreeSet::new(),
                        },
                    );
                    moved.push(node);
                    group.push(*ev);
                }
                EventKind::Position { node, pos } => {
                    let g = geo.get_mut(&node).expect("validated position trace");
                    let cell = grid.cell(&pos);
                    if cell != g.cell {
                        grid.remove(g.cell, node);
                        grid.insert(cell, node);
                        g.cell = cell;
                    }
                    g.pos = pos;
                    moved.push(node);
                    if keep_positions {
                        group.push(*ev);
                    }
                }
                EventKind::Leave { node } => {
                    leaving.push(node);
                    group.push(*ev);
                }
                EventKind::ContactUp { .. } | EventKind::ContactDown { .. } => {
                    unreachable!("position traces carry no contacts")
                }
            }
        }

        for &node in &leaving {
            let g = geo.remove(&node).expect("validated position trace");
            grid.remove(g.cell, node);
            for other in g.contacts {
                if let Some(o) = geo.get_mut(&other) {
                    o.contacts.remove(&node);
                }
                group.push(TraceEvent::new(time, EventKind::contact_down(node, other)));
            }
        }

        for &node in &moved {
            let Some(g) = geo.get(&node) else { continue };
            let (pos, (cx, cy)) = (g.pos, g.cell);
            let mut ups = Vec::new();
            let mut downs = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(members) = grid.cells.get(&(cx + dx, cy + dy)) else {
                        continue;
                    };
                    for &other in members {
                        if other == node || g.contacts.contains(&other) {
                            continue;
                        }
                        if geo[&other].pos.dist2(&pos) <= range2 {
                            ups.push(other);
                        }
                    }
                }
            }
            for &other in &g.contacts {
                if geo[&other].pos.dist2(&pos) > range2 {
                    downs.push(other);
                }
            }
            for other in ups {
                link(&mut geo, node, other, true);
                group.push(TraceEvent::new(time, EventKind::contact_up(node, other)));
            }
            for other in downs {
                link(&mut geo, node, other, false);
                group.push(TraceEvent::new(time, EventKind::contact_down(node, other)));
            }
        }

        group.sort_by(|a, b| a.canonical_cmp(b));
        out.extend(group);
        i = j;
    }
    Ok(out)
}

fn link(geo: &mut HashMap<NodeId, Geo>, a: NodeId, b: NodeId, up: bool) {
    for (x, y) in [(a, b), (b, a)] {
        let g = geo.get_mut(&x).expect("both ends present");
        if up {
            g.contacts.insert(y);
        } else {
            g.contacts.remove(&y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::parse_trace;

    fn contacts_of(text: &str, range: f64) -> Vec<(f64, EventKind)> {
        let t = parse_trace(text, TraceKind::Position).unwrap();
        derive_contacts(&t, range)
            .unwrap()
            .events()
            .iter()
            .filter(|e| matches!(e.kind, EventKind::ContactUp { .. } | EventKind::ContactDown { .. }))
            .map(|e| (e.time, e.kind))
            .collect()
    }

    #[test]
    fn distance_at_threshold_is_in_range() {
        let c = contacts_of("0 ENTER 1 0 0\n0 ENTER 2 0 100\n", 100.0);
        assert_eq!(c, vec![(0.0, EventKind::contact_up(NodeId(1), NodeId(2)))]);
    }

    #[test]
    fn just_beyond_threshold_is_out_of_range() {
        let c = contacts_of("0 ENTER 1 0 0\n0 ENTER 2 0 100.01\n", 100.0);
        assert!(c.is_empty());
    }

    #[test]
    fn leave_drops_contact_at_leave_time() {
        let c = contacts_of("0 ENTER 1 0 0\n0 ENTER 2 10 0\n7 LEAVE 2\n", 100.0);
        assert_eq!(
            c,
            vec![
                (0.0, EventKind::contact_up(NodeId(1), NodeId(2))),
                (7.0, EventKind::contact_down(NodeId(1), NodeId(2))),
            ]
        );
    }

    #[test]
    fn simultaneous_moves_are_evaluated_together() {
        // Both nodes move apart at t=1; evaluating them one at a time would
        // produce a spurious up/down glitch.
        let text = "0 ENTER 1 0 0\n0 ENTER 2 500 0\n1 POS 1 300 0\n1 POS 2 800 0\n2 POS 2 350 0\n";
        let c = contacts_of(text, 100.0);
        assert_eq!(c, vec![(2.0, EventKind::contact_up(NodeId(1), NodeId(2)))]);
    }

    #[test]
    fn keeps_positions_when_asked() {
        let t = parse_trace("0 ENTER 1 0 0\n1 POS 1 5 5\n", TraceKind::Position).unwrap();
        let with = derive_contacts_with_positions(&t, 100.0).unwrap();
        assert!(with.iter().any(|e| matches!(e.kind, EventKind::Position { .. })));
        let without = derive_contacts(&t, 100.0).unwrap();
        assert!(!without.events().iter().any(|e| matches!(e.kind, EventKind::Position { .. })));
    }

    #[test]
    fn rejects_contact_input() {
        let t = parse_trace("0 ENTER 1\n", TraceKind::Contact).unwrap();
        assert!(derive_contacts(&t, 100.0).is_err());
    }
}
