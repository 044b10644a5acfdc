//! Offline baselines: the temporal reachability digraph of a message
//! window, its greedy dominating set, and the two reference pushers.

mod bitset;

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{run, Config, Policy, RunOutput, Scenario, Schedule};
use crate::error::Result;
use crate::trace::{EventKind, NodeId, TraceEvent};

use bitset::BitSet;

/// `u -> v` iff content injected at `u` could reach `v` inside the window
/// by instantaneous store-carry-forward over live contacts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachabilityDigraph {
    vertices: Vec<NodeId>,
    /// `out[i]` holds the indices reachable from vertex `i`, itself included.
    out: Vec<BitSet>,
}

impl ReachabilityDigraph {
    /// Builds a digraph from explicit edges; unknown endpoints are ignored.
    pub fn from_edges(vertices: impl IntoIterator<Item = NodeId>, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let vertices: Vec<NodeId> = vertices.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let n = vertices.len();
        let mut out: Vec<BitSet> = (0..n)
            .map(|i| {
                let mut b = BitSet::new(n);
                b.insert(i);
                b
            })
            .collect();
        for (u, v) in edges {
            if let (Ok(i), Ok(j)) = (vertices.binary_search(&u), vertices.binary_search(&v)) {
                out[i].insert(j);
            }
        }
        ReachabilityDigraph { vertices, out }
    }

    pub fn vertices(&self) -> &[NodeId] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn index(&self, n: NodeId) -> Option<usize> {
        self.vertices.binary_search(&n).ok()
    }

    /// Self-loops are implicit and reported as present.
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        match (self.index(u), self.index(v)) {
            (Some(i), Some(j)) => self.out[i].contains(j),
            _ => false,
        }
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.index(u).map_or(0, |i| self.out[i].len() - 1)
    }

    pub fn max_out_degree(&self) -> usize {
        self.out.iter().map(|b| b.len() - 1).max().unwrap_or(0)
    }

    /// All edges without the implicit self-loops, in id order.
    pub fn edges(&self) -> BTreeSet<(NodeId, NodeId)> {
        let mut out = BTreeSet::new();
        for (i, b) in self.out.iter().enumerate() {
            for j in b.iter() {
                if i != j {
                    out.insert((self.vertices[i], self.vertices[j]));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DominatingSet {
    pub members: BTreeSet<NodeId>,
}

impl DominatingSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Every vertex is a member or has an inbound edge from one.
    pub fn dominates(&self, g: &ReachabilityDigraph) -> bool {
        let mut covered = BitSet::new(g.len());
        for m in &self.members {
            match g.index(*m) {
                Some(i) => covered.union_with(&g.out[i]),
                None => return false,
            }
        }
        covered.len() == g.len()
    }
}

/// Sweeps the contact events of `[t0, t1)`.
///
/// Contacts are live on `[up, down)`. Within a connected component of the
/// live contact graph every node carries the same set of sources, so each
/// `ContactUp` merges the two components' sets; `ContactDown` at the same
/// instant is applied first and therefore never forwards.
pub fn build_reachability(events: &[TraceEvent], t0: f64, t1: f64) -> ReachabilityDigraph {
    let mut present: BTreeSet<NodeId> = BTreeSet::new();
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();

    let structural = |kind: &EventKind, present: &mut BTreeSet<NodeId>, adj: &mut BTreeMap<NodeId, BTreeSet<NodeId>>| match *kind {
        EventKind::Enter { node, .. } => {
            present.insert(node);
        }
        EventKind::Leave { node } => {
            present.remove(&node);
            adj.remove(&node);
        }
        EventKind::ContactUp { a, b } => {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        }
        EventKind::ContactDown { a, b } => {
            if let Some(s) = adj.get_mut(&a) {
                s.remove(&b);
            }
            if let Some(s) = adj.get_mut(&b) {
                s.remove(&a);
            }
        }
        EventKind::Position { .. } => {}
    };

    // State at t0, with everything stamped exactly t0 applied.
    let mut i = 0;
    while i < events.len() && events[i].time <= t0 {
        structural(&events[i].kind, &mut present, &mut adj);
        i += 1;
    }
    let window_end = events[i..].partition_point(|e| e.time < t1) + i;

    // Vertex set: present at t0 or entering before t1.
    let mut vertices: BTreeSet<NodeId> = present.clone();
    for e in &events[i..window_end] {
        if let EventKind::Enter { node, .. } = e.kind {
            vertices.insert(node);
        }
    }
    let vertices: Vec<NodeId> = vertices.into_iter().collect();
    let n = vertices.len();
    let idx = |id: NodeId| vertices.binary_search(&id).expect("vertex");

    // reach[v] = sources whose content v holds.
    let mut reach: Vec<BitSet> = vec![BitSet::new(n); n];
    for &v in &present {
        reach[idx(v)].insert(idx(v));
    }
    let mut seen = BTreeSet::new();
    for &v in &present {
        if !seen.contains(&v) {
            let comp = component(v, &adj);
            merge(&comp, &mut reach, &idx);
            seen.extend(comp);
        }
    }

    for e in &events[i..window_end] {
        structural(&e.kind, &mut present, &mut adj);
        match e.kind {
            EventKind::Enter { node, .. } => {
                let k = idx(node);
                reach[k].insert(k);
            }
            EventKind::ContactUp { a, b } => {
                // members of one live component already share their set
                if reach[idx(a)] != reach[idx(b)] {
                    let comp = component(a, &adj);
                    merge(&comp, &mut reach, &idx);
                }
            }
            _ => {}
        }
    }

    // Transpose reach into out-sets.
    let mut out: Vec<BitSet> = vec![BitSet::new(n); n];
    for (v, r) in reach.iter().enumerate() {
        for u in r.iter() {
            out[u].insert(v);
        }
    }
    ReachabilityDigraph { vertices, out }
}

fn component(start: NodeId, adj: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> Vec<NodeId> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        if let Some(ns) = adj.get(&u) {
            for &v in ns {
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
    }
    seen.into_iter().collect()
}

fn merge(comp: &[NodeId], reach: &mut [BitSet], idx: &impl Fn(NodeId) -> usize) {
    if comp.len() < 2 {
        return;
    }
    let mut all = reach[idx(comp[0])].clone();
    for &v in &comp[1..] {
        all.union_with(&reach[idx(v)]);
    }
    for &v in comp {
        reach[idx(v)].clone_from(&all);
    }
}

/// Repeatedly takes the vertex whose closed out-neighbourhood covers the
/// most uncovered vertices, ties to the lowest id.
pub fn greedy_dominating_set(g: &ReachabilityDigraph) -> DominatingSet {
    let n = g.len();
    let mut uncovered = BitSet::full(n);
    let mut members = BTreeSet::new();
    while !uncovered.is_empty() {
        let (best, _) = (0..n)
            .map(|i| (i, g.out[i].intersection_len(&uncovered)))
            .fold((0, 0), |acc, c| if c.1 > acc.1 { c } else { acc });
        members.insert(g.vertices[best]);
        uncovered.difference_with(&g.out[best]);
    }
    DominatingSet { members }
}

/// Dominating set and maximum out-degree for one message window.
pub fn plan_message(events: &[TraceEvent], t0: f64, t1: f64) -> (DominatingSet, usize) {
    let g = build_reachability(events, t0, t1);
    (greedy_dominating_set(&g), g.max_out_degree())
}

/// Push-and-track replaced by a per-message push to the dominating set.
pub fn run_oracle(config: &Config, scenario: &Scenario, schedule: Schedule) -> Result<RunOutput> {
    run(config, scenario, Policy::Oracle, schedule)
}

/// Every subscriber pushed over the infrastructure; no ad-hoc relaying.
pub fn run_infra_only(config: &Config, scenario: &Scenario, schedule: Schedule) -> Result<RunOutput> {
    run(config, scenario, Policy::InfraOnly, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn ev(t: f64, kind: EventKind) -> TraceEvent {
        TraceEvent::new(t, kind)
    }

    fn enter(t: f64, i: u32) -> TraceEvent {
        ev(t, EventKind::Enter { node: n(i), pos: None })
    }

    #[test]
    fn direct_contact_is_symmetric() {
        let evs = vec![
            enter(0.0, 1),
            enter(0.0, 2),
            ev(1.0, EventKind::contact_up(n(1), n(2))),
            ev(3.0, EventKind::contact_down(n(1), n(2))),
        ];
        let g = build_reachability(&evs, 0.0, 10.0);
        assert!(g.has_edge(n(1), n(2)) && g.has_edge(n(2), n(1)));
    }

    #[test]
    fn temporal_order_is_asymmetric() {
        let evs = vec![
            enter(0.0, 1),
            enter(0.0, 2),
            enter(0.0, 3),
            ev(5.0, EventKind::contact_up(n(1), n(2))),
            ev(6.0, EventKind::contact_down(n(1), n(2))),
            ev(20.0, EventKind::contact_up(n(2), n(3))),
            ev(21.0, EventKind::contact_down(n(2), n(3))),
        ];
        let g = build_reachability(&evs, 0.0, 60.0);
        assert!(g.has_edge(n(1), n(3)));
        assert!(!g.has_edge(n(3), n(1)));
    }

    #[test]
    fn no_contacts_no_edges() {
        let evs = vec![enter(0.0, 1), enter(0.0, 2)];
        let g = build_reachability(&evs, 0.0, 10.0);
        assert_eq!(g.len(), 2);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn contact_ending_at_window_start_is_unusable() {
        let evs = vec![
            enter(0.0, 1),
            enter(0.0, 2),
            ev(1.0, EventKind::contact_up(n(1), n(2))),
            ev(5.0, EventKind::contact_down(n(1), n(2))),
        ];
        assert!(build_reachability(&evs, 5.0, 10.0).edges().is_empty());
        assert_eq!(build_reachability(&evs, 4.0, 10.0).edges().len(), 2);
        // starts exactly at t1: outside
        assert!(build_reachability(&evs, 0.0, 1.0).edges().is_empty());
    }

    #[test]
    fn greedy_examples() {
        let vs: Vec<NodeId> = (1..=3).map(n).collect();
        let complete: Vec<(NodeId, NodeId)> = vs
            .iter()
            .flat_map(|&a| vs.iter().map(move |&b| (a, b)))
            .filter(|(a, b)| a != b)
            .collect();
        let g = ReachabilityDigraph::from_edges(vs.clone(), complete);
        assert_eq!(greedy_dominating_set(&g).len(), 1);

        let star = ReachabilityDigraph::from_edges((0..=5).map(n), (1..=5).map(|i| (n(0), n(i))));
        let ds = greedy_dominating_set(&star);
        assert_eq!(ds.members, BTreeSet::from([n(0)]));
        assert!(ds.dominates(&star));
        assert_eq!(star.max_out_degree(), 5);

        let iso = ReachabilityDigraph::from_edges([n(1), n(2)], []);
        assert_eq!(greedy_dominating_set(&iso).members, BTreeSet::from([n(1), n(2)]));
    }
}
