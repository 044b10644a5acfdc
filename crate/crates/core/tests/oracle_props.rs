mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::random_contacts;
use proptest::prelude::*;
use pushtrack::oracle::{build_reachability, greedy_dominating_set, ReachabilityDigraph};
use pushtrack::trace::{EventKind, NodeId, TraceEvent};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-source flooding, recomputed from scratch after every event: a node
/// holds `s` once it shares a live component with a holder of `s`.
fn flood(events: &[TraceEvent], t0: f64, t1: f64) -> BTreeSet<(NodeId, NodeId)> {
    let mut present = BTreeSet::new();
    let mut live: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut sources = BTreeSet::new();
    let mut holds: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();

    let apply = |e: &TraceEvent, present: &mut BTreeSet<NodeId>, live: &mut BTreeSet<(NodeId, NodeId)>| match e.kind {
        EventKind::Enter { node, .. } => {
            present.insert(node);
        }
        EventKind::Leave { node } => {
            present.remove(&node);
            live.retain(|&(a, b)| a != node && b != node);
        }
        EventKind::ContactUp { a, b } => {
            live.insert((a, b));
        }
        EventKind::ContactDown { a, b } => {
            live.remove(&(a, b));
        }
        EventKind::Position { .. } => {}
    };
    let spread = |holds: &mut BTreeMap<NodeId, BTreeSet<NodeId>>, live: &BTreeSet<(NodeId, NodeId)>| loop {
        let mut changed = false;
        for &(a, b) in live {
            let ha = holds.get(&a).cloned().unwrap_or_default();
            let hb = holds.get(&b).cloned().unwrap_or_default();
            let u: BTreeSet<NodeId> = ha.union(&hb).copied().collect();
            if u != ha || u != hb {
                holds.insert(a, u.clone());
                holds.insert(b, u);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    };

    let mut rest = events.iter().peekable();
    while let Some(e) = rest.next_if(|e| e.time <= t0) {
        apply(e, &mut present, &mut live);
    }
    for &v in &present {
        sources.insert(v);
        holds.entry(v).or_default().insert(v);
    }
    spread(&mut holds, &live);
    for e in rest.take_while(|e| e.time < t1) {
        apply(e, &mut present, &mut live);
        if let EventKind::Enter { node, .. } = e.kind {
            sources.insert(node);
            holds.entry(node).or_default().insert(node);
        }
        spread(&mut holds, &live);
    }
    let mut edges = BTreeSet::new();
    for (v, hs) in holds {
        for s in hs {
            if s != v {
                edges.insert((s, v));
            }
        }
    }
    edges
}

fn arb_digraph() -> impl Strategy<Value = ReachabilityDigraph> {
    (0u32..25).prop_flat_map(|n| {
        proptest::collection::vec((0..n.max(1), 0..n.max(1)), 0..(n as usize * 3 + 1)).prop_map(move |edges| {
            ReachabilityDigraph::from_edges(
                (0..n).map(NodeId),
                edges.into_iter().filter(|_| n > 0).map(|(a, b)| (NodeId(a), NodeId(b))),
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_set_dominates(g in arb_digraph()) {
        let d = greedy_dominating_set(&g);
        prop_assert!(d.dominates(&g));
        prop_assert!(d.len() <= g.len());
        prop_assert_eq!(d.is_empty(), g.is_empty());
    }

    #[test]
    fn reachability_matches_flooding(seed in any::<u64>(), nodes in 1u32..10, t0 in 0u32..15, span in 1u32..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = random_contacts(&mut rng, nodes, 30).trace(30.0);
        let (t0, t1) = (t0 as f64, (t0 + span) as f64);
        let g = build_reachability(trace.events(), t0, t1);
        prop_assert_eq!(g.edges(), flood(trace.events(), t0, t1));
    }
}

#[test]
fn generated_windows_are_not_trivial() {
    let mut with_edges = 0;
    let mut asymmetric = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = random_contacts(&mut rng, 8, 30).trace(30.0);
        let edges = flood(trace.events(), 5.0, 25.0);
        with_edges += usize::from(!edges.is_empty());
        asymmetric += usize::from(edges.iter().any(|&(a, b)| !edges.contains(&(b, a))));
    }
    assert!(with_edges >= 40, "{with_edges}");
    assert!(asymmetric >= 10, "{asymmetric}");
}
