use std::collections::{BTreeMap, BTreeSet};

use crate::scalar::Scalar;

use super::{EventKind, NodeId, Trace};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStats {
    /// `(t, P[contact duration > t])`
    pub contact_ccdf: Vec<(f64, f64)>,
    /// `(t, P[transit time > t])`, over nodes that both entered and left.
    pub transit_ccdf: Vec<(f64, f64)>,
    /// `(t, number of connected components among present nodes)`
    pub components: Vec<(f64, usize)>,
}

/// Empirical complementary CDF, `P[X > t]`, at each point. Empty samples
/// give an all-zero curve.
pub fn ccdf<S: Scalar>(samples: &[S], points: &[S]) -> Vec<S> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = S::from_usize(sorted.len()).expect("sample count fits");
    points
        .iter()
        .map(|&t| {
            if sorted.is_empty() {
                return S::zero();
            }
            let at_most = sorted.partition_point(|&s| s <= t);
            S::from_usize(sorted.len() - at_most).expect("count fits") / n
        })
        .collect()
}

/// Contact and transit time distributions plus the connected-component count
/// sampled every `component_interval` seconds from 0 to the trace duration.
/// Contacts still up at the end of the trace are closed at its duration.
pub fn trace_stats(trace: &Trace, ccdf_points: &[f64], component_interval: f64) -> TraceStats {
    let end = trace.meta().duration;
    let mut open: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    let mut contact_durations = Vec::new();
    let mut transit = Vec::new();
    for (enter, leave) in trace.presence().into_values() {
        if let Some(l) = leave {
            transit.push(l - enter);
        }
    }
    for ev in trace.events() {
        match ev.kind {
            EventKind::ContactUp { a, b } => {
                open.insert((a, b), ev.time);
            }
            EventKind::ContactDown { a, b } => {
                if let Some(s) = open.remove(&(a, b)) {
                    contact_durations.push(ev.time - s);
                }
            }
            _ => {}
        }
    }
    contact_durations.extend(open.values().map(|s| end - s));

    let zip = |v: Vec<f64>| ccdf_points.iter().copied().zip(v).collect::<Vec<_>>();

    TraceStats {
        contact_ccdf: zip(ccdf(&contact_durations, ccdf_points)),
        transit_ccdf: zip(ccdf(&transit, ccdf_points)),
        components: component_series(trace, component_interval),
    }
}

fn component_series(trace: &Trace, interval: f64) -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    if !(interval > 0.0) {
        return out;
    }
    let events = trace.events();
    let mut present: BTreeSet<NodeId> = BTreeSet::new();
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut cursor = 0;
    let mut k = 0u64;
    loop {
        let t = k as f64 * interval;
        if t > trace.meta().duration {
            break;
        }
        while cursor < events.len() && events[cursor].time <= t {
            match events[cursor].kind {
                EventKind::Enter { node, .. } => {
                    present.insert(node);
                }
                EventKind::Leave { node } => {
                    present.remove(&node);
                }
                EventKind::ContactUp { a, b } => {
                    edges.insert((a, b));
                }
                EventKind::ContactDown { a, b } => {
                    edges.remove(&(a, b));
                }
                EventKind::Position { .. } => {}
            }
            cursor += 1;
        }
        out.push((t, count_components(&present, &edges)));
        k += 1;
    }
    out
}

fn count_components(nodes: &BTreeSet<NodeId>, edges: &BTreeSet<(NodeId, NodeId)>) -> usize {
    let index: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut count = nodes.len();
    for (a, b) in edges {
        let (Some(&ia), Some(&ib)) = (index.get(a), index.get(b)) else {
            continue;
        };
        let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, TraceKind};

    #[test]
    fn single_contact_ccdf() {
        let t = parse_trace(
            "#meta bounds=1x1 duration=100\n0 ENTER 1\n0 ENTER 2\n10 UP 1 2\n35 DOWN 1 2\n",
            TraceKind::Contact,
        )
        .unwrap();
        let s = trace_stats(&t, &[0.0, 24.9, 25.0, 30.0], 50.0);
        let vals: Vec<f64> = s.contact_ccdf.iter().map(|p| p.1).collect();
        assert_eq!(vals, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn isolated_nodes_are_separate_components() {
        let t = parse_trace("0 ENTER 1\n0 ENTER 2\n0 ENTER 3\n", TraceKind::Contact).unwrap();
        let s = trace_stats(&t, &[], 1.0);
        assert_eq!(s.components, vec![(0.0, 3)]);
    }

    #[test]
    fn components_follow_contacts() {
        let t = parse_trace(
            "#meta bounds=1x1 duration=3\n0 ENTER 1\n0 ENTER 2\n0 ENTER 3\n1 UP 1 2\n2 UP 2 3\n3 DOWN 1 2\n",
            TraceKind::Contact,
        )
        .unwrap();
        let s = trace_stats(&t, &[], 1.0);
        assert_eq!(s.components, vec![(0.0, 3), (1.0, 2), (2.0, 1), (3.0, 2)]);
    }

    #[test]
    fn ccdf_works_in_f32() {
        let v = ccdf::<f32>(&[1.0, 2.0, 3.0, 4.0], &[0.0, 2.0, 4.0]);
        assert_eq!(v, vec![1.0, 0.5, 0.0]);
    }
}
