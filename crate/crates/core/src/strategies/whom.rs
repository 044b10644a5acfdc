use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng;

use crate::engine::NetworkState;
use crate::geometry::{Point, Rect};
use crate::scalar::Scalar;
use crate::trace::NodeId;

use super::quadtree::QuadTree;
use super::WhomStrategy;

/// Singularity cap for the Coulomb potential, in metres.
pub const POTENTIAL_EPSILON: f64 = 1.0;

#[derive(Clone, Copy, Debug)]
pub struct SelectContext {
    /// Simulation area; walls of the potential and root of the quadtree.
    pub bounds: Rect<f64>,
    pub max_depth: usize,
}

/// Picks up to `k` distinct candidates (subscribers not counted as infected)
/// according to `whom`.
pub fn select<R: Rng>(
    whom: WhomStrategy,
    k: usize,
    state: &NetworkState,
    ctx: &SelectContext,
    rng: &mut R,
) -> Vec<NodeId> {
    if k == 0 || state.infected_count() >= state.subscribers.len() {
        return Vec::new();
    }
    let candidates = state.candidates();
    let k = k.min(candidates.len());
    if k == candidates.len() {
        return candidates;
    }
    match whom {
        WhomStrategy::Random => random_pick(&candidates, k, rng),
        WhomStrategy::EntryNewest | WhomStrategy::EntryOldest | WhomStrategy::EntryAverage => {
            entry_order(whom, state, &candidates).into_iter().take(k).collect()
        }
        WhomStrategy::GpsDensity => {
            let tree = controller_quadtree(state, ctx);
            let ordered = gps_density_order(state, &tree);
            fill_randomly(ordered, &candidates, k, rng)
        }
        WhomStrategy::GpsPotential => {
            let chosen = gps_potential_batch(state, &ctx.bounds, k);
            fill_randomly(chosen, &candidates, k, rng)
        }
        WhomStrategy::CC => {
            if state.last_neighbors.is_empty() {
                random_pick(&candidates, k, rng)
            } else {
                cc_batch(state, k, rng)
            }
        }
    }
}

fn random_pick<R: Rng>(candidates: &[NodeId], k: usize, rng: &mut R) -> Vec<NodeId> {
    index::sample(rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i])
        .collect()
}

/// Keeps the strategy's picks (up to `k`) and tops them up with uniformly
/// drawn candidates it could not rank, e.g. nodes without a position report.
fn fill_randomly<R: Rng>(mut picked: Vec<NodeId>, candidates: &[NodeId], k: usize, rng: &mut R) -> Vec<NodeId> {
    picked.truncate(k);
    if picked.len() < k {
        let taken: BTreeSet<NodeId> = picked.iter().copied().collect();
        let rest: Vec<NodeId> = candidates.iter().copied().filter(|n| !taken.contains(n)).collect();
        picked.extend(random_pick(&rest, k - picked.len(), rng));
    }
    picked
}

/// Candidates ordered by the entry-time rule, ties to the lowest id.
pub fn entry_order(whom: WhomStrategy, state: &NetworkState, candidates: &[NodeId]) -> Vec<NodeId> {
    let entry = |n: &NodeId| state.entry_time.get(n).copied().unwrap_or(0.0);
    let mut ordered = candidates.to_vec();
    match whom {
        WhomStrategy::EntryNewest => ordered.sort_by(|a, b| entry(b).total_cmp(&entry(a)).then(a.cmp(b))),
        WhomStrategy::EntryOldest => ordered.sort_by(|a, b| entry(a).total_cmp(&entry(b)).then(a.cmp(b))),
        WhomStrategy::EntryAverage => {
            let mean = candidates.iter().map(entry).sum::<f64>() / candidates.len().max(1) as f64;
            ordered.sort_by(|a, b| {
                (entry(a) - mean)
                    .abs()
                    .total_cmp(&(entry(b) - mean).abs())
                    .then(a.cmp(b))
            })
        }
        _ => {}
    }
    ordered
}

/// Quadtree over every subscriber with a reported position. The root covers
/// the simulation area, grown if a stale report lies outside it.
pub fn controller_quadtree(state: &NetworkState, ctx: &SelectContext) -> QuadTree<f64> {
    let positions: Vec<(NodeId, Point<f64>)> = state
        .last_position
        .iter()
        .filter(|(n, _)| state.subscribers.contains(n))
        .map(|(n, (p, _))| (*n, *p))
        .collect();
    let mut bounds = ctx.bounds;
    if let Some(b) = Rect::bounding(positions.iter().map(|(_, p)| p)) {
        bounds = Rect::new(
            Point::new(bounds.min.x.min(b.min.x), bounds.min.y.min(b.min.y)),
            Point::new(bounds.max.x.max(b.max.x), bounds.max.y.max(b.max.y)),
        );
    }
    QuadTree::build(&positions, bounds, ctx.max_depth)
}

/// Positioned candidates, densest leaf first; within a leaf by id. Leaves of
/// equal density are ordered by their lowest candidate id.
pub fn gps_density_order<S: Scalar>(state: &NetworkState, tree: &QuadTree<S>) -> Vec<NodeId> {
    let mut leaves: Vec<(S, Vec<NodeId>)> = tree
        .leaves()
        .into_iter()
        .filter_map(|leaf| {
            let mut c: Vec<NodeId> = leaf
                .members()
                .iter()
                .map(|(n, _)| *n)
                .filter(|n| state.subscribers.contains(n) && !state.is_infected(*n))
                .collect();
            if c.is_empty() {
                return None;
            }
            c.sort();
            Some((leaf.density(), c))
        })
        .collect();
    leaves.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("densities are not NaN")
            .then(a.1[0].cmp(&b.1[0]))
    });
    leaves.into_iter().flat_map(|(_, c)| c).collect()
}

pub fn select_gps_density<S: Scalar>(state: &NetworkState, tree: &QuadTree<S>) -> Option<NodeId> {
    gps_density_order(state, tree).into_iter().next()
}

/// Sum of `1/max(d, eps)` over `sources` plus one such term per side of
/// `bounds`, using the perpendicular distance to that side.
pub fn coulomb_potential<S: Scalar>(at: &Point<S>, sources: &[Point<S>], bounds: &Rect<S>, eps: S) -> S {
    let inv = |d: S| S::one() / d.max(eps);
    let from_nodes: S = sources.iter().map(|s| inv(s.dist(at))).sum();
    let from_walls: S = bounds.side_distances(at).into_iter().map(inv).sum();
    from_nodes + from_walls
}

fn gps_potential_batch(state: &NetworkState, bounds: &Rect<f64>, k: usize) -> Vec<NodeId> {
    let mut sources: Vec<Point<f64>> = state
        .last_position
        .iter()
        .filter(|(n, _)| state.subscribers.contains(n) && state.is_infected(**n))
        .map(|(_, (p, _))| *p)
        .collect();
    let mut pool: Vec<(NodeId, Point<f64>)> = state
        .last_position
        .iter()
        .filter(|(n, _)| state.subscribers.contains(n) && !state.is_infected(**n))
        .map(|(n, (p, _))| (*n, *p))
        .collect();
    let mut chosen = Vec::new();
    while chosen.len() < k && !pool.is_empty() {
        let best = argmin_potential(&pool, &sources, bounds);
        let (n, p) = pool.remove(best);
        chosen.push(n);
        sources.push(p);
    }
    chosen
}

fn argmin_potential<S: Scalar>(pool: &[(NodeId, Point<S>)], sources: &[Point<S>], bounds: &Rect<S>) -> usize {
    let eps = S::of(POTENTIAL_EPSILON);
    let mut best = 0;
    let mut best_v = S::infinity();
    for (i, (n, p)) in pool.iter().enumerate() {
        let v = coulomb_potential(p, sources, bounds, eps);
        if v < best_v || (v == best_v && *n < pool[best].0) {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Positioned candidate with the lowest potential, ties to the lowest id.
pub fn select_gps_potential(state: &NetworkState, bounds: &Rect<f64>) -> Option<NodeId> {
    gps_potential_batch(state, bounds, 1).into_iter().next()
}

struct Component {
    size: usize,
    min_id: NodeId,
    infected: bool,
    open: Vec<NodeId>,
}

/// Connected components of the reported neighbour graph over subscribers.
/// An edge exists if either endpoint reported the other.
fn components(state: &NetworkState) -> Vec<Component> {
    let nodes: Vec<NodeId> = state.subscribers.iter().copied().collect();
    let index: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (n, (neigh, _)) in &state.last_neighbors {
        let Some(&a) = index.get(n) else { continue };
        for m in neigh {
            if let Some(&b) = index.get(m) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut by_root: BTreeMap<usize, Component> = BTreeMap::new();
    for (i, &n) in nodes.iter().enumerate() {
        let r = find(&mut parent, i);
        let c = by_root.entry(r).or_insert(Component {
            size: 0,
            min_id: n,
            infected: false,
            open: Vec::new(),
        });
        c.size += 1;
        c.min_id = c.min_id.min(n);
        if state.is_infected(n) {
            c.infected = true;
        } else {
            c.open.push(n);
        }
    }
    by_root.into_values().collect()
}

fn cc_batch<R: Rng>(state: &NetworkState, k: usize, rng: &mut R) -> Vec<NodeId> {
    let mut comps = components(state);
    let mut chosen = Vec::new();
    while chosen.len() < k {
        let pick = comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.infected && !c.open.is_empty())
            .max_by(|(_, a), (_, b)| a.size.cmp(&b.size).then(b.min_id.cmp(&a.min_id)))
            .or_else(|| {
                comps
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.open.is_empty())
                    .max_by(|(_, a), (_, b)| a.open.len().cmp(&b.open.len()).then(b.min_id.cmp(&a.min_id)))
            })
            .map(|(i, _)| i);
        let Some(i) = pick else { break };
        let c = &mut comps[i];
        let j = rng.random_range(0..c.open.len());
        chosen.push(c.open.remove(j));
        c.infected = true;
    }
    chosen
}

/// Uniform pick from the largest component without any infected member, or
/// failing that from the component with the most uninfected members.
/// `None` when there is no neighbour report at all.
pub fn select_cc<R: Rng>(state: &NetworkState, rng: &mut R) -> Option<NodeId> {
    if state.last_neighbors.is_empty() {
        return None;
    }
    cc_batch(state, 1, rng).into_iter().next()
}
