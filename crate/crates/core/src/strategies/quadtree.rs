//! Barnes-Hut style spatial partition used by the GPS strategies.

use crate::geometry::{Point, Rect};
use crate::scalar::Scalar;
use crate::trace::NodeId;

pub const DEFAULT_MAX_DEPTH: usize = 8;

#[derive(Clone, Debug)]
pub struct QuadTree<S> {
    bounds: Rect<S>,
    depth: usize,
    node: Cell<S>,
}

#[derive(Clone, Debug)]
enum Cell<S> {
    Leaf(Vec<(NodeId, Point<S>)>),
    Split(Box<[QuadTree<S>; 4]>),
}

impl<S: Scalar> QuadTree<S> {
    /// Splits until a cell holds at most one node or `max_depth` is reached.
    pub fn build(positions: &[(NodeId, Point<S>)], bounds: Rect<S>, max_depth: usize) -> Self {
        Self::build_at(positions.to_vec(), bounds, 0, max_depth)
    }

    fn build_at(items: Vec<(NodeId, Point<S>)>, bounds: Rect<S>, depth: usize, max_depth: usize) -> Self {
        if items.len() <= 1 || depth >= max_depth {
            return QuadTree {
                bounds,
                depth,
                node: Cell::Leaf(items),
            };
        }
        let mut parts: [Vec<(NodeId, Point<S>)>; 4] = Default::default();
        for item in items {
            parts[bounds.quadrant_of(&item.1)].push(item);
        }
        let quads = bounds.quadrants();
        let children = std::array::from_fn(|i| {
            Self::build_at(std::mem::take(&mut parts[i]), quads[i], depth + 1, max_depth)
        });
        QuadTree {
            bounds,
            depth,
            node: Cell::Split(Box::new(children)),
        }
    }

    pub fn bounds(&self) -> &Rect<S> {
        &self.bounds
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.node, Cell::Leaf(_))
    }

    /// Nodes stored in this cell, empty for internal cells.
    pub fn members(&self) -> &[(NodeId, Point<S>)] {
        match &self.node {
            Cell::Leaf(v) => v,
            Cell::Split(_) => &[],
        }
    }

    /// Leaves in depth-first NW, NE, SW, SE order.
    pub fn leaves(&self) -> Vec<&QuadTree<S>> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a QuadTree<S>>) {
        match &self.node {
            Cell::Leaf(_) => out.push(self),
            Cell::Split(children) => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Nodes per unit area; infinite for a populated zero-area cell.
    pub fn density(&self) -> S {
        let n = S::from_usize(self.members().len()).expect("count fits");
        let area = self.bounds.area();
        if area > S::zero() {
            n / area
        } else if n > S::zero() {
            S::infinity()
        } else {
            S::zero()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(u32, f64, f64)]) -> Vec<(NodeId, Point<f64>)> {
        v.iter().map(|&(i, x, y)| (NodeId(i), Point::new(x, y))).collect()
    }

    #[test]
    fn single_node_root_is_leaf() {
        let t = QuadTree::build(&pts(&[(1, 5.0, 5.0)]), Rect::sized(10.0, 10.0), 8);
        assert!(t.is_leaf());
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn one_per_quadrant_splits_once() {
        let t = QuadTree::build(
            &pts(&[(1, 1.0, 9.0), (2, 9.0, 9.0), (3, 1.0, 1.0), (4, 9.0, 1.0)]),
            Rect::sized(10.0, 10.0),
            8,
        );
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 4);
        assert!(leaves.iter().all(|l| l.depth() == 1 && l.members().len() == 1));
    }

    #[test]
    fn coincident_nodes_stop_at_depth_cap() {
        let t = QuadTree::build(&pts(&[(1, 3.0, 3.0), (2, 3.0, 3.0)]), Rect::sized(10.0, 10.0), 3);
        let full: Vec<_> = t.leaves().into_iter().filter(|l| !l.members().is_empty()).collect();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].depth(), 3);
        assert_eq!(full[0].members().len(), 2);
    }

    #[test]
    fn f32_tree() {
        let p: Vec<(NodeId, Point<f32>)> = vec![(NodeId(1), Point::new(1.0, 1.0)), (NodeId(2), Point::new(7.0, 7.0))];
        let t = QuadTree::build(&p, Rect::sized(8.0f32, 8.0), 4);
        assert_eq!(t.leaves().len(), 4);
        let d: f32 = t.leaves().iter().map(|l| l.density() * l.bounds().area()).sum();
        assert_eq!(d, 2.0);
    }
}
