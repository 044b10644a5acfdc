use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Point { x, y }
    }

    pub fn dist2(&self, other: &Self) -> S {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Self) -> S {
        self.dist2(other).sqrt()
    }

    pub fn scale(&self, k: S) -> Self {
        Point::new(self.x * k, self.y * k)
    }
}

/// Axis-aligned rectangle, `min` inclusive, `max` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect<S> {
    pub min: Point<S>,
    pub max: Point<S>,
}

impl<S: Scalar> Rect<S> {
    pub fn new(min: Point<S>, max: Point<S>) -> Self {
        Rect { min, max }
    }

    /// Rectangle anchored at the origin.
    pub fn sized(width: S, height: S) -> Self {
        Rect::new(Point::new(S::zero(), S::zero()), Point::new(width, height))
    }

    pub fn width(&self) -> S {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> S {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> S {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point<S> {
        let two = S::one() + S::one();
        Point::new(
            (self.min.x + self.max.x) / two,
            (self.min.y + self.max.y) / two,
        )
    }

    pub fn contains(&self, p: &Point<S>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > S::zero() && self.height() > S::zero())
    }

    /// Quadrants in NW, NE, SW, SE order (y grows upward).
    pub fn quadrants(&self) -> [Rect<S>; 4] {
        let c = self.center();
        [
            Rect::new(Point::new(self.min.x, c.y), Point::new(c.x, self.max.y)),
            Rect::new(c, self.max),
            Rect::new(self.min, c),
            Rect::new(Point::new(c.x, self.min.y), Point::new(self.max.x, c.y)),
        ]
    }

    /// Index into [`Rect::quadrants`] of the quadrant holding `p`. Points on a
    /// split line go east / north, so each point lands in exactly one child.
    pub fn quadrant_of(&self, p: &Point<S>) -> usize {
        let c = self.center();
        match (p.x >= c.x, p.y >= c.y) {
            (false, true) => 0,
            (true, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        }
    }

    /// Perpendicular distances from `p` to the west, east, south and north sides.
    pub fn side_distances(&self, p: &Point<S>) -> [S; 4] {
        [
            (p.x - self.min.x).abs(),
            (self.max.x - p.x).abs(),
            (p.y - self.min.y).abs(),
            (self.max.y - p.y).abs(),
        ]
    }

    pub fn scale(&self, k: S) -> Self {
        Rect::new(self.min.scale(k), self.max.scale(k))
    }

    /// Smallest rectangle holding every point, `None` for an empty input.
    pub fn bounding<'a>(points: impl IntoIterator<Item = &'a Point<S>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        Some(it.fold(Rect::new(first, first), |r, p| {
            Rect::new(
                Point::new(r.min.x.min(p.x), r.min.y.min(p.y)),
                Point::new(r.max.x.max(p.x), r.max.y.max(p.y)),
            )
        }))
    }
}
