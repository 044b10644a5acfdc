//! Push-and-track: a deterministic simulator for hybrid content
//! dissemination, where periodic content is pushed over a cellular-like
//! infrastructure to a few mobile nodes and spreads epidemically over
//! short-range contacts while a feedback loop reinjects copies so that
//! every subscriber is served before the deadline.
//!
//! The pure geometry and statistics code is generic over [`Scalar`]
//! (`f32`/`f64`); the engine itself runs on integer-nanosecond time and
//! `f64` positions, exposed through the aliases below.

pub mod engine;
pub mod experiment;
pub mod error;

pub mod geometry;
pub mod metrics;
pub mod oracle;
pub mod scalar;
pub mod strategies;
pub mod time;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::Point<f64>;
pub type Rect = geometry::Rect<f64>;
pub type QuadTree = strategies::QuadTree<f64>;
pub type Aggregate = metrics::Aggregate<f64>;
