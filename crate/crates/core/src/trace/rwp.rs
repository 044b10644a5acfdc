use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Point, Rect};

use super::{EventKind, NodeId, Trace, TraceEvent, TraceKind};

/// Random-waypoint population with Poisson arrivals and exponential sojourns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwpParams {
    pub bounds: Rect,
    /// Nodes per second.
    pub arrival_rate: f64,
    /// Mean residence time in seconds.
    pub mean_sojourn: f64,
    /// Uniform speed range in m/s.
    pub speed: (f64, f64),
    /// Uniform pause range in seconds at each waypoint.
    pub pause: (f64, f64),
    pub duration: f64,
    /// Positions are sampled on the global grid `k * sample_interval`.
    pub sample_interval: f64,
    /// Nodes already present at t = 0 (they still depart after an
    /// exponential sojourn).
    pub initial_nodes: usize,
    pub seed: u64,
}

impl Default for RwpParams {
    fn default() -> Self {
        RwpParams {
            bounds: Rect::sized(1000.0, 1000.0),
            arrival_rate: 1.0,
            mean_sojourn: 300.0,
            speed: (5.0, 15.0),
            pause: (0.0, 10.0),
            duration: 3600.0,
            sample_interval: 1.0,
            initial_nodes: 0,
            seed: 0,
        }
    }
}

impl RwpParams {
    /// Parses `key=value` pairs separated by commas, starting from the
    /// defaults: `bounds=WxH, rate, sojourn, speed=MIN-MAX, pause=MIN-MAX,
    /// duration, sample, initial, seed`.
    pub fn parse(spec: &str) -> Result<RwpParams> {
        let mut p = RwpParams::default();
        let bad = |m: String| Error::Config(format!("--rwp: {m}"));
        let f = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| bad(format!("invalid number `{v}`")))
        };
        let pair = |v: &str, sep: char| -> Result<(f64, f64)> {
            let (a, b) = v
                .split_once(sep)
                .ok_or_else(|| bad(format!("expected A{sep}B, got `{v}`")))?;
            Ok((f(a)?, f(b)?))
        };
        for field in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{field}`")))?;
            match k {
                "bounds" => {
                    let (w, h) = pair(v, 'x')?;
                    p.bounds = Rect::sized(w, h);
                }
                "rate" => p.arrival_rate = f(v)?,
                "sojourn" => p.mean_sojourn = f(v)?,
                "speed" => p.speed = pair(v, '-')?,
                "pause" => p.pause = pair(v, '-')?,
                "duration" => p.duration = f(v)?,
                "sample" => p.sample_interval = f(v)?,
                "initial" => {
                    p.initial_nodes = v
                        .parse()
                        .map_err(|_| bad(format!("invalid count `{v}`")))?
                }
                "seed" => p.seed = v.parse().map_err(|_| bad(format!("invalid seed `{v}`")))?,
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        let ok = !self.bounds.is_degenerate()
            && self.arrival_rate >= 0.0
            && self.mean_sojourn > 0.0
            && self.speed.0 > 0.0
            && self.speed.1 >= self.speed.0
            && self.pause.0 >= 0.0
            && self.pause.1 >= self.pause.0
            && self.sample_interval > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid random-waypoint parameters: {self:?}")))
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn waypoint(rng: &mut ChaCha8Rng, b: &Rect) -> Point {
    Point::new(
        uniform(rng, (b.min.x, b.max.x)),
        uniform(rng, (b.min.y, b.max.y)),
    )
}

struct Walker {
    now: f64,
    pos: Point,
    target: Point,
    speed: f64,
    pause_until: f64,
}

impl Walker {
    fn advance(&mut self, t: f64, rng: &mut ChaCha8Rng, p: &RwpParams) {
        while self.now < t {
            if self.now < self.pause_until {
                self.now = self.pause_until.min(t);
                continue;
            }
            let d = self.pos.dist(&self.target);
            let reach = self.now + d / self.speed;
            if reach <= t {
                self.pos = self.target;
                self.now = reach;
                self.pause_until = reach + uniform(rng, p.pause);
                self.target = waypoint(rng, &p.bounds);
                self.speed = uniform(rng, p.speed);
            } else {
                let k = self.speed * (t - self.now) / d;
                self.pos = Point::new(
                    (self.pos.x + (self.target.x - self.pos.x) * k).clamp(p.bounds.min.x, p.bounds.max.x),
                    (self.pos.y + (self.target.y - self.pos.y) * k).clamp(p.bounds.min.y, p.bounds.max.y),
                );
                self.now = t;
            }
        }
    }
}

/// Generates a position trace. Deterministic for a given parameter set.
pub fn generate_rwp(p: &RwpParams) -> Result<Trace> {
    if !(p.duration > 0.0) {
        return Ok(Trace::empty(TraceKind::Position, p.bounds, p.duration.max(0.0)));
    }
    p.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let sojourn = Exp::new(1.0 / p.mean_sojourn).expect("positive mean sojourn");

    let mut arrivals: Vec<f64> = vec![0.0; p.initial_nodes];
    if p.arrival_rate > 0.0 {
        let gap = Exp::new(p.arrival_rate).expect("positive arrival rate");
        let mut t = gap.sample(&mut rng);
        while t < p.duration {
            arrivals.push(t);
            t += gap.sample(&mut rng);
        }
    }

    let mut events = Vec::new();
    for (i, &arrive) in arrivals.iter().enumerate() {
        let node = NodeId(i as u32 + 1);
        let leave = arrive + sojourn.sample(&mut rng);
        let end = leave.min(p.duration);
        let start = waypoint(&mut rng, &p.bounds);
        let mut w = Walker {
            now: arrive,
            pos: start,
            target: waypoint(&mut rng, &p.bounds),
            speed: uniform(&mut rng, p.speed),
            pause_until: arrive,
        };
        events.push(TraceEvent::new(
            arrive,
            EventKind::Enter {
                node,
                pos: Some(start),
            },
        ));
        let mut k = (arrive / p.sample_interval).floor() as u64 + 1;
        loop {
            let t = k as f64 * p.sample_interval;
            if t >= leave || t > p.duration {
                break;
            }
            w.advance(t, &mut rng, p);
            events.push(TraceEvent::new(t, EventKind::Position { node, pos: w.pos }));
            k += 1;
        }
        if leave < p.duration {
            events.push(TraceEvent::new(end, EventKind::Leave { node }));
        }
    }

    events.sort_by(|a, b| a.canonical_cmp(b));
    Trace::new(TraceKind::Position, events, Some(p.bounds), Some(p.duration))
}
