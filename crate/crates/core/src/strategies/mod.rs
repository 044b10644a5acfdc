//! Push-and-track controller logic.
//!
//! A [`Strategy`] pairs a *when* rule, deciding how many copies to inject at
//! each controller tick, with a *whom* rule picking the recipients. The
//! [`Controller`] applies a strategy to the controller's [`NetworkState`]
//! every tick, including the panic zone and the optional freezing window.

mod quadtree;
mod when;
mod whom;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Config, Message, NetworkState};
use crate::error::{Error, Result};
use crate::time::SimTime;
use crate::trace::NodeId;

pub use quadtree::{QuadTree, DEFAULT_MAX_DEPTH};
pub use when::{
    copies_for, copies_needed, freeze_update, objective, panic_action, panic_check, INITIAL_FREEZE,
};
pub use whom::{
    controller_quadtree, coulomb_potential, entry_order, gps_density_order, select, select_cc,
    select_gps_density, select_gps_potential, SelectContext, POTENTIAL_EPSILON,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WhenKind {
    SingleCopy,
    TenCopies,
    Quadratic,
    SlowLinear,
    Linear,
    FastLinear,
    SquareRoot,
}

impl WhenKind {
    pub const ALL: [WhenKind; 7] = [
        WhenKind::SingleCopy,
        WhenKind::TenCopies,
        WhenKind::Quadratic,
        WhenKind::SlowLinear,
        WhenKind::Linear,
        WhenKind::FastLinear,
        WhenKind::SquareRoot,
    ];

    /// Kinds driven by an objective curve.
    pub const CURVES: [WhenKind; 5] = [
        WhenKind::Quadratic,
        WhenKind::SlowLinear,
        WhenKind::Linear,
        WhenKind::FastLinear,
        WhenKind::SquareRoot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WhenKind::SingleCopy => "SingleCopy",
            WhenKind::TenCopies => "TenCopies",
            WhenKind::Quadratic => "Quadratic",
            WhenKind::SlowLinear => "SlowLinear",
            WhenKind::Linear => "Linear",
            WhenKind::FastLinear => "FastLinear",
            WhenKind::SquareRoot => "SquareRoot",
        }
    }

    /// Copies pushed once at the start of a message, for the push-and-wait kinds.
    pub fn initial_copies(self) -> Option<usize> {
        match self {
            WhenKind::SingleCopy => Some(1),
            WhenKind::TenCopies => Some(10),
            _ => None,
        }
    }
}

impl fmt::Display for WhenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WhenKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        WhenKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WhenStrategy {
    pub kind: WhenKind,
    pub freezing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportKind {
    None,
    Position,
    Neighbors,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WhomStrategy {
    Random,
    EntryNewest,
    EntryOldest,
    EntryAverage,
    GpsDensity,
    GpsPotential,
    CC,
}

impl WhomStrategy {
    pub const ALL: [WhomStrategy; 7] = [
        WhomStrategy::Random,
        WhomStrategy::EntryNewest,
        WhomStrategy::EntryOldest,
        WhomStrategy::EntryAverage,
        WhomStrategy::GpsDensity,
        WhomStrategy::GpsPotential,
        WhomStrategy::CC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WhomStrategy::Random => "Random",
            WhomStrategy::EntryNewest => "EntryNewest",
            WhomStrategy::EntryOldest => "EntryOldest",
            WhomStrategy::EntryAverage => "EntryAverage",
            WhomStrategy::GpsDensity => "GpsDensity",
            WhomStrategy::GpsPotential => "GpsPotential",
            WhomStrategy::CC => "CC",
        }
    }

    pub fn requires_reports(self) -> ReportKind {
        match self {
            WhomStrategy::GpsDensity | WhomStrategy::GpsPotential => ReportKind::Position,
            WhomStrategy::CC => ReportKind::Neighbors,
            _ => ReportKind::None,
        }
    }
}

impl fmt::Display for WhomStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WhomStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        WhomStrategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub when: WhenStrategy,
    pub whom: WhomStrategy,
}

impl Strategy {
    pub fn new(when: WhenKind, whom: WhomStrategy, freezing: bool) -> Self {
        Strategy {
            when: WhenStrategy { kind: when, freezing },
            whom,
        }
    }

    /// Every (when, whom, freezing) combination.
    pub fn grid() -> Vec<Strategy> {
        let mut out = Vec::new();
        for when in WhenKind::ALL {
            for whom in WhomStrategy::ALL {
                for freezing in [false, true] {
                    out.push(Strategy::new(when, whom, freezing));
                }
            }
        }
        out
    }
}

/// `<when>-<whom>` with a `-freeze` suffix when freezing is on.
impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.when.kind, self.whom)?;
        if self.when.freezing {
            f.write_str("-freeze")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlState {
    /// Elapsed fraction of the message lifetime.
    pub x: f64,
    pub frozen_until: SimTime,
    pub panic: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Decision {
    pub targets: Vec<NodeId>,
    pub panic: bool,
}

/// Per-run controller state for one strategy.
#[derive(Clone, Debug)]
pub struct Controller {
    strategy: Strategy,
    ctx: SelectContext,
    frozen_until: SimTime,
    initial_done: bool,
    last: Option<ControlState>,
}

impl Controller {
    pub fn new(strategy: Strategy, ctx: SelectContext) -> Self {
        Controller {
            strategy,
            ctx,
            frozen_until: SimTime::ZERO,
            initial_done: false,
            last: None,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Resets per-message state; freezing strategies start with a 1 s freeze.
    pub fn on_message(&mut self, msg: &Message) {
        self.initial_done = false;
        self.frozen_until = if self.strategy.when.freezing {
            msg.created_at + INITIAL_FREEZE
        } else {
            msg.created_at
        };
    }

    pub fn frozen_until(&self) -> SimTime {
        self.frozen_until
    }

    /// State observed at the most recent tick.
    pub fn last_state(&self) -> Option<ControlState> {
        self.last
    }

    pub fn tick<R: Rng>(
        &mut self,
        now: SimTime,
        msg: &Message,
        state: &NetworkState,
        config: &Config,
        rng: &mut R,
    ) -> Decision {
        let panic = panic_check(now, msg, config);
        self.last = Some(ControlState {
            x: msg.elapsed_fraction(now),
            frozen_until: self.frozen_until,
            panic,
        });
        if panic {
            return Decision {
                targets: panic_action(state),
                panic: true,
            };
        }
        if self.strategy.when.freezing && now < self.frozen_until {
            return Decision::default();
        }
        let k = match self.strategy.when.kind.initial_copies() {
            // owed until the first tick that has someone to push to
            Some(n) if !self.initial_done && state.subscribers.len() > state.infected_count() => {
                self.initial_done = true;
                n
            }
            Some(_) => 0,
            None => {
                let target = objective(self.strategy.when.kind, msg.elapsed_fraction(now))
                    .expect("curve strategies have an objective");
                copies_needed(target, state)
            }
        };
        let targets = select(self.strategy.whom, k, state, &self.ctx, rng);
        if self.strategy.when.freezing {
            self.frozen_until = freeze_update(self.frozen_until, targets.len(), now, config);
        }
        Decision {
            targets,
            panic: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rect;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn names_round_trip() {
        for k in WhenKind::ALL {
            assert_eq!(k.name().parse::<WhenKind>().unwrap(), k);
        }
        for w in WhomStrategy::ALL {
            assert_eq!(w.name().parse::<WhomStrategy>().unwrap(), w);
        }
        assert!("quadratic".parse::<WhenKind>().is_err());
        assert_eq!(Strategy::grid().len(), 98);
        assert_eq!(
            Strategy::new(WhenKind::Quadratic, WhomStrategy::CC, true).to_string(),
            "Quadratic-CC-freeze"
        );
    }

    #[test]
    fn report_requirements() {
        for w in WhomStrategy::ALL {
            let expected = match w {
                WhomStrategy::GpsDensity | WhomStrategy::GpsPotential => ReportKind::Position,
                WhomStrategy::CC => ReportKind::Neighbors,
                _ => ReportKind::None,
            };
            assert_eq!(w.requires_reports(), expected);
        }
    }

    fn setup(n: u32) -> (NetworkState, Message, Config) {
        let mut s = NetworkState::default();
        for i in 1..=n {
            s.subscribe(NodeId(i), 0.0);
        }
        let config = Config::default();
        let msg = Message {
            id: 0,
            created_at: SimTime::ZERO,
            expires_at: SimTime::from_secs(60.0),
            size: config.content_size,
        };
        (s, msg, config)
    }

    fn ctx() -> SelectContext {
        SelectContext {
            bounds: Rect::sized(100.0, 100.0),
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    #[test]
    fn freezing_blocks_first_second_then_twice_push_time() {
        let (mut s, msg, config) = setup(20);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = Controller::new(Strategy::new(WhenKind::SquareRoot, WhomStrategy::Random, true), ctx());
        c.on_message(&msg);
        assert!(c.tick(SimTime::from_secs(0.5), &msg, &s, &config, &mut rng).targets.is_empty());
        let d = c.tick(SimTime::from_secs(1.0), &msg, &s, &config, &mut rng);
        assert!(!d.targets.is_empty());
        assert_eq!(c.frozen_until(), SimTime::from_secs(1.0 + 20.48));
        s.pushing.extend(d.targets);
        assert!(c.tick(SimTime::from_secs(21.47), &msg, &s, &config, &mut rng).targets.is_empty());
        assert!(!c.tick(SimTime::from_secs(21.48), &msg, &s, &config, &mut rng).targets.is_empty());
    }

    #[test]
    fn panic_overrides_freeze() {
        let (s, msg, config) = setup(5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = Controller::new(Strategy::new(WhenKind::Quadratic, WhomStrategy::Random, true), ctx());
        c.on_message(&msg);
        let d = c.tick(SimTime::from_secs(49.76), &msg, &s, &config, &mut rng);
        assert!(d.panic);
        assert_eq!(d.targets.len(), 5);
    }

    #[test]
    fn single_copy_pushes_once() {
        let (mut s, msg, config) = setup(5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = Controller::new(Strategy::new(WhenKind::SingleCopy, WhomStrategy::Random, false), ctx());
        c.on_message(&msg);
        let d = c.tick(SimTime::ZERO, &msg, &s, &config, &mut rng);
        assert_eq!(d.targets.len(), 1);
        s.pushing.extend(d.targets);
        assert!(c.tick(SimTime::from_secs(0.01), &msg, &s, &config, &mut rng).targets.is_empty());
        let (s2, _, _) = setup(4);
        let mut ten = Controller::new(Strategy::new(WhenKind::TenCopies, WhomStrategy::Random, false), ctx());
        ten.on_message(&msg);
        assert_eq!(ten.tick(SimTime::ZERO, &msg, &s2, &config, &mut rng).targets.len(), 4);
    }
}
