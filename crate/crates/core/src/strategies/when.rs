use crate::engine::{Config, Message, NetworkState};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::SimTime;
use crate::trace::NodeId;

use super::WhenKind;

/// Target infection ratio at elapsed-lifetime fraction `x`.
pub fn objective<S: Scalar>(kind: WhenKind, x: S) -> Result<S> {
    let x = x.max(S::zero()).min(S::one());
    let half = S::of(0.5);
    let three_halves = S::of(1.5);
    let y = match kind {
        WhenKind::SingleCopy | WhenKind::TenCopies => return Err(Error::NoObjective(kind.name())),
        WhenKind::Quadratic => x * x,
        WhenKind::SquareRoot => x.sqrt(),
        WhenKind::Linear => x,
        WhenKind::SlowLinear => {
            if x <= half {
                x * half
            } else {
                three_halves * x - half
            }
        }
        WhenKind::FastLinear => {
            if x <= half {
                three_halves * x
            } else {
                x * half + half
            }
        }
    };
    Ok(y.max(S::zero()).min(S::one()))
}

/// Additional copies needed to lift `infected` out of `subscribers` to
/// `target`.
pub fn copies_for(target: f64, subscribers: usize, infected: usize) -> usize {
    let want = (target.clamp(0.0, 1.0) * subscribers as f64 - 1e-9).ceil().max(0.0) as usize;
    want.saturating_sub(infected)
}

pub fn copies_needed(target: f64, state: &NetworkState) -> usize {
    copies_for(target, state.subscribers.len(), state.infected_count())
}

/// True once the remaining lifetime no longer leaves room to wait another
/// tick before a direct infrastructure push. On a tick grid aligned with the
/// transfer time this is exactly `time_left <= transfer time`.
pub fn panic_check(now: SimTime, msg: &Message, config: &Config) -> bool {
    let left = msg.time_left(now);
    let push = config.infra_time();
    left <= push || left < push + config.tick_time()
}

/// Every subscriber the controller does not count as infected.
pub fn panic_action(state: &NetworkState) -> Vec<NodeId> {
    if state.infected_count() >= state.subscribers.len() {
        return Vec::new();
    }
    state.candidates()
}

pub const INITIAL_FREEZE: SimTime = SimTime(1_000_000_000);

/// Freeze deadline after pushing a batch of `batch` copies at `now`.
pub fn freeze_update(frozen_until: SimTime, batch: usize, now: SimTime, config: &Config) -> SimTime {
    if batch == 0 {
        frozen_until
    } else {
        now + config.infra_time() + config.infra_time()
    }
}
