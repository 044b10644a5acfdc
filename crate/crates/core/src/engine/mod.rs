//! Deterministic discrete-event core.
//!
//! [`run`] replays a [`Scenario`] (contacts plus optional positions) for a
//! sequence of messages, simulating the infrastructure downlink and uplink,
//! the ad-hoc epidemic and the control protocol, and returns per-message
//! metrics together with an exact byte ledger and the full transfer log.

mod sim;
mod state;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricsRecord, RunLedger, SeriesPoint, TransferKind};
use crate::strategies::{ReportKind, Strategy, DEFAULT_MAX_DEPTH};
use crate::time::{SimTime, KIB, MIB};
use crate::trace::{derive_contacts_with_positions, NodeId, Trace, TraceEvent, TraceKind};
use crate::Rect;

pub use sim::run;
pub use state::{Message, NetworkState};

/// Contact range used when deriving contacts from positions, in metres.
pub const DEFAULT_RANGE: f64 = 100.0;

/// Rates are in bytes per second, sizes in bytes, times in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub adhoc_rate: u64,
    pub infra_down_rate: u64,
    pub infra_up_rate: u64,
    pub content_size: u64,
    pub ctrl_size: u64,
    pub tick: f64,
    pub period: f64,
    pub report_interval: f64,
    pub seed: u64,
    pub max_depth: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            adhoc_rate: MIB,
            infra_down_rate: 100 * KIB,
            infra_up_rate: 10 * KIB,
            content_size: MIB,
            ctrl_size: 256,
            tick: 0.01,
            period: 60.0,
            report_interval: 60.0,
            seed: 0,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("adhoc_rate", self.adhoc_rate),
            ("infra_down_rate", self.infra_down_rate),
            ("infra_up_rate", self.infra_up_rate),
            ("content_size", self.content_size),
            ("ctrl_size", self.ctrl_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("tick", self.tick),
            ("period", self.period),
            ("report_interval", self.report_interval),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.tick_time() == SimTime::ZERO {
            return Err(Error::Config("tick is below one nanosecond".into()));
        }
        if self.period_time() <= self.infra_time() {
            return Err(Error::Config(format!(
                "period {} s does not exceed the infrastructure transfer time {} s",
                self.period,
                self.infra_time().as_secs()
            )));
        }
        if self.max_depth > 32 {
            return Err(Error::Config("max_depth above 32".into()));
        }
        Ok(())
    }

    /// Content over the infrastructure downlink.
    pub fn infra_time(&self) -> SimTime {
        SimTime::transfer(self.content_size, self.infra_down_rate)
    }

    /// Content over one ad-hoc link.
    pub fn adhoc_time(&self) -> SimTime {
        SimTime::transfer(self.content_size, self.adhoc_rate)
    }

    /// One control message over the uplink.
    pub fn ctrl_time(&self) -> SimTime {
        SimTime::transfer(self.ctrl_size, self.infra_up_rate)
    }

    pub fn tick_time(&self) -> SimTime {
        SimTime::from_secs(self.tick)
    }

    pub fn period_time(&self) -> SimTime {
        SimTime::from_secs(self.period)
    }

    /// Residence before expiry that guarantees delivery: the ENTER message
    /// must reach the controller, the next tick must fire, and the push must
    /// complete.
    pub fn delivery_horizon(&self) -> SimTime {
        self.ctrl_time() + self.tick_time() + self.infra_time()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Creation time of the first message, seconds.
    pub first_send: f64,
    pub n_messages: usize,
}

impl Schedule {
    /// As many full periods as fit between `first_send` and `duration`.
    pub fn fitting(first_send: f64, period: f64, duration: f64) -> Schedule {
        let n = ((duration - first_send) / period + 1e-9).floor().max(0.0) as usize;
        Schedule {
            first_send,
            n_messages: n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    PushAndTrack(Strategy),
    InfraOnly,
    Oracle,
}

impl Policy {
    pub fn adhoc_enabled(&self) -> bool {
        !matches!(self, Policy::InfraOnly)
    }

    pub fn reports(&self) -> ReportKind {
        match self {
            Policy::PushAndTrack(s) => s.whom.requires_reports(),
            _ => ReportKind::None,
        }
    }

    /// Directory-safe label: the strategy label, `infra-only` or `oracle`.
    pub fn label(&self) -> String {
        match self {
            Policy::PushAndTrack(s) => s.to_string(),
            Policy::InfraOnly => "infra-only".into(),
            Policy::Oracle => "oracle".into(),
        }
    }
}

/// Engine input: a canonical contact stream, with position updates kept
/// when the source trace had them.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    events: Vec<TraceEvent>,
    bounds: Rect,
    duration: f64,
}

impl Scenario {
    /// Contact traces are used as-is; position traces get contacts derived
    /// at `range` metres.
    pub fn from_trace(trace: &Trace, range: f64) -> Result<Scenario> {
        let events = match trace.kind() {
            TraceKind::Contact => trace.events().to_vec(),
            TraceKind::Position => derive_contacts_with_positions(trace, range)?,
        };
        Ok(Scenario {
            events,
            bounds: trace.meta().bounds,
            duration: trace.meta().duration,
        })
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Sorted distinct node ids.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self
            .events
            .iter()
            .filter_map(|e| match e.kind {
                crate::trace::EventKind::Enter { node, .. } => Some(node),
                _ => None,
            })
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CancelCause {
    ContactDown,
    NodeLeft,
    /// The receiver got the content over the other medium first.
    Duplicate,
    /// The message expired with the transfer in flight.
    Expired,
    /// Control traffic cut when the run stops.
    EndOfRun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Completed,
    Cancelled(CancelCause),
}

/// One entry of the transfer log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub kind: TransferKind,
    /// Receiver of content, sender of control messages.
    pub node: NodeId,
    /// Ad-hoc sender.
    pub peer: Option<NodeId>,
    /// Ledger bucket; `None` is the outside bucket.
    pub msg: Option<usize>,
    pub started: SimTime,
    pub ended: SimTime,
    pub bytes_total: u64,
    pub bytes_charged: u64,
    pub outcome: Outcome,
}

/// One infrastructure push issued by the controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushRecord {
    pub at: SimTime,
    pub msg: usize,
    pub node: NodeId,
    pub panic: bool,
    /// Freeze deadline in force when the decision was taken.
    pub frozen_until: SimTime,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub records: Vec<MetricsRecord>,
    pub ledger: RunLedger,
    pub transfers: Vec<TransferRecord>,
    pub series: Vec<SeriesPoint>,
    pub pushes: Vec<PushRecord>,
}

impl RunOutput {
    /// Rebuilds the ledger from the transfer log.
    pub fn ledger_from_log(&self) -> RunLedger {
        let mut l = RunLedger::new(self.ledger.per_message.len());
        for t in &self.transfers {
            l.bucket_mut(t.msg)
                .charge(t.kind, t.bytes_charged, t.outcome == Outcome::Completed);
        }
        l
    }
}
