//! Load accounting, delivery records and multi-run aggregation.

mod output;

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::SimTime;

pub use output::{write_messages_csv, write_series_csv, MESSAGE_COLUMNS, SERIES_COLUMNS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ControlKind {
    Enter,
    Leave,
    Ack,
    Pos,
    Neighbors,
}

impl ControlKind {
    pub const ALL: [ControlKind; 5] = [
        ControlKind::Enter,
        ControlKind::Leave,
        ControlKind::Ack,
        ControlKind::Pos,
        ControlKind::Neighbors,
    ];
}

/// Uplink control bytes split by message type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlBytes {
    pub enter: u64,
    pub leave: u64,
    pub ack: u64,
    pub pos: u64,
    pub neighbors: u64,
}

impl ControlBytes {
    pub fn get(&self, kind: ControlKind) -> u64 {
        match kind {
            ControlKind::Enter => self.enter,
            ControlKind::Leave => self.leave,
            ControlKind::Ack => self.ack,
            ControlKind::Pos => self.pos,
            ControlKind::Neighbors => self.neighbors,
        }
    }

    fn slot(&mut self, kind: ControlKind) -> &mut u64 {
        match kind {
            ControlKind::Enter => &mut self.enter,
            ControlKind::Leave => &mut self.leave,
            ControlKind::Ack => &mut self.ack,
            ControlKind::Pos => &mut self.pos,
            ControlKind::Neighbors => &mut self.neighbors,
        }
    }

    pub fn total(&self) -> u64 {
        self.enter + self.leave + self.ack + self.pos + self.neighbors
    }
}

impl Add for ControlBytes {
    type Output = ControlBytes;
    fn add(mut self, rhs: ControlBytes) -> ControlBytes {
        self += rhs;
        self
    }
}

impl AddAssign for ControlBytes {
    fn add_assign(&mut self, rhs: ControlBytes) {
        for k in ControlKind::ALL {
            *self.slot(k) += rhs.get(k);
        }
    }
}

/// What a transfer carried and over which medium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransferKind {
    AdhocContent,
    InfraContent,
    Control(ControlKind),
}

/// Byte counts for one message (or one bucket).
///
/// Uplink control bytes include partial bytes of cut transfers; the
/// content counters keep completed and cancelled bytes apart.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadLedger {
    pub infra_down_content: u64,
    pub infra_down_cancelled: u64,
    pub infra_up: ControlBytes,
    pub adhoc_content: u64,
    pub adhoc_cancelled: u64,
}

impl LoadLedger {
    pub fn charge(&mut self, kind: TransferKind, bytes: u64, completed: bool) {
        match (kind, completed) {
            (TransferKind::InfraContent, true) => self.infra_down_content += bytes,
            (TransferKind::InfraContent, false) => self.infra_down_cancelled += bytes,
            (TransferKind::AdhocContent, true) => self.adhoc_content += bytes,
            (TransferKind::AdhocContent, false) => self.adhoc_cancelled += bytes,
            (TransferKind::Control(c), _) => *self.infra_up.slot(c) += bytes,
        }
    }

    pub fn infra_total(&self) -> u64 {
        self.infra_down_content + self.infra_down_cancelled + self.infra_up.total()
    }

    pub fn adhoc_total(&self) -> u64 {
        self.adhoc_content + self.adhoc_cancelled
    }
}

impl Add for LoadLedger {
    type Output = LoadLedger;
    fn add(mut self, rhs: LoadLedger) -> LoadLedger {
        self += rhs;
        self
    }
}

impl AddAssign for LoadLedger {
    fn add_assign(&mut self, rhs: LoadLedger) {
        self.infra_down_content += rhs.infra_down_content;
        self.infra_down_cancelled += rhs.infra_down_cancelled;
        self.infra_up += rhs.infra_up;
        self.adhoc_content += rhs.adhoc_content;
        self.adhoc_cancelled += rhs.adhoc_cancelled;
    }
}

impl std::iter::Sum for LoadLedger {
    fn sum<I: Iterator<Item = LoadLedger>>(iter: I) -> LoadLedger {
        iter.fold(LoadLedger::default(), |a, b| a + b)
    }
}

/// Per-message ledgers plus traffic that falls outside every message
/// lifetime (control traffic before the first message is sent).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLedger {
    pub per_message: Vec<LoadLedger>,
    pub outside: LoadLedger,
}

impl RunLedger {
    pub fn new(messages: usize) -> Self {
        RunLedger {
            per_message: vec![LoadLedger::default(); messages],
            outside: LoadLedger::default(),
        }
    }

    pub fn bucket_mut(&mut self, msg: Option<usize>) -> &mut LoadLedger {
        match msg {
            Some(m) => &mut self.per_message[m],
            None => &mut self.outside,
        }
    }

    pub fn total(&self) -> LoadLedger {
        self.per_message.iter().copied().sum::<LoadLedger>() + self.outside
    }
}

/// A finished (completed or cut) transfer as seen by the collector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransferEvent {
    pub at: SimTime,
    pub kind: TransferKind,
    /// Message the bytes are attributed to; `None` for the outside bucket.
    pub msg: Option<usize>,
    pub bytes: u64,
    pub completed: bool,
}

/// Accumulates transfer outcomes into a [`RunLedger`], insisting on
/// non-decreasing event times.
#[derive(Clone, Debug)]
pub struct Collector {
    ledger: RunLedger,
    last: SimTime,
}

impl Collector {
    pub fn new(messages: usize) -> Self {
        Collector {
            ledger: RunLedger::new(messages),
            last: SimTime::ZERO,
        }
    }

    pub fn record(&mut self, ev: TransferEvent) -> Result<()> {
        if ev.at < self.last {
            return Err(Error::OutOfOrder {
                at: ev.at.as_secs(),
                last: self.last.as_secs(),
            });
        }
        self.last = ev.at;
        self.ledger.bucket_mut(ev.msg).charge(ev.kind, ev.bytes, ev.completed);
        Ok(())
    }

    pub fn ledger(&self) -> &RunLedger {
        &self.ledger
    }

    pub fn finish(self) -> RunLedger {
        self.ledger
    }
}

/// Delivery outcome of one message.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub msg_id: usize,
    pub created_at: f64,
    pub expires_at: f64,
    /// Nodes present at expiry whose residence covers the delivery horizon.
    pub eligible: usize,
    pub delivered_on_time: usize,
    /// Nodes present at expiry that entered too late to be guaranteed.
    pub late_entrants: usize,
    pub late_delivered: usize,
    /// Infrastructure pushes issued by the controller, panic pushes included.
    pub copies_pushed: usize,
    pub panic_pushes: usize,
    /// Largest out-degree of the reachability digraph (oracle runs only).
    pub max_out_degree: Option<usize>,
}

/// One sample of the infection-ratio series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub msg: usize,
    pub t: f64,
    /// Present nodes holding the content over present nodes.
    pub real_ratio: f64,
    /// Controller-infected subscribers over subscribers.
    pub ctrl_ratio: f64,
    /// Enter plus Leave events processed so far.
    pub churn: u64,
}

/// Mean and Student-t 95% confidence half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate<S> {
    pub n: usize,
    pub mean: S,
    /// Absent for a single run.
    pub ci95: Option<S>,
}

/// Aggregates runs; values are summed in sorted order so the result does
/// not depend on the run order.
pub fn aggregate<S: Scalar>(values: &[S]) -> Option<Aggregate<S>> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    let nf = S::of(n as f64);
    let mean = v.iter().copied().sum::<S>() / nf;
    if n < 2 {
        return Some(Aggregate { n, mean, ci95: None });
    }
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<S>() / S::of((n - 1) as f64);
    let t = t_quantile_975(n - 1);
    let half = S::of(t) * var.sqrt() / nf.sqrt();
    Some(Aggregate {
        n,
        mean,
        ci95: Some(half),
    })
}

/// Two-sided 95% Student-t critical value for `df` degrees of freedom.
pub fn t_quantile_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1")
        .inverse_cdf(0.975)
}

/// Fraction of infrastructure bytes saved relative to a baseline.
pub fn relief_ratio(pnt: &LoadLedger, baseline: &LoadLedger) -> Result<f64> {
    let base = baseline.infra_total();
    if base == 0 {
        return Err(Error::ZeroBaseline);
    }
    Ok(1.0 - pnt.infra_total() as f64 / base as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::MIB;

    fn ev(at: f64, kind: TransferKind, bytes: u64) -> TransferEvent {
        TransferEvent {
            at: SimTime::from_secs(at),
            kind,
            msg: Some(0),
            bytes,
            completed: true,
        }
    }

    #[test]
    fn record_examples() {
        let mut c = Collector::new(1);
        assert_eq!(c.ledger().total(), LoadLedger::default());
        c.record(ev(1.0, TransferKind::InfraContent, MIB)).unwrap();
        c.record(ev(2.0, TransferKind::Control(ControlKind::Ack), 256)).unwrap();
        let l = c.ledger().total();
        assert_eq!(l.infra_down_content, 1_048_576);
        assert_eq!(l.infra_up.ack, 256);
        assert!(c.record(ev(1.5, TransferKind::AdhocContent, 1)).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let a = aggregate(&[10.0, 10.0, 10.0]).unwrap();
        assert_eq!((a.mean, a.ci95), (10.0, Some(0.0)));
        let b = aggregate(&[0.0, 20.0]).unwrap();
        assert_eq!(b.mean, 10.0);
        let expect = 12.7062 * (200f64.sqrt() / 2f64.sqrt());
        assert!((b.ci95.unwrap() - expect).abs() < 1e-3);
        let one = aggregate(&[4.0f32]).unwrap();
        assert_eq!((one.mean, one.ci95), (4.0, None));
        assert!(aggregate::<f64>(&[]).is_none());
    }

    #[test]
    fn relief_examples() {
        let mk = |b: u64| LoadLedger {
            infra_down_content: b,
            ..LoadLedger::default()
        };
        assert!((relief_ratio(&mk(3 * MIB), &mk(100 * MIB)).unwrap() - 0.97).abs() < 1e-12);
        assert_eq!(relief_ratio(&mk(5), &mk(5)).unwrap(), 0.0);
        assert!(relief_ratio(&mk(10), &mk(5)).unwrap() < 0.0);
        assert!(matches!(relief_ratio(&mk(1), &mk(0)), Err(Error::ZeroBaseline)));
    }
}
