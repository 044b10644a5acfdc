use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::{
    Collector, ControlKind, MetricsRecord, SeriesPoint, TransferEvent, TransferKind,
};
use crate::oracle::plan_message;
use crate::strategies::{panic_action, panic_check, Controller, ReportKind, SelectContext};
use crate::time::SimTime;
use crate::trace::{EventKind, NodeId};
use crate::Point;

use super::{
    CancelCause, Config, Message, NetworkState, Outcome, Policy, PushRecord, RunOutput, Scenario,
    Schedule, TransferRecord,
};

/// Upper bound on stored infection samples per message.
const MAX_SERIES_POINTS: u64 = 10_000;

// Priorities at equal timestamps.
const PRIO_TRACE: u8 = 0;
const PRIO_COMPLETION: u8 = 1;
const PRIO_REPORT: u8 = 2;
const PRIO_ROLLOVER: u8 = 3;
const PRIO_TICK: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Timed {
    Completion(usize),
    Report(usize),
}

#[derive(Clone, Debug)]
enum Payload {
    Content,
    Enter(f64),
    Leave,
    Ack(usize),
    Pos(Point, f64),
    Neighbors(BTreeSet<NodeId>, f64),
}

impl Payload {
    fn control_kind(&self) -> Option<ControlKind> {
        match self {
            Payload::Content => None,
            Payload::Enter(_) => Some(ControlKind::Enter),
            Payload::Leave => Some(ControlKind::Leave),
            Payload::Ack(_) => Some(ControlKind::Ack),
            Payload::Pos(..) => Some(ControlKind::Pos),
            Payload::Neighbors(..) => Some(ControlKind::Neighbors),
        }
    }
}

#[derive(Debug)]
struct Xfer {
    kind: TransferKind,
    node: usize,
    peer: Option<usize>,
    msg: Option<usize>,
    start: SimTime,
    end: SimTime,
    bytes: u64,
    payload: Payload,
    live: bool,
}

#[derive(Debug, Default)]
struct NodeRt {
    present: bool,
    entered: SimTime,
    pos: Option<Point>,
    neighbors: BTreeSet<usize>,
    infected: bool,
    adhoc: Option<usize>,
    infra_rx: Option<usize>,
    uplink: Option<usize>,
    queue: VecDeque<Payload>,
}

enum Brain {
    Pnt(Controller),
    InfraOnly,
    Oracle { members: BTreeSet<NodeId>, pushed: BTreeSet<NodeId> },
}

struct Sim<'a> {
    config: &'a Config,
    scenario: &'a Scenario,
    policy: Policy,
    ids: Vec<NodeId>,
    nodes: Vec<NodeRt>,
    xfers: Vec<Xfer>,
    heap: BinaryHeap<Reverse<(SimTime, u8, u64, Timed)>>,
    seq: u64,
    state: NetworkState,
    brain: Brain,
    rng: ChaCha8Rng,
    collector: Collector,
    log: Vec<TransferRecord>,
    records: Vec<MetricsRecord>,
    series: Vec<SeriesPoint>,
    pushes: Vec<PushRecord>,
    msg: Option<Message>,
    dirty: Vec<usize>,
    present_count: usize,
    infected_present: usize,
    churn: u64,
    tick_index: u64,
    stride: u64,
}

/// Runs one policy over a scenario for `schedule.n_messages` consecutive
/// messages and returns the metrics, ledger and transfer log.
pub fn run(config: &Config, scenario: &Scenario, policy: Policy, schedule: Schedule) -> Result<RunOutput> {
    config.validate()?;
    if !(schedule.first_send.is_finite() && schedule.first_send >= 0.0) {
        return Err(Error::Config("first_send must be a non-negative time".into()));
    }
    if schedule.n_messages == 0 {
        return Ok(RunOutput::default());
    }
    let mut sim = Sim::new(config, scenario, policy, schedule.n_messages);
    sim.run(schedule)?;
    Ok(sim.finish())
}

impl<'a> Sim<'a> {
    fn new(config: &'a Config, scenario: &'a Scenario, policy: Policy, n_messages: usize) -> Self {
        let ids = scenario.nodes();
        let nodes = ids.iter().map(|_| NodeRt::default()).collect();
        let brain = match policy {
            Policy::PushAndTrack(s) => Brain::Pnt(Controller::new(
                s,
                SelectContext {
                    bounds: scenario.bounds(),
                    max_depth: config.max_depth,
                },
            )),
            Policy::InfraOnly => Brain::InfraOnly,
            Policy::Oracle => Brain::Oracle {
                members: BTreeSet::new(),
                pushed: BTreeSet::new(),
            },
        };
        let ticks = config.period_time().nanos().div_ceil(config.tick_time().nanos());
        Sim {
            config,
            scenario,
            policy,
            ids,
            nodes,
            xfers: Vec::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            state: NetworkState::default(),
            brain,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            collector: Collector::new(n_messages),
            log: Vec::new(),
            records: Vec::with_capacity(n_messages),
            series: Vec::new(),
            pushes: Vec::new(),
            msg: None,
            dirty: Vec::new(),
            present_count: 0,
            infected_present: 0,
            churn: 0,
            tick_index: 0,
            stride: ticks.div_ceil(MAX_SERIES_POINTS).max(1),
        }
    }

    fn finish(self) -> RunOutput {
        RunOutput {
            records: self.records,
            ledger: self.collector.finish(),
            transfers: self.log,
            series: self.series,
            pushes: self.pushes,
        }
    }

    fn idx(&self, id: NodeId) -> usize {
        self.ids.binary_search(&id).expect("node ids come from the scenario")
    }

    fn schedule(&mut self, at: SimTime, prio: u8, what: Timed) {
        self.seq += 1;
        self.heap.push(Reverse((at, prio, self.seq, what)));
    }

    fn run(&mut self, schedule: Schedule) -> Result<()> {
        let period = self.config.period_time();
        let tick = self.config.tick_time();
        let first = SimTime::from_secs(schedule.first_send);
        let n = schedule.n_messages;
        let events = self.scenario.events();
        let mut cursor = 0;
        let mut next_rollover = first;
        let mut rollovers = 0usize;

        loop {
            let trace_key = events.get(cursor).map(|e| (SimTime::from_secs(e.time), PRIO_TRACE, 0));
            let heap_key = self.heap.peek().map(|Reverse((t, p, s, _))| (*t, *p, *s));
            let roll_key = Some((next_rollover, PRIO_ROLLOVER, 0));
            let tick_key = self
                .msg
                .map(|m| (m.created_at + SimTime(tick.nanos() * self.tick_index), m.expires_at))
                .filter(|(t, expires)| t < expires)
                .map(|(t, _)| (t, PRIO_TICK, 0));
            let next = [trace_key, heap_key, roll_key, tick_key]
                .into_iter()
                .flatten()
                .min()
                .expect("rollover always pending");

            let (now, prio, _) = next;
            match prio {
                PRIO_TRACE => {
                    let kind = events[cursor].kind;
                    cursor += 1;
                    self.on_trace(now, kind)?;
                }
                PRIO_COMPLETION | PRIO_REPORT => {
                    let Reverse((_, _, _, what)) = self.heap.pop().expect("peeked");
                    match what {
                        Timed::Completion(x) => self.on_completion(now, x)?,
                        Timed::Report(i) => self.on_report(now, i),
                    }
                }
                PRIO_ROLLOVER => {
                    if let Some(m) = self.msg.take() {
                        self.expire(now, m)?;
                    }
                    rollovers += 1;
                    if rollovers > n {
                        self.cut_control(now)?;
                        return Ok(());
                    }
                    let id = rollovers - 1;
                    let m = Message {
                        id,
                        created_at: now,
                        expires_at: now + period,
                        size: self.config.content_size,
                    };
                    self.create(m);
                    next_rollover = m.expires_at;
                }
                _ => {
                    let m = self.msg.expect("tick without message");
                    self.on_tick(now, m)?;
                    self.tick_index += 1;
                }
            }
            self.epidemic_step(now)?;
        }
    }

    // ---- trace ----

    fn on_trace(&mut self, now: SimTime, kind: EventKind) -> Result<()> {
        match kind {
            EventKind::Enter { node, pos } => {
                let i = self.idx(node);
                let rt = &mut self.nodes[i];
                rt.present = true;
                rt.entered = now;
                rt.pos = pos;
                self.present_count += 1;
                self.churn += 1;
                self.enqueue(now, i, Payload::Enter(now.as_secs()))?;
                if self.policy.reports() != ReportKind::None {
                    let at = now + SimTime::from_secs(self.config.report_interval);
                    self.schedule(at, PRIO_REPORT, Timed::Report(i));
                }
                self.dirty.push(i);
            }
            EventKind::Position { node, pos } => {
                let i = self.idx(node);
                self.nodes[i].pos = Some(pos);
            }
            EventKind::ContactUp { a, b } => {
                let (a, b) = (self.idx(a), self.idx(b));
                self.nodes[a].neighbors.insert(b);
                self.nodes[b].neighbors.insert(a);
                self.dirty.extend([a, b]);
            }
            EventKind::ContactDown { a, b } => {
                let (a, b) = (self.idx(a), self.idx(b));
                self.nodes[a].neighbors.remove(&b);
                self.nodes[b].neighbors.remove(&a);
                if let Some(x) = self.nodes[a].adhoc {
                    if self.nodes[b].adhoc == Some(x) {
                        self.cancel(now, x, CancelCause::ContactDown)?;
                    }
                }
            }
            EventKind::Leave { node } => self.on_leave(now, self.idx(node))?,
        }
        Ok(())
    }

    fn on_leave(&mut self, now: SimTime, i: usize) -> Result<()> {
        if let Some(x) = self.nodes[i].adhoc {
            self.cancel(now, x, CancelCause::NodeLeft)?;
        }
        if let Some(x) = self.nodes[i].infra_rx {
            self.cancel(now, x, CancelCause::NodeLeft)?;
            // the infrastructure sees the push fail
            let id = self.ids[i];
            self.state.pushing.remove(&id);
            self.state.unsubscribe(id);
        }
        if let Some(x) = self.nodes[i].uplink {
            self.cancel(now, x, CancelCause::NodeLeft)?;
        }
        let neighbours = std::mem::take(&mut self.nodes[i].neighbors);
        for nb in neighbours {
            self.nodes[nb].neighbors.remove(&i);
        }
        let rt = &mut self.nodes[i];
        rt.queue.clear();
        rt.present = false;
        if rt.infected {
            self.infected_present -= 1;
        }
        self.present_count -= 1;
        self.churn += 1;
        self.start_uplink(now, i, Payload::Leave);
        Ok(())
    }

    // ---- transfers ----

    fn attribution(&self, payload: &Payload) -> Option<usize> {
        match payload {
            Payload::Ack(m) => Some(*m),
            _ => self.msg.map(|m| m.id),
        }
    }

    fn start(&mut self, now: SimTime, kind: TransferKind, node: usize, peer: Option<usize>, payload: Payload) -> usize {
        let (bytes, rate) = match kind {
            TransferKind::AdhocContent => (self.config.content_size, self.config.adhoc_rate),
            TransferKind::InfraContent => (self.config.content_size, self.config.infra_down_rate),
            TransferKind::Control(_) => (self.config.ctrl_size, self.config.infra_up_rate),
        };
        let end = now + SimTime::transfer(bytes, rate);
        let id = self.xfers.len();
        let msg = self.attribution(&payload);
        self.xfers.push(Xfer {
            kind,
            node,
            peer,
            msg,
            start: now,
            end,
            bytes,
            payload,
            live: true,
        });
        self.schedule(end, PRIO_COMPLETION, Timed::Completion(id));
        id
    }

    fn start_uplink(&mut self, now: SimTime, i: usize, payload: Payload) {
        let kind = TransferKind::Control(payload.control_kind().expect("control payload"));
        let x = self.start(now, kind, i, None, payload);
        self.nodes[i].uplink = Some(x);
    }

    fn enqueue(&mut self, now: SimTime, i: usize, payload: Payload) -> Result<()> {
        self.nodes[i].queue.push_back(payload);
        if self.nodes[i].uplink.is_none() {
            self.next_uplink(now, i);
        }
        Ok(())
    }

    fn next_uplink(&mut self, now: SimTime, i: usize) {
        if let Some(p) = self.nodes[i].queue.pop_front() {
            self.start_uplink(now, i, p);
        }
    }

    /// Closes a transfer and charges its bytes.
    fn close(&mut self, now: SimTime, x: usize, outcome: Outcome) -> Result<()> {
        let t = &mut self.xfers[x];
        debug_assert!(t.live);
        t.live = false;
        let charged = match outcome {
            Outcome::Completed => t.bytes,
            Outcome::Cancelled(_) => {
                let elapsed = now.saturating_sub(t.start).nanos() as u128;
                let total = (t.end - t.start).nanos().max(1) as u128;
                ((t.bytes as u128 * elapsed.min(total)) / total) as u64
            }
        };
        self.log.push(TransferRecord {
            kind: t.kind,
            node: self.ids[t.node],
            peer: t.peer.map(|p| self.ids[p]),
            msg: t.msg,
            started: t.start,
            ended: now,
            bytes_total: t.bytes,
            bytes_charged: charged,
            outcome,
        });
        self.collector.record(TransferEvent {
            at: now,
            kind: t.kind,
            msg: t.msg,
            bytes: charged,
            completed: outcome == Outcome::Completed,
        })
    }

    /// Cancels a live transfer, charging the bytes moved so far, and frees
    /// the endpoints.
    fn cancel(&mut self, now: SimTime, x: usize, cause: CancelCause) -> Result<()> {
        self.close(now, x, Outcome::Cancelled(cause))?;
        let (kind, node, peer) = {
            let t = &self.xfers[x];
            (t.kind, t.node, t.peer)
        };
        match kind {
            TransferKind::AdhocContent => {
                self.nodes[node].adhoc = None;
                let src = peer.expect("ad-hoc sender");
                self.nodes[src].adhoc = None;
                self.dirty.extend([node, src]);
            }
            TransferKind::InfraContent => self.nodes[node].infra_rx = None,
            TransferKind::Control(_) => self.nodes[node].uplink = None,
        }
        Ok(())
    }

    fn on_completion(&mut self, now: SimTime, x: usize) -> Result<()> {
        if !self.xfers[x].live {
            return Ok(());
        }
        self.close(now, x, Outcome::Completed)?;
        let (kind, node, peer) = {
            let t = &self.xfers[x];
            (t.kind, t.node, t.peer)
        };
        match kind {
            TransferKind::AdhocContent => {
                self.nodes[node].adhoc = None;
                let src = peer.expect("ad-hoc sender");
                self.nodes[src].adhoc = None;
                self.dirty.push(src);
                self.deliver(now, node)?;
            }
            TransferKind::InfraContent => {
                self.nodes[node].infra_rx = None;
                self.deliver(now, node)?;
            }
            TransferKind::Control(_) => {
                if self.nodes[node].uplink == Some(x) {
                    self.nodes[node].uplink = None;
                }
                let payload = std::mem::replace(&mut self.xfers[x].payload, Payload::Content);
                self.controller_receive(node, payload);
                if self.nodes[node].present {
                    self.next_uplink(now, node);
                }
            }
        }
        Ok(())
    }

    fn deliver(&mut self, now: SimTime, i: usize) -> Result<()> {
        let m = self.msg.expect("content only flows while a message is live");
        debug_assert!(!self.nodes[i].infected);
        self.nodes[i].infected = true;
        self.infected_present += 1;
        if let Some(x) = self.nodes[i].infra_rx {
            self.cancel(now, x, CancelCause::Duplicate)?;
        }
        if let Some(x) = self.nodes[i].adhoc {
            self.cancel(now, x, CancelCause::Duplicate)?;
        }
        self.dirty.push(i);
        self.enqueue(now, i, Payload::Ack(m.id))
    }

    fn controller_receive(&mut self, i: usize, payload: Payload) {
        let id = self.ids[i];
        match payload {
            Payload::Enter(t) => self.state.subscribe(id, t),
            Payload::Leave => self.state.unsubscribe(id),
            Payload::Ack(m) => {
                if self.msg.map(|c| c.id) == Some(m) && self.state.subscribers.contains(&id) {
                    self.state.pushing.remove(&id);
                    self.state.acked.insert(id);
                }
            }
            Payload::Pos(p, t) => {
                if self.state.subscribers.contains(&id) {
                    self.state.last_position.insert(id, (p, t));
                }
            }
            Payload::Neighbors(ns, t) => {
                if self.state.subscribers.contains(&id) {
                    self.state.last_neighbors.insert(id, (ns, t));
                }
            }
            Payload::Content => unreachable!("content is not a control message"),
        }
    }

    fn on_report(&mut self, now: SimTime, i: usize) {
        if !self.nodes[i].present {
            return;
        }
        let payload = match self.policy.reports() {
            ReportKind::Position => self.nodes[i].pos.map(|p| Payload::Pos(p, now.as_secs())),
            ReportKind::Neighbors => {
                let ns = self.nodes[i].neighbors.iter().map(|&j| self.ids[j]).collect();
                Some(Payload::Neighbors(ns, now.as_secs()))
            }
            ReportKind::None => None,
        };
        if let Some(p) = payload {
            self.enqueue(now, i, p).expect("enqueue");
        }
        let at = now + SimTime::from_secs(self.config.report_interval);
        self.schedule(at, PRIO_REPORT, Timed::Report(i));
    }

    // ---- epidemic ----

    /// Starts ad-hoc transfers for every infected, idle node next to an
    /// uninfected, idle neighbour, lowest (src, dst) first. Only pairs with
    /// an endpoint whose state changed since the last step can be new.
    fn epidemic_step(&mut self, now: SimTime) -> Result<()> {
        if self.dirty.is_empty() {
            return Ok(());
        }
        let mut dirty = std::mem::take(&mut self.dirty);
        if !self.policy.adhoc_enabled() || self.msg.is_none() {
            return Ok(());
        }
        dirty.sort_unstable();
        dirty.dedup();
        let mut pairs = Vec::new();
        for &d in &dirty {
            let rt = &self.nodes[d];
            if !rt.present || rt.adhoc.is_some() {
                continue;
            }
            for &nb in &rt.neighbors {
                let other = &self.nodes[nb];
                if other.adhoc.is_some() || other.infected == rt.infected {
                    continue;
                }
                pairs.push(if rt.infected { (d, nb) } else { (nb, d) });
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        for (src, dst) in pairs {
            if self.nodes[src].adhoc.is_none() && self.nodes[dst].adhoc.is_none() && !self.nodes[dst].infected {
                let x = self.start(now, TransferKind::AdhocContent, dst, Some(src), Payload::Content);
                self.nodes[src].adhoc = Some(x);
                self.nodes[dst].adhoc = Some(x);
            }
        }
        dirty.clear();
        self.dirty = dirty;
        Ok(())
    }

    // ---- messages and controller ----

    fn create(&mut self, m: Message) {
        self.msg = Some(m);
        self.tick_index = 0;
        match &mut self.brain {
            Brain::Pnt(c) => c.on_message(&m),
            Brain::InfraOnly => {}
            Brain::Oracle { members, pushed } => {
                let (ds, k) = plan_message(self.scenario.events(), m.created_at.as_secs(), m.expires_at.as_secs());
                *members = ds.members;
                pushed.clear();
                self.records.push(MetricsRecord {
                    max_out_degree: Some(k),
                    ..MetricsRecord::default()
                });
                return;
            }
        }
        self.records.push(MetricsRecord::default());
    }

    fn on_tick(&mut self, now: SimTime, m: Message) -> Result<()> {
        let frozen_before = match &self.brain {
            Brain::Pnt(c) => c.frozen_until(),
            _ => SimTime::ZERO,
        };
        let (targets, panic) = match &mut self.brain {
            Brain::Pnt(c) => {
                let d = c.tick(now, &m, &self.state, self.config, &mut self.rng);
                (d.targets, d.panic)
            }
            Brain::InfraOnly => {
                let panic = panic_check(now, &m, self.config);
                (panic_action(&self.state), panic)
            }
            Brain::Oracle { members, pushed } => {
                if panic_check(now, &m, self.config) {
                    (panic_action(&self.state), true)
                } else {
                    let t: Vec<NodeId> = members
                        .iter()
                        .copied()
                        .filter(|n| {
                            !pushed.contains(n) && self.state.subscribers.contains(n) && !self.state.is_infected(*n)
                        })
                        .collect();
                    pushed.extend(t.iter().copied());
                    (t, false)
                }
            }
        };
        let rec = self.records.last_mut().expect("record per message");
        rec.copies_pushed += targets.len();
        if panic {
            rec.panic_pushes += targets.len();
        }
        for n in targets {
            self.pushes.push(PushRecord {
                at: now,
                msg: m.id,
                node: n,
                panic,
                frozen_until: frozen_before,
            });
            self.push(now, n)?;
        }
        if self.tick_index % self.stride == 0 {
            let real = if self.present_count == 0 {
                1.0
            } else {
                self.infected_present as f64 / self.present_count as f64
            };
            self.series.push(SeriesPoint {
                msg: m.id,
                t: now.as_secs(),
                real_ratio: real,
                ctrl_ratio: self.state.ratio(),
                churn: self.churn,
            });
        }
        Ok(())
    }

    /// Infrastructure push issued by the controller.
    fn push(&mut self, now: SimTime, n: NodeId) -> Result<()> {
        self.state.pushing.insert(n);
        let i = self.idx(n);
        let rt = &self.nodes[i];
        if !rt.present {
            // the node left before its LEAVE arrived: the push fails at once
            self.state.pushing.remove(&n);
            self.state.unsubscribe(n);
            return Ok(());
        }
        if rt.infected || rt.infra_rx.is_some() {
            return Ok(());
        }
        let x = self.start(now, TransferKind::InfraContent, i, None, Payload::Content);
        self.nodes[i].infra_rx = Some(x);
        Ok(())
    }

    fn expire(&mut self, now: SimTime, m: Message) -> Result<()> {
        let horizon = self.config.delivery_horizon();
        let rec = self.records.last_mut().expect("record per message");
        rec.msg_id = m.id;
        rec.created_at = m.created_at.as_secs();
        rec.expires_at = m.expires_at.as_secs();
        for rt in self.nodes.iter().filter(|rt| rt.present) {
            if now.saturating_sub(rt.entered) >= horizon {
                rec.eligible += 1;
                rec.delivered_on_time += rt.infected as usize;
            } else {
                rec.late_entrants += 1;
                rec.late_delivered += rt.infected as usize;
            }
        }
        for i in 0..self.nodes.len() {
            if let Some(x) = self.nodes[i].adhoc {
                self.cancel(now, x, CancelCause::Expired)?;
            }
            if let Some(x) = self.nodes[i].infra_rx {
                self.cancel(now, x, CancelCause::Expired)?;
            }
            self.nodes[i].infected = false;
        }
        self.infected_present = 0;
        self.state.reset_message();
        self.dirty.clear();
        Ok(())
    }

    fn cut_control(&mut self, now: SimTime) -> Result<()> {
        for x in 0..self.xfers.len() {
            if self.xfers[x].live {
                self.cancel(now, x, CancelCause::EndOfRun)?;
            }
        }
        Ok(())
    }
}
