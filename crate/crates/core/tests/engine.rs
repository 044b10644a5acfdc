mod common;

use common::*;
use pushtrack::engine::{run, CancelCause, Outcome, Policy, Schedule};
use pushtrack::metrics::{ControlKind, TransferKind};
use pushtrack::strategies::{Strategy, WhenKind, WhomStrategy};
use pushtrack::time::MIB;

fn pnt(when: WhenKind, whom: WhomStrategy) -> Policy {
    Policy::PushAndTrack(Strategy::new(when, whom, false))
}

fn one(first_send: f64) -> Schedule {
    Schedule {
        first_send,
        n_messages: 1,
    }
}

#[test]
fn empty_trace_is_vacuously_delivered() {
    let sc = Contacts::new().scenario(100.0);
    let out = run(&config(), &sc, pnt(WhenKind::Quadratic, WhomStrategy::Random), one(0.0)).unwrap();
    assert_eq!(out.ledger.total(), Default::default());
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].eligible, 0);
    assert!(!out.series.is_empty());
    assert!(out.series.iter().all(|p| p.real_ratio == 1.0 && p.ctrl_ratio == 1.0));
}

#[test]
fn two_static_nodes_one_push_one_relay() {
    let sc = Contacts::new().enter(0.0, 1).enter(0.0, 2).up(0.0, 1, 2).scenario(200.0);
    let out = run(&config(), &sc, pnt(WhenKind::Quadratic, WhomStrategy::Random), one(0.0)).unwrap();
    let l = out.ledger.total();
    assert_eq!(l.infra_down_content, MIB);
    assert_eq!(l.adhoc_content, MIB);
    assert_eq!(l.infra_down_cancelled + l.adhoc_cancelled, 0);
    assert_eq!(l.infra_up.enter, 512);
    assert_eq!(l.infra_up.ack, 512);
    let r = &out.records[0];
    assert_eq!((r.delivered_on_time, r.eligible), (2, 2));
    assert_eq!(r.copies_pushed, 1);
    assert_eq!(r.panic_pushes, 0);
    assert_eq!(out.ledger_from_log(), out.ledger);
}

#[test]
fn runs_are_deterministic() {
    let sc = Contacts::new()
        .enter(0.0, 1)
        .enter(0.0, 2)
        .enter(3.0, 3)
        .up(5.0, 1, 3)
        .down(30.0, 1, 3)
        .scenario(200.0);
    let p = pnt(WhenKind::Linear, WhomStrategy::Random);
    let s = Schedule {
        first_send: 1.0,
        n_messages: 3,
    };
    let a = run(&config(), &sc, p, s).unwrap();
    let b = run(&config(), &sc, p, s).unwrap();
    assert_eq!(a, b);
}

#[test]
fn one_neighbour_at_a_time_lowest_id_first() {
    // 1 alone gets the single copy; 2 and 3 arrive later next to it
    let sc = Contacts::new()
        .enter(0.0, 1)
        .enter(20.0, 2)
        .enter(20.0, 3)
        .up(20.0, 1, 2)
        .up(20.0, 1, 3)
        .scenario(200.0);
    let out = run(&config(), &sc, pnt(WhenKind::SingleCopy, WhomStrategy::Random), one(1.0)).unwrap();
    let relays = completed(&out, TransferKind::AdhocContent);
    assert_eq!(relays.len(), 2);
    assert_eq!((relays[0].peer, relays[0].node), (Some(n(1)), n(2)));
    assert_eq!((secs(relays[0].started), secs(relays[0].ended)), (20.0, 21.0));
    assert_eq!((relays[1].peer, relays[1].node), (Some(n(1)), n(3)));
    assert_eq!(secs(relays[1].started), 21.0);
}

#[test]
fn chain_relays_one_second_per_hop() {
    let sc = Contacts::new()
        .enter(0.0, 1)
        .enter(0.0, 2)
        .enter(0.0, 3)
        .up(0.0, 1, 2)
        .up(0.0, 2, 3)
        .scenario(200.0);
    let out = run(&config(), &sc, pnt(WhenKind::SingleCopy, WhomStrategy::EntryOldest), one(1.0)).unwrap();
    let push = completed(&out, TransferKind::InfraContent);
    assert_eq!(push.len(), 1);
    assert_eq!(push[0].node, n(1));
    let t0 = secs(push[0].ended);
    assert!((t0 - 11.24).abs() < 1e-9);
    let relays = completed(&out, TransferKind::AdhocContent);
    assert_eq!(relays[0].node, n(2));
    assert!((secs(relays[0].ended) - (t0 + 1.0)).abs() < 1e-9);
    assert_eq!(relays[1].node, n(3));
    assert!((secs(relays[1].ended) - (t0 + 2.0)).abs() < 1e-9);
}

#[test]
fn contact_loss_at_half_way_charges_half() {
    // relay 1 -> 2 starts at 11.24 when the push lands; contact drops at 11.74
    let sc = Contacts::new()
        .enter(0.0, 1)
        .enter(0.0, 2)
        .up(0.0, 1, 2)
        .down(11.74, 1, 2)
        .scenario(200.0);
    let out = run(&config(), &sc, pnt(WhenKind::SingleCopy, WhomStrategy::EntryOldest), one(1.0)).unwrap();
    let cut: Vec<_> = out
        .transfers
        .iter()
        .filter(|t| t.outcome == Outcome::Cancelled(CancelCause::ContactDown))
        .collect();
    assert_eq!(cut.len(), 1);
    assert_eq!(cut[0].bytes_charged, MIB / 2);
    assert_eq!(out.ledger.per_message[0].adhoc_cancelled, MIB / 2);
    // 2 was not infected by the cut relay: it only gets the panic push
    assert_eq!(out.records[0].panic_pushes, 1);
    assert_eq!(out.records[0].delivered_on_time, 2);
}

#[test]
fn adhoc_arrival_cancels_parallel_push() {
    // 1 gets the first copy at 1.01; the curve asks for a second at 16.01 (to 2);
    // contact 1-2 at 20 relays in one second and cuts the push at 21.
    let sc = Contacts::new()
        .enter(0.0, 1)
        .enter(0.5, 2)
        .up(20.0, 1, 2)
        .scenario(200.0);
    let out = run(&config(), &sc, pnt(WhenKind::SquareRoot, WhomStrategy::EntryOldest), one(1.0)).unwrap();
    let cut: Vec<_> = out
        .transfers
        .iter()
        .filter(|t| t.outcome == Outcome::Cancelled(CancelCause::Duplicate))
        .collect();
    assert_eq!(cut.len(), 1);
    assert_eq!(cut[0].kind, TransferKind::InfraContent);
    assert_eq!(cut[0].node, n(2));
    assert!((secs(cut[0].started) - 16.01).abs() < 1e-9);
    assert!((secs(cut[0].ended) - 21.0).abs() < 1e-9);
    assert_eq!(cut[0].bytes_charged, 510_976);
    assert_eq!(out.ledger.per_message[0].infra_down_cancelled, 510_976);
}

#[test]
fn leave_during_push_fails_it() {
    let sc = Contacts::new().enter(0.0, 1).leave(5.0, 1).scenario(200.0);
    let out = run(&config(), &sc, pnt(WhenKind::SingleCopy, WhomStrategy::Random), one(1.0)).unwrap();
    let cut: Vec<_> = out
        .transfers
        .iter()
        .filter(|t| t.kind == TransferKind::InfraContent)
        .collect();
    assert_eq!(cut.len(), 1);
    assert_eq!(cut[0].outcome, Outcome::Cancelled(CancelCause::NodeLeft));
    // pushed at the 1.00 s tick: 4 s of 10.24 s
    assert_eq!(cut[0].bytes_charged, MIB * 400 / 1024);
    assert_eq!(out.ledger.total().infra_down_content, 0);
    assert_eq!(out.ledger.total().infra_up.leave, 256);
}

#[test]
fn ack_reaches_controller_after_uplink_time() {
    let sc = Contacts::new().enter(0.0, 1).scenario(200.0);
    let out = run(&config(), &sc, pnt(WhenKind::SingleCopy, WhomStrategy::Random), one(1.0)).unwrap();
    let acks = completed(&out, TransferKind::Control(ControlKind::Ack));
    assert_eq!(acks.len(), 1);
    assert!((secs(acks[0].ended) - secs(acks[0].started) - 0.025).abs() < 1e-12);
    assert_eq!(acks[0].msg, Some(0));
}

#[test]
fn leaving_mid_ack_loses_it_but_delivery_happened() {
    // push lands at 11.24, ACK would arrive at 11.265
    let sc = Contacts::new().enter(0.0, 1).leave(11.25, 1).scenario(200.0);
    let out = run(&config(), &sc, pnt(WhenKind::SingleCopy, WhomStrategy::Random), one(1.0)).unwrap();
    let acks: Vec<_> = out
        .transfers
        .iter()
        .filter(|t| t.kind == TransferKind::Control(ControlKind::Ack))
        .collect();
    assert_eq!(acks.len(), 1);
    assert_eq!(acks[0].outcome, Outcome::Cancelled(CancelCause::NodeLeft));
    assert_eq!(completed(&out, TransferKind::InfraContent).len(), 1);
}

#[test]
fn neighbour_reports_only_for_cc() {
    let sc = Contacts::new().enter(0.0, 1).enter(0.0, 2).up(1.0, 1, 2).scenario(400.0);
    let s = Schedule {
        first_send: 10.0,
        n_messages: 5,
    };
    let random = run(&config(), &sc, pnt(WhenKind::Linear, WhomStrategy::Random), s).unwrap();
    assert_eq!(random.ledger.total().infra_up.neighbors, 0);
    assert_eq!(random.ledger.total().infra_up.pos, 0);
    let cc = run(&config(), &sc, pnt(WhenKind::Linear, WhomStrategy::CC), s).unwrap();
    assert!(cc.ledger.total().infra_up.neighbors > 0);
    assert_eq!(cc.ledger.total().infra_up.neighbors % 256, 0);
}

#[test]
fn eligible_nodes_always_served() {
    // isolated nodes: only the panic push can serve them
    let sc = Contacts::new().enter(0.0, 1).enter(0.0, 2).enter(40.0, 3).enter(55.0, 4).scenario(200.0);
    let out = run(&config(), &sc, pnt(WhenKind::SingleCopy, WhomStrategy::Random), one(1.0)).unwrap();
    let r = &out.records[0];
    assert_eq!(r.eligible, 3);
    assert_eq!(r.delivered_on_time, 3);
    assert_eq!(r.late_entrants, 1);
    assert_eq!(r.late_delivered, 0);
    // 4 is pushed too, but the push cannot land before expiry
    assert_eq!(r.panic_pushes, 3);
}

#[test]
fn infra_only_pushes_everyone() {
    let sc = Contacts::new()
        .enter(0.0, 1)
        .enter(0.0, 2)
        .enter(0.0, 3)
        .up(0.0, 1, 2)
        .enter(20.0, 4)
        .enter(30.0, 5)
        .leave(35.0, 5)
        .scenario(200.0);
    let out = pushtrack::oracle::run_infra_only(&config(), &sc, one(1.0)).unwrap();
    let l = out.ledger.total();
    assert_eq!(l.infra_down_content, 4 * MIB);
    assert_eq!(l.adhoc_content + l.adhoc_cancelled, 0);
    assert!(l.infra_down_cancelled > 0 && l.infra_down_cancelled < MIB);
    assert_eq!(out.records[0].copies_pushed, 5);
    assert_eq!(out.records[0].delivered_on_time, 4);
}

#[test]
fn oracle_push_counts() {
    let p = pushtrack::oracle::run_oracle;
    let full = Contacts::new()
        .enter(0.0, 1)
        .enter(0.0, 2)
        .enter(0.0, 3)
        .up(0.0, 1, 2)
        .up(0.0, 2, 3)
        .up(0.0, 1, 3)
        .scenario(200.0);
    let out = p(&config(), &full, one(1.0)).unwrap();
    assert_eq!(out.records[0].copies_pushed, 1);
    assert_eq!(out.records[0].max_out_degree, Some(2));

    let iso = Contacts::new().enter(0.0, 1).enter(0.0, 2).enter(0.0, 3).scenario(200.0);
    let out = p(&config(), &iso, one(1.0)).unwrap();
    let base = pushtrack::oracle::run_infra_only(&config(), &iso, one(1.0)).unwrap();
    assert_eq!(out.records[0].copies_pushed, 3);
    assert_eq!(out.ledger.total().infra_down_content, base.ledger.total().infra_down_content);

    let two = Contacts::new()
        .enter(0.0, 1)
        .enter(0.0, 2)
        .enter(0.0, 3)
        .enter(0.0, 4)
        .up(0.0, 1, 2)
        .up(0.0, 3, 4)
        .scenario(1000.0);
    let long = pushtrack::engine::Config {
        period: 600.0,
        ..config()
    };
    let out = p(&long, &two, one(1.0)).unwrap();
    assert_eq!(out.records[0].copies_pushed, 2);
    assert_eq!(out.records[0].delivered_on_time, 4);
}
