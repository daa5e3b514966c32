//! Scripted protocol reenactments with exact expected message sequences.
//!
//! Both scenarios build their network twice and require byte-identical trace
//! exports, then verify the trace replays faithfully.

use bsrone::protocol::{MessageKind, Network, ProtocolParams, Role};
use bsrone::sim::trace;
use bsrone::topsis::{AttributeVector, CriteriaBounds, CriteriaWeights};
use bsrone::{NetworkGeometry, NodeId};

use MessageKind::*;

fn params() -> ProtocolParams<f64> {
    ProtocolParams::new(
        CriteriaWeights::new([0.35, 0.3, 0.15, 0.2]).unwrap(),
        CriteriaBounds::new([100.0, 7200.0, 10.0, 10.0], [0.1, 1.0, 0.0, 0.0]).unwrap(),
    )
}

fn attrs(bandwidth: f64, willingness: u8) -> AttributeVector<f64> {
    AttributeVector::new(bandwidth, 0.0, 0, willingness).unwrap()
}

fn msg(kind: MessageKind, from: u64, to: u64) -> (MessageKind, NodeId, NodeId) {
    (kind, NodeId(from), NodeId(to))
}

/// A newcomer at id 25 contacts head 4, outranks the weakest head (16), and
/// takes over its position by id exchange; afterwards requests addressed to
/// either id reach the right holder through one forwarding step.
fn build_newcomer_scenario() -> Network<f64> {
    let g = NetworkGeometry::default_mode(5, 2).unwrap();
    let mut net: Network<f64> = Network::new(g, params());
    net.set_trace_enabled(true);
    // Cluster 0 is headed by a symlink holder; clusters 20 and 28 stay dark.
    let setup: &[(u64, u64, f64)] = &[
        (0, 1, 30.0),
        (1, 4, 60.0),
        (2, 8, 55.0),
        (3, 12, 70.0),
        (4, 16, 20.0),
        (5, 24, 58.0),
    ];
    for &(t, id, bw) in setup {
        net.advance_to(t);
        net.handle_join(NodeId(id), attrs(bw, 5), None).unwrap();
    }
    net.advance_to(10);
    net.handle_join(NodeId(25), attrs(90.0, 10), Some(NodeId(4))).unwrap();
    net
}

pub fn newcomer_takeover_scenario() {
    let net = build_newcomer_scenario();

    // The position at 0 is served by symlink, exactly as staged.
    assert_eq!(net.node(NodeId(1)).unwrap().symlink_id, Some(NodeId(0)));
    assert!(!net.activation().cluster_active(5));
    assert!(!net.activation().cluster_active(7));

    // Final roles: the newcomer serves the weakest head's position and both
    // exchange counters grew.
    let newcomer = net.node(NodeId(25)).unwrap();
    assert_eq!(newcomer.role, Role::Super);
    assert_eq!(newcomer.symlink_id, Some(NodeId(16)));
    assert_eq!(newcomer.attrs.id_exchanges, 1);
    let demoted = net.node(NodeId(16)).unwrap();
    assert_eq!(demoted.role, Role::Substitute);
    assert_eq!(demoted.symlink_id, None);
    assert_eq!(demoted.attrs.id_exchanges, 1);
    assert_eq!(net.acting_head(4), Some(NodeId(25)));

    // Exact message sequence of the takeover join.
    let join = net.trace().last().unwrap();
    assert_eq!(join.actor, NodeId(25));
    assert_eq!(join.via, Some(NodeId(4)));
    let expected = vec![
        msg(JoinRequest, 25, 4),
        msg(IdExchange, 25, 16),
        msg(SuperNodeUpdate, 16, 0),
        msg(SuperNodeUpdate, 16, 4),
        msg(SuperNodeUpdate, 16, 8),
        msg(SuperNodeUpdate, 16, 12),
        msg(SuperNodeUpdate, 16, 24),
        msg(SubstituteSync, 16, 16),
        msg(JoinAccept, 4, 25),
    ];
    assert_eq!(join.messages, expected, "takeover join emitted a different sequence");

    // Requests addressed to either id resolve with one forwarding step.
    let to_position = net.lookup(NodeId(4), NodeId(16)).unwrap();
    assert!(to_position.found);
    assert_eq!(to_position.inter_cluster_hops, 1);
    assert_eq!(to_position.forwarding_steps, 1);
    let to_real = net.lookup(NodeId(4), NodeId(25)).unwrap();
    assert!(to_real.found);
    assert_eq!(to_real.forwarding_steps, 1);

    // Identical runs export identical bytes, and the trace replays cleanly.
    let a = trace::export_jsonl(&net).unwrap();
    let b = trace::export_jsonl(&build_newcomer_scenario()).unwrap();
    assert_eq!(a, b, "trace export is not reproducible");
    let report = trace::replay::<f64>(&a).unwrap();
    assert!(report.is_faithful(), "replay diverged at {:?}", report.mismatches);
}

/// Head 0 departs from a six-cluster network with the clusters at 8 and 24
/// dark. Its substitute takes over and the replacement query circulates
/// 4 -> 12 -> 16 -> 20 -> 28, with the lone head 12 contributing nothing;
/// the best spare (21) wins the election and takes the position.
fn build_departure_scenario() -> Network<f64> {
    let g = NetworkGeometry::default_mode(5, 2).unwrap();
    let mut net: Network<f64> = Network::new(g, params());
    net.set_trace_enabled(true);
    let setup: &[(u64, u64, f64)] = &[
        (0, 0, 50.0),  // departing head
        (1, 1, 10.0),  // its substitute
        (2, 4, 60.0),
        (3, 5, 20.0),
        (4, 12, 70.0), // lone head: nothing to suggest
        (5, 16, 55.0),
        (6, 17, 30.0),
        (7, 20, 65.0),
        (8, 21, 35.0), // strongest spare in the network
        (9, 28, 58.0),
        (10, 29, 25.0),
    ];
    for &(t, id, bw) in setup {
        net.advance_to(t);
        net.handle_join(NodeId(id), attrs(bw, 5), None).unwrap();
    }
    net.advance_to(100);
    net.handle_leave(NodeId(0)).unwrap();
    net
}

pub fn departure_election_scenario() {
    let net = build_departure_scenario();

    // The election winner serves position 0 by symlink; the promoted
    // substitute returned to shadowing it.
    assert_eq!(net.acting_head(0), Some(NodeId(21)));
    let winner = net.node(NodeId(21)).unwrap();
    assert_eq!(winner.role, Role::Super);
    assert_eq!(winner.symlink_id, Some(NodeId(0)));
    assert_eq!(winner.attrs.id_exchanges, 1);
    let shadow = net.node(NodeId(1)).unwrap();
    assert_eq!(shadow.role, Role::Substitute);
    assert_eq!(shadow.attrs.id_exchanges, 1);

    let leave = net.trace().last().unwrap();
    assert_eq!(leave.actor, NodeId(0));
    let expected = vec![
        // The substitute announces its takeover to every other head.
        msg(SubstitutePromotion, 0, 4),
        msg(SubstitutePromotion, 0, 12),
        msg(SubstitutePromotion, 0, 16),
        msg(SubstitutePromotion, 0, 20),
        msg(SubstitutePromotion, 0, 28),
        // The replacement query circulates clockwise from the successor,
        // skipping the dark clusters at 8 and 24.
        msg(ReplacementQuery, 1, 4),
        msg(ReplacementQuery, 4, 12),
        msg(ReplacementQuery, 12, 16),
        msg(ReplacementQuery, 16, 20),
        msg(ReplacementQuery, 20, 28),
        msg(ReplacementAnswer, 28, 0),
        // The winner outranks the promoted substitute and takes over.
        msg(IdExchange, 21, 1),
        msg(SuperNodeUpdate, 0, 4),
        msg(SuperNodeUpdate, 0, 12),
        msg(SuperNodeUpdate, 0, 16),
        msg(SuperNodeUpdate, 0, 20),
        msg(SuperNodeUpdate, 0, 28),
        msg(SubstituteSync, 0, 1),
        // The concluded election is announced.
        msg(SuperNodeUpdate, 0, 4),
        msg(SuperNodeUpdate, 0, 12),
        msg(SuperNodeUpdate, 0, 16),
        msg(SuperNodeUpdate, 0, 20),
        msg(SuperNodeUpdate, 0, 28),
    ];
    assert_eq!(leave.messages, expected, "departure emitted a different sequence");

    // Per-departure accounting: two broadcast classes plus the ring.
    let signals = net.signals();
    assert_eq!(signals.count(SubstitutePromotion), 5);
    assert_eq!(signals.count(ReplacementQuery), 5);
    assert_eq!(signals.count(ReplacementAnswer), 1);

    let a = trace::export_jsonl(&net).unwrap();
    let b = trace::export_jsonl(&build_departure_scenario()).unwrap();
    assert_eq!(a, b, "trace export is not reproducible");
    let report = trace::replay::<f64>(&a).unwrap();
    assert!(report.is_faithful(), "replay diverged at {:?}", report.mismatches);
}
