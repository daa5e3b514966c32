//! Integration tests for the simulator surfaces: trace export and replay,
//! CSV/JSON output shape, and experiment bookkeeping.

use bsrone::protocol::{EventKind, Network, ProtocolParams};
use bsrone::sim::{output, run_routing_experiment, trace, SimConfig};
use bsrone::topsis::{AttributeVector, CriteriaBounds, CriteriaWeights};
use bsrone::{NetworkGeometry, NodeId};

fn params() -> ProtocolParams<f64> {
    ProtocolParams::new(
        CriteriaWeights::new([0.35, 0.3, 0.15, 0.2]).unwrap(),
        CriteriaBounds::new([100.0, 7200.0, 10.0, 10.0], [0.1, 1.0, 0.0, 0.0]).unwrap(),
    )
}

/// A mixed churn run exports a replayable trace: every record reproduces the
/// same message sequence when re-applied to a fresh network.
#[test]
fn mixed_run_traces_replay_faithfully() {
    let g = NetworkGeometry::default_mode(6, 2).unwrap();
    let mut net: Network<f64> = Network::new(g, params());
    net.set_trace_enabled(true);
    let mut t = 0;
    for (id, bw) in [(0u64, 40.0), (1, 10.0), (4, 55.0), (5, 30.0), (9, 20.0), (16, 70.0), (21, 35.0), (33, 25.0)] {
        net.advance_to(t);
        net.handle_join(NodeId(id), AttributeVector::new(bw, 0.0, 0, 5).unwrap(), None).unwrap();
        t += 3;
    }
    net.advance_to(t);
    net.handle_join(NodeId(17), AttributeVector::new(95.0, 0.0, 0, 9).unwrap(), Some(NodeId(4))).unwrap();
    net.advance_to(t + 5);
    net.handle_leave(NodeId(4)).unwrap();
    net.advance_to(t + 9);
    net.promote_on_improvement(NodeId(1), AttributeVector::new(99.0, 0.0, 0, 10).unwrap()).unwrap();
    net.advance_to(t + 12);
    net.lookup_recorded(NodeId(0), NodeId(21)).unwrap();
    net.advance_to(t + 20);
    net.crash_batch(&[NodeId(16), NodeId(9)]);

    let jsonl = trace::export_jsonl(&net).unwrap();
    assert!(jsonl.lines().count() > 10);
    let report = trace::replay::<f64>(&jsonl).unwrap();
    assert_eq!(report.records, net.trace().len());
    assert!(report.is_faithful(), "diverged at {:?}", report.mismatches);

    // The trace covers every event class it should.
    let kinds: Vec<EventKind> = net.trace().iter().map(|r| r.kind).collect();
    assert!(kinds.contains(&EventKind::Join));
    assert!(kinds.contains(&EventKind::Leave));
    assert!(kinds.contains(&EventKind::Promote));
    assert!(kinds.contains(&EventKind::Lookup));
    assert!(kinds.contains(&EventKind::Crash));
}

/// A tampered trace is reported as a mismatch rather than accepted.
#[test]
fn tampered_traces_are_detected() {
    let g = NetworkGeometry::default_mode(5, 2).unwrap();
    let mut net: Network<f64> = Network::new(g, params());
    net.set_trace_enabled(true);
    for (t, id) in [0u64, 4, 8, 1].iter().enumerate() {
        net.advance_to(t as u64);
        net.handle_join(NodeId(*id), AttributeVector::new(10.0 + *id as f64, 0.0, 0, 5).unwrap(), None).unwrap();
    }
    let good = trace::export_jsonl(&net).unwrap();
    let tampered = good.replace("\"JoinRequest\"", "\"JoinAccept\"");
    assert_ne!(good, tampered);
    let report = trace::replay::<f64>(&tampered).unwrap();
    assert!(!report.is_faithful());
}

/// CSV files carry the resolved config header and one row per step; the JSON
/// summary aggregates totals.
#[test]
fn outputs_embed_config_and_rows() {
    let cfg: SimConfig = SimConfig::routing(5);
    let metrics = run_routing_experiment(&cfg).unwrap();
    let dir = std::env::temp_dir().join(format!("bsrone-test-{}", std::process::id()));
    let paths = output::write_csv(&metrics, &cfg, &dir).unwrap();
    assert_eq!(paths.len(), 1);
    let text = std::fs::read_to_string(&paths[0]).unwrap();
    assert!(text.starts_with("# experiment = \"route\""));
    assert!(text.contains("# seed = 5"));
    assert!(text.contains("# section_exp = 5"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + cfg.routing_section_exps.len()); // header + steps

    let json = output::summary_json(&metrics, &cfg).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["experiment"], "route");
    assert_eq!(doc["seed"], 5);
    assert!(doc["aggregates"]["total_signals"]["lookup_request"].as_u64().unwrap() > 0);
    std::fs::remove_dir_all(&dir).ok();
}

/// The routing experiment records means never exceeding maxima, honors the
/// "at least ten messages" floor, and reaches the only other section head in
/// one jump when just two sections exist.
#[test]
fn routing_metrics_are_well_formed() {
    let mut cfg: SimConfig = SimConfig::routing(11);
    cfg.messages_per_step = 1; // floor kicks in
    let metrics = run_routing_experiment(&cfg).unwrap();
    metrics.validate().unwrap();
    let series = &metrics.series[0];
    for step in &series.steps {
        assert!(step.mean_hops <= step.max_hops as f64);
        assert!(step.signals["lookup_request"] >= 10);
    }
    assert_eq!(series.steps[0].max_hops, 1); // two active sections
}

/// Zero joins cost zero signals. The periodic attribute refresh is its own
/// signal source and is silenced to isolate the join cost.
#[test]
fn empty_join_batches_cost_nothing() {
    let mut cfg: SimConfig = bsrone::sim::SimConfig::join_overhead(4);
    cfg.join_batches = vec![0, 0];
    cfg.join_replicates = 2;
    cfg.refresh_interval = 0;
    let metrics = bsrone::sim::run_join_overhead(&cfg).unwrap();
    for series in &metrics.series {
        for step in &series.steps {
            assert_eq!(step.headline_signals, 0.0);
            assert_eq!(step.exchanges, 0);
        }
    }
}

/// A traced stability evolution exports a trace that replays faithfully.
#[test]
fn stability_trace_replays() {
    let mut cfg: SimConfig = SimConfig::stability(2);
    cfg.cohorts = 1;
    cfg.cohort_size = 120;
    let (steps, jsonl) = bsrone::sim::stability_trace(&cfg).unwrap();
    assert_eq!(steps.len(), 1);
    let report = trace::replay::<f64>(&jsonl).unwrap();
    assert!(report.is_faithful(), "diverged at {:?}", report.mismatches);
}

/// Config files round-trip and partial files inherit defaults.
#[test]
fn config_file_round_trip() {
    let cfg: SimConfig = SimConfig::stability(3);
    let text = cfg.to_toml_string().unwrap();
    let back = SimConfig::from_toml_str(&text).unwrap();
    assert_eq!(cfg, back);

    let partial: SimConfig = SimConfig::from_toml_str("seed = 9\ncluster_exp = 3\n").unwrap();
    assert_eq!(partial.seed, 9);
    assert_eq!(partial.cluster_exp, 3);
    assert_eq!(partial.ring_exp, 7);
    assert!(SimConfig::<f64>::from_toml_str("ring_exp = 4\ninitial_population = 400\n").is_err());
}

/// The whole simulator stack is generic over the scalar; single precision
/// works end to end.
#[test]
fn simulator_runs_in_single_precision() {
    let mut cfg: bsrone::sim::SimConfig<f32> = bsrone::sim::SimConfig {
        seed: 6,
        section_exp: Some(5),
        routing_section_exps: vec![1, 2],
        messages_per_step: 20,
        ..Default::default()
    };
    cfg.validate().unwrap();
    let metrics = run_routing_experiment(&cfg).unwrap();
    assert_eq!(metrics.series[0].steps.len(), 2);
    assert!(metrics.series[0].steps[0].mean_hops <= 1.0f32);
}
