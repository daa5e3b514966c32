//! The four experiment families: routing efficiency over growing section
//! counts, join and leave overhead across cluster sizes, fault tolerance
//! under crash waves, and the march toward role stability under matched
//! churn.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, LogNormal};

use super::engine::{Engine, SimEvent};
use super::{name_counts, Metrics, RngStreams, Series, SimConfig, SimError, StepMetrics};
use crate::num::Real;
use crate::protocol::{MessageKind, Network, ProtocolParams};
use crate::ring::{NetworkGeometry, NodeId};
use crate::topsis::AttributeVector;

/// Synthetic node attributes: log-normal bandwidth, uniform willingness,
/// fresh exchange counters. Session time accrues from the clock.
pub(crate) struct AttrSampler {
    bandwidth: LogNormal<f64>,
}

impl AttrSampler {
    pub(crate) fn new<T: Real>(cfg: &SimConfig<T>) -> Result<Self, SimError> {
        let bandwidth = LogNormal::new(cfg.bandwidth_mu, cfg.bandwidth_sigma)
            .map_err(|e| SimError::Config(format!("bandwidth distribution: {e}")))?;
        Ok(Self { bandwidth })
    }

    pub(crate) fn sample<T: Real>(&self, rng: &mut ChaCha12Rng) -> AttributeVector<T> {
        let bw = self.bandwidth.sample(rng);
        let willingness = rng.gen_range(0..=10u8);
        AttributeVector::new(T::from_f64_lossy(bw), T::zero(), 0, willingness)
            .expect("sampled willingness is in range")
    }
}

/// Session lengths in ticks, at least 1.
struct SessionSampler {
    family: super::SessionFamily,
    exp: Exp<f64>,
    lognormal: LogNormal<f64>,
}

impl SessionSampler {
    fn new<T: Real>(cfg: &SimConfig<T>) -> Result<Self, SimError> {
        Ok(Self {
            family: cfg.session_family,
            exp: Exp::new(1.0 / cfg.session_scale)
                .map_err(|e| SimError::Config(format!("session distribution: {e}")))?,
            lognormal: LogNormal::new(cfg.session_scale.ln(), cfg.session_sigma)
                .map_err(|e| SimError::Config(format!("session distribution: {e}")))?,
        })
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> u64 {
        let ticks = match self.family {
            super::SessionFamily::Exponential => self.exp.sample(rng),
            super::SessionFamily::LogNormal => self.lognormal.sample(rng),
        };
        (ticks.round() as u64).max(1)
    }
}

fn draw_unoccupied<T: Real>(net: &Network<T>, rng: &mut ChaCha12Rng) -> Option<NodeId> {
    let size = net.geometry().ring_size();
    if net.population() as u64 >= size {
        return None;
    }
    loop {
        let id = NodeId(rng.gen_range(0..size));
        if net.node(id).is_none() {
            return Some(id);
        }
    }
}

fn draw_present<T: Real>(net: &Network<T>, rng: &mut ChaCha12Rng) -> Option<NodeId> {
    if net.population() == 0 {
        return None;
    }
    let k = rng.gen_range(0..net.population());
    net.present_ids().nth(k)
}

fn random_contact<T: Real>(net: &Network<T>, rng: &mut ChaCha12Rng) -> Option<NodeId> {
    let heads = net.served_positions();
    if heads.is_empty() {
        None
    } else {
        Some(heads[rng.gen_range(0..heads.len())])
    }
}

/// Snapshot of everything a step record needs.
struct StepProbe {
    signals: BTreeMap<MessageKind, u64>,
}

impl StepProbe {
    fn begin<T: Real>(net: &Network<T>) -> Self {
        Self {
            signals: net.signals().snapshot(),
        }
    }

    fn finish<T: Real>(&self, net: &Network<T>, step: u32, headline: Headline) -> StepMetrics<T> {
        let delta = net.signals().delta(&self.signals);
        let headline_signals: u64 = match headline {
            Headline::Kind(k) => delta.get(&k).copied().unwrap_or(0),
            Headline::Churn => delta
                .iter()
                .filter(|(k, _)| {
                    !matches!(
                        k,
                        MessageKind::JoinRequest
                            | MessageKind::JoinAccept
                            | MessageKind::LookupRequest
                            | MessageKind::LookupReply
                    )
                })
                .map(|(_, v)| v)
                .sum(),
            Headline::LeaveMaintenance => delta
                .iter()
                .filter(|(k, _)| {
                    matches!(
                        k,
                        MessageKind::IdExchange
                            | MessageKind::SuperNodeUpdate
                            | MessageKind::ReplacementQuery
                            | MessageKind::ReplacementAnswer
                            | MessageKind::SubstitutePromotion
                    )
                })
                .map(|(_, v)| v)
                .sum(),
            Headline::None => 0,
        };
        StepMetrics {
            step,
            mean_hops: T::zero(),
            max_hops: 0,
            headline_signals: T::from_u64_lossy(headline_signals),
            signals: name_counts(&delta),
            exchanges: delta.get(&MessageKind::IdExchange).copied().unwrap_or(0),
            failed_clusters: T::from_u64_lossy(net.failed_clusters().len() as u64),
            population: net.population() as u32,
            active_heads: net.acting_head_count() as u32,
        }
    }
}

enum Headline {
    Kind(MessageKind),
    /// Maintenance traffic: everything except the join and lookup unicasts.
    Churn,
    /// Departure maintenance: promotions, announcements, the election ring
    /// and exchanges; shadow synchronization is reported separately.
    LeaveMaintenance,
    None,
}

/// Drains the engine, applying churn events to the network; `on_mark` runs at
/// every step boundary. Verifies the queue accounting afterwards.
fn drive<T: Real>(
    engine: &mut Engine<T>,
    net: &mut Network<T>,
    streams: &mut RngStreams,
    mut on_mark: impl FnMut(&mut Network<T>, u32),
) -> Result<(), SimError> {
    while let Some((time, event)) = engine.pop() {
        net.advance_to(time);
        match event {
            SimEvent::JoinRandom { attrs } => {
                if let Some(id) = draw_unoccupied(net, &mut streams.ids) {
                    let via = random_contact(net, &mut streams.churn);
                    net.handle_join(id, attrs, via)?;
                }
            }
            SimEvent::JoinAt { id, attrs, via } => {
                net.handle_join(id, attrs, via)?;
            }
            SimEvent::LeaveRandom => {
                if let Some(id) = draw_present(net, &mut streams.churn) {
                    net.handle_leave(id)?;
                }
            }
            SimEvent::LeaveAt { id } => {
                net.handle_leave(id)?;
            }
            SimEvent::CrashWave { ids } => {
                net.crash_batch(&ids);
            }
            SimEvent::Refresh => {
                net.refresh_attributes()?;
            }
            SimEvent::Mark { label } => on_mark(net, label),
        }
    }
    let (scheduled, processed) = engine.accounting();
    debug_assert_eq!(scheduled, processed, "event queue dropped events");
    Ok(())
}

/// Routing efficiency: per step k a fresh fully active ring with 2^k
/// sections, at least ten lookups between random supreme pairs, mean and max
/// jumps recorded.
pub fn run_routing_experiment<T: Real>(cfg: &SimConfig<T>) -> Result<Metrics<T>, SimError> {
    cfg.validate()?;
    let section_exp = cfg.section_exp.unwrap_or(5);
    let cluster_exp = cfg.cluster_exp.min(section_exp);
    let params = cfg.protocol_params()?;
    let sampler = AttrSampler::new(cfg)?;
    let messages = cfg.messages_per_step.max(10);

    let mut steps = Vec::new();
    let mut signal_totals: BTreeMap<String, u64> = BTreeMap::new();
    for &k in &cfg.routing_section_exps {
        let sections = 1u64 << k;
        if sections < 2 {
            log::info!("routing step {k}: fewer than 2 active sections, skipped");
            continue;
        }
        let geometry = NetworkGeometry::scalable(section_exp + k, cluster_exp, section_exp)?;
        let mut streams = RngStreams::new(cfg.seed, k as u64);
        let mut net: Network<T> = Network::new(geometry, params.clone());
        for (i, head) in geometry.section_heads().enumerate() {
            net.advance_to(i as u64);
            net.handle_join(head, sampler.sample(&mut streams.attrs), None)?;
        }
        net.advance_to(sections);

        let probe = StepProbe::begin(&net);
        let mut sum = 0u64;
        let mut max = 0u32;
        for _ in 0..messages {
            let a = streams.lookups.gen_range(0..sections);
            let mut b = streams.lookups.gen_range(0..sections - 1);
            if b >= a {
                b += 1;
            }
            let origin = geometry.section_head_of_index(a)?;
            let target = geometry.section_head_of_index(b)?;
            let out = net.lookup_recorded(origin, target)?;
            debug_assert!(out.found);
            sum += out.inter_section_hops as u64;
            max = max.max(out.inter_section_hops);
        }
        let mut record = probe.finish(&net, k, Headline::None);
        record.mean_hops = T::from_u64_lossy(sum) / T::from_u64_lossy(messages as u64);
        record.max_hops = max;
        record.validate()?;
        for (k2, v) in &record.signals {
            *signal_totals.entry(k2.clone()).or_insert(0) += v;
        }
        steps.push(record);
    }
    let metrics = Metrics {
        experiment: "route".into(),
        seed: cfg.seed,
        series: vec![Series {
            label: "routing".into(),
            steps,
            signal_totals,
        }],
    };
    metrics.validate()?;
    Ok(metrics)
}

/// Join overhead: growing join batches into a ring seeded with a small
/// population, one series per swept cluster size. The headline counts the
/// maintenance traffic (takeover broadcasts, exchange and shadow messages)
/// the joins caused. Every cluster size replays the same join sequences and
/// each step value is a mean over independent replicates, so the series are
/// directly comparable.
pub fn run_join_overhead<T: Real>(cfg: &SimConfig<T>) -> Result<Metrics<T>, SimError> {
    cfg.validate()?;
    let sampler = AttrSampler::new(cfg)?;
    let reps = cfg.join_replicates.max(1);
    let mut series = Vec::new();
    for &x in &cfg.cluster_exp_sweep {
        let geometry = NetworkGeometry::default_mode(cfg.ring_exp, x)?;
        let capacity = geometry.ring_size();
        let planned: u64 =
            cfg.initial_population as u64 + cfg.join_batches.iter().map(|&b| b as u64).sum::<u64>();
        if planned > capacity {
            return Err(SimError::Config(format!(
                "join plan of {planned} nodes exceeds ring capacity {capacity}"
            )));
        }
        let mut acc: Vec<StepAccumulator<T>> = (0..cfg.join_batches.len())
            .map(|i| StepAccumulator::new(i as u32 + 1))
            .collect();
        let mut totals: BTreeMap<String, u64> = BTreeMap::new();
        for rep in 0..reps {
            let raw = join_run(cfg, &sampler, geometry, rep as u64)?;
            for (slot, step) in acc.iter_mut().zip(&raw) {
                slot.add(step);
            }
            if let Some(last) = raw.last() {
                let _ = last;
            }
            for step in &raw {
                for (k, v) in &step.signals {
                    *totals.entry(k.clone()).or_insert(0) += v;
                }
            }
        }
        series.push(Series {
            label: format!("cluster-{}", geometry.cluster_size()),
            steps: acc.into_iter().map(|a| a.mean(reps)).collect(),
            signal_totals: totals,
        });
    }
    let metrics = Metrics {
        experiment: "join-overhead".into(),
        seed: cfg.seed,
        series,
    };
    metrics.validate()?;
    Ok(metrics)
}

/// One join-overhead evolution for one cluster size and replicate stream.
fn join_run<T: Real>(
    cfg: &SimConfig<T>,
    sampler: &AttrSampler,
    geometry: NetworkGeometry,
    salt: u64,
) -> Result<Vec<StepMetrics<T>>, SimError> {
    let mut streams = RngStreams::new(cfg.seed, salt);
    let mut net: Network<T> = Network::new(geometry, cfg.protocol_params()?);
    let mut engine: Engine<T> = Engine::new();

    let mut t = 0u64;
    for _ in 0..cfg.initial_population {
        engine.schedule(t, SimEvent::JoinRandom { attrs: sampler.sample(&mut streams.attrs) });
        t += 1;
    }
    t += cfg.step_ticks;
    engine.schedule(t, SimEvent::Mark { label: 0 });
    for (i, &batch) in cfg.join_batches.iter().enumerate() {
        for _ in 0..batch {
            t += 1;
            engine.schedule(t, SimEvent::JoinRandom { attrs: sampler.sample(&mut streams.attrs) });
        }
        t += cfg.step_ticks;
        engine.schedule(t, SimEvent::Mark { label: i as u32 + 1 });
    }
    if cfg.refresh_interval > 0 {
        let mut r = cfg.refresh_interval;
        while r < t {
            engine.schedule(r, SimEvent::Refresh);
            r += cfg.refresh_interval;
        }
    }

    let mut steps: Vec<StepMetrics<T>> = Vec::new();
    let mut probe: Option<StepProbe> = None;
    drive(&mut engine, &mut net, &mut streams, |net, label| {
        if let Some(p) = probe.take() {
            steps.push(p.finish(net, label, Headline::Churn));
        }
        probe = Some(StepProbe::begin(net));
    })?;
    Ok(steps)
}

/// Accumulates replicate step records into their mean.
struct StepAccumulator<T: Real> {
    step: u32,
    headline: T,
    exchanges: u64,
    failed: T,
    population: u64,
    heads: u64,
    signals: BTreeMap<String, u64>,
}

impl<T: Real> StepAccumulator<T> {
    fn new(step: u32) -> Self {
        Self {
            step,
            headline: T::zero(),
            exchanges: 0,
            failed: T::zero(),
            population: 0,
            heads: 0,
            signals: BTreeMap::new(),
        }
    }

    fn add(&mut self, s: &StepMetrics<T>) {
        self.headline += s.headline_signals;
        self.exchanges += s.exchanges;
        self.failed += s.failed_clusters;
        self.population += s.population as u64;
        self.heads += s.active_heads as u64;
        for (k, v) in &s.signals {
            *self.signals.entry(k.clone()).or_insert(0) += v;
        }
    }

    fn mean(self, reps: u32) -> StepMetrics<T> {
        let n = reps.max(1) as u64;
        StepMetrics {
            step: self.step,
            mean_hops: T::zero(),
            max_hops: 0,
            headline_signals: self.headline / T::from_u64_lossy(n),
            signals: self.signals,
            exchanges: self.exchanges / n,
            failed_clusters: self.failed / T::from_u64_lossy(n),
            population: (self.population / n) as u32,
            active_heads: (self.heads / n) as u32,
        }
    }
}

/// Leave overhead: one continuously drained network per replicate; each step
/// removes a further batch of random nodes and records the cumulative
/// departure-maintenance traffic (promotions, announcements, the election
/// ring, exchanges) since the drain began. Cluster sizes share the fill and
/// departure randomness and step values are replicate means.
pub fn run_leave_overhead<T: Real>(cfg: &SimConfig<T>) -> Result<Metrics<T>, SimError> {
    cfg.validate()?;
    let total: u32 = cfg.leave_batches.iter().sum();
    if total > cfg.initial_population {
        return Err(SimError::Config(format!(
            "leave plan removes {total} from {} initial nodes",
            cfg.initial_population
        )));
    }
    let sampler = AttrSampler::new(cfg)?;
    let reps = cfg.leave_replicates.max(1);
    let mut series = Vec::new();
    for &x in &cfg.cluster_exp_sweep {
        let geometry = NetworkGeometry::default_mode(cfg.ring_exp, x)?;
        let mut acc: Vec<StepAccumulator<T>> = (0..cfg.leave_batches.len())
            .map(|i| StepAccumulator::new(i as u32 + 1))
            .collect();
        let mut totals: BTreeMap<String, u64> = BTreeMap::new();
        for rep in 0..reps {
            let raw = leave_run(cfg, &sampler, geometry, rep as u64)?;
            for (slot, step) in acc.iter_mut().zip(&raw) {
                slot.add(step);
            }
            if let Some(last) = raw.last() {
                for (k, v) in &last.signals {
                    *totals.entry(k.clone()).or_insert(0) += v;
                }
            }
        }
        series.push(Series {
            label: format!("cluster-{}", geometry.cluster_size()),
            steps: acc.into_iter().map(|a| a.mean(reps)).collect(),
            signal_totals: totals,
        });
    }
    let metrics = Metrics {
        experiment: "leave-overhead".into(),
        seed: cfg.seed,
        series,
    };
    metrics.validate()?;
    Ok(metrics)
}

/// One full drain; the returned step records hold cumulative counts relative
/// to the moment the drain began.
fn leave_run<T: Real>(
    cfg: &SimConfig<T>,
    sampler: &AttrSampler,
    geometry: NetworkGeometry,
    salt: u64,
) -> Result<Vec<StepMetrics<T>>, SimError> {
    let mut streams = RngStreams::new(cfg.seed, salt);
    let mut net: Network<T> = Network::new(geometry, cfg.protocol_params()?);
    let mut engine: Engine<T> = Engine::new();
    let mut t = 0u64;
    for _ in 0..cfg.initial_population {
        engine.schedule(t, SimEvent::JoinRandom { attrs: sampler.sample(&mut streams.attrs) });
        t += 1;
    }
    t += cfg.step_ticks;
    engine.schedule(t, SimEvent::Mark { label: 0 });
    for (i, &batch) in cfg.leave_batches.iter().enumerate() {
        for _ in 0..batch {
            t += 1;
            engine.schedule(t, SimEvent::LeaveRandom);
        }
        t += 1;
        engine.schedule(t, SimEvent::Mark { label: i as u32 + 1 });
    }

    let mut steps: Vec<StepMetrics<T>> = Vec::new();
    let mut baseline: Option<StepProbe> = None;
    drive(&mut engine, &mut net, &mut streams, |net, label| {
        if label == 0 {
            baseline = Some(StepProbe::begin(net));
        } else if let Some(b) = baseline.as_ref() {
            steps.push(b.finish(net, label, Headline::LeaveMaintenance));
        }
    })?;
    Ok(steps)
}

/// Fault tolerance: a completely filled ring loses nodes in unannounced
/// waves; snapshots count the clusters whose head and every shadow died in
/// the same wave, averaged over independent removal orders. Series are
/// produced per cluster size and per backup count; all backup settings of a
/// size replay the same fills and the same removal orders, so raising the
/// shadow count is directly comparable.
pub fn run_fault_tolerance<T: Real>(cfg: &SimConfig<T>) -> Result<Metrics<T>, SimError> {
    cfg.validate()?;
    let sampler = AttrSampler::new(cfg)?;
    let backup_counts = if cfg.fault_backup_counts.is_empty() {
        vec![cfg.backup_count]
    } else {
        cfg.fault_backup_counts.clone()
    };
    let reps = cfg.fault_replicates.max(1);
    let fill_backups = backup_counts.iter().copied().max().unwrap_or(1);
    let mut series = Vec::new();
    for &x in &cfg.cluster_exp_sweep {
        let geometry = NetworkGeometry::default_mode(cfg.ring_exp, x)?;
        let mut streams = RngStreams::new(cfg.seed, x as u64);
        let params = ProtocolParams {
            backup_count: fill_backups,
            supreme_backup_count: fill_backups,
            ..cfg.protocol_params()?
        };
        // Fill every position in a random order. Shadow lists are rank
        // prefixes, so one fill serves every backup setting.
        let mut order: Vec<u64> = (0..geometry.ring_size()).collect();
        shuffle(&mut order, &mut streams.ids);
        let mut filled: Network<T> = Network::new(geometry, params);
        for (i, id) in order.iter().enumerate() {
            filled.advance_to(i as u64);
            filled.handle_join(NodeId(*id), sampler.sample(&mut streams.attrs), None)?;
        }
        // Removal orders, shared across backup settings.
        let removals: Vec<Vec<u64>> = (0..reps)
            .map(|_| {
                let mut departures: Vec<u64> = (0..geometry.ring_size()).collect();
                shuffle(&mut departures, &mut streams.churn);
                departures
            })
            .collect();

        for &bc in &backup_counts {
            let mut acc: Vec<StepAccumulator<T>> =
                (1..=cfg.crash_snapshots).map(StepAccumulator::new).collect();
            let mut totals: BTreeMap<String, u64> = BTreeMap::new();
            for departures in &removals {
                let mut net = filled.clone();
                net.set_backup_counts(bc, bc)?;
                let mut cursor = 0usize;
                for snap in 1..=cfg.crash_snapshots {
                    let take = (cfg.crash_snapshot as usize).min(departures.len() - cursor);
                    if take == 0 {
                        log::info!("fault run out of nodes at snapshot {snap}; ending early");
                        break;
                    }
                    let wave: Vec<NodeId> =
                        departures[cursor..cursor + take].iter().map(|&v| NodeId(v)).collect();
                    cursor += take;
                    let probe = StepProbe::begin(&net);
                    net.crash_batch(&wave);
                    let record = probe.finish(&net, snap, Headline::None);
                    acc[snap as usize - 1].add(&record);
                }
                for (k, v) in name_counts(&net.signals().snapshot()) {
                    *totals.entry(k).or_insert(0) += v;
                }
            }
            series.push(Series {
                label: format!("cluster-{}-backups-{}", geometry.cluster_size(), bc),
                steps: acc.into_iter().map(|a| a.mean(reps)).collect(),
                signal_totals: totals,
            });
        }
    }
    let metrics = Metrics {
        experiment: "fault".into(),
        seed: cfg.seed,
        series,
    };
    metrics.validate()?;
    Ok(metrics)
}

/// Stage of stability: arrivals in cohorts with session-expiry departures
/// matched against them; the per-cohort exchange count shows whether roles
/// settle once strong nodes hold the head positions. Cohort values are means
/// over independent replicate runs.
pub fn run_stability<T: Real>(cfg: &SimConfig<T>) -> Result<Metrics<T>, SimError> {
    cfg.validate()?;
    let reps = cfg.stability_replicates.max(1);
    let mut acc: Vec<StepAccumulator<T>> = (1..=cfg.cohorts).map(StepAccumulator::new).collect();
    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    for rep in 0..reps {
        let raw = stability_run(cfg, rep as u64)?;
        for (slot, step) in acc.iter_mut().zip(&raw) {
            slot.add(step);
        }
        for step in &raw {
            for (k, v) in &step.signals {
                *totals.entry(k.clone()).or_insert(0) += v;
            }
        }
    }
    let metrics = Metrics {
        experiment: "stability".into(),
        seed: cfg.seed,
        series: vec![Series {
            label: "stability".into(),
            steps: acc.into_iter().map(|a| a.mean(reps)).collect(),
            signal_totals: totals,
        }],
    };
    metrics.validate()?;
    Ok(metrics)
}

/// Runs one traced matched-churn evolution and returns its exported trace
/// alongside the per-cohort records. The audit surface for `replay`.
pub fn stability_trace<T: Real + serde::Serialize + serde::de::DeserializeOwned>(
    cfg: &SimConfig<T>,
) -> Result<(Vec<StepMetrics<T>>, String), SimError> {
    let (steps, net) = stability_run_inner(cfg, 0, true)?;
    let jsonl = super::trace::export_jsonl(&net)?;
    Ok((steps, jsonl))
}

/// One matched-churn evolution.
fn stability_run<T: Real>(cfg: &SimConfig<T>, salt: u64) -> Result<Vec<StepMetrics<T>>, SimError> {
    Ok(stability_run_inner(cfg, salt, false)?.0)
}

fn stability_run_inner<T: Real>(
    cfg: &SimConfig<T>,
    salt: u64,
    traced: bool,
) -> Result<(Vec<StepMetrics<T>>, Network<T>), SimError> {
    let sampler = AttrSampler::new(cfg)?;
    let sessions = SessionSampler::new(cfg)?;
    let geometry = NetworkGeometry::default_mode(cfg.ring_exp, cfg.cluster_exp)?;
    let mut streams = RngStreams::new(cfg.seed, salt);
    let mut net: Network<T> = Network::new(geometry, cfg.protocol_params()?);
    net.set_trace_enabled(traced);

    // Expiry ledger: node -> scheduled departure tick.
    let mut expiries: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut t = 0u64;
    let join_one = |net: &mut Network<T>,
                    t: u64,
                    streams: &mut RngStreams,
                    expiries: &mut BTreeMap<NodeId, u64>|
     -> Result<(), SimError> {
        net.advance_to(t);
        if let Some(id) = draw_unoccupied(net, &mut streams.ids) {
            let via = random_contact(net, &mut streams.churn);
            net.handle_join(id, sampler.sample(&mut streams.attrs), via)?;
            expiries.insert(id, t + sessions.sample(&mut streams.churn));
        }
        Ok(())
    };

    for _ in 0..cfg.initial_population {
        join_one(&mut net, t, &mut streams, &mut expiries)?;
        t += cfg.arrival_spacing;
    }

    let mut steps = Vec::new();
    let mut next_refresh = if cfg.refresh_interval > 0 { cfg.refresh_interval } else { u64::MAX };
    for cohort in 1..=cfg.cohorts {
        let probe = StepProbe::begin(&net);
        for _ in 0..cfg.cohort_size {
            // Departures due before this arrival, in expiry order.
            loop {
                let due = expiries
                    .iter()
                    .filter(|(_, &when)| when <= t)
                    .map(|(&id, &when)| (when, id))
                    .min();
                match due {
                    Some((when, id)) => {
                        expiries.remove(&id);
                        net.advance_to(when.max(net.now()));
                        net.handle_leave(id)?;
                    }
                    None => break,
                }
            }
            while next_refresh <= t {
                net.advance_to(next_refresh.max(net.now()));
                net.refresh_attributes()?;
                next_refresh += cfg.refresh_interval;
            }
            // Matched churn: keep room by pushing out the earliest expiry.
            while net.population() as u32 >= cfg.population_cap.min(geometry.ring_size() as u32) {
                let Some((&id, _)) = expiries.iter().min_by_key(|(_, &when)| when) else { break };
                expiries.remove(&id);
                net.advance_to(t.max(net.now()));
                net.handle_leave(id)?;
            }
            let at = t.max(net.now());
            join_one(&mut net, at, &mut streams, &mut expiries)?;
            t += cfg.arrival_spacing;
        }
        let record = probe.finish(&net, cohort, Headline::Kind(MessageKind::IdExchange));
        record.validate()?;
        steps.push(record);
    }
    Ok((steps, net))
}

/// Fisher-Yates over a slice with the given stream.
fn shuffle(v: &mut [u64], rng: &mut ChaCha12Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
}
