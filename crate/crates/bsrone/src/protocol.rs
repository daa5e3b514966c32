//! The node lifecycle state machine: joins with symlinked head claims,
//! id exchanges toward stronger heads, departures with substitute promotion
//! and a ring election, and signal accounting for every message class.
//!
//! The whole network state is owned by one event loop; operations are
//! sequential state transitions. Tables are value snapshots derived from the
//! membership and activation state, so they are up to date immediately after
//! every event; the signal counters model the messages a distributed
//! deployment would have to send to reach the same state.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{ProtocolError, ScoreError};
use crate::num::Real;
use crate::ring::{ActivationMap, NetworkGeometry, NodeId};
use crate::tables::{
    build_default_routing_table, build_search_table, build_supreme_tables, next_hop,
    resolve_fallbacks, RoutingTable, SearchTable, SupremeTables,
};
use crate::topsis::{
    score_with, AttributeVector, BoundWeighting, CriteriaBounds, CriteriaWeights, DecisionMatrix,
};

/// What a present node currently does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Regular,
    /// Shadows its cluster's head and takes over instantly on departure.
    Substitute,
    /// Acting head of a cluster.
    Super,
    /// Acting head that also represents its section to the other sections.
    Supreme,
}

/// One participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord<T: Real> {
    pub real_id: NodeId,
    /// Head position this node serves without natively owning it.
    pub symlink_id: Option<NodeId>,
    pub role: Role,
    pub attrs: AttributeVector<T>,
    pub joined_at: u64,
}

/// Every message class the protocol emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageKind {
    JoinRequest,
    JoinAccept,
    IdExchange,
    SuperNodeUpdate,
    ReplacementQuery,
    ReplacementAnswer,
    SubstituteSync,
    SubstitutePromotion,
    LookupRequest,
    LookupReply,
}

impl MessageKind {
    pub const ALL: [MessageKind; 10] = [
        MessageKind::JoinRequest,
        MessageKind::JoinAccept,
        MessageKind::IdExchange,
        MessageKind::SuperNodeUpdate,
        MessageKind::ReplacementQuery,
        MessageKind::ReplacementAnswer,
        MessageKind::SubstituteSync,
        MessageKind::SubstitutePromotion,
        MessageKind::LookupRequest,
        MessageKind::LookupReply,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::JoinRequest => "join_request",
            MessageKind::JoinAccept => "join_accept",
            MessageKind::IdExchange => "id_exchange",
            MessageKind::SuperNodeUpdate => "super_node_update",
            MessageKind::ReplacementQuery => "replacement_query",
            MessageKind::ReplacementAnswer => "replacement_answer",
            MessageKind::SubstituteSync => "substitute_sync",
            MessageKind::SubstitutePromotion => "substitute_promotion",
            MessageKind::LookupRequest => "lookup_request",
            MessageKind::LookupReply => "lookup_reply",
        }
    }
}

/// Monotone per-kind counters of messages emitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalCounter {
    counts: BTreeMap<MessageKind, u64>,
}

impl SignalCounter {
    pub fn record(&mut self, kind: MessageKind, n: u64) {
        *self.counts.entry(kind).or_insert(0) += n;
    }

    pub fn count(&self, kind: MessageKind) -> u64 {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn snapshot(&self) -> BTreeMap<MessageKind, u64> {
        self.counts.clone()
    }

    /// Per-kind difference against an earlier snapshot.
    pub fn delta(&self, earlier: &BTreeMap<MessageKind, u64>) -> BTreeMap<MessageKind, u64> {
        let mut out = BTreeMap::new();
        for (&k, &v) in &self.counts {
            let before = earlier.get(&k).copied().unwrap_or(0);
            if v > before {
                out.insert(k, v - before);
            }
        }
        out
    }
}

/// A message noted in the event trace: kind, sender, receiver.
pub type TracedMessage = (MessageKind, NodeId, NodeId);

/// Protocol-level event classes recorded in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Join,
    Leave,
    Crash,
    Promote,
    Lookup,
}

/// One newline-delimited trace record: when, what, who, and every message
/// the event emitted in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<T: Real> {
    pub time: u64,
    pub kind: EventKind,
    pub actor: NodeId,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub targets: Vec<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub attrs: Option<AttributeVector<T>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub via: Option<NodeId>,
    pub messages: Vec<TracedMessage>,
}

/// Scoring and replication knobs, fixed at network construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams<T: Real> {
    pub weights: CriteriaWeights<T>,
    pub bounds: CriteriaBounds<T>,
    pub bound_weighting: BoundWeighting,
    /// Shadows kept per cluster head.
    pub backup_count: usize,
    /// Shadows kept by the head that carries a section's supreme duty; the
    /// larger of the two counts applies there.
    pub supreme_backup_count: usize,
}

impl<T: Real> ProtocolParams<T> {
    pub fn new(weights: CriteriaWeights<T>, bounds: CriteriaBounds<T>) -> Self {
        Self {
            weights,
            bounds,
            bound_weighting: BoundWeighting::Weighted,
            backup_count: 1,
            supreme_backup_count: 1,
        }
    }
}

/// How a join resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinOutcome {
    /// First node of its cluster, natively owning the head position.
    ActivatedNative,
    /// First node of its cluster, serving the head position by symlink.
    ActivatedSymlink,
    /// Outranked the weakest head and took over its position.
    Exchanged { position: NodeId },
    /// Joined as a plain member.
    Regular,
}

/// How a departure resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeaveOutcome {
    /// Unknown node; nothing happened.
    Unknown,
    /// A member left; its head only adjusted the search table.
    Member,
    /// A head left and a substitute (or strongest member) took over.
    HeadReplaced { new_head: NodeId, exchanged_after_election: bool },
    /// A head left with nobody to take over; the cluster went dark.
    ClusterDeactivated,
}

/// Result of a lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupOutcome {
    pub found: bool,
    /// Jumps between cluster heads (within a section, or ring-wide in
    /// default mode).
    pub inter_cluster_hops: u32,
    /// Jumps along the supreme tables, scalable mode only.
    pub inter_section_hops: u32,
    /// Extra forwarding steps through symlinked identities.
    pub forwarding_steps: u32,
}

/// Clusters that lost their head and every shadow in one crash wave.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrashReport {
    pub newly_failed_clusters: Vec<u64>,
}

/// The whole overlay state.
#[derive(Debug, Clone)]
pub struct Network<T: Real = f64> {
    geometry: NetworkGeometry,
    params: ProtocolParams<T>,
    clock: u64,
    nodes: BTreeMap<NodeId, NodeRecord<T>>,
    /// Present real ids per cluster index.
    members: BTreeMap<u64, BTreeSet<NodeId>>,
    /// Real id of the node serving each active cluster's head position.
    acting_heads: BTreeMap<u64, NodeId>,
    /// Reverse of `acting_heads`: node -> cluster index it serves.
    serving: BTreeMap<NodeId, u64>,
    /// Designated shadows per cluster, strongest first.
    substitutes: BTreeMap<u64, Vec<NodeId>>,
    activation: ActivationMap,
    /// Clusters that lost head and shadows in a crash wave, permanently.
    failed_clusters: BTreeSet<u64>,
    signals: SignalCounter,
    trace_enabled: bool,
    trace: Vec<TraceRecord<T>>,
    pending: Vec<TracedMessage>,
}

impl<T: Real> Network<T> {
    pub fn new(geometry: NetworkGeometry, params: ProtocolParams<T>) -> Self {
        Self {
            geometry,
            params,
            clock: 0,
            nodes: BTreeMap::new(),
            members: BTreeMap::new(),
            acting_heads: BTreeMap::new(),
            serving: BTreeMap::new(),
            substitutes: BTreeMap::new(),
            activation: ActivationMap::new(),
            failed_clusters: BTreeSet::new(),
            signals: SignalCounter::default(),
            trace_enabled: false,
            trace: Vec::new(),
            pending: Vec::new(),
        }
    }

    pub fn geometry(&self) -> &NetworkGeometry {
        &self.geometry
    }

    pub fn params(&self) -> &ProtocolParams<T> {
        &self.params
    }

    /// Changes the shadow counts and re-picks every cluster's substitutes.
    /// Rankings are unchanged, so lowering the count keeps a prefix of the
    /// previous shadow list.
    pub fn set_backup_counts(&mut self, backup: usize, supreme_backup: usize) -> Result<(), ProtocolError> {
        self.params.backup_count = backup.max(1);
        self.params.supreme_backup_count = supreme_backup.max(1);
        let clusters: Vec<u64> = self.acting_heads.keys().copied().collect();
        for c in clusters {
            self.maintain_substitute(c)?;
        }
        Ok(())
    }

    pub fn now(&self) -> u64 {
        self.clock
    }

    /// Advances the simulation clock; time never runs backwards.
    pub fn advance_to(&mut self, t: u64) {
        debug_assert!(t >= self.clock, "clock must be monotone");
        self.clock = t;
    }

    pub fn set_trace_enabled(&mut self, on: bool) {
        self.trace_enabled = on;
    }

    pub fn trace(&self) -> &[TraceRecord<T>] {
        &self.trace
    }

    pub fn signals(&self) -> &SignalCounter {
        &self.signals
    }

    pub fn activation(&self) -> &ActivationMap {
        &self.activation
    }

    pub fn population(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord<T>> {
        self.nodes.get(&id)
    }

    pub fn present_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn failed_clusters(&self) -> &BTreeSet<u64> {
        &self.failed_clusters
    }

    /// Real id of the node serving a cluster index, if any.
    pub fn acting_head(&self, cluster: u64) -> Option<NodeId> {
        self.acting_heads.get(&cluster).copied()
    }

    pub fn acting_head_count(&self) -> usize {
        self.acting_heads.len()
    }

    /// Head positions currently served, in clockwise order.
    pub fn served_positions(&self) -> Vec<NodeId> {
        self.acting_heads
            .keys()
            .map(|&c| self.geometry.cluster_head_of_index(c))
            .collect()
    }

    /// The node carrying a section's supreme duty: the acting head of the
    /// lowest-indexed live cluster in the section.
    pub fn supreme_holder(&self, section: u64) -> Option<NodeId> {
        let s = self.geometry.section_exp?;
        let per_section = 1u64 << (s - self.geometry.cluster_exp);
        let first = section * per_section;
        (first..first + per_section).find_map(|c| self.acting_heads.get(&c).copied())
    }

    /// Attributes as the scorer sees them now: the stored vector with the
    /// elapsed session time added on top of any declared base.
    pub fn effective_attrs(&self, rec: &NodeRecord<T>) -> AttributeVector<T> {
        let mut a = rec.attrs;
        a.time_on_network = a.time_on_network + T::from_u64_lossy(self.clock - rec.joined_at);
        a
    }

    // ------------------------------------------------------------------
    // Derived table views
    // ------------------------------------------------------------------

    /// The search table a head position currently implies.
    pub fn search_table_of(&self, position: NodeId) -> Result<SearchTable, ProtocolError> {
        let cluster = self.geometry.cluster_of(position)?;
        let empty = BTreeSet::new();
        let members = self.members.get(&cluster).unwrap_or(&empty);
        let filtered: BTreeSet<NodeId> = members.iter().copied().filter(|&m| m != position).collect();
        Ok(build_search_table(position, &filtered, &self.geometry)?)
    }

    /// The default-mode routing table a head position currently implies.
    pub fn routing_table_of(&self, position: NodeId) -> Result<RoutingTable, ProtocolError> {
        Ok(build_default_routing_table(position, &self.activation, &self.geometry)?)
    }

    /// The supreme tables a section-head position currently implies, with
    /// fallbacks resolved against the live activation map.
    pub fn supreme_tables_of(&self, position: NodeId) -> Result<SupremeTables, ProtocolError> {
        let raw = build_supreme_tables(position, &self.geometry)?;
        Ok(resolve_fallbacks(&raw, &self.activation, &self.geometry)?)
    }

    // ------------------------------------------------------------------
    // Message plumbing
    // ------------------------------------------------------------------

    fn emit(&mut self, kind: MessageKind, from: NodeId, to: NodeId) {
        self.signals.record(kind, 1);
        if self.trace_enabled {
            self.pending.push((kind, from, to));
        }
    }

    /// One message to every served head position except the announcer's own.
    fn broadcast(&mut self, kind: MessageKind, from: NodeId, own_cluster: Option<u64>) {
        let targets: Vec<NodeId> = self
            .acting_heads
            .iter()
            .filter(|(&c, _)| Some(c) != own_cluster)
            .map(|(&c, _)| self.geometry.cluster_head_of_index(c))
            .collect();
        self.signals.record(kind, targets.len() as u64);
        if self.trace_enabled {
            for t in targets {
                self.pending.push((kind, from, t));
            }
        }
    }

    fn record_event(
        &mut self,
        kind: EventKind,
        actor: NodeId,
        attrs: Option<AttributeVector<T>>,
        via: Option<NodeId>,
    ) {
        self.record_event_with(kind, actor, Vec::new(), attrs, via)
    }

    fn record_event_with(
        &mut self,
        kind: EventKind,
        actor: NodeId,
        targets: Vec<NodeId>,
        attrs: Option<AttributeVector<T>>,
        via: Option<NodeId>,
    ) {
        if self.trace_enabled {
            let messages = std::mem::take(&mut self.pending);
            self.trace.push(TraceRecord {
                time: self.clock,
                kind,
                actor,
                targets,
                attrs,
                via,
                messages,
            });
        }
    }

    // ------------------------------------------------------------------
    // Scoring helpers
    // ------------------------------------------------------------------

    /// Scores candidate attribute vectors, ignoring criteria on which every
    /// candidate is zero: such a column carries no information, so its weight
    /// is redistributed proportionally over the informative criteria.
    pub fn score_candidates(&self, cands: &[AttributeVector<T>]) -> Result<Vec<T>, ProtocolError> {
        let (matrix, bounds) = DecisionMatrix::from_candidates(cands, &self.params.bounds)?;
        let mut rows: Vec<[T; 4]> = matrix.rows().to_vec();
        let mut weights = self.params.weights;
        let mut dead = [false; 4];
        for j in 0..4 {
            dead[j] = rows.iter().all(|r| r[j] == T::zero());
        }
        if dead.iter().any(|&d| d) {
            let alive_sum: T = (0..4)
                .filter(|&j| !dead[j])
                .map(|j| weights.0[j])
                .fold(T::zero(), |a, b| a + b);
            if alive_sum == T::zero() {
                // Nothing differentiates the candidates at all.
                return Ok(vec![T::from_f64_lossy(0.5); cands.len()]);
            }
            for j in 0..4 {
                if dead[j] {
                    weights.0[j] = T::zero();
                    for r in rows.iter_mut() {
                        r[j] = T::one();
                    }
                } else {
                    weights.0[j] = weights.0[j] / alive_sum;
                }
            }
        }
        let matrix = DecisionMatrix::from_rows(rows).map_err(ScoreError::from)?;
        Ok(score_with(&matrix, &weights, &bounds, self.params.bound_weighting)?)
    }

    /// Closeness of every acting head, keyed by cluster index, plus the
    /// score a probe candidate would get in the same comparison.
    fn score_heads_against(&self, probe: &AttributeVector<T>) -> Result<(Vec<(u64, T)>, T), ProtocolError> {
        let mut clusters = Vec::new();
        let mut cands = Vec::new();
        for (&c, &node) in &self.acting_heads {
            let rec = &self.nodes[&node];
            clusters.push(c);
            cands.push(self.effective_attrs(rec));
        }
        cands.push(*probe);
        let scores = self.score_candidates(&cands)?;
        let probe_score = *scores.last().unwrap();
        Ok((clusters.into_iter().zip(scores).collect(), probe_score))
    }

    // ------------------------------------------------------------------
    // Membership bookkeeping
    // ------------------------------------------------------------------

    fn cluster_population(&self, cluster: u64) -> usize {
        self.members.get(&cluster).map_or(0, |m| m.len())
    }

    fn assign_head(&mut self, cluster: u64, node: NodeId) {
        self.acting_heads.insert(cluster, node);
        self.serving.insert(node, cluster);
        self.activation.activate_cluster(cluster);
        self.failed_clusters.remove(&cluster);
        let position = self.geometry.cluster_head_of_index(cluster);
        let rec = self.nodes.get_mut(&node).expect("head must be present");
        rec.symlink_id = if rec.real_id == position { None } else { Some(position) };
        rec.role = Role::Super;
        self.refresh_section_state(cluster);
    }

    /// Removes a cluster's head assignment and deactivates it; returns the
    /// released node when it is still present.
    fn release_head(&mut self, cluster: u64) -> Option<NodeId> {
        let mut released = None;
        if let Some(node) = self.acting_heads.remove(&cluster) {
            self.serving.remove(&node);
            if let Some(rec) = self.nodes.get_mut(&node) {
                rec.symlink_id = None;
                if matches!(rec.role, Role::Super | Role::Supreme) {
                    rec.role = Role::Regular;
                }
                released = Some(node);
            }
        }
        self.activation.deactivate_cluster(cluster);
        self.substitutes.remove(&cluster);
        self.refresh_section_state(cluster);
        released
    }

    /// A node whose head duty ended returns to its own cluster; if that
    /// cluster has nobody serving its position, the node claims it.
    fn repatriate(&mut self, node: NodeId) -> Result<(), ProtocolError> {
        if !self.nodes.contains_key(&node) || self.serving.contains_key(&node) {
            return Ok(());
        }
        let home = self.geometry.cluster_of(node)?;
        if self.activation.cluster_active(home) || self.failed_clusters.contains(&home) {
            return Ok(());
        }
        let position = self.geometry.cluster_head_of_index(home);
        self.assign_head(home, node);
        self.broadcast(MessageKind::SuperNodeUpdate, position, Some(home));
        self.maintain_substitute(home)?;
        Ok(())
    }

    /// Recomputes section activation and supreme role marks around a cluster
    /// whose head or liveness changed.
    fn refresh_section_state(&mut self, cluster: u64) {
        let Some(s) = self.geometry.section_exp else { return };
        let per_section = 1u64 << (s - self.geometry.cluster_exp);
        let section = cluster / per_section;
        let first = section * per_section;
        let holder = (first..first + per_section).find_map(|c| self.acting_heads.get(&c).copied());
        match holder {
            Some(node) => {
                self.activation.activate_section(section);
                for c in first..first + per_section {
                    if let Some(&h) = self.acting_heads.get(&c) {
                        let rec = self.nodes.get_mut(&h).expect("acting head present");
                        rec.role = if h == node { Role::Supreme } else { Role::Super };
                    }
                }
            }
            None => self.activation.deactivate_section(section),
        }
    }

    fn cluster_holds_supreme_duty(&self, cluster: u64) -> bool {
        let Some(s) = self.geometry.section_exp else { return false };
        let per_section = 1u64 << (s - self.geometry.cluster_exp);
        let section = cluster / per_section;
        self.supreme_holder(section) == self.acting_heads.get(&cluster).copied()
            && self.acting_heads.contains_key(&cluster)
    }

    /// Re-picks a cluster's shadows from its spare members and synchronizes
    /// their tables. Runs after every change to the cluster's tables.
    pub fn maintain_substitute(&mut self, cluster: u64) -> Result<(), ProtocolError> {
        let Some(&head_node) = self.acting_heads.get(&cluster) else {
            self.substitutes.remove(&cluster);
            return Ok(());
        };
        let spare: Vec<NodeId> = self
            .members
            .get(&cluster)
            .map(|m| {
                m.iter()
                    .copied()
                    .filter(|&id| {
                        id != head_node
                            && matches!(self.nodes[&id].role, Role::Regular | Role::Substitute)
                    })
                    .collect()
            })
            .unwrap_or_default();
        let want = if self.cluster_holds_supreme_duty(cluster) {
            self.params.supreme_backup_count.max(self.params.backup_count)
        } else {
            self.params.backup_count
        };
        let chosen: Vec<NodeId> = if spare.is_empty() {
            Vec::new()
        } else {
            let attrs: Vec<AttributeVector<T>> =
                spare.iter().map(|id| self.effective_attrs(&self.nodes[id])).collect();
            let scores = self.score_candidates(&attrs)?;
            let order = crate::topsis::rank(&scores);
            order.into_iter().take(want).map(|i| spare[i]).collect()
        };
        let previous = self.substitutes.insert(cluster, chosen.clone()).unwrap_or_default();
        for id in &previous {
            if !chosen.contains(id) {
                if let Some(rec) = self.nodes.get_mut(id) {
                    if rec.role == Role::Substitute {
                        rec.role = Role::Regular;
                    }
                }
            }
        }
        let position = self.geometry.cluster_head_of_index(cluster);
        for id in &chosen {
            let rec = self.nodes.get_mut(id).expect("substitute present");
            if rec.role == Role::Regular {
                rec.role = Role::Substitute;
            }
            self.emit(MessageKind::SubstituteSync, position, *id);
        }
        if chosen.is_empty() {
            self.substitutes.remove(&cluster);
        }
        Ok(())
    }

    pub fn substitutes_of(&self, cluster: u64) -> &[NodeId] {
        self.substitutes.get(&cluster).map_or(&[], |v| v.as_slice())
    }

    // ------------------------------------------------------------------
    // Joins
    // ------------------------------------------------------------------

    /// A newcomer enters the network, contacting `via` (any acting head) or,
    /// when unspecified, the lowest served position.
    pub fn handle_join(
        &mut self,
        newcomer: NodeId,
        attrs: AttributeVector<T>,
        via: Option<NodeId>,
    ) -> Result<JoinOutcome, ProtocolError> {
        if !self.geometry.contains(newcomer) {
            return Err(crate::error::GeometryError::IdOutOfRange {
                id: newcomer.value(),
                ring_exp: self.geometry.ring_exp,
            }
            .into());
        }
        if self.nodes.contains_key(&newcomer) {
            return Err(ProtocolError::IdCollision(newcomer));
        }
        let cluster = self.geometry.cluster_of(newcomer)?;
        if self.cluster_population(cluster) as u64 >= self.geometry.cluster_size() {
            return Err(ProtocolError::ClusterFull(newcomer));
        }
        let contact = match via {
            Some(v) => {
                if !self.served_positions().contains(&v) {
                    return Err(ProtocolError::Violation(format!(
                        "bootstrap contact {v} is not a served head position"
                    )));
                }
                Some(v)
            }
            None => self.served_positions().first().copied(),
        };
        if let Some(c) = contact {
            self.emit(MessageKind::JoinRequest, newcomer, c);
        }

        self.nodes.insert(
            newcomer,
            NodeRecord {
                real_id: newcomer,
                symlink_id: None,
                role: Role::Regular,
                attrs,
                joined_at: self.clock,
            },
        );
        self.members.entry(cluster).or_default().insert(newcomer);

        let position = self.geometry.cluster_head_of_index(cluster);
        let outcome = if !self.activation.cluster_active(cluster) {
            // First node of a dark cluster: it claims the head position,
            // natively or by symlink, and the other heads learn of the new
            // cluster.
            self.assign_head(cluster, newcomer);
            self.broadcast(MessageKind::SuperNodeUpdate, position, Some(cluster));
            if newcomer == position {
                JoinOutcome::ActivatedNative
            } else {
                JoinOutcome::ActivatedSymlink
            }
        } else {
            // Cluster already live: measure the newcomer against every head.
            let (head_scores, probe) = self.score_heads_against(&self.effective_attrs(&self.nodes[&newcomer]))?;
            let weakest = head_scores
                .iter()
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)))
                .copied();
            match weakest {
                Some((weak_cluster, weak_score)) if probe > weak_score => {
                    let weak_node = self.acting_heads[&weak_cluster];
                    self.exchange_into_head(newcomer, weak_node)?;
                    let pos = self.geometry.cluster_head_of_index(weak_cluster);
                    JoinOutcome::Exchanged { position: pos }
                }
                _ => {
                    // Plain membership; the head adjusts its search table and
                    // resynchronizes its shadows. No broadcast.
                    self.maintain_substitute(cluster)?;
                    JoinOutcome::Regular
                }
            }
        };
        if let Some(c) = contact {
            self.emit(MessageKind::JoinAccept, c, newcomer);
        }
        self.record_event(EventKind::Join, newcomer, Some(attrs), contact.or(via));
        debug_assert!(self.check_cluster(cluster));
        Ok(outcome)
    }

    // ------------------------------------------------------------------
    // Id exchange
    // ------------------------------------------------------------------

    /// Swaps head duties between the acting head among `a`, `b` and the other
    /// party. Exactly one of the two must currently serve a head position.
    /// Both exchange counters grow and the takeover is announced to every
    /// other head.
    pub fn id_exchange(&mut self, a: NodeId, b: NodeId) -> Result<(), ProtocolError> {
        let a_head = self.serving.contains_key(&a);
        let b_head = self.serving.contains_key(&b);
        if a_head == b_head {
            return Err(ProtocolError::Violation(format!(
                "id exchange between {a} and {b} requires exactly one acting head"
            )));
        }
        if !self.nodes.contains_key(&a) || !self.nodes.contains_key(&b) {
            return Err(ProtocolError::UnknownNode(if self.nodes.contains_key(&a) { b } else { a }));
        }
        let (head_node, incoming) = if a_head { (a, b) } else { (b, a) };
        self.exchange_into_head(incoming, head_node)
    }

    /// `incoming` takes over the head position `outgoing` serves.
    fn exchange_into_head(&mut self, incoming: NodeId, outgoing: NodeId) -> Result<(), ProtocolError> {
        let cluster = *self
            .serving
            .get(&outgoing)
            .ok_or_else(|| ProtocolError::Violation(format!("{outgoing} serves no head position")))?;
        let position = self.geometry.cluster_head_of_index(cluster);

        self.emit(MessageKind::IdExchange, incoming, outgoing);

        // Demote the outgoing head; it stays a plain resident of its own cluster.
        self.serving.remove(&outgoing);
        {
            let rec = self.nodes.get_mut(&outgoing).expect("outgoing present");
            rec.symlink_id = None;
            rec.role = Role::Regular;
            rec.attrs.id_exchanges += 1;
        }
        // If the incoming node shadowed some cluster, it stops doing so.
        self.nodes.get_mut(&incoming).expect("incoming present").attrs.id_exchanges += 1;
        self.assign_head(cluster, incoming);

        self.broadcast(MessageKind::SuperNodeUpdate, position, Some(cluster));

        // Tables changed hands: re-pick shadows where roles moved.
        self.maintain_substitute(cluster)?;
        self.repatriate(outgoing)?;
        let out_home = self.geometry.cluster_of(outgoing)?;
        if out_home != cluster && self.activation.cluster_active(out_home) {
            self.maintain_substitute(out_home)?;
        }
        let in_home = self.geometry.cluster_of(incoming)?;
        if in_home != cluster && self.activation.cluster_active(in_home) {
            self.maintain_substitute(in_home)?;
        }
        debug_assert!(self.check_cluster(cluster));
        Ok(())
    }

    // ------------------------------------------------------------------
    // Departures
    // ------------------------------------------------------------------

    /// Graceful departure. Members only cost a search-table update; a head's
    /// departure promotes its substitute and circulates a replacement
    /// election around the live head ring.
    pub fn handle_leave(&mut self, departing: NodeId) -> Result<LeaveOutcome, ProtocolError> {
        if !self.nodes.contains_key(&departing) {
            log::warn!("leave for unknown node {departing}; ignoring");
            self.record_event(EventKind::Leave, departing, None, None);
            return Ok(LeaveOutcome::Unknown);
        }
        let served = self.serving.get(&departing).copied();
        let home = self.geometry.cluster_of(departing)?;
        let outcome = match served {
            None => {
                // A plain member (possibly a shadow) walks away.
                self.remove_resident(departing);
                if self.members.get(&home).map_or(true, |m| m.is_empty()) {
                    self.handle_emptied_cluster(home)?;
                } else if self.activation.cluster_active(home) {
                    self.maintain_substitute(home)?;
                }
                LeaveOutcome::Member
            }
            Some(cluster) => {
                let position = self.geometry.cluster_head_of_index(cluster);
                self.serving.remove(&departing);
                self.acting_heads.remove(&cluster);
                self.remove_resident(departing);
                if home != cluster && self.activation.cluster_active(home) {
                    if self.members.get(&home).map_or(true, |m| m.is_empty()) {
                        self.handle_emptied_cluster(home)?;
                    } else {
                        self.maintain_substitute(home)?;
                    }
                }

                let successor = self
                    .substitutes
                    .get(&cluster)
                    .and_then(|subs| subs.iter().copied().find(|s| self.nodes.contains_key(s)))
                    .or_else(|| self.strongest_member(cluster));
                match successor {
                    Some(new_head) => {
                        self.assign_head(cluster, new_head);
                        self.broadcast(MessageKind::SubstitutePromotion, position, Some(cluster));
                        self.maintain_substitute(cluster)?;
                        let exchanged = self.run_replacement_election(cluster, new_head)?;
                        let final_head = self.acting_heads[&cluster];
                        LeaveOutcome::HeadReplaced {
                            new_head: final_head,
                            exchanged_after_election: exchanged,
                        }
                    }
                    None => {
                        // Nobody left to serve the position.
                        self.release_head(cluster);
                        self.broadcast(MessageKind::SuperNodeUpdate, position, None);
                        LeaveOutcome::ClusterDeactivated
                    }
                }
            }
        };
        self.record_event(EventKind::Leave, departing, None, None);
        debug_assert!(self.check_cluster(home));
        Ok(outcome)
    }

    fn remove_resident(&mut self, id: NodeId) {
        let home = self.geometry.cluster_of(id).expect("id in range");
        self.nodes.remove(&id);
        if let Some(m) = self.members.get_mut(&home) {
            m.remove(&id);
            if m.is_empty() {
                self.members.remove(&home);
            }
        }
        if let Some(subs) = self.substitutes.get_mut(&home) {
            subs.retain(|s| *s != id);
        }
    }

    /// A cluster ran out of residents. If its head is a non-resident symlink
    /// server, that node is released back to a regular role (and may claim
    /// its own cluster's position); either way the cluster goes dark and the
    /// remaining heads learn of it.
    fn handle_emptied_cluster(&mut self, cluster: u64) -> Result<(), ProtocolError> {
        if !self.activation.cluster_active(cluster) {
            return Ok(());
        }
        let position = self.geometry.cluster_head_of_index(cluster);
        let released = self.release_head(cluster);
        self.broadcast(MessageKind::SuperNodeUpdate, position, None);
        if let Some(node) = released {
            self.repatriate(node)?;
        }
        Ok(())
    }

    fn strongest_member(&self, cluster: u64) -> Option<NodeId> {
        let members = self.members.get(&cluster)?;
        let head = self.acting_heads.get(&cluster);
        let cands: Vec<NodeId> = members
            .iter()
            .copied()
            .filter(|id| Some(id) != head && matches!(self.nodes[id].role, Role::Regular | Role::Substitute))
            .collect();
        if cands.is_empty() {
            return None;
        }
        let attrs: Vec<AttributeVector<T>> =
            cands.iter().map(|id| self.effective_attrs(&self.nodes[id])).collect();
        let scores = self.score_candidates(&attrs).ok()?;
        crate::topsis::rank(&scores).first().map(|&i| cands[i])
    }

    /// Circulates the replacement query clockwise from the departed cluster's
    /// successor over every other live head. Each visited head offers its
    /// best spare member and score; scores are probes against the shared set
    /// of current heads so offers from different clusters stay comparable.
    /// The global best is delivered back to the promoted head and takes over
    /// by exchange if it outranks it. The concluded election is announced
    /// either way, so the strongest nodes keep the head positions even after
    /// departures.
    fn run_replacement_election(&mut self, cluster: u64, promoted: NodeId) -> Result<bool, ProtocolError> {
        let count = self.geometry.cluster_count();
        let ring: Vec<u64> = (1..count)
            .map(|step| (cluster + step) % count)
            .filter(|c| self.acting_heads.contains_key(c))
            .collect();
        let mut best: Option<(T, NodeId)> = None;
        let mut prev_position = self.geometry.cluster_head_of_index(cluster);
        let mut prev_sender = promoted;
        let mut visited = 0usize;
        for &c in &ring {
            let head_position = self.geometry.cluster_head_of_index(c);
            self.emit(MessageKind::ReplacementQuery, prev_sender, head_position);
            visited += 1;
            prev_sender = head_position;
            prev_position = head_position;

            let head_node = self.acting_heads[&c];
            let spare: Vec<NodeId> = self
                .members
                .get(&c)
                .map(|m| {
                    m.iter()
                        .copied()
                        .filter(|&id| id != head_node)
                        .filter(|id| matches!(self.nodes[id].role, Role::Regular | Role::Substitute))
                        .collect()
                })
                .unwrap_or_default();
            if spare.is_empty() {
                continue; // nothing to suggest from this cluster
            }
            // The head offers its strongest member; the carried score is that
            // member's probe against the shared head set.
            let attrs: Vec<AttributeVector<T>> =
                spare.iter().map(|id| self.effective_attrs(&self.nodes[id])).collect();
            let local = self.score_candidates(&attrs)?;
            let offer = spare[crate::topsis::rank(&local)[0]];
            let probe = self.effective_attrs(&self.nodes[&offer]);
            let (_, score) = self.score_heads_against(&probe)?;
            let better = match best {
                None => true,
                Some((s, b)) => score > s || (score == s && offer < b),
            };
            if better {
                best = Some((score, offer));
            }
        }
        if visited > 0 {
            let own_position = self.geometry.cluster_head_of_index(cluster);
            self.emit(MessageKind::ReplacementAnswer, prev_position, own_position);
        }

        let exchanged = if let Some((winner_score, winner)) = best {
            let promoted_probe = self.effective_attrs(&self.nodes[&promoted]);
            let (_, promoted_score) = self.score_heads_against(&promoted_probe)?;
            if winner_score > promoted_score {
                self.exchange_into_head(winner, promoted)?;
                true
            } else {
                false
            }
        } else {
            false
        };
        // The concluded election is announced whatever its outcome: the
        // confirmed holder is the departure's second required signal, on top
        // of any takeover update the exchange itself broadcast.
        let position = self.geometry.cluster_head_of_index(cluster);
        self.broadcast(MessageKind::SuperNodeUpdate, position, Some(cluster));
        Ok(exchanged)
    }

    // ------------------------------------------------------------------
    // Crash waves (fault-tolerance experiments)
    // ------------------------------------------------------------------

    /// A wave of simultaneous, unannounced failures. Heads with a surviving
    /// shadow are replaced on the spot; a cluster whose head and every shadow
    /// die in the same wave while members survive has lost its connectivity
    /// and counts as failed. Crashed nodes cannot run elections.
    pub fn crash_batch(&mut self, crashed: &[NodeId]) -> CrashReport {
        let set: BTreeSet<NodeId> = crashed
            .iter()
            .copied()
            .filter(|id| self.nodes.contains_key(id))
            .collect();
        let mut report = CrashReport::default();

        // Which clusters lose their acting head in this wave.
        let mut headless: Vec<u64> = self
            .acting_heads
            .iter()
            .filter(|(_, node)| set.contains(node))
            .map(|(&c, _)| c)
            .collect();
        headless.sort_unstable();

        // Membership changes first: the wave is simultaneous.
        for &id in &set {
            let served = self.serving.remove(&id);
            if let Some(c) = served {
                self.acting_heads.remove(&c);
            }
            self.remove_resident(id);
        }

        for c in headless {
            let position = self.geometry.cluster_head_of_index(c);
            let shadow = self
                .substitutes
                .get(&c)
                .and_then(|subs| subs.iter().copied().find(|s| self.nodes.contains_key(s)));
            match shadow {
                Some(sub) => {
                    self.assign_head(c, sub);
                    self.broadcast(MessageKind::SubstitutePromotion, position, Some(c));
                    let _ = self.maintain_substitute(c);
                }
                None => {
                    // Head gone and no substitute promoted before the
                    // snapshot: the cluster has lost its connectivity.
                    self.release_head(c);
                    self.failed_clusters.insert(c);
                    report.newly_failed_clusters.push(c);
                }
            }
        }

        // Clusters that merely lost members keep their head; shadows are
        // re-picked where the wave thinned them.
        let affected: BTreeSet<u64> = set
            .iter()
            .map(|id| self.geometry.cluster_of(*id).expect("in range"))
            .collect();
        for c in affected {
            if self.activation.cluster_active(c) {
                if self.cluster_population(c) == 0 && !self.members.contains_key(&c) {
                    // Active purely through a remote symlink server with no
                    // residents left.
                    if self
                        .acting_heads
                        .get(&c)
                        .map_or(false, |h| self.geometry.cluster_of(*h).unwrap() != c)
                    {
                        let _ = self.handle_emptied_cluster(c);
                    } else if self.acting_heads.get(&c).is_none() {
                        self.release_head(c);
                    }
                } else {
                    let _ = self.maintain_substitute(c);
                }
            }
        }
        let actor = set.iter().next().copied().unwrap_or(NodeId(0));
        self.record_event_with(EventKind::Crash, actor, set.into_iter().collect(), None, None);
        report
    }

    // ------------------------------------------------------------------
    // Attribute refresh and promotion
    // ------------------------------------------------------------------

    /// A member reports fresh attributes; the head re-scores it against every
    /// current head and, if it now outranks the weakest, the same exchange
    /// path as a winning join runs.
    pub fn promote_on_improvement(
        &mut self,
        node: NodeId,
        new_attrs: AttributeVector<T>,
    ) -> Result<bool, ProtocolError> {
        let rec = self.nodes.get(&node).ok_or(ProtocolError::UnknownNode(node))?;
        if self.serving.contains_key(&node) {
            return Err(ProtocolError::Violation(format!("{node} already serves a head position")));
        }
        let _ = rec;
        self.nodes.get_mut(&node).unwrap().attrs = new_attrs;
        let effective = self.effective_attrs(&self.nodes[&node]);
        let (head_scores, probe) = self.score_heads_against(&effective)?;
        let weakest = head_scores
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)))
            .copied();
        let promoted = match weakest {
            Some((weak_cluster, weak_score)) if probe > weak_score => {
                let weak_node = self.acting_heads[&weak_cluster];
                self.exchange_into_head(node, weak_node)?;
                true
            }
            _ => false,
        };
        self.record_event(EventKind::Promote, node, Some(new_attrs), None);
        Ok(promoted)
    }

    /// Periodic attribute round: every head re-evaluates its members, oldest
    /// clusters first. Exchange cascades apply immediately.
    pub fn refresh_attributes(&mut self) -> Result<u64, ProtocolError> {
        let mut promotions = 0;
        let clusters: Vec<u64> = self.members.keys().copied().collect();
        for c in clusters {
            let Some(m) = self.members.get(&c) else { continue };
            let candidates: Vec<NodeId> = m
                .iter()
                .copied()
                .filter(|id| !self.serving.contains_key(id))
                .collect();
            for id in candidates {
                if let Some(rec) = self.nodes.get(&id) {
                    let attrs = rec.attrs;
                    if self.promote_on_improvement(id, attrs)? {
                        promotions += 1;
                    }
                }
            }
        }
        Ok(promotions)
    }

    // ------------------------------------------------------------------
    // Lookup
    // ------------------------------------------------------------------

    /// Resolves `target` from `origin`: the origin's head checks its own
    /// search table, then jumps across the ring. Default mode reaches any
    /// other live cluster in one jump; scalable mode rides the supreme
    /// tables between sections. Symlinked identities add one forwarding step.
    pub fn lookup(&self, origin: NodeId, target: NodeId) -> Result<LookupOutcome, ProtocolError> {
        if !self.nodes.contains_key(&origin) {
            return Err(ProtocolError::UnknownNode(origin));
        }
        let origin_cluster = self.geometry.cluster_of(origin)?;
        let target_cluster = self.geometry.cluster_of(target)?;
        let mut out = LookupOutcome {
            found: false,
            inter_cluster_hops: 0,
            inter_section_hops: 0,
            forwarding_steps: 0,
        };
        if origin_cluster == target_cluster {
            self.resolve_at_cluster(target_cluster, target, &mut out);
            return Ok(out);
        }
        if self.geometry.is_scalable() {
            let origin_section = self.geometry.section_of(origin)?;
            let target_section = self.geometry.section_of(target)?;
            if origin_section == target_section {
                // Heads inside one section know each other directly.
                if self.activation.cluster_active(target_cluster) {
                    out.inter_cluster_hops += 1;
                    self.resolve_at_cluster(target_cluster, target, &mut out);
                }
                return Ok(out);
            }
            // Ride the supreme tables from the origin's section head.
            let origin_supreme = self.geometry.section_head_of_index(origin_section)?;
            let origin_head = self.geometry.cluster_head_of_index(origin_cluster);
            if origin_head != origin_supreme {
                out.inter_cluster_hops += 1;
                if let Some(holder) = self.supreme_holder(origin_section) {
                    if self.geometry.cluster_of(holder)? != self.geometry.cluster_of(origin_supreme)?
                        || holder != origin_supreme
                    {
                        // Supreme position claimed by symlink.
                        if holder != origin_supreme {
                            out.forwarding_steps += 1;
                        }
                    }
                }
            }
            let target_supreme = self.geometry.section_head_of_index(target_section)?;
            let mut current = origin_supreme;
            let budget = self.geometry.section_count()?;
            let mut arrived = false;
            for _ in 0..=budget {
                if current == target_supreme {
                    arrived = true;
                    break;
                }
                let tables = match self.supreme_tables_of(current) {
                    Ok(t) => t,
                    Err(_) => break,
                };
                match next_hop(current, target_supreme, &tables, &self.geometry) {
                    Ok(hop) if hop != current => {
                        out.inter_section_hops += 1;
                        current = hop;
                    }
                    _ => break,
                }
            }
            if !arrived {
                return Ok(out); // target's section unreachable: absent
            }
            if !self.activation.cluster_active(target_cluster) {
                return Ok(out);
            }
            if target_cluster != self.geometry.cluster_of(target_supreme)? {
                out.inter_cluster_hops += 1;
            }
            self.resolve_at_cluster(target_cluster, target, &mut out);
            Ok(out)
        } else {
            // Default mode: the routing table reaches any live head in one
            // jump; a dark cluster is known dark without sending anything.
            if !self.activation.cluster_active(target_cluster) {
                // A node from a dark cluster can still be serving another
                // position; the request reaches it there.
                if let Some(rec) = self.nodes.get(&target) {
                    if rec.symlink_id.is_some() {
                        out.found = true;
                        out.inter_cluster_hops = 1;
                        out.forwarding_steps = 1;
                    }
                }
                return Ok(out);
            }
            out.inter_cluster_hops = 1;
            self.resolve_at_cluster(target_cluster, target, &mut out);
            Ok(out)
        }
    }

    /// Lookup that also accounts the request/reply messages.
    pub fn lookup_recorded(&mut self, origin: NodeId, target: NodeId) -> Result<LookupOutcome, ProtocolError> {
        let out = self.lookup(origin, target)?;
        self.emit(MessageKind::LookupRequest, origin, target);
        self.emit(MessageKind::LookupReply, target, origin);
        self.record_event_with(EventKind::Lookup, origin, vec![target], None, None);
        Ok(out)
    }

    /// Final local step at the target's cluster.
    fn resolve_at_cluster(&self, cluster: u64, target: NodeId, out: &mut LookupOutcome) {
        let position = self.geometry.cluster_head_of_index(cluster);
        if let Some(rec) = self.nodes.get(&target) {
            // The real node is present. Reaching it through a symlinked head
            // position, or asking a node that serves elsewhere for its real
            // position, each costs one forwarding step.
            out.found = true;
            if target == position {
                if let Some(&acting) = self.acting_heads.get(&cluster) {
                    if acting != position {
                        out.forwarding_steps += 1;
                    }
                }
            }
            if rec.symlink_id.is_some() {
                out.forwarding_steps += 1;
            }
        } else if target == position && self.acting_heads.contains_key(&cluster) {
            // The position itself is served by symlink; the server answers.
            out.found = true;
            out.forwarding_steps += 1;
        }
    }

    // ------------------------------------------------------------------
    // Invariants
    // ------------------------------------------------------------------

    /// Residents that would need a local head: plain members and shadows.
    /// A resident serving another cluster's position is reachable through it.
    fn local_population(&self, cluster: u64) -> usize {
        self.members.get(&cluster).map_or(0, |m| {
            m.iter()
                .filter(|id| matches!(self.nodes[id].role, Role::Regular | Role::Substitute))
                .count()
        })
    }

    /// Cheap per-cluster consistency check used in debug builds after events.
    fn check_cluster(&self, cluster: u64) -> bool {
        let residents = self.local_population(cluster);
        let head = self.acting_heads.get(&cluster);
        if self.failed_clusters.contains(&cluster) {
            return head.is_none();
        }
        if residents > 0 && head.is_none() {
            return false;
        }
        if let Some(&h) = head {
            let Some(rec) = self.nodes.get(&h) else { return false };
            let position = self.geometry.cluster_head_of_index(cluster);
            let serves = match rec.symlink_id {
                Some(p) => p == position,
                None => rec.real_id == position,
            };
            if !serves || !matches!(rec.role, Role::Super | Role::Supreme) {
                return false;
            }
        }
        true
    }

    /// Full structural validation; every invariant the protocol maintains.
    pub fn validate(&self) -> Result<(), String> {
        for (&c, m) in &self.members {
            for id in m {
                if !self.nodes.contains_key(id) {
                    return Err(format!("member {id} of cluster {c} is not present"));
                }
                if self.geometry.cluster_of(*id).unwrap() != c {
                    return Err(format!("member {id} filed under wrong cluster {c}"));
                }
            }
        }
        for (&id, rec) in &self.nodes {
            if rec.real_id != id {
                return Err(format!("record for {id} disagrees with its key"));
            }
            let home = self.geometry.cluster_of(id).unwrap();
            if !self.members.get(&home).map_or(false, |m| m.contains(&id)) {
                return Err(format!("{id} missing from its cluster membership"));
            }
        }
        for (&c, &node) in &self.acting_heads {
            if self.serving.get(&node) != Some(&c) {
                return Err(format!("reverse head index broken for cluster {c}"));
            }
            if !self.activation.cluster_active(c) {
                return Err(format!("cluster {c} has a head but is inactive"));
            }
            if !self.check_cluster(c) {
                return Err(format!("cluster {c} fails its head consistency check"));
            }
        }
        for &c in self.members.keys() {
            if self.local_population(c) > 0
                && !self.failed_clusters.contains(&c)
                && !self.activation.cluster_active(c)
            {
                return Err(format!("cluster {c} has unserved residents but is inactive"));
            }
        }
        for (&c, subs) in &self.substitutes {
            for s in subs {
                if !self.nodes.contains_key(s) {
                    return Err(format!("substitute {s} of cluster {c} is gone"));
                }
                if Some(s) == self.acting_heads.get(&c) {
                    return Err(format!("substitute {s} of cluster {c} is its own head"));
                }
            }
        }
        if self.geometry.is_scalable() {
            for &sec in &self.activation.active_sections {
                if self.supreme_holder(sec).is_none() {
                    return Err(format!("section {sec} active without a supreme holder"));
                }
            }
        }
        // Routing-table activity flags always mirror the activation map,
        // because tables are derived from it; spot-check one head.
        if let Some(position) = self.served_positions().first() {
            let rt = self.routing_table_of(*position).map_err(|e| e.to_string())?;
            for e in &rt.entries {
                let c = self.geometry.cluster_of(e.head).unwrap();
                if e.active != self.activation.cluster_active(c) {
                    return Err(format!("routing flag for head {} is stale", e.head));
                }
            }
        }
        Ok(())
    }
}
