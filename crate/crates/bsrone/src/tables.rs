//! The three table kinds: per-head search tables, default-mode all-heads
//! routing tables, and supreme bidirectional routing tables.
//!
//! Search and routing are different jobs. A search table is a head's local
//! directory of its own cluster; a routing table jumps between clusters or
//! sections. In default mode every head lists every other head, so any
//! cross-cluster request takes exactly one jump. In scalable mode each
//! section head keeps two directional tables whose targets fan out like a
//! binary search over half the ring each, so each hop discards at least half
//! of the remaining arc.
//!
//! Tables are immutable snapshots; rebuilding produces a new value.

use serde::{Deserialize, Serialize};

use crate::error::TableError;
use crate::ring::{ActivationMap, NetworkGeometry, NodeId};

/// A head's directory of its own cluster, one slot per non-head position.
///
/// Slot `k` corresponds to id `owner + k + 1`; it is occupied exactly when
/// that member is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchTable {
    pub owner: NodeId,
    pub slots: Vec<Option<NodeId>>,
}

impl SearchTable {
    /// Members currently listed, in clockwise order.
    pub fn occupied(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.slots.iter().filter_map(|s| *s)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.slots.iter().any(|s| *s == Some(id))
    }
}

/// Default-mode jump directory: every other cluster head in clockwise order
/// starting after the owner, tagged with its activation state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingTable {
    pub owner: NodeId,
    pub entries: Vec<RoutingEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingEntry {
    pub head: NodeId,
    pub active: bool,
}

impl RoutingTable {
    /// The single jump toward `target`'s cluster head, if that cluster is live.
    pub fn one_hop(&self, g: &NetworkGeometry, target: NodeId) -> Option<NodeId> {
        let head = g.cluster_head(target).ok()?;
        if head == self.owner {
            return Some(self.owner);
        }
        self.entries
            .iter()
            .find(|e| e.head == head && e.active)
            .map(|e| e.head)
    }
}

/// One target of a supreme routing table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupremeEntry {
    /// Displacement from the owner, in ids, along the table's direction.
    pub offset: u64,
    /// The section head this entry is meant to reach.
    pub raw: NodeId,
    /// The hop actually taken: `raw` when its section is live, otherwise the
    /// nearest live section head falling back toward the owner.
    pub resolved: NodeId,
}

/// A section head's two directional jump tables.
///
/// Offsets fan out as powers of two below the half-ring midpoint, then the
/// midpoint, then midpoint-shifted powers, then the half ring itself; the
/// counterclockwise table applies the same magnitudes in the decreasing
/// direction. The last entries of both tables aim at the antipodal section
/// head, and coincide only while that section is live: each table falls back
/// toward its own travel origin, so a dead antipode resolves differently on
/// each side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupremeTables {
    pub owner: NodeId,
    pub clockwise: Vec<SupremeEntry>,
    pub counterclockwise: Vec<SupremeEntry>,
}

/// The offset ladder every supreme table uses, strictly increasing, ending at
/// the half ring `H = 2^(n-1)`.
///
/// Sections wider than `H/2` degenerate the ladder; only the antipode remains.
pub fn supreme_offsets(g: &NetworkGeometry) -> Result<Vec<u64>, crate::error::GeometryError> {
    let section = g.section_size()?;
    let half = g.half_ring();
    if section > half / 2 {
        return Ok(vec![half]);
    }
    let mut out = Vec::new();
    let mut p = section;
    while p < half / 2 {
        out.push(p);
        p <<= 1;
    }
    out.push(half / 2);
    let mut q = section;
    while half / 2 + q < half {
        out.push(half / 2 + q);
        q <<= 1;
    }
    out.push(half);
    Ok(out)
}

/// Builds a head's search table from its present members.
pub fn build_search_table(
    owner: NodeId,
    members: &std::collections::BTreeSet<NodeId>,
    g: &NetworkGeometry,
) -> Result<SearchTable, TableError> {
    if g.cluster_head(owner).ok() != Some(owner) {
        return Err(TableError::NotAClusterHead { owner });
    }
    let size = g.cluster_size();
    let mut slots = vec![None; (size - 1) as usize];
    for &m in members {
        let dist = g.cw_distance(owner, m);
        if m == owner || dist >= size {
            return Err(TableError::MemberOutsideCluster { owner, member: m });
        }
        slots[(dist - 1) as usize] = Some(m);
    }
    Ok(SearchTable { owner, slots })
}

/// Builds a default-mode routing table: every other cluster head once,
/// clockwise from the owner's successor head, flagged from the activation map.
/// The owner itself is implicit and carries no entry.
pub fn build_default_routing_table(
    owner: NodeId,
    activation: &ActivationMap,
    g: &NetworkGeometry,
) -> Result<RoutingTable, TableError> {
    if g.cluster_head(owner).ok() != Some(owner) {
        return Err(TableError::NotAClusterHead { owner });
    }
    let own_cluster = owner.value() >> g.cluster_exp;
    let count = g.cluster_count();
    let entries = (1..count)
        .map(|step| {
            let c = (own_cluster + step) % count;
            RoutingEntry {
                head: g.cluster_head_of_index(c),
                active: activation.cluster_active(c),
            }
        })
        .collect();
    Ok(RoutingTable { owner, entries })
}

/// Builds a section head's raw tables; every entry resolves to its own raw
/// target until [`resolve_fallbacks`] is applied.
pub fn build_supreme_tables(owner: NodeId, g: &NetworkGeometry) -> Result<SupremeTables, TableError> {
    if g.section_head(owner).ok() != Some(owner) {
        return Err(TableError::NotASectionHead { owner });
    }
    let offsets = supreme_offsets(g).map_err(|_| TableError::NotASectionHead { owner })?;
    let clockwise = offsets
        .iter()
        .map(|&o| {
            let raw = g.add(owner, o);
            SupremeEntry { offset: o, raw, resolved: raw }
        })
        .collect();
    let counterclockwise = offsets
        .iter()
        .map(|&o| {
            let raw = g.sub(owner, o);
            SupremeEntry { offset: o, raw, resolved: raw }
        })
        .collect();
    Ok(SupremeTables {
        owner,
        clockwise,
        counterclockwise,
    })
}

/// Replaces every target whose section is inactive by the nearest live
/// section head between it and the owner.
///
/// Clockwise entries scan counterclockwise (the predecessor side), so a
/// resolved clockwise hop never travels farther than its raw target;
/// counterclockwise entries scan clockwise, mirroring that rule in their own
/// direction. With no live section besides the owner's, every entry resolves
/// to the owner and routing degenerates to local delivery.
pub fn resolve_fallbacks(
    tables: &SupremeTables,
    activation: &ActivationMap,
    g: &NetworkGeometry,
) -> Result<SupremeTables, TableError> {
    let owner = tables.owner;
    let section = g
        .section_size()
        .map_err(|_| TableError::NotASectionHead { owner })?;
    let section_of = |id: NodeId| id.value() >> g.section_exp.unwrap();
    if !activation.section_active(section_of(owner)) {
        return Err(TableError::NotASectionHead { owner });
    }
    let resolve = |raw: NodeId, toward_owner_cw: bool| -> NodeId {
        let mut pos = raw;
        loop {
            if activation.section_active(section_of(pos)) {
                return pos;
            }
            if pos == owner {
                return owner;
            }
            pos = if toward_owner_cw {
                g.add(pos, section)
            } else {
                g.sub(pos, section)
            };
        }
    };
    let clockwise = tables
        .clockwise
        .iter()
        .map(|e| SupremeEntry {
            resolved: resolve(e.raw, false),
            ..*e
        })
        .collect();
    let counterclockwise = tables
        .counterclockwise
        .iter()
        .map(|e| SupremeEntry {
            resolved: resolve(e.raw, true),
            ..*e
        })
        .collect();
    Ok(SupremeTables {
        owner,
        clockwise,
        counterclockwise,
    })
}

/// The greedy routing step from an active section head toward `target`.
///
/// Local targets return `current`. Otherwise the hop is the resolved entry,
/// from either directional table, that lands nearest to the target; ties
/// prefer an entry that does not pass the target in its direction of travel,
/// then the clockwise table, then the smaller offset. The chosen hop must
/// strictly reduce ring distance to the target. If no entry in either table
/// makes progress the activation map is pathological and the failure is
/// surfaced rather than retried.
pub fn next_hop(
    current: NodeId,
    target: NodeId,
    tables: &SupremeTables,
    g: &NetworkGeometry,
) -> Result<NodeId, TableError> {
    let target_head = g
        .section_head(target)
        .map_err(|_| TableError::NotASectionHead { owner: current })?;
    if target_head == current {
        return Ok(current);
    }
    let d_cw = g.cw_distance(current, target_head);
    let d_ccw = g.ccw_distance(current, target_head);
    let current_dist = d_cw.min(d_ccw);

    // (landing distance, overshoots, counterclockwise, offset) per candidate;
    // lexicographic minimum picks the hop deterministically.
    let mut best: Option<((u64, bool, bool, u64), NodeId)> = None;
    for (ccw, entries, span) in [(false, &tables.clockwise, d_cw), (true, &tables.counterclockwise, d_ccw)] {
        for e in entries {
            let landing = g.ring_distance(e.resolved, target_head);
            let key = (landing, e.offset > span, ccw, e.offset);
            if best.as_ref().map_or(true, |(k, _)| key < *k) {
                best = Some((key, e.resolved));
            }
        }
    }
    match best {
        Some(((landing, _, _, _), hop)) if landing < current_dist => Ok(hop),
        _ => Err(TableError::RoutingFailure {
            current,
            target: target_head,
        }),
    }
}

/// Walks [`next_hop`] from section head to section head until the target's
/// section is reached, rebuilding each hop's tables against the activation
/// map. Returns the heads visited after `from`, ending at the target's head.
pub fn route(
    from: NodeId,
    target: NodeId,
    activation: &ActivationMap,
    g: &NetworkGeometry,
) -> Result<Vec<NodeId>, TableError> {
    let mut path = Vec::new();
    let mut current = from;
    let limit = g
        .section_count()
        .map_err(|_| TableError::NotASectionHead { owner: from })?;
    for _ in 0..=limit {
        let tables = resolve_fallbacks(&build_supreme_tables(current, g)?, activation, g)?;
        let hop = next_hop(current, target, &tables, g)?;
        if hop == current {
            return Ok(path);
        }
        path.push(hop);
        current = hop;
    }
    Err(TableError::RoutingFailure {
        current,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, VecDeque};

    fn geo(n: u32, x: u32) -> NetworkGeometry {
        NetworkGeometry::default_mode(n, x).unwrap()
    }

    fn sgeo(n: u32, s: u32) -> NetworkGeometry {
        NetworkGeometry::scalable(n, 2.min(s), s).unwrap()
    }

    #[test]
    fn search_table_full_cluster() {
        // 2^2 - 1 = 3 slots, all occupied.
        let g = geo(5, 2);
        let members: BTreeSet<NodeId> = [1, 2, 3].map(NodeId).into();
        let t = build_search_table(NodeId(0), &members, &g).unwrap();
        assert_eq!(t.slots.len(), 3);
        assert_eq!(t.slots, vec![Some(NodeId(1)), Some(NodeId(2)), Some(NodeId(3))]);
    }

    #[test]
    fn search_table_empty_and_partial() {
        let g = geo(5, 2);
        let t = build_search_table(NodeId(0), &BTreeSet::new(), &g).unwrap();
        assert_eq!(t.slots, vec![None, None, None]);

        // After the newcomer-25 join scenario, head 24 lists only 25.
        let members: BTreeSet<NodeId> = [25].map(NodeId).into();
        let t = build_search_table(NodeId(24), &members, &g).unwrap();
        assert_eq!(t.slots, vec![Some(NodeId(25)), None, None]);
        assert!(t.contains(NodeId(25)));
        assert!(!t.contains(NodeId(26)));
    }

    #[test]
    fn search_table_rejects_outsiders() {
        let g = geo(5, 2);
        let members: BTreeSet<NodeId> = [5].map(NodeId).into();
        assert_eq!(
            build_search_table(NodeId(0), &members, &g),
            Err(TableError::MemberOutsideCluster {
                owner: NodeId(0),
                member: NodeId(5)
            })
        );
        assert!(build_search_table(NodeId(1), &BTreeSet::new(), &g).is_err());
    }

    #[test]
    fn routing_table_lists_other_heads_clockwise() {
        let g = geo(5, 2);
        let act = ActivationMap::fully_active(&g);
        let t = build_default_routing_table(NodeId(0), &act, &g).unwrap();
        let heads: Vec<u64> = t.entries.iter().map(|e| e.head.value()).collect();
        assert_eq!(heads, vec![4, 8, 12, 16, 20, 24, 28]);
        assert!(t.entries.iter().all(|e| e.active));
    }

    #[test]
    fn routing_table_rotation_matches_clockwise_distance_sort() {
        let g = geo(5, 2);
        let act = ActivationMap::fully_active(&g);
        let t = build_default_routing_table(NodeId(16), &act, &g).unwrap();
        assert_eq!(t.entries.first().unwrap().head, NodeId(20));
        assert_eq!(t.entries.last().unwrap().head, NodeId(12));
        // Brute force: sort all other heads by clockwise distance from owner.
        let mut brute: Vec<NodeId> = g.cluster_heads().filter(|&h| h != NodeId(16)).collect();
        brute.sort_by_key(|&h| g.cw_distance(NodeId(16), h));
        let got: Vec<NodeId> = t.entries.iter().map(|e| e.head).collect();
        assert_eq!(got, brute);
    }

    #[test]
    fn single_cluster_network_routes_nowhere() {
        let g = geo(4, 4);
        let act = ActivationMap::fully_active(&g);
        let t = build_default_routing_table(NodeId(0), &act, &g).unwrap();
        assert!(t.entries.is_empty());
    }

    #[test]
    fn routing_table_flags_mirror_activation() {
        let g = geo(5, 2);
        let mut act = ActivationMap::fully_active(&g);
        act.deactivate_cluster(3); // head 12
        let t = build_default_routing_table(NodeId(0), &act, &g).unwrap();
        let inactive: Vec<u64> = t
            .entries
            .iter()
            .filter(|e| !e.active)
            .map(|e| e.head.value())
            .collect();
        assert_eq!(inactive, vec![12]);
        assert_eq!(t.one_hop(&g, NodeId(13)), None);
        assert_eq!(t.one_hop(&g, NodeId(17)), Some(NodeId(16)));
    }

    #[test]
    fn offsets_for_512_ring() {
        let g = sgeo(9, 5);
        assert_eq!(supreme_offsets(&g).unwrap(), vec![32, 64, 128, 160, 192, 256]);
    }

    #[test]
    fn offsets_degenerate_to_antipode() {
        let g = sgeo(6, 5);
        assert_eq!(supreme_offsets(&g).unwrap(), vec![32]);
    }

    #[test]
    fn offsets_for_1024_ring() {
        let g = sgeo(10, 5);
        assert_eq!(
            supreme_offsets(&g).unwrap(),
            vec![32, 64, 128, 256, 288, 320, 384, 512]
        );
    }

    /// Independent generator: powers of two below H/2, then H/2, then
    /// H/2-shifted powers below H, then H.
    fn offsets_oracle(n: u32, s: u32) -> Vec<u64> {
        let h = 1u64 << (n - 1);
        if (1u64 << s) > h / 2 {
            return vec![h];
        }
        let mut v: Vec<u64> = (s..).map(|k| 1u64 << k).take_while(|&p| p < h / 2).collect();
        v.push(h / 2);
        v.extend((s..).map(|k| h / 2 + (1u64 << k)).take_while(|&p| p < h));
        v.push(h);
        v
    }

    #[test]
    fn offsets_match_oracle_and_are_increasing() {
        for n in 3..=14u32 {
            for s in 2..=n {
                let g = NetworkGeometry::scalable(n, 2, s).unwrap();
                let offs = supreme_offsets(&g).unwrap();
                assert_eq!(offs, offsets_oracle(n, s), "n={n} s={s}");
                assert!(offs.windows(2).all(|w| w[0] < w[1]));
                assert_eq!(*offs.last().unwrap(), g.half_ring());
                // Every offset lands on a section head, except in the
                // single-section ring where no remote section exists at all.
                if s < n {
                    assert!(offs.iter().all(|o| o % g.section_size().unwrap() == 0));
                }
            }
        }
    }

    fn fig7_activation(g: &NetworkGeometry) -> ActivationMap {
        // 512-id ring, 32-id sections; the sections headed by 192 and 416 are dead.
        let mut act = ActivationMap::fully_active(g);
        act.deactivate_section(192 / 32);
        act.deactivate_section(416 / 32);
        act
    }

    #[test]
    fn fallback_fills_dead_target_with_predecessor() {
        let g = sgeo(9, 5);
        let act = fig7_activation(&g);
        let t = resolve_fallbacks(&build_supreme_tables(NodeId(128), &g).unwrap(), &act, &g).unwrap();
        // Raw clockwise target 192 is dead, so the entry holds 160 instead.
        let e = t.clockwise.iter().find(|e| e.raw == NodeId(192)).unwrap();
        assert_eq!(e.resolved, NodeId(160));
        // A live raw target resolves to itself.
        let e = t.clockwise.iter().find(|e| e.raw == NodeId(160)).unwrap();
        assert_eq!(e.resolved, NodeId(160));
    }

    #[test]
    fn fallback_identity_when_fully_active() {
        let g = sgeo(9, 5);
        let act = ActivationMap::fully_active(&g);
        let raw = build_supreme_tables(NodeId(128), &g).unwrap();
        let resolved = resolve_fallbacks(&raw, &act, &g).unwrap();
        assert_eq!(raw, resolved);
    }

    #[test]
    fn dead_antipode_splits_the_last_entries() {
        // 416 is the antipode of 160; with its section dead, the clockwise
        // table falls back to 384 and the counterclockwise one to 448.
        let g = sgeo(9, 5);
        let act = fig7_activation(&g);
        let t = resolve_fallbacks(&build_supreme_tables(NodeId(160), &g).unwrap(), &act, &g).unwrap();
        let cw_last = t.clockwise.last().unwrap();
        let ccw_last = t.counterclockwise.last().unwrap();
        assert_eq!(cw_last.raw, NodeId(416));
        assert_eq!(ccw_last.raw, NodeId(416));
        assert_eq!(cw_last.resolved, NodeId(384));
        assert_eq!(ccw_last.resolved, NodeId(448));
        assert_ne!(cw_last.resolved, ccw_last.resolved);

        // With everything live both last entries coincide at the antipode.
        let full = ActivationMap::fully_active(&g);
        let t = resolve_fallbacks(&build_supreme_tables(NodeId(160), &g).unwrap(), &full, &g).unwrap();
        assert_eq!(t.clockwise.last().unwrap().resolved, NodeId(416));
        assert_eq!(t.counterclockwise.last().unwrap().resolved, NodeId(416));
    }

    #[test]
    fn lone_active_section_self_loops() {
        let g = sgeo(9, 5);
        let mut act = ActivationMap::new();
        act.activate_section(4); // only owner 128's section is live
        let t = resolve_fallbacks(&build_supreme_tables(NodeId(128), &g).unwrap(), &act, &g).unwrap();
        assert!(t.clockwise.iter().all(|e| e.resolved == NodeId(128)));
        assert!(t.counterclockwise.iter().all(|e| e.resolved == NodeId(128)));
    }

    #[test]
    fn next_hop_local_delivery() {
        let g = sgeo(9, 5);
        let act = ActivationMap::fully_active(&g);
        let t = resolve_fallbacks(&build_supreme_tables(NodeId(128), &g).unwrap(), &act, &g).unwrap();
        assert_eq!(next_hop(NodeId(128), NodeId(130), &t, &g).unwrap(), NodeId(128));
    }

    #[test]
    fn next_hop_reaches_antipode_directly() {
        let g = sgeo(9, 5);
        let act = ActivationMap::fully_active(&g);
        let t = resolve_fallbacks(&build_supreme_tables(NodeId(0), &g).unwrap(), &act, &g).unwrap();
        assert_eq!(next_hop(NodeId(0), NodeId(260), &t, &g).unwrap(), NodeId(256));
    }

    #[test]
    fn two_hop_route_to_224() {
        let g = sgeo(9, 5);
        let act = ActivationMap::fully_active(&g);
        let path = route(NodeId(0), NodeId(224), &act, &g).unwrap();
        assert_eq!(path, vec![NodeId(192), NodeId(224)]);
    }

    #[test]
    fn routing_failure_is_surfaced() {
        let g = sgeo(9, 5);
        let mut act = ActivationMap::new();
        act.activate_section(0);
        let t = resolve_fallbacks(&build_supreme_tables(NodeId(0), &g).unwrap(), &act, &g).unwrap();
        // Only the owner's section is live; any remote target is unreachable.
        assert!(matches!(
            next_hop(NodeId(0), NodeId(100), &t, &g),
            Err(TableError::RoutingFailure { .. })
        ));
    }

    /// Breadth-first shortest hop counts over the resolved-table graph.
    fn bfs_hops(g: &NetworkGeometry, act: &ActivationMap, from: NodeId) -> std::collections::BTreeMap<NodeId, u32> {
        let mut dist = std::collections::BTreeMap::new();
        dist.insert(from, 0u32);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            let t = resolve_fallbacks(&build_supreme_tables(u, g).unwrap(), act, g).unwrap();
            for e in t.clockwise.iter().chain(&t.counterclockwise) {
                if !dist.contains_key(&e.resolved) {
                    dist.insert(e.resolved, d + 1);
                    queue.push_back(e.resolved);
                }
            }
        }
        dist
    }

    #[test]
    fn fully_active_hop_bound_and_halving() {
        // Exhaustive over section counts 2..=64 here (the acceptance suite
        // pushes to 256): greedy stays within ceil(log2(sections)) hops,
        // within one hop of the BFS optimum, and each step either halves the
        // remaining distance or lands within one offset gap of the target.
        for k in 1..=6u32 {
            let s = 5;
            let g = NetworkGeometry::scalable(s + k, 2, s).unwrap();
            let act = ActivationMap::fully_active(&g);
            let bound = k; // ceil(log2(2^k))
            let heads: Vec<NodeId> = g.section_heads().collect();
            let max_gap = supreme_offsets(&g)
                .unwrap()
                .windows(2)
                .map(|w| w[1] - w[0])
                .max()
                .unwrap_or(g.half_ring());
            for &a in &heads {
                let bfs = bfs_hops(&g, &act, a);
                for &b in &heads {
                    if a == b {
                        continue;
                    }
                    let path = route(a, b, &act, &g).unwrap();
                    assert!(path.len() as u32 <= bound, "{a}->{b} took {} hops", path.len());
                    assert!(path.len() as u32 <= bfs[&b] + 1);
                    let mut cur = a;
                    for &hop in &path {
                        let before = g.ring_distance(cur, b);
                        let after = g.ring_distance(hop, b);
                        assert!(
                            after <= before / 2 || after <= max_gap,
                            "hop {cur}->{hop} toward {b}: {before} -> {after}"
                        );
                        cur = hop;
                    }
                }
            }
        }
    }

    #[test]
    fn fallbacks_route_around_dead_sections() {
        let g = sgeo(9, 5);
        let act = fig7_activation(&g);
        let heads: Vec<NodeId> = g
            .section_heads()
            .filter(|h| act.section_active(h.value() >> 5))
            .collect();
        for &a in &heads {
            for &b in &heads {
                let path = route(a, b, &act, &g).unwrap();
                // One dead section at a time: at most one extra hop over the bound.
                assert!(path.len() <= 5, "{a}->{b}: {:?}", path);
                if let Some(last) = path.last() {
                    assert_eq!(*last, b);
                }
            }
        }
    }
}
