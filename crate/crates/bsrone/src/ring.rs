//! Integer geometry of the identifier ring.
//!
//! The ring holds at most `2^n` ids. It is cut into clusters of `2^x` ids,
//! and, in scalable mode, into sections of `2^s` ids where each section is a
//! whole number of clusters. Clockwise means increasing id modulo `2^n`.
//! Everything here is a pure function over immutable values.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// A position on the identifier ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl NodeId {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

/// Ring, cluster and section size exponents; the single source of truth for
/// every table shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    /// The ring holds at most `2^ring_exp` ids.
    pub ring_exp: u32,
    /// Clusters span `2^cluster_exp` consecutive ids.
    pub cluster_exp: u32,
    /// Sections span `2^section_exp` consecutive ids; `None` in default mode.
    pub section_exp: Option<u32>,
}

impl NetworkGeometry {
    /// Default-mode geometry: clusters only, every head knows every head.
    pub fn default_mode(ring_exp: u32, cluster_exp: u32) -> Result<Self, GeometryError> {
        Self::new(ring_exp, cluster_exp, None)
    }

    /// Scalable-mode geometry: sections of whole clusters on top.
    pub fn scalable(ring_exp: u32, cluster_exp: u32, section_exp: u32) -> Result<Self, GeometryError> {
        Self::new(ring_exp, cluster_exp, Some(section_exp))
    }

    pub fn new(ring_exp: u32, cluster_exp: u32, section_exp: Option<u32>) -> Result<Self, GeometryError> {
        let bad = || GeometryError::BadExponents {
            ring_exp,
            cluster_exp,
            section_exp,
        };
        if ring_exp == 0 || ring_exp > 62 || cluster_exp == 0 || cluster_exp > ring_exp {
            return Err(bad());
        }
        // Power-of-two sizes always divide the ring; assert the divisibility
        // condition anyway since it is part of the contract.
        debug_assert_eq!((1u64 << ring_exp) % (1u64 << cluster_exp), 0);
        if let Some(s) = section_exp {
            if s < cluster_exp || s > ring_exp {
                return Err(bad());
            }
        }
        Ok(Self {
            ring_exp,
            cluster_exp,
            section_exp,
        })
    }

    pub fn is_scalable(&self) -> bool {
        self.section_exp.is_some()
    }

    /// Total id capacity, `2^n`.
    pub fn ring_size(&self) -> u64 {
        1u64 << self.ring_exp
    }

    /// Ids per cluster, `2^x`.
    pub fn cluster_size(&self) -> u64 {
        1u64 << self.cluster_exp
    }

    pub fn cluster_count(&self) -> u64 {
        1u64 << (self.ring_exp - self.cluster_exp)
    }

    /// Ids per section, `2^s`. Errors in default mode.
    pub fn section_size(&self) -> Result<u64, GeometryError> {
        self.section_exp
            .map(|s| 1u64 << s)
            .ok_or(GeometryError::DefaultMode)
    }

    pub fn section_count(&self) -> Result<u64, GeometryError> {
        self.section_exp
            .map(|s| 1u64 << (self.ring_exp - s))
            .ok_or(GeometryError::DefaultMode)
    }

    /// Half the ring, `2^(n-1)`: the horizon each supreme routing table sees.
    pub fn half_ring(&self) -> u64 {
        1u64 << (self.ring_exp - 1)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.0 < self.ring_size()
    }

    fn check(&self, id: NodeId) -> Result<(), GeometryError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(GeometryError::IdOutOfRange {
                id: id.0,
                ring_exp: self.ring_exp,
            })
        }
    }

    /// Index of the cluster holding `id`: `floor(id / 2^x)`.
    pub fn cluster_of(&self, id: NodeId) -> Result<u64, GeometryError> {
        self.check(id)?;
        Ok(id.0 >> self.cluster_exp)
    }

    /// First id of the cluster holding `id`; the position a super-node serves.
    pub fn cluster_head(&self, id: NodeId) -> Result<NodeId, GeometryError> {
        Ok(NodeId(self.cluster_of(id)? << self.cluster_exp))
    }

    /// Head id of cluster index `c`.
    pub fn cluster_head_of_index(&self, c: u64) -> NodeId {
        NodeId(c << self.cluster_exp)
    }

    /// Index of the section holding `id`. Scalable mode only.
    pub fn section_of(&self, id: NodeId) -> Result<u64, GeometryError> {
        self.check(id)?;
        let s = self.section_exp.ok_or(GeometryError::DefaultMode)?;
        Ok(id.0 >> s)
    }

    /// First id of the section holding `id`; the position a supreme-node serves.
    pub fn section_head(&self, id: NodeId) -> Result<NodeId, GeometryError> {
        let s = self.section_exp.ok_or(GeometryError::DefaultMode)?;
        self.check(id)?;
        Ok(NodeId((id.0 >> s) << s))
    }

    /// Head id of section index `sec`.
    pub fn section_head_of_index(&self, sec: u64) -> Result<NodeId, GeometryError> {
        let s = self.section_exp.ok_or(GeometryError::DefaultMode)?;
        Ok(NodeId(sec << s))
    }

    /// All cluster-head ids in clockwise order starting at 0.
    pub fn cluster_heads(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.cluster_count()).map(|c| self.cluster_head_of_index(c))
    }

    /// All section-head ids in clockwise order starting at 0. Empty in default mode.
    pub fn section_heads(&self) -> Box<dyn Iterator<Item = NodeId> + '_> {
        match self.section_exp {
            Some(s) => Box::new((0..(1u64 << (self.ring_exp - s))).map(move |i| NodeId(i << s))),
            None => Box::new(std::iter::empty()),
        }
    }

    /// Clockwise displacement from `a` to `b`, in ids.
    pub fn cw_distance(&self, a: NodeId, b: NodeId) -> u64 {
        b.0.wrapping_sub(a.0) & (self.ring_size() - 1)
    }

    /// Counterclockwise displacement from `a` to `b`, in ids.
    pub fn ccw_distance(&self, a: NodeId, b: NodeId) -> u64 {
        self.cw_distance(b, a)
    }

    /// Shorter of the two ring distances between `a` and `b`.
    pub fn ring_distance(&self, a: NodeId, b: NodeId) -> u64 {
        self.cw_distance(a, b).min(self.ccw_distance(a, b))
    }

    /// `id + offset` clockwise, modulo the ring size.
    pub fn add(&self, id: NodeId, offset: u64) -> NodeId {
        NodeId(id.0.wrapping_add(offset) & (self.ring_size() - 1))
    }

    /// `id - offset` counterclockwise, modulo the ring size.
    pub fn sub(&self, id: NodeId, offset: u64) -> NodeId {
        NodeId(id.0.wrapping_sub(offset) & (self.ring_size() - 1))
    }
}

/// Which clusters and sections currently have a claimed head position.
///
/// A cluster is active while it has a present member or a symlinked head; a
/// section is active while its supreme position is claimed, really or by
/// symlink.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationMap {
    pub active_clusters: BTreeSet<u64>,
    pub active_sections: BTreeSet<u64>,
}

impl ActivationMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fully active map for a geometry: every cluster and section claimed.
    pub fn fully_active(g: &NetworkGeometry) -> Self {
        Self {
            active_clusters: (0..g.cluster_count()).collect(),
            active_sections: match g.section_count() {
                Ok(n) => (0..n).collect(),
                Err(_) => BTreeSet::new(),
            },
        }
    }

    pub fn cluster_active(&self, c: u64) -> bool {
        self.active_clusters.contains(&c)
    }

    pub fn section_active(&self, s: u64) -> bool {
        self.active_sections.contains(&s)
    }

    pub fn activate_cluster(&mut self, c: u64) {
        self.active_clusters.insert(c);
    }

    pub fn deactivate_cluster(&mut self, c: u64) {
        self.active_clusters.remove(&c);
    }

    pub fn activate_section(&mut self, s: u64) {
        self.active_sections.insert(s);
    }

    pub fn deactivate_section(&mut self, s: u64) {
        self.active_sections.remove(&s);
    }
}
