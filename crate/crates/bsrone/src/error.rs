//! Error types shared across the crate.

use crate::ring::NodeId;
use thiserror::Error;

/// Errors from the integer ring geometry.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("id {id} out of range for a ring of 2^{ring_exp} ids")]
    IdOutOfRange { id: u64, ring_exp: u32 },
    #[error("invalid exponents: ring_exp={ring_exp}, cluster_exp={cluster_exp}, section_exp={section_exp:?}")]
    BadExponents {
        ring_exp: u32,
        cluster_exp: u32,
        section_exp: Option<u32>,
    },
    #[error("operation requires scalable mode (no section size configured)")]
    DefaultMode,
}

/// Errors from table construction and greedy routing.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("{member} is not a member of the cluster headed by {owner}")]
    MemberOutsideCluster { owner: NodeId, member: NodeId },
    #[error("{owner} is not a cluster head")]
    NotAClusterHead { owner: NodeId },
    #[error("{owner} is not a section head")]
    NotASectionHead { owner: NodeId },
    #[error("no table entry reduces the distance from {current} to {target}")]
    RoutingFailure { current: NodeId, target: NodeId },
}

/// Errors from the multi-criteria scoring pipeline.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("criteria weights must sum to 1")]
    WeightSum,
    #[error("invalid criteria bounds: {0}")]
    BadBounds(String),
    #[error("criterion '{0}' is zero for every candidate; cannot normalize")]
    AllZeroColumn(&'static str),
    #[error("decision matrix must have at least one candidate")]
    EmptyMatrix,
    #[error("willingness must lie in 0..=10, got {0}")]
    BadWillingness(u8),
}

/// Errors from the node lifecycle state machine.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("table: {0}")]
    Table(#[from] TableError),
    #[error("score: {0}")]
    Score(#[from] ScoreError),
    #[error("join rejected: id {0} is already occupied")]
    IdCollision(NodeId),
    #[error("join rejected: the cluster of {0} is at capacity")]
    ClusterFull(NodeId),
    #[error("node {0} is not present in the network")]
    UnknownNode(NodeId),
    #[error("protocol violation: {0}")]
    Violation(String),
}
