//! Library and deterministic simulator for a two-tier circular super-peer
//! overlay: one-hop lookups through per-cluster super-nodes in the default
//! mode, binary-search-style section routing through supreme-nodes in the
//! scalable mode, and a churn protocol that elects heads by multi-criteria
//! closeness scoring.

pub mod error;
pub mod num;
pub mod protocol;
pub mod ring;
pub mod sim;
pub mod tables;
pub mod topsis;

pub use error::{GeometryError, ProtocolError, ScoreError, TableError};
pub use num::Real;
pub use ring::{ActivationMap, NetworkGeometry, NodeId};

/// Double-precision network, the concrete type the simulator and CLI use.
pub type Network = protocol::Network<f64>;
/// Double-precision attribute vector.
pub type Attributes = topsis::AttributeVector<f64>;
/// Double-precision simulation configuration.
pub type SimConfig = sim::SimConfig<f64>;
/// Double-precision metrics.
pub type Metrics = sim::Metrics<f64>;
