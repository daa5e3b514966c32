//! Deterministic discrete-event simulator: configuration, the event engine,
//! the four experiment families, and CSV/JSON/trace output.
//!
//! One run is one sequential event loop over one seeded generator, split into
//! independent streams per concern so a change to one sweep parameter never
//! reshuffles unrelated randomness. Identical configuration and seed give
//! bit-identical metrics and traces.

mod config;
mod engine;
mod experiments;
pub mod output;
pub mod trace;

pub use config::{SessionFamily, SimConfig};
pub use engine::{Engine, SimEvent};
pub use experiments::{
    run_fault_tolerance, run_join_overhead, run_leave_overhead, run_routing_experiment,
    run_stability, stability_trace,
};

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

/// Errors from configuration, experiments, and output.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("protocol: {0}")]
    Protocol(#[from] crate::error::ProtocolError),
    #[error("geometry: {0}")]
    Geometry(#[from] crate::error::GeometryError),
    #[error("score: {0}")]
    Score(#[from] crate::error::ScoreError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("toml: {0}")]
    Toml(String),
    #[error("trace: {0}")]
    Trace(String),
}

/// Independent random streams drawn from one seed.
///
/// `salt` separates parallel series (one per swept cluster size) so each
/// series sees its own reproducible randomness.
pub struct RngStreams {
    pub ids: ChaCha12Rng,
    pub churn: ChaCha12Rng,
    pub lookups: ChaCha12Rng,
    pub attrs: ChaCha12Rng,
}

impl RngStreams {
    pub fn new(seed: u64, salt: u64) -> Self {
        let mk = |concern: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(salt * 8 + concern);
            rng
        };
        Self {
            ids: mk(0),
            churn: mk(1),
            lookups: mk(2),
            attrs: mk(3),
        }
    }
}

/// Per-step (or per-snapshot, per-cohort) measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics<T: Real> {
    pub step: u32,
    /// Mean hop count over the step's lookups; zero when no lookups ran.
    pub mean_hops: T,
    pub max_hops: u32,
    /// The series' headline signal count for this step; a replicate mean
    /// when the experiment averages repetitions.
    pub headline_signals: T,
    /// Per-class message counts emitted during this step.
    pub signals: BTreeMap<String, u64>,
    pub exchanges: u64,
    /// Clusters that lost head and every shadow; a replicate mean in the
    /// fault experiment.
    pub failed_clusters: T,
    pub population: u32,
    pub active_heads: u32,
}

impl<T: Real> StepMetrics<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.mean_hops > T::from_u64_lossy(self.max_hops as u64) {
            return Err(SimError::Config(format!(
                "step {}: mean hops {} exceeds max {}",
                self.step, self.mean_hops, self.max_hops
            )));
        }
        Ok(())
    }
}

/// One measured series: routing has a single one, churn sweeps carry one per
/// cluster size (and backup setting).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series<T: Real> {
    pub label: String,
    pub steps: Vec<StepMetrics<T>>,
    /// Cumulative per-class counts over the whole series.
    pub signal_totals: BTreeMap<String, u64>,
}

/// Everything an experiment reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics<T: Real = f64> {
    pub experiment: String,
    pub seed: u64,
    pub series: Vec<Series<T>>,
}

impl<T: Real> Metrics<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        for s in &self.series {
            for step in &s.steps {
                step.validate()?;
            }
        }
        Ok(())
    }

    pub fn series_labeled(&self, label: &str) -> Option<&Series<T>> {
        self.series.iter().find(|s| s.label == label)
    }
}

/// Message-kind map keyed by printable names.
pub(crate) fn name_counts(
    counts: &BTreeMap<crate::protocol::MessageKind, u64>,
) -> BTreeMap<String, u64> {
    counts.iter().map(|(k, &v)| (k.name().to_string(), v)).collect()
}
