//! Experiment configuration: one flat key/value structure, readable from a
//! TOML file, with per-experiment default constructors.

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::num::Real;
use crate::ring::NetworkGeometry;
use crate::topsis::{BoundWeighting, CriteriaBounds, CriteriaWeights};

/// Distribution family for synthetic session lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SessionFamily {
    Exponential,
    /// Heavy-tailed sessions let long-lived nodes entrench as heads, which is
    /// what drives churn toward a stable role assignment.
    #[default]
    LogNormal,
}

/// All knobs of a simulation run. The seed is mandatory; nothing in a run
/// reads the wall clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig<T: Real = f64> {
    pub seed: u64,
    pub ring_exp: u32,
    pub cluster_exp: u32,
    pub section_exp: Option<u32>,
    pub initial_population: u32,
    /// Step count ceiling for experiments that sweep steps.
    pub steps: u32,
    /// Section-count exponents swept by the routing experiment; step k
    /// activates 2^k sections.
    pub routing_section_exps: Vec<u32>,
    /// Lookups measured per routing step (at least 10).
    pub messages_per_step: u32,
    /// Joins injected per step of the join-overhead sweep.
    pub join_batches: Vec<u32>,
    /// Departures per step of the leave-overhead sweep.
    pub leave_batches: Vec<u32>,
    /// Independent repetitions averaged into each churn-sweep step value.
    pub join_replicates: u32,
    pub leave_replicates: u32,
    /// Independent runs averaged into each stability cohort value.
    pub stability_replicates: u32,
    /// Independent removal orders averaged into each fault snapshot.
    pub fault_replicates: u32,
    /// Cluster-size exponents swept by the churn experiments.
    pub cluster_exp_sweep: Vec<u32>,
    /// Idle ticks separating steps.
    pub step_ticks: u64,
    /// Cadence of the periodic attribute refresh; zero disables it.
    pub refresh_interval: u64,
    /// Departures between fault-tolerance snapshots.
    pub crash_snapshot: u32,
    /// Number of fault-tolerance snapshots.
    pub crash_snapshots: u32,
    /// Shadows kept per cluster head.
    pub backup_count: usize,
    /// Extra shadows for the head carrying a section's supreme duty.
    pub supreme_backup_count: usize,
    /// Backup settings compared by the fault experiment over one shared
    /// crash order; empty means just `backup_count`.
    pub fault_backup_counts: Vec<usize>,
    /// Arrival cohorts in the stability experiment.
    pub cohorts: u32,
    pub cohort_size: u32,
    /// Ticks between stability arrivals.
    pub arrival_spacing: u64,
    /// Soft population cap before the earliest-expiry node is pushed out.
    pub population_cap: u32,
    pub session_family: SessionFamily,
    /// Mean session length in ticks (log-normal uses this as the median).
    pub session_scale: f64,
    pub session_sigma: f64,
    /// Log-normal bandwidth parameters.
    pub bandwidth_mu: f64,
    pub bandwidth_sigma: f64,
    pub weights: [T; 4],
    pub bounds_upper: [T; 4],
    pub bounds_lower: [T; 4],
    pub bound_weighting: BoundWeighting,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            seed: 0,
            ring_exp: 7,
            cluster_exp: 2,
            section_exp: None,
            initial_population: 20,
            steps: 8,
            routing_section_exps: vec![1, 2, 4, 8],
            messages_per_step: 600,
            join_batches: vec![10, 14, 18, 22, 26],
            leave_batches: vec![30, 22, 22, 22, 22],
            join_replicates: 24,
            leave_replicates: 8,
            stability_replicates: 8,
            fault_replicates: 16,
            cluster_exp_sweep: vec![2, 3, 4, 5],
            step_ticks: 200,
            refresh_interval: 100,
            crash_snapshot: 500,
            crash_snapshots: 8,
            backup_count: 1,
            supreme_backup_count: 1,
            fault_backup_counts: Vec::new(),
            cohorts: 5,
            cohort_size: 1000,
            arrival_spacing: 3,
            population_cap: 110,
            session_family: SessionFamily::LogNormal,
            session_scale: 200.0,
            session_sigma: 1.5,
            bandwidth_mu: 2.0,
            bandwidth_sigma: 0.8,
            weights: [
                T::from_f64_lossy(0.35),
                T::from_f64_lossy(0.3),
                T::from_f64_lossy(0.15),
                T::from_f64_lossy(0.2),
            ],
            bounds_upper: [
                T::from_f64_lossy(100.0),
                T::from_f64_lossy(7200.0),
                T::from_f64_lossy(10.0),
                T::from_f64_lossy(10.0),
            ],
            bounds_lower: [
                T::from_f64_lossy(0.1),
                T::from_f64_lossy(1.0),
                T::zero(),
                T::zero(),
            ],
            bound_weighting: BoundWeighting::Weighted,
        }
    }
}

impl<T: Real + Serialize + serde::de::DeserializeOwned> SimConfig<T> {
    /// Routing-efficiency defaults: 32-id sections, growing section counts.
    pub fn routing(seed: u64) -> Self {
        Self {
            seed,
            cluster_exp: 2,
            section_exp: Some(5),
            ..Self::default()
        }
    }

    /// Join-overhead defaults: 128-id ring seeded with 20 nodes.
    pub fn join_overhead(seed: u64) -> Self {
        Self {
            seed,
            ring_exp: 7,
            initial_population: 20,
            ..Self::default()
        }
    }

    /// Leave-overhead defaults: 128-id ring drained from 120 nodes.
    pub fn leave_overhead(seed: u64) -> Self {
        Self {
            seed,
            ring_exp: 7,
            initial_population: 120,
            refresh_interval: 0,
            ..Self::default()
        }
    }

    /// Fault-tolerance defaults: a full 4096-id ring crashed in waves.
    pub fn fault(seed: u64) -> Self {
        Self {
            seed,
            ring_exp: 12,
            initial_population: 4096,
            refresh_interval: 0,
            ..Self::default()
        }
    }

    /// Stability defaults: 128-id ring, 50 initial nodes, matched churn,
    /// stability-dominated weights, heavy-tailed sessions so survivors
    /// entrench as heads.
    pub fn stability(seed: u64) -> Self {
        Self {
            seed,
            ring_exp: 7,
            cluster_exp: 2,
            initial_population: 50,
            session_scale: 20.0,
            session_sigma: 3.2,
            weights: [
                T::from_f64_lossy(0.05),
                T::from_f64_lossy(0.85),
                T::from_f64_lossy(0.05),
                T::from_f64_lossy(0.05),
            ],
            bounds_upper: [
                T::from_f64_lossy(100.0),
                T::from_f64_lossy(30000.0),
                T::from_f64_lossy(50.0),
                T::from_f64_lossy(10.0),
            ],
            ..Self::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        let cfg: Self = toml::from_str(s).map_err(|e| SimError::Toml(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, SimError> {
        toml::to_string_pretty(self).map_err(|e| SimError::Toml(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        let geometry = self.geometry()?;
        if self.initial_population as u64 > geometry.ring_size() {
            return Err(SimError::Config(format!(
                "initial population {} exceeds the ring capacity {}",
                self.initial_population,
                geometry.ring_size()
            )));
        }
        if self.backup_count == 0 {
            return Err(SimError::Config("backup_count must be at least 1".into()));
        }
        if self.session_scale <= 0.0 || self.bandwidth_sigma < 0.0 || self.session_sigma < 0.0 {
            return Err(SimError::Config("distribution parameters must be positive".into()));
        }
        self.criteria_weights()?;
        self.criteria_bounds()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<NetworkGeometry, SimError> {
        Ok(NetworkGeometry::new(self.ring_exp, self.cluster_exp, self.section_exp)?)
    }

    pub fn criteria_weights(&self) -> Result<CriteriaWeights<T>, SimError> {
        Ok(CriteriaWeights::new(self.weights)?)
    }

    pub fn criteria_bounds(&self) -> Result<CriteriaBounds<T>, SimError> {
        Ok(CriteriaBounds::new(self.bounds_upper, self.bounds_lower)?)
    }

    pub fn protocol_params(&self) -> Result<crate::protocol::ProtocolParams<T>, SimError> {
        Ok(crate::protocol::ProtocolParams {
            weights: self.criteria_weights()?,
            bounds: self.criteria_bounds()?,
            bound_weighting: self.bound_weighting,
            backup_count: self.backup_count,
            supreme_backup_count: self.supreme_backup_count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg: SimConfig<f64> = SimConfig { seed: 7, ..SimConfig::default() };
        cfg.validate().unwrap();
        let s = cfg.to_toml_string().unwrap();
        let back = SimConfig::<f64>::from_toml_str(&s).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn oversized_population_rejected() {
        let cfg: SimConfig<f64> = SimConfig {
            ring_exp: 5,
            initial_population: 100,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let cfg = SimConfig::<f64>::from_toml_str("seed = 11\nring_exp = 6\n").unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.ring_exp, 6);
        assert_eq!(cfg.cluster_exp, 2);
    }
}
