//! CSV and JSON writers. Every CSV carries the fully resolved configuration
//! and seed as comment lines, so a file is enough to reproduce its run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Metrics, Series, SimConfig, SimError};
use crate::num::Real;
use crate::protocol::MessageKind;

/// One CSV document per series: config header comments, column header, rows.
pub fn series_csv<T: Real + Serialize + serde::de::DeserializeOwned>(
    metrics: &Metrics<T>,
    series: &Series<T>,
    cfg: &SimConfig<T>,
) -> Result<String, SimError> {
    let mut out = String::new();
    let _ = writeln!(out, "# experiment = \"{}\"", metrics.experiment);
    let _ = writeln!(out, "# series = \"{}\"", series.label);
    for line in cfg.to_toml_string()?.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let mut header = String::from(
        "step,population,active_heads,mean_hops,max_hops,headline_signals,exchanges,failed_clusters",
    );
    for kind in MessageKind::ALL {
        let _ = write!(header, ",{}", kind.name());
    }
    let _ = writeln!(out, "{header}");
    for s in &series.steps {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.step,
            s.population,
            s.active_heads,
            s.mean_hops,
            s.max_hops,
            s.headline_signals,
            s.exchanges,
            s.failed_clusters
        );
        for kind in MessageKind::ALL {
            let _ = write!(out, ",{}", s.signals.get(kind.name()).copied().unwrap_or(0));
        }
        let _ = writeln!(out);
    }
    Ok(out)
}

/// Writes one CSV per series into `dir`, returning the paths.
pub fn write_csv<T: Real + Serialize + serde::de::DeserializeOwned>(
    metrics: &Metrics<T>,
    cfg: &SimConfig<T>,
    dir: &Path,
) -> Result<Vec<PathBuf>, SimError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for series in &metrics.series {
        let name = format!("{}_{}.csv", metrics.experiment, series.label);
        let path = dir.join(name);
        std::fs::write(&path, series_csv(metrics, series, cfg)?)?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Serialize)]
struct Summary<'a, T: Real + Serialize> {
    experiment: &'a str,
    seed: u64,
    config: &'a SimConfig<T>,
    series: &'a [Series<T>],
    aggregates: Aggregates,
}

#[derive(Serialize)]
struct Aggregates {
    total_signals: std::collections::BTreeMap<String, u64>,
    total_exchanges: u64,
    final_population: u64,
}

/// JSON summary of a whole run with final aggregates.
pub fn summary_json<T: Real + Serialize + serde::de::DeserializeOwned>(
    metrics: &Metrics<T>,
    cfg: &SimConfig<T>,
) -> Result<String, SimError> {
    let mut total_signals = std::collections::BTreeMap::new();
    let mut total_exchanges = 0;
    let mut final_population = 0;
    for s in &metrics.series {
        for (k, v) in &s.signal_totals {
            *total_signals.entry(k.clone()).or_insert(0) += v;
        }
        for step in &s.steps {
            total_exchanges += step.exchanges;
        }
        if let Some(last) = s.steps.last() {
            final_population = final_population.max(last.population as u64);
        }
    }
    let summary = Summary {
        experiment: &metrics.experiment,
        seed: metrics.seed,
        config: cfg,
        series: &metrics.series,
        aggregates: Aggregates {
            total_signals,
            total_exchanges,
            final_population,
        },
    };
    serde_json::to_string_pretty(&summary).map_err(|e| SimError::Trace(e.to_string()))
}

/// Writes the JSON summary into `dir`.
pub fn write_json<T: Real + Serialize + serde::de::DeserializeOwned>(
    metrics: &Metrics<T>,
    cfg: &SimConfig<T>,
    dir: &Path,
) -> Result<PathBuf, SimError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}_summary.json", metrics.experiment));
    std::fs::write(&path, summary_json(metrics, cfg)?)?;
    Ok(path)
}
