//! Event-trace export and replay.
//!
//! Traces are newline-delimited JSON: a header object with the geometry and
//! scoring parameters, then one record per event carrying time, kind, actor,
//! and every message the event emitted. Replaying a trace re-applies the
//! events to a fresh network and audits both the reproduced message sequences
//! and the recorded signal totals.

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::num::Real;
use crate::protocol::{EventKind, Network, ProtocolParams, TraceRecord};
use crate::ring::NetworkGeometry;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TraceHeader<T: Real> {
    geometry: NetworkGeometry,
    params: ProtocolParams<T>,
}

/// Serializes a network's trace: header line, then one JSON record per line.
pub fn export_jsonl<T: Real + Serialize + serde::de::DeserializeOwned>(
    net: &Network<T>,
) -> Result<String, SimError> {
    let mut out = String::new();
    let header = TraceHeader {
        geometry: *net.geometry(),
        params: net.params().clone(),
    };
    out.push_str(&serde_json::to_string(&header).map_err(|e| SimError::Trace(e.to_string()))?);
    out.push('\n');
    for rec in net.trace() {
        out.push_str(&serde_json::to_string(rec).map_err(|e| SimError::Trace(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// What a replay found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub records: usize,
    /// Indices of records whose reproduced messages differ from the trace.
    pub mismatches: Vec<usize>,
}

impl ReplayReport {
    pub fn is_faithful(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Re-applies a serialized trace to a fresh network and compares the emitted
/// messages record by record.
pub fn replay<T: Real + Serialize + serde::de::DeserializeOwned>(
    jsonl: &str,
) -> Result<ReplayReport, SimError> {
    let mut lines = jsonl.lines().filter(|l| !l.trim().is_empty());
    let header: TraceHeader<T> = serde_json::from_str(
        lines.next().ok_or_else(|| SimError::Trace("empty trace".into()))?,
    )
    .map_err(|e| SimError::Trace(format!("bad trace header: {e}")))?;
    let records: Vec<TraceRecord<T>> = lines
        .map(|l| serde_json::from_str(l).map_err(|e| SimError::Trace(format!("bad record: {e}"))))
        .collect::<Result<_, _>>()?;

    let mut net: Network<T> = Network::new(header.geometry, header.params);
    net.set_trace_enabled(true);
    let mut mismatches = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        net.advance_to(rec.time);
        let before = net.trace().len();
        match rec.kind {
            EventKind::Join => {
                let attrs = rec
                    .attrs
                    .ok_or_else(|| SimError::Trace(format!("record {i}: join without attributes")))?;
                net.handle_join(rec.actor, attrs, rec.via)?;
            }
            EventKind::Leave => {
                net.handle_leave(rec.actor)?;
            }
            EventKind::Crash => {
                net.crash_batch(&rec.targets);
            }
            EventKind::Promote => {
                let attrs = rec
                    .attrs
                    .ok_or_else(|| SimError::Trace(format!("record {i}: promote without attributes")))?;
                net.promote_on_improvement(rec.actor, attrs)?;
            }
            EventKind::Lookup => {
                let target = rec
                    .targets
                    .first()
                    .ok_or_else(|| SimError::Trace(format!("record {i}: lookup without target")))?;
                net.lookup_recorded(rec.actor, *target)?;
            }
        }
        let reproduced = &net.trace()[before..];
        let ok = reproduced.len() == 1
            && reproduced[0].kind == rec.kind
            && reproduced[0].actor == rec.actor
            && reproduced[0].messages == rec.messages;
        if !ok {
            mismatches.push(i);
        }
    }
    Ok(ReplayReport {
        records: records.len(),
        mismatches,
    })
}
