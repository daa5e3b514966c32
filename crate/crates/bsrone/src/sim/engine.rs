//! The event queue: timestamped events processed in non-decreasing order,
//! with scheduling allowed while draining and full accounting so no event is
//! ever dropped.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::num::Real;
use crate::ring::NodeId;
use crate::topsis::AttributeVector;

/// One schedulable simulation event.
#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent<T: Real> {
    /// Join at an id drawn uniformly from the unoccupied ids at execution.
    JoinRandom { attrs: AttributeVector<T> },
    /// Join at a fixed id (scenario scripts, supreme placement).
    JoinAt {
        id: NodeId,
        attrs: AttributeVector<T>,
        via: Option<NodeId>,
    },
    /// Graceful departure of a node drawn uniformly from the present ones.
    LeaveRandom,
    /// Graceful departure of a fixed node; unknown ids no-op.
    LeaveAt { id: NodeId },
    /// Simultaneous unannounced failures.
    CrashWave { ids: Vec<NodeId> },
    /// Periodic attribute refresh across every cluster.
    Refresh,
    /// Step boundary marker; experiments snapshot metrics here.
    Mark { label: u32 },
}

#[derive(Debug)]
struct Scheduled<T: Real> {
    time: u64,
    seq: u64,
    event: SimEvent<T>,
}

impl<T: Real> PartialEq for Scheduled<T> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl<T: Real> Eq for Scheduled<T> {}
impl<T: Real> PartialOrd for Scheduled<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Scheduled<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

/// Min-heap of events keyed by (time, insertion order).
pub struct Engine<T: Real> {
    queue: BinaryHeap<Reverse<Scheduled<T>>>,
    next_seq: u64,
    scheduled: u64,
    processed: u64,
    last_popped: u64,
}

impl<T: Real> Default for Engine<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Engine<T> {
    pub fn new() -> Self {
        Self {
            queue: BinaryHeap::new(),
            next_seq: 0,
            scheduled: 0,
            processed: 0,
            last_popped: 0,
        }
    }

    pub fn schedule(&mut self, time: u64, event: SimEvent<T>) {
        self.queue.push(Reverse(Scheduled {
            time,
            seq: self.next_seq,
            event,
        }));
        self.next_seq += 1;
        self.scheduled += 1;
    }

    /// Next event in (time, insertion) order. Timestamps never decrease
    /// across pops.
    pub fn pop(&mut self) -> Option<(u64, SimEvent<T>)> {
        let Reverse(s) = self.queue.pop()?;
        debug_assert!(s.time >= self.last_popped, "event queue went back in time");
        self.last_popped = s.time;
        self.processed += 1;
        Some((s.time, s.event))
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// (scheduled, processed) counts; equal once the queue has drained.
    pub fn accounting(&self) -> (u64, u64) {
        (self.scheduled, self.processed)
    }
}
