//! Deterministic discrete-event scheduler.
//!
//! Events are totally ordered by `(fire_at, seq)` where `seq` is assigned in
//! scheduling order, so runs over identical insertions replay identically
//! regardless of any container internals. Cancellation is lazy: cancelled ids
//! go into a tombstone set and are skipped on pop.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::error::SimError;
use crate::time::SimTime;

pub type StationId = u16;

/// Sender id used by tests and debugging tools to inject raw channel traffic
/// that no MAC owns.
pub const PHANTOM_STATION: StationId = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerKind {
    DifsEnd,
    BackoffComplete,
    ResponseDue,
    DataDue,
    AckTimeout,
    CtsTimeout,
}

/// What an event does when it fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// A host's traffic source emits its next packet.
    TrafficGen { host: StationId },
    /// Mobility epoch for one station.
    MobilityTick { station: StationId },
    /// A transmission registered with the channel ends.
    TxEnd { tx: usize },
    /// A per-station MAC timer expires.
    MacTimer { station: StationId, kind: TimerKind },
    /// Raw interference injected onto the channel (tests, fault studies).
    Jam { airtime_ns: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub fire_at: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventId(u64);

struct HeapEntry(Event);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.0.fire_at == other.0.fire_at && self.0.seq == other.0.seq
    }
}
impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the earliest event
        match other.0.fire_at.cmp(&self.0.fire_at) {
            Ordering::Equal => other.0.seq.cmp(&self.0.seq),
            ord => ord,
        }
    }
}

pub struct EventQueue {
    heap: BinaryHeap<HeapEntry>,
    cancelled: HashSet<u64>,
    next_seq: u64,
    now: SimTime,
}

impl EventQueue {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            next_seq: 0,
            now: SimTime::ZERO,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Schedules `kind` at `fire_at`. Scheduling in the past is a contract
    /// violation and aborts the run.
    pub fn schedule(&mut self, fire_at: SimTime, kind: EventKind) -> Result<EventId, SimError> {
        if fire_at < self.now {
            return Err(SimError::TimeReversal {
                at: fire_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(HeapEntry(Event { fire_at, seq, kind }));
        Ok(EventId(seq))
    }

    /// Marks an event so `pop_next` will skip it.
    pub fn cancel(&mut self, id: EventId) {
        self.cancelled.insert(id.0);
    }

    /// Pops the minimal `(fire_at, seq)` pending event and advances virtual
    /// time to its timestamp. Returns `None` once only cancelled events (or
    /// nothing) remain.
    pub fn pop_next(&mut self) -> Option<(SimTime, Event)> {
        while let Some(HeapEntry(ev)) = self.heap.pop() {
            if self.cancelled.remove(&ev.seq) {
                continue;
            }
            debug_assert!(ev.fire_at >= self.now);
            self.now = ev.fire_at;
            return Some((ev.fire_at, ev));
        }
        None
    }
}

impl Default for EventQueue {
    fn default() -> Self {
        Self::new()
    }
}
