//! Continuous-time discrete-event engine.
//!
//! Events live on an ordered queue and execute in nondecreasing (time, seq)
//! order. Executing an event may schedule further events at or after its own
//! time. Equal times are broken by insertion sequence number so a run is a
//! total order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event scheduled in the past: t={time} < now={now}")]
    SchedulePast { time: f64, now: f64 },
    #[error("run_until target {t_end} is before current clock {now}")]
    RunBackward { t_end: f64, now: f64 },
}

/// Opaque handle returned by [`Engine::schedule`], usable for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

impl EventHandle {
    pub fn seq(self) -> u64 {
        self.0
    }
}

struct Entry<T> {
    time: f64,
    seq: u64,
    payload: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl<T> Eq for Entry<T> {}

impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the earliest event on top.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An event popped from the queue, ready to execute.
#[derive(Debug, Clone, PartialEq)]
pub struct Fired<T> {
    pub time: f64,
    pub seq: u64,
    pub payload: T,
}

/// The scheduled-events queue plus the simulation clock.
pub struct Engine<T> {
    heap: BinaryHeap<Entry<T>>,
    pending: HashSet<u64>,
    next_seq: u64,
    now: f64,
}

impl<T> Default for Engine<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> Engine<T> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            pending: HashSet::new(),
            next_seq: 0,
            now: 0.0,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn schedule(&mut self, time: f64, payload: T) -> Result<EventHandle, SimError> {
        if time < self.now {
            return Err(SimError::SchedulePast {
                time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { time, seq, payload });
        self.pending.insert(seq);
        Ok(EventHandle(seq))
    }

    /// Removes a pending event. Returns false if it already executed or was
    /// cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.pending.remove(&handle.0)
    }

    /// Advances the clock without executing anything (no-op backwards).
    pub fn advance_clock(&mut self, t: f64) {
        if t > self.now {
            self.now = t;
        }
    }

    /// Pops the next event with time ≤ t_end and advances the clock to it.
    /// Cancelled entries are skipped. Returns None when nothing is due.
    pub fn pop_due(&mut self, t_end: f64) -> Option<Fired<T>> {
        while let Some(top) = self.heap.peek() {
            if top.time > t_end {
                return None;
            }
            let entry = self.heap.pop().unwrap();
            if !self.pending.remove(&entry.seq) {
                continue; // cancelled
            }
            self.now = entry.time;
            return Some(Fired {
                time: entry.time,
                seq: entry.seq,
                payload: entry.payload,
            });
        }
        None
    }

    /// Executes every due event through `handler` (which may schedule more),
    /// then advances the clock to t_end. Returns the executed-event count.
    pub fn run_until(
        &mut self,
        t_end: f64,
        mut handler: impl FnMut(&mut Self, Fired<T>),
    ) -> Result<u64, SimError> {
        if t_end < self.now {
            return Err(SimError::RunBackward {
                t_end,
                now: self.now,
            });
        }
        let mut executed = 0;
        while let Some(fired) = self.pop_due(t_end) {
            handler(self, fired);
            executed += 1;
        }
        self.now = t_end;
        Ok(executed)
    }
}
