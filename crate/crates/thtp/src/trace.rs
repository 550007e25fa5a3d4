//! Per-node trace tables: decaying intensity records of target presence.

use crate::geom::Point;

pub const MAX_INTENSITY: f64 = 300.0;

/// Identifies whose presence a trace records. Targets are numbered from 0;
/// the sink uses a reserved id so routing reuses the same machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TargetId(pub u32);

pub const SINK_TARGET: TargetId = TargetId(u32::MAX);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Initial,
    Spread,
}

/// One pheromone record. INITIAL traces come from direct detection and start
/// at MAX_INTENSITY with an empty path; SPREAD traces carry the last two
/// hops of the propagation path (older entry first).
#[derive(Debug, Clone)]
pub struct Trace {
    pub kind: TraceKind,
    pub start_time: f64,
    pub start_intensity: f64,
    pub path: Vec<(usize, Point)>,
    pub target_id: TargetId,
}

impl Trace {
    pub fn initial(target_id: TargetId, t: f64) -> Self {
        Self {
            kind: TraceKind::Initial,
            start_time: t,
            start_intensity: MAX_INTENSITY,
            path: Vec::new(),
            target_id,
        }
    }

    /// Intensity decays linearly at `decay_rate` units per second:
    /// max(0, start_intensity - (t - start_time) * decay_rate).
    pub fn intensity_at(&self, t: f64, decay_rate: f64) -> f64 {
        debug_assert!(t >= self.start_time, "intensity queried before start");
        (self.start_intensity - (t - self.start_time) * decay_rate).max(0.0)
    }
}

/// At most one trace per target id per node.
#[derive(Debug, Clone, Default)]
pub struct TraceTable {
    entries: Vec<Trace>,
}

impl TraceTable {
    pub fn get(&self, target_id: TargetId) -> Option<&Trace> {
        self.entries.iter().find(|t| t.target_id == target_id)
    }

    pub fn insert(&mut self, trace: Trace) {
        self.entries.retain(|t| t.target_id != trace.target_id);
        self.entries.push(trace);
    }

    pub fn remove(&mut self, target_id: TargetId) {
        self.entries.retain(|t| t.target_id != target_id);
    }

    /// Drops the trace if its intensity has reached 0; returns whether a
    /// removal happened. Called lazily on every read or spread that touches
    /// the trace.
    pub fn expire_check(&mut self, target_id: TargetId, t: f64, decay_rate: f64) -> bool {
        if let Some(tr) = self.get(target_id) {
            if tr.intensity_at(t, decay_rate) <= 0.0 {
                self.remove(target_id);
                return true;
            }
        }
        false
    }

    /// Live intensity for a target at time t, 0 when absent or expired.
    pub fn live_intensity(&mut self, target_id: TargetId, t: f64, decay_rate: f64) -> f64 {
        self.expire_check(target_id, t, decay_rate);
        self.get(target_id)
            .map(|tr| tr.intensity_at(t, decay_rate))
            .unwrap_or(0.0)
    }

    /// Detection refresh: any existing trace for the target is replaced by a
    /// fresh INITIAL trace at MAX_INTENSITY.
    pub fn record_detection(&mut self, target_id: TargetId, t: f64) -> &Trace {
        self.insert(Trace::initial(target_id, t));
        self.entries.last().unwrap()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trace> {
        self.entries.iter()
    }
}
