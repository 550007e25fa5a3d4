//! The repulsion-point degree-2 spreading heuristic with penalty and
//! inhibition.
//!
//! A node forwards a stored trace once, one propagation period after storing
//! it, to at most two neighbors drawn from the subset farther from the
//! repulsion point than the node itself. The forwarded intensity drops by
//! the spreading penalty, so stored intensities form a gradient pointing
//! back to the detection origin.

use rand::Rng;

use crate::config::InhibitionPolicy;
use crate::geom::{Network, Point};
use crate::sim::Engine;
use crate::trace::{Trace, TraceKind, TraceTable, TargetId, MAX_INTENSITY};

/// One spreading transmission from a host to a selected neighbor.
#[derive(Debug, Clone)]
pub struct SpreadMessage {
    pub dest: usize,
    pub target_id: TargetId,
    pub carried_intensity: f64,
    /// Last two hops of the propagation path ending at the sender
    /// (older entry first).
    pub path: Vec<(usize, Point)>,
    pub send_time: f64,
}

/// Grand-parent when the path holds two hops, parent when it holds one,
/// the host itself for INITIAL traces.
pub fn repulsion_point(trace: &Trace, host_pos: Point) -> Point {
    match trace.path.len() {
        0 => host_pos,
        1 => trace.path[0].1,
        _ => trace.path[0].1,
    }
}

/// Neighbors of the host strictly farther from the repulsion point than the
/// host itself.
pub fn v_rep(network: &Network, host: usize, rp: Point) -> Vec<usize> {
    let host_dist = network.positions[host].dist(&rp);
    network
        .neighbors(host)
        .iter()
        .copied()
        .filter(|&m| network.positions[m].dist(&rp) > host_dist)
        .collect()
}

/// Picks the spread targets out of the repulsion set: the deterministic
/// choice is the member farthest from the repulsion point (ties to the
/// lowest id), the second is uniform over the rest.
pub fn select_spread_targets(
    network: &Network,
    candidates: &[usize],
    rp: Point,
    rng: &mut impl Rng,
) -> Vec<usize> {
    match candidates.len() {
        0 => Vec::new(),
        1 => vec![candidates[0]],
        _ => {
            let mut far = candidates[0];
            let mut far_d = network.positions[far].dist(&rp);
            for &m in &candidates[1..] {
                let d = network.positions[m].dist(&rp);
                if d > far_d || (d == far_d && m < far) {
                    far = m;
                    far_d = d;
                }
            }
            let rest: Vec<usize> = candidates.iter().copied().filter(|&m| m != far).collect();
            let random = rest[rng.gen_range(0..rest.len())];
            vec![far, random]
        }
    }
}

/// Removes repulsion-set members whose branch is already covered, so the
/// spread never grows toward a part of the network another branch reached.
/// Inhibiting a member means skipping it, not cancelling the whole forward:
/// the remaining members still receive the trace.
fn apply_inhibition(
    tables: &mut [TraceTable],
    candidates: Vec<usize>,
    target_id: TargetId,
    carried: f64,
    t: f64,
    decay_rate: f64,
    policy: InhibitionPolicy,
) -> Vec<usize> {
    match policy {
        InhibitionPolicy::Off => candidates,
        InhibitionPolicy::AnyTrace => candidates
            .into_iter()
            .filter(|&m| tables[m].live_intensity(target_id, t, decay_rate) <= 0.0)
            .collect(),
        InhibitionPolicy::IntensityAware => candidates
            .into_iter()
            .filter(|&m| tables[m].live_intensity(target_id, t, decay_rate) < carried)
            .collect(),
    }
}

/// Executes one scheduled forward from `host`: returns the messages to
/// deliver (possibly none when the trace died, the penalty exhausts the
/// intensity, or every repulsion-set member is missing or inhibited).
#[allow(clippy::too_many_arguments)]
pub fn spread(
    network: &Network,
    tables: &mut [TraceTable],
    host: usize,
    target_id: TargetId,
    t: f64,
    penalty: f64,
    decay_rate: f64,
    policy: InhibitionPolicy,
    rng: &mut impl Rng,
) -> Vec<SpreadMessage> {
    if tables[host].expire_check(target_id, t, decay_rate) {
        return Vec::new();
    }
    let Some(trace) = tables[host].get(target_id) else {
        return Vec::new();
    };
    let carried = trace.intensity_at(t, decay_rate) - penalty;
    if carried <= 0.0 {
        return Vec::new();
    }
    let rp = repulsion_point(trace, network.positions[host]);
    // child path: host's parent (if any) followed by host
    let mut path: Vec<(usize, Point)> = Vec::with_capacity(2);
    if let Some(&last) = trace.path.last() {
        path.push(last);
    }
    path.push((host, network.positions[host]));

    let candidates = v_rep(network, host, rp);
    let candidates =
        apply_inhibition(tables, candidates, target_id, carried, t, decay_rate, policy);
    if candidates.is_empty() {
        return Vec::new();
    }
    select_spread_targets(network, &candidates, rp, rng)
        .into_iter()
        .map(|dest| SpreadMessage {
            dest,
            target_id,
            carried_intensity: carried,
            path: path.clone(),
            send_time: t,
        })
        .collect()
}

/// Delivery at the receiving node: stores a SPREAD trace only when no live
/// trace for the target exists; returns whether it was stored (in which case
/// the receiver owes its own forward one period later).
pub fn deliver(tables: &mut [TraceTable], msg: &SpreadMessage, decay_rate: f64) -> bool {
    let table = &mut tables[msg.dest];
    table.expire_check(msg.target_id, msg.send_time, decay_rate);
    if table.get(msg.target_id).is_some() {
        return false;
    }
    table.insert(Trace {
        kind: TraceKind::Spread,
        start_time: msg.send_time,
        start_intensity: msg.carried_intensity,
        path: msg.path.clone(),
        target_id: msg.target_id,
    });
    true
}

/// Outcome of a standalone spread-to-quiescence run.
#[derive(Debug, Clone)]
pub struct CoverageStats {
    pub reached: usize,
    pub messages: usize,
    /// "child parent" pairs with store time, for spread-tree export.
    pub tree_edges: Vec<(usize, usize, f64)>,
    /// How many forwards each node performed for the trace.
    pub forwards_per_node: Vec<usize>,
}

/// Static network, one INITIAL trace at `origin`, no motion: run the spread
/// until no events remain; counts nodes reached and messages sent.
pub fn spread_coverage_run(
    network: &Network,
    origin: usize,
    propagation_period: f64,
    penalty: f64,
    decay_rate: f64,
    policy: InhibitionPolicy,
    rng: &mut impl Rng,
) -> CoverageStats {
    let mut tables = vec![TraceTable::default(); network.len()];
    tables[origin].record_detection(TargetId(0), 0.0);

    let mut engine: Engine<usize> = Engine::new();
    engine.schedule(propagation_period, origin).unwrap();

    let mut messages = 0usize;
    let mut tree_edges = Vec::new();
    let mut forwards_per_node = vec![0usize; network.len()];

    // bounded: intensity drops by penalty + period*decay per generation
    engine
        .run_until(f64::MAX / 2.0, |engine, fired| {
            let host = fired.payload;
            let out = spread(
                network,
                &mut tables,
                host,
                TargetId(0),
                fired.time,
                penalty,
                decay_rate,
                policy,
                rng,
            );
            messages += out.len();
            if !out.is_empty() {
                forwards_per_node[host] += out.len();
            }
            for msg in &out {
                if deliver(&mut tables, msg, decay_rate) {
                    tree_edges.push((msg.dest, host, fired.time));
                    engine
                        .schedule(fired.time + propagation_period, msg.dest)
                        .unwrap();
                }
            }
        })
        .unwrap();

    let reached = 1 + tree_edges.len();
    CoverageStats {
        reached,
        messages,
        tree_edges,
        forwards_per_node,
    }
}

/// Upper bound every first-hop spread must satisfy: INITIAL traces start at
/// MAX_INTENSITY, so children never exceed MAX_INTENSITY - penalty.
pub fn max_child_intensity(penalty: f64) -> f64 {
    MAX_INTENSITY - penalty
}
