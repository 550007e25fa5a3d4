//! One full simulation run: network, moving entities, trace tables, agents,
//! routing messages and metric sampling, all driven by the event engine.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agent::{gradient_step, AgentMode, AgentState, NodeMarks, StepDecision};
use crate::config::{ConfigError, RoutingStrategy, SimConfig};
use crate::geom::{place_nodes, Network, Point};
use crate::mobility::{leg_detections, EntityRole, MobileEntity};
use crate::sim::{Engine, EventHandle};
use crate::spreading::{deliver, spread};
use crate::trace::{TargetId, TraceKind, MAX_INTENSITY, SINK_TARGET};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
}

/// The target being tracked. A single tracked target is simulated; the sink
/// deposits under its own reserved id.
pub const TRACKED: TargetId = TargetId(0);

#[derive(Debug, Clone)]
pub enum EventKind {
    TargetWaypointArrival,
    SinkWaypointArrival,
    Detection { node: usize, target: TargetId },
    SpreadForward { node: usize, target: TargetId },
    AgentStep { agent: usize },
    MetricSample,
    TraceSnapshot,
    RouteHop { msg: usize },
}

impl EventKind {
    fn tag(&self) -> &'static str {
        match self {
            EventKind::TargetWaypointArrival => "target-waypoint",
            EventKind::SinkWaypointArrival => "sink-waypoint",
            EventKind::Detection { .. } => "detection",
            EventKind::SpreadForward { .. } => "spread-forward",
            EventKind::AgentStep { .. } => "agent-step",
            EventKind::MetricSample => "metric-sample",
            EventKind::TraceSnapshot => "trace-snapshot",
            EventKind::RouteHop { .. } => "route-hop",
        }
    }
}

/// One per-second sample of the tracking state.
#[derive(Debug, Clone)]
pub struct MetricRow {
    pub time: f64,
    pub n_best: Option<usize>,
    pub n_best_estimation: Option<usize>,
    pub distance: Option<f64>,
    pub localized: bool,
    pub msgs_spread: u64,
    pub msgs_agent: u64,
    pub msgs_routing: u64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRow {
    pub time: f64,
    pub agent: usize,
    pub node: usize,
    pub mode: AgentMode,
    pub observed_intensity: f64,
}

#[derive(Debug, Clone)]
pub struct SpreadTreeEdge {
    pub child: usize,
    pub parent: usize,
    pub target: TargetId,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct DeliveryRow {
    /// Index of the routed message, in spawn order.
    pub msg: usize,
    pub send_time: f64,
    pub deliver_time: Option<f64>,
    pub hops: usize,
    pub strategy: RoutingStrategy,
    pub success: bool,
}

#[derive(Debug, Clone)]
pub struct SnapshotRow {
    pub time: f64,
    pub node: usize,
    pub target: TargetId,
    pub kind: TraceKind,
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutePhase {
    Geographic,
    Tracking,
}

/// One executed hop of a routed result message.
#[derive(Debug, Clone, Copy)]
pub struct RouteHopRow {
    pub msg: usize,
    pub phase: RoutePhase,
    pub from: usize,
    pub to: usize,
    /// Distance from `from` to the message's initiation point.
    pub dist_before: f64,
    /// Distance from `to` to the message's initiation point.
    pub dist_after: f64,
}

#[derive(Debug, Clone)]
struct RouteMsg {
    strategy: RoutingStrategy,
    current: usize,
    prev: Option<usize>,
    origin: Point,
    hops: usize,
    send_time: f64,
    phase: RoutePhase,
    visited: HashSet<usize>,
    bad: HashSet<usize>,
    done: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MsgCounters {
    pub spread: u64,
    pub agent: u64,
    pub routing: u64,
}

impl MsgCounters {
    pub fn total(&self) -> u64 {
        self.spread + self.agent + self.routing
    }
}

pub struct World {
    pub cfg: SimConfig,
    pub network: Network,
    rng: ChaCha8Rng,
    engine: Engine<EventKind>,
    tables: Vec<crate::trace::TraceTable>,
    marks: Vec<NodeMarks>,
    pending_forward: Vec<HashMap<TargetId, EventHandle>>,
    target: MobileEntity,
    sink: Option<MobileEntity>,
    pub agents: Vec<AgentState>,
    last_detection: Option<(f64, usize)>,
    route_msgs: Vec<RouteMsg>,
    agent_was_localized: Vec<bool>,
    pub counters: MsgCounters,
    pub rows: Vec<MetricRow>,
    pub trajectory: Vec<TrajectoryRow>,
    pub spread_edges: Vec<SpreadTreeEdge>,
    pub deliveries: Vec<DeliveryRow>,
    pub route_hops: Vec<RouteHopRow>,
    pub snapshots: Vec<SnapshotRow>,
    /// (parent intensity at spread time, child start intensity) per stored spread.
    pub spread_audit: Vec<(f64, f64)>,
    /// (time, seq, tag) per executed event, when enabled.
    pub event_log: Option<Vec<(f64, u64, &'static str)>>,
}

impl World {
    pub fn new(cfg: SimConfig) -> Result<Self, WorldError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let side = cfg.side();
        let positions = place_nodes(cfg.n, side, &mut rng)?;
        let network = Network::build(positions, cfg.d_trx, side)?;

        let target_start = Point::new(rng.gen_range(0.0..=side), rng.gen_range(0.0..=side));
        let target = MobileEntity::new(
            EntityRole::Target,
            target_start,
            cfg.target_speed_mps(),
            0.0,
        );

        let sink = if cfg.routing != RoutingStrategy::Off {
            let p = Point::new(rng.gen_range(0.0..=side), rng.gen_range(0.0..=side));
            Some(MobileEntity::new(
                EntityRole::Sink,
                p,
                cfg.sink_speed_mps(),
                0.0,
            ))
        } else {
            None
        };

        let origin = rng.gen_range(0..cfg.n);
        let agents = (0..cfg.agent_count)
            .map(|i| AgentState::new(i, TRACKED, origin))
            .collect();

        let n = cfg.n;
        let agent_count = cfg.agent_count;
        let mut world = Self {
            cfg,
            network,
            rng,
            engine: Engine::new(),
            tables: vec![crate::trace::TraceTable::default(); n],
            marks: vec![NodeMarks::default(); n],
            pending_forward: vec![HashMap::new(); n],
            target,
            sink,
            agents,
            last_detection: None,
            route_msgs: Vec::new(),
            agent_was_localized: vec![false; agent_count],
            counters: MsgCounters::default(),
            rows: Vec::new(),
            trajectory: Vec::new(),
            spread_edges: Vec::new(),
            deliveries: Vec::new(),
            route_hops: Vec::new(),
            snapshots: Vec::new(),
            spread_audit: Vec::new(),
            event_log: None,
        };
        world.schedule_initial_events();
        Ok(world)
    }

    pub fn enable_event_log(&mut self) {
        self.event_log = Some(Vec::new());
    }

    pub fn schedule_snapshots(&mut self, times: &[f64]) {
        for &t in times {
            if t >= 0.0 {
                self.engine.schedule(t, EventKind::TraceSnapshot).unwrap();
            }
        }
    }

    fn schedule_initial_events(&mut self) {
        self.engine
            .schedule(0.0, EventKind::TargetWaypointArrival)
            .unwrap();
        if self.sink.is_some() {
            self.engine
                .schedule(0.0, EventKind::SinkWaypointArrival)
                .unwrap();
        }
        for i in 0..self.agents.len() {
            self.engine
                .schedule(self.cfg.propagation_period, EventKind::AgentStep { agent: i })
                .unwrap();
        }
        self.engine.schedule(1.0, EventKind::MetricSample).unwrap();
    }

    /// Runs the simulation to cfg.t_end; returns the executed-event count.
    pub fn run(&mut self) -> u64 {
        self.run_until(self.cfg.t_end)
    }

    /// Runs the simulation up to `t_end` (capped at cfg.t_end); can be called
    /// repeatedly with increasing horizons to inspect or perturb mid-run
    /// state.
    pub fn run_until(&mut self, t_end: f64) -> u64 {
        let t_end = t_end.min(self.cfg.t_end);
        let mut executed = 0;
        while let Some(fired) = self.engine.pop_due(t_end) {
            if let Some(log) = &mut self.event_log {
                log.push((fired.time, fired.seq, fired.payload.tag()));
            }
            self.dispatch(fired.time, fired.seq, fired.payload);
            executed += 1;
        }
        self.engine.advance_clock(t_end);
        executed
    }

    /// Moves the sink to `p` (no-op without a sink). Useful before the run
    /// starts: a randomly placed stationary sink may sit outside every
    /// sensing range and then never deposits a trace.
    pub fn place_sink_at(&mut self, p: Point) {
        if let Some(sink) = &mut self.sink {
            *sink = MobileEntity::new(EntityRole::Sink, p, sink.speed_mps, self.engine.now());
        }
    }

    /// Starts a routed result message at `at`, as if an agent that set out
    /// from `origin` had just localized the target there. Intended for
    /// routing experiments that need a message at a chosen time and node;
    /// returns the message index deliveries are tagged with.
    pub fn inject_result_message(&mut self, at: usize, origin: Point) -> usize {
        let t = self.now();
        let idx = self.route_msgs.len();
        self.spawn_result_message(t, at, origin);
        idx
    }

    fn dispatch(&mut self, t: f64, _seq: u64, kind: EventKind) {
        match kind {
            EventKind::TargetWaypointArrival => self.on_target_waypoint(t),
            EventKind::SinkWaypointArrival => self.on_sink_waypoint(t),
            EventKind::Detection { node, target } => self.on_detection(t, node, target),
            EventKind::SpreadForward { node, target } => self.on_spread_forward(t, node, target),
            EventKind::AgentStep { agent } => self.on_agent_step(t, agent),
            EventKind::MetricSample => self.on_metric_sample(t),
            EventKind::TraceSnapshot => self.on_trace_snapshot(t),
            EventKind::RouteHop { msg } => self.on_route_hop(t, msg),
        }
    }

    fn on_target_waypoint(&mut self, t: f64) {
        let leg = self.target.next_leg(&mut self.rng, self.cfg.side(), t);
        for (node, det_t) in leg_detections(&leg, &self.network, self.cfg.d_dtx) {
            self.engine
                .schedule(
                    det_t,
                    EventKind::Detection {
                        node,
                        target: TRACKED,
                    },
                )
                .unwrap();
        }
        self.engine
            .schedule(leg.t1, EventKind::TargetWaypointArrival)
            .unwrap();
    }

    fn on_sink_waypoint(&mut self, t: f64) {
        let Some(sink) = &mut self.sink else { return };
        if sink.speed_mps > 0.0 {
            let leg = sink.next_leg(&mut self.rng, self.cfg.side(), t);
            for (node, det_t) in leg_detections(&leg, &self.network, self.cfg.d_dtx) {
                self.engine
                    .schedule(
                        det_t,
                        EventKind::Detection {
                            node,
                            target: SINK_TARGET,
                        },
                    )
                    .unwrap();
            }
            self.engine
                .schedule(leg.t1, EventKind::SinkWaypointArrival)
                .unwrap();
        } else {
            // stationary sink: refresh deposition once per period
            let pos = sink.leg.b;
            for (node, p) in self.network.positions.iter().enumerate() {
                if p.dist(&pos) <= self.cfg.d_dtx {
                    self.engine
                        .schedule(
                            t,
                            EventKind::Detection {
                                node,
                                target: SINK_TARGET,
                            },
                        )
                        .unwrap();
                }
            }
            self.engine
                .schedule(t + self.cfg.propagation_period, EventKind::SinkWaypointArrival)
                .unwrap();
        }
    }

    fn on_detection(&mut self, t: f64, node: usize, target: TargetId) {
        self.tables[node].record_detection(target, t);
        if let Some(handle) = self.pending_forward[node].remove(&target) {
            self.engine.cancel(handle);
        }
        let handle = self
            .engine
            .schedule(
                t + self.cfg.propagation_period,
                EventKind::SpreadForward { node, target },
            )
            .unwrap();
        self.pending_forward[node].insert(target, handle);
        if target == TRACKED {
            self.last_detection = Some((t, node));
        }
    }

    fn on_spread_forward(&mut self, t: f64, node: usize, target: TargetId) {
        self.pending_forward[node].remove(&target);
        let msgs = spread(
            &self.network,
            &mut self.tables,
            node,
            target,
            t,
            self.cfg.spreading_penalty,
            self.cfg.decay_rate,
            self.cfg.inhibition,
            &mut self.rng,
        );
        self.counters.spread += msgs.len() as u64;
        if msgs.is_empty() {
            return;
        }
        let parent_intensity = self.tables[node]
            .get(target)
            .map(|tr| tr.intensity_at(t, self.cfg.decay_rate))
            .unwrap_or(0.0);
        for msg in &msgs {
            if deliver(&mut self.tables, msg, self.cfg.decay_rate) {
                self.spread_audit
                    .push((parent_intensity, msg.carried_intensity));
                self.spread_edges.push(SpreadTreeEdge {
                    child: msg.dest,
                    parent: node,
                    target,
                    time: t,
                });
                if let Some(handle) = self.pending_forward[msg.dest].remove(&target) {
                    self.engine.cancel(handle);
                }
                let handle = self
                    .engine
                    .schedule(
                        t + self.cfg.propagation_period,
                        EventKind::SpreadForward {
                            node: msg.dest,
                            target,
                        },
                    )
                    .unwrap();
                self.pending_forward[msg.dest].insert(target, handle);
            }
        }
    }

    fn freshness_threshold(&self) -> f64 {
        MAX_INTENSITY - self.cfg.propagation_period * self.cfg.decay_rate
    }

    fn on_agent_step(&mut self, t: f64, idx: usize) {
        let mut ag = self.agents[idx].clone();
        let neighbors = self.network.neighbors(ag.current).len() as u64;
        self.counters.agent += 2 * neighbors;

        let decay = self.cfg.decay_rate;
        let threshold = self.freshness_threshold();
        let decision = {
            let tables = &mut self.tables;
            let marks = &self.marks;
            let target = ag.target_id;
            gradient_step(
                &self.network,
                ag.current,
                ag.prev,
                |m| tables[m].live_intensity(target, t, decay),
                |m| marks[m].bad_live(target, t),
                |m| marks[m].visited_live(t),
                threshold,
                &mut self.rng,
            )
        };
        match decision {
            StepDecision::Stay => {}
            StepDecision::Climb(m) => {
                ag.mode = AgentMode::Climbing;
                ag.prev = Some(ag.current);
                ag.current = m;
            }
            StepDecision::Backtrack {
                to,
                mark_current_bad,
            } => {
                if mark_current_bad {
                    self.marks[ag.current].set_bad(ag.target_id, t, self.cfg.bad_mark_lifetime);
                }
                ag.mode = AgentMode::Backtracking;
                ag.prev = Some(ag.current);
                ag.current = to;
            }
            StepDecision::RandomWalk(m) => {
                self.marks[ag.current].set_visited(t, self.cfg.visited_mark_lifetime);
                ag.mode = AgentMode::RandomWalk;
                ag.prev = Some(ag.current);
                ag.current = m;
            }
        }

        let obs = self.tables[ag.current].live_intensity(ag.target_id, t, decay);
        ag.observe(ag.current, obs, t);
        self.trajectory.push(TrajectoryRow {
            time: t,
            agent: idx,
            node: ag.current,
            mode: ag.mode,
            observed_intensity: obs,
        });

        // a localization transition triggers a result message toward the sink
        let localized_now = match (&ag.best, self.last_detection) {
            (Some(best), Some((_, n_best))) => best.node == n_best,
            _ => false,
        };
        let origin_point = self.network.positions[ag.origin];
        let current = ag.current;
        self.agents[idx] = ag;
        if localized_now && !self.agent_was_localized[idx] && self.sink.is_some() {
            self.spawn_result_message(t, current, origin_point);
        }
        self.agent_was_localized[idx] = localized_now;

        self.engine
            .schedule(
                t + self.cfg.propagation_period,
                EventKind::AgentStep { agent: idx },
            )
            .unwrap();
    }

    fn spawn_result_message(&mut self, t: f64, at: usize, origin: Point) {
        let idx = self.route_msgs.len();
        self.route_msgs.push(RouteMsg {
            strategy: self.cfg.routing,
            current: at,
            prev: None,
            origin,
            hops: 0,
            send_time: t,
            phase: match self.cfg.routing {
                RoutingStrategy::Hybrid => RoutePhase::Geographic,
                _ => RoutePhase::Tracking,
            },
            visited: HashSet::new(),
            bad: HashSet::new(),
            done: false,
        });
        self.engine
            .schedule(t, EventKind::RouteHop { msg: idx })
            .unwrap();
    }

    fn sink_position(&self, t: f64) -> Option<Point> {
        let sink = self.sink.as_ref()?;
        let leg = sink.leg;
        if t >= leg.t1 {
            Some(leg.b)
        } else {
            leg.position_at(t).ok()
        }
    }

    fn on_route_hop(&mut self, t: f64, idx: usize) {
        let mut msg = self.route_msgs[idx].clone();
        if msg.done {
            return;
        }
        let Some(sink_pos) = self.sink_position(t) else {
            return;
        };

        if self.network.positions[msg.current].dist(&sink_pos) <= self.cfg.d_trx {
            self.deliveries.push(DeliveryRow {
                msg: idx,
                send_time: msg.send_time,
                deliver_time: Some(t),
                hops: msg.hops,
                strategy: msg.strategy,
                success: true,
            });
            msg.done = true;
            self.route_msgs[idx] = msg;
            return;
        }
        if msg.hops >= self.cfg.effective_ttl() {
            self.deliveries.push(DeliveryRow {
                msg: idx,
                send_time: msg.send_time,
                deliver_time: None,
                hops: msg.hops,
                strategy: msg.strategy,
                success: false,
            });
            msg.done = true;
            self.route_msgs[idx] = msg;
            return;
        }

        let hop_from = msg.current;
        if msg.phase == RoutePhase::Geographic {
            // greedy geographic hop toward the agent's initiation point
            let cur_d = self.network.positions[msg.current].dist(&msg.origin);
            let mut best: Option<(usize, f64)> = None;
            for &m in self.network.neighbors(msg.current) {
                let d = self.network.positions[m].dist(&msg.origin);
                if d < cur_d && best.map(|(_, bd)| d < bd).unwrap_or(true) {
                    best = Some((m, d));
                }
            }
            match best {
                Some((m, _)) => {
                    self.counters.routing += 1;
                    msg.prev = Some(msg.current);
                    msg.current = m;
                    msg.hops += 1;
                }
                None => {
                    // no strictly closer neighbor: switch to inverted tracking
                    msg.phase = RoutePhase::Tracking;
                }
            }
        }
        if msg.phase == RoutePhase::Tracking {
            self.counters.routing += 2 * self.network.neighbors(msg.current).len() as u64;
            let decay = self.cfg.decay_rate;
            let threshold = self.freshness_threshold();
            let decision = {
                let tables = &mut self.tables;
                let bad = &msg.bad;
                let visited = &msg.visited;
                gradient_step(
                    &self.network,
                    msg.current,
                    msg.prev,
                    |m| tables[m].live_intensity(SINK_TARGET, t, decay),
                    |m| bad.contains(&m),
                    |m| visited.contains(&m),
                    threshold,
                    &mut self.rng,
                )
            };
            match decision {
                StepDecision::Stay => {
                    msg.hops += 1; // burn TTL instead of waiting forever
                }
                StepDecision::Climb(m) => {
                    self.counters.routing += 1;
                    msg.prev = Some(msg.current);
                    msg.current = m;
                    msg.hops += 1;
                }
                StepDecision::Backtrack {
                    to,
                    mark_current_bad,
                } => {
                    if mark_current_bad {
                        msg.bad.insert(msg.current);
                    }
                    self.counters.routing += 1;
                    msg.prev = Some(msg.current);
                    msg.current = to;
                    msg.hops += 1;
                }
                StepDecision::RandomWalk(m) => {
                    msg.visited.insert(msg.current);
                    self.counters.routing += 1;
                    msg.prev = Some(msg.current);
                    msg.current = m;
                    msg.hops += 1;
                }
            }
        }
        if msg.current != hop_from {
            self.route_hops.push(RouteHopRow {
                msg: idx,
                phase: msg.phase,
                from: hop_from,
                to: msg.current,
                dist_before: self.network.positions[hop_from].dist(&msg.origin),
                dist_after: self.network.positions[msg.current].dist(&msg.origin),
            });
        }
        self.route_msgs[idx] = msg;
        self.engine
            .schedule(t + self.cfg.propagation_period, EventKind::RouteHop { msg: idx })
            .unwrap();
    }

    /// Best estimation across agents: highest observed intensity, most
    /// recent on ties.
    pub fn best_estimation(&self) -> Option<(usize, f64, f64)> {
        self.agents
            .iter()
            .filter_map(|a| a.best.as_ref())
            .map(|b| (b.node, b.intensity, b.time))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)))
    }

    pub fn n_best(&self) -> Option<usize> {
        self.last_detection.map(|(_, node)| node)
    }

    fn on_metric_sample(&mut self, t: f64) {
        let n_best = self.n_best();
        let best_est = self.best_estimation().map(|(node, _, _)| node);
        let (distance, localized) = match (n_best, best_est) {
            (Some(a), Some(b)) => {
                let d = self.network.positions[a].dist(&self.network.positions[b]);
                (Some(d), a == b)
            }
            _ => (None, false),
        };
        self.rows.push(MetricRow {
            time: t,
            n_best,
            n_best_estimation: best_est,
            distance,
            localized,
            msgs_spread: self.counters.spread,
            msgs_agent: self.counters.agent,
            msgs_routing: self.counters.routing,
        });
        self.engine
            .schedule(t + 1.0, EventKind::MetricSample)
            .unwrap();
    }

    fn on_trace_snapshot(&mut self, t: f64) {
        for (node, table) in self.tables.iter().enumerate() {
            for tr in table.iter() {
                self.snapshots.push(SnapshotRow {
                    time: t,
                    node,
                    target: tr.target_id,
                    kind: tr.kind,
                    intensity: tr.intensity_at(t, self.cfg.decay_rate),
                });
            }
        }
    }

    /// Live traces at the current clock, for gradient-walk checks.
    pub fn trace_view(&self) -> Vec<(usize, crate::trace::Trace)> {
        let t = self.engine.now();
        let mut out = Vec::new();
        for (node, table) in self.tables.iter().enumerate() {
            for tr in table.iter() {
                if tr.intensity_at(t, self.cfg.decay_rate) > 0.0 {
                    out.push((node, tr.clone()));
                }
            }
        }
        out
    }

    pub fn now(&self) -> f64 {
        self.engine.now()
    }
}
