//! The tracking agent: greedy gradient climbing over neighbor trace
//! intensities, partial self-avoiding random walk while no trace is in
//! sight, and bad-node marks for escaping stale local maxima.
//!
//! The same step policy drives inverted-tracking routing, so it is exposed
//! as a pure decision function over intensity/mark accessors.

use rand::Rng;

use crate::geom::Network;
use crate::trace::TargetId;

/// A timed inhibitory mark dropped on a node; vanishes after its lifetime.
#[derive(Debug, Clone, Copy)]
pub struct Mark {
    pub placed_at: f64,
    pub lifetime: f64,
}

impl Mark {
    pub fn live(&self, t: f64) -> bool {
        t < self.placed_at + self.lifetime
    }
}

/// Per-node agent bookkeeping: one shared visited mark, bad marks per
/// target (all agents honor all marks).
#[derive(Debug, Clone, Default)]
pub struct NodeMarks {
    visited: Option<Mark>,
    bad: Vec<(TargetId, Mark)>,
}

impl NodeMarks {
    pub fn visited_live(&self, t: f64) -> bool {
        self.visited.map(|m| m.live(t)).unwrap_or(false)
    }

    pub fn bad_live(&self, target: TargetId, t: f64) -> bool {
        self.bad
            .iter()
            .any(|(id, m)| *id == target && m.live(t))
    }

    pub fn set_visited(&mut self, t: f64, lifetime: f64) {
        self.visited = Some(Mark {
            placed_at: t,
            lifetime,
        });
    }

    pub fn set_bad(&mut self, target: TargetId, t: f64, lifetime: f64) {
        self.bad.retain(|(id, _)| *id != target);
        self.bad.push((
            target,
            Mark {
                placed_at: t,
                lifetime,
            },
        ));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentMode {
    RandomWalk,
    Climbing,
    Backtracking,
}

impl AgentMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentMode::RandomWalk => "random-walk",
            AgentMode::Climbing => "climbing",
            AgentMode::Backtracking => "backtracking",
        }
    }
}

/// Highest-intensity observation an agent has made so far.
#[derive(Debug, Clone, Copy)]
pub struct BestEstimation {
    pub node: usize,
    pub intensity: f64,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: usize,
    pub target_id: TargetId,
    pub current: usize,
    pub prev: Option<usize>,
    pub origin: usize,
    pub best: Option<BestEstimation>,
    pub mode: AgentMode,
}

impl AgentState {
    pub fn new(id: usize, target_id: TargetId, origin: usize) -> Self {
        Self {
            id,
            target_id,
            current: origin,
            prev: None,
            origin,
            best: None,
            mode: AgentMode::RandomWalk,
        }
    }

    /// Max-update of the best estimation; equal intensities keep the more
    /// recent observation. Zero observations are never recorded.
    pub fn observe(&mut self, node: usize, intensity: f64, t: f64) {
        if intensity <= 0.0 {
            return;
        }
        let replace = match &self.best {
            None => true,
            Some(b) => intensity >= b.intensity,
        };
        if replace {
            self.best = Some(BestEstimation {
                node,
                intensity,
                time: t,
            });
        }
    }
}

/// Where a step sends the walker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDecision {
    Stay,
    /// Greedy move to the strictly-better neighbor.
    Climb(usize),
    /// Stale local maximum: mark the current node bad, go back.
    Backtrack { to: usize, mark_current_bad: bool },
    /// No gradient in sight: partial self-avoiding random walk.
    RandomWalk(usize),
}

/// One gradient step. `intensity` must return the live trace intensity for
/// the tracked id at the query time; `bad`/`visited` report live marks.
/// Nodes at or above `freshness_threshold` are the target's own
/// neighborhood and are never treated as cul-de-sacs.
#[allow(clippy::too_many_arguments)]
pub fn gradient_step(
    network: &Network,
    current: usize,
    prev: Option<usize>,
    mut intensity: impl FnMut(usize) -> f64,
    bad: impl Fn(usize) -> bool,
    visited: impl Fn(usize) -> bool,
    freshness_threshold: f64,
    rng: &mut impl Rng,
) -> StepDecision {
    let neighbors = network.neighbors(current);
    if neighbors.is_empty() {
        return StepDecision::Stay;
    }
    let considered: Vec<usize> = neighbors.iter().copied().filter(|&m| !bad(m)).collect();

    let cur_i = intensity(current);
    let mut best_nbr: Option<(usize, f64)> = None;
    let mut any_positive = cur_i > 0.0;
    for &m in &considered {
        let im = intensity(m);
        if im > 0.0 {
            any_positive = true;
        }
        // neighbors are sorted by id, so strict > keeps the lowest id on ties
        if best_nbr.map(|(_, b)| im > b).unwrap_or(true) {
            best_nbr = Some((m, im));
        }
    }

    if !any_positive {
        // random walk, preferring nodes without a live visited mark
        if considered.is_empty() {
            return StepDecision::Stay;
        }
        let unvisited: Vec<usize> = considered
            .iter()
            .copied()
            .filter(|&m| !visited(m))
            .collect();
        let pool = if unvisited.is_empty() {
            &considered
        } else {
            &unvisited
        };
        return StepDecision::RandomWalk(pool[rng.gen_range(0..pool.len())]);
    }

    if let Some((m, im)) = best_nbr {
        if im > cur_i {
            return StepDecision::Climb(m);
        }
    }

    // current is a local maximum with a positive trace
    if cur_i > 0.0 && cur_i < freshness_threshold {
        if let Some(p) = prev {
            return StepDecision::Backtrack {
                to: p,
                mark_current_bad: true,
            };
        }
        // first hop: nowhere to back into, walk away instead
        if !considered.is_empty() {
            return StepDecision::RandomWalk(considered[rng.gen_range(0..considered.len())]);
        }
        return StepDecision::Stay;
    }

    // fresh maximum: this is the target's own neighborhood, hold position
    StepDecision::Stay
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn star_network() -> Network {
        // node 0 at center, nodes 1..=4 around it
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(-10.0, 0.0),
            Point::new(0.0, 10.0),
            Point::new(0.0, -10.0),
        ];
        Network::build(pts, 12.0, 100.0).unwrap()
    }

    #[test]
    fn random_walk_uniform_over_unvisited() {
        let net = star_network();
        let mut seen = std::collections::HashSet::new();
        for seed in 0..64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match gradient_step(&net, 0, None, |_| 0.0, |_| false, |_| false, 299.0, &mut rng) {
                StepDecision::RandomWalk(m) => {
                    seen.insert(m);
                }
                other => panic!("expected random walk, got {other:?}"),
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn random_walk_avoids_visited_until_exhausted() {
        let net = star_network();
        let visited = |m: usize| m != 3; // only node 3 unvisited
        for seed in 0..16 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match gradient_step(&net, 0, None, |_| 0.0, |_| false, visited, 299.0, &mut rng) {
                StepDecision::RandomWalk(m) => assert_eq!(m, 3),
                other => panic!("unexpected {other:?}"),
            }
        }
        // all visited: any neighbor allowed
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        match gradient_step(&net, 0, None, |_| 0.0, |_| false, |_| true, 299.0, &mut rng) {
            StepDecision::RandomWalk(_) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn climbs_to_argmax_neighbor() {
        let net = star_network();
        let intensity = |m: usize| match m {
            0 => 120.0,
            1 => 140.0,
            2 => 90.0,
            _ => 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            gradient_step(&net, 0, None, intensity, |_| false, |_| false, 299.0, &mut rng),
            StepDecision::Climb(1)
        );
    }

    #[test]
    fn climb_ties_break_to_lowest_id() {
        let net = star_network();
        let intensity = |m: usize| if m == 0 { 10.0 } else { 50.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            gradient_step(&net, 0, None, intensity, |_| false, |_| false, 299.0, &mut rng),
            StepDecision::Climb(1)
        );
    }

    #[test]
    fn stale_local_maximum_backtracks_and_marks() {
        let net = star_network();
        let intensity = |m: usize| if m == 0 { 80.0 } else { 20.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            gradient_step(&net, 0, Some(2), intensity, |_| false, |_| false, 299.0, &mut rng),
            StepDecision::Backtrack {
                to: 2,
                mark_current_bad: true
            }
        );
    }

    #[test]
    fn fresh_maximum_is_not_a_cul_de_sac() {
        let net = star_network();
        let intensity = |m: usize| if m == 0 { 299.5 } else { 200.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            gradient_step(&net, 0, Some(2), intensity, |_| false, |_| false, 299.0, &mut rng),
            StepDecision::Stay
        );
    }

    #[test]
    fn bad_neighbors_are_never_chosen() {
        let net = star_network();
        let intensity = |m: usize| if m == 1 { 250.0 } else { 10.0 };
        let bad = |m: usize| m == 1;
        for seed in 0..32 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match gradient_step(&net, 0, None, intensity, bad, |_| false, 299.0, &mut rng) {
                StepDecision::Climb(m) | StepDecision::RandomWalk(m) => assert_ne!(m, 1),
                StepDecision::Stay => {}
                StepDecision::Backtrack { to, .. } => assert_ne!(to, 1),
            }
        }
    }

    #[test]
    fn isolated_node_stays() {
        let net = Network::build(vec![Point::new(0.0, 0.0)], 10.0, 100.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            gradient_step(&net, 0, None, |_| 0.0, |_| false, |_| false, 299.0, &mut rng),
            StepDecision::Stay
        );
    }

    #[test]
    fn marks_expire() {
        let mut marks = NodeMarks::default();
        marks.set_visited(10.0, 60.0);
        assert!(marks.visited_live(50.0));
        assert!(!marks.visited_live(70.0));
        marks.set_bad(TargetId(0), 10.0, 300.0);
        assert!(marks.bad_live(TargetId(0), 200.0));
        assert!(!marks.bad_live(TargetId(1), 200.0));
        assert!(!marks.bad_live(TargetId(0), 310.0));
    }

    #[test]
    fn best_estimation_max_update() {
        let mut a = AgentState::new(0, TargetId(0), 5);
        a.observe(5, 200.0, 1.0);
        a.observe(7, 250.0, 2.0);
        assert_eq!(a.best.unwrap().node, 7);
        a.observe(9, 150.0, 3.0);
        assert_eq!(a.best.unwrap().node, 7);
        // ties keep the more recent observation
        a.observe(11, 250.0, 4.0);
        let b = a.best.unwrap();
        assert_eq!(b.node, 11);
        assert_eq!(b.time, 4.0);
        // zero observations are ignored
        a.observe(2, 0.0, 5.0);
        assert_eq!(a.best.unwrap().node, 11);
    }
}
