//! Discrete-event simulator of a passive-trace target tracking protocol for
//! wireless sensor networks.
//!
//! Sensor nodes store decaying intensity traces of target presence and
//! spread them over a degree-2 spanning heuristic with a repulsion-point
//! direction bias; a tracking agent greedily climbs the trace gradient to
//! localize the moving target, and result messages are routed back to a
//! mobile sink by inverted tracking or hybrid geographic+tracking.

pub mod agent;
pub mod config;
pub mod geom;
pub mod metrics;
pub mod mobility;
pub mod sim;
pub mod spreading;
pub mod trace;
pub mod world;

pub use config::{InhibitionPolicy, RoutingStrategy, SimConfig};
pub use metrics::{run_experiment, run_sweep, SweepParam, SweepSpec};
pub use world::World;
