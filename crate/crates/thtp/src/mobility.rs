//! Random-waypoint motion and exact continuous-time target detection.

use rand::Rng;
use thiserror::Error;

use crate::geom::{point_segment_distance, Network, Point};

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("time {t} outside leg span [{t0}, {t1}]")]
    OutsideLeg { t: f64, t0: f64, t1: f64 },
}

/// One straight-line segment of random-waypoint motion.
#[derive(Debug, Clone, Copy)]
pub struct MotionLeg {
    pub a: Point,
    pub b: Point,
    pub t0: f64,
    pub t1: f64,
}

impl MotionLeg {
    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn length(&self) -> f64 {
        self.a.dist(&self.b)
    }

    /// Linear interpolation along the leg. Rejects t outside [t0, t1].
    pub fn position_at(&self, t: f64) -> Result<Point, MobilityError> {
        if t < self.t0 || t > self.t1 {
            return Err(MobilityError::OutsideLeg {
                t,
                t0: self.t0,
                t1: self.t1,
            });
        }
        if self.t1 == self.t0 {
            return Ok(self.a);
        }
        let s = (t - self.t0) / (self.t1 - self.t0);
        Ok(Point::new(
            self.a.x + s * (self.b.x - self.a.x),
            self.a.y + s * (self.b.y - self.a.y),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityRole {
    Target,
    Sink,
}

/// A moving entity (target or mobile sink) following the random-waypoint
/// model with zero pause time.
#[derive(Debug, Clone)]
pub struct MobileEntity {
    pub role: EntityRole,
    pub speed_mps: f64,
    pub leg: MotionLeg,
}

impl MobileEntity {
    pub fn new(role: EntityRole, start: Point, speed_mps: f64, t: f64) -> Self {
        Self {
            role,
            speed_mps,
            leg: MotionLeg {
                a: start,
                b: start,
                t0: t,
                t1: t,
            },
        }
    }

    /// Draws the next waypoint uniformly in [0, side]^2 and starts a new leg
    /// at time t from the current leg's endpoint. A zero-length draw (the
    /// waypoint landing exactly on the current position) is redrawn.
    pub fn next_leg(&mut self, rng: &mut impl Rng, side: f64, t: f64) -> MotionLeg {
        let from = self.leg.b;
        let to = loop {
            let p = Point::new(rng.gen_range(0.0..=side), rng.gen_range(0.0..=side));
            if p != from {
                break p;
            }
        };
        let t1 = if self.speed_mps > 0.0 {
            t + from.dist(&to) / self.speed_mps
        } else {
            t
        };
        self.leg = MotionLeg {
            a: from,
            b: to,
            t0: t,
            t1,
        };
        self.leg
    }
}

/// Nodes detecting a moving entity along one leg: every node within d_dtx of
/// segment AB detects it once, at the closest-approach instant
/// t0 + (d(x, A) / d(A, B)) * (t1 - t0) where x is the foot point.
/// Results are sorted by (time, node id). Zero-length legs detect at t0.
pub fn leg_detections(leg: &MotionLeg, network: &Network, d_dtx: f64) -> Vec<(usize, f64)> {
    let seg_len = leg.length();
    let mut out = Vec::new();
    for (id, pos) in network.positions.iter().enumerate() {
        let (dist, foot) = point_segment_distance(*pos, leg.a, leg.b);
        if dist <= d_dtx {
            let t = if seg_len == 0.0 {
                leg.t0
            } else {
                leg.t0 + (foot.dist(&leg.a) / seg_len) * leg.duration()
            };
            out.push((id, t));
        }
    }
    out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    out
}

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}
