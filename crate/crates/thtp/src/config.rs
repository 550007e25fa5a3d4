//! Run parameterization: defaults, flat key = value config files, validation.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::mobility::kmh_to_mps;
use crate::trace::MAX_INTENSITY;

/// The paper's density expressions use 3.14 literally; keep it so derived
/// side lengths match the published parameter points.
pub const PAPER_PI: f64 = 3.14;

pub fn density_per_314(k: f64) -> f64 {
    k / (100.0 * 100.0 * PAPER_PI)
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: malformed line `{text}` (expected key = value)")]
    Malformed { line: usize, text: String },
    #[error("line {line}: bad value for `{key}`: {value}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("`{key}` must be strictly positive, got {value}")]
    NonPositive { key: String, value: f64 },
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutingStrategy {
    Off,
    InvertedTracking,
    Hybrid,
}

impl fmt::Display for RoutingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RoutingStrategy::Off => "off",
            RoutingStrategy::InvertedTracking => "inverted",
            RoutingStrategy::Hybrid => "hybrid",
        };
        f.write_str(s)
    }
}

/// Which repulsion-set members get excluded from a spread because their
/// branch is already covered. Inhibition drops the member from the candidate
/// set; the forward still goes to the members that remain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InhibitionPolicy {
    /// Skip members already holding a live trace at least as intense as the
    /// would-be carried intensity (default).
    IntensityAware,
    /// Skip members holding any live trace at all.
    AnyTrace,
    /// Never skip.
    Off,
}

impl fmt::Display for InhibitionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InhibitionPolicy::IntensityAware => "intensity",
            InhibitionPolicy::AnyTrace => "any",
            InhibitionPolicy::Off => "off",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub d_trx: f64,
    pub d_dtx: f64,
    pub target_speed_kmh: f64,
    pub propagation_period: f64,
    pub density: f64,
    pub spreading_penalty: f64,
    pub decay_rate: f64,
    pub agent_count: usize,
    pub routing: RoutingStrategy,
    pub inhibition: InhibitionPolicy,
    pub sink_speed_kmh: f64,
    pub visited_mark_lifetime: f64,
    pub bad_mark_lifetime: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Result-message TTL in hops; 0 means "derive from network size"
    /// (10 x a diameter estimate of side*sqrt(2)/d_trx hops).
    pub ttl: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 300,
            d_trx: 100.0,
            d_dtx: 25.0,
            target_speed_kmh: 6.0,
            propagation_period: 1.0,
            density: density_per_314(10.0),
            spreading_penalty: 1.0,
            decay_rate: 1.0,
            agent_count: 1,
            routing: RoutingStrategy::Off,
            inhibition: InhibitionPolicy::IntensityAware,
            sink_speed_kmh: 0.0,
            visited_mark_lifetime: 60.0,
            bad_mark_lifetime: 300.0,
            t_end: 1200.0,
            seed: 0,
            ttl: 0,
        }
    }
}

impl SimConfig {
    pub fn target_speed_mps(&self) -> f64 {
        kmh_to_mps(self.target_speed_kmh)
    }

    pub fn sink_speed_mps(&self) -> f64 {
        kmh_to_mps(self.sink_speed_kmh)
    }

    pub fn side(&self) -> f64 {
        (self.n as f64 / self.density).sqrt()
    }

    pub fn max_intensity(&self) -> f64 {
        MAX_INTENSITY
    }

    pub fn effective_ttl(&self) -> usize {
        if self.ttl > 0 {
            self.ttl
        } else {
            let diameter_hops = (self.side() * std::f64::consts::SQRT_2 / self.d_trx).ceil();
            (10.0 * diameter_hops) as usize
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positives: [(&str, f64); 9] = [
            ("n", self.n as f64),
            ("d_trx", self.d_trx),
            ("d_dtx", self.d_dtx),
            ("target_speed_kmh", self.target_speed_kmh),
            ("propagation_period", self.propagation_period),
            ("density", self.density),
            ("decay_rate", self.decay_rate),
            ("t_end", self.t_end),
            ("agent_count", self.agent_count as f64),
        ];
        for (key, value) in positives {
            if value <= 0.0 {
                return Err(ConfigError::NonPositive {
                    key: key.to_string(),
                    value,
                });
            }
        }
        if self.spreading_penalty < 0.0 {
            return Err(ConfigError::NonPositive {
                key: "spreading_penalty".to_string(),
                value: self.spreading_penalty,
            });
        }
        if self.sink_speed_kmh < 0.0 {
            return Err(ConfigError::NonPositive {
                key: "sink_speed_kmh".to_string(),
                value: self.sink_speed_kmh,
            });
        }
        Ok(())
    }

    /// Attenuation must be slower than one target hop: warns (returns a
    /// message) when d_trx / target_speed <= propagation_period.
    pub fn attenuation_warning(&self) -> Option<String> {
        let hop_time = self.d_trx / self.target_speed_mps();
        if hop_time <= self.propagation_period {
            Some(format!(
                "d_trx/target_speed = {:.3} s is not above the propagation period {:.3} s; \
                 the freshest-trace-is-on-track assumption may not hold",
                hop_time, self.propagation_period
            ))
        } else {
            None
        }
    }

    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |k: &str, v: &str| ConfigError::BadValue {
            line,
            key: k.to_string(),
            value: v.to_string(),
        };
        match key {
            "n" => self.n = value.parse().map_err(|_| bad(key, value))?,
            "d_trx" => self.d_trx = value.parse().map_err(|_| bad(key, value))?,
            "d_dtx" => self.d_dtx = value.parse().map_err(|_| bad(key, value))?,
            "target_speed_kmh" => {
                self.target_speed_kmh = value.parse().map_err(|_| bad(key, value))?
            }
            "propagation_period" => {
                self.propagation_period = value.parse().map_err(|_| bad(key, value))?
            }
            "density" => self.density = value.parse().map_err(|_| bad(key, value))?,
            "spreading_penalty" => {
                self.spreading_penalty = value.parse().map_err(|_| bad(key, value))?
            }
            "decay_rate" => self.decay_rate = value.parse().map_err(|_| bad(key, value))?,
            "agent_count" => self.agent_count = value.parse().map_err(|_| bad(key, value))?,
            "routing" => {
                self.routing = match value {
                    "off" => RoutingStrategy::Off,
                    "inverted" => RoutingStrategy::InvertedTracking,
                    "hybrid" => RoutingStrategy::Hybrid,
                    _ => return Err(bad(key, value)),
                }
            }
            "inhibition" => {
                self.inhibition = match value {
                    "intensity" => InhibitionPolicy::IntensityAware,
                    "any" => InhibitionPolicy::AnyTrace,
                    "off" => InhibitionPolicy::Off,
                    _ => return Err(bad(key, value)),
                }
            }
            "sink_speed_kmh" => {
                self.sink_speed_kmh = value.parse().map_err(|_| bad(key, value))?
            }
            "visited_mark_lifetime" => {
                self.visited_mark_lifetime = value.parse().map_err(|_| bad(key, value))?
            }
            "bad_mark_lifetime" => {
                self.bad_mark_lifetime = value.parse().map_err(|_| bad(key, value))?
            }
            "t_end" => self.t_end = value.parse().map_err(|_| bad(key, value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "ttl" => self.ttl = value.parse().map_err(|_| bad(key, value))?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Parses flat `key = value` lines with `#` comments over the defaults.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line,
                    text: raw.trim().to_string(),
                });
            };
            cfg.set(key.trim(), value.trim(), line)?;
        }
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_str(&text)
    }

    /// Serializes as the same flat key = value format `parse_str` reads.
    pub fn to_config_string(&self) -> String {
        format!(
            "n = {}\n\
             d_trx = {}\n\
             d_dtx = {}\n\
             target_speed_kmh = {}\n\
             propagation_period = {}\n\
             density = {}\n\
             spreading_penalty = {}\n\
             decay_rate = {}\n\
             agent_count = {}\n\
             routing = {}\n\
             inhibition = {}\n\
             sink_speed_kmh = {}\n\
             visited_mark_lifetime = {}\n\
             bad_mark_lifetime = {}\n\
             t_end = {}\n\
             seed = {}\n\
             ttl = {}\n",
            self.n,
            self.d_trx,
            self.d_dtx,
            self.target_speed_kmh,
            self.propagation_period,
            self.density,
            self.spreading_penalty,
            self.decay_rate,
            self.agent_count,
            self.routing,
            self.inhibition,
            self.sink_speed_kmh,
            self.visited_mark_lifetime,
            self.bad_mark_lifetime,
            self.t_end,
            self.seed,
            self.ttl,
        )
    }
}
