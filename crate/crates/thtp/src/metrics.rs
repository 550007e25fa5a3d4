//! Experiment harness: single runs, the four parameter sweeps, seed
//! aggregation and CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{density_per_314, SimConfig};
use crate::world::{MetricRow, World, WorldError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub localizations: u64,
    pub localized_fraction: f64,
    pub msgs_spread: u64,
    pub msgs_agent: u64,
    pub msgs_routing: u64,
    pub msgs_total: u64,
    pub msgs_per_node: f64,
    pub giant_component_fraction: f64,
}

pub struct RunOutput {
    pub rows: Vec<MetricRow>,
    pub summary: RunSummary,
    pub world: World,
}

/// One full simulation under `cfg` with the given seed.
pub fn run_experiment(cfg: &SimConfig, seed: u64) -> Result<RunOutput, ExperimentError> {
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    let mut world = World::new(cfg)?;
    world.run();
    let localizations = world.rows.iter().filter(|r| r.localized).count() as u64;
    let sampled = world.rows.len().max(1) as f64;
    let summary = RunSummary {
        localizations,
        localized_fraction: localizations as f64 / sampled,
        msgs_spread: world.counters.spread,
        msgs_agent: world.counters.agent,
        msgs_routing: world.counters.routing,
        msgs_total: world.counters.total(),
        msgs_per_node: world.counters.total() as f64 / world.cfg.n as f64,
        giant_component_fraction: world.network.giant_component_fraction(),
    };
    let rows = world.rows.clone();
    Ok(RunOutput {
        rows,
        summary,
        world,
    })
}

fn opt_id(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-1".to_string())
}

pub fn write_time_series(rows: &[MetricRow], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        w,
        "time_s,n_best,n_best_estimation,distance_m,localized,msgs_spread,msgs_agent,msgs_routing"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.time,
            opt_id(r.n_best),
            opt_id(r.n_best_estimation),
            r.distance.map(|d| d.to_string()).unwrap_or_else(|| "-1".to_string()),
            r.localized,
            r.msgs_spread,
            r.msgs_agent,
            r.msgs_routing
        )?;
    }
    Ok(())
}

pub fn write_time_series_file(rows: &[MetricRow], path: &Path) -> Result<(), ExperimentError> {
    let file = File::create(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    write_time_series(rows, &mut w).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Density,
    Speed,
    Sensing,
    Period,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Density => "density",
            SweepParam::Speed => "speed",
            SweepParam::Sensing => "sensing",
            SweepParam::Period => "period",
        }
    }

    /// The published sweep values for this parameter.
    pub fn paper_values(&self) -> Vec<f64> {
        match self {
            // expressed in expected-neighbor counts k, density = k/(100^2*3.14)
            SweepParam::Density => vec![7.5, 10.0, 20.0, 40.0],
            SweepParam::Speed => vec![5.0, 15.0, 25.0, 35.0],
            SweepParam::Sensing => vec![10.0, 40.0, 70.0, 100.0],
            SweepParam::Period => vec![1.0, 3.0, 5.0, 10.0, 20.0],
        }
    }

    pub fn apply(&self, cfg: &mut SimConfig, value: f64) {
        match self {
            SweepParam::Density => cfg.density = density_per_314(value),
            SweepParam::Speed => cfg.target_speed_kmh = value,
            SweepParam::Sensing => cfg.d_dtx = value,
            SweepParam::Period => cfg.propagation_period = value,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub seeds_per_value: u64,
    pub base: SimConfig,
}

impl SweepSpec {
    pub fn paper(param: SweepParam, seeds_per_value: u64, base: SimConfig) -> Self {
        Self {
            param,
            values: param.paper_values(),
            seeds_per_value,
            base,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepValueAggregate {
    pub value: f64,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub median_localizations: f64,
    pub median_localized_fraction: f64,
    pub median_msgs_spread: f64,
    pub q1_msgs_spread: f64,
    pub q3_msgs_spread: f64,
    pub median_msgs_per_node: f64,
    pub median_msgs_total: f64,
}

#[derive(Debug)]
pub struct SweepResult {
    pub param: SweepParam,
    pub aggregates: Vec<SweepValueAggregate>,
    /// (value, seed, summary) for every successful run.
    pub runs: Vec<(f64, u64, RunSummary)>,
    pub failures: Vec<(f64, u64, String)>,
}

/// Percentile by linear interpolation over the sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn median_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile(&v, 0.5)
}

/// Runs the whole sweep (runs fan out across threads), aggregating per value.
/// A failed run is recorded and skipped.
pub fn run_sweep(spec: &SweepSpec) -> SweepResult {
    let jobs: Vec<(f64, u64)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.seeds_per_value).map(move |s| (v, s)))
        .collect();

    let outcomes: Vec<(f64, u64, Result<RunSummary, String>)> = jobs
        .par_iter()
        .map(|&(value, seed)| {
            let mut cfg = spec.base.clone();
            spec.param.apply(&mut cfg, value);
            let res = run_experiment(&cfg, seed)
                .map(|out| out.summary)
                .map_err(|e| e.to_string());
            (value, seed, res)
        })
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (value, seed, res) in outcomes {
        match res {
            Ok(summary) => runs.push((value, seed, summary)),
            Err(e) => failures.push((value, seed, e)),
        }
    }
    runs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let aggregates = spec
        .values
        .iter()
        .map(|&value| {
            let of_value: Vec<&RunSummary> = runs
                .iter()
                .filter(|(v, _, _)| *v == value)
                .map(|(_, _, s)| s)
                .collect();
            let mut spreads: Vec<f64> =
                of_value.iter().map(|s| s.msgs_spread as f64).collect();
            spreads.sort_by(|a, b| a.total_cmp(b));
            SweepValueAggregate {
                value,
                runs_ok: of_value.len(),
                runs_failed: failures.iter().filter(|(v, _, _)| *v == value).count(),
                median_localizations: median_of(
                    of_value.iter().map(|s| s.localizations as f64),
                ),
                median_localized_fraction: median_of(
                    of_value.iter().map(|s| s.localized_fraction),
                ),
                median_msgs_spread: quantile(&spreads, 0.5),
                q1_msgs_spread: quantile(&spreads, 0.25),
                q3_msgs_spread: quantile(&spreads, 0.75),
                median_msgs_per_node: median_of(of_value.iter().map(|s| s.msgs_per_node)),
                median_msgs_total: median_of(
                    of_value.iter().map(|s| s.msgs_total as f64),
                ),
            }
        })
        .collect();

    SweepResult {
        param: spec.param,
        aggregates,
        runs,
        failures,
    }
}

pub fn write_sweep_csv(result: &SweepResult, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        w,
        "value,median_localizations,median_localized_fraction,median_msgs_spread,q1,q3,median_msgs_per_node"
    )?;
    for a in &result.aggregates {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            a.value,
            a.median_localizations,
            a.median_localized_fraction,
            a.median_msgs_spread,
            a.q1_msgs_spread,
            a.q3_msgs_spread,
            a.median_msgs_per_node
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[5.0], 0.5), 5.0);
    }

    #[test]
    fn run_experiment_defaults() {
        let cfg = SimConfig::default();
        let out = run_experiment(&cfg, 2).unwrap();
        assert_eq!(out.rows.len(), 1200);
        assert_eq!(
            out.summary.msgs_total,
            out.summary.msgs_spread + out.summary.msgs_agent + out.summary.msgs_routing
        );
        assert!(out.summary.giant_component_fraction > 0.5);
    }

    #[test]
    fn run_experiment_rejects_invalid_config() {
        let mut cfg = SimConfig::default();
        cfg.d_trx = -1.0;
        assert!(run_experiment(&cfg, 0).is_err());
    }

    #[test]
    fn single_value_sweep_degenerates_to_repeats() {
        let base = SimConfig {
            t_end: 60.0,
            ..SimConfig::default()
        };
        let spec = SweepSpec {
            param: SweepParam::Speed,
            values: vec![6.0],
            seeds_per_value: 3,
            base,
        };
        let res = run_sweep(&spec);
        assert_eq!(res.runs.len(), 3);
        assert_eq!(res.aggregates.len(), 1);
        assert!(res.failures.is_empty());
    }

    #[test]
    fn aggregates_permutation_invariant_in_seed() {
        // seeds run in parallel; aggregation sorts, so medians are stable
        let base = SimConfig {
            t_end: 30.0,
            ..SimConfig::default()
        };
        let spec = SweepSpec {
            param: SweepParam::Sensing,
            values: vec![25.0],
            seeds_per_value: 4,
            base,
        };
        let a = run_sweep(&spec);
        let b = run_sweep(&spec);
        assert_eq!(
            a.aggregates[0].median_msgs_spread,
            b.aggregates[0].median_msgs_spread
        );
    }

    #[test]
    fn csv_shapes() {
        let cfg = SimConfig {
            t_end: 10.0,
            ..SimConfig::default()
        };
        let out = run_experiment(&cfg, 1).unwrap();
        let mut buf = Vec::new();
        write_time_series(&out.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "time_s,n_best,n_best_estimation,distance_m,localized,msgs_spread,msgs_agent,msgs_routing"
        );
        assert_eq!(lines.count(), out.rows.len());
    }
}
