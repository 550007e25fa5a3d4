use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use thtp::config::SimConfig;
use thtp::geom::{place_nodes, Network, Point};
use thtp::metrics::{
    run_experiment, run_sweep, write_sweep_csv, write_time_series_file, SweepParam, SweepSpec,
};
use thtp::spreading::spread_coverage_run;
use thtp::world::World;

#[derive(Parser)]
#[command(name = "thtp", about = "Passive-trace target tracking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigFlags {
    /// Config file (flat key = value lines, # comments)
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,

    #[arg(long)]
    n: Option<usize>,
    /// Communication radius in meters
    #[arg(long)]
    d_trx: Option<f64>,
    /// Sensing radius in meters
    #[arg(long)]
    d_dtx: Option<f64>,
    /// Target speed in km/h
    #[arg(long)]
    target_speed_kmh: Option<f64>,
    /// Message period in seconds
    #[arg(long)]
    propagation_period: Option<f64>,
    /// Node density in nodes per square meter
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    spreading_penalty: Option<f64>,
    #[arg(long)]
    decay_rate: Option<f64>,
    #[arg(long)]
    agent_count: Option<usize>,
    /// off | inverted | hybrid
    #[arg(long)]
    routing: Option<String>,
    /// intensity | any | off
    #[arg(long)]
    inhibition: Option<String>,
    #[arg(long)]
    sink_speed_kmh: Option<f64>,
    #[arg(long)]
    visited_mark_lifetime: Option<f64>,
    #[arg(long)]
    bad_mark_lifetime: Option<f64>,
    /// Simulated duration in seconds
    #[arg(long)]
    t_end: Option<f64>,
    /// Result-message TTL in hops (0 = derive from network size)
    #[arg(long)]
    ttl: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment and write its time-series CSV
    Run {
        #[command(flatten)]
        flags: ConfigFlags,
        /// Comma-separated times for trace-table snapshot dumps
        #[arg(long)]
        snapshot_times: Option<String>,
    },
    /// Run one of the parameter sweeps and write per-run and aggregate CSVs
    Sweep {
        #[command(flatten)]
        flags: ConfigFlags,
        /// density | speed | sensing | period
        #[arg(long)]
        param: String,
        #[arg(long, default_value_t = 10)]
        seeds_per_value: u64,
    },
    /// Spread a single trace from the center of a 2500-node network and
    /// export the spread tree and the communication graph
    SpreadDemo {
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Check a config and print the resolved values
    Validate {
        #[command(flatten)]
        flags: ConfigFlags,
    },
}

fn resolve_config(flags: &ConfigFlags) -> Result<SimConfig, String> {
    let mut cfg = match &flags.config {
        Some(path) => SimConfig::parse_file(path).map_err(|e| e.to_string())?,
        None => SimConfig::default(),
    };
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.n {
        cfg.n = v;
    }
    if let Some(v) = flags.d_trx {
        cfg.d_trx = v;
    }
    if let Some(v) = flags.d_dtx {
        cfg.d_dtx = v;
    }
    if let Some(v) = flags.target_speed_kmh {
        cfg.target_speed_kmh = v;
    }
    if let Some(v) = flags.propagation_period {
        cfg.propagation_period = v;
    }
    if let Some(v) = flags.density {
        cfg.density = v;
    }
    if let Some(v) = flags.spreading_penalty {
        cfg.spreading_penalty = v;
    }
    if let Some(v) = flags.decay_rate {
        cfg.decay_rate = v;
    }
    if let Some(v) = flags.agent_count {
        cfg.agent_count = v;
    }
    if let Some(v) = &flags.routing {
        cfg.set("routing", v, 0).map_err(|e| e.to_string())?;
    }
    if let Some(v) = &flags.inhibition {
        cfg.set("inhibition", v, 0).map_err(|e| e.to_string())?;
    }
    if let Some(v) = flags.sink_speed_kmh {
        cfg.sink_speed_kmh = v;
    }
    if let Some(v) = flags.visited_mark_lifetime {
        cfg.visited_mark_lifetime = v;
    }
    if let Some(v) = flags.bad_mark_lifetime {
        cfg.bad_mark_lifetime = v;
    }
    if let Some(v) = flags.t_end {
        cfg.t_end = v;
    }
    if let Some(v) = flags.ttl {
        cfg.ttl = v;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    if let Some(warning) = cfg.attenuation_warning() {
        eprintln!("warning: {warning}");
    }
    Ok(cfg)
}

fn create_out(path: &Path) -> Result<(), String> {
    std::fs::create_dir_all(path).map_err(|e| format!("cannot create {}: {e}", path.display()))
}

fn writer(path: &Path) -> Result<BufWriter<File>, String> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        format!("cannot write {}: {e}", path.display())
    })?))
}

fn cmd_run(flags: &ConfigFlags, snapshot_times: Option<&str>) -> Result<(), String> {
    let cfg = resolve_config(flags)?;
    create_out(&flags.out)?;
    let snapshots: Vec<f64> = match snapshot_times {
        Some(text) => text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad snapshot time `{s}`: {e}")))
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };

    let mut world = World::new(cfg.clone()).map_err(|e| e.to_string())?;
    if !snapshots.is_empty() {
        world.schedule_snapshots(&snapshots);
    }
    world.run();

    let series_path = flags.out.join(format!("run_seed_{}.csv", cfg.seed));
    write_time_series_file(&world.rows, &series_path).map_err(|e| e.to_string())?;

    let traj_path = flags.out.join(format!("trajectory_seed_{}.csv", cfg.seed));
    let mut w = writer(&traj_path)?;
    writeln!(w, "time_s,agent,node,mode,observed_intensity").map_err(|e| e.to_string())?;
    for r in &world.trajectory {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.time,
            r.agent,
            r.node,
            r.mode.as_str(),
            r.observed_intensity
        )
        .map_err(|e| e.to_string())?;
    }

    if !world.deliveries.is_empty() {
        let path = flags.out.join(format!("deliveries_seed_{}.csv", cfg.seed));
        let mut w = writer(&path)?;
        writeln!(w, "msg,send_time_s,deliver_time_s,hops,strategy,success")
            .map_err(|e| e.to_string())?;
        for d in &world.deliveries {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                d.msg,
                d.send_time,
                d.deliver_time.map(|t| t.to_string()).unwrap_or_else(|| "-1".into()),
                d.hops,
                d.strategy,
                d.success
            )
            .map_err(|e| e.to_string())?;
        }
    }

    if !world.snapshots.is_empty() {
        let path = flags.out.join(format!("snapshots_seed_{}.csv", cfg.seed));
        let mut w = writer(&path)?;
        writeln!(w, "time_s,node,target,type,intensity").map_err(|e| e.to_string())?;
        for s in &world.snapshots {
            writeln!(
                w,
                "{},{},{},{:?},{}",
                s.time, s.node, s.target.0, s.kind, s.intensity
            )
            .map_err(|e| e.to_string())?;
        }
    }

    let localized = world.rows.iter().filter(|r| r.localized).count();
    println!(
        "run complete: t_end={} s, {} samples, {} localized, messages spread={} agent={} routing={}",
        cfg.t_end,
        world.rows.len(),
        localized,
        world.counters.spread,
        world.counters.agent,
        world.counters.routing
    );
    println!("wrote {}", series_path.display());
    Ok(())
}

fn cmd_sweep(flags: &ConfigFlags, param: &str, seeds_per_value: u64) -> Result<(), String> {
    let base = resolve_config(flags)?;
    create_out(&flags.out)?;
    let param = match param {
        "density" => SweepParam::Density,
        "speed" => SweepParam::Speed,
        "sensing" => SweepParam::Sensing,
        "period" => SweepParam::Period,
        other => return Err(format!("unknown sweep parameter `{other}`")),
    };
    let spec = SweepSpec::paper(param, seeds_per_value, base.clone());
    let result = run_sweep(&spec);

    // per-run time series
    for &(value, seed, _) in result.runs.iter() {
        let mut cfg = base.clone();
        param.apply(&mut cfg, value);
        let out = run_experiment(&cfg, seed).map_err(|e| e.to_string())?;
        let path = flags
            .out
            .join(format!("run_{}_{}_{}.csv", param.name(), value, seed));
        write_time_series_file(&out.rows, &path).map_err(|e| e.to_string())?;
    }

    let path = flags.out.join(format!("sweep_{}.csv", param.name()));
    let mut w = writer(&path)?;
    write_sweep_csv(&result, &mut w).map_err(|e| e.to_string())?;
    for f in &result.failures {
        eprintln!("run failed: value={} seed={}: {}", f.0, f.1, f.2);
    }
    println!(
        "sweep {}: {} runs ok, {} failed; wrote {}",
        param.name(),
        result.runs.len(),
        result.failures.len(),
        path.display()
    );
    Ok(())
}

fn cmd_spread_demo(flags: &ConfigFlags) -> Result<(), String> {
    let cfg = resolve_config(flags)?;
    create_out(&flags.out)?;
    // 2500 nodes uniformly in a 1000 x 1000 square, trace starting at the
    // node nearest the center
    let n = 2500;
    let side = 1000.0;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let positions = place_nodes(n, side, &mut rng).map_err(|e| e.to_string())?;
    let network = Network::build(positions, cfg.d_trx, side).map_err(|e| e.to_string())?;
    let center = Point::new(side / 2.0, side / 2.0);
    let origin = (0..n)
        .min_by(|&a, &b| {
            network.positions[a]
                .dist(&center)
                .total_cmp(&network.positions[b].dist(&center))
        })
        .unwrap();

    let stats = spread_coverage_run(
        &network,
        origin,
        cfg.propagation_period,
        cfg.spreading_penalty,
        cfg.decay_rate,
        cfg.inhibition,
        &mut rng,
    );

    let tree_path = flags.out.join(format!("spread_tree_seed_{}.txt", cfg.seed));
    let mut w = writer(&tree_path)?;
    for &(child, parent, t) in &stats.tree_edges {
        writeln!(w, "{} {} 0 {}", child, parent, t).map_err(|e| e.to_string())?;
    }
    let graph_path = flags.out.join(format!("graph_seed_{}.txt", cfg.seed));
    let mut w = writer(&graph_path)?;
    network.write_edge_list(&mut w).map_err(|e| e.to_string())?;

    println!(
        "spread demo: origin node {}, reached {} of {} nodes ({} messages, giant component {:.3})",
        origin,
        stats.reached,
        n,
        stats.messages,
        network.giant_component_fraction()
    );
    println!("wrote {} and {}", tree_path.display(), graph_path.display());
    Ok(())
}

fn cmd_validate(flags: &ConfigFlags) -> Result<(), String> {
    let cfg = resolve_config(flags)?;
    print!("{}", cfg.to_config_string());
    println!("# side = {:.3} m", cfg.side());
    println!("# effective ttl = {} hops", cfg.effective_ttl());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            flags,
            snapshot_times,
        } => cmd_run(flags, snapshot_times.as_deref()),
        Command::Sweep {
            flags,
            param,
            seeds_per_value,
        } => cmd_sweep(flags, param, *seeds_per_value),
        Command::SpreadDemo { flags } => cmd_spread_demo(flags),
        Command::Validate { flags } => cmd_validate(flags),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
