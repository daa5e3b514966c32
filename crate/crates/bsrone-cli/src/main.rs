//! Command-line harness for the overlay simulator: runs the experiment
//! families, scores candidate files, and replays event traces.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use bsrone::sim::{
    output, run_fault_tolerance, run_join_overhead, run_leave_overhead, run_routing_experiment,
    run_stability, trace, SimConfig,
};
use bsrone::topsis;
use bsrone::Metrics;

#[derive(Parser)]
#[command(name = "bsrone", version, about = "Deterministic simulator for a two-tier super-peer ring overlay")]
struct Cli {
    /// Seed for the run's random streams (no wall-clock entropy is used).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Write one CSV per metric series.
    #[arg(long, global = true)]
    csv: bool,
    /// Write a JSON summary.
    #[arg(long, global = true)]
    json: bool,
    /// Cluster size (a power of two).
    #[arg(long, global = true)]
    cluster_size: Option<u64>,
    /// Section size (a power of two), enabling scalable mode.
    #[arg(long, global = true)]
    section_size: Option<u64>,
    /// Step count for stepped experiments.
    #[arg(long, global = true)]
    steps: Option<u32>,
    /// Print the fully resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// With `stability`: also export the event trace of a single traced
    /// evolution, replayable through the `replay` subcommand.
    #[arg(long, global = true)]
    trace_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Routing efficiency over growing section counts.
    Route,
    /// Broadcast overhead of growing join batches per cluster size.
    JoinOverhead,
    /// Maintenance overhead of batched departures per cluster size.
    LeaveOverhead,
    /// Failed clusters under crash waves, per cluster size and backup count.
    Fault,
    /// Role exchanges per arrival cohort under matched churn.
    Stability,
    /// One-shot closeness scoring of a candidate file.
    Topsis {
        /// CSV of candidates: bandwidth,time_on_network,id_exchanges,willingness.
        #[arg(long)]
        candidates: PathBuf,
    },
    /// Verify an exported event trace by replaying it.
    Replay {
        /// Trace file in the exported newline-delimited JSON format.
        #[arg(long)]
        trace: PathBuf,
    },
}

fn resolve_config(cli: &Cli, base: SimConfig) -> Result<SimConfig> {
    let mut cfg = match &cli.config {
        Some(path) => SimConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => base,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(size) = cli.cluster_size {
        if !size.is_power_of_two() || size < 2 {
            bail!("--cluster-size must be a power of two, got {size}");
        }
        cfg.cluster_exp = size.trailing_zeros();
        cfg.cluster_exp_sweep = vec![cfg.cluster_exp];
    }
    if let Some(size) = cli.section_size {
        if !size.is_power_of_two() || size < 2 {
            bail!("--section-size must be a power of two, got {size}");
        }
        cfg.section_exp = Some(size.trailing_zeros());
    }
    if let Some(steps) = cli.steps {
        cfg.steps = steps;
        cfg.routing_section_exps.truncate(steps as usize);
        cfg.join_batches.truncate(steps as usize);
        cfg.leave_batches.truncate(steps as usize);
        cfg.cohorts = steps;
        cfg.crash_snapshots = steps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cli: &Cli, cfg: &SimConfig, metrics: &Metrics) -> Result<()> {
    for series in &metrics.series {
        let last = series.steps.last();
        println!(
            "{} / {}: {} steps, final headline {}, signal total {}",
            metrics.experiment,
            series.label,
            series.steps.len(),
            last.map(|s| s.headline_signals).unwrap_or(0.0),
            series.signal_totals.values().sum::<u64>(),
        );
    }
    if cli.csv {
        for path in output::write_csv(metrics, cfg, &cli.out)? {
            println!("wrote {}", path.display());
        }
    }
    if cli.json {
        let path = output::write_json(metrics, cfg, &cli.out)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn parse_candidates(path: &PathBuf) -> Result<Vec<topsis::AttributeVector<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            bail!("line {}: expected 4 comma-separated fields", lineno + 1);
        }
        // A header row is allowed.
        if lineno == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        let bandwidth: f64 = fields[0].parse().with_context(|| format!("line {}", lineno + 1))?;
        let time: f64 = fields[1].parse().with_context(|| format!("line {}", lineno + 1))?;
        let exchanges: u32 = fields[2].parse().with_context(|| format!("line {}", lineno + 1))?;
        let willingness: u8 = fields[3].parse().with_context(|| format!("line {}", lineno + 1))?;
        out.push(
            topsis::AttributeVector::new(bandwidth, time, exchanges, willingness)
                .map_err(|e| anyhow::anyhow!("line {}: {e}", lineno + 1))?,
        );
    }
    if out.is_empty() {
        bail!("no candidates in {}", path.display());
    }
    Ok(out)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let seed = cli.seed.unwrap_or(0);

    let base = match cli.command {
        Command::Route => SimConfig::routing(seed),
        Command::JoinOverhead => SimConfig::join_overhead(seed),
        Command::LeaveOverhead => SimConfig::leave_overhead(seed),
        Command::Fault => SimConfig::fault(seed),
        Command::Stability => SimConfig::stability(seed),
        Command::Topsis { .. } | Command::Replay { .. } => SimConfig { seed, ..SimConfig::default() },
    };
    let cfg = resolve_config(&cli, base)?;
    if cli.print_config {
        print!("{}", cfg.to_toml_string()?);
        return Ok(());
    }

    match &cli.command {
        Command::Route => emit(&cli, &cfg, &run_routing_experiment(&cfg)?)?,
        Command::JoinOverhead => emit(&cli, &cfg, &run_join_overhead(&cfg)?)?,
        Command::LeaveOverhead => emit(&cli, &cfg, &run_leave_overhead(&cfg)?)?,
        Command::Fault => emit(&cli, &cfg, &run_fault_tolerance(&cfg)?)?,
        Command::Stability => {
            emit(&cli, &cfg, &run_stability(&cfg)?)?;
            if let Some(path) = &cli.trace_out {
                let (_, jsonl) = bsrone::sim::stability_trace(&cfg)?;
                std::fs::write(path, jsonl)?;
                println!("wrote trace {}", path.display());
            }
        }
        Command::Topsis { candidates } => {
            let cands = parse_candidates(candidates)?;
            let weights = cfg.criteria_weights()?;
            let bounds = cfg.criteria_bounds()?;
            let (matrix, flipped) = topsis::DecisionMatrix::from_candidates(&cands, &bounds)?;
            let scores = topsis::score_with(&matrix, &weights, &flipped, cfg.bound_weighting)?;
            let ranking = topsis::rank(&scores);
            if cli.json {
                let doc = serde_json::json!({
                    "closeness": scores,
                    "ranking": ranking,
                });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                println!("rank,candidate,closeness,bandwidth,time_on_network,id_exchanges,willingness");
                for (place, &i) in ranking.iter().enumerate() {
                    let c = &cands[i];
                    println!(
                        "{},{},{:.9},{},{},{},{}",
                        place + 1,
                        i,
                        scores[i],
                        c.bandwidth,
                        c.time_on_network,
                        c.id_exchanges,
                        c.willingness
                    );
                }
            }
        }
        Command::Replay { trace: path } => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let report = trace::replay::<f64>(&text)?;
            if report.is_faithful() {
                println!("replay ok: {} records reproduced exactly", report.records);
            } else {
                println!(
                    "replay mismatch: {} of {} records diverged (first at index {})",
                    report.mismatches.len(),
                    report.records,
                    report.mismatches[0]
                );
                std::process::exit(1);
            }
        }
    }
    Ok(())
}
