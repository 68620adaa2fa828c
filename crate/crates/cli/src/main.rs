mod commands;
mod config;
mod store;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use commands::Family;
use config::{parse_checks, parse_schedule, preset_of, resolve_intra, resolve_params, IntraArgs, ParamArgs, Preset, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "grc", version, about = "Generalized regenerating codes for clustered storage")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for simulation trials.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path (stdout when absent; a directory for `encode`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file with any of the long flags as keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capacity and bandwidth bounds as JSON.
    Bounds {
        #[command(flatten)]
        params: ParamArgs,
        /// Eavesdropped clusters; adds the secure capacity.
        #[arg(long)]
        e: Option<usize>,
    },
    /// Storage vs inter-cluster bandwidth curves as CSV.
    Tradeoff {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "all")]
        family: Family,
        /// Points per curve; 0 emits every integer alpha.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Storage and bandwidth metrics for every number of local helpers, as CSV.
    Metrics {
        #[command(flatten)]
        params: ParamArgs,
        /// Use the minimum-storage point instead of minimum bandwidth.
        #[arg(long)]
        msr: bool,
    },
    /// Encode a file into a directory of node files.
    Encode {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        input: PathBuf,
        /// Stack m independent minimum-storage codes (no local help).
        #[arg(long)]
        stacked: bool,
    },
    /// Rebuild one node file from its helpers.
    Repair {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        cluster: usize,
        #[arg(long)]
        node: usize,
        /// Local helper nodes (default: first available).
        #[arg(long, value_delimiter = ',')]
        local: Option<Vec<usize>>,
        /// Remote helper clusters (default: first complete ones).
        #[arg(long, value_delimiter = ',')]
        remote: Option<Vec<usize>>,
    },
    /// Decode the original file from k clusters.
    Collect {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_delimiter = ',')]
        clusters: Option<Vec<usize>>,
    },
    /// Random linear network coding repair simulation, as CSV.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        intra: IntraArgs,
        #[arg(long)]
        trials: Option<usize>,
        /// Repairs per trial.
        #[arg(long)]
        repairs: Option<usize>,
        /// uniform-random, round-robin, adversarial-thm5 or adversarial-thm6.
        #[arg(long)]
        schedule: Option<String>,
        /// `all` or the number of sampled collectors per check.
        #[arg(long)]
        checks: Option<String>,
    },
    /// Flow-graph verification of the bounds as JSON.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        intra: IntraArgs,
        /// Report every gamma in 0..=alpha.
        #[arg(long)]
        gamma_sweep: bool,
        /// Random histories per report.
        #[arg(long, default_value_t = 16)]
        random_logs: usize,
    },
    /// Secure capacity and leakage verdicts as JSON.
    Secure {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        e: Option<usize>,
        #[arg(long)]
        check_leakage: bool,
    },
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, v: &T) -> Result<()> {
    emit(out, (serde_json::to_string_pretty(v)? + "\n").as_bytes())
}

fn emit_csv<T: Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    emit(out, &w.into_inner()?)
}

/// Returns whether every requested check passed.
fn run(cli: Cli) -> Result<bool> {
    let g = cli.global;
    let cfg = RunConfig::load(g.config.as_deref())?;
    let seed = g.seed.or(cfg.seed).unwrap_or(0);
    if let Some(t) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let out = g.out.as_deref();
    match cli.cmd {
        Command::Bounds { params, e } => {
            let p = resolve_params(&params, &cfg)?;
            emit_json(out, &commands::bounds(&p, e.or(cfg.e))?)?;
        }
        Command::Tradeoff { params, family, samples } => {
            let p = resolve_params(&params, &cfg)?;
            let sweep: Option<&[usize]> = (preset_of(&params, &cfg) == Some(Preset::Fig2)).then_some(&[1, 2, 5, 10]);
            emit_csv(out, &commands::tradeoff(&p, family, samples, sweep)?)?;
        }
        Command::Metrics { params, msr } => {
            let p = resolve_params(&params, &cfg)?;
            emit_csv(out, &commands::metrics(&p, msr)?)?;
        }
        Command::Encode { params, input, stacked } => {
            let p = resolve_params(&params, &cfg)?;
            let dir = out.context("encode needs --out <dir>")?;
            let data = std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            emit_json(None, &store::encode(&p, stacked, &data, dir)?)?;
        }
        Command::Repair { dir, cluster, node, local, remote } => {
            emit_json(None, &store::repair(&dir, (cluster, node), local, remote, out)?)?;
        }
        Command::Collect { dir, clusters } => {
            let (used, bytes) = store::collect(&dir, clusters)?;
            eprintln!("decoded {} bytes from clusters {:?}", bytes.len(), used);
            emit(out, &bytes)?;
        }
        Command::Simulate { params, intra, trials, repairs, schedule, checks } => {
            let p = resolve_params(&params, &cfg)?;
            let ip = resolve_intra(&intra, &cfg, &p)?;
            let schedule = parse_schedule(schedule.or(cfg.schedule.clone()).as_deref().unwrap_or("uniform-random"))?;
            let checks = parse_checks(checks.or(cfg.checks.clone()).as_deref().unwrap_or("all"))?;
            let trials = trials.or(cfg.trials).unwrap_or(200);
            let repairs = repairs.or(cfg.repairs).unwrap_or(50);
            let res = commands::simulate(&p, ip, trials, repairs, schedule, seed, checks)?;
            let min = res.rows.iter().map(|r| r.success_rate).fold(1.0, f64::min);
            eprintln!(
                "gamma={} ell'={} gamma'={}: min success {:.3}, trend S={} z={:.2}",
                ip.gamma, ip.ell_prime, ip.gamma_prime, min, res.trend.s, res.trend.z
            );
            emit_csv(out, &res.rows)?;
        }
        Command::Verify { params, intra, gamma_sweep, random_logs } => {
            let p = resolve_params(&params, &cfg)?;
            let remote = intra.gamma_prime.or(cfg.gamma_prime).is_some() || intra.ell_prime.or(cfg.ell_prime).is_some();
            if remote {
                let ip = resolve_intra(&intra, &cfg, &p)?;
                emit_json(out, &commands::verify_remote(&p, ip.ell_prime, ip.gamma_prime)?)?;
            } else {
                let gammas: Vec<usize> = if gamma_sweep {
                    (0..=p.alpha).collect()
                } else {
                    vec![intra.gamma.or(cfg.gamma).unwrap_or(p.alpha)]
                };
                let (rows, ok) = commands::verify_local(&p, &gammas, random_logs, seed)?;
                if gamma_sweep {
                    emit_json(out, &rows)?;
                } else {
                    emit_json(out, &rows[0])?;
                }
                return Ok(ok);
            }
        }
        Command::Secure { params, e, check_leakage } => {
            let p = resolve_params(&params, &cfg)?;
            let (v, ok) = commands::secure(&p, e.or(cfg.e).unwrap_or(1), check_leakage)?;
            emit_json(out, &v)?;
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: a requested check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
