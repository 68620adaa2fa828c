//! Parameter resolution: preset, then `--config` JSON, then explicit flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use grc::sim::{CollectionChecks, Schedule};
use grc::{FieldWidth, IntraParams, SystemParams};
use serde::Deserialize;

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// (5,4,4) MBR family with ell = m-1; `tradeoff` sweeps m over 1,2,5,10.
    Fig2,
    /// (12,8,11) MBR with beta = 2 and m = 10, for `metrics`.
    Fig4,
    /// (3,2,2;8,4) with m = 3, ell = 2 over GF(2^16); vary --gamma.
    Fig5a,
    /// (3,2,2;8,4) with m = 3, ell = 1 over GF(2^16); vary --ell-prime.
    Fig5b,
    /// Same system as fig5b; vary --gamma-prime.
    Fig5c,
    /// (4,3,3) with m = 4, ell = 3 at MBR, beta = 1.
    Fig6,
    /// Same as fig6: the 33-symbol worked example.
    Sec1e,
    /// (3,2,2;8,4) with m = 2, ell = 1.
    Fig7,
}

impl Preset {
    pub fn params(self) -> SystemParams {
        match self {
            Preset::Fig2 => SystemParams::new(5, 4, 4, 4, 1, 2, 1),
            Preset::Fig4 => SystemParams::new(12, 8, 11, 22, 2, 10, 9),
            Preset::Fig5a => SystemParams::new(3, 2, 2, 8, 4, 3, 2).with_width(FieldWidth::W16),
            Preset::Fig5b | Preset::Fig5c => SystemParams::new(3, 2, 2, 8, 4, 3, 1).with_width(FieldWidth::W16),
            Preset::Fig6 | Preset::Sec1e => SystemParams::new(4, 3, 3, 3, 1, 4, 3),
            Preset::Fig7 => SystemParams::new(3, 2, 2, 8, 4, 2, 1),
        }
    }
}

/// Everything `--config` may set. Field names match the long flags.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub alpha: Option<usize>,
    pub beta: Option<usize>,
    pub m: Option<usize>,
    pub ell: Option<usize>,
    pub width: Option<u8>,
    pub gamma: Option<usize>,
    pub ell_prime: Option<usize>,
    pub gamma_prime: Option<usize>,
    pub e: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub repairs: Option<usize>,
    pub schedule: Option<String>,
    pub checks: Option<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct ParamArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Clusters.
    #[arg(long)]
    pub n: Option<usize>,
    /// Clusters needed to decode.
    #[arg(long)]
    pub k: Option<usize>,
    /// Remote helper clusters per repair.
    #[arg(long)]
    pub d: Option<usize>,
    /// Symbols per node.
    #[arg(long)]
    pub alpha: Option<usize>,
    /// Symbols per remote helper cluster.
    #[arg(long)]
    pub beta: Option<usize>,
    /// Nodes per cluster.
    #[arg(long)]
    pub m: Option<usize>,
    /// Local helper nodes per repair.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Field width in bits: 8 or 16.
    #[arg(long)]
    pub width: Option<u8>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct IntraArgs {
    /// Symbols from each local helper.
    #[arg(long)]
    pub gamma: Option<usize>,
    /// Contributing nodes per remote helper cluster.
    #[arg(long)]
    pub ell_prime: Option<usize>,
    /// Symbols from each contributing node.
    #[arg(long)]
    pub gamma_prime: Option<usize>,
}

fn width_of(bits: u8) -> Result<FieldWidth> {
    match bits {
        8 => Ok(FieldWidth::W8),
        16 => Ok(FieldWidth::W16),
        other => bail!("unsupported field width {other}; use 8 or 16"),
    }
}

pub fn preset_of(args: &ParamArgs, cfg: &RunConfig) -> Option<Preset> {
    args.preset.or(cfg.preset)
}

pub fn resolve_params(args: &ParamArgs, cfg: &RunConfig) -> Result<SystemParams> {
    let base = preset_of(args, cfg).map(Preset::params);
    let pick = |flag: Option<usize>, conf: Option<usize>, preset: Option<usize>, name: &str| -> Result<usize> {
        flag.or(conf)
            .or(preset)
            .with_context(|| format!("missing --{name} (or pick a --preset)"))
    };
    let mut p = SystemParams::new(
        pick(args.n, cfg.n, base.map(|b| b.n), "n")?,
        pick(args.k, cfg.k, base.map(|b| b.k), "k")?,
        pick(args.d, cfg.d, base.map(|b| b.d), "d")?,
        pick(args.alpha, cfg.alpha, base.map(|b| b.alpha), "alpha")?,
        pick(args.beta, cfg.beta, base.map(|b| b.beta), "beta")?,
        pick(args.m, cfg.m, base.map(|b| b.m), "m")?,
        pick(args.ell, cfg.ell, base.map(|b| b.ell), "ell")?,
    );
    p.field_width = match args.width.or(cfg.width) {
        Some(bits) => width_of(bits)?,
        None => base.map_or(FieldWidth::W16, |b| b.field_width),
    };
    p.validate()?;
    Ok(p)
}

pub fn resolve_intra(args: &IntraArgs, cfg: &RunConfig, p: &SystemParams) -> Result<IntraParams> {
    let base = IntraParams::unrestricted(p);
    let intra = IntraParams {
        gamma: args.gamma.or(cfg.gamma).unwrap_or(base.gamma),
        ell_prime: args.ell_prime.or(cfg.ell_prime).unwrap_or(base.ell_prime),
        gamma_prime: args.gamma_prime.or(cfg.gamma_prime).unwrap_or(base.gamma_prime),
    };
    intra.validate(p)?;
    Ok(intra)
}

pub fn parse_schedule(s: &str) -> Result<Schedule> {
    Ok(s.parse::<Schedule>()?)
}

pub fn parse_checks(s: &str) -> Result<CollectionChecks> {
    if s == "all" {
        return Ok(CollectionChecks::All);
    }
    let n: usize = s
        .parse()
        .with_context(|| format!("--checks takes `all` or a sample count, got {s:?}"))?;
    Ok(CollectionChecks::Sample(n))
}
