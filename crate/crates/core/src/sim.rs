//! Random linear network coding simulation of clustered repair.
//!
//! Each node holds `alpha` coefficient rows over the `B = B*` source
//! symbols. A repair moves random combinations along the same paths as the
//! information flow graph:
//!
//! - each remote helper cluster picks `ell'` of its nodes, each sending
//!   `gamma'` combinations of its rows to the cluster's compute unit, which
//!   forwards `beta` combinations of what it received;
//! - each local helper sends `gamma` combinations of its rows;
//! - the replacement stores `alpha` combinations of everything received.
//!
//! Data collection from `k` clusters succeeds when their stacked rows have
//! rank `B`. All randomness comes from [`crate::prf`] keyed by
//! `(seed, trial, t, role)`, so trials replay bit-exactly in any order.

use itertools::Itertools;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{file_size_bound, gamma_prime_bound, gamma_star, IntraParams, SystemParams};
use crate::error::{Error, Result};
use crate::ifg::{adversarial_log_thm5, adversarial_log_thm6, RepairEvent};
use crate::gf::FieldWidth;
use crate::linalg::Matrix;
use crate::prf::{coefficient_matrix, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    UniformRandom,
    RoundRobin,
    AdversarialThm5,
    AdversarialThm6,
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-random" => Ok(Schedule::UniformRandom),
            "round-robin" => Ok(Schedule::RoundRobin),
            "adversarial-thm5" => Ok(Schedule::AdversarialThm5),
            "adversarial-thm6" => Ok(Schedule::AdversarialThm6),
            other => Err(Error::InvalidParams(format!("unknown schedule {other:?}"))),
        }
    }
}

/// Which `k`-subsets of clusters are tested after each repair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollectionChecks {
    All,
    /// This many uniformly drawn subsets per check.
    Sample(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: SystemParams,
    pub intra: IntraParams,
    pub trials: usize,
    pub repairs_max: usize,
    pub schedule: Schedule,
    pub seed: u64,
    pub checks: CollectionChecks,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.intra.validate(&self.params)?;
        if self.trials == 0 {
            return Err(Error::InvalidParams("need at least one trial".into()));
        }
        if let CollectionChecks::Sample(0) = self.checks {
            return Err(Error::InvalidParams("sample at least one collector".into()));
        }
        let p = &self.params;
        let b = file_size_bound(p)?;
        assert!(b <= p.k * p.m * p.alpha, "B* never exceeds k m alpha");
        match self.schedule {
            Schedule::AdversarialThm5 => {
                adversarial_log_thm5(p)?;
            }
            Schedule::AdversarialThm6 => {
                adversarial_log_thm6(p)?;
            }
            _ => {}
        }
        Ok(())
    }
}

const ROLE_INIT: u64 = 0;
const ROLE_PICK: u64 = 1;
const ROLE_CONTRIB: u64 = 2;
const ROLE_COMPUTE: u64 = 3;
const ROLE_LOCAL: u64 = 4;
const ROLE_REPLACE: u64 = 5;
const ROLE_SCHEDULE: u64 = 6;
const ROLE_COLLECT: u64 = 7;

/// Coefficient rows of every node in one trial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffState {
    pub params: SystemParams,
    /// `nodes[i][j]` is `alpha x b`.
    pub nodes: Vec<Vec<Matrix>>,
    pub b: usize,
    seed: u64,
    trial: u64,
    /// Repairs applied so far.
    pub t: u64,
}

impl CoeffState {
    fn key(&self, role: u64, a: u64, b: u64) -> [u64; 5] {
        [self.trial, self.t, role, a, b]
    }

    /// Rank of the stacked rows of `clusters`.
    pub fn collect_rank(&self, clusters: &[usize]) -> usize {
        let parts = clusters.iter().flat_map(|&i| self.nodes[i].iter());
        Matrix::vstack_all(self.params.field_width, self.b, parts)
            .expect("rows share the source length")
            .rank()
    }
}

/// Fresh state: every node gets `alpha` uniform rows.
pub fn sim_init(config: &SimConfig, trial: u64) -> Result<CoeffState> {
    config.validate()?;
    let p = config.params;
    let b = file_size_bound(&p)?;
    let nodes = (0..p.n)
        .map(|i| {
            (0..p.m)
                .map(|j| coefficient_matrix(p.field_width, p.alpha, b, config.seed, &[trial, 0, ROLE_INIT, i as u64, j as u64]))
                .collect()
        })
        .collect();
    Ok(CoeffState {
        params: p,
        nodes,
        b,
        seed: config.seed,
        trial,
        t: 0,
    })
}

/// Applies one repair.
pub fn sim_repair_step(state: &mut CoeffState, event: &RepairEvent, intra: &IntraParams) -> Result<()> {
    let p = state.params;
    event.validate(&p)?;
    intra.validate(&p)?;
    let w = p.field_width;
    let mut received: Vec<Matrix> = Vec::with_capacity(p.d + p.ell);

    for &h in &event.remote_helpers {
        let mut rng = stream(state.seed, &state.key(ROLE_PICK, h as u64, 0));
        let mut chosen: Vec<usize> = sample(&mut rng, p.m, intra.ell_prime).into_vec();
        chosen.sort_unstable();
        let sent: Vec<Matrix> = chosen
            .iter()
            .map(|&j| {
                coefficient_matrix(w, intra.gamma_prime, p.alpha, state.seed, &state.key(ROLE_CONTRIB, h as u64, j as u64))
                    .mul(&state.nodes[h][j])
            })
            .collect::<Result<_>>()?;
        let pooled = Matrix::vstack_all(w, state.b, &sent)?;
        let unit = coefficient_matrix(w, p.beta, pooled.rows(), state.seed, &state.key(ROLE_COMPUTE, h as u64, 0));
        received.push(unit.mul(&pooled)?);
    }
    for &j in &event.local_helpers {
        let c = coefficient_matrix(w, intra.gamma, p.alpha, state.seed, &state.key(ROLE_LOCAL, j as u64, 0));
        received.push(c.mul(&state.nodes[event.cluster][j])?);
    }
    let pooled = Matrix::vstack_all(w, state.b, &received)?;
    let mix = coefficient_matrix(w, p.alpha, pooled.rows(), state.seed, &state.key(ROLE_REPLACE, 0, 0));
    state.nodes[event.cluster][event.node] = mix.mul(&pooled)?;
    state.t += 1;
    Ok(())
}

/// Whether `clusters` (size `k`) can decode.
pub fn sim_collect_check(state: &CoeffState, clusters: &[usize]) -> Result<bool> {
    if clusters.len() != state.params.k {
        return Err(Error::InvalidParams(format!(
            "collector needs {} clusters, got {}",
            state.params.k,
            clusters.len()
        )));
    }
    Ok(state.collect_rank(clusters) == state.b)
}

fn uniform_helpers<R: Rng>(rng: &mut R, p: &SystemParams, cluster: usize, node: usize) -> (Vec<usize>, Vec<usize>) {
    let locals: Vec<usize> = (0..p.m).filter(|&j| j != node).collect();
    let remotes: Vec<usize> = (0..p.n).filter(|&c| c != cluster).collect();
    let mut l: Vec<usize> = sample(rng, locals.len(), p.ell).iter().map(|i| locals[i]).collect();
    let mut r: Vec<usize> = sample(rng, remotes.len(), p.d).iter().map(|i| remotes[i]).collect();
    l.sort_unstable();
    r.sort_unstable();
    (l, r)
}

/// The repair applied at step `t` (0-based) of `trial`.
pub fn schedule_event(config: &SimConfig, trial: u64, t: u64) -> Result<RepairEvent> {
    let p = &config.params;
    let mut rng = stream(config.seed, &[trial, t, ROLE_SCHEDULE]);
    let ev = match config.schedule {
        Schedule::UniformRandom => {
            let cluster = rng.gen_range(0..p.n);
            let node = rng.gen_range(0..p.m);
            let (local_helpers, remote_helpers) = uniform_helpers(&mut rng, p, cluster, node);
            RepairEvent { cluster, node, local_helpers, remote_helpers }
        }
        Schedule::RoundRobin => {
            let idx = (t as usize) % (p.n * p.m);
            let (cluster, node) = (idx / p.m, idx % p.m);
            let (local_helpers, remote_helpers) = uniform_helpers(&mut rng, p, cluster, node);
            RepairEvent { cluster, node, local_helpers, remote_helpers }
        }
        Schedule::AdversarialThm5 | Schedule::AdversarialThm6 => {
            let (log, _) = if config.schedule == Schedule::AdversarialThm5 {
                adversarial_log_thm5(p)?
            } else {
                adversarial_log_thm6(p)?
            };
            if log.is_empty() {
                return Err(Error::InvalidParams("adversarial history is empty".into()));
            }
            log.events[(t as usize) % log.len()].clone()
        }
    };
    Ok(ev)
}

fn collectors(config: &SimConfig, trial: u64, r: u64) -> Vec<Vec<usize>> {
    let p = &config.params;
    match config.checks {
        CollectionChecks::All => (0..p.n).combinations(p.k).collect(),
        CollectionChecks::Sample(s) => {
            let mut rng = stream(config.seed, &[trial, r, ROLE_COLLECT]);
            (0..s)
                .map(|_| {
                    let mut c = sample(&mut rng, p.n, p.k).into_vec();
                    c.sort_unstable();
                    c
                })
                .collect()
        }
    }
}

/// Success flags after `0..=repairs_max` repairs of one trial. A point
/// succeeds when every checked collector decodes.
pub fn run_trial(config: &SimConfig, trial: u64) -> Result<Vec<bool>> {
    let mut st = sim_init(config, trial)?;
    let mut out = Vec::with_capacity(config.repairs_max + 1);
    for r in 0..=config.repairs_max as u64 {
        if r > 0 {
            let ev = schedule_event(config, trial, r - 1)?;
            sim_repair_step(&mut st, &ev, &config.intra)?;
        }
        let ok = collectors(config, trial, r)
            .iter()
            .all(|c| st.collect_rank(c) == st.b);
        out.push(ok);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub repairs: usize,
    pub success_rate: f64,
    pub trials: usize,
    /// Normal-approximation 95% radius.
    pub ci: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub rows: Vec<SimRow>,
}

impl SimResult {
    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.success_rate).collect()
    }
}

/// Runs all trials (in parallel) and aggregates per repair count.
pub fn run_experiment(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let per_trial: Vec<Vec<bool>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<_>>()?;
    let n = config.trials as f64;
    let rows = (0..=config.repairs_max)
        .map(|r| {
            let hits = per_trial.iter().filter(|tr| tr[r]).count() as f64;
            let p = hits / n;
            SimRow {
                repairs: r,
                success_rate: p,
                trials: config.trials,
                ci: 1.96 * (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect();
    Ok(SimResult { rows })
}

/// Mann-Kendall trend test on a series in time order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MannKendall {
    /// Sum of signs of all later-minus-earlier differences.
    pub s: i64,
    /// Variance of `s` under no trend, corrected for ties.
    pub var: f64,
    /// Continuity-corrected normal score.
    pub z: f64,
}

pub fn mann_kendall(series: &[f64]) -> MannKendall {
    let n = series.len();
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            s += match series[j].partial_cmp(&series[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let nf = n as f64;
    let mut var = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    for (_, grp) in &sorted.iter().chunk_by(|&&x| x) {
        let t = grp.count() as f64;
        var -= t * (t - 1.0) * (2.0 * t + 5.0);
    }
    var /= 18.0;
    let z = if var <= 0.0 {
        0.0
    } else if s > 0 {
        (s as f64 - 1.0) / var.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var.sqrt()
    } else {
        0.0
    };
    MannKendall { s, var, z }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fig5Panel {
    /// Local helper bandwidth `gamma`.
    A,
    /// Contributing nodes per remote cluster `ell'`.
    B,
    /// Remote node bandwidth `gamma'`.
    C,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig5Setting {
    pub label: String,
    pub config: SimConfig,
    /// Whether the setting meets every known necessary condition.
    pub sufficient: bool,
}

/// The three experiment families: sweep one intra-cluster knob while the
/// others stay unrestricted.
pub fn fig5_settings(panel: Fig5Panel, trials: usize, repairs_max: usize, seed: u64) -> Result<Vec<Fig5Setting>> {
    let ell = if panel == Fig5Panel::A { 2 } else { 1 };
    let p = SystemParams::new(3, 2, 2, 8, 4, 3, ell).with_width(FieldWidth::W16);
    let base = IntraParams::unrestricted(&p);
    let cfg = |intra: IntraParams| SimConfig {
        params: p,
        intra,
        trials,
        repairs_max,
        schedule: Schedule::UniformRandom,
        seed,
        checks: CollectionChecks::All,
    };
    let out = match panel {
        Fig5Panel::A => {
            let gs = gamma_star(&p)?;
            [1, 2, 3, 4, 8]
                .into_iter()
                .map(|g| Fig5Setting {
                    label: format!("gamma={g}"),
                    config: cfg(IntraParams { gamma: g, ..base }),
                    sufficient: g >= gs,
                })
                .collect()
        }
        Fig5Panel::B => (1..=p.m)
            .map(|lp| Fig5Setting {
                label: format!("ell_prime={lp}"),
                config: cfg(IntraParams { ell_prime: lp, ..base }),
                sufficient: lp == p.m,
            })
            .collect(),
        Fig5Panel::C => {
            let need = gamma_prime_bound(&p)?.ceil;
            [1, 2, 4, 8]
                .into_iter()
                .map(|g| Fig5Setting {
                    label: format!("gamma_prime={g}"),
                    config: cfg(IntraParams { gamma_prime: g, ..base }),
                    sufficient: g >= need,
                })
                .collect()
        }
    };
    Ok(out)
}
