//! Information flow graphs for clustered repair.
//!
//! Two graph models are built from a repair [`EventLog`]:
//!
//! - [`build_model1`] clones the whole host cluster on every repair and gives
//!   each cluster version one external (compute) node that serves both remote
//!   repairs and data collection.
//! - [`build_model2`] keeps nodes in place and creates a fresh external node
//!   per use, fed by `ell'` nodes of the cluster over `gamma'` edges.
//!
//! The min-cut of the resulting graph bounds the file size a code can
//! support under that repair history. The adversarial logs below are the
//! histories that make the bounds tight.

mod flow;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use flow::{Capacity, Edge, FlowGraph, VertexTag};

use crate::bounds::{file_size_bound, gamma_star, SystemParams};
use crate::error::{Error, Result};

/// One node repair. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairEvent {
    pub cluster: usize,
    pub node: usize,
    pub local_helpers: Vec<usize>,
    pub remote_helpers: Vec<usize>,
}

impl RepairEvent {
    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if self.cluster >= p.n || self.node >= p.m {
            return Err(Error::HelperSet(format!(
                "failed node ({}, {}) out of range",
                self.cluster, self.node
            )));
        }
        check_set(&self.local_helpers, p.ell, p.m, self.node, "local")?;
        check_set(&self.remote_helpers, p.d, p.n, self.cluster, "remote")
    }
}

fn check_set(set: &[usize], size: usize, bound: usize, excluded: usize, what: &str) -> Result<()> {
    if set.len() != size {
        return Err(Error::HelperSet(format!(
            "{what} helper set has {} members, expected {size}",
            set.len()
        )));
    }
    if set.iter().any(|&h| h >= bound || h == excluded) {
        return Err(Error::HelperSet(format!(
            "{what} helper set {set:?} contains an invalid index"
        )));
    }
    if !set.iter().all_unique() {
        return Err(Error::HelperSet(format!("{what} helper set {set:?} repeats a member")));
    }
    Ok(())
}

/// Ordered repair history.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub events: Vec<RepairEvent>,
}

impl EventLog {
    pub fn new(events: Vec<RepairEvent>) -> Self {
        EventLog { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of repairs hosted by `cluster` so far.
    pub fn failures(&self, cluster: usize) -> usize {
        self.events.iter().filter(|e| e.cluster == cluster).count()
    }

    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        self.events.iter().try_for_each(|e| e.validate(p))
    }

    /// True when no physical node is repaired twice.
    pub fn single_failure_per_node(&self) -> bool {
        self.events.iter().map(|e| (e.cluster, e.node)).all_unique()
    }
}

fn check_collector(p: &SystemParams, collector: &[usize]) -> Result<()> {
    if collector.len() != p.k {
        return Err(Error::InvalidParams(format!(
            "collector has {} clusters, expected k={}",
            collector.len(),
            p.k
        )));
    }
    if collector.iter().any(|&c| c >= p.n) || !collector.iter().all_unique() {
        return Err(Error::InvalidParams(format!("bad collector {collector:?}")));
    }
    Ok(())
}

fn fin(c: usize) -> Capacity {
    Capacity::Finite(c as u64)
}

/// Active vertices of one cluster version.
struct ClusterVersion {
    ins: Vec<usize>,
    outs: Vec<usize>,
    ext: usize,
}

/// Model with whole-cluster cloning. Local helper edges carry `gamma`.
pub fn build_model1(p: &SystemParams, gamma: usize, log: &EventLog, collector: &[usize]) -> Result<FlowGraph> {
    p.validate()?;
    check_collector(p, collector)?;
    log.validate(p)?;

    let mut g = FlowGraph::new();
    let mut serial = 0;
    let mut new_version = |g: &mut FlowGraph, cluster: usize, version: usize| {
        let ins: Vec<usize> = (0..p.m)
            .map(|node| g.add_vertex(VertexTag::In { cluster, node, version }))
            .collect();
        let outs: Vec<usize> = (0..p.m)
            .map(|node| g.add_vertex(VertexTag::Out { cluster, node, version }))
            .collect();
        let ext = g.add_vertex(VertexTag::Ext { cluster, serial });
        serial += 1;
        for j in 0..p.m {
            g.add_edge(ins[j], outs[j], fin(p.alpha));
            g.add_edge(outs[j], ext, fin(p.alpha));
        }
        ClusterVersion { ins, outs, ext }
    };

    let mut active: Vec<ClusterVersion> = (0..p.n).map(|c| new_version(&mut g, c, 0)).collect();
    let mut versions = vec![0usize; p.n];
    for cv in &active {
        for &v in &cv.ins {
            g.add_edge(g.source(), v, Capacity::Infinite);
        }
    }

    for ev in &log.events {
        versions[ev.cluster] += 1;
        let next = new_version(&mut g, ev.cluster, versions[ev.cluster]);
        let old = &active[ev.cluster];
        for j in 0..p.m {
            if j != ev.node {
                g.add_edge(old.outs[j], next.ins[j], Capacity::Infinite);
            }
        }
        let target = next.ins[ev.node];
        for &h in &ev.remote_helpers {
            g.add_edge(active[h].ext, target, fin(p.beta));
        }
        for &h in &ev.local_helpers {
            g.add_edge(old.outs[h], target, fin(gamma));
        }
        active[ev.cluster] = next;
    }

    for &c in collector {
        g.add_edge(active[c].ext, g.sink(), Capacity::Infinite);
    }
    Ok(g)
}

/// Model without cloning, where each remote helper cluster forwards only
/// what its first `ell_prime` nodes send it over `gamma_prime` edges.
/// Local helper edges carry `alpha`.
pub fn build_model2(
    p: &SystemParams,
    ell_prime: usize,
    gamma_prime: usize,
    log: &EventLog,
    collector: &[usize],
) -> Result<FlowGraph> {
    if ell_prime == 0 || ell_prime > p.m {
        return Err(Error::InvalidParams(format!(
            "need 1 <= ell'={ell_prime} <= m={}",
            p.m
        )));
    }
    let contributors: Vec<usize> = (0..ell_prime).collect();
    build_model2_with(p, &contributors, gamma_prime, log, collector)
}

/// As [`build_model2`], with an explicit set of contributing node indices
/// used by every remote helper cluster.
pub fn build_model2_with(
    p: &SystemParams,
    contributors: &[usize],
    gamma_prime: usize,
    log: &EventLog,
    collector: &[usize],
) -> Result<FlowGraph> {
    p.validate()?;
    check_collector(p, collector)?;
    log.validate(p)?;
    if contributors.is_empty()
        || contributors.iter().any(|&j| j >= p.m)
        || !contributors.iter().all_unique()
    {
        return Err(Error::InvalidParams(format!(
            "bad contributor set {contributors:?} for m={}",
            p.m
        )));
    }
    if !log.single_failure_per_node() {
        return Err(Error::InvalidParams(
            "this model allows each node to fail at most once".into(),
        ));
    }

    let mut g = FlowGraph::new();
    let mut serial = 0;
    // outs[c][j] is the active out-vertex of node j in cluster c.
    let mut outs = vec![vec![0usize; p.m]; p.n];
    for (c, row) in outs.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            let vin = g.add_vertex(VertexTag::In { cluster: c, node: j, version: 0 });
            let vout = g.add_vertex(VertexTag::Out { cluster: c, node: j, version: 0 });
            g.add_edge(g.source(), vin, Capacity::Infinite);
            g.add_edge(vin, vout, fin(p.alpha));
            *slot = vout;
        }
    }

    for ev in &log.events {
        let vin = g.add_vertex(VertexTag::In { cluster: ev.cluster, node: ev.node, version: 1 });
        let vout = g.add_vertex(VertexTag::Out { cluster: ev.cluster, node: ev.node, version: 1 });
        g.add_edge(vin, vout, fin(p.alpha));
        for &h in &ev.remote_helpers {
            let ext = g.add_vertex(VertexTag::Ext { cluster: h, serial });
            serial += 1;
            for &j in contributors {
                g.add_edge(outs[h][j], ext, fin(gamma_prime));
            }
            g.add_edge(ext, vin, fin(p.beta));
        }
        for &h in &ev.local_helpers {
            g.add_edge(outs[ev.cluster][h], vin, fin(p.alpha));
        }
        outs[ev.cluster][ev.node] = vout;
    }

    for &c in collector {
        let ext = g.add_vertex(VertexTag::Ext { cluster: c, serial });
        serial += 1;
        for &src in &outs[c] {
            g.add_edge(src, ext, fin(p.alpha));
        }
        g.add_edge(ext, g.sink(), Capacity::Infinite);
    }
    Ok(g)
}

/// `count` helper clusters for a repair in `cluster`: the first `min(count,
/// cluster)` earlier clusters, then untouched clusters after `cluster`.
fn staged_remote(cluster: usize, count: usize) -> Vec<usize> {
    let earlier = count.min(cluster);
    (0..earlier)
        .chain((cluster + 1..).take(count - earlier))
        .collect()
}

/// History that makes the file-size bound tight: nodes `ell..m` of clusters
/// `0..k` fail in order, each repaired from local nodes `0..ell` and from
/// previously rebuilt clusters first. Collector is clusters `0..k`.
pub fn adversarial_log_thm2(p: &SystemParams) -> Result<(EventLog, Vec<usize>)> {
    p.validate()?;
    let mut events = Vec::new();
    for i in 0..p.k {
        for node in p.ell..p.m {
            events.push(RepairEvent {
                cluster: i,
                node,
                local_helpers: (0..p.ell).collect(),
                remote_helpers: staged_remote(i, p.d),
            });
        }
    }
    Ok((EventLog::new(events), (0..p.k).collect()))
}

/// As [`adversarial_log_thm2`], but the last collected cluster loses one
/// more node (node 0) after the others. Its later repairs use local helpers
/// `1..=ell`, so node 0's original content only reaches them through the
/// `gamma` edges of the first repair.
pub fn adversarial_log_thm5(p: &SystemParams) -> Result<(EventLog, Vec<usize>)> {
    p.validate()?;
    if p.d == 0 {
        return Err(Error::InvalidParams("needs d > 0".into()));
    }
    let (mut log, collector) = adversarial_log_thm2(p)?;
    let last = p.k - 1;
    log.events.retain(|e| e.cluster != last);
    let order = (p.ell..p.m).chain(std::iter::once(0));
    for (t, node) in order.enumerate() {
        let local_helpers = if t == 0 {
            (0..p.ell).collect()
        } else {
            (1..=p.ell).collect()
        };
        log.events.push(RepairEvent {
            cluster: last,
            node,
            local_helpers,
            remote_helpers: staged_remote(last, p.d),
        });
    }
    Ok((log, collector))
}

/// History for the remote-helper bound in model 2: nodes `ell..m` of
/// clusters `0..k` fail once each; cluster `i` is helped by clusters
/// `0..=d` except itself.
pub fn adversarial_log_thm6(p: &SystemParams) -> Result<(EventLog, Vec<usize>)> {
    p.validate()?;
    if p.d < p.k {
        return Err(Error::InvalidParams(format!("needs d >= k, got d={} k={}", p.d, p.k)));
    }
    if p.alpha < (p.d - p.k + 2) * p.beta {
        return Err(Error::InvalidParams(format!(
            "needs alpha >= (d-k+2)*beta = {}",
            (p.d - p.k + 2) * p.beta
        )));
    }
    let mut events = Vec::new();
    for i in 0..p.k {
        for node in p.ell..p.m {
            events.push(RepairEvent {
                cluster: i,
                node,
                local_helpers: (0..p.ell).collect(),
                remote_helpers: (0..=p.d).filter(|&c| c != i).collect(),
            });
        }
    }
    Ok((EventLog::new(events), (0..p.k).collect()))
}

/// Value of the local-helper cut in [`adversarial_log_thm5`] with local
/// capacity `gamma`. The min-cut of that history is the smaller of this and
/// `B*` when `ell >= 1`.
pub fn local_cut_value(p: &SystemParams, gamma: usize) -> Result<usize> {
    let b = file_size_bound(p)?;
    let tail = p.alpha.min((p.d + 1).saturating_sub(p.k) * p.beta);
    Ok(b - p.alpha + tail + gamma)
}

/// Value of the remote-helper cut in [`adversarial_log_thm6`] under model 2
/// with `ell' = m`. This is one cut, so it upper-bounds the min-cut.
pub fn remote_cut_value(p: &SystemParams, gamma_prime: usize) -> usize {
    let base = (p.d + 1 - p.k) * p.beta;
    let per: usize = (1..=p.k)
        .map(|i| p.alpha.min(base + (p.k - i) * (p.m - p.ell) * gamma_prime))
        .sum();
    p.k * p.ell * p.alpha + (p.m - p.ell) * per
}

/// Draws a valid repair history of `repairs` events. The first `n*m`
/// failures sweep every node once in round-robin order; later targets are
/// uniform. Helper sets are uniform subsets of the right size.
pub fn random_log<R: Rng + ?Sized>(p: &SystemParams, repairs: usize, rng: &mut R) -> EventLog {
    let mut events = Vec::with_capacity(repairs);
    for t in 0..repairs {
        let (cluster, node) = if t < p.n * p.m {
            (t % p.n, (t / p.n) % p.m)
        } else {
            (rng.gen_range(0..p.n), rng.gen_range(0..p.m))
        };
        let locals: Vec<usize> = (0..p.m).filter(|&j| j != node).collect();
        let remotes: Vec<usize> = (0..p.n).filter(|&c| c != cluster).collect();
        let mut local_helpers: Vec<usize> = locals.choose_multiple(rng, p.ell).copied().collect();
        let mut remote_helpers: Vec<usize> = remotes.choose_multiple(rng, p.d).copied().collect();
        local_helpers.sort_unstable();
        remote_helpers.sort_unstable();
        events.push(RepairEvent { cluster, node, local_helpers, remote_helpers });
    }
    EventLog::new(events)
}

/// Uniform k-subset of clusters, sorted.
pub fn random_collector<R: Rng + ?Sized>(p: &SystemParams, rng: &mut R) -> Vec<usize> {
    let all: Vec<usize> = (0..p.n).collect();
    let mut c: Vec<usize> = all.choose_multiple(rng, p.k).copied().collect();
    c.sort_unstable();
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Random histories checked in addition to the adversarial one.
    pub random_logs: usize,
    /// Repairs per random history.
    pub repairs: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            random_logs: 16,
            repairs: 12,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CapacityReport {
    pub params: SystemParams,
    pub gamma: usize,
    pub gamma_star: usize,
    #[serde(rename = "B_star")]
    pub b_star: u64,
    /// Min-cut of the adversarial history.
    pub mincut: u64,
    pub tight: bool,
    pub random_logs: usize,
    /// Smallest min-cut over the random histories, if any were drawn.
    pub random_min_cut: Option<u64>,
    /// False when `gamma >= gamma_star` but some random history cut below `B*`.
    pub converse_holds: bool,
}

/// Checks whether local capacity `gamma` preserves the capacity `B*`.
pub fn verify_capacity(p: &SystemParams, gamma: usize) -> Result<CapacityReport> {
    verify_capacity_with(p, gamma, VerifyOptions::default())
}

pub fn verify_capacity_with(p: &SystemParams, gamma: usize, opts: VerifyOptions) -> Result<CapacityReport> {
    p.validate()?;
    if gamma > p.alpha {
        return Err(Error::InvalidParams(format!("gamma={gamma} exceeds alpha={}", p.alpha)));
    }
    let b_star = file_size_bound(p)? as u64;
    let gs = gamma_star(p)?;
    let (log, collector) = adversarial_log_thm5(p)?;
    let mincut = build_model1(p, gamma, &log, &collector)?.max_flow();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_min_cut: Option<u64> = None;
    for _ in 0..opts.random_logs {
        let log = random_log(p, opts.repairs, &mut rng);
        let collector = random_collector(p, &mut rng);
        let cut = build_model1(p, gamma, &log, &collector)?.max_flow();
        random_min_cut = Some(random_min_cut.map_or(cut, |m| m.min(cut)));
    }
    let converse_holds = gamma < gs || random_min_cut.map_or(true, |c| c >= b_star);

    Ok(CapacityReport {
        params: *p,
        gamma,
        gamma_star: gs,
        b_star,
        mincut,
        tight: mincut >= b_star,
        random_logs: opts.random_logs,
        random_min_cut,
        converse_holds,
    })
}
