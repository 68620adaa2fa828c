//! Functional-repair generalized regenerating code for `ell = m - 1`.
//!
//! Nodes `0..m-1` of each cluster start with `m - 1` MDS stripes and the last
//! node holds their sum plus a symbol block of a classical functional-repair
//! code `C`, so the cluster's column sum is exactly its `C` content.
//!
//! `C` is random linear network coding with seeded coefficients: cluster
//! `i`'s column sum is `K_i x` for the `C` message `x`, where `K_i` starts
//! as a seeded random matrix and is rewritten by every repair in that
//! cluster. Since each coefficient is a function of the seed and the repair
//! position alone, a collector that holds the history can replay every
//! `K_i`, decode `x` from `k` column sums, and then rewind the repairs to
//! recover the original MDS stripes.

use std::io::{BufRead, Write};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::bounds::{repair_sum, SystemParams};
use crate::classical::{MdsCode, NodeVector};
use crate::error::{Error, Result};
use crate::exact::ClusterArray;
use crate::gf::Symbol;
use crate::linalg::Matrix;
use crate::prf::coefficient_matrix;

const TAG_INIT: u64 = 0;
const TAG_HELPER: u64 = 1;
const TAG_REPLACE: u64 = 2;

/// One repair as seen by a collector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRecord {
    /// 1-based position in the history.
    pub t: u64,
    pub cluster: usize,
    pub node: usize,
    /// Remote helper clusters in the order their payloads were combined.
    pub helpers: Vec<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairHistory {
    pub records: Vec<RepairRecord>,
}

impl RepairHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut records = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(RepairHistory { records })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalConfig {
    pub seed: u64,
    /// Use all `d` remote helpers in the component code instead of
    /// `min(d, k)`.
    pub full_degree: bool,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        FunctionalConfig {
            seed: 0,
            full_degree: false,
        }
    }
}

/// Static description shared by encoder, repairer and collector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalCode {
    pub params: SystemParams,
    /// Remote helpers whose payloads the component code uses.
    pub d_prime: usize,
    pub seed: u64,
}

impl FunctionalCode {
    pub fn new(p: &SystemParams, cfg: FunctionalConfig) -> Result<Self> {
        p.validate()?;
        if p.ell + 1 != p.m {
            return Err(Error::InvalidParams("the functional construction requires ell = m-1".into()));
        }
        if p.d < p.k {
            return Err(Error::InvalidParams(format!(
                "functional construction needs d >= k, got d={} k={}",
                p.d, p.k
            )));
        }
        let d_prime = if cfg.full_degree { p.d } else { p.d.min(p.k) };
        Ok(FunctionalCode {
            params: *p,
            d_prime,
            seed: cfg.seed,
        })
    }

    /// Message length of the component code.
    pub fn component_size(&self) -> usize {
        let p = &self.params;
        repair_sum(p.k, self.d_prime, p.alpha, p.beta, 0)
    }

    pub fn file_size(&self) -> usize {
        let p = &self.params;
        p.ell * p.k * p.alpha + self.component_size()
    }

    fn initial_coeffs(&self, cluster: usize) -> Matrix {
        let p = &self.params;
        coefficient_matrix(p.field_width, p.alpha, self.component_size(), self.seed, &[TAG_INIT, cluster as u64])
    }

    fn helper_coeffs(&self, rec: &RepairRecord, helper: usize) -> Matrix {
        let p = &self.params;
        coefficient_matrix(p.field_width, p.beta, p.alpha, rec.seed, &[TAG_HELPER, rec.t, helper as u64])
    }

    fn replace_coeffs(&self, rec: &RepairRecord) -> Matrix {
        let p = &self.params;
        coefficient_matrix(p.field_width, p.alpha, self.d_prime * p.beta, rec.seed, &[TAG_REPLACE, rec.t])
    }

    /// Coefficients of every cluster's column sum after replaying
    /// `history`, plus the pre-repair coefficients of each repaired cluster.
    pub fn replay(&self, history: &RepairHistory) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
        let mut k: Vec<Matrix> = (0..self.params.n).map(|i| self.initial_coeffs(i)).collect();
        let mut before = Vec::with_capacity(history.len());
        for rec in &history.records {
            self.check_record(rec)?;
            let parts: Vec<Matrix> = rec.helpers[..self.d_prime]
                .iter()
                .map(|&h| self.helper_coeffs(rec, h).mul(&k[h]))
                .collect::<Result<_>>()?;
            let stacked = Matrix::vstack_all(self.params.field_width, self.component_size(), &parts)?;
            let fresh = self.replace_coeffs(rec).mul(&stacked)?;
            before.push(std::mem::replace(&mut k[rec.cluster], fresh));
        }
        Ok((k, before))
    }

    fn check_record(&self, rec: &RepairRecord) -> Result<()> {
        let p = &self.params;
        if rec.cluster >= p.n || rec.node >= p.m {
            return Err(Error::HelperSet(format!(
                "repair target ({}, {}) out of range",
                rec.cluster, rec.node
            )));
        }
        if rec.helpers.len() < self.d_prime || rec.helpers.len() > p.d {
            return Err(Error::HelperSet(format!(
                "need between {} and {} remote helpers, got {}",
                self.d_prime,
                p.d,
                rec.helpers.len()
            )));
        }
        if !rec.helpers.iter().all_unique() || rec.helpers.iter().any(|&h| h >= p.n || h == rec.cluster) {
            return Err(Error::HelperSet(format!(
                "bad remote helper set {:?} for cluster {}",
                rec.helpers, rec.cluster
            )));
        }
        Ok(())
    }
}

/// Live system: node contents plus the history that produced them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalState {
    pub code: FunctionalCode,
    pub nodes: ClusterArray,
    pub history: RepairHistory,
}

impl FunctionalState {
    pub fn t(&self) -> u64 {
        self.history.len() as u64
    }

    pub fn column_sum(&self, cluster: usize) -> NodeVector {
        column_sum(&self.nodes.nodes[cluster], self.code.params.alpha)
    }
}

fn column_sum(cluster: &[NodeVector], alpha: usize) -> NodeVector {
    let mut s = vec![0; alpha];
    for y in cluster {
        for (a, b) in s.iter_mut().zip(y) {
            *a ^= b;
        }
    }
    s
}

/// Encodes `file` (length `code.file_size()`).
pub fn func_encode(code: &FunctionalCode, file: &[Symbol]) -> Result<FunctionalState> {
    let p = &code.params;
    if file.len() != code.file_size() {
        return Err(Error::Length {
            expected: code.file_size(),
            got: file.len(),
        });
    }
    let mds_len = p.k * p.alpha;
    let mds = MdsCode::new(p.n, p.k, p.alpha, p.field_width)?;
    let stripes: Vec<Vec<NodeVector>> = file[..p.ell * mds_len]
        .chunks(mds_len)
        .map(|c| mds.encode(c))
        .collect::<Result<_>>()?;
    let x = &file[p.ell * mds_len..];
    let mut nodes = ClusterArray::zeros(p.field_width, p.n, p.m, p.alpha);
    for i in 0..p.n {
        let mut last = code.initial_coeffs(i).mul_vec(x)?;
        for (j, stripe) in stripes.iter().enumerate() {
            nodes.nodes[i][j] = stripe[i].clone();
            for (a, b) in last.iter_mut().zip(&stripe[i]) {
                *a ^= b;
            }
        }
        nodes.nodes[i][p.m - 1] = last;
    }
    Ok(FunctionalState {
        code: code.clone(),
        nodes,
        history: RepairHistory::default(),
    })
}

/// Repairs node `failed = (cluster, node)` from the other `m - 1` nodes of
/// its cluster and the remote clusters `remote` (the first `d'` are used).
pub fn func_repair(state: &mut FunctionalState, failed: (usize, usize), remote: &[usize]) -> Result<()> {
    let code = state.code.clone();
    let p = &code.params;
    let rec = RepairRecord {
        t: state.t() + 1,
        cluster: failed.0,
        node: failed.1,
        helpers: remote.to_vec(),
        seed: code.seed,
    };
    code.check_record(&rec)?;
    let mut received = Vec::with_capacity(code.d_prime * p.beta);
    for &h in &rec.helpers[..code.d_prime] {
        let s = state.column_sum(h);
        received.extend(code.helper_coeffs(&rec, h).mul_vec(&s)?);
    }
    let regenerated = code.replace_coeffs(&rec).mul_vec(&received)?;
    let cl = &state.nodes.nodes[failed.0];
    let mut fresh = regenerated;
    for (j, y) in cl.iter().enumerate() {
        if j != failed.1 {
            for (a, b) in fresh.iter_mut().zip(y) {
                *a ^= b;
            }
        }
    }
    state.nodes.nodes[failed.0][failed.1] = fresh;
    state.history.records.push(rec);
    Ok(())
}

/// Recovers the file from `collector` (k distinct clusters) using only
/// their current contents and the repair history.
pub fn func_collect(
    code: &FunctionalCode,
    clusters: &[(usize, &[NodeVector])],
    history: &RepairHistory,
) -> Result<Vec<Symbol>> {
    let p = &code.params;
    if clusters.len() < p.k {
        return Err(Error::Decode(format!("need {} clusters, got {}", p.k, clusters.len())));
    }
    let chosen = &clusters[..p.k];
    if !chosen.iter().map(|c| c.0).all_unique() || chosen.iter().any(|c| c.0 >= p.n) {
        return Err(Error::Decode("cluster indices must be distinct and in range".into()));
    }
    if chosen.iter().any(|c| c.1.len() != p.m || c.1.iter().any(|v| v.len() != p.alpha)) {
        return Err(Error::Decode("cluster content has the wrong shape".into()));
    }
    let (coeffs, before) = code.replay(history)?;

    // Component message from the k column sums.
    let sel: Vec<&Matrix> = chosen.iter().map(|c| &coeffs[c.0]).collect();
    let stacked = Matrix::vstack_all(p.field_width, code.component_size(), sel)?;
    let sums: Vec<Symbol> = chosen.iter().flat_map(|c| column_sum(c.1, p.alpha)).collect();
    let x = stacked.solve_right(&sums).map_err(|_| {
        Error::Decode("component decode failed: collected coefficients are rank deficient".into())
    })?;

    // Rewind the repairs that touched collected clusters.
    let mut local: Vec<Vec<NodeVector>> = chosen.iter().map(|c| c.1.to_vec()).collect();
    for (rec, k_before) in history.records.iter().zip(&before).rev() {
        let Some(slot) = chosen.iter().position(|c| c.0 == rec.cluster) else {
            continue;
        };
        let mut prev = k_before.mul_vec(&x)?;
        for (j, y) in local[slot].iter().enumerate() {
            if j != rec.node {
                for (a, b) in prev.iter_mut().zip(y) {
                    *a ^= b;
                }
            }
        }
        local[slot][rec.node] = prev;
    }

    let mds = MdsCode::new(p.n, p.k, p.alpha, p.field_width)?;
    let mut file = Vec::with_capacity(code.file_size());
    for j in 0..p.ell {
        let nodes: Vec<(usize, &[Symbol])> = chosen
            .iter()
            .zip(&local)
            .map(|(c, cl)| (c.0, cl[j].as_slice()))
            .collect();
        file.extend(mds.decode(&nodes)?);
    }
    file.extend(x);
    Ok(file)
}

/// Checks that every column sum equals its replayed coefficients times one
/// common component message, and that every `k` clusters determine it.
pub fn column_sum_invariant(state: &FunctionalState) -> Result<bool> {
    let code = &state.code;
    let p = &code.params;
    let (coeffs, _) = code.replay(&state.history)?;
    let all = Matrix::vstack_all(p.field_width, code.component_size(), &coeffs)?;
    let sums: Vec<Symbol> = (0..p.n).flat_map(|i| state.column_sum(i)).collect();
    let Ok(x) = all.solve_right(&sums) else {
        return Ok(false);
    };
    if all.mul_vec(&x)? != sums {
        return Ok(false);
    }
    for sub in (0..p.n).combinations(p.k) {
        let sel: Vec<&Matrix> = sub.iter().map(|&i| &coeffs[i]).collect();
        if Matrix::vstack_all(p.field_width, code.component_size(), sel)?.rank() < code.component_size() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::file_size_bound;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(p: SystemParams, seed: u64) -> (FunctionalState, Vec<Symbol>) {
        let code = FunctionalCode::new(&p, FunctionalConfig { seed, full_degree: false }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let f = p.field_width.field();
        let file: Vec<Symbol> = (0..code.file_size()).map(|_| f.random(&mut rng)).collect();
        (func_encode(&code, &file).unwrap(), file)
    }

    fn collect_all(st: &FunctionalState, file: &[Symbol]) {
        let p = &st.code.params;
        for sub in (0..p.n).combinations(p.k) {
            let cl: Vec<(usize, &[NodeVector])> = sub.iter().map(|&i| (i, st.nodes.cluster(i))).collect();
            assert_eq!(func_collect(&st.code, &cl, &st.history).unwrap(), file, "{sub:?}");
        }
    }

    #[test]
    fn file_size_matches_bound_when_d_equals_k() {
        let p = SystemParams::new(5, 3, 3, 3, 1, 3, 2);
        let code = FunctionalCode::new(&p, FunctionalConfig::default()).unwrap();
        assert_eq!(code.file_size(), file_size_bound(&p).unwrap());
        assert_eq!(code.file_size(), 2 * 9 + 6);
    }

    #[test]
    fn reduced_degree_shrinks_file_when_d_exceeds_k() {
        let p = SystemParams::new(5, 2, 4, 4, 1, 2, 1);
        let short = FunctionalCode::new(&p, FunctionalConfig::default()).unwrap();
        let full = FunctionalCode::new(&p, FunctionalConfig { seed: 0, full_degree: true }).unwrap();
        assert_eq!(full.file_size(), file_size_bound(&p).unwrap());
        assert!(short.file_size() < full.file_size());
    }

    #[test]
    fn requires_ell_m_minus_one() {
        let p = SystemParams::new(5, 3, 3, 3, 1, 3, 1);
        let e = FunctionalCode::new(&p, FunctionalConfig::default()).unwrap_err();
        assert!(e.to_string().contains("ell = m-1"));
    }

    #[test]
    fn no_repairs_plain_decode() {
        let (st, file) = setup(SystemParams::new(4, 2, 2, 2, 1, 2, 1), 1);
        assert!(column_sum_invariant(&st).unwrap());
        collect_all(&st, &file);
    }

    #[test]
    fn single_node_cluster_is_bare_component() {
        let (mut st, file) = setup(SystemParams::new(4, 2, 3, 3, 1, 1, 0), 2);
        func_repair(&mut st, (0, 0), &[1, 2, 3]).unwrap();
        collect_all(&st, &file);
    }

    #[test]
    fn one_repair_every_collector() {
        let (mut st, file) = setup(SystemParams::new(4, 2, 2, 2, 1, 2, 1), 3);
        func_repair(&mut st, (1, 0), &[0, 3]).unwrap();
        assert!(column_sum_invariant(&st).unwrap());
        collect_all(&st, &file);
    }

    #[test]
    fn same_node_twice() {
        let (mut st, file) = setup(SystemParams::new(4, 2, 2, 2, 1, 2, 1), 4);
        func_repair(&mut st, (1, 1), &[0, 3]).unwrap();
        func_repair(&mut st, (1, 1), &[2, 3]).unwrap();
        collect_all(&st, &file);
    }

    #[test]
    fn many_random_repairs_and_replay() {
        let p = SystemParams::new(5, 3, 3, 3, 1, 3, 2);
        let (mut st, file) = setup(p, 5);
        let (mut twin, _) = setup(p, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..40 {
            let c = rng.gen_range(0..p.n);
            let node = rng.gen_range(0..p.m);
            let others: Vec<usize> = (0..p.n).filter(|&x| x != c).collect();
            let helpers: Vec<usize> = rand::seq::index::sample(&mut rng, others.len(), p.d)
                .iter()
                .map(|i| others[i])
                .collect();
            func_repair(&mut st, (c, node), &helpers).unwrap();
            func_repair(&mut twin, (c, node), &helpers).unwrap();
            assert!(column_sum_invariant(&st).unwrap());
        }
        assert_eq!(st, twin);
        collect_all(&st, &file);
    }

    #[test]
    fn history_jsonl_round_trip() {
        let (mut st, _) = setup(SystemParams::new(4, 2, 2, 2, 1, 2, 1), 6);
        func_repair(&mut st, (0, 1), &[1, 2]).unwrap();
        func_repair(&mut st, (3, 0), &[0, 1]).unwrap();
        let mut buf = Vec::new();
        st.history.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("{\"t\":1,\"cluster\":0,\"node\":1,\"helpers\":[1,2]"));
        assert_eq!(RepairHistory::read_jsonl(buf.as_slice()).unwrap(), st.history);
    }

    #[test]
    fn bad_helpers_rejected() {
        let (mut st, _) = setup(SystemParams::new(4, 2, 2, 2, 1, 2, 1), 7);
        assert!(func_repair(&mut st, (0, 1), &[0, 2]).is_err());
        assert!(func_repair(&mut st, (0, 1), &[1]).is_err());
        assert!(st.history.is_empty());
    }
}
