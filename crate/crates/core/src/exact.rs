//! Exact-repair generalized regenerating code.
//!
//! The file is cut into `m` stripes. The first `ell` stripes are encoded with
//! `[n, k]` MDS array codes and the remaining `m - ell` with one classical
//! regenerating code (product-matrix MBR, or MSR at `d = 2k-2`). Cluster `i`
//! holds row block `i` of every codeword, mixed by an invertible `m x m`
//! matrix `A` whose top `ell` rows generate an `[m, ell]` MDS code:
//!
//! `Y_{i,j} = C_mds^(i) e_j + C_regen^(i) f_j`
//!
//! where `e_j`, `f_j` are column `j` of the top and bottom blocks of `A`.
//!
//! A failed node `(i, j)` is rebuilt in two parts. Any `ell` local nodes
//! `L` give `Y_L w = C_mds^(i) e_j + C_regen^(i) F_L w` with
//! `w = E_L^{-1} e_j`, which leaves the regenerating part off by
//! `C_regen^(i) g` with `g = f_j - F_L w`. Each remote cluster strips `A`
//! off its own content, forms the combined codeword `C_regen g` (itself a
//! codeword of the component code), and sends that code's `beta` repair
//! symbols for node `i`.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::bounds::{file_size_bound, PointKind, SystemParams};
use crate::classical::{MdsCode, NodeVector, PmCode, PmCodeSpec};
use crate::error::{Error, Result};
use crate::gf::{FieldWidth, Symbol};
use crate::linalg::Matrix;

/// Contents of every node: `nodes[i][j]` is node `j` of cluster `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterArray {
    pub width: FieldWidth,
    pub alpha: usize,
    pub nodes: Vec<Vec<NodeVector>>,
}

impl ClusterArray {
    pub fn zeros(width: FieldWidth, n: usize, m: usize, alpha: usize) -> Self {
        ClusterArray {
            width,
            alpha,
            nodes: vec![vec![vec![0; alpha]; m]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn m(&self) -> usize {
        self.nodes.first().map_or(0, Vec::len)
    }

    pub fn node(&self, cluster: usize, node: usize) -> &[Symbol] {
        &self.nodes[cluster][node]
    }

    pub fn cluster(&self, cluster: usize) -> &[NodeVector] {
        &self.nodes[cluster]
    }

    /// Little-endian symbols, cluster-major, then node, then position.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for cl in &self.nodes {
            for nv in cl {
                out.extend(symbols_to_bytes(self.width, nv));
            }
        }
        out
    }

    pub fn from_bytes(width: FieldWidth, n: usize, m: usize, alpha: usize, bytes: &[u8]) -> Result<Self> {
        let syms = bytes_to_symbols(width, bytes)?;
        if syms.len() != n * m * alpha {
            return Err(Error::Length {
                expected: n * m * alpha,
                got: syms.len(),
            });
        }
        let nodes = syms
            .chunks(m * alpha)
            .map(|cl| cl.chunks(alpha).map(<[Symbol]>::to_vec).collect())
            .collect();
        Ok(ClusterArray { width, alpha, nodes })
    }
}

pub fn symbols_to_bytes(width: FieldWidth, syms: &[Symbol]) -> Vec<u8> {
    match width {
        FieldWidth::W8 => syms.iter().map(|&s| s as u8).collect(),
        FieldWidth::W16 => syms.iter().flat_map(|s| s.to_le_bytes()).collect(),
    }
}

pub fn bytes_to_symbols(width: FieldWidth, bytes: &[u8]) -> Result<Vec<Symbol>> {
    match width {
        FieldWidth::W8 => Ok(bytes.iter().map(|&b| b as Symbol).collect()),
        FieldWidth::W16 => {
            if bytes.len() % 2 != 0 {
                return Err(Error::Format("odd byte count for 16-bit symbols".into()));
            }
            Ok(bytes
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect())
        }
    }
}

/// How the stripes are arranged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// `ell` MDS stripes and `m - ell` regenerating stripes mixed by `A`.
    Mixed,
    /// `m` independent MSR codes, `A = I`, no local help.
    StackedMsr,
}

#[derive(Clone, Debug)]
pub struct GrcExactCode {
    params: SystemParams,
    point: PointKind,
    layout: Layout,
    /// MDS stripes actually mixed in; 0 for the stacked layout.
    ell_int: usize,
    a: Matrix,
    a_inv: Matrix,
    mds: MdsCode,
    regen: PmCode,
}

impl GrcExactCode {
    /// Builds the code with `A` the `m x m` Vandermonde matrix on `1..=m`.
    ///
    /// Supported: MBR with `d >= k`, and MSR with `d = 2k-2`.
    pub fn build(p: &SystemParams) -> Result<Self> {
        p.validate()?;
        let pts: Vec<Symbol> = (1..=p.m as u32).map(|x| x as Symbol).collect();
        let a = Matrix::vandermonde(p.field_width, &pts, p.m)?;
        Self::with_matrix(p, a)
    }

    /// Builds the code with a caller-chosen mixing matrix.
    pub fn with_matrix(p: &SystemParams, a: Matrix) -> Result<Self> {
        p.validate()?;
        let point = Self::classify(p)?;
        Self::assemble(p, point, Layout::Mixed, p.ell, a)
    }

    /// `m` stacked MSR codes; local helpers are not used.
    pub fn stacked_msr(p: &SystemParams) -> Result<Self> {
        p.validate()?;
        if !p.is_msr() || p.d < p.k {
            return Err(Error::Unsupported(
                "stacking needs parameters at the MSR point with d >= k".into(),
            ));
        }
        let a = Matrix::identity(p.field_width, p.m);
        Self::assemble(p, PointKind::Msr, Layout::StackedMsr, 0, a)
    }

    fn classify(p: &SystemParams) -> Result<PointKind> {
        let unsupported = || {
            Error::Unsupported(format!(
                "exact repair is available at MBR with d >= k, or at MSR with d = 2k-2; got n={} k={} d={} alpha={} beta={}",
                p.n, p.k, p.d, p.alpha, p.beta
            ))
        };
        if p.d == 0 || p.d < p.k {
            return Err(unsupported());
        }
        if p.is_mbr() {
            Ok(PointKind::Mbr)
        } else if p.is_msr() && p.k >= 2 && p.d == 2 * p.k - 2 {
            Ok(PointKind::Msr)
        } else {
            Err(unsupported())
        }
    }

    fn assemble(p: &SystemParams, point: PointKind, layout: Layout, ell_int: usize, a: Matrix) -> Result<Self> {
        let w = p.field_width;
        if a.rows() != p.m || a.cols() != p.m || a.width() != w {
            return Err(Error::InvalidParams(format!("A must be {0}x{0} over {w}", p.m)));
        }
        let a_inv = a.invert()?;
        // Top ell rows must generate an [m, ell] MDS code.
        let top: Vec<usize> = (0..ell_int).collect();
        let e = a.select_rows(&top);
        for cols in (0..p.m).combinations(ell_int) {
            if e.select_cols(&cols).rank() < ell_int {
                return Err(Error::InvalidParams(format!(
                    "top {ell_int} rows of A are not MDS: columns {cols:?} are dependent"
                )));
            }
        }
        let spec = match point {
            PointKind::Mbr => PmCodeSpec::mbr(p.n, p.k, p.d, p.beta, w)?,
            PointKind::Msr => PmCodeSpec::msr(p.n, p.k, p.d, p.beta, w)?,
            PointKind::Interior => unreachable!("classify never yields interior points"),
        };
        debug_assert_eq!(spec.alpha(), p.alpha);
        let code = GrcExactCode {
            params: *p,
            point,
            layout,
            ell_int,
            mds: MdsCode::new(p.n, p.k, p.alpha, w)?,
            regen: PmCode::new(spec)?,
            a,
            a_inv,
        };
        // The regenerating correction must never vanish, or remote help
        // would carry nothing for some (node, local set) pair.
        for j in 0..p.m {
            for local in (0..p.m).filter(|&x| x != j).combinations(ell_int) {
                let (_, g) = code.local_weights(j, &local)?;
                if g.iter().all(|&x| x == 0) {
                    return Err(Error::InvalidParams(format!(
                        "remote correction vanishes for node {j} with local set {local:?}"
                    )));
                }
            }
        }
        if code.file_size() != file_size_bound(p)? {
            return Err(Error::InvalidParams("file size does not reach B*".into()));
        }
        Ok(code)
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn point(&self) -> PointKind {
        self.point
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn component(&self) -> &PmCode {
        &self.regen
    }

    /// Number of local helpers whose content the repair actually uses.
    pub fn local_used(&self) -> usize {
        self.ell_int
    }

    pub fn file_size(&self) -> usize {
        let p = &self.params;
        self.ell_int * p.k * p.alpha + (p.m - self.ell_int) * self.regen.spec().file_size()
    }

    /// `(w, g)` for repairing node `j` from local set `local`.
    fn local_weights(&self, j: usize, local: &[usize]) -> Result<(Vec<Symbol>, Vec<Symbol>)> {
        let l = self.ell_int;
        let m = self.params.m;
        let top: Vec<usize> = (0..l).collect();
        let bottom: Vec<usize> = (l..m).collect();
        let used = &local[..l];
        let e_l = self.a.select_rows(&top).select_cols(used);
        let e_j: Vec<Symbol> = (0..l).map(|r| self.a.get(r, j)).collect();
        let w = if l == 0 { Vec::new() } else { e_l.solve_right(&e_j)? };
        let f_l = self.a.select_rows(&bottom).select_cols(used);
        let f_hat = if l == 0 { vec![0; m - l] } else { f_l.mul_vec(&w)? };
        let g: Vec<Symbol> = bottom.iter().zip(&f_hat).map(|(&r, &fh)| self.a.get(r, j) ^ fh).collect();
        Ok((w, g))
    }

    /// `[C_mds^(i) C_regen^(i)]` for one cluster: column `t` is the
    /// cluster's slice of stripe `t`.
    fn unmix(&self, cluster: &[NodeVector]) -> Vec<NodeVector> {
        let f = self.params.field_width.field();
        let m = self.params.m;
        let mut out = vec![vec![0; self.params.alpha]; m];
        for (t, col) in out.iter_mut().enumerate() {
            for (j, y) in cluster.iter().enumerate() {
                f.axpy(col, self.a_inv.get(j, t), y);
            }
        }
        out
    }

    fn check_local(&self, failed: (usize, usize), local: &[usize]) -> Result<()> {
        let p = &self.params;
        if local.len() != p.ell || !local.iter().all_unique() || local.iter().any(|&h| h >= p.m || h == failed.1) {
            return Err(Error::HelperSet(format!(
                "need {} distinct local helpers other than node {}, got {local:?}",
                p.ell, failed.1
            )));
        }
        Ok(())
    }
}

/// Encodes a file of exactly `B*` symbols.
pub fn grc_encode(code: &GrcExactCode, file: &[Symbol]) -> Result<ClusterArray> {
    let p = &code.params;
    if file.len() != code.file_size() {
        return Err(Error::Length {
            expected: code.file_size(),
            got: file.len(),
        });
    }
    let l = code.ell_int;
    let mds_len = p.k * p.alpha;
    let regen_len = code.regen.spec().file_size();
    let mut stripes: Vec<Vec<NodeVector>> = Vec::with_capacity(p.m);
    for t in 0..l {
        stripes.push(code.mds.encode(&file[t * mds_len..(t + 1) * mds_len])?);
    }
    let rest = &file[l * mds_len..];
    for chunk in rest.chunks(regen_len) {
        stripes.push(code.regen.encode(chunk)?);
    }
    let f = p.field_width.field();
    let mut out = ClusterArray::zeros(p.field_width, p.n, p.m, p.alpha);
    for i in 0..p.n {
        for j in 0..p.m {
            let y = &mut out.nodes[i][j];
            for (t, stripe) in stripes.iter().enumerate() {
                f.axpy(y, code.a.get(t, j), &stripe[i]);
            }
        }
    }
    Ok(out)
}

/// The `beta` symbols remote cluster `helper` sends toward repairing node
/// `failed = (cluster, node)` when the replacement uses local set `local`.
pub fn remote_helper_data(
    code: &GrcExactCode,
    helper_content: &[NodeVector],
    helper: usize,
    failed: (usize, usize),
    local: &[usize],
) -> Result<Vec<Symbol>> {
    let p = &code.params;
    if helper == failed.0 || helper >= p.n {
        return Err(Error::HelperSet(format!(
            "cluster {helper} cannot help repair a node of cluster {}",
            failed.0
        )));
    }
    if helper_content.len() != p.m || helper_content.iter().any(|v| v.len() != p.alpha) {
        return Err(Error::Length {
            expected: p.m * p.alpha,
            got: helper_content.iter().map(Vec::len).sum(),
        });
    }
    code.check_local(failed, local)?;
    let (_, g) = code.local_weights(failed.1, local)?;
    let parts = code.unmix(helper_content);
    let f = p.field_width.field();
    let mut combined = vec![0; p.alpha];
    for (gt, part) in g.iter().zip(&parts[code.ell_int..]) {
        f.axpy(&mut combined, *gt, part);
    }
    code.regen.helper_symbols(&combined, failed.0)
}

/// Rebuilds node `failed` from `ell` local helpers `(node index, content)`
/// and `d` remote payloads `(cluster index, symbols)`.
pub fn grc_repair(
    code: &GrcExactCode,
    failed: (usize, usize),
    local: &[(usize, &[Symbol])],
    remote: &[(usize, Vec<Symbol>)],
) -> Result<NodeVector> {
    let p = &code.params;
    let idx: Vec<usize> = local.iter().map(|x| x.0).collect();
    code.check_local(failed, &idx)?;
    if remote.len() != p.d {
        return Err(Error::HelperSet(format!(
            "need {} remote payloads, got {}",
            p.d,
            remote.len()
        )));
    }
    if let Some(x) = local.iter().find(|x| x.1.len() != p.alpha) {
        return Err(Error::Length {
            expected: p.alpha,
            got: x.1.len(),
        });
    }
    let (w, _) = code.local_weights(failed.1, &idx)?;
    let mut out = code.regen.repair(failed.0, remote)?;
    let f = p.field_width.field();
    for (wt, (_, y)) in w.iter().zip(local) {
        f.axpy(&mut out, *wt, y);
    }
    Ok(out)
}

/// Recovers the file from `k` clusters given as `(cluster index, m node
/// vectors)`.
pub fn grc_decode(code: &GrcExactCode, clusters: &[(usize, &[NodeVector])]) -> Result<Vec<Symbol>> {
    let p = &code.params;
    if clusters.len() < p.k {
        return Err(Error::Decode(format!(
            "need {} clusters, got {}",
            p.k,
            clusters.len()
        )));
    }
    let chosen = &clusters[..p.k];
    if !chosen.iter().map(|c| c.0).all_unique() || chosen.iter().any(|c| c.0 >= p.n) {
        return Err(Error::Decode("cluster indices must be distinct and in range".into()));
    }
    for (i, cl) in chosen {
        if cl.len() != p.m || cl.iter().any(|v| v.len() != p.alpha) {
            return Err(Error::Decode(format!("cluster {i} has the wrong shape")));
        }
    }
    let unmixed: Vec<(usize, Vec<NodeVector>)> = chosen.iter().map(|(i, cl)| (*i, code.unmix(cl))).collect();
    let mut file = Vec::with_capacity(code.file_size());
    for t in 0..p.m {
        let nodes: Vec<(usize, &[Symbol])> = unmixed.iter().map(|(i, parts)| (*i, parts[t].as_slice())).collect();
        if t < code.ell_int {
            file.extend(code.mds.decode(&nodes)?);
        } else {
            file.extend(code.regen.decode(&nodes)?);
        }
    }
    Ok(file)
}
