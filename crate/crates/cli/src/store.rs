//! On-disk layout for exact-repair encodings: `manifest.json` plus one
//! `node_{cluster}_{node}.bin` file per node. The input is zero-padded to
//! whole blocks of `B*` symbols; block `b` of every node file holds that
//! node's `alpha` symbols for block `b`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use grc::classical::NodeVector;
use grc::exact::{
    bytes_to_symbols, grc_decode, grc_encode, grc_repair, remote_helper_data, symbols_to_bytes, GrcExactCode, Layout,
};
use grc::{FieldWidth, Symbol, SystemParams};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "grc-exact-1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub params: SystemParams,
    pub layout: Layout,
    /// Original file length in bytes.
    pub file_len: u64,
    pub blocks: usize,
    /// Symbols per block (the file size of the code).
    pub block_symbols: usize,
}

pub fn node_path(dir: &Path, cluster: usize, node: usize) -> PathBuf {
    dir.join(format!("node_{cluster}_{node}.bin"))
}

fn bytes_per_symbol(w: FieldWidth) -> usize {
    match w {
        FieldWidth::W8 => 1,
        FieldWidth::W16 => 2,
    }
}

fn build_code(p: &SystemParams, layout: Layout) -> Result<GrcExactCode> {
    Ok(match layout {
        Layout::Mixed => GrcExactCode::build(p)?,
        Layout::StackedMsr => GrcExactCode::stacked_msr(p)?,
    })
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let m: Manifest = serde_json::from_str(&text).with_context(|| format!("invalid manifest {}", path.display()))?;
    ensure!(m.format == FORMAT, "unsupported manifest format {:?}", m.format);
    m.params.validate()?;
    let code = build_code(&m.params, m.layout)?;
    ensure!(
        m.block_symbols == code.file_size(),
        "manifest block size {} does not match the code ({})",
        m.block_symbols,
        code.file_size()
    );
    let cap = (m.blocks * m.block_symbols * bytes_per_symbol(m.params.field_width)) as u64;
    ensure!(m.file_len <= cap, "manifest file length {} exceeds {} encoded bytes", m.file_len, cap);
    Ok(m)
}

/// Per-block node vectors read from one node file.
fn read_node(dir: &Path, m: &Manifest, cluster: usize, node: usize) -> Result<Vec<NodeVector>> {
    let path = node_path(dir, cluster, node);
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    let syms = bytes_to_symbols(m.params.field_width, &bytes)?;
    let alpha = m.params.alpha;
    ensure!(
        syms.len() == m.blocks * alpha,
        "{} holds {} symbols, expected {}",
        path.display(),
        syms.len(),
        m.blocks * alpha
    );
    Ok(syms.chunks(alpha).map(<[Symbol]>::to_vec).collect())
}

/// Cluster contents per block: `out[b][node]`.
fn read_cluster(dir: &Path, m: &Manifest, cluster: usize) -> Result<Vec<Vec<NodeVector>>> {
    let per_node: Vec<Vec<NodeVector>> = (0..m.params.m)
        .map(|j| read_node(dir, m, cluster, j))
        .collect::<Result<_>>()?;
    Ok((0..m.blocks)
        .map(|b| per_node.iter().map(|n| n[b].clone()).collect())
        .collect())
}

fn cluster_complete(dir: &Path, p: &SystemParams, cluster: usize) -> bool {
    (0..p.m).all(|j| node_path(dir, cluster, j).is_file())
}

#[derive(Debug, Serialize)]
pub struct EncodeReport {
    pub params: SystemParams,
    pub layout: Layout,
    pub file_len: u64,
    pub blocks: usize,
    pub block_symbols: usize,
    pub nodes_written: usize,
}

pub fn encode(p: &SystemParams, stacked: bool, input: &[u8], dir: &Path) -> Result<EncodeReport> {
    let layout = if stacked { Layout::StackedMsr } else { Layout::Mixed };
    let code = build_code(p, layout)?;
    let bs = code.file_size();
    ensure!(bs > 0, "code stores nothing");
    let block_bytes = bs * bytes_per_symbol(p.field_width);
    let blocks = input.len().div_ceil(block_bytes).max(1);
    let mut padded = input.to_vec();
    padded.resize(blocks * block_bytes, 0);
    let syms = bytes_to_symbols(p.field_width, &padded)?;

    let mut files: Vec<Vec<Vec<Symbol>>> = vec![vec![Vec::with_capacity(blocks * p.alpha); p.m]; p.n];
    for block in syms.chunks(bs) {
        let arr = grc_encode(&code, block)?;
        for (i, cl) in files.iter_mut().enumerate() {
            for (j, f) in cl.iter_mut().enumerate() {
                f.extend_from_slice(arr.node(i, j));
            }
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (i, cl) in files.iter().enumerate() {
        for (j, f) in cl.iter().enumerate() {
            let path = node_path(dir, i, j);
            fs::write(&path, symbols_to_bytes(p.field_width, f)).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        params: *p,
        layout,
        file_len: input.len() as u64,
        blocks,
        block_symbols: bs,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(EncodeReport {
        params: *p,
        layout,
        file_len: manifest.file_len,
        blocks,
        block_symbols: bs,
        nodes_written: p.n * p.m,
    })
}

#[derive(Debug, Serialize)]
pub struct RepairReport {
    pub cluster: usize,
    pub node: usize,
    pub local_helpers: Vec<usize>,
    pub remote_helpers: Vec<usize>,
    /// Symbols that crossed cluster boundaries, over all blocks.
    pub inter_cluster_symbols: usize,
    /// Symbols read from local helper nodes, over all blocks.
    pub local_symbols: usize,
    pub output: PathBuf,
}

pub fn repair(
    dir: &Path,
    failed: (usize, usize),
    local: Option<Vec<usize>>,
    remote: Option<Vec<usize>>,
    out: Option<&Path>,
) -> Result<RepairReport> {
    let m = read_manifest(dir)?;
    let p = m.params;
    let (i, j) = failed;
    ensure!(i < p.n && j < p.m, "node ({i},{j}) is outside {}x{}", p.n, p.m);
    let code = build_code(&p, m.layout)?;
    let local = match local {
        Some(l) => l,
        None => (0..p.m)
            .filter(|&x| x != j && node_path(dir, i, x).is_file())
            .take(p.ell)
            .collect(),
    };
    let remote = match remote {
        Some(r) => r,
        None => (0..p.n)
            .filter(|&c| c != i && cluster_complete(dir, &p, c))
            .take(p.d)
            .collect(),
    };
    if remote.len() != p.d {
        bail!("need {} remote helper clusters, found {:?}", p.d, remote);
    }
    let local_data: Vec<Vec<NodeVector>> = local.iter().map(|&x| read_node(dir, &m, i, x)).collect::<Result<_>>()?;
    let remote_data: Vec<Vec<Vec<NodeVector>>> = remote.iter().map(|&c| read_cluster(dir, &m, c)).collect::<Result<_>>()?;

    let mut rebuilt = Vec::with_capacity(m.blocks * p.alpha);
    let mut inter = 0;
    for b in 0..m.blocks {
        let payloads: Vec<(usize, Vec<Symbol>)> = remote
            .iter()
            .zip(&remote_data)
            .map(|(&h, cl)| Ok((h, remote_helper_data(&code, &cl[b], h, (i, j), &local)?)))
            .collect::<Result<_>>()?;
        inter += payloads.iter().map(|x| x.1.len()).sum::<usize>();
        let loc: Vec<(usize, &[Symbol])> = local.iter().zip(&local_data).map(|(&x, v)| (x, v[b].as_slice())).collect();
        rebuilt.extend(grc_repair(&code, (i, j), &loc, &payloads)?);
    }
    let target = out.map_or_else(|| node_path(dir, i, j), Path::to_path_buf);
    fs::write(&target, symbols_to_bytes(p.field_width, &rebuilt)).with_context(|| format!("writing {}", target.display()))?;
    Ok(RepairReport {
        cluster: i,
        node: j,
        local_symbols: local.len() * m.blocks * p.alpha * usize::from(code.local_used() > 0),
        local_helpers: local,
        remote_helpers: remote,
        inter_cluster_symbols: inter,
        output: target,
    })
}

/// Decodes the original file from `clusters` (default: the first `k`
/// complete clusters).
pub fn collect(dir: &Path, clusters: Option<Vec<usize>>) -> Result<(Vec<usize>, Vec<u8>)> {
    let m = read_manifest(dir)?;
    let p = m.params;
    let code = build_code(&p, m.layout)?;
    let chosen = match clusters {
        Some(c) => c,
        None => (0..p.n).filter(|&c| cluster_complete(dir, &p, c)).take(p.k).collect(),
    };
    ensure!(chosen.len() >= p.k, "need {} complete clusters, have {:?}", p.k, chosen);
    let data: Vec<Vec<Vec<NodeVector>>> = chosen.iter().map(|&c| read_cluster(dir, &m, c)).collect::<Result<_>>()?;
    let mut syms = Vec::with_capacity(m.blocks * m.block_symbols);
    for b in 0..m.blocks {
        let view: Vec<(usize, &[NodeVector])> = chosen.iter().zip(&data).map(|(&c, cl)| (c, cl[b].as_slice())).collect();
        syms.extend(grc_decode(&code, &view)?);
    }
    let mut bytes = symbols_to_bytes(p.field_width, &syms);
    bytes.truncate(m.file_len as usize);
    Ok((chosen, bytes))
}
