//! Classical exact-repair component codes.
//!
//! - [`MdsCode`]: systematic Reed-Solomon applied per symbol position.
//! - [`PmCode`]: product-matrix MBR (any `k <= d_c <= n-1`) and MSR
//!   (`d_c = 2k-2`). `beta > 1` is handled by striping `beta` independent
//!   `beta = 1` instances, stripe `s` occupying a contiguous slice of every
//!   node vector and of the message.
//!
//! All codes are linear, so decoding goes through [`ErasureDecoder`], which
//! inverts a square submatrix of the generator once per node subset.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{FieldWidth, Symbol};
use crate::linalg::Matrix;

/// The symbols stored on one node.
pub type NodeVector = Vec<Symbol>;

fn points_1_to_n(width: FieldWidth, n: usize) -> Result<Vec<Symbol>> {
    if n >= width.field().size() {
        return Err(Error::InvalidParams(format!(
            "n={n} exceeds the {} nonzero evaluation points of {width}",
            width.field().size() - 1
        )));
    }
    Ok((1..=n as u32).map(|x| x as Symbol).collect())
}

/// Recovers a message `x` from any set of codeword coordinates that
/// determine it, given the generator `G` (codeword = `x G`).
#[derive(Clone, Debug)]
pub struct ErasureDecoder {
    /// Codeword coordinates actually read.
    cols: Vec<usize>,
    /// Inverse of `G` restricted to `cols`.
    inv: Matrix,
}

impl ErasureDecoder {
    /// `available` lists coordinates the caller can supply.
    pub fn new(generator: &Matrix, available: &[usize]) -> Result<Self> {
        let sub = generator.select_cols(available);
        let piv = sub.pivot_columns();
        if piv.len() < generator.rows() {
            return Err(Error::Decode(format!(
                "available coordinates have rank {} < message length {}",
                piv.len(),
                generator.rows()
            )));
        }
        let cols: Vec<usize> = piv.iter().map(|&c| available[c]).collect();
        let inv = generator.select_cols(&cols).invert()?;
        Ok(ErasureDecoder { cols, inv })
    }

    pub fn columns(&self) -> &[usize] {
        &self.cols
    }

    /// `value(c)` returns codeword coordinate `c`.
    pub fn decode_with(&self, value: impl Fn(usize) -> Symbol) -> Vec<Symbol> {
        let y: Vec<Symbol> = self.cols.iter().map(|&c| value(c)).collect();
        self.inv.left_mul_vec(&y).expect("dimensions fixed at construction")
    }
}

/// Builds the generator (message length x codeword length) of a linear map
/// by encoding unit vectors.
pub fn generator_of(width: FieldWidth, msg_len: usize, encode: impl Fn(&[Symbol]) -> Vec<Symbol>) -> Matrix {
    let rows: Vec<Vec<Symbol>> = (0..msg_len)
        .map(|i| {
            let mut e = vec![0; msg_len];
            e[i] = 1;
            encode(&e)
        })
        .collect();
    Matrix::from_rows(width, &rows).expect("rows share the codeword length")
}

/// Systematic `[n, k]` Reed-Solomon code over vectors of `alpha` symbols.
#[derive(Clone, Debug)]
pub struct MdsCode {
    n: usize,
    k: usize,
    alpha: usize,
    /// `k x n` systematic generator `V_k^{-1} V`.
    gen: Matrix,
}

impl MdsCode {
    pub fn new(n: usize, k: usize, alpha: usize, width: FieldWidth) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParams(format!("need 1 <= k={k} <= n={n}")));
        }
        let pts = points_1_to_n(width, n)?;
        let v = Matrix::vandermonde(width, &pts, k)?;
        let head: Vec<usize> = (0..k).collect();
        let gen = v.select_cols(&head).invert()?.mul(&v)?;
        Ok(MdsCode { n, k, alpha, gen })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn file_size(&self) -> usize {
        self.k * self.alpha
    }

    pub fn generator(&self) -> &Matrix {
        &self.gen
    }

    /// Message row `j` is `data[j*alpha..(j+1)*alpha]`.
    pub fn encode(&self, data: &[Symbol]) -> Result<Vec<NodeVector>> {
        if data.len() != self.file_size() {
            return Err(Error::Length {
                expected: self.file_size(),
                got: data.len(),
            });
        }
        let f = self.gen.field();
        let mut out = vec![vec![0; self.alpha]; self.n];
        for (j, row) in data.chunks(self.alpha).enumerate() {
            for (i, node) in out.iter_mut().enumerate() {
                f.axpy(node, self.gen.get(j, i), row);
            }
        }
        Ok(out)
    }

    /// Decodes from at least `k` distinct `(node index, content)` pairs.
    pub fn decode(&self, nodes: &[(usize, &[Symbol])]) -> Result<Vec<Symbol>> {
        if nodes.len() < self.k {
            return Err(Error::Decode(format!(
                "need {} nodes, got {}",
                self.k,
                nodes.len()
            )));
        }
        let chosen = &nodes[..self.k];
        if !chosen.iter().map(|x| x.0).all_unique() || chosen.iter().any(|x| x.0 >= self.n) {
            return Err(Error::Decode("node indices must be distinct and in range".into()));
        }
        for (_, c) in chosen {
            if c.len() != self.alpha {
                return Err(Error::Length {
                    expected: self.alpha,
                    got: c.len(),
                });
            }
        }
        let idx: Vec<usize> = chosen.iter().map(|x| x.0).collect();
        let inv = self.gen.select_cols(&idx).invert()?;
        let f = self.gen.field();
        let mut data = vec![0; self.file_size()];
        for (j, row) in data.chunks_mut(self.alpha).enumerate() {
            for (t, (_, c)) in chosen.iter().enumerate() {
                f.axpy(row, inv.get(t, j), c);
            }
        }
        Ok(data)
    }
}

/// MDS-encodes `data` (length `k * alpha`) onto `n` nodes.
pub fn mds_encode(data: &[Symbol], n: usize, k: usize, width: FieldWidth) -> Result<Vec<NodeVector>> {
    if k == 0 || data.len() % k != 0 {
        return Err(Error::InvalidParams(format!(
            "data length {} is not a multiple of k={k}",
            data.len()
        )));
    }
    MdsCode::new(n, k, data.len() / k, width)?.encode(data)
}

pub fn mds_decode(nodes: &[(usize, &[Symbol])], n: usize, k: usize, width: FieldWidth) -> Result<Vec<Symbol>> {
    let alpha = nodes.first().map_or(0, |x| x.1.len());
    MdsCode::new(n, k, alpha, width)?.decode(nodes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PmKind {
    Mbr,
    Msr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmCodeSpec {
    pub n: usize,
    pub k: usize,
    /// Number of helpers contacted in a repair.
    pub d_c: usize,
    pub kind: PmKind,
    /// Independent `beta = 1` instances.
    pub stripes: usize,
    pub width: FieldWidth,
}

impl PmCodeSpec {
    pub fn mbr(n: usize, k: usize, d_c: usize, stripes: usize, width: FieldWidth) -> Result<Self> {
        let s = PmCodeSpec { n, k, d_c, kind: PmKind::Mbr, stripes, width };
        s.validate()?;
        Ok(s)
    }

    pub fn msr(n: usize, k: usize, d_c: usize, stripes: usize, width: FieldWidth) -> Result<Self> {
        let s = PmCodeSpec { n, k, d_c, kind: PmKind::Msr, stripes, width };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stripes == 0 {
            return Err(Error::InvalidParams("need at least one stripe".into()));
        }
        match self.kind {
            PmKind::Mbr => {
                if self.k == 0 || self.k > self.d_c || self.d_c >= self.n {
                    return Err(Error::InvalidParams(format!(
                        "MBR needs 1 <= k <= d_c <= n-1, got n={} k={} d_c={}",
                        self.n, self.k, self.d_c
                    )));
                }
            }
            PmKind::Msr => {
                if self.k < 2 || self.d_c != 2 * self.k - 2 || self.d_c >= self.n {
                    return Err(Error::Unsupported(format!(
                        "MSR supported only at d = 2k-2 with k >= 2 and d <= n-1, got n={} k={} d={}",
                        self.n, self.k, self.d_c
                    )));
                }
            }
        }
        Ok(())
    }

    /// Symbols per node in one stripe.
    pub fn base_alpha(&self) -> usize {
        match self.kind {
            PmKind::Mbr => self.d_c,
            PmKind::Msr => self.k - 1,
        }
    }

    pub fn alpha(&self) -> usize {
        self.base_alpha() * self.stripes
    }

    /// Symbols sent by each helper.
    pub fn beta(&self) -> usize {
        self.stripes
    }

    /// Message symbols in one stripe.
    pub fn base_file_size(&self) -> usize {
        match self.kind {
            PmKind::Mbr => self.k * self.d_c - self.k * (self.k - 1) / 2,
            PmKind::Msr => self.k * (self.k - 1),
        }
    }

    pub fn file_size(&self) -> usize {
        self.base_file_size() * self.stripes
    }
}

/// A product-matrix code instance with its encoding matrix.
#[derive(Clone, Debug)]
pub struct PmCode {
    spec: PmCodeSpec,
    /// `n x d_c`; row `i` is `[1, x_i, x_i^2, ...]`.
    psi: Matrix,
    /// MSR only: `lambda_i = x_i^(k-1)`.
    lambda: Vec<Symbol>,
    /// Generator of one stripe, `base_file_size x (n * base_alpha)`.
    gen: Matrix,
}

impl PmCode {
    pub fn new(spec: PmCodeSpec) -> Result<Self> {
        spec.validate()?;
        let w = spec.width;
        let f = w.field();
        let points = match spec.kind {
            PmKind::Mbr => points_1_to_n(w, spec.n)?,
            PmKind::Msr => {
                // The lambdas must be distinct; skip points whose power collides.
                let a = spec.base_alpha() as u64;
                let mut pts = Vec::with_capacity(spec.n);
                let mut lams = Vec::with_capacity(spec.n);
                let mut x: usize = 1;
                while pts.len() < spec.n {
                    if x >= f.size() {
                        return Err(Error::InvalidParams(format!(
                            "{w} has too few points with distinct powers for n={}",
                            spec.n
                        )));
                    }
                    let l = f.pow(x as Symbol, a);
                    if !lams.contains(&l) {
                        pts.push(x as Symbol);
                        lams.push(l);
                    }
                    x += 1;
                }
                pts
            }
        };
        let psi = Matrix::vandermonde(w, &points, spec.d_c)?.transpose();
        let lambda = match spec.kind {
            PmKind::Mbr => Vec::new(),
            PmKind::Msr => points.iter().map(|&x| f.pow(x, spec.base_alpha() as u64)).collect(),
        };
        let mut code = PmCode {
            spec,
            psi,
            lambda,
            gen: Matrix::zeros(w, 0, 0),
        };
        code.gen = generator_of(w, spec.base_file_size(), |m| code.encode_stripe(m).concat());
        Ok(code)
    }

    pub fn spec(&self) -> &PmCodeSpec {
        &self.spec
    }

    /// Encoding vector of node `i`.
    pub fn psi(&self, i: usize) -> &[Symbol] {
        self.psi.row(i)
    }

    /// Generator of a single stripe.
    pub fn stripe_generator(&self) -> &Matrix {
        &self.gen
    }

    /// Message matrix of one stripe (`d_c x base_alpha`).
    fn message_matrix(&self, m: &[Symbol]) -> Matrix {
        let w = self.spec.width;
        let (k, d) = (self.spec.k, self.spec.d_c);
        let mut it = m.iter().copied();
        match self.spec.kind {
            PmKind::Mbr => {
                // [[S, T], [T^T, 0]] with S symmetric k x k, T k x (d-k).
                let mut mm = Matrix::zeros(w, d, d);
                for r in 0..k {
                    for c in r..k {
                        let v = it.next().unwrap();
                        mm.set(r, c, v);
                        mm.set(c, r, v);
                    }
                }
                for r in 0..k {
                    for c in k..d {
                        let v = it.next().unwrap();
                        mm.set(r, c, v);
                        mm.set(c, r, v);
                    }
                }
                mm
            }
            PmKind::Msr => {
                // [S1; S2], both symmetric a x a.
                let a = self.spec.base_alpha();
                let mut mm = Matrix::zeros(w, d, a);
                for block in 0..2 {
                    for r in 0..a {
                        for c in r..a {
                            let v = it.next().unwrap();
                            mm.set(block * a + r, c, v);
                            mm.set(block * a + c, r, v);
                        }
                    }
                }
                mm
            }
        }
    }

    fn encode_stripe(&self, m: &[Symbol]) -> Vec<NodeVector> {
        let mm = self.message_matrix(m);
        (0..self.spec.n)
            .map(|i| mm.left_mul_vec(self.psi.row(i)).expect("psi row has d_c entries"))
            .collect()
    }

    pub fn encode(&self, data: &[Symbol]) -> Result<Vec<NodeVector>> {
        let s = &self.spec;
        if data.len() != s.file_size() {
            return Err(Error::Length {
                expected: s.file_size(),
                got: data.len(),
            });
        }
        let mut nodes = vec![Vec::with_capacity(s.alpha()); s.n];
        for chunk in data.chunks(s.base_file_size()) {
            for (node, part) in nodes.iter_mut().zip(self.encode_stripe(chunk)) {
                node.extend(part);
            }
        }
        Ok(nodes)
    }

    /// Vector a helper dots its stripe content with when repairing `failed`.
    fn repair_vector(&self, failed: usize) -> Vec<Symbol> {
        match self.spec.kind {
            PmKind::Mbr => self.psi.row(failed).to_vec(),
            PmKind::Msr => self.psi.row(failed)[..self.spec.base_alpha()].to_vec(),
        }
    }

    /// One symbol per stripe sent by a helper holding `content` to repair
    /// node `failed`.
    pub fn helper_symbols(&self, content: &[Symbol], failed: usize) -> Result<Vec<Symbol>> {
        let s = &self.spec;
        if content.len() != s.alpha() {
            return Err(Error::Length {
                expected: s.alpha(),
                got: content.len(),
            });
        }
        if failed >= s.n {
            return Err(Error::HelperSet(format!("node {failed} out of range")));
        }
        let v = self.repair_vector(failed);
        let f = s.width.field();
        Ok(content.chunks(s.base_alpha()).map(|c| f.dot(c, &v)).collect())
    }

    /// Rebuilds node `failed` from `(helper index, helper symbols)` pairs.
    /// Exactly `d_c` distinct helpers other than `failed` are used.
    pub fn repair(&self, failed: usize, helpers: &[(usize, Vec<Symbol>)]) -> Result<NodeVector> {
        let s = &self.spec;
        if helpers.len() < s.d_c {
            return Err(Error::HelperSet(format!(
                "repair needs {} helpers, got {}",
                s.d_c,
                helpers.len()
            )));
        }
        let helpers = &helpers[..s.d_c];
        let idx: Vec<usize> = helpers.iter().map(|h| h.0).collect();
        if !idx.iter().all_unique() || idx.iter().any(|&h| h == failed || h >= s.n) {
            return Err(Error::HelperSet(format!("bad helper set {idx:?} for node {failed}")));
        }
        if let Some(h) = helpers.iter().find(|h| h.1.len() != s.stripes) {
            return Err(Error::Length {
                expected: s.stripes,
                got: h.1.len(),
            });
        }
        let inv = self.psi.select_rows(&idx).invert()?;
        let f = s.width.field();
        let a = s.base_alpha();
        let mut out = Vec::with_capacity(s.alpha());
        for st in 0..s.stripes {
            let recv: Vec<Symbol> = helpers.iter().map(|h| h.1[st]).collect();
            // M v_failed, a column of length d_c.
            let mv = inv.mul_vec(&recv)?;
            match s.kind {
                PmKind::Mbr => out.extend_from_slice(&mv),
                PmKind::Msr => {
                    let lam = self.lambda[failed];
                    let mut node = mv[..a].to_vec();
                    f.axpy(&mut node, lam, &mv[a..]);
                    out.extend(node);
                }
            }
        }
        Ok(out)
    }

    /// Decoder for reading the nodes in `nodes` (at least `k` of them).
    pub fn decoder(&self, nodes: &[usize]) -> Result<ErasureDecoder> {
        let a = self.spec.base_alpha();
        let cols: Vec<usize> = nodes.iter().flat_map(|&i| i * a..(i + 1) * a).collect();
        ErasureDecoder::new(&self.gen, &cols)
    }

    /// Decodes from `(node index, content)` pairs.
    pub fn decode(&self, nodes: &[(usize, &[Symbol])]) -> Result<Vec<Symbol>> {
        let s = &self.spec;
        if nodes.len() < s.k || !nodes.iter().map(|x| x.0).all_unique() {
            return Err(Error::Decode(format!("need {} distinct nodes", s.k)));
        }
        if let Some(x) = nodes.iter().find(|x| x.1.len() != s.alpha() || x.0 >= s.n) {
            return Err(Error::Decode(format!("node {} has bad index or length", x.0)));
        }
        let idx: Vec<usize> = nodes.iter().map(|x| x.0).collect();
        let dec = self.decoder(&idx)?;
        let a = s.base_alpha();
        let mut out = Vec::with_capacity(s.file_size());
        for st in 0..s.stripes {
            out.extend(dec.decode_with(|c| {
                let (node, pos) = (c / a, c % a);
                let slot = idx.iter().position(|&i| i == node).expect("column from chosen node");
                nodes[slot].1[st * a + pos]
            }));
        }
        Ok(out)
    }
}

pub fn pm_mbr_encode(data: &[Symbol], spec: PmCodeSpec) -> Result<Vec<NodeVector>> {
    expect_kind(&spec, PmKind::Mbr)?;
    PmCode::new(spec)?.encode(data)
}

pub fn pm_mbr_repair(spec: PmCodeSpec, failed: usize, helpers: &[(usize, Vec<Symbol>)]) -> Result<NodeVector> {
    expect_kind(&spec, PmKind::Mbr)?;
    PmCode::new(spec)?.repair(failed, helpers)
}

pub fn pm_mbr_decode(spec: PmCodeSpec, nodes: &[(usize, &[Symbol])]) -> Result<Vec<Symbol>> {
    expect_kind(&spec, PmKind::Mbr)?;
    PmCode::new(spec)?.decode(nodes)
}

pub fn pm_msr_encode(data: &[Symbol], spec: PmCodeSpec) -> Result<Vec<NodeVector>> {
    expect_kind(&spec, PmKind::Msr)?;
    PmCode::new(spec)?.encode(data)
}

pub fn pm_msr_repair(spec: PmCodeSpec, failed: usize, helpers: &[(usize, Vec<Symbol>)]) -> Result<NodeVector> {
    expect_kind(&spec, PmKind::Msr)?;
    PmCode::new(spec)?.repair(failed, helpers)
}

pub fn pm_msr_decode(spec: PmCodeSpec, nodes: &[(usize, &[Symbol])]) -> Result<Vec<Symbol>> {
    expect_kind(&spec, PmKind::Msr)?;
    PmCode::new(spec)?.decode(nodes)
}

fn expect_kind(spec: &PmCodeSpec, kind: PmKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidParams(format!("expected a {kind:?} spec")));
    }
    Ok(())
}
