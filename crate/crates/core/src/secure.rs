//! Security against a passive eavesdropper.
//!
//! Eve reads every node of `e` clusters and every inter-cluster payload
//! delivered into them. The secure code is the exact-repair MBR code with a
//! precoder in front: `ell` MDS stripes use coset coding (the message rows
//! multiplying the low Vandermonde powers are random) and the `m - ell`
//! product-matrix stripes carry random symbols in the first `e` rows of
//! their message matrices. Zero leakage is checked exactly by a rank test.

use itertools::Itertools;
use serde::Serialize;

use crate::bounds::{file_size_bound, secure_file_size_bound, SystemParams};
use crate::classical::{mds_encode, NodeVector, PmCodeSpec, PmCode};
use crate::error::{Error, Result};
use crate::exact::{grc_decode, grc_encode, remote_helper_data, ClusterArray, GrcExactCode};
use crate::gf::{FieldWidth, Symbol};
use crate::linalg::Matrix;

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Length { expected, got });
    }
    Ok(())
}

/// `k x k` Vandermonde block on points `1..=k`: entry `(t, j)` is `j+1` to
/// the power `t`.
fn vandermonde_head(width: FieldWidth, k: usize) -> Result<Matrix> {
    let pts: Vec<Symbol> = (1..=k as u32).map(|x| x as Symbol).collect();
    Matrix::vandermonde(width, &pts, k)
}

/// Systematic MDS message (`k` rows of `alpha`) whose codeword equals the
/// non-systematic Vandermonde encoding of `rand` rows followed by `secret`
/// rows.
fn coset_message(width: FieldWidth, k: usize, e: usize, secret: &[Symbol], rand: &[Symbol]) -> Result<Vec<Symbol>> {
    if e == 0 {
        return Ok(secret.to_vec());
    }
    let alpha = rand.len() / e;
    let vk = vandermonde_head(width, k)?;
    let f = width.field();
    let v: Vec<&[Symbol]> = rand.chunks(alpha).chain(secret.chunks(alpha)).collect();
    let mut u = vec![0; k * alpha];
    for (j, row) in u.chunks_mut(alpha).enumerate() {
        for (t, vt) in v.iter().enumerate() {
            f.axpy(row, vk.get(t, j), vt);
        }
    }
    Ok(u)
}

/// Inverse of [`coset_message`], returning only the secret rows.
fn coset_secret(width: FieldWidth, k: usize, e: usize, u: &[Symbol]) -> Result<Vec<Symbol>> {
    if e == 0 {
        return Ok(u.to_vec());
    }
    let alpha = u.len() / k;
    let inv = vandermonde_head(width, k)?.invert()?;
    let f = width.field();
    let mut out = vec![0; (k - e) * alpha];
    for (t, row) in out.chunks_mut(alpha).enumerate() {
        for (j, uj) in u.chunks(alpha).enumerate() {
            f.axpy(row, inv.get(j, t + e), uj);
        }
    }
    Ok(out)
}

/// Wiretap-II coset code: any `k` nodes recover `secret`, any `e` nodes
/// learn nothing. `e = 0` is the plain systematic code.
pub fn secure_mds_encode(
    secret: &[Symbol],
    rand: &[Symbol],
    n: usize,
    k: usize,
    e: usize,
    width: FieldWidth,
) -> Result<Vec<NodeVector>> {
    if e > k || k == 0 {
        return Err(Error::InvalidParams(format!("need 1 <= k and e <= k, got k={k} e={e}")));
    }
    if e == 0 {
        check_len(0, rand.len())?;
        return mds_encode(secret, n, k, width);
    }
    if rand.is_empty() || rand.len() % e != 0 {
        return Err(Error::InvalidParams(format!("randomness length {} is not a multiple of e={e}", rand.len())));
    }
    let alpha = rand.len() / e;
    check_len((k - e) * alpha, secret.len())?;
    mds_encode(&coset_message(width, k, e, secret, rand)?, n, k, width)
}

/// Recovers the secret from `k` nodes of [`secure_mds_encode`].
pub fn secure_mds_decode(
    nodes: &[(usize, &[Symbol])],
    n: usize,
    k: usize,
    e: usize,
    width: FieldWidth,
) -> Result<Vec<Symbol>> {
    let u = crate::classical::mds_decode(nodes, n, k, width)?;
    coset_secret(width, k, e, &u)
}

/// Row of the message matrix behind each message position of one MBR
/// stripe, in the order the product-matrix encoder consumes them.
fn mbr_position_rows(k: usize, d: usize) -> Vec<usize> {
    let sym = (0..k).flat_map(|r| (r..k).map(move |_| r));
    let tail = (0..k).flat_map(|r| (k..d).map(move |_| r));
    sym.chain(tail).collect()
}

/// Secret symbols per MBR stripe: `sum_{i=e}^{k-1} (d - i)`.
fn mbr_secret_per_stripe(k: usize, d: usize, e: usize) -> usize {
    mbr_position_rows(k, d).iter().filter(|&&r| r >= e).count()
}

/// Interleaves secret and random symbols into plain MBR message order.
fn mbr_message(spec: &PmCodeSpec, e: usize, secret: &[Symbol], rand: &[Symbol]) -> Vec<Symbol> {
    let rows = mbr_position_rows(spec.k, spec.d_c);
    let (mut s, mut r) = (secret.iter(), rand.iter());
    (0..spec.stripes)
        .flat_map(|_| rows.iter())
        .map(|&row| *if row < e { r.next() } else { s.next() }.expect("lengths checked"))
        .collect()
}

fn mbr_secret(spec: &PmCodeSpec, e: usize, message: &[Symbol]) -> Vec<Symbol> {
    let rows = mbr_position_rows(spec.k, spec.d_c);
    (0..spec.stripes)
        .flat_map(|_| rows.iter())
        .zip(message)
        .filter(|(&row, _)| row >= e)
        .map(|(_, &x)| x)
        .collect()
}

fn check_mbr(spec: &PmCodeSpec, e: usize, secret: usize, rand: usize) -> Result<()> {
    if spec.kind != crate::classical::PmKind::Mbr {
        return Err(Error::Unsupported("secure product-matrix codes are MBR only".into()));
    }
    if e > spec.k {
        return Err(Error::InvalidParams(format!("need e <= k={}, got {e}", spec.k)));
    }
    let s = spec.stripes * mbr_secret_per_stripe(spec.k, spec.d_c, e);
    check_len(s, secret)?;
    check_len(spec.file_size() - s, rand)
}

/// Product-matrix MBR code with random padding in the message rows an
/// `e`-node eavesdropper can see.
pub fn secure_mbr_encode(secret: &[Symbol], rand: &[Symbol], spec: PmCodeSpec, e: usize) -> Result<Vec<NodeVector>> {
    check_mbr(&spec, e, secret.len(), rand.len())?;
    PmCode::new(spec)?.encode(&mbr_message(&spec, e, secret, rand))
}

pub fn secure_mbr_decode(spec: PmCodeSpec, e: usize, nodes: &[(usize, &[Symbol])]) -> Result<Vec<Symbol>> {
    let msg = PmCode::new(spec)?.decode(nodes)?;
    Ok(mbr_secret(&spec, e, &msg))
}

/// Secure exact-repair code at the MBR point.
#[derive(Clone, Debug)]
pub struct SecureGrcCode {
    base: GrcExactCode,
    e: usize,
    secret_size: usize,
    rand_size: usize,
}

impl SecureGrcCode {
    pub fn new(p: &SystemParams, e: usize) -> Result<Self> {
        p.validate()?;
        if !p.is_mbr() || p.d == 0 {
            return Err(Error::Unsupported("secure codes are built at the MBR point only".into()));
        }
        if e > p.k {
            return Err(Error::InvalidParams(format!("need e <= k={}, got {e}", p.k)));
        }
        let base = GrcExactCode::build(p)?;
        let b = file_size_bound(p)?;
        let secret_size = p.ell * (p.k - e) * p.alpha
            + (p.m - p.ell) * p.beta * mbr_secret_per_stripe(p.k, p.d, e);
        debug_assert_eq!(secret_size, secure_file_size_bound(p, e)?);
        Ok(SecureGrcCode {
            base,
            e,
            secret_size,
            rand_size: b - secret_size,
        })
    }

    pub fn base(&self) -> &GrcExactCode {
        &self.base
    }

    pub fn e(&self) -> usize {
        self.e
    }

    pub fn secret_size(&self) -> usize {
        self.secret_size
    }

    pub fn rand_size(&self) -> usize {
        self.rand_size
    }

    /// Base-code file for `(secret, rand)`.
    pub fn precode(&self, secret: &[Symbol], rand: &[Symbol]) -> Result<Vec<Symbol>> {
        check_len(self.secret_size, secret.len())?;
        check_len(self.rand_size, rand.len())?;
        let p = self.base.params();
        let (w, e) = (p.field_width, self.e);
        let (sm, rm) = ((p.k - e) * p.alpha, e * p.alpha);
        let mut out = Vec::with_capacity(secret.len() + rand.len());
        for t in 0..p.ell {
            out.extend(coset_message(w, p.k, e, &secret[t * sm..(t + 1) * sm], &rand[t * rm..(t + 1) * rm])?);
        }
        let spec = *self.base.component().spec();
        let (s_rest, r_rest) = (&secret[p.ell * sm..], &rand[p.ell * rm..]);
        let (sc, rc) = (s_rest.len() / (p.m - p.ell).max(1), r_rest.len() / (p.m - p.ell).max(1));
        for t in 0..p.m - p.ell {
            out.extend(mbr_message(&spec, e, &s_rest[t * sc..(t + 1) * sc], &r_rest[t * rc..(t + 1) * rc]));
        }
        Ok(out)
    }

    /// Secret part of a base-code file.
    pub fn extract(&self, file: &[Symbol]) -> Result<Vec<Symbol>> {
        let p = self.base.params();
        check_len(self.base.file_size(), file.len())?;
        let mds_len = p.k * p.alpha;
        let mut out = Vec::with_capacity(self.secret_size);
        for t in 0..p.ell {
            out.extend(coset_secret(p.field_width, p.k, self.e, &file[t * mds_len..(t + 1) * mds_len])?);
        }
        let spec = *self.base.component().spec();
        for chunk in file[p.ell * mds_len..].chunks(spec.file_size()) {
            out.extend(mbr_secret(&spec, self.e, chunk));
        }
        Ok(out)
    }
}

pub fn secure_grc_encode(code: &SecureGrcCode, secret: &[Symbol], rand: &[Symbol]) -> Result<ClusterArray> {
    grc_encode(&code.base, &code.precode(secret, rand)?)
}

pub fn secure_grc_decode(code: &SecureGrcCode, clusters: &[(usize, &[NodeVector])]) -> Result<Vec<Symbol>> {
    code.extract(&grc_decode(&code.base, clusters)?)
}

/// Everything Eve observes, as linear functions of the source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EveView {
    pub clusters: Vec<usize>,
    /// One row per observed symbol over `[secret | randomness]` columns.
    #[serde(skip)]
    pub observation: Matrix,
    /// Columns `0..secret_len` are secret coordinates.
    pub secret_len: usize,
}

impl EveView {
    pub fn empty(width: FieldWidth, secret_len: usize, rand_len: usize) -> Self {
        EveView {
            clusters: Vec::new(),
            observation: Matrix::zeros(width, 0, secret_len + rand_len),
            secret_len,
        }
    }
}

/// Zero leakage iff the randomness columns alone explain the view's rank.
pub fn leakage_check(view: &EveView) -> bool {
    let obs = &view.observation;
    let rand_cols: Vec<usize> = (view.secret_len..obs.cols()).collect();
    obs.rank() == obs.select_cols(&rand_cols).rank()
}

/// Observed symbols of one encoding: contents of `clusters`, then every
/// remote payload any single repair of their nodes could deliver, for every
/// local helper set.
fn observed(code: &SecureGrcCode, clusters: &[usize], arr: &ClusterArray) -> Result<Vec<Symbol>> {
    let p = code.base.params();
    let mut out = Vec::new();
    for &c in clusters {
        for j in 0..p.m {
            out.extend_from_slice(arr.node(c, j));
        }
    }
    for &c in clusters {
        for j in 0..p.m {
            for local in (0..p.m).filter(|&x| x != j).combinations(p.ell) {
                for h in (0..p.n).filter(|&h| h != c) {
                    out.extend(remote_helper_data(&code.base, arr.cluster(h), h, (c, j), &local)?);
                }
            }
        }
    }
    Ok(out)
}

/// Eve's view of `clusters`, including all single-repair payloads into
/// them. Built column by column from unit source vectors.
pub fn eve_view(code: &SecureGrcCode, clusters: &[usize]) -> Result<EveView> {
    let p = code.base.params();
    if clusters.iter().any(|&c| c >= p.n) || !clusters.iter().all_unique() {
        return Err(Error::InvalidParams(format!("bad cluster set {clusters:?}")));
    }
    let total = code.secret_size + code.rand_size;
    let mut cols = Vec::with_capacity(total);
    for x in 0..total {
        let mut unit = vec![0; total];
        unit[x] = 1;
        let (s, r) = unit.split_at(code.secret_size);
        cols.push(observed(code, clusters, &secure_grc_encode(code, s, r)?)?);
    }
    let rows = cols.first().map_or(0, Vec::len);
    let mut obs = Matrix::zeros(p.field_width, rows, total);
    for (c, col) in cols.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            obs.set(r, c, v);
        }
    }
    Ok(EveView {
        clusters: clusters.to_vec(),
        observation: obs,
        secret_len: code.secret_size,
    })
}

/// Leakage verdict for every `e`-subset of clusters.
pub fn leakage_report(code: &SecureGrcCode) -> Result<Vec<(Vec<usize>, bool)>> {
    let p = code.base.params();
    (0..p.n)
        .combinations(code.e)
        .map(|set| Ok((set.clone(), leakage_check(&eve_view(code, &set)?))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::generator_of;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_syms(len: usize, seed: u64, w: FieldWidth) -> Vec<Symbol> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| w.field().random(&mut rng)).collect()
    }

    fn desk() -> SystemParams {
        SystemParams::new(4, 3, 3, 3, 1, 4, 3)
    }

    #[test]
    fn secure_size_at_desk_params() {
        let c = SecureGrcCode::new(&desk(), 1).unwrap();
        assert_eq!(c.secret_size(), 21);
        assert_eq!(c.rand_size(), 12);
        assert_eq!(SecureGrcCode::new(&desk(), 0).unwrap().secret_size(), 33);
    }

    #[test]
    fn mbr_secret_counts() {
        assert_eq!(mbr_secret_per_stripe(3, 3, 1), 3);
        assert_eq!(mbr_secret_per_stripe(3, 3, 0), 6);
        for (k, d) in [(3, 5), (4, 6), (2, 2)] {
            for e in 0..=k {
                let want: usize = (e..k).map(|i| d - i).sum();
                assert_eq!(mbr_secret_per_stripe(k, d, e), want);
            }
        }
    }

    #[test]
    fn secure_mds_round_trip_and_secrecy() {
        let w = FieldWidth::W8;
        let (n, k, e, alpha) = (4, 3, 1, 2);
        let secret = rand_syms((k - e) * alpha, 1, w);
        let rand = rand_syms(e * alpha, 2, w);
        let nodes = secure_mds_encode(&secret, &rand, n, k, e, w).unwrap();
        for set in (0..n).combinations(k) {
            let view: Vec<(usize, &[Symbol])> = set.iter().map(|&i| (i, nodes[i].as_slice())).collect();
            assert_eq!(secure_mds_decode(&view, n, k, e, w).unwrap(), secret);
        }
        let gen = generator_of(w, k * alpha, |x| {
            secure_mds_encode(&x[..(k - e) * alpha], &x[(k - e) * alpha..], n, k, e, w).unwrap().concat()
        });
        for i in 0..n {
            let cols: Vec<usize> = (i * alpha..(i + 1) * alpha).collect();
            let view = EveView {
                clusters: vec![i],
                observation: gen.select_cols(&cols).transpose(),
                secret_len: (k - e) * alpha,
            };
            assert!(leakage_check(&view));
        }
        assert_eq!(secure_mds_encode(&secret, &[], n, 2, 0, w).unwrap(), mds_encode(&secret, n, 2, w).unwrap());
        assert!(secure_mds_encode(&secret, &rand[..1], n, k, e, w).is_err());
    }

    #[test]
    fn secure_mbr_repairs_and_hides() {
        let w = FieldWidth::W8;
        let spec = PmCodeSpec::mbr(4, 3, 3, 1, w).unwrap();
        let e = 1;
        let s = rand_syms(3, 5, w);
        let r = rand_syms(3, 6, w);
        let nodes = secure_mbr_encode(&s, &r, spec, e).unwrap();
        let pm = PmCode::new(spec).unwrap();
        for f in 0..4 {
            let helpers: Vec<(usize, Vec<Symbol>)> = (0..4)
                .filter(|&h| h != f)
                .map(|h| (h, pm.helper_symbols(&nodes[h], f).unwrap()))
                .collect();
            assert_eq!(pm.repair(f, &helpers).unwrap(), nodes[f]);
        }
        for set in (0..4).combinations(3) {
            let v: Vec<(usize, &[Symbol])> = set.iter().map(|&i| (i, nodes[i].as_slice())).collect();
            assert_eq!(secure_mbr_decode(spec, e, &v).unwrap(), s);
        }
        // Node content plus the downloads that rebuild it.
        let gen = generator_of(w, 6, |x| {
            let nd = secure_mbr_encode(&x[..3], &x[3..], spec, e).unwrap();
            let mut obs = Vec::new();
            for f in 0..4 {
                obs.extend(nd[f].iter().copied());
                for h in (0..4).filter(|&h| h != f) {
                    obs.extend(pm.helper_symbols(&nd[h], f).unwrap());
                }
            }
            obs
        });
        let per = 3 + 3;
        for f in 0..4 {
            let cols: Vec<usize> = (f * per..(f + 1) * per).collect();
            let view = EveView {
                clusters: vec![f],
                observation: gen.select_cols(&cols).transpose(),
                secret_len: 3,
            };
            assert!(leakage_check(&view));
        }
    }

    #[test]
    fn desk_code_decodes_and_leaks_nothing() {
        let p = desk();
        let code = SecureGrcCode::new(&p, 1).unwrap();
        let s = rand_syms(21, 7, p.field_width);
        let r = rand_syms(12, 8, p.field_width);
        let arr = secure_grc_encode(&code, &s, &r).unwrap();
        for set in (0..4).combinations(3) {
            let v: Vec<(usize, &[NodeVector])> = set.iter().map(|&i| (i, arr.cluster(i))).collect();
            assert_eq!(secure_grc_decode(&code, &v).unwrap(), s);
        }
        for (set, ok) in leakage_report(&code).unwrap() {
            assert!(ok, "leak through clusters {set:?}");
        }
    }

    #[test]
    fn larger_eavesdropper() {
        let p = SystemParams::new(5, 3, 4, 4, 1, 3, 2);
        let code = SecureGrcCode::new(&p, 2).unwrap();
        assert_eq!(code.secret_size(), secure_file_size_bound(&p, 2).unwrap());
        assert!(leakage_report(&code).unwrap().iter().all(|x| x.1));
    }

    #[test]
    fn full_view_leaks() {
        let code = SecureGrcCode::new(&desk(), 1).unwrap();
        assert!(!leakage_check(&eve_view(&code, &[0, 1, 2]).unwrap()));
        assert!(leakage_check(&EveView::empty(FieldWidth::W8, 21, 12)));
    }

    #[test]
    fn no_eavesdropper_is_plain_encoding() {
        let p = desk();
        let code = SecureGrcCode::new(&p, 0).unwrap();
        let file = rand_syms(33, 9, p.field_width);
        assert_eq!(secure_grc_encode(&code, &file, &[]).unwrap(), grc_encode(code.base(), &file).unwrap());
    }

    #[test]
    fn payloads_replay_identically() {
        let code = SecureGrcCode::new(&desk(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<Symbol> = (0..21).map(|_| rng.gen::<u8>() as Symbol).collect();
        let r: Vec<Symbol> = (0..12).map(|_| rng.gen::<u8>() as Symbol).collect();
        let arr = secure_grc_encode(&code, &s, &r).unwrap();
        let a = remote_helper_data(code.base(), arr.cluster(1), 1, (0, 2), &[0, 1, 3]).unwrap();
        let b = remote_helper_data(code.base(), arr.cluster(1), 1, (0, 2), &[0, 1, 3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_mbr() {
        let p = SystemParams::new(6, 3, 4, 2, 1, 3, 1);
        assert!(SecureGrcCode::new(&p, 1).is_err());
    }
}
