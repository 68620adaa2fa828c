//! Closed-form capacity bounds and operating points.
//!
//! Everything here is exact integer or rational arithmetic; the functions are
//! cheap and pure, so callers sweep them freely.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::FieldWidth;

pub type Rational = Ratio<u64>;

/// The `(n, k, d)(alpha, beta)(m, ell)` parameter tuple plus the field width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of clusters.
    pub n: usize,
    /// Clusters needed for data collection.
    pub k: usize,
    /// Remote helper clusters per repair.
    pub d: usize,
    /// Symbols stored per node.
    pub alpha: usize,
    /// Symbols sent by each remote helper cluster.
    pub beta: usize,
    /// Nodes per cluster.
    pub m: usize,
    /// Local helper nodes per repair.
    pub ell: usize,
    #[serde(default)]
    pub field_width: FieldWidth,
}

impl SystemParams {
    pub fn new(n: usize, k: usize, d: usize, alpha: usize, beta: usize, m: usize, ell: usize) -> Self {
        SystemParams {
            n,
            k,
            d,
            alpha,
            beta,
            m,
            ell,
            field_width: FieldWidth::W16,
        }
    }

    pub fn with_width(mut self, width: FieldWidth) -> Self {
        self.field_width = width;
        self
    }

    /// Checks every structural invariant, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let SystemParams {
            n,
            k,
            d,
            alpha,
            beta,
            m,
            ell,
            ..
        } = *self;
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if k < 1 || k > n {
            return fail(format!("need 1 <= k <= n, got k={k}, n={n}"));
        }
        if d > n.saturating_sub(1) {
            return fail(format!("need 0 <= d <= n-1, got d={d}, n={n}"));
        }
        if m < 1 {
            return fail("need m >= 1".into());
        }
        if ell > m - 1 {
            return fail(format!("need 0 <= ell <= m-1, got ell={ell}, m={m}"));
        }
        if alpha < 1 {
            return fail("need alpha >= 1".into());
        }
        if d > 0 {
            if beta < 1 {
                return fail("need beta >= 1 when d > 0".into());
            }
            let (lo, hi) = alpha_range(k, d, beta);
            if alpha < lo || alpha > hi {
                return fail(format!(
                    "alpha={alpha} outside the trade-off range [{lo}, {hi}] for k={k}, d={d}, beta={beta}"
                ));
            }
        }
        Ok(())
    }

    /// Whether the parameters sit at the minimum-bandwidth point.
    pub fn is_mbr(&self) -> bool {
        self.d > 0 && self.alpha == self.d * self.beta
    }

    /// Whether the parameters sit at the minimum-storage point.
    pub fn is_msr(&self) -> bool {
        self.d > 0 && self.alpha == msr_alpha(self.k, self.d, self.beta)
    }
}

/// Local and remote intra-cluster bandwidth knobs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntraParams {
    /// Symbols downloaded from each local helper node.
    pub gamma: usize,
    /// Nodes of a remote helper cluster that contribute to its payload.
    pub ell_prime: usize,
    /// Symbols each contributing remote node hands to its cluster's compute unit.
    pub gamma_prime: usize,
}

impl IntraParams {
    /// No intra-cluster restriction: `gamma = gamma' = alpha`, `ell' = m`.
    pub fn unrestricted(p: &SystemParams) -> Self {
        IntraParams {
            gamma: p.alpha,
            ell_prime: p.m,
            gamma_prime: p.alpha,
        }
    }

    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if self.gamma > p.alpha {
            return Err(Error::InvalidParams(format!(
                "gamma={} exceeds alpha={}",
                self.gamma, p.alpha
            )));
        }
        if self.ell_prime < 1 || self.ell_prime > p.m {
            return Err(Error::InvalidParams(format!(
                "need 1 <= ell'={} <= m={}",
                self.ell_prime, p.m
            )));
        }
        if self.gamma_prime > p.alpha {
            return Err(Error::InvalidParams(format!(
                "gamma'={} exceeds alpha={}",
                self.gamma_prime, p.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Msr,
    Mbr,
    Interior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub kind: PointKind,
    pub alpha: usize,
    pub beta: usize,
}

/// `alpha` at the minimum-storage point.
pub fn msr_alpha(k: usize, d: usize, beta: usize) -> usize {
    if d >= k {
        (d - k + 1) * beta
    } else {
        beta
    }
}

/// Inclusive range of `alpha` spanned by the trade-off for `d >= 1`.
pub fn alpha_range(k: usize, d: usize, beta: usize) -> (usize, usize) {
    (msr_alpha(k, d, beta), d * beta)
}

/// `sum_{i=from}^{k-1} min(alpha, (d-i)^+ beta)`.
pub fn repair_sum(k: usize, d: usize, alpha: usize, beta: usize, from: usize) -> usize {
    (from..k)
        .map(|i| alpha.min(d.saturating_sub(i) * beta))
        .sum()
}

/// Functional-repair capacity of a classical `(n, k, d)(alpha, beta)` code.
pub fn classical_file_size(k: usize, d: usize, alpha: usize, beta: usize) -> usize {
    repair_sum(k, d, alpha, beta, 0)
}

/// Maximum file size `B*` of a generalized regenerating code.
pub fn file_size_bound(p: &SystemParams) -> Result<usize> {
    p.validate()?;
    Ok(p.ell * p.k * p.alpha + (p.m - p.ell) * repair_sum(p.k, p.d, p.alpha, p.beta, 0))
}

/// Maximum secret size when an eavesdropper sees `e` whole clusters and
/// every repair download into them.
pub fn secure_file_size_bound(p: &SystemParams, e: usize) -> Result<usize> {
    p.validate()?;
    if e > p.k {
        return Err(Error::InvalidParams(format!(
            "need 0 <= e <= k, got e={e}, k={}",
            p.k
        )));
    }
    Ok(p.ell * (p.k - e) * p.alpha + (p.m - p.ell) * repair_sum(p.k, p.d, p.alpha, p.beta, e))
}

/// Smallest per-local-helper download that keeps capacity at `B*`:
/// `alpha - (d-k+1)^+ beta`.
pub fn gamma_star(p: &SystemParams) -> Result<usize> {
    p.validate()?;
    if p.d == 0 {
        return Err(Error::InvalidParams(
            "gamma undefined without remote help (d = 0 repairs are fully local)".into(),
        ));
    }
    let remote = (p.d + 1).saturating_sub(p.k) * p.beta;
    Ok(p.alpha - remote.min(p.alpha))
}

/// Lower bound on the per-node contribution inside a remote helper cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GammaPrimeBound {
    /// `beta / (m - ell)` exactly.
    pub bound: Rational,
    /// Smallest integer meeting the bound.
    pub ceil: usize,
    /// Contributing nodes required per remote helper cluster (always `m`).
    pub ell_prime_required: usize,
}

pub fn gamma_prime_bound(p: &SystemParams) -> Result<GammaPrimeBound> {
    p.validate()?;
    if p.d < p.k {
        return Err(Error::InvalidParams(format!(
            "remote-helper bound needs d >= k, got d={}, k={}",
            p.d, p.k
        )));
    }
    if p.alpha < (p.d - p.k + 2) * p.beta {
        return Err(Error::InvalidParams(format!(
            "remote-helper bound needs alpha >= (d-k+2) beta = {}, got alpha={}",
            (p.d - p.k + 2) * p.beta,
            p.alpha
        )));
    }
    let denom = (p.m - p.ell) as u64;
    let bound = Rational::new(p.beta as u64, denom);
    Ok(GammaPrimeBound {
        bound,
        ceil: bound.ceil().to_integer() as usize,
        ell_prime_required: p.m,
    })
}

/// The two extreme operating points for a given `beta`.
pub fn operating_points(n: usize, k: usize, d: usize, beta: usize) -> Result<(OperatingPoint, OperatingPoint)> {
    if d < 1 || d > n.saturating_sub(1) || k < 1 || k > n {
        return Err(Error::InvalidParams(format!(
            "operating points need 1 <= d <= n-1 and 1 <= k <= n, got n={n}, k={k}, d={d}"
        )));
    }
    let msr = OperatingPoint {
        kind: PointKind::Msr,
        alpha: msr_alpha(k, d, beta),
        beta,
    };
    let mbr = OperatingPoint {
        kind: PointKind::Mbr,
        alpha: d * beta,
        beta,
    };
    Ok((msr, mbr))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TradeoffPoint {
    pub alpha: usize,
    pub beta: usize,
    /// `n m alpha / B*`.
    pub storage_overhead: Rational,
    /// `d beta / alpha`.
    pub bw_overhead: Rational,
}

/// Normalized trade-off between storage overhead and inter-cluster repair
/// bandwidth overhead, sampled over the admissible `alpha` range.
///
/// With `samples == 0` every integer `alpha` in range is emitted. Otherwise
/// `(alpha, beta)` is scaled by the smallest factor that yields at least
/// `samples` integer points, and `samples` of them are picked evenly.
pub fn tradeoff_curve(n: usize, k: usize, d: usize, m: usize, ell: usize, beta: usize, samples: usize) -> Result<Vec<TradeoffPoint>> {
    if d == 0 {
        return Err(Error::InvalidParams(
            "trade-off curve needs d >= 1; use product_code_point for d = 0".into(),
        ));
    }
    let (lo, hi) = alpha_range(k, d, beta);
    let span = hi - lo;
    let scale = if samples <= 1 || span == 0 {
        1
    } else {
        let mut s = 1;
        while span * s + 1 < samples {
            s += 1;
        }
        s
    };
    let (lo, hi, beta) = (lo * scale, hi * scale, beta * scale);
    let all: Vec<usize> = (lo..=hi).collect();
    let picked: Vec<usize> = match samples {
        0 => all,
        1 => vec![hi],
        s => {
            let last = all.len() - 1;
            let mut v: Vec<usize> = (0..s)
                .map(|i| all[(i * last + (s - 1) / 2) / (s - 1)])
                .collect();
            v.dedup();
            v
        }
    };
    picked
        .into_iter()
        .map(|alpha| {
            let p = SystemParams::new(n, k, d, alpha, beta, m, ell);
            let b = file_size_bound(&p)?;
            Ok(TradeoffPoint {
                alpha,
                beta,
                storage_overhead: Rational::new((n * m * alpha) as u64, b as u64),
                bw_overhead: Rational::new((d * beta) as u64, alpha as u64),
            })
        })
        .collect()
}

/// The `d = 0` product-code point: storage overhead `n m / (ell k)`, no
/// inter-cluster traffic.
pub fn product_code_point(n: usize, k: usize, m: usize, ell: usize) -> Result<TradeoffPoint> {
    let p = SystemParams::new(n, k, 0, 1, 0, m, ell);
    let b = file_size_bound(&p)?;
    if b == 0 {
        return Err(Error::InvalidParams(
            "product code needs ell >= 1 to store anything".into(),
        ));
    }
    Ok(TradeoffPoint {
        alpha: 1,
        beta: 0,
        storage_overhead: Rational::new((n * m) as u64, b as u64),
        bw_overhead: Rational::from_integer(0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MetricsRow {
    pub ell: usize,
    pub storage_overhead: Rational,
    /// Inter-cluster repair download, `d beta`.
    pub inter_bw: usize,
    pub gamma_star: usize,
    /// `m * beta / (m - ell)`, absent when the remote-helper bound does not apply.
    pub helper_intra_bw: Option<Rational>,
}

/// Storage and bandwidth metrics at a fixed operating point for every `ell`.
pub fn system_metrics_vs_ell(n: usize, k: usize, d: usize, beta: usize, m: usize, point: OperatingPoint) -> Result<Vec<MetricsRow>> {
    (0..m)
        .map(|ell| {
            let p = SystemParams::new(n, k, d, point.alpha, beta, m, ell);
            let b = file_size_bound(&p)?;
            let helper = gamma_prime_bound(&p)
                .ok()
                .map(|g| g.bound * Rational::from_integer(m as u64));
            Ok(MetricsRow {
                ell,
                storage_overhead: Rational::new((n * m * point.alpha) as u64, b as u64),
                inter_bw: d * beta,
                gamma_star: gamma_star(&p)?,
                helper_intra_bw: helper,
            })
        })
        .collect()
}
