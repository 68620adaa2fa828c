//! Analysis subcommands: bounds, trade-off curves, metrics, simulation,
//! flow-graph verification and security reports.

use anyhow::{bail, Context, Result};
use grc::bounds::{
    file_size_bound, gamma_prime_bound, gamma_star, operating_points, product_code_point, secure_file_size_bound,
    system_metrics_vs_ell, tradeoff_curve, Rational, TradeoffPoint,
};
use grc::ifg::{adversarial_log_thm6, build_model2_with, verify_capacity_with, VerifyOptions};
use grc::secure::{leakage_report, SecureGrcCode};
use grc::sim::{mann_kendall, run_experiment, CollectionChecks, Schedule, SimConfig};
use grc::{IntraParams, OperatingPoint, SystemParams};
use itertools::Itertools;
use serde::Serialize;
use serde_json::{json, Value};

fn ratio(r: Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn ratio_value(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn point_json(p: OperatingPoint) -> Value {
    json!({ "alpha": p.alpha, "beta": p.beta })
}

pub fn bounds(p: &SystemParams, e: Option<usize>) -> Result<Value> {
    let mut out = json!({
        "params": p,
        "B_star": file_size_bound(p)?,
    });
    let obj = out.as_object_mut().expect("object literal");
    if let Some(e) = e {
        obj.insert("e".into(), json!(e));
        obj.insert("B_secure".into(), json!(secure_file_size_bound(p, e)?));
    }
    if p.d > 0 {
        obj.insert("gamma_star".into(), json!(gamma_star(p)?));
        if let Ok(g) = gamma_prime_bound(p) {
            obj.insert(
                "gamma_prime_bound".into(),
                json!({ "bound": ratio(g.bound), "ceil": g.ceil, "ell_prime_required": g.ell_prime_required }),
            );
        }
        let (msr, mbr) = operating_points(p.n, p.k, p.d, p.beta)?;
        obj.insert("operating_points".into(), json!({ "msr": point_json(msr), "mbr": point_json(mbr) }));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct TradeoffRow {
    pub family: String,
    pub m: usize,
    pub ell: usize,
    pub alpha: usize,
    pub beta: usize,
    pub storage_overhead: String,
    pub bw_overhead: String,
    pub storage_overhead_value: f64,
    pub bw_overhead_value: f64,
}

fn row(family: &str, m: usize, ell: usize, t: TradeoffPoint) -> TradeoffRow {
    TradeoffRow {
        family: family.into(),
        m,
        ell,
        alpha: t.alpha,
        beta: t.beta,
        storage_overhead: ratio(t.storage_overhead),
        bw_overhead: ratio(t.bw_overhead),
        storage_overhead_value: ratio_value(t.storage_overhead),
        bw_overhead_value: ratio_value(t.bw_overhead),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    /// Every `ell` in `0..m`.
    Grc,
    /// `ell = 0`: m stacked classical codes.
    Stacked,
    /// The `d = 0` product code with the given `ell`.
    Product,
    All,
}

/// With `m_sweep` set, emits one `ell = m-1` curve per listed `m`.
pub fn tradeoff(p: &SystemParams, family: Family, samples: usize, m_sweep: Option<&[usize]>) -> Result<Vec<TradeoffRow>> {
    let mut rows = Vec::new();
    if let Some(ms) = m_sweep {
        for &m in ms {
            for t in tradeoff_curve(p.n, p.k, p.d, m, m - 1, p.beta, samples)? {
                rows.push(row("grc", m, m - 1, t));
            }
        }
        return Ok(rows);
    }
    let want = |f: Family| family == f || family == Family::All;
    if want(Family::Product) {
        let ell = if p.ell > 0 { p.ell } else { p.m.saturating_sub(1) };
        rows.push(row("product", p.m, ell, product_code_point(p.n, p.k, p.m, ell)?));
    }
    if p.d > 0 {
        if want(Family::Stacked) {
            for t in tradeoff_curve(p.n, p.k, p.d, p.m, 0, p.beta, samples)? {
                rows.push(row("stacked", p.m, 0, t));
            }
        }
        if want(Family::Grc) {
            for ell in 0..p.m {
                for t in tradeoff_curve(p.n, p.k, p.d, p.m, ell, p.beta, samples)? {
                    rows.push(row("grc", p.m, ell, t));
                }
            }
        }
    } else if family != Family::Product && family != Family::All {
        bail!("curves need d >= 1; with d = 0 only the product point exists");
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
pub struct MetricsCsvRow {
    pub ell: usize,
    pub storage_overhead: String,
    pub storage_overhead_value: f64,
    pub inter_bw: usize,
    pub gamma_star: usize,
    pub helper_intra_bw: Option<String>,
}

pub fn metrics(p: &SystemParams, msr: bool) -> Result<Vec<MetricsCsvRow>> {
    let (lo, hi) = operating_points(p.n, p.k, p.d, p.beta)?;
    let point = if msr { lo } else { hi };
    Ok(system_metrics_vs_ell(p.n, p.k, p.d, p.beta, p.m, point)?
        .into_iter()
        .map(|r| MetricsCsvRow {
            ell: r.ell,
            storage_overhead: ratio(r.storage_overhead),
            storage_overhead_value: ratio_value(r.storage_overhead),
            inter_bw: r.inter_bw,
            gamma_star: r.gamma_star,
            helper_intra_bw: r.helper_intra_bw.map(ratio),
        })
        .collect())
}

pub struct SimulateOutput {
    pub rows: Vec<grc::sim::SimRow>,
    pub trend: grc::sim::MannKendall,
}

pub fn simulate(
    p: &SystemParams,
    intra: IntraParams,
    trials: usize,
    repairs: usize,
    schedule: Schedule,
    seed: u64,
    checks: CollectionChecks,
) -> Result<SimulateOutput> {
    let cfg = SimConfig {
        params: *p,
        intra,
        trials,
        repairs_max: repairs,
        schedule,
        seed,
        checks,
    };
    let res = run_experiment(&cfg)?;
    let trend = mann_kendall(&res.rates());
    Ok(SimulateOutput { rows: res.rows, trend })
}

#[derive(Debug, Serialize)]
pub struct VerifyRow {
    pub params: SystemParams,
    pub gamma: usize,
    #[serde(rename = "B_star")]
    pub b_star: u64,
    pub mincut: u64,
    pub tight: bool,
    pub gamma_star: usize,
    pub random_logs: usize,
    pub random_min_cut: Option<u64>,
    pub converse_holds: bool,
}

/// Local-bandwidth reports for the listed `gamma` values. The flag is false
/// when a random history at `gamma >= gamma*` cut below capacity.
pub fn verify_local(p: &SystemParams, gammas: &[usize], random_logs: usize, seed: u64) -> Result<(Vec<VerifyRow>, bool)> {
    if p.d == 0 {
        bail!("verification needs d >= 1 (with d = 0 repairs are purely local)");
    }
    let opts = VerifyOptions {
        random_logs,
        seed,
        ..VerifyOptions::default()
    };
    let mut ok = true;
    let rows = gammas
        .iter()
        .map(|&g| {
            let r = verify_capacity_with(p, g, opts)?;
            ok &= r.converse_holds;
            Ok(VerifyRow {
                params: r.params,
                gamma: r.gamma,
                b_star: r.b_star,
                mincut: r.mincut,
                tight: r.tight,
                gamma_star: r.gamma_star,
                random_logs: r.random_logs,
                random_min_cut: r.random_min_cut,
                converse_holds: r.converse_holds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, ok))
}

#[derive(Debug, Serialize)]
pub struct RemoteVerifyRow {
    pub params: SystemParams,
    pub ell_prime: usize,
    pub gamma_prime: usize,
    #[serde(rename = "B_star")]
    pub b_star: u64,
    /// Smallest min-cut over every choice of contributing nodes.
    pub mincut: u64,
    pub tight: bool,
}

/// Remote-bandwidth report on the staged two-phase history.
pub fn verify_remote(p: &SystemParams, ell_prime: usize, gamma_prime: usize) -> Result<RemoteVerifyRow> {
    if ell_prime == 0 || ell_prime > p.m || gamma_prime > p.alpha {
        bail!("need 1 <= ell' <= m and gamma' <= alpha");
    }
    let (log, coll) = adversarial_log_thm6(p).context("remote-helper history")?;
    let b = file_size_bound(p)? as u64;
    let mut mincut = u64::MAX;
    for sub in (0..p.m).combinations(ell_prime) {
        mincut = mincut.min(build_model2_with(p, &sub, gamma_prime, &log, &coll)?.max_flow());
    }
    Ok(RemoteVerifyRow {
        params: *p,
        ell_prime,
        gamma_prime,
        b_star: b,
        mincut,
        tight: mincut >= b,
    })
}

/// Security summary; the flag is false when some view leaks.
pub fn secure(p: &SystemParams, e: usize, check_leakage: bool) -> Result<(Value, bool)> {
    let code = SecureGrcCode::new(p, e)?;
    let mut out = json!({
        "params": p,
        "e": e,
        "B_secure": code.secret_size(),
        "bound": secure_file_size_bound(p, e)?,
        "randomness": code.rand_size(),
    });
    let mut ok = true;
    if check_leakage {
        let report = leakage_report(&code)?;
        ok = report.iter().all(|x| x.1);
        let list: Vec<Value> = report
            .into_iter()
            .map(|(c, leak_free)| json!({ "clusters": c, "leak_free": leak_free }))
            .collect();
        out.as_object_mut().expect("object literal").insert("leakage".into(), Value::Array(list));
    }
    Ok((out, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_render_reduced() {
        assert_eq!(ratio(Rational::new(6, 3)), "2");
        assert_eq!(ratio(Rational::new(20, 13)), "20/13");
    }

    #[test]
    fn product_code_bounds_skip_gamma() {
        let p = SystemParams::new(3, 2, 0, 2, 0, 3, 2);
        let v = bounds(&p, None).unwrap();
        assert!(v.get("gamma_star").is_none());
        assert!(v.get("B_secure").is_none());
    }

    #[test]
    fn grc_curves_cover_every_ell() {
        let p = SystemParams::new(5, 4, 4, 4, 1, 3, 2);
        let rows = tradeoff(&p, Family::Grc, 0, None).unwrap();
        let ells: std::collections::BTreeSet<usize> = rows.iter().map(|r| r.ell).collect();
        assert_eq!(ells.into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(tradeoff(&SystemParams::new(3, 2, 0, 2, 0, 3, 2), Family::Grc, 0, None).is_err());
    }

    #[test]
    fn remote_report_is_tight_with_full_contribution() {
        let p = SystemParams::new(3, 2, 2, 8, 4, 3, 1);
        let r = verify_remote(&p, 3, 8).unwrap();
        assert!(r.tight);
        assert_eq!(r.b_star, 40);
    }
}
