//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; the process exits non-zero if any fails.

use std::time::Instant;

use grc::bounds::{
    alpha_range, classical_file_size, file_size_bound, gamma_star, product_code_point, secure_file_size_bound,
    tradeoff_curve,
};
use grc::classical::NodeVector;
use grc::exact::{grc_decode, grc_encode, grc_repair, remote_helper_data, ClusterArray, GrcExactCode, Layout};
use grc::functional::{column_sum_invariant, func_collect, func_encode, func_repair, FunctionalCode, FunctionalConfig};
use grc::ifg::{
    adversarial_log_thm2, adversarial_log_thm5, adversarial_log_thm6, build_model1, build_model2, build_model2_with,
};
use grc::secure::{leakage_report, secure_grc_decode, secure_grc_encode, SecureGrcCode};
use grc::sim::{fig5_settings, mann_kendall, run_experiment, Fig5Panel};
use grc::{FieldWidth, Symbol, SystemParams};
use itertools::Itertools;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Q = Ratio<u64>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// n in 3..=5, k in 2..=n, d in 1..n, m in 1..=4, ell < m, beta in {1,2},
/// every integer alpha in the trade-off range.
fn grid() -> Vec<SystemParams> {
    let mut out = Vec::new();
    for n in 3..=5 {
        for k in 2..=n {
            for d in 1..n {
                for m in 1..=4 {
                    for ell in 0..m {
                        for beta in 1..=2 {
                            let (lo, hi) = alpha_range(k, d, beta);
                            for alpha in lo..=hi {
                                out.push(SystemParams::new(n, k, d, alpha, beta, m, ell));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Independent evaluation of the capacity expression.
fn capacity_oracle(p: &SystemParams) -> u64 {
    let mut b = p.ell * p.k * p.alpha;
    for i in 0..p.k {
        let remote = if p.d > i { (p.d - i) * p.beta } else { 0 };
        b += (p.m - p.ell) * p.alpha.min(remote);
    }
    b as u64
}

fn random_symbols(len: usize, width: FieldWidth, seed: u64) -> Vec<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| width.field().random(&mut rng)).collect()
}

fn c1_capacity_oracle() -> Outcome {
    let g = grid();
    let bad: Vec<SystemParams> = g
        .par_iter()
        .filter(|p| {
            let (log, coll) = adversarial_log_thm2(p).unwrap();
            let cut = build_model1(p, p.alpha, &log, &coll).unwrap().max_flow();
            let b = file_size_bound(p).unwrap() as u64;
            !(cut == b && b == capacity_oracle(p))
        })
        .copied()
        .collect();
    let mut detail = format!("{} parameter sets, {} mismatches", g.len(), bad.len());
    if let Some(first) = bad.first() {
        detail += &format!(", first {first:?}");
    }
    outcome(bad.is_empty(), detail)
}

fn c2_small_pin() -> Outcome {
    let p = SystemParams::new(3, 2, 2, 8, 4, 2, 1);
    let b = file_size_bound(&p).unwrap();
    let (log, coll) = adversarial_log_thm2(&p).unwrap();
    let cut = build_model1(&p, p.alpha, &log, &coll).unwrap().max_flow();
    let pass = b == 28 && b == 2 * p.alpha + 3 * p.beta && cut == 28;
    outcome(pass, format!("B* = {b}, min-cut = {cut}"))
}

fn c3_gamma_star() -> Outcome {
    let g: Vec<SystemParams> = grid().into_iter().filter(|p| p.ell >= 1).collect();
    let results: Vec<(usize, usize, usize)> = g
        .par_iter()
        .map(|p| {
            let b = capacity_oracle(p);
            let gs = p.alpha - p.alpha.min((p.d + 1).saturating_sub(p.k) * p.beta);
            assert_eq!(gs, gamma_star(p).unwrap());
            let (log, coll) = adversarial_log_thm5(p).unwrap();
            let (mut cases, mut bad_cut, mut bad_tight) = (0, 0, 0);
            for gamma in 0..=p.alpha {
                let cut = build_model1(p, gamma, &log, &coll).unwrap().max_flow();
                let tail = p.alpha.min((p.d + 1).saturating_sub(p.k) * p.beta);
                let formula = (b as usize - p.alpha + tail + gamma) as u64;
                cases += 1;
                if cut != formula.min(b) {
                    bad_cut += 1;
                }
                if (cut >= b) != (gamma >= gs) {
                    bad_tight += 1;
                }
            }
            (cases, bad_cut, bad_tight)
        })
        .collect();
    let cases: usize = results.iter().map(|r| r.0).sum();
    let bad_cut: usize = results.iter().map(|r| r.1).sum();
    let bad_tight: usize = results.iter().map(|r| r.2).sum();
    outcome(
        bad_cut == 0 && bad_tight == 0,
        format!("{cases} (params, gamma) cases with ell >= 1; cut != min(formula, B*): {bad_cut}; tight-iff mismatches: {bad_tight}"),
    )
}

fn c4_remote_bounds() -> Outcome {
    let g: Vec<SystemParams> = grid()
        .into_iter()
        .filter(|p| adversarial_log_thm6(p).is_ok())
        .collect();
    // Remote bandwidth side.
    let side_a: Vec<(usize, usize)> = g
        .par_iter()
        .map(|p| {
            let b = capacity_oracle(p);
            let (log, coll) = adversarial_log_thm6(p).unwrap();
            let mut cases = 0;
            let mut bad = 0;
            for gp in 0..=p.alpha {
                let starved = (p.m - p.ell) * gp < p.beta;
                let exact = p.beta % (p.m - p.ell) == 0 && gp == p.beta / (p.m - p.ell);
                if !starved && !exact {
                    continue;
                }
                cases += 1;
                let cut = build_model2(p, p.m, gp, &log, &coll).unwrap().max_flow();
                if (starved && cut >= b) || (exact && cut < b) {
                    bad += 1;
                }
            }
            (cases, bad)
        })
        .collect();
    let a_cases: usize = side_a.iter().map(|x| x.0).sum();
    let a_bad: usize = side_a.iter().map(|x| x.1).sum();
    // Contributor-count side: ell' < m with gamma = gamma' = alpha, worst
    // contributor subset.
    let side_b: Vec<(SystemParams, usize, bool)> = g
        .par_iter()
        .flat_map_iter(|p| {
            let b = capacity_oracle(p);
            let (log, coll) = adversarial_log_thm6(p).unwrap();
            (1..p.m)
                .map(|lp| {
                    let worst = (0..p.m)
                        .combinations(lp)
                        .map(|sub| build_model2_with(p, &sub, p.alpha, &log, &coll).unwrap().max_flow())
                        .min()
                        .unwrap();
                    (*p, lp, worst < b)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let b_bad: Vec<&(SystemParams, usize, bool)> = side_b.iter().filter(|x| !x.2).collect();
    let b_bad_above_ell = b_bad.iter().filter(|x| x.1 > x.0.ell).count();
    outcome(
        a_bad == 0 && b_bad.is_empty(),
        format!(
            "gamma' side: {a_cases} cases, {a_bad} violations; ell' < m side: {} cases, {} reach B* ({} of them with ell' > ell)",
            side_b.len(),
            b_bad.len(),
            b_bad_above_ell
        ),
    )
}

fn exhaustive_exact(p: &SystemParams) -> Result<String, String> {
    let code = GrcExactCode::build(p).map_err(|e| e.to_string())?;
    let b = file_size_bound(p).unwrap();
    if code.file_size() != b {
        return Err(format!("file size {} != {b}", code.file_size()));
    }
    let file = random_symbols(b, p.field_width, 11);
    let arr = grc_encode(&code, &file).map_err(|e| e.to_string())?;
    let bytes = arr.to_bytes();
    let back = ClusterArray::from_bytes(p.field_width, p.n, p.m, p.alpha, &bytes).map_err(|e| e.to_string())?;
    if back != arr || back.to_bytes() != bytes {
        return Err("byte round trip differs".into());
    }
    let mut repairs = 0;
    for i in 0..p.n {
        for j in 0..p.m {
            for locals in (0..p.m).filter(|&x| x != j).combinations(p.ell) {
                for remotes in (0..p.n).filter(|&c| c != i).combinations(p.d) {
                    let payloads: Vec<(usize, Vec<Symbol>)> = remotes
                        .iter()
                        .map(|&h| (h, remote_helper_data(&code, arr.cluster(h), h, (i, j), &locals).unwrap()))
                        .collect();
                    let inter: usize = payloads.iter().map(|x| x.1.len()).sum();
                    if inter != p.d * p.beta {
                        return Err(format!("repair used {inter} inter-cluster symbols"));
                    }
                    let local: Vec<(usize, &[Symbol])> = locals.iter().map(|&l| (l, arr.node(i, l))).collect();
                    let out = grc_repair(&code, (i, j), &local, &payloads).map_err(|e| e.to_string())?;
                    if out != arr.node(i, j) {
                        return Err(format!("node ({i},{j}) repaired wrongly"));
                    }
                    repairs += 1;
                }
            }
        }
    }
    let mut collectors = 0;
    for set in (0..p.n).combinations(p.k) {
        let view: Vec<(usize, &[NodeVector])> = set.iter().map(|&c| (c, arr.cluster(c))).collect();
        if grc_decode(&code, &view).map_err(|e| e.to_string())? != file {
            return Err(format!("collector {set:?} decoded wrongly"));
        }
        collectors += 1;
    }
    Ok(format!("B*={b}: {repairs} repairs, {collectors} collectors"))
}

fn c5_construction1() -> Outcome {
    let a = exhaustive_exact(&SystemParams::new(4, 3, 3, 3, 1, 4, 3));
    let b = exhaustive_exact(&SystemParams::new(5, 3, 4, 4, 1, 3, 2));
    let pass = a.is_ok() && b.is_ok();
    let show = |r: Result<String, String>| r.unwrap_or_else(|e| format!("error: {e}"));
    outcome(pass, format!("(4,3,3;4,3) {}; (5,3,4;3,2) {}", show(a), show(b)))
}

fn c6_stacked_msr() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for ell in 0..3 {
        let p = SystemParams::new(6, 3, 4, 2, 1, 3, ell);
        let code = GrcExactCode::stacked_msr(&p).unwrap();
        let b = file_size_bound(&p).unwrap();
        pass &= b == 18 && code.file_size() == 18 && code.layout() == Layout::StackedMsr && code.local_used() == 0;
        let file = random_symbols(18, p.field_width, 3);
        let arr = grc_encode(&code, &file).unwrap();
        // Local contents are replaced by garbage: a repair with gamma = 0
        // must not depend on them.
        let garbage = vec![0xAB as Symbol; p.alpha];
        let mut ok = 0;
        for i in 0..p.n {
            for j in 0..p.m {
                let locals: Vec<usize> = (0..p.m).filter(|&x| x != j).take(ell).collect();
                let local: Vec<(usize, &[Symbol])> = locals.iter().map(|&l| (l, garbage.as_slice())).collect();
                for remotes in (0..p.n).filter(|&c| c != i).combinations(p.d) {
                    let payloads: Vec<(usize, Vec<Symbol>)> = remotes
                        .iter()
                        .map(|&h| (h, remote_helper_data(&code, arr.cluster(h), h, (i, j), &locals).unwrap()))
                        .collect();
                    if grc_repair(&code, (i, j), &local, &payloads).unwrap() == arr.node(i, j) {
                        ok += 1;
                    } else {
                        pass = false;
                    }
                }
            }
        }
        for set in (0..p.n).combinations(p.k) {
            let view: Vec<(usize, &[NodeVector])> = set.iter().map(|&c| (c, arr.cluster(c))).collect();
            pass &= grc_decode(&code, &view).unwrap() == file;
        }
        notes.push(format!("ell={ell}: B*={b}, {ok} repairs without local data"));
    }
    outcome(pass, notes.join("; "))
}

fn c7_construction2() -> Outcome {
    let p = SystemParams::new(5, 3, 3, 3, 1, 3, 2).with_width(FieldWidth::W16);
    let per_seed: Vec<(usize, usize, Vec<String>)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let code = FunctionalCode::new(&p, FunctionalConfig { seed, full_degree: false }).unwrap();
            let file = random_symbols(code.file_size(), p.field_width, 100 + seed);
            let mut st = func_encode(&code, &file).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut checks, mut fails, mut errs) = (0, 0, Vec::new());
            for _ in 0..100 {
                let i = rng.gen_range(0..p.n);
                let j = rng.gen_range(0..p.m);
                let others: Vec<usize> = (0..p.n).filter(|&c| c != i).collect();
                let mut remotes: Vec<usize> = others.choose_multiple_sorted(&mut rng, p.d);
                remotes.sort_unstable();
                func_repair(&mut st, (i, j), &remotes).unwrap();
                if !column_sum_invariant(&st).unwrap_or(false) {
                    fails += 1;
                    errs.push(format!("seed {seed} t {}: column sums not decodable", st.t()));
                }
                for set in (0..p.n).combinations(p.k) {
                    let view: Vec<(usize, &[NodeVector])> = set.iter().map(|&c| (c, st.nodes.cluster(c))).collect();
                    checks += 1;
                    match func_collect(&code, &view, &st.history) {
                        Ok(out) if out == file => {}
                        Ok(_) => {
                            fails += 1;
                            errs.push(format!("seed {seed} t {} {set:?}: wrong file", st.t()));
                        }
                        Err(e) => {
                            fails += 1;
                            errs.push(format!("seed {seed} t {} {set:?}: {e}", st.t()));
                        }
                    }
                }
            }
            (checks, fails, errs)
        })
        .collect();
    let checks: usize = per_seed.iter().map(|x| x.0).sum();
    let fails: usize = per_seed.iter().map(|x| x.1).sum();
    let first = per_seed.iter().flat_map(|x| x.2.iter()).next().cloned().unwrap_or_default();
    outcome(fails == 0, format!("20 seeds x 100 repairs, {checks} collections, {fails} failures {first}"))
}

trait ChooseSorted {
    fn choose_multiple_sorted<R: Rng>(&self, rng: &mut R, amount: usize) -> Vec<usize>;
}

impl ChooseSorted for Vec<usize> {
    fn choose_multiple_sorted<R: Rng>(&self, rng: &mut R, amount: usize) -> Vec<usize> {
        use rand::seq::SliceRandom;
        self.choose_multiple(rng, amount).copied().collect()
    }
}

fn c8_simulation() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for panel in [Fig5Panel::A, Fig5Panel::B, Fig5Panel::C] {
        for s in fig5_settings(panel, 200, 50, 1).unwrap() {
            let rates = run_experiment(&s.config).unwrap().rates();
            let min = rates.iter().cloned().fold(1.0, f64::min);
            let mk = mann_kendall(&rates);
            let ok = if s.sufficient { min >= 0.99 } else { mk.s < 0 };
            pass &= ok;
            notes.push(if s.sufficient {
                format!("{:?}/{} min {:.3}{}", panel, s.label, min, if ok { "" } else { " FAIL" })
            } else {
                format!("{:?}/{} S={}{}", panel, s.label, mk.s, if ok { "" } else { " FAIL" })
            });
        }
    }
    outcome(pass, notes.join(", "))
}

fn c9_dominance() -> Outcome {
    let (n, k, m) = (4, 3, 4);
    let product = product_code_point(n, k, m, 3).unwrap();
    let stacked = *tradeoff_curve(n, k, 3, m, 0, 1, 0).unwrap().last().unwrap();
    let grc = *tradeoff_curve(n, k, 3, m, 3, 1, 0).unwrap().last().unwrap();
    let (x0, y0) = (product.bw_overhead, product.storage_overhead);
    let (x1, y1) = (stacked.bw_overhead, stacked.storage_overhead);
    let (x, y) = (grc.bw_overhead, grc.storage_overhead);
    // Segment height at x; the segment rises from the product point.
    let seg = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    let pass = y == Q::new(16, 11) && x == Q::from_integer(1) && y < seg && x0 <= x && x <= x1;
    outcome(
        pass,
        format!("product ({x0}, {y0}), stacked MBR ({x1}, {y1}), GRC ({x}, {y}), segment at x: {seg}"),
    )
}

fn c10_security() -> Outcome {
    let p = SystemParams::new(4, 3, 3, 3, 1, 4, 3);
    let code = SecureGrcCode::new(&p, 1).unwrap();
    let bound = secure_file_size_bound(&p, 1).unwrap();
    let secret = random_symbols(code.secret_size(), p.field_width, 21);
    let rand = random_symbols(code.rand_size(), p.field_width, 22);
    let arr = secure_grc_encode(&code, &secret, &rand).unwrap();
    let decoded = (0..p.n).combinations(p.k).all(|set| {
        let view: Vec<(usize, &[NodeVector])> = set.iter().map(|&c| (c, arr.cluster(c))).collect();
        secure_grc_decode(&code, &view).unwrap() == secret
    });
    let report = leakage_report(&code).unwrap();
    let clean = report.iter().filter(|x| x.1).count();
    let pass = code.secret_size() == 21 && bound == 21 && decoded && clean == report.len() && report.len() == 4;
    outcome(
        pass,
        format!("B(s) = {} (bound {bound}), collectors decode: {decoded}, leak-free views: {clean}/{}", code.secret_size(), report.len()),
    )
}

fn c11_tradeoff() -> Outcome {
    let mut pass = true;
    let mut points = 0;
    for n in 3..=6 {
        for k in 1..=n {
            for d in 1..n {
                for m in 1..=4 {
                    for beta in 1..=2 {
                        for pt in tradeoff_curve(n, k, d, m, 0, beta, 0).unwrap() {
                            let classical = classical_file_size(k, d, pt.alpha, pt.beta) as u64;
                            pass &= pt.storage_overhead == Q::new((n * pt.alpha) as u64, classical);
                            pass &= pt.bw_overhead == Q::new((d * pt.beta) as u64, pt.alpha as u64);
                            points += 1;
                        }
                    }
                }
            }
        }
    }
    let mut fam = Vec::new();
    for m in [1usize, 2, 5, 10] {
        let mbr = *tradeoff_curve(5, 4, 4, m, m - 1, 1, 0).unwrap().last().unwrap();
        let want = Q::new(20 * m as u64, 16 * m as u64 - 6);
        pass &= mbr.storage_overhead == want;
        fam.push(format!("m={m}: {}", mbr.storage_overhead));
    }
    outcome(pass, format!("{points} no-local points match classical; MBR overheads {}", fam.join(", ")))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 capacity equals staged-history min-cut on the grid", c1_capacity_oracle),
        ("2 two-cluster pin B* = 2a + 3b = 28", c2_small_pin),
        ("3 local bandwidth threshold gamma*", c3_gamma_star),
        ("4 remote helper bandwidth and contributor count", c4_remote_bounds),
        ("5 exact-repair construction exhaustive", c5_construction1),
        ("6 stacked MSR without local help", c6_stacked_msr),
        ("7 functional-repair construction with rewind decoding", c7_construction2),
        ("8 RLNC simulation trends", c8_simulation),
        ("9 dominance over space sharing", c9_dominance),
        ("10 eavesdropper security", c10_security),
        ("11 trade-off curve sanity", c11_tradeoff),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {name} ({:.1?}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
