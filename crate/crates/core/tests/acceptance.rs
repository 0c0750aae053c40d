//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::*;
use dirac_core::kernel::{build_n, neumann_solve, KernelField, TriangleGrid};
use dirac_core::ode::OdeOptions;
use dirac_core::remainders::{
    gamma2, kernel_bounds, product_identity_discrepancy, remainder_bounds,
    transfer_identity_discrepancy, verify_row_estimates, BoundCheck, IteratedFields,
    RemainderProfile,
};
use dirac_core::solver::{
    approx_d0, approx_leading, approx_n, solve_direct, solve_via_kernel, FundamentalSample,
};
use dirac_core::spectrum::{
    asymptotic_eigenfunction_full, asymptotic_eigenfunction_short, decay_report, dyadic_medians,
    dyadic_sums, eigenfunction, eigenfunction_ode_residual, locate_eigenvalues, EigenRecord,
    LocateOptions,
};
use dirac_core::{Complex64, PotentialPair};

const D: f64 = 2.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn kernel(pair: &PotentialPair, m: usize) -> KernelField {
    neumann_solve(pair, TriangleGrid::new(m).unwrap(), 1e-10)
        .unwrap()
        .0
}

fn locate(
    pair: &PotentialPair,
    q: &KernelField,
    range: std::ops::RangeInclusive<i64>,
) -> Vec<EigenRecord> {
    locate_eigenvalues(pair, q, range, &LocateOptions::default()).unwrap()
}

fn strictly_decreasing(v: &[(i64, f64)]) -> bool {
    v.windows(2).all(|w| w[1].1 < w[0].1)
}

fn non_increasing(v: &[(i64, f64)]) -> bool {
    v.windows(2).all(|w| w[1].1 <= w[0].1)
}

fn fmt_blocks(v: &[(i64, f64)]) -> String {
    v.iter()
        .map(|(n, m)| format!("{n}:{m:.3e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// `sup_x Σ |entries|` of the difference of two samples.
fn sup_sum_norm(a: &FundamentalSample, b: &FundamentalSample) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// The 64-point sweep in `P_2` used by the inequality suite.
fn p2_sweep() -> Vec<Complex64> {
    (0..64)
        .map(|k| {
            let t = k as f64 / 63.0;
            c(-150.0 + 300.0 * t + 0.37, 1.95 * (2.7 * k as f64).sin())
        })
        .collect()
}

fn criterion1(records: &mut Vec<(String, PotentialPair, EigenRecord)>) -> Verdict {
    let pair = zero_pair();
    let q = kernel(&pair, 512);
    let recs = locate(&pair, &q, -8..=8);
    let eig_err = recs
        .iter()
        .map(|r| (r.mu - PI * r.n as f64).norm())
        .fold(0.0, f64::max);
    let mut d_err: f64 = 0.0;
    let mus: Vec<Complex64> = recs
        .iter()
        .map(|r| r.mu)
        .chain([c(2.0, 1.0), c(-5.5, -2.0)])
        .collect();
    for mu in mus {
        let exact = approx_leading(mu, 64);
        let dir = solve_direct(&pair, mu, 64, &OdeOptions::default()).unwrap();
        let ker = solve_via_kernel(&pair, &q, mu, 64).unwrap();
        d_err = d_err
            .max(dir.sup_distance(&exact).unwrap())
            .max(ker.sup_distance(&exact).unwrap());
    }
    let ok = recs.len() == 17 && eig_err < 1e-10 && d_err < 1e-10;
    records.extend(
        recs.into_iter()
            .map(|r| ("zero".to_string(), pair.clone(), r)),
    );
    Verdict {
        pass: ok,
        detail: format!(
            "17 eigenvalues, max |mu_n - pi n| = {eig_err:.2e}; max D error = {d_err:.2e}"
        ),
    }
}

fn criterion2(records: &mut Vec<(String, PotentialPair, EigenRecord)>) -> Verdict {
    let cc = 0.5;
    let pair = constant_pair(cc);
    let q = kernel(&pair, 512);
    let recs = locate(&pair, &q, 0..=32);
    let mut eig_err: f64 = 0.0;
    let mut mu0_rel: f64 = 0.0;
    let mut zero_at_0 = false;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in &recs {
        let nf = r.n as f64;
        if r.n == 0 {
            zero_at_0 = r.mu.norm() < 1e-8;
            continue;
        }
        eig_err = eig_err.max((r.mu - (PI * PI * nf * nf + cc * cc).sqrt()).norm());
        if r.n >= 4 {
            let expect = cc * cc / (2.0 * PI * nf);
            mu0_rel = mu0_rel.max((r.mu0 - expect).norm() / expect);
        }
        if r.n >= 8 {
            xs.push(nf);
            ys.push(r.rho.norm());
        }
    }
    let slope = loglog_slope(&xs, &ys);
    let ok = recs.len() == 33
        && zero_at_0
        && eig_err < 1e-8
        && mu0_rel < 1e-3
        && (slope + 3.0).abs() <= 0.3;
    records.extend(
        recs.into_iter()
            .filter(|r| r.n != 0)
            .map(|r| ("constant".to_string(), pair.clone(), r)),
    );
    Verdict {
        pass: ok,
        detail: format!(
            "zero at 0: {zero_at_0}; max eigenvalue error {eig_err:.2e}; max mu0 rel error (n>=4) {mu0_rel:.2e}; \
             slope of |rho_n| over n=8..32 = {slope:.3}"
        ),
    }
}

fn criterion3() -> Verdict {
    let pair = trig_pair();
    let q = kernel(&pair, 512);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for mu in [c(1.0, 0.0), c(10.3, 0.0), c(50.0, 0.5), c(200.0, 0.0)] {
        let dir = solve_direct(&pair, mu, 512, &OdeOptions::default()).unwrap();
        let ker = solve_via_kernel(&pair, &q, mu, 512).unwrap();
        let e = dir.sup_distance(&ker).unwrap();
        parts.push(format!("{mu}:{e:.2e}"));
        worst = worst.max(e);
    }
    Verdict {
        pass: worst <= 1e-6,
        detail: format!("sup discrepancy {worst:.2e} [{}]", parts.join(" ")),
    }
}

/// Floor below which a discrepancy is taken to be rounding.
const ROUNDOFF_FLOOR: f64 = 1e-11;

fn criterion4() -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    let mut worst_product: f64 = 0.0;
    for (name, pair) in all_pairs() {
        for mu in [c(3.3, 0.0), c(41.0, -1.2), c(150.0, 2.0)] {
            worst_product = worst_product.max(product_identity_discrepancy(&pair, mu, 64));
        }
        let mu = c(13.0, 0.7);
        let errs: Vec<f64> = [32usize, 64, 128]
            .iter()
            .map(|&m| {
                transfer_identity_discrepancy(&pair, TriangleGrid::new(m).unwrap(), mu).unwrap()
            })
            .collect();
        let order = if errs[2] > ROUNDOFF_FLOOR {
            Some((errs[1] / errs[2]).log2())
        } else if errs[1] > ROUNDOFF_FLOOR {
            Some((errs[0] / errs[1]).log2())
        } else {
            None
        };
        let pair_ok = order.is_none_or(|o| o >= 1.8);
        ok &= pair_ok;
        lines.push(format!(
            "{name}: errs {:.1e}/{:.1e}/{:.1e} order {}",
            errs[0],
            errs[1],
            errs[2],
            order.map_or("at rounding".to_string(), |o| format!("{o:.2}"))
        ));
    }
    ok &= worst_product <= 1e-8;
    Verdict {
        pass: ok,
        detail: format!(
            "product identity max {worst_product:.2e}; transfer identity {}",
            lines.join("; ")
        ),
    }
}

fn criterion5() -> Verdict {
    let sweep = p2_sweep();
    let mut failures: Vec<BoundCheck> = Vec::new();
    let mut count = 0usize;
    let mut tightest = (f64::INFINITY, String::new());
    for (name, pair) in all_pairs() {
        let grid = TriangleGrid::new(256).unwrap();
        let q = neumann_solve(&pair, grid, 1e-12).unwrap().0;
        let fields = IteratedFields::build(&pair, grid).unwrap();
        let mut checks: Vec<BoundCheck> = kernel_bounds(&pair, &q).unwrap();
        for rec in verify_row_estimates(&pair, &fields, &sweep, D) {
            checks.extend(rec.checks);
        }
        for &mu in &sweep {
            checks.extend(remainder_bounds(
                &pair,
                &RemainderProfile::new(&pair, mu, 256, D),
            ));
        }
        for ch in checks {
            count += 1;
            if ch.rhs > 0.0 {
                let rel = ch.margin() / ch.rhs;
                if rel < tightest.0 {
                    tightest = (rel, format!("{name}/{}", ch.name));
                }
            }
            if !ch.holds() {
                failures.push(ch);
            }
        }
    }
    let detail = if failures.is_empty() {
        format!(
            "{count} checks, all hold; tightest relative margin {:.3e} ({})",
            tightest.0, tightest.1
        )
    } else {
        let f = &failures[0];
        format!(
            "{count} checks, {} violated; first: {} lhs {:.3e} rhs {:.3e}",
            failures.len(),
            f.name,
            f.lhs,
            f.rhs
        )
    };
    Verdict {
        pass: failures.is_empty(),
        detail,
    }
}

fn criterion6(records: &mut Vec<(String, PotentialPair, EigenRecord)>) -> Verdict {
    let pair = singular_pair();
    let q = kernel(&pair, 512);
    let recs = locate(&pair, &q, 1..=256);
    let rep = decay_report(&recs, &pair, 256);
    let med = dyadic_medians(&rep.n, &rep.rho_abs);
    let pow: Vec<f64> = rep.rho_abs.iter().map(|r| r.powf(0.5 * rep.q)).collect();
    let inc = dyadic_sums(&rep.n, &pow);
    let shrink: Vec<f64> = inc.windows(2).map(|w| w[0].1 / w[1].1).collect();
    let ok_med = strictly_decreasing(&med);
    let ok_inc = shrink.iter().all(|&s| s >= 4.0);
    let total = rep
        .partial_sums
        .as_ref()
        .and_then(|s| s.last().copied())
        .unwrap_or(f64::NAN);
    records.extend(
        recs.into_iter()
            .map(|r| ("singular".to_string(), pair.clone(), r)),
    );
    Verdict {
        pass: ok_med && ok_inc,
        detail: format!(
            "|rho_n| block medians strictly decreasing: {ok_med} [{}]; S_256 = {total:.4e}; \
             increment shrink factors per block {:?} (need >= 4)",
            fmt_blocks(&med),
            shrink.iter().map(|s| format!("{s:.2}")).collect::<Vec<_>>()
        ),
    }
}

fn criterion7(records: &mut Vec<(String, PotentialPair, EigenRecord)>) -> Verdict {
    let pair = step_pair();
    let q = kernel(&pair, 512);
    let recs = locate(&pair, &q, 8..=128);
    let rep = decay_report(&recs, &pair, 512);
    let max_ratio = rep.ratio.iter().copied().fold(0.0, f64::max);
    let med = dyadic_medians(&rep.n, &rep.ratio);
    let ok = max_ratio.is_finite() && non_increasing(&med);
    records.extend(
        recs.into_iter()
            .map(|r| ("step".to_string(), pair.clone(), r)),
    );
    Verdict {
        pass: ok,
        detail: format!(
            "max |rho_n|/Gamma^2(pi n) = {max_ratio:.4}; block medians [{}]",
            fmt_blocks(&med)
        ),
    }
}

fn criterion8(records: &mut Vec<(String, PotentialPair, EigenRecord)>) -> Verdict {
    let trig = trig_pair();
    let tq = kernel(&trig, 512);
    records.extend(
        locate(&trig, &tq, 1..=63)
            .into_iter()
            .map(|r| ("trig".to_string(), trig.clone(), r)),
    );
    let opts = OdeOptions::default();
    let m = 64;
    let mut worst_bc: f64 = 0.0;
    let mut worst_ode: f64 = 0.0;
    for (_, pair, r) in records.iter() {
        let ef = eigenfunction(pair, r.mu, m, &opts).unwrap();
        worst_bc = worst_bc.max(ef.boundary_residual);
        worst_ode = worst_ode.max(eigenfunction_ode_residual(pair, r.mu, m, &opts).unwrap());
    }
    let mut ok = worst_bc <= 1e-8 && worst_ode <= 1e-6;
    let mut lines = Vec::new();
    for name in ["zero", "constant", "trig", "step", "singular"] {
        let mut recs: Vec<&(String, PotentialPair, EigenRecord)> = records
            .iter()
            .filter(|(k, _, r)| k == name && (1..=63).contains(&r.n))
            .collect();
        recs.sort_by_key(|(_, _, r)| r.n);
        let Some((_, pair, _)) = recs.first() else {
            continue;
        };
        let nf = (pair.p() > 1.0).then(|| build_n(pair, TriangleGrid::new(4 * m).unwrap()));
        let mut ns = Vec::new();
        let (mut full, mut short) = (Vec::new(), Vec::new());
        for (_, pair, r) in &recs {
            let ef = eigenfunction(pair, r.mu, m, &opts).unwrap().values;
            ns.push(r.n);
            short.push(asymptotic_eigenfunction_short(pair, r.n, r.mu0, m).sup_distance(&ef));
            if let Some(nf) = &nf {
                full.push(
                    asymptotic_eigenfunction_full(pair, nf, r.n, r.mu0, m)
                        .unwrap()
                        .sup_distance(&ef),
                );
            }
        }
        let mut judge = |label: &str, errs: &[f64]| {
            if errs.is_empty() {
                return;
            }
            let med = dyadic_medians(&ns, errs);
            let at_rounding = errs.iter().all(|&e| e < 1e-10);
            let good = at_rounding || strictly_decreasing(&med);
            ok &= good;
            lines.push(format!(
                "{name}/{label}: {}",
                if at_rounding {
                    "at rounding".into()
                } else {
                    fmt_blocks(&med)
                }
            ));
        };
        judge("full", &full);
        judge("short", &short);
    }
    Verdict {
        pass: ok,
        detail: format!(
            "{} records; max boundary residual {worst_bc:.2e}; max ODE residual {worst_ode:.2e}; sup-error block medians: {}",
            records.len(),
            lines.join("; ")
        ),
    }
}

fn criterion9() -> Verdict {
    let m = 64;
    let sweep: Vec<Complex64> = (0..24)
        .map(|k| {
            let r = 20.0 * 10f64.powf(k as f64 / 23.0);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            c(sign * r, 1.9 * (1.3 * k as f64).cos())
        })
        .collect();
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, pair) in all_pairs().into_iter().filter(|(n, _)| *n != "zero") {
        let nf = build_n(&pair, TriangleGrid::new(4 * m).unwrap());
        let cst = pair.constants();
        // Explicit constant of the remainder bound: 2 e^d Σ_{n≥2} e^{2nd} a1^{n-2}/(n-2)!.
        let bound = 2.0 * D.exp() * (4.0 * D).exp() * ((2.0 * D).exp() * cst.a1).exp();
        let (mut en, mut e0, mut el, mut ratio) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &mu in &sweep {
            let dir = solve_direct(&pair, mu, m, &OdeOptions::default()).unwrap();
            let n_err = sup_sum_norm(&dir, &approx_n(&pair, &nf, mu, m).unwrap());
            en.push(n_err);
            e0.push(sup_sum_norm(&dir, &approx_d0(&pair, mu, m)));
            el.push(sup_sum_norm(&dir, &approx_leading(mu, m)));
            ratio.push(n_err / gamma2(&pair, mu, 256));
        }
        let (mn, m0, ml) = (median(en), median(e0), median(el));
        let rmax = ratio.iter().copied().fold(0.0, f64::max);
        let good = mn <= m0 && m0 <= ml && rmax.is_finite() && rmax <= bound;
        ok &= good;
        lines.push(format!("{name}: medians N {mn:.2e} <= D0 {m0:.2e} <= lead {ml:.2e}; max ratio/gamma2 {rmax:.3}"));
    }
    Verdict {
        pass: ok,
        detail: lines.join("; "),
    }
}

fn main() {
    let mut records: Vec<(String, PotentialPair, EigenRecord)> = Vec::new();
    let mut all_ok = true;
    let mut report =
        |id: u32, title: &str, limit: Option<f64>, run: &mut dyn FnMut() -> Verdict| {
            let t = Instant::now();
            let v = run();
            let secs = t.elapsed().as_secs_f64();
            let in_time = limit.is_none_or(|l| secs < l);
            let pass = v.pass && in_time;
            all_ok &= pass;
            let budget = limit.map_or(String::new(), |l| format!(" / {l:.0} s"));
            println!(
                "[{}] {id}. {title}: {} ({secs:.1} s{budget})",
                if pass { "PASS" } else { "FAIL" },
                v.detail
            );
        };
    report(1, "zero-potential exactness", Some(5.0), &mut || {
        criterion1(&mut records)
    });
    report(2, "constant-potential oracle", Some(60.0), &mut || {
        criterion2(&mut records)
    });
    report(3, "method agreement", Some(60.0), &mut criterion3);
    report(4, "identity suite", None, &mut criterion4);
    report(5, "inequality suite", Some(180.0), &mut criterion5);
    report(6, "remainder decay 1<p<2", Some(300.0), &mut || {
        criterion6(&mut records)
    });
    report(7, "remainder decay p=1", Some(300.0), &mut || {
        criterion7(&mut records)
    });
    report(8, "eigenfunction residuals", None, &mut || {
        criterion8(&mut records)
    });
    report(9, "approximant hierarchy", None, &mut criterion9);
    if !all_ok {
        std::process::exit(1);
    }
}
