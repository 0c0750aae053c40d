//! The subcommands. Each writes its CSV files and returns the JSON data
//! mirrored into the report.

use std::f64::consts::PI;
use std::time::Instant;

use dirac_core::kernel::{
    build_n, fixed_point_residual, neumann_solve, KernelField, TriangleGrid, TruncationReport,
};
use dirac_core::ode::OdeOptions;
use dirac_core::remainders::{
    kernel_bounds, product_identity_discrepancy, remainder_bounds, transfer_identity_discrepancy,
    verify_row_estimates, BoundCheck, IteratedFields, RemainderProfile,
};
use dirac_core::solver::{
    approx_d0, approx_leading, approx_n, solve_direct, solve_via_kernel, FundamentalSample,
};
use dirac_core::spectrum::{
    asymptotic_eigenfunction_full, asymptotic_eigenfunction_short, decay_report, eigenfunction,
    locate_eigenvalues, EigenRecord, LocateOptions,
};
use dirac_core::{remainders, Complex64, PotentialPair};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig};
use crate::output::{real, OutputDir, RunHeader, StageTime};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(dirac_core::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<dirac_core::Error> for CliError {
    fn from(e: dirac_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use dirac_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(
                E::Config(_) | E::InvalidPotential(_) | E::Domain(_) | E::GridMismatch { .. },
            ) => 2,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Shared state of one run.
pub struct Run {
    pub cfg: RunConfig,
    pub pair: PotentialPair,
    pub header: RunHeader,
    pub stages: Vec<StageTime>,
    pub out: OutputDir,
}

impl Run {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> CliResult<T>) -> CliResult<T> {
        let t = Instant::now();
        let v = f(self)?;
        self.stages.push(StageTime {
            stage: name.into(),
            seconds: t.elapsed().as_secs_f64(),
        });
        Ok(v)
    }

    fn kernel(&mut self) -> CliResult<(KernelField, TruncationReport)> {
        let (m, tol) = (self.cfg.m_kernel, self.cfg.tail_tol);
        self.stage("kernel", |r| {
            Ok(neumann_solve(&r.pair, TriangleGrid::new(m)?, tol)?)
        })
    }

    fn locate(&mut self, q: &KernelField, lo: i64, hi: i64) -> CliResult<Vec<EigenRecord>> {
        let opts = LocateOptions {
            d: self.cfg.d,
            root_tol: self.cfg.root_tol,
            ..LocateOptions::default()
        };
        let recs = self.stage("locate", |r| {
            Ok(locate_eigenvalues(&r.pair, q, lo..=hi, &opts)?)
        })?;
        for rec in &recs {
            if rec.phi_residual > self.cfg.root_tol * (1.0 + rec.mu.norm()) {
                self.header.warnings.push(format!(
                    "n = {}: |Phi(mu_n)| = {:.3e} above tolerance",
                    rec.n, rec.phi_residual
                ));
            }
        }
        Ok(recs)
    }
}

fn cplx(z: Complex64) -> [String; 2] {
    [real(z.re), real(z.im)]
}

pub fn eig(run: &mut Run) -> CliResult<(Value, bool)> {
    let (q, _) = run.kernel()?;
    let [lo, hi] = run.cfg.n_range;
    let recs = run.locate(&q, lo, hi)?;
    let m = run.cfg.m_ode;
    let pins: Vec<(f64, f64)> = run.stage("remainders", |r| {
        Ok(recs
            .iter()
            .map(|rec| {
                let mu = Complex64::new(PI * rec.n as f64, 0.0);
                (
                    remainders::gamma(&r.pair, mu, m),
                    remainders::Gamma(&r.pair, mu, m),
                )
            })
            .collect())
    })?;
    let rows: Vec<Vec<String>> = recs
        .iter()
        .zip(&pins)
        .map(|(r, (g, gg))| {
            let mut row = vec![r.n.to_string()];
            row.extend(cplx(r.mu));
            row.extend(cplx(r.mu0_literal));
            row.extend(cplx(r.mu0));
            row.extend(cplx(r.rho));
            row.extend([
                real(*g),
                real(*gg),
                r.box_winding.to_string(),
                r.iterations.to_string(),
                real(r.phi_residual),
            ]);
            row
        })
        .collect();
    run.out.csv(
        "eig.csv",
        &[
            "n",
            "re_mu",
            "im_mu",
            "re_mu0_literal",
            "im_mu0_literal",
            "re_mu0_oracle",
            "im_mu0_oracle",
            "re_rho",
            "im_rho",
            "gamma_pin",
            "Gamma_pin",
            "winding",
            "iters",
            "phi_residual",
        ],
        &rows,
    )?;
    let data: Vec<Value> = recs
        .iter()
        .zip(&pins)
        .map(|(r, (g, gg))| json!({ "record": r, "gamma_pin": g, "Gamma_pin": gg }))
        .collect();
    Ok((json!({ "eigenvalues": data }), true))
}

pub fn eigfun(run: &mut Run) -> CliResult<(Value, bool)> {
    let (q, _) = run.kernel()?;
    let m = run.cfg.eigfun.m;
    let opts = OdeOptions::default();
    let full_field = (run.pair.p() > 1.0).then(|| build_n(&run.pair, q.grid()));
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for n in run.cfg.eigfun.n.clone() {
        for rec in run.locate(&q, n, n)? {
            let ef = eigenfunction(&run.pair, rec.mu, m, &opts)?;
            let short = asymptotic_eigenfunction_short(&run.pair, n, rec.mu0, m);
            let full = match (&full_field, n) {
                (Some(f), k) if k != 0 => {
                    Some(asymptotic_eigenfunction_full(&run.pair, f, n, rec.mu0, m)?)
                }
                _ => None,
            };
            for k in 0..=m {
                let mut row = vec![n.to_string(), real(ef.values.x[k])];
                row.extend(cplx(ef.values.y1[k]));
                row.extend(cplx(ef.values.y2[k]));
                match &full {
                    Some(f) => {
                        row.extend(cplx(f.y1[k]));
                        row.extend(cplx(f.y2[k]));
                    }
                    None => row.extend(std::iter::repeat_n(String::new(), 4)),
                }
                row.extend(cplx(short.y1[k]));
                row.extend(cplx(short.y2[k]));
                rows.push(row);
            }
            summary.push(json!({
                "n": n,
                "mu": rec.mu,
                "boundary_residual": ef.boundary_residual,
                "full_sup_error": full.as_ref().map(|f| f.sup_distance(&ef.values)),
                "short_sup_error": short.sup_distance(&ef.values),
            }));
        }
    }
    run.out.csv(
        "eigfun.csv",
        &[
            "n",
            "x",
            "re_y1",
            "im_y1",
            "re_y2",
            "im_y2",
            "re_y1_full",
            "im_y1_full",
            "re_y2_full",
            "im_y2_full",
            "re_y1_short",
            "im_y1_short",
            "re_y2_short",
            "im_y2_short",
        ],
        &rows,
    )?;
    Ok((json!({ "eigenfunctions": summary }), true))
}

pub fn solve(run: &mut Run) -> CliResult<(Value, bool)> {
    let (q, _) = run.kernel()?;
    let m = run.cfg.m_ode;
    let nf = build_n(&run.pair, q.grid());
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for mu in run.cfg.solve.mu.clone() {
        let samples: Vec<FundamentalSample> = run.stage("solve", |r| {
            Ok(vec![
                solve_direct(&r.pair, mu, m, &OdeOptions::default())?,
                solve_via_kernel(&r.pair, &q, mu, m)?,
                approx_leading(mu, m),
                approx_d0(&r.pair, mu, m),
                approx_n(&r.pair, &nf, mu, m)?,
            ])
        })?;
        let mut dist = serde_json::Map::new();
        for s in &samples {
            dist.insert(
                s.method.as_str().into(),
                json!(s.sup_distance(&samples[0])?),
            );
            for (x, d) in s.x_grid.iter().zip(&s.values) {
                let mut row = vec![
                    real(mu.re),
                    real(mu.im),
                    real(*x),
                    s.method.as_str().to_string(),
                ];
                for v in [d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)]] {
                    row.extend(cplx(v));
                }
                rows.push(row);
            }
        }
        summary.push(json!({ "mu": mu, "sup_distance_to_direct": dist }));
    }
    run.out.csv(
        "solve.csv",
        &[
            "mu_re", "mu_im", "x", "method", "re_d11", "im_d11", "re_d12", "im_d12", "re_d21",
            "im_d21", "re_d22", "im_d22",
        ],
        &rows,
    )?;
    Ok((json!({ "samples": summary }), true))
}

pub fn kernel(run: &mut Run) -> CliResult<(Value, bool)> {
    let (q, rep) = run.kernel()?;
    let residual = run.stage("residual", |r| Ok(fixed_point_residual(&r.pair, &q)?))?;
    let mut bytes = Vec::new();
    q.write_csv(&mut bytes)?;
    run.out.raw("kernel.csv", &bytes)?;
    Ok((
        json!({ "truncation": rep, "fixed_point_residual": residual, "b_norm": q.b_norm(run.pair.r()) }),
        true,
    ))
}

const ROW_CHECKS: [&str; 5] = [
    "row_j_tilde",
    "row_tj_sup",
    "row_tj_pointwise",
    "row_t2j",
    "row_t3j",
];

pub fn remainders(run: &mut Run) -> CliResult<(Value, bool)> {
    let sweep = run.cfg.remainders.sweep.values();
    let grid = TriangleGrid::new(run.cfg.m_kernel)?;
    let d = run.cfg.d;
    let fields = run.stage("iterates", |r| Ok(IteratedFields::build(&r.pair, grid)?))?;
    let recs = run.stage("row_estimates", |r| {
        Ok(verify_row_estimates(&r.pair, &fields, &sweep, d))
    })?;
    let profiles: Vec<RemainderProfile> = run.stage("profiles", |r| {
        Ok(sweep
            .iter()
            .map(|&mu| RemainderProfile::new(&r.pair, mu, grid.m(), d))
            .collect())
    })?;
    let mut rows = Vec::new();
    for (p, rec) in profiles.iter().zip(&recs) {
        let mut row = vec![real(p.mu.re), real(p.mu.im)];
        row.extend(
            [
                *p.gamma0.last().expect("grid"),
                p.gamma,
                p.big_gamma,
                p.gamma1,
                p.gamma2,
            ]
            .map(real),
        );
        for name in ROW_CHECKS {
            let c = rec
                .checks
                .iter()
                .find(|c| c.name == name)
                .expect("all row checks present");
            row.push(real(c.margin()));
        }
        rows.push(row);
    }
    let mut header = vec![
        "mu_re",
        "mu_im",
        "gamma0_at_1",
        "gamma",
        "Gamma",
        "gamma1",
        "gamma2",
    ];
    let margin_cols: Vec<String> = ROW_CHECKS.iter().map(|n| format!("margin_{n}")).collect();
    header.extend(margin_cols.iter().map(String::as_str));
    run.out.csv("remainders.csv", &header, &rows)?;
    let ok = recs.iter().all(|r| r.all_hold());
    Ok((json!({ "profiles": profiles, "row_estimates": recs }), ok))
}

#[derive(Serialize)]
struct VerifyRow {
    check: String,
    mu: Option<Complex64>,
    value: f64,
    limit: f64,
    pass: bool,
}

impl From<BoundCheck> for VerifyRow {
    fn from(c: BoundCheck) -> Self {
        let pass = c.holds();
        VerifyRow {
            check: c.name,
            mu: c.mu,
            value: c.lhs,
            limit: c.rhs,
            pass,
        }
    }
}

pub fn verify(run: &mut Run) -> CliResult<(Value, bool)> {
    let vcfg = run.cfg.verify.clone();
    let sweep = vcfg.sweep.values();
    let d = run.cfg.d;
    let (q, _) = run.kernel()?;
    let grid = q.grid();
    let mut rows: Vec<VerifyRow> = Vec::new();

    run.stage("identities", |r| {
        for &mu in sweep.iter().step_by(8) {
            let v = product_identity_discrepancy(&r.pair, mu, r.cfg.m_ode);
            rows.push(VerifyRow {
                check: "product_identity".into(),
                mu: Some(mu),
                value: v,
                limit: vcfg.identity_tol,
                pass: v <= vcfg.identity_tol,
            });
        }
        let mu = Complex64::new(13.0, 0.7);
        let errs = [32usize, 64, 128]
            .iter()
            .map(|&m| transfer_identity_discrepancy(&r.pair, TriangleGrid::new(m)?, mu))
            .collect::<Result<Vec<_>, _>>()?;
        const FLOOR: f64 = 1e-11;
        let order = if errs[2] > FLOOR {
            (errs[1] / errs[2]).log2()
        } else if errs[1] > FLOOR {
            (errs[0] / errs[1]).log2()
        } else {
            f64::INFINITY
        };
        rows.push(VerifyRow {
            check: "transfer_identity_order".into(),
            mu: Some(mu),
            value: order,
            limit: vcfg.min_order,
            pass: order >= vcfg.min_order,
        });
        Ok(())
    })?;

    run.stage("inequalities", |r| {
        let fields = IteratedFields::build(&r.pair, grid)?;
        for rec in verify_row_estimates(&r.pair, &fields, &sweep, d) {
            rows.extend(rec.checks.into_iter().map(VerifyRow::from));
        }
        for &mu in &sweep {
            rows.extend(
                remainder_bounds(&r.pair, &RemainderProfile::new(&r.pair, mu, grid.m(), d))
                    .into_iter()
                    .map(VerifyRow::from),
            );
        }
        rows.extend(kernel_bounds(&r.pair, &q)?.into_iter().map(VerifyRow::from));
        Ok(())
    })?;

    run.stage("method_agreement", |r| {
        let m = r.cfg.m_ode;
        for &mu in sweep.iter().step_by(8) {
            let dist = solve_direct(&r.pair, mu, m, &OdeOptions::default())?
                .sup_distance(&solve_via_kernel(&r.pair, &q, mu, m)?)?;
            rows.push(VerifyRow {
                check: "method_agreement".into(),
                mu: Some(mu),
                value: dist,
                limit: vcfg.method_tol,
                pass: dist <= vcfg.method_tol,
            });
        }
        Ok(())
    })?;

    let [lo, hi] = run.cfg.n_range;
    let recs = run.locate(&q, lo, hi)?;
    for rec in &recs {
        let scale = 1.0 + rec.mu.norm();
        let mu = Some(rec.mu);
        rows.push(VerifyRow {
            check: format!("winding_n{}", rec.n),
            mu,
            value: rec.box_winding as f64,
            limit: 1.0,
            pass: rec.box_winding == 1,
        });
        let lim = run.cfg.root_tol * scale;
        rows.push(VerifyRow {
            check: format!("phi_direct_n{}", rec.n),
            mu,
            value: rec.phi_residual,
            limit: lim,
            pass: rec.phi_residual <= lim,
        });
        let lim = 1e-7 * scale;
        rows.push(VerifyRow {
            check: format!("phi_kernel_n{}", rec.n),
            mu,
            value: rec.phi_kernel_residual,
            limit: lim,
            pass: rec.phi_kernel_residual <= lim,
        });
        rows.push(VerifyRow {
            check: format!("stripe_n{}", rec.n),
            mu,
            value: rec.mu.im.abs(),
            limit: d,
            pass: rec.mu.im.abs() <= d,
        });
    }
    let decay = run.stage("decay", |r| Ok(decay_report(&recs, &r.pair, r.cfg.m_ode)))?;
    let decay_rows: Vec<Vec<String>> = (0..decay.n.len())
        .map(|k| {
            vec![
                decay.n[k].to_string(),
                real(decay.rho_abs[k]),
                real(decay.gamma[k]),
                real(decay.big_gamma[k]),
                real(decay.ratio[k]),
                decay
                    .partial_sums
                    .as_ref()
                    .map_or(String::new(), |s| real(s[k])),
            ]
        })
        .collect();
    run.out.csv(
        "decay.csv",
        &[
            "n",
            "rho_abs",
            "gamma_pin",
            "Gamma_pin",
            "ratio",
            "partial_sum",
        ],
        &decay_rows,
    )?;

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (re, im) =
                r.mu.map_or((String::new(), String::new()), |z| (real(z.re), real(z.im)));
            vec![
                r.check.clone(),
                re,
                im,
                real(r.value),
                real(r.limit),
                r.pass.to_string(),
            ]
        })
        .collect();
    run.out.csv(
        "verify.csv",
        &["check", "mu_re", "mu_im", "value", "limit", "pass"],
        &csv_rows,
    )?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        run.header
            .warnings
            .push(format!("{failed} of {} checks failed", rows.len()));
    }
    Ok((
        json!({ "checks": rows, "eigenvalues": recs, "decay": decay }),
        failed == 0,
    ))
}
