//! Characteristic function of the problem `y1(0) = y2(0)`, `y1(1) = y2(1)`,
//! eigenvalue localisation, and the asymptotic eigenvalue and eigenfunction
//! formulas with their remainder diagnostics.
//!
//! `Φ(μ) = d11 + d12 - d21 - d22` at `x = 1`. Through the kernel,
//! `Φ(μ) = 2i sin μ + ∫_0^1 e^{(1-2t)iμ}(Q11 + Q12 - σ1) dt - ∫_0^1 e^{-(1-2t)iμ}(Q21 + Q22 - σ2) dt`
//! in the sign convention of [`crate::solver`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelField;
use crate::numerics::line::OscRowRule;
use crate::numerics::osc::osc_segment_integral;
use crate::numerics::prefix::prefix_transform;
use crate::numerics::roots::{root_polish, winding_count, SearchBox};
use crate::numerics::triangle::triangle_double_integral;
use crate::ode::{Mat2, OdeOptions};
use crate::poly::Poly;
use crate::potential::{Potential, PotentialPair};
use crate::remainders::Gamma;
use crate::solver::{
    ode_residual, sigma_tilde_transforms, solve_direct, solve_direct_end, uniform_grid,
};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn phi_of(d: &Mat2) -> Complex64 {
    d[(0, 0)] + d[(0, 1)] - d[(1, 0)] - d[(1, 1)]
}

/// `Φ` by direct integration.
pub fn char_fn_direct(pair: &PotentialPair, mu: Complex64, opts: &OdeOptions) -> Result<Complex64> {
    Ok(phi_of(&solve_direct_end(pair, mu, opts)?))
}

/// `Φ` through a built kernel; only the row `x = 1` is kept.
#[derive(Clone, Debug)]
pub struct KernelCharFn<'a> {
    pair: &'a PotentialPair,
    h: f64,
    upper: Vec<Complex64>,
    lower: Vec<Complex64>,
}

impl<'a> KernelCharFn<'a> {
    pub fn new(pair: &'a PotentialPair, q: &KernelField) -> Self {
        let m = q.grid().m();
        let add = |a: &[Complex64], b: &[Complex64]| {
            a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>()
        };
        Self {
            pair,
            h: q.grid().h(),
            upper: add(q.e11.row(m), q.e12.row(m)),
            lower: add(q.e21.row(m), q.e22.row(m)),
        }
    }

    pub fn eval(&self, mu: Complex64) -> Complex64 {
        let e = (Complex64::i() * mu).exp();
        let w = 2.0 * mu;
        let up = OscRowRule::new(self.h, -w).integrate(&self.upper)
            - self.pair.sigma1.osc_integral(0.0, 1.0, -w);
        let lo = OscRowRule::new(self.h, w).integrate(&self.lower)
            - self.pair.sigma2.osc_integral(0.0, 1.0, w);
        e - 1.0 / e + e * up - lo / e
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharMethod {
    Direct,
    Kernel,
}

/// `Φ(μ)` by either method; the kernel method needs `q`.
pub fn char_fn(
    pair: &PotentialPair,
    mu: Complex64,
    method: CharMethod,
    q: Option<&KernelField>,
    opts: &OdeOptions,
) -> Result<Complex64> {
    match (method, q) {
        (CharMethod::Direct, _) => char_fn_direct(pair, mu, opts),
        (CharMethod::Kernel, Some(q)) => Ok(KernelCharFn::new(pair, q).eval(mu)),
        (CharMethod::Kernel, None) => Err(Error::Config(
            "kernel characteristic function needs a built kernel".into(),
        )),
    }
}

/// `2iμ sin ω / ω`, `ω = √(μ² - c²)`: `Φ` for `σ1 = σ2 = c`.
pub fn constant_char_fn(c: Complex64, mu: Complex64) -> Complex64 {
    let w = (mu * mu - c * c).sqrt();
    let sinc = if w.norm() < 1e-6 {
        1.0 - w * w / 6.0
    } else {
        w.sin() / w
    };
    2.0 * Complex64::i() * mu * sinc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Parity factor `(-1)^n` and a negative double-integral term.
    Literal,
    /// Signs fixed by the constant-potential closed form.
    Oracle,
}

/// The Fourier coefficients `∫ e^{-2πint}σ1` and `∫ e^{2πint}σ2`, and the
/// double integral `∫_0^1∫_0^t σ1(t)σ2(ξ) e^{-2πint} e^{2πinξ} dξ dt`.
fn mu0_terms(pair: &PotentialPair, n: i64) -> (Complex64, Complex64, Complex64) {
    let w = c64(2.0 * PI * n as f64, 0.0);
    (
        pair.sigma1.osc_integral(0.0, 1.0, -w),
        pair.sigma2.osc_integral(0.0, 1.0, w),
        triangle_double_integral(&pair.sigma1, &pair.sigma2, -w, w),
    )
}

fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn require_nonzero(n: i64) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("the asymptotic formulas need n != 0".into()))
    } else {
        Ok(())
    }
}

/// Leading correction `μ_{0,n}` of `μ_n = πn + μ_{0,n} + ρ_n`.
///
/// Literal: `(-1)^n/(2i) F1 + (-1)^{n+1}/(2i) F2 - i I`.
/// Oracle: `(F1 - F2)/(2i) + i I`.
pub fn asymptotic_mu0(pair: &PotentialPair, n: i64, convention: Convention) -> Result<Complex64> {
    require_nonzero(n)?;
    let (f1, f2, dbl) = mu0_terms(pair, n);
    let i = Complex64::i();
    Ok(match convention {
        Convention::Literal => parity(n) * (f1 - f2) / (2.0 * i) - i * dbl,
        Convention::Oracle => (f1 - f2) / (2.0 * i) + i * dbl,
    })
}

/// The Fourier part of [`asymptotic_mu0`] alone, valid for `1 < p ≤ 4/3`.
pub fn simplified_mu0(pair: &PotentialPair, n: i64, convention: Convention) -> Result<Complex64> {
    let p = pair.p();
    if !(p > 1.0 && p <= 4.0 / 3.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "simplified eigenvalue formula needs 1 < p <= 4/3, got p = {p}"
        )));
    }
    require_nonzero(n)?;
    let (f1, f2, _) = mu0_terms(pair, n);
    let i = Complex64::i();
    Ok(match convention {
        Convention::Literal => parity(n) * (f1 - f2) / (2.0 * i),
        Convention::Oracle => (f1 - f2) / (2.0 * i),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocateOptions {
    pub d: f64,
    pub root_tol: f64,
    /// Integration tolerances for the final direct refinement.
    pub refine: OdeOptions,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self {
            d: 2.0,
            root_tol: 1e-10,
            refine: OdeOptions {
                rtol: 1e-13,
                atol: 1e-13,
                ..OdeOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub n: i64,
    pub mu: Complex64,
    /// Oracle convention; zero for `n = 0`.
    pub mu0: Complex64,
    pub mu0_literal: Complex64,
    pub rho: Complex64,
    /// `|Φ_direct(μ_n)|`.
    pub phi_residual: f64,
    /// `|Φ_kernel(μ_n)|`.
    pub phi_kernel_residual: f64,
    pub iterations: usize,
    pub box_winding: i64,
    pub search_box: SearchBox,
}

const SPLIT_DEPTH: usize = 6;

/// Boxes holding exactly one zero each, found by splitting `bx`.
fn isolate<F: Fn(Complex64) -> Complex64>(
    phi: &F,
    bx: SearchBox,
    count: i64,
    depth: usize,
    out: &mut Vec<SearchBox>,
) -> Result<()> {
    match count {
        0 => Ok(()),
        1 => {
            out.push(bx);
            Ok(())
        }
        _ if depth == SPLIT_DEPTH => Err(Error::Numerical(format!(
            "unresolved cluster of {count} zeros in box at {} (half sizes {} x {})",
            bx.center, bx.half_width, bx.half_height
        ))),
        _ => {
            for q in bx.quadrants() {
                let k = winding_count(phi, &q)?;
                isolate(phi, q, k, depth + 1, out)?;
            }
            Ok(())
        }
    }
}

fn nudge(bx: SearchBox) -> SearchBox {
    SearchBox {
        center: bx.center + c64(1e-3 * bx.half_width, 0.0),
        half_width: bx.half_width * 0.997,
        ..bx
    }
}

fn winding_with_nudge<F: Fn(Complex64) -> Complex64>(
    phi: &F,
    bx: SearchBox,
) -> Result<(SearchBox, i64)> {
    let mut bx = bx;
    for _ in 0..4 {
        match winding_count(phi, &bx) {
            Ok(k) => return Ok((bx, k)),
            Err(Error::BoundaryZero { .. }) => bx = nudge(bx),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Numerical(format!(
        "zeros keep landing on the boundary of the box at {}",
        bx.center
    )))
}

fn locate_one(
    pair: &PotentialPair,
    kphi: &KernelCharFn,
    n: i64,
    opts: &LocateOptions,
) -> Result<Vec<EigenRecord>> {
    let phi_k = |z: Complex64| kphi.eval(z);
    let (mu0, mu0_literal) = if n == 0 {
        (c64(0.0, 0.0), c64(0.0, 0.0))
    } else {
        (
            asymptotic_mu0(pair, n, Convention::Oracle)?,
            asymptotic_mu0(pair, n, Convention::Literal)?,
        )
    };
    let base = SearchBox::around_pi_n(n, opts.d);
    let (mut bx, mut k) = winding_with_nudge(&phi_k, base)?;
    if k != 1 {
        // Widen to the full period cell before splitting.
        let wide = SearchBox {
            half_width: 0.5 * PI - 1e-3,
            ..base
        };
        (bx, k) = winding_with_nudge(&phi_k, wide)?;
    }
    let mut boxes = Vec::new();
    isolate(&phi_k, bx, k, 0, &mut boxes)?;
    let pin = c64(PI * n as f64, 0.0);
    boxes
        .into_iter()
        .map(|b| {
            let start = if b.contains(pin + mu0) {
                pin + mu0
            } else {
                b.center
            };
            let scale = 1.0 + start.norm();
            let coarse = root_polish(phi_k, start, opts.root_tol, scale, &b)?;
            let phi_d = |z: Complex64| {
                char_fn_direct(pair, z, &opts.refine).unwrap_or(c64(f64::NAN, f64::NAN))
            };
            let fine = root_polish(phi_d, coarse.root, opts.root_tol, scale, &b)?;
            if !fine.root.re.is_finite() || !fine.root.im.is_finite() {
                return Err(Error::Numerical(format!(
                    "direct refinement failed near {}",
                    coarse.root
                )));
            }
            let mu = fine.root;
            Ok(EigenRecord {
                n,
                mu,
                mu0,
                mu0_literal,
                rho: mu - pin - mu0,
                phi_residual: char_fn_direct(pair, mu, &opts.refine)?.norm(),
                phi_kernel_residual: kphi.eval(mu).norm(),
                iterations: coarse.iterations + fine.iterations,
                box_winding: 1,
                search_box: b,
            })
        })
        .collect()
}

/// Eigenvalues for every `n` of `n_range`: counted with the kernel `Φ`,
/// polished on it from `πn + μ_{0,n}`, then refined on the direct `Φ`.
pub fn locate_eigenvalues(
    pair: &PotentialPair,
    q: &KernelField,
    n_range: std::ops::RangeInclusive<i64>,
    opts: &LocateOptions,
) -> Result<Vec<EigenRecord>> {
    let kphi = KernelCharFn::new(pair, q);
    let ns: Vec<i64> = n_range.collect();
    let parts: Vec<Result<Vec<EigenRecord>>> = ns
        .par_iter()
        .map(|&n| locate_one(pair, &kphi, n, opts))
        .collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Zeros of the kernel `Φ` in the rectangle `[π(n-½), π(n+½)] × [-2d, 2d]`.
pub fn cell_zero_count(kphi: &KernelCharFn, n: i64, d: f64) -> Result<i64> {
    let bx = SearchBox::new(c64(PI * n as f64, 0.0), 0.5 * PI, 2.0 * d)?;
    winding_count(|z| kphi.eval(z), &bx)
}

/// Per-`n` remainder data for `n ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub p: f64,
    pub q: f64,
    pub n: Vec<i64>,
    pub rho_abs: Vec<f64>,
    /// `Γ(πn)`.
    pub big_gamma: Vec<f64>,
    /// `γ(πn)`.
    pub gamma: Vec<f64>,
    /// `S_N = Σ_{n ≤ N} |ρ_n|^{q/2}`; only for `p > 1`.
    pub partial_sums: Option<Vec<f64>>,
    /// `|ρ_n| / Γ²(πn)`.
    pub ratio: Vec<f64>,
}

pub fn decay_report(records: &[EigenRecord], pair: &PotentialPair, m: usize) -> DecayReport {
    let mut recs: Vec<&EigenRecord> = records.iter().filter(|r| r.n >= 1).collect();
    recs.sort_by_key(|r| r.n);
    let n: Vec<i64> = recs.iter().map(|r| r.n).collect();
    let rho_abs: Vec<f64> = recs.iter().map(|r| r.rho.norm()).collect();
    let (big_gamma, gamma): (Vec<f64>, Vec<f64>) = n
        .par_iter()
        .map(|&k| {
            let mu = c64(PI * k as f64, 0.0);
            (Gamma(pair, mu, m), crate::remainders::gamma(pair, mu, m))
        })
        .unzip();
    let partial_sums = (pair.p() > 1.0).then(|| {
        let e = 0.5 * pair.q();
        rho_abs
            .iter()
            .scan(0.0, |s, r| {
                *s += r.powf(e);
                Some(*s)
            })
            .collect()
    });
    let ratio = rho_abs
        .iter()
        .zip(&big_gamma)
        .map(|(r, g)| r / (g * g))
        .collect();
    DecayReport {
        p: pair.p(),
        q: pair.q(),
        n,
        rho_abs,
        big_gamma,
        gamma,
        partial_sums,
        ratio,
    }
}

/// Median of `values[k]` over each dyadic block `2^j ≤ n < 2^{j+1}` that
/// intersects `ns`; returns `(2^j, median)` in increasing order.
pub fn dyadic_medians(ns: &[i64], values: &[f64]) -> Vec<(i64, f64)> {
    let mut out: Vec<(i64, f64)> = Vec::new();
    let mut lo = 1i64;
    let max = ns.iter().copied().max().unwrap_or(0);
    while lo <= max {
        let mut block: Vec<f64> = ns
            .iter()
            .zip(values)
            .filter(|(&n, _)| n >= lo && n < 2 * lo)
            .map(|(_, &v)| v)
            .collect();
        if !block.is_empty() {
            block.sort_by(f64::total_cmp);
            let k = block.len();
            let med = if k % 2 == 1 {
                block[k / 2]
            } else {
                0.5 * (block[k / 2 - 1] + block[k / 2])
            };
            out.push((lo, med));
        }
        lo *= 2;
    }
    out
}

/// Sum of `values` over each complete dyadic block, as in [`dyadic_medians`].
pub fn dyadic_sums(ns: &[i64], values: &[f64]) -> Vec<(i64, f64)> {
    let mut out = Vec::new();
    let mut lo = 1i64;
    let max = ns.iter().copied().max().unwrap_or(0);
    while 2 * lo - 1 <= max {
        let s: f64 = ns
            .iter()
            .zip(values)
            .filter(|(&n, _)| n >= lo && n < 2 * lo)
            .map(|(_, &v)| v)
            .sum();
        out.push((lo, s));
        lo *= 2;
    }
    out
}

/// `(y1, y2)` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub x: Vec<f64>,
    pub y1: Vec<Complex64>,
    pub y2: Vec<Complex64>,
}

impl EigenPair {
    pub fn sup_distance(&self, other: &EigenPair) -> f64 {
        self.y1
            .iter()
            .zip(&other.y1)
            .chain(self.y2.iter().zip(&other.y2))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub values: EigenPair,
    /// `|y1(1) - y2(1)|`.
    pub boundary_residual: f64,
}

/// Column sums of `D(·, μ)` on the grid `k/M`.
pub fn eigenfunction(
    pair: &PotentialPair,
    mu: Complex64,
    m: usize,
    opts: &OdeOptions,
) -> Result<Eigenfunction> {
    let sol = solve_direct(pair, mu, m, opts)?;
    let y1: Vec<Complex64> = sol.values.iter().map(|d| d[(0, 0)] + d[(0, 1)]).collect();
    let y2: Vec<Complex64> = sol.values.iter().map(|d| d[(1, 0)] + d[(1, 1)]).collect();
    let boundary_residual = (y1[m] - y2[m]).norm();
    Ok(Eigenfunction {
        values: EigenPair {
            x: sol.x_grid,
            y1,
            y2,
        },
        boundary_residual,
    })
}

/// Integral-form ODE residual of the eigenfunction, see [`crate::solver::ode_residual`].
pub fn eigenfunction_ode_residual(
    pair: &PotentialPair,
    mu: Complex64,
    m: usize,
    opts: &OdeOptions,
) -> Result<f64> {
    ode_residual(pair, mu, m, [c64(1.0, 0.0), c64(1.0, 0.0)], opts)
}

/// `∫_0^{x_k} e^{iωt} t σ(t) dt` on the grid `k/M`, exact per piece.
fn t_weighted_prefix(pot: &Potential, omega: Complex64, m: usize) -> Vec<Complex64> {
    let h = 1.0 / m as f64;
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = c64(0.0, 0.0);
    out.push(acc);
    for k in 0..m {
        let hi = if k + 1 == m { 1.0 } else { (k + 1) as f64 * h };
        for piece in pot.pieces(k as f64 * h, hi) {
            let tp = piece.poly.mul(&Poly::from_real(&[piece.a, 1.0]));
            acc += osc_segment_integral(&tp, piece.a, piece.b, omega);
        }
        out.push(acc);
    }
    out
}

fn stride_of(field: &KernelField, m: usize) -> Result<usize> {
    let km = field.grid().m();
    if m == 0 || km < m || !km.is_multiple_of(m) {
        return Err(Error::GridMismatch {
            expected: m,
            got: km,
        });
    }
    Ok(km / m)
}

/// The full asymptotic eigenfunction with `F_1 = -σ1 + σ̃1 - T_{σ1}σ̃2` and
/// `F_2 = -σ2 + σ̃2 - T_{σ2}σ̃1`, read from the field `N`:
/// `y1 = e^{iπnx}[(1 + iμ0x)(1 + ∫e^{-2πint}F_1) - 2iμ0 ∫e^{-2πint} t F_1]`,
/// `y2 = e^{-iπnx}[(1 - iμ0x)(1 + ∫e^{2πint}F_2) + 2iμ0 ∫e^{2πint} t F_2]`.
pub fn asymptotic_eigenfunction_full(
    pair: &PotentialPair,
    n_field: &KernelField,
    n: i64,
    mu0: Complex64,
    m: usize,
) -> Result<EigenPair> {
    if pair.p() <= 1.0 {
        return Err(Error::Domain(
            "the full eigenfunction formula needs 1 < p < 2".into(),
        ));
    }
    let stride = stride_of(n_field, m)?;
    let kh = n_field.grid().h();
    let pin = PI * n as f64;
    let w = c64(2.0 * pin, 0.0);
    let p1 = prefix_transform(&pair.sigma1, -w, m);
    let p2 = prefix_transform(&pair.sigma2, w, m);
    let t1 = t_weighted_prefix(&pair.sigma1, -w, m);
    let t2 = t_weighted_prefix(&pair.sigma2, w, m);
    let (i1, i2) = sigma_tilde_transforms(pair, c64(pin, 0.0), m);
    let minus = OscRowRule::new(kh, -w);
    let plus = OscRowRule::new(kh, w);
    let tw = |row: &[Complex64]| {
        row.iter()
            .enumerate()
            .map(|(j, v)| v * (j as f64 * kh))
            .collect::<Vec<_>>()
    };
    let x = uniform_grid(m);
    let i = Complex64::i();
    let mut y1 = Vec::with_capacity(m + 1);
    let mut y2 = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let row = k * stride;
        let e = (i * pin * x[k]).exp();
        let int1 = -p1.values()[k] + i1[k] + minus.integrate(n_field.e12.row(row));
        let tint1 = -t1[k]
            + minus.integrate(&tw(n_field.e11.row(row)))
            + minus.integrate(&tw(n_field.e12.row(row)));
        y1.push(e * ((1.0 + i * mu0 * x[k]) * (1.0 + int1) - 2.0 * i * mu0 * tint1));
        let int2 = -p2.values()[k] + i2[k] + plus.integrate(n_field.e21.row(row));
        let tint2 = -t2[k]
            + plus.integrate(&tw(n_field.e22.row(row)))
            + plus.integrate(&tw(n_field.e21.row(row)));
        y2.push(((1.0 - i * mu0 * x[k]) * (1.0 + int2) + 2.0 * i * mu0 * tint2) / e);
    }
    Ok(EigenPair { x, y1, y2 })
}

/// The shorter formula, interior frequencies taken at `πn`:
/// `y1 = e^{iπnx}(1 + iμ0x - P_1(x) + I_1(x))`, `y2 = e^{-iπnx}(1 - iμ0x - P_2(x) + I_2(x))`.
pub fn asymptotic_eigenfunction_short(
    pair: &PotentialPair,
    n: i64,
    mu0: Complex64,
    m: usize,
) -> EigenPair {
    let pin = PI * n as f64;
    let w = c64(2.0 * pin, 0.0);
    let p1 = prefix_transform(&pair.sigma1, -w, m);
    let p2 = prefix_transform(&pair.sigma2, w, m);
    let (i1, i2) = sigma_tilde_transforms(pair, c64(pin, 0.0), m);
    let x = uniform_grid(m);
    let i = Complex64::i();
    let (y1, y2) = (0..=m)
        .map(|k| {
            let e = (i * pin * x[k]).exp();
            (
                e * (1.0 + i * mu0 * x[k] - p1.values()[k] + i1[k]),
                (1.0 - i * mu0 * x[k] - p2.values()[k] + i2[k]) / e,
            )
        })
        .unzip();
    EigenPair { x, y1, y2 }
}
