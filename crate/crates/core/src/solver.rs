//! The fundamental matrix `D(x, μ)` of `D' + J D = A D`, `D(0) = I`, with
//! `A = diag(iμ, -iμ)` and `J = [[0, σ1], [σ2, 0]]`.
//!
//! Two independent routes: direct integration (the reference) and the kernel
//! representation `D = e^{xA} + ∫_0^x e^{(x-2t)A} [Q(x,t) - J(t)] dt`.
//! Three cheaper approximants drop parts of the kernel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelField;
use crate::numerics::line::OscRowRule;
use crate::numerics::prefix::prefix_transform;
use crate::numerics::quad::{GL8_W, GL8_X};
use crate::numerics::triangle::triangle_prefix;
use crate::ode::{solve_linear, Mat2, OdeOptions};
use crate::potential::PotentialPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Kernel,
    ApproxLeading,
    ApproxD0,
    ApproxN,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Kernel => "kernel",
            Method::ApproxLeading => "approx_leading",
            Method::ApproxD0 => "approx_D0",
            Method::ApproxN => "approx_N",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalSample {
    pub mu: Complex64,
    pub x_grid: Vec<f64>,
    pub values: Vec<Mat2>,
    pub method: Method,
}

impl FundamentalSample {
    pub fn last(&self) -> &Mat2 {
        self.values.last().expect("nonempty sample")
    }

    /// Largest entrywise difference over the shared grid.
    pub fn sup_distance(&self, other: &FundamentalSample) -> Result<f64> {
        if self.x_grid.len() != other.x_grid.len() {
            return Err(Error::GridMismatch {
                expected: self.x_grid.len(),
                got: other.x_grid.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| (a - b).iter().map(|v| v.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max))
    }

    /// Largest entry magnitude over the grid (the `M(C[0,1])` norm).
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|m| m.iter().map(|v| v.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    pub fn min_abs_det(&self) -> f64 {
        self.values
            .iter()
            .map(|m| m.determinant().norm())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn uniform_grid(m: usize) -> Vec<f64> {
    (0..=m).map(|k| k as f64 / m as f64).collect()
}

/// `e^{xA}` on the uniform grid.
pub fn approx_leading(mu: Complex64, m: usize) -> FundamentalSample {
    let x_grid = uniform_grid(m);
    let values = x_grid.iter().map(|&x| exp_xa(mu, x)).collect();
    FundamentalSample {
        mu,
        x_grid,
        values,
        method: Method::ApproxLeading,
    }
}

fn exp_xa(mu: Complex64, x: f64) -> Mat2 {
    let e = (Complex64::i() * mu * x).exp();
    Mat2::new(
        e,
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        1.0 / e,
    )
}

/// Closed form for `σ1 = σ2 = c`: `cos(ωx) I + sin(ωx)/ω [[iμ, -c], [-c, -iμ]]`,
/// `ω = √(μ² - c²)`.
pub fn constant_potential_matrix(c: Complex64, mu: Complex64, x: f64) -> Mat2 {
    let w = (mu * mu - c * c).sqrt();
    let (cs, sn) = if (w * x).norm() < 1e-6 {
        let z2 = (w * x) * (w * x);
        (1.0 - z2 / 2.0, Complex64::from(x) * (1.0 - z2 / 6.0))
    } else {
        ((w * x).cos(), (w * x).sin() / w)
    };
    let i = Complex64::i();
    Mat2::new(cs + sn * i * mu, -sn * c, -sn * c, cs - sn * i * mu)
}

/// The coefficient `A - J(x)` on one stop interval, with the potentials
/// restricted to that interval.
fn interval_coefficient(
    pair: &PotentialPair,
    mu: Complex64,
    a: f64,
    b: f64,
) -> impl Fn(f64) -> Mat2 {
    let poly_on = |pot: &crate::potential::Potential| {
        pot.pieces(a, b)
            .into_iter()
            .next()
            .map(|p| (p.a, p.poly))
            .unwrap_or((a, crate::poly::Poly::zero()))
    };
    let (a1, p1) = poly_on(&pair.sigma1);
    let (a2, p2) = poly_on(&pair.sigma2);
    let imu = Complex64::i() * mu;
    move |x: f64| Mat2::new(imu, -p1.eval(x - a1), -p2.eval(x - a2), -imu)
}

/// Stops for the integrator: requested points merged with the breakpoints.
/// Returns the stop list and the position of each requested point in it.
fn merged_stops(points: &[f64], breaks: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut all: Vec<(f64, bool)> = points
        .iter()
        .map(|&x| (x, true))
        .chain(breaks.iter().map(|&b| (b, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut stops: Vec<f64> = Vec::with_capacity(all.len());
    let mut pos = Vec::with_capacity(points.len());
    for (x, requested) in all {
        let dup = stops.last().is_some_and(|&l| (x - l).abs() < 1e-14);
        if !dup {
            stops.push(x);
        }
        if requested {
            pos.push(stops.len() - 1);
        }
    }
    (stops, pos)
}

/// Direct integration at arbitrary sorted points in `[0, 1]` starting at 0.
pub fn solve_direct_at(
    pair: &PotentialPair,
    mu: Complex64,
    points: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Mat2>> {
    if points.first() != Some(&0.0)
        || points.windows(2).any(|w| w[1] < w[0])
        || points.last().is_some_and(|&x| x > 1.0)
    {
        return Err(Error::Domain(
            "direct solve needs sorted points in [0, 1] starting at 0".into(),
        ));
    }
    let (stops, pos) = merged_stops(points, &pair.breakpoints());
    let (vals, _) = solve_linear(
        &stops,
        Mat2::identity(),
        |k| interval_coefficient(pair, mu, stops[k], stops[k + 1]),
        opts,
    )?;
    Ok(pos.into_iter().map(|k| vals[k]).collect())
}

/// Reference solution on the uniform grid `k/M`.
pub fn solve_direct(
    pair: &PotentialPair,
    mu: Complex64,
    m: usize,
    opts: &OdeOptions,
) -> Result<FundamentalSample> {
    if m < 1 {
        return Err(Error::Config("direct solve needs M >= 1".into()));
    }
    let x_grid = uniform_grid(m);
    let values = solve_direct_at(pair, mu, &x_grid, opts)?;
    Ok(FundamentalSample {
        mu,
        x_grid,
        values,
        method: Method::Direct,
    })
}

/// `D` at `x = 1` only.
pub fn solve_direct_end(pair: &PotentialPair, mu: Complex64, opts: &OdeOptions) -> Result<Mat2> {
    Ok(solve_direct_at(pair, mu, &[0.0, 1.0], opts)?[1])
}

fn grid_stride(kernel_m: usize, m: usize) -> Result<usize> {
    if m == 0 || kernel_m < m || !kernel_m.is_multiple_of(m) {
        return Err(Error::GridMismatch {
            expected: m,
            got: kernel_m,
        });
    }
    Ok(kernel_m / m)
}

/// `e^{xA} + ∫_0^x e^{(x-2t)A} [K(x,t) - J(t)] dt` with the `J` part exact
/// and the `K` part by cubic product integration against the exact weight.
fn represent(
    pair: &PotentialPair,
    k: &KernelField,
    mu: Complex64,
    m: usize,
    method: Method,
) -> Result<FundamentalSample> {
    let grid = k.grid();
    let stride = grid_stride(grid.m(), m)?;
    let h = grid.h();
    let minus = OscRowRule::new(h, -2.0 * mu);
    let plus = OscRowRule::new(h, 2.0 * mu);
    let s1 = prefix_transform(&pair.sigma1, -2.0 * mu, m);
    let s2 = prefix_transform(&pair.sigma2, 2.0 * mu, m);
    let x_grid = uniform_grid(m);
    let values = (0..=m)
        .map(|i| {
            let row = i * stride;
            let x = x_grid[i];
            let e = (Complex64::i() * mu * x).exp();
            let q11 = minus.integrate(k.e11.row(row));
            let q12 = minus.integrate(k.e12.row(row));
            let q21 = plus.integrate(k.e21.row(row));
            let q22 = plus.integrate(k.e22.row(row));
            Mat2::new(
                e * (1.0 + q11),
                e * (q12 - s1.values()[i]),
                (q21 - s2.values()[i]) / e,
                (1.0 + q22) / e,
            )
        })
        .collect();
    Ok(FundamentalSample {
        mu,
        x_grid,
        values,
        method,
    })
}

/// Kernel representation of `D` on the grid `k/M`; `Q` must live on a grid
/// whose size is a multiple of `M`.
pub fn solve_via_kernel(
    pair: &PotentialPair,
    q: &KernelField,
    mu: Complex64,
    m: usize,
) -> Result<FundamentalSample> {
    represent(pair, q, mu, m, Method::Kernel)
}

/// `I1(x) = ∫_0^x e^{-2iμt} σ̃1(x,t) dt` and `I2(x) = ∫_0^x e^{2iμt} σ̃2(x,t) dt`
/// on the grid `k/M`, both exact.
pub fn sigma_tilde_transforms(
    pair: &PotentialPair,
    mu: Complex64,
    m: usize,
) -> (Vec<Complex64>, Vec<Complex64>) {
    (
        triangle_prefix(&pair.sigma1, &pair.sigma2, -2.0 * mu, 2.0 * mu, m),
        triangle_prefix(&pair.sigma2, &pair.sigma1, 2.0 * mu, -2.0 * mu, m),
    )
}

/// `e^{xA} + D_0` with `D_0 = [[r1, q1], [q2, r2]]`: `q` from the transforms
/// of `σ_j`, `r` from those of `σ̃_j`.
pub fn approx_d0(pair: &PotentialPair, mu: Complex64, m: usize) -> FundamentalSample {
    let s1 = prefix_transform(&pair.sigma1, -2.0 * mu, m);
    let s2 = prefix_transform(&pair.sigma2, 2.0 * mu, m);
    let (i1, i2) = sigma_tilde_transforms(pair, mu, m);
    let x_grid = uniform_grid(m);
    let values = (0..=m)
        .map(|i| {
            let e = (Complex64::i() * mu * x_grid[i]).exp();
            Mat2::new(
                e * (1.0 + i1[i]),
                -e * s1.values()[i],
                -s2.values()[i] / e,
                (1.0 + i2[i]) / e,
            )
        })
        .collect();
    FundamentalSample {
        mu,
        x_grid,
        values,
        method: Method::ApproxD0,
    }
}

/// `e^{xA} + ∫_0^x e^{(x-2t)A} [N(x,t) - J(t)] dt`. The diagonal of `N`
/// (i.e. `σ̃_j`) is integrated exactly, the off-diagonal from the grid.
pub fn approx_n(
    pair: &PotentialPair,
    n: &KernelField,
    mu: Complex64,
    m: usize,
) -> Result<FundamentalSample> {
    let stride = grid_stride(n.grid().m(), m)?;
    let h = n.grid().h();
    let minus = OscRowRule::new(h, -2.0 * mu);
    let plus = OscRowRule::new(h, 2.0 * mu);
    let d0 = approx_d0(pair, mu, m);
    let values = d0
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let row = i * stride;
            let e = (Complex64::i() * mu * d0.x_grid[i]).exp();
            let mut out = *v;
            out[(0, 1)] += e * minus.integrate(n.e12.row(row));
            out[(1, 0)] += plus.integrate(n.e21.row(row)) / e;
            out
        })
        .collect();
    Ok(FundamentalSample {
        mu,
        x_grid: d0.x_grid,
        values,
        method: Method::ApproxN,
    })
}

/// Integral-form residual of `y' = (A - J) y` for `y = D(·) v`:
/// `max_k |y(x_{k+1}) - y(x_k) - ∫_{x_k}^{x_{k+1}} (A - J) y| / h_k`, with the
/// cell integral by 8-point Gauss-Legendre on a separate direct solve
/// through the quadrature nodes. Cells are split at breakpoints.
pub fn ode_residual(
    pair: &PotentialPair,
    mu: Complex64,
    m: usize,
    v: [Complex64; 2],
    opts: &OdeOptions,
) -> Result<f64> {
    let (cells, _) = merged_stops(&uniform_grid(m), &pair.breakpoints());
    let mut points = Vec::with_capacity(cells.len() * 9);
    points.push(0.0);
    for w in cells.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (c, hw) = (0.5 * (a + b), 0.5 * (b - a));
        for x in GL8_X {
            points.push(c + hw * x);
        }
        points.push(b);
    }
    let sol = solve_direct_at(pair, mu, &points, opts)?;
    let vec = nalgebra::Vector2::new(v[0], v[1]);
    let y: Vec<_> = sol.iter().map(|d| d * vec).collect();
    let mut worst: f64 = 0.0;
    for (k, w) in cells.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-12 {
            continue;
        }
        let coef = interval_coefficient(pair, mu, a, b);
        let base = 9 * k;
        let hw = 0.5 * (b - a);
        let mut integral = nalgebra::Vector2::zeros();
        for (g, (&x, &wt)) in GL8_X.iter().zip(GL8_W.iter()).enumerate() {
            let s = 0.5 * (a + b) + hw * x;
            integral += coef(s) * y[base + 1 + g] * Complex64::from(wt * hw);
        }
        let r = (y[base + 9] - y[base] - integral).norm() / (b - a);
        worst = worst.max(r);
    }
    Ok(worst)
}
