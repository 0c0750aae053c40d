//! The transformation kernel on the triangle `Δ = {0 ≤ t ≤ x ≤ 1}`.
//!
//! `Q` solves `Q = J̃ + T̃Q` with `J̃ = diag(σ̃1, σ̃2)` and
//! `T̃ = -[[0, T_{σ1}], [T_{σ2}, 0]]`, where
//! `(T_σ f)(x, t) = ∫_t^x σ(s) f(s, s - t) ds`. Characteristic lines of `T_σ`
//! run through grid nodes, so everything is computed on the node set
//! `(i/M, j/M)`, `j ≤ i`, without 2-D interpolation.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::line::{potential_cell_moments, CellRule};
use crate::potential::{Potential, PotentialPair};

/// Upper limit on the number of Neumann terms.
pub const TERM_BUDGET: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleGrid {
    m: usize,
}

impl TriangleGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 8 {
            return Err(Error::Config(format!(
                "triangle grid needs M >= 8, got {m}"
            )));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.m as f64
    }

    /// Number of nodes in the triangle.
    pub fn len(&self) -> usize {
        (self.m + 1) * (self.m + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i <= self.m);
        i * (i + 1) / 2 + j
    }

    fn check(&self, other: &TriangleGrid) -> Result<()> {
        if self.m != other.m {
            return Err(Error::GridMismatch {
                expected: self.m,
                got: other.m,
            });
        }
        Ok(())
    }
}

/// A complex function on the discrete triangle, stored row by row
/// (row `i` holds `t_0..=t_i`).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TriangleGrid,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: TriangleGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: TriangleGrid, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..=grid.m {
            for j in 0..=i {
                values.push(f(grid.node(i), grid.node(j)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> TriangleGrid {
        self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    /// Values `f(x_i, t_0..=t_i)`.
    pub fn row(&self, i: usize) -> &[Complex64] {
        let start = self.grid.index(i, 0);
        &self.values[start..=start + i]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm() == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.grid.check(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Largest row-to-row distance `‖f(x_{i+1}, ·) - f(x_i, ·)‖_{L_r}`, the
    /// shorter row extended by zero.
    pub fn max_row_step(&self, r: f64) -> f64 {
        let h = self.grid.h();
        (0..self.grid.m)
            .map(|i| {
                let (a, b) = (self.row(i), self.row(i + 1));
                let sum: f64 = (0..=i + 1)
                    .map(|j| {
                        let va = a.get(j).copied().unwrap_or_default();
                        let w = if j == 0 || j == i + 1 { 0.5 } else { 1.0 };
                        w * (b[j] - va).norm().powf(r)
                    })
                    .sum();
                (h * sum).powf(1.0 / r)
            })
            .fold(0.0, f64::max)
    }
}

/// Discrete B-norm: the largest over rows of the trapezoidal `L_r[0, x_i]`
/// norm.
pub fn b_norm(f: &ScalarField, r: f64) -> f64 {
    assert!(r >= 1.0, "B-norm exponent must be >= 1");
    let h = f.grid.h();
    (1..=f.grid.m)
        .map(|i| {
            let row = f.row(i);
            let sum: f64 = row
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let w = if j == 0 || j == i { 0.5 } else { 1.0 };
                    w * v.norm().powf(r)
                })
                .sum();
            (h * sum).powf(1.0 / r)
        })
        .fold(0.0, f64::max)
}

/// A 2×2 matrix of fields on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelField {
    pub e11: ScalarField,
    pub e12: ScalarField,
    pub e21: ScalarField,
    pub e22: ScalarField,
}

impl KernelField {
    pub fn zeros(grid: TriangleGrid) -> Self {
        let z = ScalarField::zeros(grid);
        Self {
            e11: z.clone(),
            e12: z.clone(),
            e21: z.clone(),
            e22: z,
        }
    }

    pub fn new(
        e11: ScalarField,
        e12: ScalarField,
        e21: ScalarField,
        e22: ScalarField,
    ) -> Result<Self> {
        let g = e11.grid;
        for f in [&e12, &e21, &e22] {
            g.check(&f.grid)?;
        }
        Ok(Self { e11, e12, e21, e22 })
    }

    pub fn grid(&self) -> TriangleGrid {
        self.e11.grid
    }

    pub fn entries(&self) -> [&ScalarField; 4] {
        [&self.e11, &self.e12, &self.e21, &self.e22]
    }

    pub fn add(&self, other: &KernelField) -> Result<Self> {
        Self::new(
            self.e11.add(&other.e11)?,
            self.e12.add(&other.e12)?,
            self.e21.add(&other.e21)?,
            self.e22.add(&other.e22)?,
        )
    }

    pub fn sub(&self, other: &KernelField) -> Result<Self> {
        Self::new(
            self.e11.sub(&other.e11)?,
            self.e12.sub(&other.e12)?,
            self.e21.sub(&other.e21)?,
            self.e22.sub(&other.e22)?,
        )
    }

    /// B-norm of a matrix field: the largest B-norm of its entries.
    pub fn b_norm(&self, r: f64) -> f64 {
        self.entries()
            .iter()
            .map(|f| b_norm(f, r))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|f| f.is_finite())
    }

    /// CSV with columns `i, j, x, t` and real/imaginary parts of the four entries.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "i,j,x,t,re_e11,im_e11,re_e12,im_e12,re_e21,im_e21,re_e22,im_e22"
        )?;
        let g = self.grid();
        for i in 0..=g.m {
            for j in 0..=i {
                write!(w, "{i},{j},{:.16e},{:.16e}", g.node(i), g.node(j))?;
                for f in self.entries() {
                    let v = f.get(i, j);
                    write!(w, ",{:.16e},{:.16e}", v.re, v.im)?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// `∫_lo^hi f(s) g(s - shift) ds` for piecewise polynomials, exact.
fn product_integral(
    f: &Potential,
    g: &Potential,
    lo: f64,
    hi: f64,
    glo: f64,
    ghi: f64,
) -> Complex64 {
    let pf = f.pieces(lo, hi);
    let pg = g.pieces(glo, ghi);
    let mut acc = Complex64::new(0.0, 0.0);
    let (mut a, mut b) = (0usize, 0usize);
    // Walk both piece lists in the common offset coordinate u.
    while a < pf.len() && b < pg.len() {
        let (fa, fb) = (pf[a].a - lo, pf[a].b - lo);
        let (ga, gb) = (pg[b].a - glo, pg[b].b - glo);
        let u0 = fa.max(ga);
        let u1 = fb.min(gb);
        if u1 > u0 && !pf[a].poly.is_zero() && !pg[b].poly.is_zero() {
            let p = pf[a].poly.shift(u0 - fa).mul(&pg[b].poly.shift(u0 - ga));
            acc += p.integral(u1 - u0);
        }
        if fb <= gb {
            a += 1;
        } else {
            b += 1;
        }
    }
    acc
}

/// `σ̃_1(x, t) = ∫_t^x σ1(s) σ2(s - t) ds` (`which = 1`) or the same with
/// the roles of `σ1`, `σ2` swapped (`which = 2`), exact at every node.
pub fn sigma_tilde(pair: &PotentialPair, which: usize, grid: TriangleGrid) -> ScalarField {
    let (f, g) = match which {
        1 => (&pair.sigma1, &pair.sigma2),
        2 => (&pair.sigma2, &pair.sigma1),
        _ => panic!("sigma_tilde index must be 1 or 2"),
    };
    let mut out = ScalarField::zeros(grid);
    if f.is_zero() || g.is_zero() {
        return out;
    }
    let m = grid.m;
    // Accumulate along each diagonal t = t_j, one cell [x_i, x_{i+1}] at a time.
    let columns: Vec<Vec<Complex64>> = (0..=m)
        .into_par_iter()
        .map(|j| {
            let mut col = Vec::with_capacity(m + 1 - j);
            let mut acc = Complex64::new(0.0, 0.0);
            col.push(acc);
            for i in j..m {
                acc += product_integral(
                    f,
                    g,
                    grid.node(i),
                    grid.node(i + 1),
                    grid.node(i - j),
                    grid.node(i + 1 - j),
                );
                col.push(acc);
            }
            col
        })
        .collect();
    for (j, col) in columns.into_iter().enumerate() {
        for (n, v) in col.into_iter().enumerate() {
            out.set(j + n, j, v);
        }
    }
    out
}

/// The Volterra operator `T_σ` discretised by product integration along
/// characteristic lines.
#[derive(Clone, Debug)]
pub struct TOperator {
    grid: TriangleGrid,
    rule: CellRule,
    zero: bool,
}

impl TOperator {
    pub fn new(sigma: &Potential, grid: TriangleGrid) -> Self {
        let moments = potential_cell_moments(sigma, grid.m, Complex64::new(0.0, 0.0));
        Self {
            grid,
            rule: CellRule::from_moments(&moments),
            zero: sigma.is_zero(),
        }
    }

    pub fn grid(&self) -> TriangleGrid {
        self.grid
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.check(&f.grid)?;
        let mut out = ScalarField::zeros(self.grid);
        if self.zero || f.is_zero() {
            return Ok(out);
        }
        let m = self.grid.m;
        let lines: Vec<Vec<Complex64>> = (0..=m)
            .into_par_iter()
            .map(|j| self.rule.line_prefix(j, m + 1 - j, |n| f.get(j + n, n)))
            .collect();
        for (j, line) in lines.into_iter().enumerate() {
            for (n, v) in line.into_iter().enumerate() {
                out.set(j + n, j, v);
            }
        }
        Ok(out)
    }
}

/// `(T_σ f)` on the grid of `f`.
pub fn apply_t(sigma: &Potential, f: &ScalarField) -> Result<ScalarField> {
    TOperator::new(sigma, f.grid).apply(f)
}

/// `J̃ = diag(σ̃1, σ̃2)`.
pub fn build_j_tilde(pair: &PotentialPair, grid: TriangleGrid) -> KernelField {
    let z = ScalarField::zeros(grid);
    KernelField {
        e11: sigma_tilde(pair, 1, grid),
        e12: z.clone(),
        e21: z,
        e22: sigma_tilde(pair, 2, grid),
    }
}

/// Both `T_σ` operators of a pair on a grid.
#[derive(Clone, Debug)]
pub struct PairOperators {
    pub t1: TOperator,
    pub t2: TOperator,
}

impl PairOperators {
    pub fn new(pair: &PotentialPair, grid: TriangleGrid) -> Self {
        Self {
            t1: TOperator::new(&pair.sigma1, grid),
            t2: TOperator::new(&pair.sigma2, grid),
        }
    }

    /// `T̃F = -[[T1 F21, T1 F22], [T2 F11, T2 F12]]`.
    pub fn apply_tilde(&self, f: &KernelField) -> Result<KernelField> {
        let neg = Complex64::new(-1.0, 0.0);
        KernelField::new(
            self.t1.apply(&f.e21)?.scale(neg),
            self.t1.apply(&f.e22)?.scale(neg),
            self.t2.apply(&f.e11)?.scale(neg),
            self.t2.apply(&f.e12)?.scale(neg),
        )
    }
}

/// `N = J̃ + T̃J̃ = [[σ̃1, -T_{σ1}σ̃2], [-T_{σ2}σ̃1, σ̃2]]`.
pub fn build_n(pair: &PotentialPair, grid: TriangleGrid) -> KernelField {
    let jt = build_j_tilde(pair, grid);
    let ops = PairOperators::new(pair, grid);
    let neg = Complex64::new(-1.0, 0.0);
    let e12 = ops.t1.apply(&jt.e22).expect("shared grid").scale(neg);
    let e21 = ops.t2.apply(&jt.e11).expect("shared grid").scale(neg);
    KernelField {
        e11: jt.e11,
        e12,
        e21,
        e22: jt.e22,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    /// Index of the last Neumann term kept.
    pub terms: usize,
    /// A priori bound on the discarded tail.
    pub tail_bound: f64,
    /// Discrete B-norm of the last term kept.
    pub last_term_norm: f64,
    /// `‖J̃‖_B`.
    pub j_tilde_norm: f64,
}

/// A priori tail `(1 + a0) e^a ‖J̃‖_B a^k / k!` with `k = ⌈(N - 1)/2⌉`.
pub fn tail_bound(a0: f64, a: f64, j_tilde_norm: f64, n: usize) -> f64 {
    let k = n.saturating_sub(1).div_ceil(2);
    let mut frac = 1.0;
    for l in 1..=k {
        frac *= a / l as f64;
    }
    (1.0 + a0) * a.exp() * j_tilde_norm * frac
}

/// Smallest number of terms whose tail bound is below `tail_tol`.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn terms_needed(a0: f64, a: f64, j_tilde_norm: f64, tail_tol: f64) -> Result<usize> {
    if !(tail_tol > 0.0) {
        return Err(Error::Config(format!(
            "tail tolerance must be positive, got {tail_tol}"
        )));
    }
    if j_tilde_norm == 0.0 {
        return Ok(0);
    }
    (0..=TERM_BUDGET)
        .find(|&n| tail_bound(a0, a, j_tilde_norm, n) < tail_tol)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "tail tolerance {tail_tol} not reached within {TERM_BUDGET} terms"
            ))
        })
}

/// Neumann series `Q = Σ_{n=0}^{N} T̃^n J̃`.
pub fn neumann_solve(
    pair: &PotentialPair,
    grid: TriangleGrid,
    tail_tol: f64,
) -> Result<(KernelField, TruncationReport)> {
    let jt = build_j_tilde(pair, grid);
    let r = pair.r();
    let jn = jt.b_norm(r);
    let c = pair.constants();
    let n_terms = terms_needed(c.a0, c.a, jn, tail_tol)?;
    let ops = PairOperators::new(pair, grid);
    let mut q = jt.clone();
    let mut term = jt;
    // Even terms are diagonal, odd terms off-diagonal; only the live pair is propagated.
    let neg = Complex64::new(-1.0, 0.0);
    for n in 1..=n_terms {
        term = if n % 2 == 1 {
            let z = ScalarField::zeros(grid);
            let e12 = ops.t1.apply(&term.e22)?.scale(neg);
            let e21 = ops.t2.apply(&term.e11)?.scale(neg);
            q.e12 = q.e12.add(&e12)?;
            q.e21 = q.e21.add(&e21)?;
            KernelField {
                e11: z.clone(),
                e12,
                e21,
                e22: z,
            }
        } else {
            let z = ScalarField::zeros(grid);
            let e11 = ops.t1.apply(&term.e21)?.scale(neg);
            let e22 = ops.t2.apply(&term.e12)?.scale(neg);
            q.e11 = q.e11.add(&e11)?;
            q.e22 = q.e22.add(&e22)?;
            KernelField {
                e11,
                e12: z.clone(),
                e21: z,
                e22,
            }
        };
    }
    if !q.is_finite() {
        return Err(Error::Numerical(
            "non-finite kernel values in the Neumann series".into(),
        ));
    }
    let report = TruncationReport {
        terms: n_terms,
        tail_bound: tail_bound(c.a0, c.a, jn, n_terms),
        last_term_norm: term.b_norm(r),
        j_tilde_norm: jn,
    };
    Ok((q, report))
}

/// `‖Q - J̃ - T̃Q‖_B`.
pub fn fixed_point_residual(pair: &PotentialPair, q: &KernelField) -> Result<f64> {
    let grid = q.grid();
    let ops = PairOperators::new(pair, grid);
    let res = q
        .sub(&build_j_tilde(pair, grid))?
        .sub(&ops.apply_tilde(q)?)?;
    Ok(res.b_norm(pair.r()))
}
