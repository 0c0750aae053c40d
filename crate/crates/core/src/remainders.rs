//! Remainder functionals built from windowed transforms of the potentials,
//! and numerical checks of the explicit inequalities they satisfy.
//!
//! With `P_j^∓(x) = ∫_0^x e^{∓2iμt} σ_j(t) dt`:
//! `γ0(x) = Σ_j |P_j^-(x)| + |P_j^+(x)|`, `γ` sums the `L_q` norms in `x`,
//! `Γ` the sup norms, `γ1 = ∫ σ0 γ0²` and `γ2 = a2² γ² + a1 γ1`
//! (the unnamed constants of that definition taken as `l2 = a2`, `l1 = a1`).
//!
//! Matrix quantities are measured by the sum of the moduli of the entries.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernel::{b_norm, build_j_tilde, KernelField, PairOperators, ScalarField, TriangleGrid};
use crate::numerics::line::{potential_cell_moments, CellRule, OscRowRule};
use crate::numerics::prefix::{prefix_transform, OscTransform};
use crate::numerics::quad::{GL8_W, GL8_X};
use crate::ode::Mat2;
use crate::potential::{NormConstants, PotentialPair};
use crate::solver::{sigma_tilde_transforms, uniform_grid};

/// The four prefix transforms `P_1^-, P_1^+, P_2^-, P_2^+` at one `μ`.
pub struct Transforms<'a> {
    all: [OscTransform<'a>; 4],
}

impl<'a> Transforms<'a> {
    pub fn new(pair: &'a PotentialPair, mu: Complex64, m: usize) -> Self {
        Self {
            all: [
                prefix_transform(&pair.sigma1, -2.0 * mu, m),
                prefix_transform(&pair.sigma1, 2.0 * mu, m),
                prefix_transform(&pair.sigma2, -2.0 * mu, m),
                prefix_transform(&pair.sigma2, 2.0 * mu, m),
            ],
        }
    }

    pub fn m(&self) -> usize {
        self.all[0].m()
    }

    /// `γ0` at the grid nodes.
    pub fn gamma0_nodes(&self) -> Vec<f64> {
        (0..=self.m())
            .map(|i| self.all.iter().map(|t| t.values()[i].norm()).sum())
            .collect()
    }

    /// `γ0(x)` at any `x`.
    pub fn gamma0_at(&self, x: f64) -> f64 {
        self.all.iter().map(|t| t.at(x).norm()).sum()
    }

    /// Sum over the four transforms of a norm in `x` on the grid.
    fn summed_norm(&self, q: f64) -> f64 {
        self.all.iter().map(|t| grid_lq_norm(t.values(), q)).sum()
    }
}

/// Trapezoidal `L_q[0, 1]` norm of node values on the uniform grid; `q = ∞`
/// gives the maximum.
pub fn grid_lq_norm(values: &[Complex64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let m = values.len() - 1;
    let h = 1.0 / m as f64;
    let sum: f64 = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            w * v.norm().powf(q)
        })
        .sum();
    (h * sum).powf(1.0 / q)
}

pub fn gamma0(pair: &PotentialPair, mu: Complex64, x: f64) -> f64 {
    let w = 2.0 * mu;
    [&pair.sigma1, &pair.sigma2]
        .iter()
        .map(|s| s.osc_integral(0.0, x, -w).norm() + s.osc_integral(0.0, x, w).norm())
        .sum()
}

/// `γ(μ)`; equals `Γ(μ)` when `p = 1`.
pub fn gamma(pair: &PotentialPair, mu: Complex64, m: usize) -> f64 {
    Transforms::new(pair, mu, m).summed_norm(pair.q())
}

#[allow(non_snake_case)]
pub fn Gamma(pair: &PotentialPair, mu: Complex64, m: usize) -> f64 {
    Transforms::new(pair, mu, m).summed_norm(f64::INFINITY)
}

fn gamma1_from(pair: &PotentialPair, tr: &Transforms) -> f64 {
    // Gauss-Legendre per cell of the grid refined by the breakpoints, with
    // γ0 evaluated exactly at the quadrature nodes.
    let mut knots = uniform_grid(tr.m());
    knots.extend(pair.breakpoints());
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    knots
        .windows(2)
        .map(|w| {
            let (c, hw) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            GL8_X
                .iter()
                .zip(GL8_W.iter())
                .map(|(&x, &wt)| {
                    let s = c + hw * x;
                    let g = tr.gamma0_at(s);
                    wt * hw * pair.sigma0(s) * g * g
                })
                .sum::<f64>()
        })
        .sum()
}

pub fn gamma1(pair: &PotentialPair, mu: Complex64, m: usize) -> f64 {
    gamma1_from(pair, &Transforms::new(pair, mu, m))
}

pub fn gamma2(pair: &PotentialPair, mu: Complex64, m: usize) -> f64 {
    let c = pair.constants();
    let g = gamma(pair, mu, m);
    c.a2 * c.a2 * g * g + c.a1 * gamma1(pair, mu, m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderProfile {
    pub mu: Complex64,
    pub gamma0: Vec<f64>,
    pub gamma: f64,
    #[serde(rename = "Gamma")]
    pub big_gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub constants: NormConstants,
    pub d: f64,
}

impl RemainderProfile {
    pub fn new(pair: &PotentialPair, mu: Complex64, m: usize, d: f64) -> Self {
        let tr = Transforms::new(pair, mu, m);
        let c = *pair.constants();
        let g = tr.summed_norm(pair.q());
        let g1 = gamma1_from(pair, &tr);
        Self {
            mu,
            gamma0: tr.gamma0_nodes(),
            gamma: g,
            big_gamma: tr.summed_norm(f64::INFINITY),
            gamma1: g1,
            gamma2: c.a2 * c.a2 * g * g + c.a1 * g1,
            constants: c,
            d,
        }
    }

    /// `‖γ0‖_{L_q}` on the grid.
    pub fn gamma0_lq(&self, q: f64) -> f64 {
        let v: Vec<Complex64> = self.gamma0.iter().map(|&g| Complex64::from(g)).collect();
        grid_lq_norm(&v, q)
    }
}

/// One checked inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub mu: Option<Complex64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Relative slack granted to grid-evaluated inequalities.
pub const MARGIN_REL_TOL: f64 = 1e-8;

impl BoundCheck {
    pub fn new(name: impl Into<String>, mu: Option<Complex64>, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            mu,
            lhs,
            rhs,
        }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -MARGIN_REL_TOL * self.rhs.abs().max(self.lhs.abs()).max(1e-300)
    }
}

fn matrix_norm(m: &Mat2) -> f64 {
    m.iter().map(|v| v.norm()).sum()
}

/// `∫_0^{x_i} e^{-2tA} K(x_i, t) dt` for every row, `e^{-2tA} = diag(e^{-2iμt}, e^{2iμt})`.
pub fn weighted_row_integrals(k: &KernelField, mu: Complex64) -> Vec<Mat2> {
    let grid = k.grid();
    let minus = OscRowRule::new(grid.h(), -2.0 * mu);
    let plus = OscRowRule::new(grid.h(), 2.0 * mu);
    (0..=grid.m())
        .map(|i| {
            Mat2::new(
                minus.integrate(k.e11.row(i)),
                minus.integrate(k.e12.row(i)),
                plus.integrate(k.e21.row(i)),
                plus.integrate(k.e22.row(i)),
            )
        })
        .collect()
}

/// `T̃J̃`, `T̃²J̃`, `T̃³J̃` on one grid.
pub struct IteratedFields {
    pub grid: TriangleGrid,
    pub powers: Vec<KernelField>,
}

impl IteratedFields {
    pub fn build(pair: &PotentialPair, grid: TriangleGrid) -> Result<Self> {
        let ops = PairOperators::new(pair, grid);
        let mut powers = Vec::with_capacity(3);
        let mut cur = build_j_tilde(pair, grid);
        for _ in 0..3 {
            cur = ops.apply_tilde(&cur)?;
            powers.push(cur.clone());
        }
        Ok(Self { grid, powers })
    }
}

/// Both sides of the row-transform estimates at one `μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowEstimateRecord {
    pub mu: Complex64,
    pub checks: Vec<BoundCheck>,
}

impl RowEstimateRecord {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds())
    }
}

/// Evaluates both sides of the four estimates for every `μ` of the sweep.
pub fn verify_row_estimates(
    pair: &PotentialPair,
    fields: &IteratedFields,
    mu_sweep: &[Complex64],
    d: f64,
) -> Vec<RowEstimateRecord> {
    let m = fields.grid.m();
    let c = *pair.constants();
    mu_sweep
        .par_iter()
        .map(|&mu| {
            let prof = RemainderProfile::new(pair, mu, m, d);
            let (i1, i2) = sigma_tilde_transforms(pair, mu, m);
            let lhs0 = i1
                .iter()
                .zip(&i2)
                .map(|(a, b)| a.norm() + b.norm())
                .fold(0.0, f64::max);
            let rows: Vec<Vec<f64>> = fields
                .powers
                .iter()
                .map(|k| {
                    weighted_row_integrals(k, mu)
                        .iter()
                        .map(matrix_norm)
                        .collect()
                })
                .collect();
            let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            let g = prof.gamma;
            let e2d = (2.0 * d).exp();
            let mut checks = vec![
                BoundCheck::new("row_j_tilde", Some(mu), lhs0, 2.0 * e2d * c.a0_tilde * g),
                BoundCheck::new(
                    "row_tj_sup",
                    Some(mu),
                    sup(&rows[0]),
                    2.0 * e2d * e2d * c.a0_tilde * c.a0_tilde * g,
                ),
            ];
            // Pointwise in x: keep the row with the smallest margin.
            let est1 = rows[0]
                .iter()
                .zip(&prof.gamma0)
                .map(|(&l, &g0)| {
                    BoundCheck::new(
                        "row_tj_pointwise",
                        Some(mu),
                        l,
                        2.0 * (c.a2 + 1.0) * e2d * (g * g0 + prof.gamma1),
                    )
                })
                .min_by(|a, b| a.margin().total_cmp(&b.margin()))
                .expect("nonempty grid");
            checks.push(est1);
            for n in [2usize, 3] {
                checks.push(BoundCheck::new(
                    format!("row_t{n}j"),
                    Some(mu),
                    sup(&rows[n - 1]),
                    iterate_bound(n, d, c.a1, prof.gamma2),
                ));
            }
            RowEstimateRecord { mu, checks }
        })
        .collect()
}

/// `2 e^{2nd} a1^{n-2}/(n-2)! γ2`.
pub fn iterate_bound(n: usize, d: f64, a1: f64, gamma2: f64) -> f64 {
    assert!(n >= 2);
    let mut frac = 1.0;
    for l in 1..=n - 2 {
        frac *= a1 / l as f64;
    }
    2.0 * (2.0 * n as f64 * d).exp() * frac * gamma2
}

/// The elementary bounds on `γ0`, `γ`, `γ2` at one `μ ∈ P_d`.
pub fn remainder_bounds(pair: &PotentialPair, prof: &RemainderProfile) -> Vec<BoundCheck> {
    let c = prof.constants;
    let d = prof.d;
    let mu = Some(prof.mu);
    let e2d = (2.0 * d).exp();
    let sup_g0 = prof.gamma0.iter().copied().fold(0.0, f64::max);
    let mut out = vec![
        BoundCheck::new("gamma0_sup", mu, sup_g0, 2.0 * e2d * c.a1),
        BoundCheck::new("gamma_sup", mu, prof.gamma, 2.0 * e2d * c.a1),
        BoundCheck::new(
            "gamma2_a",
            mu,
            prof.gamma2,
            4.0 * e2d * e2d * c.a1 * c.a1 * (c.a2 + c.a1 * c.a1),
        ),
        BoundCheck::new(
            "gamma2_b",
            mu,
            prof.gamma2,
            2.0 * c.a1 * e2d * (c.a2 + 2.0 * c.a1 * e2d * c.sigma0_lp) * prof.gamma,
        ),
        BoundCheck::new(
            "gamma1_holder",
            mu,
            prof.gamma1,
            c.sigma0_l1 * sup_g0 * sup_g0,
        ),
    ];
    if pair.p() > 1.0 {
        out.push(BoundCheck::new(
            "gamma0_lq",
            mu,
            prof.gamma0_lq(pair.q()),
            prof.gamma,
        ));
    }
    out
}

/// Deterministic test fields on the triangle for the operator bounds.
pub fn probe_fields(grid: TriangleGrid) -> Vec<ScalarField> {
    vec![
        ScalarField::from_fn(grid, |_, _| Complex64::new(1.0, 0.0)),
        ScalarField::from_fn(grid, |x, t| {
            Complex64::new((3.0 * x + 5.0 * t).cos(), (7.0 * t).sin())
        }),
        ScalarField::from_fn(grid, |x, t| {
            Complex64::new(x - t, 0.0) * Complex64::new(0.0, 9.0 * x).exp()
        }),
        ScalarField::from_fn(grid, |x, t| {
            Complex64::new(if t < 0.5 * x { 1.0 } else { -0.5 }, (x * t).sqrt())
        }),
    ]
}

/// Kernel-level bounds: `‖Q‖_B ≤ (1+a0)e^a‖J̃‖_B`, `‖σ̃_j‖_B ≤ ã`,
/// `‖T_σ f‖_B ≤ ‖σ‖_{L1}‖f‖_B` and `‖T_{kj}^n f‖_B ≤ a^n/n! ‖f‖_B` (`n ≤ 6`).
pub fn kernel_bounds(pair: &PotentialPair, q: &KernelField) -> Result<Vec<BoundCheck>> {
    let grid = q.grid();
    let r = pair.r();
    let c = pair.constants();
    let jt = build_j_tilde(pair, grid);
    let mut out = vec![
        BoundCheck::new(
            "kernel_norm",
            None,
            q.b_norm(r),
            (1.0 + c.a0) * c.a.exp() * jt.b_norm(r),
        ),
        BoundCheck::new("sigma_tilde1_norm", None, b_norm(&jt.e11, r), c.a_tilde),
        BoundCheck::new("sigma_tilde2_norm", None, b_norm(&jt.e22, r), c.a_tilde),
    ];
    let ops = PairOperators::new(pair, grid);
    for (k, f) in probe_fields(grid).iter().enumerate() {
        let nf = b_norm(f, r);
        out.push(BoundCheck::new(
            format!("t_sigma1_f{k}"),
            None,
            b_norm(&ops.t1.apply(f)?, r),
            c.l1[0] * nf,
        ));
        out.push(BoundCheck::new(
            format!("t_sigma2_f{k}"),
            None,
            b_norm(&ops.t2.apply(f)?, r),
            c.l1[1] * nf,
        ));
        let (mut f12, mut f21) = (f.clone(), f.clone());
        let mut bound = nf;
        for n in 1..=6 {
            f12 = ops.t1.apply(&ops.t2.apply(&f12)?)?;
            f21 = ops.t2.apply(&ops.t1.apply(&f21)?)?;
            bound *= c.a / n as f64;
            out.push(BoundCheck::new(
                format!("t12_pow{n}_f{k}"),
                None,
                b_norm(&f12, r),
                bound,
            ));
            out.push(BoundCheck::new(
                format!("t21_pow{n}_f{k}"),
                None,
                b_norm(&f21, r),
                bound,
            ));
        }
    }
    Ok(out)
}

/// Both sides of the identity
/// `∫_0^x e^{-2iμt}(T̃F)(x,t) dt = -∫_0^x e^{-2iμs} J(s) ∫_0^s e^{2iμξ} F(s,ξ) dξ ds`
/// on every grid row, for `F = J̃`. Returns the largest entrywise discrepancy.
pub fn transfer_identity_discrepancy(
    pair: &PotentialPair,
    grid: TriangleGrid,
    mu: Complex64,
) -> Result<f64> {
    let f = build_j_tilde(pair, grid);
    let ops = PairOperators::new(pair, grid);
    let tf = ops.apply_tilde(&f)?;
    let minus = OscRowRule::new(grid.h(), -2.0 * mu);
    let plus = OscRowRule::new(grid.h(), 2.0 * mu);
    let m = grid.m();
    // Inner transforms G(s) = ∫_0^s e^{2iμξ} F(s,ξ) dξ at s = x_k.
    let g: [Vec<Complex64>; 4] = [&f.e11, &f.e12, &f.e21, &f.e22]
        .map(|e| (0..=m).map(|k| plus.integrate(e.row(k))).collect());
    // Outer product integration against σ_j(s) e^{-2iμs}.
    let r1 = CellRule::from_moments(&potential_cell_moments(&pair.sigma1, m, -2.0 * mu));
    let r2 = CellRule::from_moments(&potential_cell_moments(&pair.sigma2, m, -2.0 * mu));
    // -(J G)_{1l} = -σ1 G_{2l},  -(J G)_{2l} = -σ2 G_{1l}
    let rhs11 = r1.line_prefix(0, m + 1, |k| -g[2][k]);
    let rhs12 = r1.line_prefix(0, m + 1, |k| -g[3][k]);
    let rhs21 = r2.line_prefix(0, m + 1, |k| -g[0][k]);
    let rhs22 = r2.line_prefix(0, m + 1, |k| -g[1][k]);
    let mut worst: f64 = 0.0;
    for i in 0..=m {
        let lhs = [
            minus.integrate(tf.e11.row(i)),
            minus.integrate(tf.e12.row(i)),
            minus.integrate(tf.e21.row(i)),
            minus.integrate(tf.e22.row(i)),
        ];
        let rhs = [rhs11[i], rhs12[i], rhs21[i], rhs22[i]];
        for (a, b) in lhs.iter().zip(&rhs) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

/// Largest discrepancy of the product identity
/// `∫_0^x e^{-2iμt}σ̃1(x,t)dt + ∫_0^x e^{2iμt}σ̃2(x,t)dt = P_1^-(x) P_2^+(x)` on the grid.
pub fn product_identity_discrepancy(pair: &PotentialPair, mu: Complex64, m: usize) -> f64 {
    let (i1, i2) = sigma_tilde_transforms(pair, mu, m);
    let p1 = prefix_transform(&pair.sigma1, -2.0 * mu, m);
    let p2 = prefix_transform(&pair.sigma2, 2.0 * mu, m);
    (0..=m)
        .map(|k| (i1[k] + i2[k] - p1.values()[k] * p2.values()[k]).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::neumann_solve;
    use crate::potential::Potential;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant_pair(v: f64) -> PotentialPair {
        let k = Potential::constant(c(v, 0.0), 1.5).unwrap();
        PotentialPair::new(k.clone(), k).unwrap()
    }

    fn step_pair() -> PotentialPair {
        let s1 = Potential::step(&[(0.0, 0.5, c(1.0, 0.0))], 1.0).unwrap();
        let s2 = Potential::step(&[(0.25, 1.0, c(0.7, 0.0))], 1.0).unwrap();
        PotentialPair::new(s1, s2).unwrap()
    }

    #[test]
    fn zero_pair_functionals_vanish() {
        let z = PotentialPair::zero(1.5).unwrap();
        let mu = c(3.0, 0.5);
        assert_eq!(gamma0(&z, mu, 0.7), 0.0);
        assert_eq!(gamma(&z, mu, 64), 0.0);
        assert_eq!(Gamma(&z, mu, 64), 0.0);
        assert_eq!(gamma1(&z, mu, 64), 0.0);
        assert_eq!(gamma2(&z, mu, 64), 0.0);
    }

    #[test]
    fn constant_pair_gamma0_vanishes_at_integer_frequency() {
        let pair = constant_pair(1.0);
        for n in 1..5 {
            let g = gamma0(&pair, c(PI * n as f64, 0.0), 1.0);
            assert!(g < 1e-14, "n={n}: {g}");
        }
    }

    #[test]
    fn gamma_is_big_gamma_for_p_one() {
        let pair = step_pair();
        let mu = c(17.0, 0.3);
        assert_eq!(gamma(&pair, mu, 128), Gamma(&pair, mu, 128));
    }

    #[test]
    fn profile_invariants_and_bounds() {
        for pair in [constant_pair(0.5), step_pair()] {
            for mu in [c(1.0, 0.0), c(20.0, 1.5), c(-7.0, -2.0)] {
                let prof = RemainderProfile::new(&pair, mu, 256, 2.0);
                assert!(prof
                    .gamma0
                    .iter()
                    .all(|&g| g >= 0.0 && g <= prof.big_gamma + 1e-15));
                for chk in remainder_bounds(&pair, &prof) {
                    assert!(chk.holds(), "{chk:?}");
                }
            }
        }
    }

    #[test]
    fn row_estimates_constant_pair() {
        let pair = constant_pair(0.5);
        let fields = IteratedFields::build(&pair, TriangleGrid::new(128).unwrap()).unwrap();
        let z = PotentialPair::zero(1.5).unwrap();
        let zf = IteratedFields::build(&z, TriangleGrid::new(32).unwrap()).unwrap();
        for rec in verify_row_estimates(&z, &zf, &[c(5.0, 0.0)], 2.0) {
            assert!(rec
                .checks
                .iter()
                .all(|k| k.lhs == 0.0 && k.margin() == k.rhs));
        }
        let recs = verify_row_estimates(&pair, &fields, &[c(20.0, 0.0), c(3.0, 1.0)], 2.0);
        for rec in &recs {
            assert!(rec.all_hold(), "{rec:?}");
            let n2 = rec.checks.iter().find(|k| k.name == "row_t2j").unwrap();
            let n3 = rec.checks.iter().find(|k| k.name == "row_t3j").unwrap();
            let ratio = n3.rhs / n2.rhs;
            assert!((ratio - 4f64.exp() * pair.constants().a1).abs() < 1e-12 * ratio);
            assert!(n3.lhs < n2.lhs);
        }
    }

    #[test]
    fn kernel_bounds_hold_for_step_pair() {
        let pair = step_pair();
        let (q, _) = neumann_solve(&pair, TriangleGrid::new(64).unwrap(), 1e-12).unwrap();
        for chk in kernel_bounds(&pair, &q).unwrap() {
            assert!(chk.holds(), "{chk:?}");
        }
    }

    #[test]
    fn product_identity_exact() {
        for pair in [constant_pair(0.5), step_pair()] {
            for mu in [c(3.3, 0.0), c(41.0, -1.2)] {
                assert!(product_identity_discrepancy(&pair, mu, 64) < 1e-12);
            }
        }
    }

    #[test]
    fn transfer_identity_converges() {
        let pair = step_pair();
        let mu = c(13.0, 0.7);
        let e1 = transfer_identity_discrepancy(&pair, TriangleGrid::new(32).unwrap(), mu).unwrap();
        let e2 = transfer_identity_discrepancy(&pair, TriangleGrid::new(64).unwrap(), mu).unwrap();
        assert!(e2 < e1 / 3.0, "{e1} {e2}");
    }
}
