//! Double integrals over the triangle `0 ≤ ξ ≤ t ≤ x`.
//!
//! `∫_0^x f(t) e^{iω_o t} ∫_0^t g(ξ) e^{iω_i ξ} dξ dt`: the inner transform is
//! formed exactly per segment of `g`, the outer integral is done by adaptive
//! Gauss-Kronrod on pieces short enough that the exponentials are smooth.

use num_complex::Complex64;

use crate::numerics::osc::osc_local_integral;
use crate::numerics::quad::integrate_complex;
use crate::poly::Poly;
use crate::potential::Potential;

const REL_TOL: f64 = 1e-10;

/// Values of the triangle integral at `x_k = k/M`, `k = 0..=M`.
pub fn triangle_prefix(
    f: &Potential,
    g: &Potential,
    omega_outer: Complex64,
    omega_inner: Complex64,
    m: usize,
) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(m + 1);
    out.push(zero);
    if f.is_zero() || g.is_zero() {
        out.resize(m + 1, zero);
        return out;
    }
    // Knots: grid nodes plus both potentials' breakpoints, refined so that
    // every piece has |ω| · length ≤ 1 for both frequencies.
    let mut knots: Vec<f64> = (0..=m)
        .map(|k| k as f64 / m as f64)
        .chain(f.breakpoints())
        .chain(g.breakpoints())
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let wmax = omega_outer
        .norm()
        .max((omega_outer + omega_inner).norm())
        .max(omega_inner.norm());

    let iwi = Complex64::i() * omega_inner;
    let iwo = Complex64::i() * omega_outer;
    let mut inner = zero; // ∫_0^a g e^{iω_i ξ}
    let mut acc = zero;
    let mut next_node = 1usize;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((wmax * (b - a)).ceil() as usize).max(1);
        let step = (b - a) / pieces as f64;
        let fp = f.pieces(a, b);
        let gp = g.pieces(a, b);
        let pf = fp
            .first()
            .map(|p| p.poly.clone())
            .unwrap_or_else(Poly::zero);
        let pg = gp
            .first()
            .map(|p| p.poly.clone())
            .unwrap_or_else(Poly::zero);
        for k in 0..pieces {
            let lo = a + k as f64 * step;
            let hi = if k + 1 == pieces {
                b
            } else {
                a + (k + 1) as f64 * step
            };
            let pf_lo = pf.shift(lo - a);
            let pg_lo = pg.shift(lo - a);
            let phase_i = (iwi * lo).exp();
            let inner_lo = inner;
            if !pf_lo.is_zero() {
                let (v, _) = integrate_complex(
                    |t| {
                        let u = t - lo;
                        let g_prefix =
                            inner_lo + phase_i * osc_local_integral(&pg_lo, u, omega_inner);
                        pf_lo.eval(u) * (iwo * t).exp() * g_prefix
                    },
                    lo,
                    hi,
                    REL_TOL,
                    1e-300,
                );
                acc += v;
            }
            inner += phase_i * osc_local_integral(&pg_lo, hi - lo, omega_inner);
        }
        while next_node <= m && (next_node as f64 / m as f64) <= b {
            out.push(acc);
            next_node += 1;
        }
    }
    while out.len() < m + 1 {
        out.push(acc);
    }
    out
}

/// `∫_0^1 ∫_0^t f(t) g(ξ) e^{iω_o t} e^{iω_i ξ} dξ dt`.
pub fn triangle_double_integral(
    f: &Potential,
    g: &Potential,
    omega_outer: Complex64,
    omega_inner: Complex64,
) -> Complex64 {
    *triangle_prefix(f, g, omega_outer, omega_inner, 1)
        .last()
        .expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_inputs() {
        let z = Potential::zero(1.5).unwrap();
        let one = Potential::constant(c(1.0, 0.0), 1.5).unwrap();
        assert_eq!(
            triangle_double_integral(&z, &one, c(1.0, 0.0), c(2.0, 0.0)),
            c(0.0, 0.0)
        );
        assert_eq!(
            triangle_double_integral(&z, &z, c(0.0, 0.0), c(0.0, 0.0)),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn triangle_area() {
        let one = Potential::constant(c(1.0, 0.0), 1.5).unwrap();
        let v = triangle_double_integral(&one, &one, c(0.0, 0.0), c(0.0, 0.0));
        assert!((v - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn constant_potential_closed_form() {
        // Inner integral (e^{2πint}-1)/(2πin); outer ∫ (1 - e^{-2πint}) dt = 1.
        let cval = 0.7;
        let k = Potential::constant(c(cval, 0.0), 1.5).unwrap();
        for n in [1, 3, 17] {
            let w = 2.0 * PI * n as f64;
            let v = triangle_double_integral(&k, &k, c(-w, 0.0), c(w, 0.0));
            let exact = c(cval * cval, 0.0) / c(0.0, w);
            assert!(
                (v - exact).norm() < 1e-11 * exact.norm(),
                "n={n}: {v} vs {exact}"
            );
        }
    }

    #[test]
    fn prefix_values_match_restricted_closed_form() {
        // f = g = 1, ω_o = ω_i = 0: ∫_0^x t dt = x^2/2.
        let one = Potential::constant(c(1.0, 0.0), 1.5).unwrap();
        let v = triangle_prefix(&one, &one, c(0.0, 0.0), c(0.0, 0.0), 8);
        for (k, vk) in v.iter().enumerate() {
            let x = k as f64 / 8.0;
            assert!((vk - c(0.5 * x * x, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn fubini_identity_on_steps() {
        // I(f,g) + I(g,f) with opposite frequencies equals the product of transforms.
        let f = Potential::step(&[(0.0, 0.5, c(1.0, 0.0))], 1.0).unwrap();
        let g = Potential::step(&[(0.25, 1.0, c(0.7, 0.0))], 1.0).unwrap();
        let w = c(37.0, 1.2);
        let i1 = triangle_double_integral(&f, &g, -w, w);
        let i2 = triangle_double_integral(&g, &f, w, -w);
        let prod = f.osc_integral(0.0, 1.0, -w) * g.osc_integral(0.0, 1.0, w);
        assert!((i1 + i2 - prod).norm() < 1e-12);
    }
}
