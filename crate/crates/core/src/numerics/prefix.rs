//! Windowed (prefix) oscillatory transforms `x ↦ ∫_0^x e^{iωt} σ(t) dt`.

use num_complex::Complex64;

use crate::potential::Potential;

/// Prefix values of `∫_0^{x_i} e^{iωt} σ(t) dt` on the uniform grid
/// `x_i = i/M`, exact per potential segment.
#[derive(Clone, Debug)]
pub struct OscTransform<'a> {
    source: &'a Potential,
    omega: Complex64,
    values: Vec<Complex64>,
}

pub fn prefix_transform(pot: &Potential, omega: Complex64, m: usize) -> OscTransform<'_> {
    assert!(m >= 2, "prefix transform grid needs M >= 2");
    let h = 1.0 / m as f64;
    let mut values = Vec::with_capacity(m + 1);
    values.push(Complex64::new(0.0, 0.0));
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..m {
        let lo = i as f64 * h;
        let hi = if i + 1 == m { 1.0 } else { (i + 1) as f64 * h };
        acc += pot.osc_integral(lo, hi, omega);
        values.push(acc);
    }
    OscTransform {
        source: pot,
        omega,
        values,
    }
}

impl<'a> OscTransform<'a> {
    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    pub fn source(&self) -> &'a Potential {
        self.source
    }

    /// Values at the grid nodes `x_0 = 0, …, x_M = 1`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Exact value at an arbitrary `x ∈ [0, 1]`.
    pub fn at(&self, x: f64) -> Complex64 {
        let m = self.m();
        let i = ((x * m as f64).floor() as usize).min(m);
        let xi = i as f64 / m as f64;
        self.values[i] + self.source.osc_integral(xi, x, self.omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::integrate_complex;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_potential_gives_zeros() {
        let z = Potential::zero(1.5).unwrap();
        let tr = prefix_transform(&z, c(3.0, 0.2), 16);
        assert!(tr.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn constant_potential_matches_antiderivative() {
        let one = Potential::constant(c(1.0, 0.0), 1.5).unwrap();
        let mu = c(7.3, 0.4);
        let tr = prefix_transform(&one, -2.0 * mu, 64);
        assert_eq!(tr.values()[0], c(0.0, 0.0));
        for (i, v) in tr.values().iter().enumerate() {
            let x = i as f64 / 64.0;
            let exact = (1.0 - (Complex64::new(0.0, -2.0) * mu * x).exp())
                / (Complex64::new(0.0, 2.0) * mu);
            assert!((v - exact).norm() < 1e-13);
        }
    }

    #[test]
    fn linear_potential_against_quadrature() {
        let t = Potential::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)], 1.5).unwrap();
        let w = c(-2.0 * std::f64::consts::PI, 0.0);
        let tr = prefix_transform(&t, w, 32);
        let quad =
            integrate_complex(|s| s * (Complex64::i() * w * s).exp(), 0.0, 1.0, 1e-13, 0.0).0;
        assert!((tr.values()[32] - quad).norm() < 1e-12);
        // Conjugate-symmetric counterpart of the +2π transform, i/(2π).
        assert!((tr.values()[32] - c(0.0, 1.0 / (2.0 * std::f64::consts::PI))).norm() < 1e-14);
        assert!(
            (tr.at(0.3)
                - integrate_complex(|s| s * (Complex64::i() * w * s).exp(), 0.0, 0.3, 1e-13, 0.0)
                    .0)
                .norm()
                < 1e-13
        );
    }

    #[test]
    fn telescopes_over_segments() {
        let s = Potential::step(&[(0.0, 0.3, c(1.0, 0.0)), (0.3, 0.8, c(0.0, 2.0))], 1.0).unwrap();
        let w = c(11.0, -0.5);
        let tr = prefix_transform(&s, w, 40);
        let direct = s.osc_integral(0.0, 1.0, w);
        assert!((tr.values()[40] - direct).norm() < 1e-13);
        for i in 0..40 {
            let (a, b) = (i as f64 / 40.0, (i + 1) as f64 / 40.0);
            let inc = tr.values()[i + 1] - tr.values()[i];
            assert!((inc - s.osc_integral(a, b, w)).norm() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn linear_and_conjugate_equivariant(re in -3.0f64..3.0, im in -3.0f64..3.0, w in -60.0f64..60.0, wi in -4.0f64..4.0) {
            let f = Potential::polynomial(vec![c(re, im), c(im, 1.0), c(0.5, -re)], 1.5).unwrap();
            let g = Potential::step(&[(0.2, 0.7, c(im, re))], 1.5).unwrap();
            let omega = c(w, wi);
            let sum = f.add(&g).unwrap();
            let a = prefix_transform(&f, omega, 20);
            let b = prefix_transform(&g, omega, 20);
            let s = prefix_transform(&sum, omega, 20);
            let fc = f.conj();
            let cc = prefix_transform(&fc, -omega.conj(), 20);
            for i in 0..=20 {
                let scale = 1.0 + a.values()[i].norm() + b.values()[i].norm();
                prop_assert!((s.values()[i] - a.values()[i] - b.values()[i]).norm() < 1e-12 * scale);
                prop_assert!((cc.values()[i] - a.values()[i].conj()).norm() < 1e-12 * scale);
            }
        }
    }
}
