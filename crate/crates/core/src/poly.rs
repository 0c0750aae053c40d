//! Dense complex polynomials in a local variable.
//!
//! Every piece of a [`Potential`](crate::potential::Potential) stores its
//! polynomial in the local coordinate `u = t - a`, where `a` is the left end
//! of the piece. Keeping the origin at the piece boundary keeps the
//! coefficients well conditioned on the tiny cells of graded meshes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `c0 + c1 u`.
    pub fn linear(c0: Complex64, c1: Complex64) -> Self {
        Self::new(vec![c0, c1])
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if *c == Complex64::new(0.0, 0.0)) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    pub fn add(&self, other: &Poly) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        Self::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        + other.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Re-centres the polynomial: returns `Q` with `Q(v) = P(v + delta)`.
    pub fn shift(&self, delta: f64) -> Self {
        if delta == 0.0 || self.coeffs.len() < 2 {
            return self.clone();
        }
        // Repeated synthetic division (Taylor shift).
        let mut c = self.coeffs.clone();
        let n = c.len();
        for k in 0..n - 1 {
            for j in (k..n - 1).rev() {
                let next = c[j + 1];
                c[j] += next * delta;
            }
        }
        Self::new(c)
    }

    /// Rescales the variable: returns `Q` with `Q(v) = P(s v)`.
    pub fn rescale(&self, s: f64) -> Self {
        let mut f = 1.0;
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let out = c * f;
                    f *= s;
                    out
                })
                .collect(),
        )
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// `∫_0^h P(u) du`.
    pub fn integral(&self, h: f64) -> Complex64 {
        let mut hp = h;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &c) in self.coeffs.iter().enumerate() {
            acc += c * (hp / (k + 1) as f64);
            hp *= h;
        }
        acc
    }
}

impl Default for Poly {
    fn default() -> Self {
        Self::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn shift_matches_direct_evaluation() {
        let p = Poly::new(vec![c(1.0), Complex64::new(-2.0, 0.5), c(0.25), c(3.0)]);
        let q = p.shift(0.7);
        for &v in &[0.0, 0.1, 0.33, 1.0] {
            assert!((q.eval(v) - p.eval(v + 0.7)).norm() < 1e-13);
        }
    }

    #[test]
    fn product_and_integral() {
        let p = Poly::from_real(&[1.0, 1.0]);
        let sq = p.mul(&p);
        assert_eq!(sq.coeffs(), &[c(1.0), c(2.0), c(1.0)]);
        // ∫_0^1 (1+u)^2 du = 7/3
        assert!((sq.integral(1.0) - c(7.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let p = Poly::from_real(&[1.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 0);
        assert!(Poly::from_real(&[0.0]).is_zero());
    }
}
