//! Closed-form oscillatory integrals of polynomials.

use num_complex::Complex64;

use crate::poly::Poly;

/// Below this value of `|ω h|` the exponential is expanded in a power
/// series; above it repeated integration by parts is used.
pub const SERIES_SWITCH: f64 = 2.0;

const MAX_SERIES_TERMS: usize = 80;

/// `∫_0^h u^k e^{iωu} du` for `k = 0..n`.
pub fn monomial_moments(n: usize, h: f64, omega: Complex64) -> Vec<Complex64> {
    let z = Complex64::i() * omega * h;
    if z.norm() <= SERIES_SWITCH {
        series_moments(n, h, z)
    } else {
        // m_k = [u^k e^{iωu}/(iω)]_0^h - k/(iω) m_{k-1}
        let iw = Complex64::i() * omega;
        let e = (iw * h).exp();
        let mut out = Vec::with_capacity(n + 1);
        let mut m = (e - 1.0) / iw;
        out.push(m);
        let mut hk = 1.0;
        for k in 1..=n {
            hk *= h;
            m = (e * hk - m * k as f64) / iw;
            out.push(m);
        }
        out
    }
}

fn series_moments(n: usize, h: f64, z: Complex64) -> Vec<Complex64> {
    // ∫_0^h u^k e^{iωu} du = h^{k+1} Σ_m z^m / (m! (k+m+1)),  z = iωh.
    let mut out = Vec::with_capacity(n + 1);
    let mut hk1 = h;
    for k in 0..=n {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term / (k + 1) as f64;
        for m in 1..MAX_SERIES_TERMS {
            term = term * z / m as f64;
            let add = term / (k + m + 1) as f64;
            sum += add;
            if add.norm() <= 1e-18 * sum.norm().max(1e-300) {
                break;
            }
        }
        out.push(sum * hk1);
        hk1 *= h;
    }
    out
}

/// `∫_0^h P(u) e^{iωu} du` for a polynomial in the local variable `u`.
pub fn osc_local_integral(poly: &Poly, h: f64, omega: Complex64) -> Complex64 {
    if poly.is_zero() || h == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let z = Complex64::i() * omega * h;
    if z.norm() <= SERIES_SWITCH {
        let moments = series_moments(poly.degree(), h, z);
        return poly.coeffs().iter().zip(&moments).map(|(c, m)| c * m).sum();
    }
    // Integration by parts: ∫ P e^{iωu} = e^{iωu} Σ_k (-1)^k P^{(k)}(u) / (iω)^{k+1}.
    let iw = Complex64::i() * omega;
    let e = (iw * h).exp();
    let mut d = poly.clone();
    let mut inv = 1.0 / iw;
    let mut sign = 1.0;
    let mut acc = Complex64::new(0.0, 0.0);
    while !d.is_zero() {
        acc += (e * d.eval(h) - d.eval(0.0)) * inv * sign;
        d = d.derivative();
        inv /= iw;
        sign = -sign;
    }
    acc
}

/// `∫_a^b P(t - a) e^{iωt} dt`, i.e. a segment polynomial stored in the
/// local coordinate of its left end.
pub fn osc_segment_integral(poly: &Poly, a: f64, b: f64, omega: Complex64) -> Complex64 {
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    (Complex64::i() * omega * a).exp() * osc_local_integral(poly, b - a, omega)
}
