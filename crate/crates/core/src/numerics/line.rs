//! Product integration along a uniform line of nodes.
//!
//! `∫ w(s) φ(s) ds` over consecutive cells of width `h`, where `w` is known
//! exactly (a potential, an oscillatory factor) and `φ` is only sampled at the
//! nodes. On each cell `φ` is replaced by the cubic through the four nearest
//! nodes (fewer near short lines), clamped to stay inside the line, and
//! integrated against the exact moments `∫_cell w(s) ((s - s_k)/h)^j ds`.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::numerics::osc::{monomial_moments, osc_segment_integral};
use crate::poly::Poly;
use crate::potential::Potential;

/// Moments `j = 0..=3` of the weight on one cell.
pub type CellMoments = [Complex64; 4];

/// Stencil patterns: (number of nodes, first node offset relative to the cell).
const PATTERNS: [(usize, i64); 6] = [(4, -1), (4, 0), (4, -2), (3, 0), (3, -1), (2, 0)];

/// Monomial coefficients of the Lagrange basis for each pattern:
/// `BASIS[p][m][j]` is the coefficient of `v^j` in the basis polynomial of
/// the `m`-th stencil node, `v = (s - s_k)/h`.
fn basis() -> &'static [[[f64; 4]; 4]; 6] {
    static TABLE: OnceLock<[[[f64; 4]; 4]; 6]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = [[[0.0; 4]; 4]; 6];
        for (p, &(size, start)) in PATTERNS.iter().enumerate() {
            let nodes: Vec<f64> = (0..size).map(|m| (start + m as i64) as f64).collect();
            for m in 0..size {
                let mut coeffs = vec![1.0];
                let mut denom = 1.0;
                for (l, &node) in nodes.iter().enumerate() {
                    if l == m {
                        continue;
                    }
                    // multiply by (v - node)
                    let mut next = vec![0.0; coeffs.len() + 1];
                    for (j, &c) in coeffs.iter().enumerate() {
                        next[j + 1] += c;
                        next[j] -= c * node;
                    }
                    coeffs = next;
                    denom *= nodes[m] - node;
                }
                for (j, c) in coeffs.iter().enumerate() {
                    out[p][m][j] = c / denom;
                }
            }
        }
        out
    })
}

/// Pattern index and first local node for cell `n` of a line with `len` nodes.
#[inline]
fn pattern(n: usize, len: usize) -> (usize, usize) {
    debug_assert!(n + 1 < len);
    match len {
        2 => (5, 0),
        3 => {
            if n == 0 {
                (3, 0)
            } else {
                (4, 0)
            }
        }
        _ => {
            if n == 0 {
                (1, 0)
            } else if n + 2 == len {
                (2, n - 2)
            } else {
                (0, n - 1)
            }
        }
    }
}

/// Per-cell stencil weights for all patterns, precomputed from moments.
#[derive(Clone, Debug)]
pub struct CellRule {
    weights: Vec<[[Complex64; 4]; 6]>,
}

fn weights_from_moments(mom: &CellMoments) -> [[Complex64; 4]; 6] {
    let b = basis();
    let mut w = [[Complex64::new(0.0, 0.0); 4]; 6];
    for (p, &(size, _)) in PATTERNS.iter().enumerate() {
        for m in 0..size {
            w[p][m] = (0..4).map(|j| mom[j] * b[p][m][j]).sum();
        }
    }
    w
}

impl CellRule {
    pub fn from_moments(moments: &[CellMoments]) -> Self {
        Self {
            weights: moments.iter().map(weights_from_moments).collect(),
        }
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    /// Prefix integrals along a line whose first node sits at global cell
    /// `offset`: `out[n] = ∫_{s_offset}^{s_{offset+n}}`, `n = 0..len`.
    pub fn line_prefix<F: Fn(usize) -> Complex64>(
        &self,
        offset: usize,
        len: usize,
        values: F,
    ) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(len);
        out.push(Complex64::new(0.0, 0.0));
        if len < 2 {
            return out;
        }
        let vals: Vec<Complex64> = (0..len).map(&values).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..len - 1 {
            let (p, start) = pattern(n, len);
            let w = &self.weights[offset + n][p];
            let size = PATTERNS[p].0;
            for m in 0..size {
                acc += w[m] * vals[start + m];
            }
            out.push(acc);
        }
        out
    }
}

/// `∫_0^{x_{len-1}} e^{iωt} φ(t) dt` from node values `φ(t_0..t_{len-1})`
/// on the uniform grid of step `h`, with exact oscillatory moments.
#[derive(Clone, Debug)]
pub struct OscRowRule {
    base: [[Complex64; 4]; 6],
    step_phase: Complex64,
}

impl OscRowRule {
    pub fn new(h: f64, omega: Complex64) -> Self {
        let raw = monomial_moments(3, h, omega);
        // Moments in v = u/h.
        let mom = [raw[0], raw[1] / h, raw[2] / (h * h), raw[3] / (h * h * h)];
        Self {
            base: weights_from_moments(&mom),
            step_phase: (Complex64::i() * omega * h).exp(),
        }
    }

    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        let len = values.len();
        if len < 2 {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut n = 0;
        while n + 1 < len {
            let (p, start) = pattern(n, len);
            let w = &self.base[p];
            let mut cell = Complex64::new(0.0, 0.0);
            for m in 0..PATTERNS[p].0 {
                cell += w[m] * values[start + m];
            }
            acc += phase * cell;
            n += 1;
            // Recompute the phase periodically to keep rounding from compounding.
            phase = if n % 64 == 0 {
                self.step_phase.powu(n as u32)
            } else {
                phase * self.step_phase
            };
        }
        acc
    }
}

/// Exact cell moments `∫_{s_k}^{s_{k+1}} σ(s) e^{iωs} ((s - s_k)/h)^j ds`
/// on the uniform grid `s_k = k/M`.
pub fn potential_cell_moments(pot: &Potential, m: usize, omega: Complex64) -> Vec<CellMoments> {
    let h = 1.0 / m as f64;
    (0..m)
        .map(|k| {
            let sk = k as f64 * h;
            let hi = if k + 1 == m { 1.0 } else { (k + 1) as f64 * h };
            let mut mom = [Complex64::new(0.0, 0.0); 4];
            for piece in pot.pieces(sk, hi) {
                if piece.poly.is_zero() {
                    continue;
                }
                // ((piece.a - sk + u)/h)^j as a polynomial in u.
                let base = Poly::from_real(&[(piece.a - sk) / h, 1.0 / h]);
                let mut vj = Poly::from_real(&[1.0]);
                for slot in mom.iter_mut() {
                    *slot += osc_segment_integral(&piece.poly.mul(&vj), piece.a, piece.b, omega);
                    vj = vj.mul(&base);
                }
            }
            mom
        })
        .collect()
}
