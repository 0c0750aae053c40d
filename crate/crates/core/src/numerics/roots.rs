//! Zero counting by the argument principle and derivative-free polishing.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest argument increment accepted between neighbouring boundary samples.
const MAX_ARG_STEP: f64 = PI / 4.0;
const MAX_BISECTIONS: u32 = 40;
const BOUNDARY_ZERO_REL: f64 = 1e-12;

/// Axis-aligned rectangle in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub center: Complex64,
    pub half_width: f64,
    pub half_height: f64,
    /// Initial samples per side before adaptive refinement.
    pub samples: usize,
}

impl SearchBox {
    pub fn new(center: Complex64, half_width: f64, half_height: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_height > 0.0) {
            return Err(Error::Config(format!(
                "search box needs positive half sizes, got {half_width} x {half_height}"
            )));
        }
        Ok(Self {
            center,
            half_width,
            half_height,
            samples: 16,
        })
    }

    /// The default box around `πn` for stripe parameter `d`.
    pub fn around_pi_n(n: i64, d: f64) -> Self {
        Self {
            center: Complex64::new(PI * n as f64, 0.0),
            half_width: 0.45,
            half_height: 2.0 * d,
            samples: 16,
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples.max(1);
        self
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let d = z - self.center;
        d.re.abs() <= self.half_width && d.im.abs() <= self.half_height
    }

    fn corners(&self) -> [Complex64; 4] {
        let (w, h) = (self.half_width, self.half_height);
        [
            self.center + Complex64::new(-w, -h),
            self.center + Complex64::new(w, -h),
            self.center + Complex64::new(w, h),
            self.center + Complex64::new(-w, h),
        ]
    }

    /// The four quadrants, used when polishing has to fall back to subdivision.
    pub fn quadrants(&self) -> [SearchBox; 4] {
        let (w, h) = (0.5 * self.half_width, 0.5 * self.half_height);
        let mk = |dx: f64, dy: f64| SearchBox {
            center: self.center + Complex64::new(dx, dy),
            half_width: w,
            half_height: h,
            samples: self.samples,
        };
        [mk(-w, -h), mk(w, -h), mk(w, h), mk(-w, h)]
    }
}

/// Number of zeros of `phi` inside `bx`, counted with multiplicity.
pub fn winding_count<F: Fn(Complex64) -> Complex64>(phi: F, bx: &SearchBox) -> Result<i64> {
    let corners = bx.corners();
    let n = bx.samples.max(1);
    let mut pts = Vec::with_capacity(4 * n + 1);
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for s in 0..n {
            pts.push(a + (b - a) * (s as f64 / n as f64));
        }
    }
    pts.push(corners[0]);
    let vals: Vec<Complex64> = pts.iter().map(|&z| phi(z)).collect();
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !scale.is_finite() {
        return Err(Error::Numerical(
            "non-finite characteristic value on the box boundary".into(),
        ));
    }
    let threshold = BOUNDARY_ZERO_REL * scale;
    let check = |z: Complex64, v: Complex64| -> Result<()> {
        if v.norm() <= threshold {
            Err(Error::BoundaryZero { re: z.re, im: z.im })
        } else {
            Ok(())
        }
    };
    for (z, v) in pts.iter().zip(&vals) {
        check(*z, *v)?;
    }

    let mut total = 0.0;
    for i in 0..pts.len() - 1 {
        total += arg_increment(&phi, pts[i], vals[i], pts[i + 1], vals[i + 1], 0, &check)?;
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.1 {
        return Err(Error::Numerical(format!(
            "non-integer winding {turns:.4} around box at {}",
            bx.center
        )));
    }
    Ok(rounded as i64)
}

fn arg_increment<F, C>(
    phi: &F,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    depth: u32,
    check: &C,
) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
    C: Fn(Complex64, Complex64) -> Result<()>,
{
    let step = (fb / fa).arg();
    if step.abs() < MAX_ARG_STEP {
        return Ok(step);
    }
    if depth >= MAX_BISECTIONS {
        return Err(Error::Numerical(format!(
            "winding refinement limit reached near {za}"
        )));
    }
    let zm = 0.5 * (za + zb);
    let fm = phi(zm);
    check(zm, fm)?;
    Ok(arg_increment(phi, za, fa, zm, fm, depth + 1, check)?
        + arg_increment(phi, zm, fm, zb, fb, depth + 1, check)?)
}

/// Outcome of [`root_polish`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polished {
    pub root: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

const SECANT_BUDGET: usize = 60;
const SUBDIVISION_BUDGET: usize = 24;

/// Secant iteration from `start`, kept inside `bx`. Converged when
/// `|Δμ| < tol` and `|phi| < tol · scale`; otherwise the box is subdivided
/// using [`winding_count`] and the iteration restarts from the centre of the
/// quadrant holding the zero.
pub fn root_polish<F: Fn(Complex64) -> Complex64>(
    phi: F,
    start: Complex64,
    tol: f64,
    scale: f64,
    bx: &SearchBox,
) -> Result<Polished> {
    let mut current = *bx;
    let mut start = start;
    let mut iterations = 0;
    for _ in 0..SUBDIVISION_BUDGET {
        match secant(&phi, start, tol, scale, &current, &mut iterations) {
            Some(root) => {
                return Ok(Polished {
                    root,
                    residual: phi(root).norm(),
                    iterations,
                });
            }
            None => {
                let mut found = None;
                for q in current.quadrants() {
                    match winding_count(&phi, &q) {
                        Ok(1) => {
                            found = Some(q);
                            break;
                        }
                        Ok(_) => {}
                        // A zero on a quadrant edge: restart from it.
                        Err(Error::BoundaryZero { re, im }) => {
                            let z = Complex64::new(re, im);
                            if let Some(root) =
                                secant(&phi, z, tol, scale, &current, &mut iterations)
                            {
                                return Ok(Polished {
                                    root,
                                    residual: phi(root).norm(),
                                    iterations,
                                });
                            }
                        }
                        Err(e) => return Err(e),
                    }
                }
                let Some(q) = found else {
                    return Err(Error::Numerical(format!(
                        "root polishing lost the zero in box at {} (half sizes {} x {})",
                        current.center, current.half_width, current.half_height
                    )));
                };
                current = q;
                start = q.center;
            }
        }
    }
    Err(Error::Numerical(format!(
        "root polishing budget exhausted near {} after {iterations} iterations",
        current.center
    )))
}

fn secant<F: Fn(Complex64) -> Complex64>(
    phi: &F,
    start: Complex64,
    tol: f64,
    scale: f64,
    bx: &SearchBox,
    iterations: &mut usize,
) -> Option<Complex64> {
    let delta = 1e-4 * bx.half_width.min(bx.half_height);
    let mut x0 = start;
    let mut f0 = phi(x0);
    let mut x1 = start + delta;
    let mut f1 = phi(x1);
    let mut best = if f0.norm() <= f1.norm() {
        (x0, f0.norm())
    } else {
        (x1, f1.norm())
    };
    for _ in 0..SECANT_BUDGET {
        *iterations += 1;
        let denom = f1 - f0;
        if denom.norm() == 0.0 || !denom.norm().is_finite() {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / denom;
        if !bx.contains(x2) || !x2.re.is_finite() || !x2.im.is_finite() {
            return None;
        }
        let f2 = phi(x2);
        if f2.norm() < best.1 {
            best = (x2, f2.norm());
        }
        let step = (x2 - x1).norm();
        if step < tol && f2.norm() < tol * scale {
            return Some(x2);
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        // Rounding floor reached: the step has stalled below tolerance.
        if step < 1e-3 * tol {
            break;
        }
    }
    // Accept the best iterate if it already meets the residual test.
    (best.1 < tol * scale && bx.contains(best.0)).then_some(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_i_sin(mu: Complex64) -> Complex64 {
        Complex64::new(0.0, 2.0) * mu.sin()
    }

    fn constant_phi(c0: f64) -> impl Fn(Complex64) -> Complex64 {
        move |mu: Complex64| {
            let w = (mu * mu - c0 * c0).sqrt();
            if w.norm() < 1e-8 {
                Complex64::new(0.0, 2.0) * mu
            } else {
                Complex64::new(0.0, 2.0) * mu * w.sin() / w
            }
        }
    }

    #[test]
    fn winding_examples() {
        let b = SearchBox::new(c(PI, 0.0), 1.0, 1.0).unwrap();
        assert_eq!(winding_count(two_i_sin, &b).unwrap(), 1);
        let b = SearchBox::new(c(PI / 2.0, 0.0), 0.5, 0.5).unwrap();
        assert_eq!(winding_count(two_i_sin, &b).unwrap(), 0);
        let b = SearchBox::around_pi_n(3, 2.0);
        assert_eq!(winding_count(constant_phi(0.5), &b).unwrap(), 1);
        // Double zero.
        let b = SearchBox::new(c(0.0, 0.0), 1.0, 1.0).unwrap();
        assert_eq!(winding_count(|z: Complex64| z * z, &b).unwrap(), 2);
    }

    #[test]
    fn winding_refinement_invariant() {
        let phi = constant_phi(0.5);
        for n in [1, 5, 20] {
            let b = SearchBox::around_pi_n(n, 2.0);
            let coarse = winding_count(&phi, &b.with_samples(2)).unwrap();
            let fine = winding_count(&phi, &b.with_samples(200)).unwrap();
            assert_eq!(coarse, fine);
        }
    }

    #[test]
    fn boundary_zero_is_reported() {
        let b = SearchBox::new(c(PI - 1.0, 0.0), 1.0, 1.0).unwrap();
        // Right edge passes through π.
        assert!(matches!(
            winding_count(two_i_sin, &b.with_samples(4)),
            Err(Error::BoundaryZero { .. })
        ));
    }

    #[test]
    fn invalid_box() {
        assert!(SearchBox::new(c(0.0, 0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn polish_examples() {
        let b = SearchBox::new(c(PI, 0.0), 1.0, 1.0).unwrap();
        let r = root_polish(two_i_sin, c(3.0, 0.0), 1e-12, 2.0, &b).unwrap();
        assert!((r.root - c(PI, 0.0)).norm() < 1e-12);
        let b = SearchBox::new(c(1.0, 1.0), 1.0, 1.0).unwrap();
        let r = root_polish(|z: Complex64| z - c(1.0, 1.0), c(1.0, 0.0), 1e-12, 1.0, &b).unwrap();
        assert!((r.root - c(1.0, 1.0)).norm() < 1e-14);
        for n in [1i64, 4, 9] {
            let b = SearchBox::around_pi_n(n, 2.0);
            let r =
                root_polish(constant_phi(0.5), b.center, 1e-12, 1.0 + PI * n as f64, &b).unwrap();
            let exact = ((PI * n as f64).powi(2) + 0.25).sqrt();
            assert!((r.root - c(exact, 0.0)).norm() < 1e-11, "n={n}: {}", r.root);
        }
    }

    #[test]
    fn polish_falls_back_to_subdivision() {
        // A start far from the zero in a flat region sends the secant out of the box.
        let phi = |z: Complex64| (z - c(0.3, -0.2)) * (z * 3.0).exp();
        let b = SearchBox::new(c(0.0, 0.0), 1.0, 1.0).unwrap();
        let r = root_polish(phi, c(-0.95, 0.95), 1e-12, 1.0, &b).unwrap();
        assert!((r.root - c(0.3, -0.2)).norm() < 1e-11);
    }
}
