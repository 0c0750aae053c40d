//! Complex potentials on `[0, 1]` as piecewise polynomials.
//!
//! Every potential is a list of segments tiling `[0, 1]`; each segment holds a
//! polynomial of degree at most three in the local variable `u = t - a`.
//! Built-in families (constant, step, trigonometric polynomial, power
//! singularity) compile into this representation, so every oscillatory
//! transform used downstream has a closed form per segment.
//!
//! Values at a shared breakpoint are taken from the right-hand segment
//! (left-hand at `x = 1`).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::osc::osc_segment_integral;
use crate::numerics::quad::integrate_real;
use crate::poly::Poly;

pub const MAX_SEGMENT_DEGREE: usize = 3;

const NORM_REL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    /// Polynomial in `u = t - a`.
    pub poly: Poly,
}

impl Segment {
    pub fn new(a: f64, b: f64, poly: Poly) -> Self {
        Self { a, b, poly }
    }

    /// The segment polynomial re-centred at `t0`, i.e. as a polynomial in `t - t0`.
    pub fn poly_at(&self, t0: f64) -> Poly {
        self.poly.shift(t0 - self.a)
    }
}

/// A piece of a potential restricted to `[a, b]`, with its polynomial in `t - a`.
#[derive(Clone, Debug)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub poly: Poly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    segments: Vec<Segment>,
    p: f64,
}

impl Potential {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(segments: Vec<Segment>, p: f64) -> Result<Self> {
        if !(1.0..2.0).contains(&p) {
            return Err(Error::InvalidPotential(format!(
                "exponent p = {p} outside [1, 2)"
            )));
        }
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidPotential("no segments".into()))?;
        if first.a != 0.0 {
            return Err(Error::InvalidPotential(format!(
                "first breakpoint is {} not 0",
                first.a
            )));
        }
        if segments.last().map(|s| s.b) != Some(1.0) {
            return Err(Error::InvalidPotential("last breakpoint is not 1".into()));
        }
        for (k, s) in segments.iter().enumerate() {
            if !(s.b > s.a) {
                return Err(Error::InvalidPotential(format!(
                    "segment {k} [{}, {}] is empty or reversed",
                    s.a, s.b
                )));
            }
            if k > 0 && segments[k - 1].b != s.a {
                return Err(Error::InvalidPotential(format!(
                    "segments {} and {k} do not share a breakpoint",
                    k - 1
                )));
            }
            if s.poly.degree() > MAX_SEGMENT_DEGREE {
                return Err(Error::InvalidPotential(format!(
                    "segment {k} has degree {} > {MAX_SEGMENT_DEGREE}",
                    s.poly.degree()
                )));
            }
            if !s.poly.is_finite() {
                return Err(Error::InvalidPotential(format!(
                    "segment {k} has non-finite coefficients"
                )));
            }
        }
        Ok(Self { segments, p })
    }

    pub fn zero(p: f64) -> Result<Self> {
        Self::new(vec![Segment::new(0.0, 1.0, Poly::zero())], p)
    }

    pub fn constant(c: Complex64, p: f64) -> Result<Self> {
        Self::new(vec![Segment::new(0.0, 1.0, Poly::constant(c))], p)
    }

    /// Single segment polynomial on `[0, 1]` (local and global variable coincide).
    pub fn polynomial(coeffs: Vec<Complex64>, p: f64) -> Result<Self> {
        Self::new(vec![Segment::new(0.0, 1.0, Poly::new(coeffs))], p)
    }

    /// Piecewise constant potential; `pieces` are `(a, b, value)` and the
    /// gaps between them are filled with zero.
    pub fn step(pieces: &[(f64, f64, Complex64)], p: f64) -> Result<Self> {
        let mut sorted: Vec<_> = pieces.to_vec();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut segments = Vec::new();
        let mut cursor = 0.0;
        for &(a, b, v) in &sorted {
            if a < cursor || b > 1.0 || b <= a {
                return Err(Error::InvalidPotential(format!(
                    "step piece [{a}, {b}] overlaps or leaves [0, 1]"
                )));
            }
            if a > cursor {
                segments.push(Segment::new(cursor, a, Poly::zero()));
            }
            segments.push(Segment::new(a, b, Poly::constant(v)));
            cursor = b;
        }
        if cursor < 1.0 {
            segments.push(Segment::new(cursor, 1.0, Poly::zero()));
        }
        Self::new(segments, p)
    }

    /// Piecewise cubic Hermite interpolant of `f` on a uniform mesh.
    pub fn hermite<F, DF>(f: F, df: DF, knots: usize, p: f64) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
        DF: Fn(f64) -> Complex64,
    {
        if knots == 0 {
            return Err(Error::InvalidPotential(
                "hermite interpolant needs at least one cell".into(),
            ));
        }
        let h = 1.0 / knots as f64;
        let segments = (0..knots)
            .map(|k| {
                let a = k as f64 * h;
                let b = if k + 1 == knots {
                    1.0
                } else {
                    (k + 1) as f64 * h
                };
                let hh = b - a;
                let (f0, f1, d0, d1) = (f(a), f(b), df(a), df(b));
                // Cubic in u = t - a matching values and slopes at both ends.
                let c2 = (3.0 * (f1 - f0) / hh - 2.0 * d0 - d1) / hh;
                let c3 = (d0 + d1 - 2.0 * (f1 - f0) / hh) / (hh * hh);
                Segment::new(a, b, Poly::new(vec![f0, d0, c2, c3]))
            })
            .collect();
        Self::new(segments, p)
    }

    /// Graded-mesh approximant of `scale * t^{-alpha}`.
    ///
    /// Knots are `t_k = (k/K)^{1/(1-alpha)}`. The first cell carries the
    /// constant with the same integral as the target; the others interpolate
    /// the target linearly.
    pub fn power_singularity(alpha: f64, scale: Complex64, knots: usize, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) || alpha * p >= 1.0 {
            return Err(Error::InvalidPotential(format!(
                "power singularity needs 0 <= alpha < 1 and alpha * p < 1 (alpha = {alpha}, p = {p})"
            )));
        }
        if knots < 2 {
            return Err(Error::InvalidPotential(
                "graded mesh needs at least two cells".into(),
            ));
        }
        let grade = 1.0 / (1.0 - alpha);
        let node = |k: usize| {
            if k == knots {
                1.0
            } else {
                (k as f64 / knots as f64).powf(grade)
            }
        };
        let target = |t: f64| t.powf(-alpha);
        let mut segments = Vec::with_capacity(knots);
        let t1 = node(1);
        segments.push(Segment::new(
            0.0,
            t1,
            Poly::constant(scale * (target(t1) / (1.0 - alpha))),
        ));
        for k in 1..knots {
            let (a, b) = (node(k), node(k + 1));
            let (fa, fb) = (target(a), target(b));
            segments.push(Segment::new(
                a,
                b,
                Poly::linear(scale * fa, scale * ((fb - fa) / (b - a))),
            ));
        }
        Self::new(segments, p)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(0.0).chain(self.segments.iter().map(|s| s.b))
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.poly.is_zero())
    }

    fn segment_index(&self, x: f64) -> usize {
        let idx = self.segments.partition_point(|s| s.b <= x);
        idx.min(self.segments.len() - 1)
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation; `x` is clamped into `[0, 1]`.
    #[inline]
    pub fn value(&self, x: f64) -> Complex64 {
        let s = &self.segments[self.segment_index(x)];
        s.poly.eval(x - s.a)
    }

    /// The pieces of the potential overlapping `[lo, hi]`, clipped to it.
    pub fn pieces(&self, lo: f64, hi: f64) -> Vec<Piece> {
        let mut out = Vec::new();
        if hi <= lo {
            return out;
        }
        let start = self.segments.partition_point(|s| s.b <= lo);
        for s in &self.segments[start.min(self.segments.len())..] {
            if s.a >= hi {
                break;
            }
            let a = s.a.max(lo);
            let b = s.b.min(hi);
            if b > a {
                out.push(Piece {
                    a,
                    b,
                    poly: s.poly_at(a),
                });
            }
        }
        out
    }

    /// `∫_lo^hi σ(t) e^{iωt} dt`, exact per segment.
    pub fn osc_integral(&self, lo: f64, hi: f64, omega: Complex64) -> Complex64 {
        if hi <= lo {
            return Complex64::new(0.0, 0.0);
        }
        let start = self.segments.partition_point(|s| s.b <= lo);
        let mut acc = Complex64::new(0.0, 0.0);
        for s in &self.segments[start.min(self.segments.len())..] {
            if s.a >= hi {
                break;
            }
            let a = s.a.max(lo);
            let b = s.b.min(hi);
            if b > a && !s.poly.is_zero() {
                let poly = if a == s.a {
                    s.poly.clone()
                } else {
                    s.poly_at(a)
                };
                acc += osc_segment_integral(&poly, a, b, omega);
            }
        }
        acc
    }

    pub fn integral(&self, lo: f64, hi: f64) -> Complex64 {
        self.osc_integral(lo, hi, Complex64::new(0.0, 0.0))
    }

    /// `(∫_0^1 |σ|^s)^{1/s}` by adaptive quadrature per segment.
    pub fn lp_norm(&self, s: f64) -> f64 {
        assert!(s >= 1.0, "lp_norm requires s >= 1");
        let total: f64 = self
            .segments
            .iter()
            .filter(|seg| !seg.poly.is_zero())
            .map(|seg| {
                let h = seg.b - seg.a;
                if seg.poly.degree() == 0 {
                    seg.poly.coeffs()[0].norm().powf(s) * h
                } else {
                    integrate_real(
                        |u| seg.poly.eval(u).norm().powf(s),
                        0.0,
                        h,
                        NORM_REL_TOL,
                        0.0,
                    )
                }
            })
            .sum();
        total.powf(1.0 / s)
    }

    /// `(∫_0^1 |σ - f|^s)^{1/s}` for a reference function `f`.
    pub fn lp_distance<F: Fn(f64) -> Complex64>(&self, f: F, s: f64) -> f64 {
        let total: f64 = self
            .segments
            .iter()
            .map(|seg| {
                integrate_real(
                    |t| (seg.poly.eval(t - seg.a) - f(t)).norm().powf(s),
                    seg.a,
                    seg.b,
                    NORM_REL_TOL,
                    1e-300,
                )
            })
            .sum();
        total.powf(1.0 / s)
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment::new(s.a, s.b, s.poly.scale(alpha)))
                .collect(),
            p: self.p,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment::new(s.a, s.b, s.poly.conj()))
                .collect(),
            p: self.p,
        }
    }

    /// Combines two potentials on the union of their breakpoints.
    pub fn zip_with<F: Fn(&Poly, &Poly) -> Poly>(&self, other: &Potential, f: F) -> Result<Self> {
        if self.p != other.p {
            return Err(Error::Config(format!(
                "potentials declare different exponents ({} vs {})",
                self.p, other.p
            )));
        }
        let mut knots: Vec<f64> = self.breakpoints().chain(other.breakpoints()).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let segments = knots
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let mid = 0.5 * (a + b);
                let pa = self.segments[self.segment_index(mid)].poly_at(a);
                let pb = other.segments[other.segment_index(mid)].poly_at(a);
                Segment::new(a, b, f(&pa, &pb))
            })
            .collect();
        Self::new(segments, self.p)
    }

    pub fn add(&self, other: &Potential) -> Result<Self> {
        self.zip_with(other, |x, y| x.add(y))
    }
}

/// Configuration-level description of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant {
        value: Complex64,
    },
    /// Piecewise constant; uncovered parts of `[0, 1]` are zero.
    Step {
        pieces: Vec<StepPiece>,
    },
    /// `Σ_k c_k e^{2πikt}`, compiled to a cubic Hermite interpolant.
    Trig {
        terms: Vec<TrigTerm>,
        #[serde(default = "default_trig_knots")]
        knots: usize,
    },
    /// `scale · t^{-alpha}` on a graded mesh.
    Power {
        alpha: f64,
        #[serde(default = "default_scale")]
        scale: Complex64,
        #[serde(default = "default_power_knots")]
        knots: usize,
    },
    /// Explicit segments; coefficients are in the local variable `t - a`.
    Segments {
        segments: Vec<SegmentSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPiece {
    pub a: f64,
    pub b: f64,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: i64,
    pub coeff: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub a: f64,
    pub b: f64,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

fn default_trig_knots() -> usize {
    512
}

fn default_power_knots() -> usize {
    256
}

fn default_scale() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl PotentialSpec {
    pub fn build(&self, p: f64) -> Result<Potential> {
        match self {
            PotentialSpec::Zero => Potential::zero(p),
            PotentialSpec::Constant { value } => Potential::constant(*value, p),
            PotentialSpec::Step { pieces } => {
                let raw: Vec<_> = pieces.iter().map(|s| (s.a, s.b, s.value)).collect();
                Potential::step(&raw, p)
            }
            PotentialSpec::Trig { terms, knots } => {
                let terms = terms.clone();
                let terms2 = terms.clone();
                Potential::hermite(
                    move |t| trig_value(&terms, t),
                    move |t| {
                        terms2
                            .iter()
                            .map(|tt| {
                                let w = 2.0 * PI * tt.k as f64;
                                tt.coeff * Complex64::new(0.0, w) * Complex64::new(0.0, w * t).exp()
                            })
                            .sum()
                    },
                    *knots,
                    p,
                )
            }
            PotentialSpec::Power {
                alpha,
                scale,
                knots,
            } => Potential::power_singularity(*alpha, *scale, *knots, p),
            PotentialSpec::Segments { segments } => {
                let segs = segments
                    .iter()
                    .map(|s| {
                        let n = s.re.len().max(s.im.len());
                        let coeffs = (0..n)
                            .map(|k| {
                                Complex64::new(
                                    s.re.get(k).copied().unwrap_or(0.0),
                                    s.im.get(k).copied().unwrap_or(0.0),
                                )
                            })
                            .collect();
                        Segment::new(s.a, s.b, Poly::new(coeffs))
                    })
                    .collect();
                Potential::new(segs, p)
            }
        }
    }

    /// The exact function the family approximates, where it is not
    /// represented exactly.
    pub fn target(&self, t: f64) -> Option<Complex64> {
        match self {
            PotentialSpec::Trig { terms, .. } => Some(trig_value(terms, t)),
            PotentialSpec::Power { alpha, scale, .. } => Some(*scale * t.powf(-alpha)),
            _ => None,
        }
    }
}

fn trig_value(terms: &[TrigTerm], t: f64) -> Complex64 {
    terms
        .iter()
        .map(|tt| tt.coeff * Complex64::new(0.0, 2.0 * PI * tt.k as f64 * t).exp())
        .sum()
}

/// Norm constants of a pair of potentials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormConstants {
    pub l1: [f64; 2],
    pub lp: [f64; 2],
    /// `max ‖σ_j‖_{L1}`
    pub a0: f64,
    /// `‖σ_1‖_{L1} ‖σ_2‖_{L1}`
    pub a: f64,
    /// `‖σ_1‖_{L1} + ‖σ_2‖_{L1}`
    pub a1: f64,
    /// `max ‖σ_j‖_{Lp}`
    pub a0_tilde: f64,
    /// `‖σ_1‖_{Lp} ‖σ_2‖_{Lp}`
    pub a_tilde: f64,
    /// `‖σ_1‖_{Lp} + ‖σ_2‖_{Lp}`
    pub a2: f64,
    /// `‖σ_0‖_{L1}` with `σ_0 = |σ_1| + |σ_2|`.
    pub sigma0_l1: f64,
    /// `‖σ_0‖_{Lp}`.
    pub sigma0_lp: f64,
}

/// The two potentials of the system together with their exponents and norm
/// constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialPair {
    pub sigma1: Potential,
    pub sigma2: Potential,
    p: f64,
    q: f64,
    r: f64,
    constants: NormConstants,
}

/// Conjugate exponent `q` with `1/p + 1/q = 1` (`∞` for `p = 1`).
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Exponent of Young's inequality for the convolution of two `L_p`
/// functions: `1/p + 1/p = 1 + 1/r`, so `r = p / (2 - p)` (`r = 1` at `p = 1`).
pub fn young_exponent(p: f64) -> f64 {
    p / (2.0 - p)
}

impl PotentialPair {
    pub fn new(sigma1: Potential, sigma2: Potential) -> Result<Self> {
        if sigma1.p != sigma2.p {
            return Err(Error::Config(format!(
                "potentials declare different exponents ({} vs {})",
                sigma1.p, sigma2.p
            )));
        }
        let p = sigma1.p;
        let mut pair = Self {
            sigma1,
            sigma2,
            p,
            q: conjugate_exponent(p),
            r: young_exponent(p),
            constants: NormConstants {
                l1: [0.0; 2],
                lp: [0.0; 2],
                a0: 0.0,
                a: 0.0,
                a1: 0.0,
                a0_tilde: 0.0,
                a_tilde: 0.0,
                a2: 0.0,
                sigma0_l1: 0.0,
                sigma0_lp: 0.0,
            },
        };
        pair.constants = pair.derive_constants();
        Ok(pair)
    }

    pub fn zero(p: f64) -> Result<Self> {
        Self::new(Potential::zero(p)?, Potential::zero(p)?)
    }

    pub fn from_specs(s1: &PotentialSpec, s2: &PotentialSpec, p: f64) -> Result<Self> {
        Self::new(s1.build(p)?, s2.build(p)?)
    }

    /// Pair for the system written as `B Z' + Q Z = μ Z` with
    /// `Q = [[q1, q2], [q2, -q1]]`: `σ_1 = q1 + i q2`, `σ_2 = q1 - i q2`.
    pub fn from_bq_form(q1: &Potential, q2: &Potential) -> Result<Self> {
        let i = Complex64::i();
        let s1 = q1.zip_with(q2, |a, b| a.add(&b.scale(i)))?;
        let s2 = q1.zip_with(q2, |a, b| a.add(&b.scale(-i)))?;
        Self::new(s1, s2)
    }

    /// Inverse of [`from_bq_form`](Self::from_bq_form).
    pub fn to_bq_form(&self) -> Result<(Potential, Potential)> {
        let half = Complex64::new(0.5, 0.0);
        let q1 = self
            .sigma1
            .zip_with(&self.sigma2, |a, b| a.add(b).scale(half))?;
        let q2 = self.sigma1.zip_with(&self.sigma2, |a, b| {
            a.add(&b.scale(Complex64::new(-1.0, 0.0)))
                .scale(Complex64::new(0.0, -0.5))
        })?;
        Ok((q1, q2))
    }

    /// Recomputes the norm constants from the potentials.
    pub fn derive_constants(&self) -> NormConstants {
        let l1 = [self.sigma1.lp_norm(1.0), self.sigma2.lp_norm(1.0)];
        let lp = [self.sigma1.lp_norm(self.p), self.sigma2.lp_norm(self.p)];
        NormConstants {
            l1,
            lp,
            a0: l1[0].max(l1[1]),
            a: l1[0] * l1[1],
            a1: l1[0] + l1[1],
            a0_tilde: lp[0].max(lp[1]),
            a_tilde: lp[0] * lp[1],
            a2: lp[0] + lp[1],
            sigma0_l1: self.sigma0_norm(1.0),
            sigma0_lp: self.sigma0_norm(self.p),
        }
    }

    pub fn constants(&self) -> &NormConstants {
        &self.constants
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn get(&self, which: usize) -> &Potential {
        match which {
            1 => &self.sigma1,
            2 => &self.sigma2,
            _ => panic!("potential index must be 1 or 2"),
        }
    }

    /// `σ_0(x) = |σ_1(x)| + |σ_2(x)|`.
    pub fn sigma0(&self, x: f64) -> f64 {
        self.sigma1.value(x).norm() + self.sigma2.value(x).norm()
    }

    /// Union of the breakpoints of both potentials.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .sigma1
            .breakpoints()
            .chain(self.sigma2.breakpoints())
            .collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    fn sigma0_norm(&self, s: f64) -> f64 {
        let knots = self.breakpoints();
        let total: f64 = knots
            .windows(2)
            .map(|w| integrate_real(|x| self.sigma0(x).powf(s), w[0], w[1], NORM_REL_TOL, 1e-300))
            .sum();
        total.powf(1.0 / s)
    }

    pub fn is_zero(&self) -> bool {
        self.sigma1.is_zero() && self.sigma2.is_zero()
    }
}
