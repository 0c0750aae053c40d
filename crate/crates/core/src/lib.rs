//! Solutions and spectra of the one-dimensional Dirac system
//! `D' + J(x) D = iμ J_0 D` on `[0, 1]` with integrable potentials.
//!
//! The fundamental matrix is built two ways: by direct integration of the
//! ODE and through the transformation-kernel representation
//! `D = e^{xA} + ∫_0^x e^{(x-2t)A} [Q(x,t) - J(t)] dt`. On top of that sit the
//! remainder functionals, the characteristic function of the problem with
//! `y1(0) = y2(0)`, `y1(1) = y2(1)`, eigenvalue localisation and the
//! asymptotic eigenvalue and eigenfunction formulas.

pub mod error;
pub mod kernel;
pub mod numerics;
pub mod ode;
pub mod poly;
pub mod potential;
pub mod remainders;
pub mod solver;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use potential::{Potential, PotentialPair, PotentialSpec};
