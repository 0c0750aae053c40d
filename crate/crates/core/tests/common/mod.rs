#![allow(dead_code)]

use dirac_core::potential::{StepPiece, TrigTerm};
use dirac_core::{Complex64, PotentialPair, PotentialSpec};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zero_pair() -> PotentialPair {
    PotentialPair::zero(1.5).unwrap()
}

pub fn constant_pair(v: f64) -> PotentialPair {
    let s = PotentialSpec::Constant { value: c(v, 0.0) };
    PotentialPair::from_specs(&s, &s, 1.5).unwrap()
}

/// `σ1 = e^{2πit} + 0.3`, `σ2 = 0.5 e^{-4πit}`.
pub fn trig_pair() -> PotentialPair {
    let s1 = PotentialSpec::Trig {
        terms: vec![
            TrigTerm {
                k: 1,
                coeff: c(1.0, 0.0),
            },
            TrigTerm {
                k: 0,
                coeff: c(0.3, 0.0),
            },
        ],
        knots: 512,
    };
    let s2 = PotentialSpec::Trig {
        terms: vec![TrigTerm {
            k: -2,
            coeff: c(0.5, 0.0),
        }],
        knots: 512,
    };
    PotentialPair::from_specs(&s1, &s2, 1.5).unwrap()
}

/// `σ1 = 1` on `[0, ½]`, `σ2 = 0.7` on `[¼, 1]`, `p = 1`.
pub fn step_pair() -> PotentialPair {
    let s1 = PotentialSpec::Step {
        pieces: vec![StepPiece {
            a: 0.0,
            b: 0.5,
            value: c(1.0, 0.0),
        }],
    };
    let s2 = PotentialSpec::Step {
        pieces: vec![StepPiece {
            a: 0.25,
            b: 1.0,
            value: c(0.7, 0.0),
        }],
    };
    PotentialPair::from_specs(&s1, &s2, 1.0).unwrap()
}

/// Both potentials the graded approximant of `t^{-0.4}` with 256 cells, `p = 1.5`.
pub fn singular_pair() -> PotentialPair {
    let s = PotentialSpec::Power {
        alpha: 0.4,
        scale: c(1.0, 0.0),
        knots: 256,
    };
    PotentialPair::from_specs(&s, &s, 1.5).unwrap()
}

pub fn all_pairs() -> Vec<(&'static str, PotentialPair)> {
    vec![
        ("zero", zero_pair()),
        ("constant", constant_pair(0.5)),
        ("trig", trig_pair()),
        ("step", step_pair()),
        ("singular", singular_pair()),
    ]
}
