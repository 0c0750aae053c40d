mod common;

use std::f64::consts::PI;

use common::*;
use dirac_core::kernel::{neumann_solve, KernelField, TriangleGrid};
use dirac_core::ode::OdeOptions;
use dirac_core::potential::StepPiece;
use dirac_core::spectrum::{
    cell_zero_count, char_fn_direct, constant_char_fn, locate_eigenvalues, KernelCharFn,
    LocateOptions,
};
use dirac_core::{PotentialPair, PotentialSpec};
use proptest::prelude::*;

fn kernel(pair: &PotentialPair, m: usize) -> KernelField {
    neumann_solve(pair, TriangleGrid::new(m).unwrap(), 1e-12)
        .unwrap()
        .0
}

fn real_step_pair(a: f64, b: f64, v1: f64, v2: f64) -> PotentialPair {
    let s1 = PotentialSpec::Step {
        pieces: vec![StepPiece {
            a: 0.0,
            b: a,
            value: c(v1, 0.0),
        }],
    };
    let s2 = PotentialSpec::Step {
        pieces: vec![StepPiece {
            a: b,
            b: 1.0,
            value: c(v2, 0.0),
        }],
    };
    PotentialPair::from_specs(&s1, &s2, 1.0).unwrap()
}

#[test]
fn constant_pair_eigenvalues_match_closed_form() {
    // sin ω = 0 with ω² = μ² - c² gives μ_n = sign(n)·√(π²n² + c²).
    let v = 0.8;
    let pair = constant_pair(v);
    let q = kernel(&pair, 256);
    let recs = locate_eigenvalues(&pair, &q, -6..=6, &LocateOptions::default()).unwrap();
    for r in recs.iter().filter(|r| r.n != 0) {
        let n = r.n as f64;
        let exact = n.signum() * (PI * PI * n * n + v * v).sqrt();
        assert!(
            (r.mu - c(exact, 0.0)).norm() < 1e-9,
            "n={} mu={}",
            r.n,
            r.mu
        );
    }
}

#[test]
fn every_cell_holds_one_zero() {
    let pair = step_pair();
    let q = kernel(&pair, 256);
    let kphi = KernelCharFn::new(&pair, &q);
    for n in -8..=8 {
        assert_eq!(cell_zero_count(&kphi, n, 2.0).unwrap(), 1, "n={n}");
    }
}

#[test]
fn real_potentials_give_symmetric_spectrum() {
    let pair = real_step_pair(0.6, 0.3, 1.1, -0.4);
    let q = kernel(&pair, 256);
    let recs = locate_eigenvalues(&pair, &q, -5..=5, &LocateOptions::default()).unwrap();
    for r in &recs {
        let mirror = recs.iter().find(|s| s.n == -r.n).unwrap();
        assert!((mirror.mu + r.mu.conj()).norm() < 1e-8, "n={}", r.n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Conjugating the system maps D(μ) to conj D(-conj μ) when J is real.
    #[test]
    fn conjugation_symmetry(a in 0.1f64..0.9, b in 0.1f64..0.9, v1 in -2.0f64..2.0,
                            v2 in -2.0f64..2.0, re in -30.0f64..30.0, im in -2.0f64..2.0) {
        let pair = real_step_pair(a, b, v1, v2);
        let opts = OdeOptions::default();
        let mu = c(re, im);
        let lhs = char_fn_direct(&pair, -mu.conj(), &opts).unwrap();
        let rhs = char_fn_direct(&pair, mu, &opts).unwrap().conj();
        prop_assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()));
    }

    #[test]
    fn direct_matches_closed_form(v in -3.0f64..3.0, vi in -1.0f64..1.0,
                                  re in -40.0f64..40.0, im in -2.0f64..2.0) {
        let s = PotentialSpec::Constant { value: c(v, vi) };
        let pair = PotentialPair::from_specs(&s, &s, 1.5).unwrap();
        let mu = c(re, im);
        let got = char_fn_direct(&pair, mu, &OdeOptions::default()).unwrap();
        let want = constant_char_fn(c(v, vi), mu);
        prop_assert!((got - want).norm() <= 1e-8 * (1.0 + want.norm()), "{got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn kernel_and_direct_agree(ka in 1u32..16, kb in 1u32..16, v1 in -2.0f64..2.0,
                               v2 in -2.0f64..2.0, re in -30.0f64..30.0, im in -2.0f64..2.0) {
        let pair = real_step_pair(ka as f64 / 16.0, kb as f64 / 16.0, v1, v2);
        let q = kernel(&pair, 128);
        let mu = c(re, im);
        let k = KernelCharFn::new(&pair, &q).eval(mu);
        let d = char_fn_direct(&pair, mu, &OdeOptions::default()).unwrap();
        // Jumps make the kernel second order only: h² ≈ 6e-5.
        prop_assert!((k - d).norm() <= 1e-4 * (1.0 + d.norm()), "{k} vs {d}");
    }
}
