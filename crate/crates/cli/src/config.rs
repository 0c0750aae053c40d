//! Run configuration: one JSON document, every field defaulted.

use std::path::PathBuf;

use dirac_core::potential::PotentialSpec;
use dirac_core::{Complex64, PotentialPair};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub sigma1: PotentialSpec,
    pub sigma2: PotentialSpec,
    pub p: f64,
    /// Half-width of the stripe `|Im μ| ≤ d`.
    pub d: f64,
    pub m_kernel: usize,
    pub m_ode: usize,
    /// Inclusive eigenvalue index range.
    pub n_range: [i64; 2],
    pub tail_tol: f64,
    pub root_tol: f64,
    pub out_dir: PathBuf,
    pub solve: SolveOptions,
    pub eigfun: EigfunOptions,
    pub remainders: RemainderOptions,
    pub verify: VerifyOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sigma1: PotentialSpec::Zero,
            sigma2: PotentialSpec::Zero,
            p: 1.5,
            d: 2.0,
            m_kernel: 512,
            m_ode: 512,
            n_range: [1, 16],
            tail_tol: 1e-10,
            root_tol: 1e-10,
            out_dir: PathBuf::from("out"),
            solve: SolveOptions::default(),
            eigfun: EigfunOptions::default(),
            remainders: RemainderOptions::default(),
            verify: VerifyOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    pub mu: Vec<Complex64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mu: vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(10.3, 0.0),
                Complex64::new(50.0, 0.5),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigfunOptions {
    pub n: Vec<i64>,
    /// Output grid size; must divide `m_kernel`.
    pub m: usize,
}

impl Default for EigfunOptions {
    fn default() -> Self {
        Self {
            n: vec![1, 2, 4, 8],
            m: 128,
        }
    }
}

/// `μ_k = re_min + (re_max - re_min) k/(points - 1) + i·im_amplitude·sin(2.7 k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub re_min: f64,
    pub re_max: f64,
    pub points: usize,
    pub im_amplitude: f64,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            re_min: -150.0,
            re_max: 150.0,
            points: 64,
            im_amplitude: 1.9,
        }
    }
}

impl Sweep {
    pub fn values(&self) -> Vec<Complex64> {
        let span = self.re_max - self.re_min;
        let last = (self.points.max(2) - 1) as f64;
        (0..self.points)
            .map(|k| {
                Complex64::new(
                    self.re_min + span * k as f64 / last,
                    self.im_amplitude * (2.7 * k as f64).sin(),
                )
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemainderOptions {
    pub sweep: Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyOptions {
    pub sweep: Sweep,
    /// Largest accepted sup distance between the direct and kernel solutions.
    pub method_tol: f64,
    /// Largest accepted discrepancy of the exact product identity.
    pub identity_tol: f64,
    /// Smallest accepted convergence order of the grid identity.
    pub min_order: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            sweep: Sweep::default(),
            method_tol: 1e-6,
            identity_tol: 1e-8,
            min_order: 1.8,
        }
    }
}

/// A configuration problem, tagged with the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config field `{}`: {}", self.path, self.message)
    }
}

fn bad(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            bad(
                if path.is_empty() { "." } else { &path },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.p >= 1.0 && self.p < 2.0) {
            return Err(bad("p", format!("need 1 <= p < 2, got {}", self.p)));
        }
        if !(self.d > 0.0) {
            return Err(bad("d", "must be positive"));
        }
        if self.m_kernel < 8 {
            return Err(bad("m_kernel", "must be at least 8"));
        }
        if self.m_ode == 0 || !self.m_kernel.is_multiple_of(self.m_ode) {
            return Err(bad("m_ode", "must be a positive divisor of m_kernel"));
        }
        if self.n_range[0] > self.n_range[1] {
            return Err(bad("n_range", "empty range"));
        }
        for (name, v) in [
            ("tail_tol", self.tail_tol),
            ("root_tol", self.root_tol),
            ("verify.method_tol", self.verify.method_tol),
            ("verify.identity_tol", self.verify.identity_tol),
        ] {
            if !(v > 0.0) {
                return Err(bad(name, "must be positive"));
            }
        }
        if self.eigfun.m == 0 || !self.m_kernel.is_multiple_of(self.eigfun.m) {
            return Err(bad("eigfun.m", "must be a positive divisor of m_kernel"));
        }
        for (name, s) in [
            ("remainders.sweep", &self.remainders.sweep),
            ("verify.sweep", &self.verify.sweep),
        ] {
            if s.points < 2 || !(s.re_max > s.re_min) {
                return Err(bad(name, "need at least two points and re_max > re_min"));
            }
            if s.im_amplitude.abs() > self.d {
                return Err(bad(name, "im_amplitude must not exceed d"));
            }
        }
        self.pair()?;
        Ok(())
    }

    pub fn pair(&self) -> Result<PotentialPair, ConfigError> {
        let s1 = self
            .sigma1
            .build(self.p)
            .map_err(|e| bad("sigma1", e.to_string()))?;
        let s2 = self
            .sigma2
            .build(self.p)
            .map_err(|e| bad("sigma2", e.to_string()))?;
        PotentialPair::new(s1, s2).map_err(|e| bad("sigma1/sigma2", e.to_string()))
    }
}
