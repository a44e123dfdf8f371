//! Numerical verification of the quantitative estimates: sublevel-set
//! asymptotics, dyadic-rectangle integrability, Fourier decay of kernel
//! pieces, uniform multiplier and Marcinkiewicz-type symbol bounds, and an
//! L² operator harness.
//!
//! Estimator split: Monte Carlo for measures (binomial error bars),
//! panel quadrature for oscillatory integrals. Every randomized entry point
//! takes an explicit seed and reports it back so a run can be replayed.

pub mod fourier;
pub mod operator;
pub mod rects;
pub mod sublevel;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("only {have} usable measurements, need at least {need}")]
    NotEnoughPoints { have: usize, need: usize },
    #[error("grid step {step:.3e} too coarse for truncation level {level}, need <= {required:.3e}")]
    ResolutionTooCoarse { step: f64, required: f64, level: i32 },
    #[error("dimension {nvars} not supported here (have 1..={max})")]
    UnsupportedDimension { nvars: usize, max: usize },
    #[error("truncated-symbol evaluation in two variables needs a monomial polynomial")]
    SymbolNeedsSeparable,
}

/// One named check with enough context to replay it: which estimator
/// produced the number and at what sample budget.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub estimator: String,
    pub budget: u64,
    pub seed: u64,
    pub measured: f64,
    pub target: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}
