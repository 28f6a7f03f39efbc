use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cg::pcg;
use super::{EnvelopeCholesky, SparseMatrix};
use crate::error::LinalgError;

/// Systems with at least this many unknowns go to CG under [`SolveMethod::Auto`].
pub const DIRECT_MAX_UNKNOWNS: usize = 200_000;
/// Factor envelopes above this many entries go to CG under [`SolveMethod::Auto`].
pub const DIRECT_MAX_ENVELOPE: usize = 40_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Direct below the size thresholds, CG above.
    Auto,
    DirectCholesky,
    ConjugateGradient,
    /// Factor the data term once and fold the reweighted rows in through a
    /// small dense capacitance system. Only meaningful for the reweighted
    /// normal equations; [`solve_spd`] rejects it.
    LowRankUpdate,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Auto => "auto",
            SolveMethod::DirectCholesky => "direct-cholesky",
            SolveMethod::ConjugateGradient => "conjugate-gradient",
            SolveMethod::LowRankUpdate => "low-rank-update",
        })
    }
}

impl FromStr for SolveMethod {
    type Err = LinalgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(SolveMethod::Auto),
            "direct-cholesky" | "direct" | "cholesky" => Ok(SolveMethod::DirectCholesky),
            "conjugate-gradient" | "cg" => Ok(SolveMethod::ConjugateGradient),
            "low-rank-update" | "lowrank" | "woodbury" => Ok(SolveMethod::LowRankUpdate),
            other => Err(LinalgError::InvalidOption(format!("unknown linear solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSolveOptions {
    pub method: SolveMethod,
    /// Absolute ℓ∞ residual target for CG.
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
    /// Added to the diagonal before solving.
    pub shift: f64,
}

impl Default for LinearSolveOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Auto,
            cg_tolerance: 1e-11,
            cg_max_iterations: 20_000,
            shift: 0.0,
        }
    }
}

impl LinearSolveOptions {
    pub fn direct() -> Self {
        Self {
            method: SolveMethod::DirectCholesky,
            ..Self::default()
        }
    }

    pub fn cg(tolerance: f64) -> Self {
        Self {
            method: SolveMethod::ConjugateGradient,
            cg_tolerance: tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        if !(self.cg_tolerance > 0.0) || !self.cg_tolerance.is_finite() {
            return Err(LinalgError::InvalidOption(format!(
                "CG tolerance must be positive, got {}",
                self.cg_tolerance
            )));
        }
        if !(self.shift >= 0.0) || !self.shift.is_finite() {
            return Err(LinalgError::InvalidOption(format!(
                "diagonal shift must be nonnegative, got {}",
                self.shift
            )));
        }
        if self.cg_max_iterations == 0 {
            return Err(LinalgError::InvalidOption("CG needs at least one iteration".into()));
        }
        Ok(())
    }
}

/// Solve `(M + shift·I) x = rhs` for symmetric positive definite `M`.
pub fn solve_spd(m: &SparseMatrix, rhs: &[f64], opts: &LinearSolveOptions) -> Result<Vec<f64>, LinalgError> {
    opts.validate()?;
    if m.rows() != m.cols() || rhs.len() != m.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} system with rhs of length {}",
            m.rows(),
            m.cols(),
            rhs.len()
        )));
    }
    let direct = match opts.method {
        SolveMethod::DirectCholesky => true,
        SolveMethod::ConjugateGradient => false,
        SolveMethod::Auto => {
            m.rows() < DIRECT_MAX_UNKNOWNS && EnvelopeCholesky::predicted_envelope(m) <= DIRECT_MAX_ENVELOPE
        }
        SolveMethod::LowRankUpdate => {
            return Err(LinalgError::InvalidOption(
                "low-rank-update needs the factored data term; use it through the monotone solver".into(),
            ))
        }
    };
    if direct {
        Ok(EnvelopeCholesky::factor(m, opts.shift)?.solve(rhs))
    } else if opts.shift > 0.0 {
        let shifted = m.add_scaled(1.0, &SparseMatrix::identity(m.rows()), opts.shift)?;
        Ok(pcg(&shifted, rhs, None, opts.cg_tolerance, opts.cg_max_iterations)?.x)
    } else {
        Ok(pcg(m, rhs, None, opts.cg_tolerance, opts.cg_max_iterations)?.x)
    }
}
