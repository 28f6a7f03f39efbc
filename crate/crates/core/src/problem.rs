//! The composite objective `q|Ax − b|² + Σ φ((Λx)ᵢ)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::penalty::{Penalty, PenaltyKind};
use crate::sparse::SparseMatrix;

/// Largest column count for which coercivity is checked by SVD at build time.
pub const COERCIVITY_CHECK_MAX_N: usize = 400;

/// Which assumption makes the objective bounded below and coercive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coercivity {
    /// `A` has full column rank.
    FullRankData,
    /// `Ker A ∩ Ker Λ = {0}` with a homogeneous penalty.
    JointKernel,
    /// Too large to check densely; trusted as built.
    Unchecked,
}

#[derive(Debug, Clone)]
pub struct CompositeProblem {
    a: SparseMatrix,
    at: SparseMatrix,
    b: Vec<f64>,
    lambda_op: SparseMatrix,
    lambda_t: SparseMatrix,
    penalty: Penalty,
    qscale: f64,
    rank_a: Option<usize>,
    rank_stacked: Option<usize>,
    coercivity: Coercivity,
}

impl CompositeProblem {
    pub fn new(a: SparseMatrix, b: Vec<f64>, lambda_op: SparseMatrix, penalty: Penalty, qscale: f64) -> Result<Self> {
        if a.cols() != lambda_op.cols() {
            return Err(Error::InvalidParameter(format!(
                "A has {} columns but Λ has {}",
                a.cols(),
                lambda_op.cols()
            )));
        }
        if b.len() != a.rows() {
            return Err(Error::InvalidParameter(format!(
                "b has length {} but A has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if !(qscale > 0.0) || !qscale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "qscale must be positive, got {qscale}"
            )));
        }
        if b.iter().any(|v| !v.is_finite()) || a.triplets().any(|(_, _, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter("A and b must be finite".into()));
        }
        let n = a.cols();
        let (rank_a, rank_stacked) = if n <= COERCIVITY_CHECK_MAX_N {
            let stacked = SparseMatrix::vstack(&[&a, &lambda_op])?;
            (Some(numerical_rank(&a)), Some(numerical_rank(&stacked)))
        } else {
            (None, None)
        };
        let at = a.transpose();
        let lambda_t = lambda_op.transpose();
        let mut p = Self {
            a,
            at,
            b,
            lambda_op,
            lambda_t,
            penalty,
            qscale,
            rank_a,
            rank_stacked,
            coercivity: Coercivity::Unchecked,
        };
        p.coercivity = p.check_coercivity()?;
        Ok(p)
    }

    fn check_coercivity(&self) -> Result<Coercivity> {
        let n = self.n();
        let (Some(ra), Some(rs)) = (self.rank_a, self.rank_stacked) else {
            return Ok(Coercivity::Unchecked);
        };
        if ra == n {
            return Ok(Coercivity::FullRankData);
        }
        match self.penalty.kind() {
            PenaltyKind::PowerLaw if self.penalty.lambda() > 0.0 && rs == n => Ok(Coercivity::JointKernel),
            PenaltyKind::PowerLaw => Err(Error::NotCoercive(format!(
                "rank(A) = {ra} and rank([A; Λ]) = {rs} with n = {n} (λ = {})",
                self.penalty.lambda()
            ))),
            kind => Err(Error::NotCoercive(format!(
                "{kind} is bounded, so A needs full column rank; rank(A) = {ra} < n = {n}"
            ))),
        }
    }

    /// Same operators with a different penalty.
    pub fn with_penalty(&self, penalty: Penalty) -> Result<Self> {
        let mut p = self.clone();
        p.penalty = penalty;
        p.coercivity = p.check_coercivity()?;
        Ok(p)
    }

    /// Same operators with a different data vector.
    pub fn with_b(&self, b: Vec<f64>) -> Result<Self> {
        if b.len() != self.m() {
            return Err(Error::InvalidParameter(format!(
                "b has length {} but A has {} rows",
                b.len(),
                self.m()
            )));
        }
        let mut p = self.clone();
        p.b = b;
        Ok(p)
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn a_t(&self) -> &SparseMatrix {
        &self.at
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn lambda_op(&self) -> &SparseMatrix {
        &self.lambda_op
    }

    pub fn lambda_t(&self) -> &SparseMatrix {
        &self.lambda_t
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn qscale(&self) -> f64 {
        self.qscale
    }

    pub fn coercivity(&self) -> Coercivity {
        self.coercivity
    }

    /// Numerical rank of `A`, when it was computed.
    pub fn rank_a(&self) -> Option<usize> {
        self.rank_a
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn r(&self) -> usize {
        self.lambda_op.rows()
    }
}

/// Rank from singular values with the usual `max(m, n)·ε·σ₁` cutoff.
pub fn numerical_rank(m: &SparseMatrix) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let d = DMatrix::from_row_slice(m.rows(), m.cols(), &m.to_dense());
    let sv = d.singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    let cutoff = m.rows().max(m.cols()) as f64 * f64::EPSILON * smax;
    sv.iter().filter(|&&s| s > cutoff).count()
}
