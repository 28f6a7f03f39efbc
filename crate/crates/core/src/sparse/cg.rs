//! Jacobi-preconditioned conjugate gradients over an abstract operator.

use super::{dot, norm_inf, SparseMatrix};
use crate::error::LinalgError;

/// Symmetric positive definite operator `x ↦ M x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag()
    }
}

/// `qscale·AᵀA + Λᵀ diag(w) Λ + shift·I` applied without assembly.
pub struct NormalOperatorForm<'a> {
    pub a: &'a SparseMatrix,
    pub at: &'a SparseMatrix,
    pub lambda_op: &'a SparseMatrix,
    pub lambda_t: &'a SparseMatrix,
    pub w: &'a [f64],
    pub qscale: f64,
    pub shift: f64,
}

impl LinearOperator for NormalOperatorForm<'_> {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let ax = self.a.mul_vec(x);
        let atax = self.at.mul_vec(&ax);
        let mut lx = self.lambda_op.mul_vec(x);
        lx.iter_mut().zip(self.w).for_each(|(v, w)| *v *= w);
        let ltwlx = self.lambda_t.mul_vec(&lx);
        for i in 0..y.len() {
            y[i] = self.qscale * atax[i] + ltwlx[i] + self.shift * x[i];
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self
            .a
            .column_sq_norms()
            .into_iter()
            .map(|v| self.qscale * v + self.shift)
            .collect();
        for (i, j, v) in self.lambda_op.triplets() {
            d[j] += self.w[i] * v * v;
        }
        d
    }
}

/// Outcome of a converged CG run.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solve `M x = b` to `|M x − b|∞ ≤ tol` with a Jacobi preconditioner.
pub fn pcg(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome, LinalgError> {
    let n = op.dim();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "rhs has length {} for a {n}-dimensional operator",
            b.len()
        )));
    }
    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let mut res = norm_inf(&r);
    if res <= tol {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: res,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=max_iter {
        op.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(LinalgError::CgNotConverged {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        // Refresh the true residual periodically to stop drift.
        if it % 50 == 0 {
            op.apply(&x, &mut r);
            r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
        }
        res = norm_inf(&r);
        if res <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinalgError::CgNotConverged {
        iterations: max_iter,
        residual: res,
    })
}
