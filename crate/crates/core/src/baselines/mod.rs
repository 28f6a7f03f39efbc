//! Proximal-gradient baselines for `Λ = I`: GIST for the nonconvex penalties
//! and FISTA for `ℓ¹`.

mod fista;
mod gist;

pub use fista::{fista_solve, lipschitz_estimate, FistaConfig};
pub use gist::{gist_solve, GistConfig};

use crate::error::{Error, Result};
use crate::problem::CompositeProblem;

fn require_identity(p: &CompositeProblem, name: &str) -> Result<()> {
    if p.lambda_op().is_identity() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{name} needs Λ = I")))
    }
}

fn check_start(p: &CompositeProblem, x0: &[f64]) -> Result<()> {
    if x0.len() == p.n() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "initial guess has length {} but the problem has {} unknowns",
            x0.len(),
            p.n()
        )))
    }
}

/// `f(x) = q|Ax − b|²` and its gradient `2qAᵀ(Ax − b)`.
fn smooth_part(p: &CompositeProblem, x: &[f64]) -> (f64, Vec<f64>) {
    let r: Vec<f64> = p.a().mul_vec(x).iter().zip(p.b()).map(|(a, b)| a - b).collect();
    let f = p.qscale() * r.iter().map(|v| v * v).sum::<f64>();
    let g = p.a_t().mul_vec(&r).into_iter().map(|v| 2.0 * p.qscale() * v).collect();
    (f, g)
}

fn penalty_sum(p: &CompositeProblem, x: &[f64]) -> f64 {
    x.iter().map(|&v| p.penalty().phi(v)).sum()
}
