//! Sparse elliptic problem on the unit square: `½|Ax − b|² + λ|x|_τ^τ` where
//! `AᵀA` is the 5-point Dirichlet Laplacian and `Aᵀb = f`.

use crate::error::{Error, Result};
use crate::penalty::Penalty;
use crate::problem::CompositeProblem;
use crate::sparse::{kronecker, solve_spd, LinearSolveOptions, SparseMatrix};

/// `(n+1) D̃` with `D̃` the `(n+1)×n` forward difference padded by the
/// boundary rows `e₀` and `−eₙ`.
pub fn padded_difference(n: usize) -> Result<SparseMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("M-matrix grid needs n >= 2, got {n}")));
    }
    let h = (n + 1) as f64;
    let mut t = vec![(0, 0, h), (n, n - 1, -h)];
    for i in 1..n {
        t.push((i, i - 1, -h));
        t.push((i, i, h));
    }
    Ok(SparseMatrix::from_triplets(n + 1, n, t)?)
}

/// `[I ⊗ D; D ⊗ I]` for unknowns ordered `x[i₁·n + i₂]`.
pub fn gradient(n: usize) -> Result<SparseMatrix> {
    let d = padded_difference(n)?;
    let i = SparseMatrix::identity(n);
    Ok(SparseMatrix::vstack(&[&kronecker(&i, &d)?, &kronecker(&d, &i)?])?)
}

/// `10 x₁ sin(5x₂) cos(7x₁)` at the interior nodes `(i₁, i₂)/(n+1)`.
pub fn forcing(n: usize) -> Vec<f64> {
    let h = 1.0 / (n + 1) as f64;
    (0..n * n)
        .map(|idx| {
            let x1 = (idx / n + 1) as f64 * h;
            let x2 = (idx % n + 1) as f64 * h;
            10.0 * x1 * (5.0 * x2).sin() * (7.0 * x1).cos()
        })
        .collect()
}

pub fn build_mmatrix(n: usize, lambda: f64, tau: f64) -> Result<CompositeProblem> {
    let a = gradient(n)?;
    let f = forcing(n);
    let ata = a.transpose().matmul(&a)?;
    let z = solve_spd(&ata, &f, &LinearSolveOptions::direct())?;
    let b = a.mul_vec(&z);
    CompositeProblem::new(
        a,
        b,
        SparseMatrix::identity(n * n),
        Penalty::power_law(lambda, tau)?,
        0.5,
    )
}
