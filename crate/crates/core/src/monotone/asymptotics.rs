//! Limits of the power-law problem as `λ → 0` and as `τ → 0`.
//!
//! For full-rank `A` the minimizers `x_λ` approach the minimum-penalty point
//! of `{x : Ax = b̃}`, where `b̃` is the projection of `b` onto the range of
//! `A`. As `τ → 0` the quasi-norm `Σ|yᵢ|^τ` of `y = Λx_τ` approaches the
//! support size of the limit.

use serde::{Deserialize, Serialize};

use super::{least_squares_start, ContinuationSchedule, MonotoneSolver};
use crate::error::{Error, Result};
use crate::penalty::PenaltyKind;
use crate::problem::{numerical_rank, CompositeProblem};
use crate::sparse::LinearSolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSweepRow {
    pub lambda: f64,
    /// `|Ax_λ − b̃|₂`.
    pub fidelity: f64,
    /// `Σ |(Λx_λ)ᵢ|^τ`.
    pub quasi_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauSweepRow {
    pub tau: f64,
    pub quasi_norm: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSweep {
    /// Entries of `Λx` with magnitude at or below this count as zero, both
    /// in the support and in the quasi-norm.
    pub threshold: f64,
    pub rows: Vec<TauSweepRow>,
}

fn require_full_rank(p: &CompositeProblem) -> Result<()> {
    let rank = p.rank_a().unwrap_or_else(|| numerical_rank(p.a()));
    if rank < p.n() {
        return Err(Error::InvalidParameter(format!(
            "asymptotic sweeps need rank(A) = n, got rank {rank} with n = {}",
            p.n()
        )));
    }
    Ok(())
}

fn require_decreasing(name: &str, v: &[f64], lo: f64, hi: f64) -> Result<()> {
    let in_range = v.iter().all(|&x| x > lo && x <= hi);
    let decreasing = v.windows(2).all(|w| w[1] < w[0]);
    if v.is_empty() || !in_range || !decreasing {
        return Err(Error::InvalidParameter(format!(
            "{name} must be a nonempty strictly decreasing sequence in ({lo}, {hi}]"
        )));
    }
    Ok(())
}

/// `b̃ = A x_LS`, the part of `b` that `A` can reach.
pub fn projected_data(p: &CompositeProblem) -> Result<Vec<f64>> {
    Ok(p.a().mul_vec(&least_squares_start(p)?))
}

fn solve_from_ls(p: &CompositeProblem, sched: &ContinuationSchedule, opts: &LinearSolveOptions) -> Result<Vec<f64>> {
    let solver = MonotoneSolver::new(p, opts)?;
    let x0 = least_squares_start(p)?;
    Ok(solver.solve(p, &x0, sched)?.x)
}

pub fn asymptotic_lambda_sweep(
    p: &CompositeProblem,
    lambdas: &[f64],
    sched: &ContinuationSchedule,
    opts: &LinearSolveOptions,
) -> Result<Vec<LambdaSweepRow>> {
    if p.penalty().kind() != PenaltyKind::PowerLaw {
        return Err(Error::Unsupported(
            "the λ sweep is defined for the power-law penalty".into(),
        ));
    }
    require_full_rank(p)?;
    require_decreasing("lambdas", lambdas, 0.0, f64::INFINITY)?;
    let target = projected_data(p)?;
    let tau = p.penalty().tau();
    lambdas
        .iter()
        .map(|&lambda| {
            let q = p.with_penalty(p.penalty().with_lambda(lambda)?)?;
            let x = solve_from_ls(&q, sched, opts)?;
            let ax = q.a().mul_vec(&x);
            let fidelity = ax
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let quasi_norm = q.lambda_op().mul_vec(&x).iter().map(|y| y.abs().powf(tau)).sum();
            Ok(LambdaSweepRow {
                lambda,
                fidelity,
                quasi_norm,
            })
        })
        .collect()
}

/// Sweep `τ` at the problem's `λ`, counting `|yᵢ| > threshold` as support.
pub fn asymptotic_tau_sweep(
    p: &CompositeProblem,
    taus: &[f64],
    threshold: f64,
    sched: &ContinuationSchedule,
    opts: &LinearSolveOptions,
) -> Result<TauSweep> {
    require_full_rank(p)?;
    require_decreasing("taus", taus, 0.0, 1.0)?;
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "support threshold must be nonnegative, got {threshold}"
        )));
    }
    let rows = taus
        .iter()
        .map(|&tau| {
            let q = p.with_penalty(p.penalty().with_tau(tau)?)?;
            let x = solve_from_ls(&q, sched, opts)?;
            let y = q.lambda_op().mul_vec(&x);
            let kept: Vec<f64> = y.iter().map(|v| v.abs()).filter(|&v| v > threshold).collect();
            Ok(TauSweepRow {
                tau,
                quasi_norm: kept.iter().map(|v| v.powf(tau)).sum(),
                support: kept.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TauSweep { threshold, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::Penalty;
    use crate::sparse::SparseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(seed: u64, n: usize, lambda: f64, tau: f64) -> CompositeProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for i in 0..n {
            a[i * n + i] += 3.0;
        }
        let b = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        CompositeProblem::new(
            SparseMatrix::from_dense(n, n, &a),
            b,
            SparseMatrix::identity(n),
            Penalty::power_law(lambda, tau).unwrap(),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn range_data_is_unchanged() {
        let p = square(1, 6, 0.1, 0.5);
        let bt = projected_data(&p).unwrap();
        for (a, b) in bt.iter().zip(p.b()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_drops_the_kernel_part() {
        // Range(A) is the first two axes; the third component of b is unreachable.
        let a = SparseMatrix::from_dense(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let p = CompositeProblem::new(
            a,
            vec![1.0, 2.0, 5.0],
            SparseMatrix::identity(2),
            Penalty::power_law(0.1, 0.5).unwrap(),
            0.5,
        )
        .unwrap();
        let bt = projected_data(&p).unwrap();
        assert!((bt[0] - 1.0).abs() < 1e-14 && (bt[1] - 2.0).abs() < 1e-14 && bt[2].abs() < 1e-14);
    }

    #[test]
    fn fidelity_shrinks_with_lambda() {
        let p = square(2, 10, 1.0, 0.5);
        let lambdas: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
        let rows = asymptotic_lambda_sweep(
            &p,
            &lambdas,
            &ContinuationSchedule::default(),
            &LinearSolveOptions::default(),
        )
        .unwrap();
        for w in rows.windows(2) {
            assert!(w[1].fidelity <= 1.05 * w[0].fidelity, "{rows:?}");
        }
        assert!(rows.last().unwrap().fidelity <= 1e-3);
    }

    #[test]
    fn zero_vector_has_zero_quasi_norm() {
        let mut p = square(3, 4, 0.1, 0.5);
        p = p.with_b(vec![0.0; 4]).unwrap();
        let s = asymptotic_tau_sweep(
            &p,
            &[0.5, 0.1],
            1e-8,
            &ContinuationSchedule::default(),
            &LinearSolveOptions::default(),
        )
        .unwrap();
        assert!(s.rows.iter().all(|r| r.quasi_norm == 0.0 && r.support == 0));
    }

    #[test]
    fn small_entry_power_tends_to_one() {
        let v: Vec<f64> = [1.0, 0.1, 0.01].iter().map(|t| 0.5f64.powf(*t)).collect();
        assert!(v[0] < v[1] && v[1] < v[2] && (1.0 - v[2]) < 0.01);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = square(4, 3, 0.1, 0.5);
        let (s, o) = (ContinuationSchedule::default(), LinearSolveOptions::default());
        assert!(asymptotic_lambda_sweep(&p, &[0.1, 0.2], &s, &o).is_err());
        assert!(asymptotic_tau_sweep(&p, &[1.5], 1e-8, &s, &o).is_err());
        let wide = CompositeProblem::new(
            SparseMatrix::from_dense(1, 2, &[1.0, 1.0]),
            vec![1.0],
            SparseMatrix::identity(2),
            Penalty::power_law(0.1, 0.5).unwrap(),
            0.5,
        )
        .unwrap();
        assert!(asymptotic_lambda_sweep(&wide, &[0.1], &s, &o).is_err());
        let scad = p.with_penalty(Penalty::scad(0.1, 3.7).unwrap()).unwrap();
        assert!(asymptotic_lambda_sweep(&scad, &[0.1], &s, &o).is_err());
    }
}
