//! Cohesive fracture of a bar `[0, 1]` with a potential crack at `x = 0.5`.
//!
//! Unknowns are `u₀ … u₂N`; entries `N−1` and `N` are the two lips. The energy
//! is `N|Au − b|² + θ(u_N − u_{N−1})` with `A = R[D̄; γ eₗₐₛₜ]`, where `D̄` is
//! the backward difference without the row that would difference across the
//! crack, and the last row tethers the right end to the load `t`.

use crate::error::{Error, Result};
use crate::penalty::{Penalty, PenaltyKind};
use crate::problem::CompositeProblem;
use crate::sparse::{backward_difference, SparseMatrix};

use super::quasistatic::QuasiStaticModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Fracture1DModel {
    /// Half the number of intervals.
    pub n: usize,
    pub lambda: f64,
    pub tau: f64,
    pub kind: PenaltyKind,
    pub gamma: f64,
    /// Row weights `aᵢ` of `R`; empty means homogeneous.
    pub material: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for Fracture1DModel {
    fn default() -> Self {
        Self {
            n: 100,
            lambda: 1.0,
            tau: 0.01,
            kind: PenaltyKind::PowerLaw,
            gamma: 50.0,
            material: Vec::new(),
            t_end: 3.0,
            dt: 0.01,
        }
    }
}

impl Fracture1DModel {
    pub fn with_penalty(mut self, kind: PenaltyKind, lambda: f64, tau: f64) -> Self {
        self.kind = kind;
        self.lambda = lambda;
        self.tau = tau;
        self
    }

    pub fn unknowns(&self) -> usize {
        2 * self.n + 1
    }

    pub fn penalty(&self) -> Result<Penalty> {
        Penalty::new(self.kind, self.lambda, self.tau)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "fracture model needs N >= 2, got {}",
                self.n
            )));
        }
        if !(self.gamma > 0.0) || !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(
                "γ and dt must be positive, T nonnegative".into(),
            ));
        }
        if !self.material.is_empty() && self.material.len() != self.unknowns() {
            return Err(Error::InvalidParameter(format!(
                "material needs {} entries, got {}",
                self.unknowns(),
                self.material.len()
            )));
        }
        Ok(())
    }

    /// `A = R[D̄; γ eₗₐₛₜ]`.
    pub fn operator(&self) -> Result<SparseMatrix> {
        self.validate()?;
        let n = self.n;
        let dbar = backward_difference(2 * n + 1, 1.0)?.delete_rows(&[n]);
        let tether = SparseMatrix::from_triplets(1, 2 * n + 1, [(0, 2 * n, self.gamma)])?;
        let a = SparseMatrix::vstack(&[&dbar, &tether])?;
        Ok(if self.material.is_empty() {
            a
        } else {
            a.scale_rows(&self.material)
        })
    }

    /// Jump operator `D_f` with `−1, 1` on the two lips.
    pub fn jump_operator(&self) -> Result<SparseMatrix> {
        let n = self.n;
        Ok(SparseMatrix::from_triplets(
            1,
            2 * n + 1,
            [(0, n - 1, -1.0), (0, n, 1.0)],
        )?)
    }

    pub fn build(&self, t: f64) -> Result<CompositeProblem> {
        let a = self.operator()?;
        let mut b = vec![0.0; 2 * self.n + 1];
        b[2 * self.n] = self.gamma * t;
        CompositeProblem::new(a, b, self.jump_operator()?, self.penalty()?, self.n as f64)
    }
}

impl QuasiStaticModel for Fracture1DModel {
    fn build(&self, t: f64) -> Result<CompositeProblem> {
        Fracture1DModel::build(self, t)
    }

    fn times(&self) -> Vec<f64> {
        super::time_grid(self.t_end, self.dt)
    }

    fn load_amplitude(&self, t: f64) -> f64 {
        t.abs()
    }

    /// `q` times the squared residual over the difference rows, leaving out
    /// the left boundary row and the tether.
    fn elastic_energy(&self, p: &CompositeProblem, u: &[f64]) -> f64 {
        let au = p.a().mul_vec(u);
        let rows = 1..2 * self.n;
        p.qscale() * rows.map(|i| (au[i] - p.b()[i]).powi(2)).sum::<f64>()
    }

    fn jump(&self, u: &[f64]) -> f64 {
        (u[self.n] - u[self.n - 1]).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_data() {
        let m = Fracture1DModel::default();
        let p = m.build(0.7).unwrap();
        assert_eq!((p.m(), p.n(), p.r()), (201, 201, 1));
        assert_eq!(p.qscale(), 100.0);
        assert_eq!(p.b()[200], 35.0);
        assert!(p.b()[..200].iter().all(|&v| v == 0.0));
        assert_eq!(p.lambda_op().row(0), (&[99usize, 100][..], &[-1.0, 1.0][..]));
        // No row of A couples the two lips.
        assert!((0..p.m()).all(|i| {
            let idx = p.a().row(i).0;
            !(idx.contains(&99) && idx.contains(&100))
        }));
        assert_eq!(p.rank_a(), Some(201));
    }

    #[test]
    fn unbroken_bar_is_linear() {
        use crate::monotone::MonotoneSolver;
        use crate::sparse::LinearSolveOptions;
        let m = Fracture1DModel {
            n: 10,
            ..Default::default()
        };
        let (n, g, t) = (10.0, m.gamma, 1.0);
        let p = m.build(t).unwrap();
        // Lips glued by a stiff spring: all 2N strain rows share s with
        // N(2N s² + γ²(2N s − t)²) minimal.
        let s = g * g * t / (1.0 + 2.0 * n * g * g);
        let rhs: Vec<f64> = p.a_t().mul_vec(p.b()).iter().map(|v| 2.0 * p.qscale() * v).collect();
        let solver = MonotoneSolver::new(&p, &LinearSolveOptions::default()).unwrap();
        let u = solver.system().solve(&p, &[1e14], &rhs, &[0.0; 21]).unwrap();
        for i in (1..21).filter(|&i| i != 10) {
            assert!((u[i] - u[i - 1] - s).abs() < 1e-10);
        }
        assert!((u[0] - s).abs() < 1e-10);
        assert!(m.jump(&u) < 1e-10);
    }
}
