//! Sparse control of the 1D heat equation `y_t = y_xx + b₁u₁ + b₂u₂` on
//! `(0, 1)` with homogeneous Dirichlet conditions, steering `y(0) = 0` to a
//! target at `T`. The control-to-state map uses midpoint quadrature in time
//! and the exact sine eigenbasis of the finite-difference Laplacian.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::penalty::Penalty;
use crate::problem::CompositeProblem;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlModel {
    /// Interior spatial nodes.
    pub nodes: usize,
    /// Time intervals.
    pub steps: usize,
    pub t_end: f64,
    pub lambda: f64,
    pub tau: f64,
}

impl Default for ControlModel {
    fn default() -> Self {
        Self {
            nodes: 49,
            steps: 50,
            t_end: 1.0,
            lambda: 1e-4,
            tau: 0.5,
        }
    }
}

impl ControlModel {
    pub fn dx(&self) -> f64 {
        1.0 / (self.nodes + 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (1..=self.nodes).map(|j| j as f64 * self.dx()).collect()
    }

    /// Eigenvalue `μ_l` of the discrete Laplacian, `l = 1..=nodes`.
    pub fn eigenvalue(&self, l: usize) -> f64 {
        let s = (l as f64 * PI / (2 * (self.nodes + 1)) as f64).sin();
        -4.0 * s * s / (self.dx() * self.dx())
    }

    /// Orthonormal eigenvector `v_l`.
    pub fn eigenvector(&self, l: usize) -> Vec<f64> {
        let n1 = (self.nodes + 1) as f64;
        let c = (2.0 / n1).sqrt();
        (1..=self.nodes)
            .map(|j| c * (l as f64 * j as f64 * PI / n1).sin())
            .collect()
    }

    /// `e^{𝒜s} v` through the eigendecomposition.
    pub fn semigroup(&self, s: f64, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes];
        for l in 1..=self.nodes {
            let e = self.eigenvector(l);
            let coef = (self.eigenvalue(l) * s).exp() * e.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            for (o, ei) in out.iter_mut().zip(&e) {
                *o += coef * ei;
            }
        }
        out
    }

    /// Indicator of `(lo, hi)` on the grid, open at both ends.
    fn indicator(&self, lo: f64, hi: f64) -> Vec<f64> {
        let tol = 1e-12;
        self.grid()
            .into_iter()
            .map(|x| if x > lo + tol && x < hi - tol { 1.0 } else { 0.0 })
            .collect()
    }

    /// Spatial profiles of the two actuators, `χ(.2,.3)` and `χ(.6,.7)`.
    pub fn actuators(&self) -> [Vec<f64>; 2] {
        [self.indicator(0.2, 0.3), self.indicator(0.6, 0.7)]
    }

    pub fn target(&self) -> Vec<f64> {
        self.grid()
            .into_iter()
            .map(|x| 0.4 * (-70.0 * (x - 0.7) * (x - 0.7)).exp())
            .collect()
    }

    /// Dense `nodes × 2·steps` map from `(u₁¹…u₁ᵐ, u₂¹…u₂ᵐ)` to `y(T)`.
    pub fn operator(&self) -> Result<SparseMatrix> {
        if self.nodes == 0 || self.steps == 0 || !(self.t_end > 0.0) {
            return Err(Error::InvalidParameter(
                "control model needs nodes, steps and T positive".into(),
            ));
        }
        let dt = self.t_end / self.steps as f64;
        let mut t = Vec::with_capacity(2 * self.steps * self.nodes);
        for (i, b) in self.actuators().iter().enumerate() {
            for k in 0..self.steps {
                let s = self.t_end - k as f64 * dt - dt / 2.0;
                let col = self.semigroup(s, b);
                t.extend(
                    col.into_iter()
                        .enumerate()
                        .map(|(r, v)| (r, i * self.steps + k, v * dt)),
                );
            }
        }
        Ok(SparseMatrix::from_triplets(self.nodes, 2 * self.steps, t)?)
    }

    pub fn build(&self) -> Result<CompositeProblem> {
        CompositeProblem::new(
            self.operator()?,
            self.target(),
            SparseMatrix::identity(2 * self.steps),
            Penalty::power_law(self.lambda, self.tau)?,
            0.5,
        )
    }

    /// The first actuator's block of a control vector.
    pub fn first_control<'a>(&self, u: &'a [f64]) -> &'a [f64] {
        &u[..self.steps]
    }
}

pub fn build_control(lambda: f64, tau: f64) -> Result<CompositeProblem> {
    ControlModel {
        lambda,
        tau,
        ..Default::default()
    }
    .build()
}
