//! Cohesive fracture of the unit square along the vertical line `x₁ = 0.5`.
//!
//! Nodes form an `m × m` grid with `m = 2N + 2`; the slow index `k` runs
//! along `x₁` and the fast index `j` along `x₂`, so node `(k, j)` is unknown
//! `k·m + j`. Columns `k = N` and `k = N + 1` are the two lips of the crack.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{Penalty, PenaltyKind};
use crate::problem::CompositeProblem;
use crate::sparse::{difference, kronecker, SparseMatrix};

use super::quasistatic::QuasiStaticModel;

/// Boundary displacement `g(t)(x₁, x₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryDatum {
    /// `(2x₁ − 0.5)t`
    G1,
    /// `2t cos(4(x₂ − 0.5))(x₁ − 0.5)`
    G2,
    /// `t cos(2(x₂ − 0.5))(x₁ − 0.5) / 100`
    G3,
}

impl BoundaryDatum {
    pub fn eval(self, t: f64, x1: f64, x2: f64) -> f64 {
        match self {
            BoundaryDatum::G1 => (2.0 * x1 - 0.5) * t,
            BoundaryDatum::G2 => 2.0 * t * (4.0 * (x2 - 0.5)).cos() * (x1 - 0.5),
            BoundaryDatum::G3 => t * (2.0 * (x2 - 0.5)).cos() * (x1 - 0.5) / 100.0,
        }
    }
}

impl fmt::Display for BoundaryDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryDatum::G1 => "g1",
            BoundaryDatum::G2 => "g2",
            BoundaryDatum::G3 => "g3",
        })
    }
}

impl FromStr for BoundaryDatum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g1" => Ok(BoundaryDatum::G1),
            "g2" => Ok(BoundaryDatum::G2),
            "g3" => Ok(BoundaryDatum::G3),
            other => Err(Error::InvalidParameter(format!("unknown boundary datum '{other}'"))),
        }
    }
}

/// Stiffness of the difference rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Material {
    Homogeneous,
    /// 600 left of the crack, 1 right of it.
    TwoMaterial,
    /// `400 e^{x₂}` left of the crack, `400 x₂` right of it.
    Graded,
}

impl Material {
    fn value(self, left: bool, x2: f64) -> f64 {
        match (self, left) {
            (Material::Homogeneous, _) => 1.0,
            (Material::TwoMaterial, true) => 600.0,
            (Material::TwoMaterial, false) => 1.0,
            (Material::Graded, true) => 400.0 * x2.exp(),
            (Material::Graded, false) => 400.0 * x2,
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Material::Homogeneous => "homogeneous",
            Material::TwoMaterial => "two-material",
            Material::Graded => "graded",
        })
    }
}

impl FromStr for Material {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "homogeneous" => Ok(Material::Homogeneous),
            "two-material" | "two" => Ok(Material::TwoMaterial),
            "graded" => Ok(Material::Graded),
            other => Err(Error::InvalidParameter(format!("unknown material '{other}'"))),
        }
    }
}

/// Which nodes carry the `γ` tether to the boundary datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TetherMode {
    BoundaryOnly,
    FullGrid,
}

impl fmt::Display for TetherMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TetherMode::BoundaryOnly => "boundary-only",
            TetherMode::FullGrid => "full-grid",
        })
    }
}

impl FromStr for TetherMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "boundary-only" | "boundary" => Ok(TetherMode::BoundaryOnly),
            "full-grid" | "full" => Ok(TetherMode::FullGrid),
            other => Err(Error::InvalidParameter(format!("unknown tether mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fracture2DModel {
    pub n: usize,
    pub lambda: f64,
    pub tau: f64,
    pub kind: PenaltyKind,
    pub gamma: f64,
    pub material: Material,
    pub datum: BoundaryDatum,
    pub tether: TetherMode,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for Fracture2DModel {
    fn default() -> Self {
        Self {
            n: 80,
            lambda: 1.0,
            tau: 0.01,
            kind: PenaltyKind::PowerLaw,
            gamma: 50.0,
            material: Material::Homogeneous,
            datum: BoundaryDatum::G1,
            tether: TetherMode::BoundaryOnly,
            t_end: 3.0,
            dt: 0.01,
        }
    }
}

impl Fracture2DModel {
    pub fn with_penalty(mut self, kind: PenaltyKind, lambda: f64, tau: f64) -> Self {
        self.kind = kind;
        self.lambda = lambda;
        self.tau = tau;
        self
    }

    /// Grid side `m = 2N + 2`.
    pub fn side(&self) -> usize {
        2 * self.n + 2
    }

    pub fn unknowns(&self) -> usize {
        self.side() * self.side()
    }

    pub fn penalty(&self) -> Result<Penalty> {
        Penalty::new(self.kind, self.lambda, self.tau)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("2D fracture model needs N >= 1".into()));
        }
        if !(self.gamma > 0.0) || !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(
                "γ and dt must be positive, T nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Physical coordinates of node `(k, j)`; both lips sit at `x₁ = 0.5`.
    pub fn coords(&self, k: usize, j: usize) -> (f64, f64) {
        let n = self.n;
        let h = 1.0 / (2 * n) as f64;
        let x1 = if k <= n { k as f64 * h } else { (k - 1) as f64 * h };
        (x1, j as f64 / (self.side() - 1) as f64)
    }

    pub fn is_boundary(&self, k: usize, j: usize) -> bool {
        let last = self.side() - 1;
        k == 0 || j == 0 || k == last || j == last
    }

    /// Differences along `x₂`, without the two lip columns.
    pub fn d1(&self) -> Result<SparseMatrix> {
        let m = self.side();
        let g1 = kronecker(&SparseMatrix::identity(m), &difference(m)?)?;
        let start = (m - 1) * self.n;
        let drop: Vec<usize> = (start..start + 2 * (m - 1)).collect();
        Ok(g1.delete_rows(&drop))
    }

    /// Differences along `x₁`, without the ones across the crack.
    pub fn d2(&self) -> Result<SparseMatrix> {
        let m = self.side();
        let g2 = kronecker(&difference(m)?, &SparseMatrix::identity(m))?;
        let start = m * self.n;
        let drop: Vec<usize> = (start..start + m).collect();
        Ok(g2.delete_rows(&drop))
    }

    /// Jump operator: row `j` is `u(N+1, j) − u(N, j)`.
    pub fn jump_operator(&self) -> Result<SparseMatrix> {
        let m = self.side();
        let n = self.n;
        let t = (0..m).flat_map(|j| [(j, n * m + j, -1.0), (j, (n + 1) * m + j, 1.0)]);
        Ok(SparseMatrix::from_triplets(m, m * m, t)?)
    }

    /// Material weights for the rows of `D₁` and `D₂`.
    pub fn row_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.side();
        let n = self.n;
        let h2 = 1.0 / (m - 1) as f64;
        let r1 = (0..m)
            .filter(|&k| k != n && k != n + 1)
            .flat_map(|k| (0..m - 1).map(move |j| (k, j)))
            .map(|(k, j)| self.material.value(k <= n, (j as f64 + 0.5) * h2))
            .collect();
        let r2 = (0..m - 1)
            .filter(|&k| k != n)
            .flat_map(|k| (0..m).map(move |j| (k, j)))
            .map(|(k, j)| self.material.value(k < n, j as f64 * h2))
            .collect();
        (r1, r2)
    }

    pub fn operator(&self) -> Result<SparseMatrix> {
        self.validate()?;
        let m = self.side();
        let (r1, r2) = self.row_weights();
        let d1 = self.d1()?.scale_rows(&r1);
        let d2 = self.d2()?.scale_rows(&r2);
        let tether = SparseMatrix::diagonal(
            &(0..m * m)
                .map(|i| match self.tether {
                    TetherMode::FullGrid => self.gamma,
                    TetherMode::BoundaryOnly if self.is_boundary(i / m, i % m) => self.gamma,
                    TetherMode::BoundaryOnly => 0.0,
                })
                .collect::<Vec<_>>(),
        );
        Ok(SparseMatrix::vstack(&[&d1, &d2, &tether])?)
    }

    /// Number of difference rows in `A`, ahead of the tether block.
    pub fn difference_rows(&self) -> usize {
        let m = self.side();
        (m - 1) * (m - 2) + m * (m - 2)
    }

    pub fn data(&self, t: f64) -> Vec<f64> {
        let m = self.side();
        let mut b = vec![0.0; self.difference_rows() + m * m];
        let off = self.difference_rows();
        for k in 0..m {
            for j in 0..m {
                if self.tether == TetherMode::FullGrid || self.is_boundary(k, j) {
                    let (x1, x2) = self.coords(k, j);
                    b[off + k * m + j] = self.gamma * self.datum.eval(t, x1, x2);
                }
            }
        }
        b
    }

    pub fn build(&self, t: f64) -> Result<CompositeProblem> {
        CompositeProblem::new(
            self.operator()?,
            self.data(t),
            self.jump_operator()?,
            self.penalty()?,
            1.0,
        )
    }

    /// Opening at each node of the crack line.
    pub fn crack_profile(&self, u: &[f64]) -> Vec<f64> {
        let m = self.side();
        let n = self.n;
        (0..m).map(|j| (u[(n + 1) * m + j] - u[n * m + j]).abs()).collect()
    }

    /// Largest minus smallest displacement over the left or right slab.
    pub fn spread(&self, u: &[f64], left: bool) -> f64 {
        let m = self.side();
        let ks = if left { 0..self.n + 1 } else { self.n + 1..m };
        let vals = ks.flat_map(|k| u[k * m..(k + 1) * m].iter().copied());
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

impl QuasiStaticModel for Fracture2DModel {
    fn build(&self, t: f64) -> Result<CompositeProblem> {
        Fracture2DModel::build(self, t)
    }

    fn times(&self) -> Vec<f64> {
        super::time_grid(self.t_end, self.dt)
    }

    fn load_amplitude(&self, t: f64) -> f64 {
        let m = self.side();
        (0..m)
            .flat_map(|k| (0..m).map(move |j| (k, j)))
            .filter(|&(k, j)| self.is_boundary(k, j))
            .map(|(k, j)| {
                let (x1, x2) = self.coords(k, j);
                self.datum.eval(t, x1, x2).abs()
            })
            .fold(0.0, f64::max)
    }

    fn elastic_energy(&self, p: &CompositeProblem, u: &[f64]) -> f64 {
        let au = p.a().mul_vec(u);
        p.qscale() * au[..self.difference_rows()].iter().map(|v| v * v).sum::<f64>()
    }

    fn jump(&self, u: &[f64]) -> f64 {
        self.crack_profile(u).into_iter().fold(0.0, f64::max)
    }
}
