//! Solvers for the reweighted normal equations
//! `[2q AᵀA + Λᵀ diag(w) Λ] x = 2q Aᵀb`.
//!
//! Weights on nearly closed entries grow like `φ′(ε)/ε`, which reaches 1e20
//! and beyond late in the continuation. Folding such weights into an
//! assembled matrix is harmless when `Λ` selects single entries, but when a
//! row of `Λ` couples several unknowns the huge entries swamp the data term
//! during elimination. The low-rank strategies keep the two parts apart.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use crate::error::LinalgError;
use crate::problem::CompositeProblem;
use crate::sparse::{
    pcg, EnvelopeCholesky, LinearSolveOptions, NormalOperatorForm, SolveMethod, SparseMatrix, DIRECT_MAX_ENVELOPE,
    DIRECT_MAX_UNKNOWNS,
};

/// Largest capacitance system handled densely by the low-rank strategies.
pub const LOW_RANK_MAX: usize = 4000;
const MAX_REFINEMENTS: usize = 3;
const REFINE_TOL: f64 = 64.0 * f64::EPSILON;
/// Weight-to-data ratio beyond which assembling loses half the digits of the
/// data term.
const SWAMP_RATIO: f64 = 1e8;

/// How the normal equations are being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Assembled,
    ConjugateGradient,
    /// `2qAᵀA` factored once, weighted rows added through an `r × r` system.
    PenaltyUpdate,
    /// Diagonal weighted part inverted directly, data term added through an
    /// `m × m` system.
    DataUpdate,
}

enum Kernel {
    Assembled {
        data: SparseMatrix,
    },
    Cg,
    PenaltyUpdate {
        data: SparseMatrix,
        kfac: EnvelopeCholesky,
        kinv_lt: Vec<Vec<f64>>,
        s: DMatrix<f64>,
    },
    DataUpdate {
        cols: Vec<usize>,
        scale: Vec<f64>,
    },
}

/// Cached factorizations that depend only on `(A, Λ, q)` and the options, so
/// one instance can serve a whole quasi-static run.
pub struct NormalSystem {
    kernel: Kernel,
    opts: LinearSolveOptions,
    two_q: f64,
    n: usize,
}

impl NormalSystem {
    pub fn new(p: &CompositeProblem, opts: &LinearSolveOptions) -> Result<Self, LinalgError> {
        opts.validate()?;
        let two_q = 2.0 * p.qscale();
        let n = p.n();
        let lam = p.lambda_op();
        let coupled = lam.has_coupling_rows();
        let single = lam.is_row_selection();
        let kernel = match opts.method {
            SolveMethod::DirectCholesky => Self::assembled(p, two_q)?,
            SolveMethod::ConjugateGradient => Kernel::Cg,
            SolveMethod::LowRankUpdate => {
                if single && p.m() <= LOW_RANK_MAX {
                    Self::data_update(lam)
                } else if p.r() <= LOW_RANK_MAX {
                    Self::penalty_update(p, two_q, opts.shift)?
                } else {
                    return Err(LinalgError::InvalidOption(format!(
                        "low-rank update needs m or r at most {LOW_RANK_MAX} (m = {}, r = {})",
                        p.m(),
                        p.r()
                    )));
                }
            }
            SolveMethod::Auto => {
                let mut chosen = None;
                if coupled && p.r() <= LOW_RANK_MAX {
                    chosen = Self::penalty_update(p, two_q, opts.shift).ok();
                }
                if chosen.is_none() && single && p.m() <= LOW_RANK_MAX && p.m() < n {
                    chosen = Some(Self::data_update(lam));
                }
                match chosen {
                    Some(k) => k,
                    None if n < DIRECT_MAX_UNKNOWNS => {
                        let k = Self::assembled(p, two_q)?;
                        let Kernel::Assembled { data } = &k else { unreachable!() };
                        let probe = data.add_scaled(1.0, &lam.transpose().matmul(lam)?, 1.0)?;
                        if EnvelopeCholesky::predicted_envelope(&probe) <= DIRECT_MAX_ENVELOPE {
                            k
                        } else {
                            Kernel::Cg
                        }
                    }
                    None => Kernel::Cg,
                }
            }
        };
        Ok(Self {
            kernel,
            opts: *opts,
            two_q,
            n,
        })
    }

    fn assembled(p: &CompositeProblem, two_q: f64) -> Result<Kernel, LinalgError> {
        Ok(Kernel::Assembled {
            data: p.a_t().matmul(p.a())?.scale(two_q),
        })
    }

    fn penalty_update(p: &CompositeProblem, two_q: f64, shift: f64) -> Result<Kernel, LinalgError> {
        let k = p.a_t().matmul(p.a())?.scale(two_q);
        let kfac = EnvelopeCholesky::factor(&k, shift)?;
        let lam = p.lambda_op();
        let r = lam.rows();
        let mut kinv_lt = Vec::with_capacity(r);
        let mut col = vec![0.0; p.n()];
        for i in 0..r {
            col.iter_mut().for_each(|v| *v = 0.0);
            let (idx, vals) = lam.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                col[j] = v;
            }
            kinv_lt.push(kfac.solve(&col));
        }
        let mut s = DMatrix::zeros(r, r);
        for i in 0..r {
            let (idx, vals) = lam.row(i);
            for j in 0..r {
                s[(i, j)] = idx.iter().zip(vals).map(|(&c, &v)| v * kinv_lt[j][c]).sum();
            }
        }
        // Symmetrize away rounding so the capacitance stays SPD.
        let s = (&s + s.transpose()) * 0.5;
        Ok(Kernel::PenaltyUpdate {
            data: k,
            kfac,
            kinv_lt,
            s,
        })
    }

    fn data_update(lam: &SparseMatrix) -> Kernel {
        let mut cols = Vec::with_capacity(lam.rows());
        let mut scale = Vec::with_capacity(lam.rows());
        for i in 0..lam.rows() {
            let (idx, vals) = lam.row(i);
            cols.push(idx.first().copied().unwrap_or(usize::MAX));
            scale.push(vals.first().copied().unwrap_or(0.0));
        }
        Kernel::DataUpdate { cols, scale }
    }

    pub fn strategy(&self) -> Strategy {
        match self.kernel {
            Kernel::Assembled { .. } => Strategy::Assembled,
            Kernel::Cg => Strategy::ConjugateGradient,
            Kernel::PenaltyUpdate { .. } => Strategy::PenaltyUpdate,
            Kernel::DataUpdate { .. } => Strategy::DataUpdate,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve with weights `w` and right-hand side `rhs`; `guess` seeds CG.
    ///
    /// Direct strategies are followed by a few steps of iterative refinement
    /// against the unassembled operator until the componentwise backward
    /// error is at rounding level.
    pub fn solve(&self, p: &CompositeProblem, w: &[f64], rhs: &[f64], guess: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let Some(prep) = self.prepare(p, w)? else {
            return self.cg(p, w, rhs, guess);
        };
        if let Prepared::Saddle(sd) = &prep {
            return Ok(self.saddle_solve(sd, rhs));
        }
        let mut x = self.apply(&prep, p, rhs);
        let (mut r, mut omega) = self.backward_error(p, w, rhs, &x);
        for _ in 0..MAX_REFINEMENTS {
            if omega <= REFINE_TOL {
                break;
            }
            let dx = self.apply(&prep, p, &r);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let (rc, oc) = self.backward_error(p, w, rhs, &cand);
            if !(oc < omega) {
                break;
            }
            x = cand;
            r = rc;
            omega = oc;
        }
        Ok(x)
    }

    /// Factor whatever depends on `w`; `None` means fall back to CG.
    fn prepare(&self, p: &CompositeProblem, w: &[f64]) -> Result<Option<Prepared>, LinalgError> {
        Ok(Some(match &self.kernel {
            Kernel::Cg => return Ok(None),
            Kernel::Assembled { data } => {
                let root: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
                let half = p.lambda_op().scale_rows(&root);
                if !self.heavy_rows(data, p, w, SWAMP_RATIO).is_empty() {
                    if let Some(saddle) = self.saddle(data, p, w) {
                        return saddle.map(Some);
                    }
                }
                let m = data.add_scaled(1.0, &half.transpose().matmul(&half)?, 1.0)?;
                match EnvelopeCholesky::factor(&m, self.opts.shift) {
                    Ok(f) => Prepared::Assembled(f),
                    Err(e @ LinalgError::FactorizationBreakdown { .. }) => self.saddle(data, p, w).ok_or(e)??,
                    Err(e) => return Err(e),
                }
            }
            Kernel::PenaltyUpdate { data, s, .. } => {
                // More heavy rows than unknowns leaves the capacitance singular
                // up to 1/w.
                if self.heavy_rows(data, p, w, 1.0).len() > self.n {
                    if let Some(saddle) = self.saddle(data, p, w) {
                        return saddle.map(Some);
                    }
                }
                let active: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
                let k = active.len();
                let mut cap = DMatrix::zeros(k, k);
                for (a, &i) in active.iter().enumerate() {
                    for (b, &j) in active.iter().enumerate() {
                        cap[(a, b)] = s[(i, j)];
                    }
                    cap[(a, a)] += 1.0 / w[i];
                }
                let cap = if k == 0 { None } else { Some(DenseFactor::new(cap)?) };
                Prepared::PenaltyUpdate { active, cap }
            }
            Kernel::DataUpdate { cols, scale } => {
                let mut d = vec![self.opts.shift; self.n];
                for ((&c, &s), &wi) in cols.iter().zip(scale).zip(w) {
                    if c != usize::MAX {
                        d[c] += wi * s * s;
                    }
                }
                if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    // Some unknown carries no weight; the diagonal cannot be inverted.
                    return Ok(None);
                }
                let dinv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
                let sq: Vec<f64> = dinv.iter().map(|v| v.sqrt()).collect();
                let bmat = p.a().scale_cols(&sq);
                let bbt = bmat.matmul(&bmat.transpose())?;
                let m = p.m();
                let mut cap = DMatrix::from_row_slice(m, m, &bbt.to_dense());
                for i in 0..m {
                    cap[(i, i)] += 1.0 / self.two_q;
                }
                Prepared::DataUpdate {
                    dinv,
                    cap: DenseFactor::new(cap)?,
                }
            }
        }))
    }

    /// Solve and refine in the augmented unknowns. Refining against the
    /// assembled operator would reintroduce `w·Λx`, whose rounding error is
    /// what the augmented form avoids.
    fn saddle_solve(&self, sd: &Saddle, rhs: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_column_slice(rhs);
        let reduced = match &sd.basis {
            Some(nb) => nb.tr_mul(&rhs),
            None => rhs,
        };
        let d = reduced.len();
        let Some(f) = &sd.factor else {
            return vec![0.0; self.n];
        };
        let m = &sd.m;
        let mut b = DVector::zeros(m.nrows());
        b.rows_mut(0, d).copy_from(&reduced);
        let m_abs = m.abs();
        let backward = |v: &DVector<f64>| {
            let r = &b - m * v;
            let bound = &m_abs * v.abs() + b.abs();
            let omega = r.iter().zip(bound.iter()).fold(0.0f64, |o, (ri, bi)| {
                if *bi > 0.0 {
                    o.max(ri.abs() / bi)
                } else if *ri != 0.0 {
                    f64::INFINITY
                } else {
                    o
                }
            });
            (r, omega)
        };
        let mut v = f.solve(&b);
        let (mut r, mut omega) = backward(&v);
        for _ in 0..MAX_REFINEMENTS {
            if omega <= REFINE_TOL {
                break;
            }
            let cand = &v + f.solve(&r);
            let (rc, oc) = backward(&cand);
            if !(oc < omega) {
                break;
            }
            v = cand;
            r = rc;
            omega = oc;
        }
        let u = v.rows(0, d);
        match &sd.basis {
            Some(nb) => (nb * u).as_slice().to_vec(),
            None => u.iter().copied().collect(),
        }
    }

    /// Rows whose weight exceeds the data scale by more than `ratio`.
    fn heavy_rows(&self, data: &SparseMatrix, p: &CompositeProblem, w: &[f64], ratio: f64) -> Vec<usize> {
        let diag_max = (0..self.n).map(|i| data.get(i, i)).fold(0.0f64, f64::max);
        let floor = if diag_max > 0.0 { diag_max } else { 1.0 };
        let mut row_sq = vec![0.0; w.len()];
        for (i, _, v) in p.lambda_op().triplets() {
            row_sq[i] += v * v;
        }
        (0..w.len()).filter(|&i| w[i] * row_sq[i] > ratio * floor).collect()
    }

    /// Saddle-point form `[K Λ_hᵀ; Λ_h −W_h⁻¹]` where the heavy rows `h` are
    /// those whose weight dwarfs the data term and `K` holds the rest. Rows
    /// heavy enough that `Λᵢx` is zero to working precision are imposed
    /// exactly by restricting to the null space of those rows. `None` when
    /// the system is too large to handle densely.
    fn saddle(&self, data: &SparseMatrix, p: &CompositeProblem, w: &[f64]) -> Option<Result<Prepared, LinalgError>> {
        let n = self.n;
        let lam = p.lambda_op();
        let heavy = self.heavy_rows(data, p, w, 1.0);
        if n + heavy.len() > LOW_RANK_MAX {
            return None;
        }
        let hard = self.heavy_rows(data, p, w, 1.0 / f64::EPSILON);
        let mut kind = vec![0u8; w.len()];
        heavy.iter().for_each(|&i| kind[i] = 1);
        hard.iter().for_each(|&i| kind[i] = 2);
        let medium: Vec<usize> = heavy.iter().copied().filter(|&i| kind[i] == 1).collect();

        let mut k = DMatrix::from_row_slice(n, n, &data.to_dense());
        for j in 0..n {
            k[(j, j)] += self.opts.shift;
        }
        let mut lh = DMatrix::zeros(hard.len().max(n), n);
        let mut lm = DMatrix::zeros(medium.len(), n);
        let mut slot = vec![0; w.len()];
        hard.iter().enumerate().for_each(|(a, &i)| slot[i] = a);
        medium.iter().enumerate().for_each(|(a, &i)| slot[i] = a);
        let mut rows = vec![Vec::new(); w.len()];
        for (i, j, v) in lam.triplets() {
            rows[i].push((j, v));
        }
        for (i, row) in rows.iter().enumerate() {
            match kind[i] {
                0 => {
                    for &(a, va) in row {
                        for &(b, vb) in row {
                            k[(a, b)] += w[i] * va * vb;
                        }
                    }
                }
                1 => row.iter().for_each(|&(j, v)| lm[(slot[i], j)] += v),
                _ => row.iter().for_each(|&(j, v)| lh[(slot[i], j)] += v),
            }
        }

        let basis = if hard.is_empty() {
            None
        } else if hard.iter().all(|&i| rows[i].len() == 1) {
            // Rows pinning single entries: the null space is spanned by the
            // untouched coordinates, and pinned entries come out exactly zero.
            let mut pinned = vec![false; n];
            hard.iter().for_each(|&i| pinned[rows[i][0].0] = true);
            let free: Vec<usize> = (0..n).filter(|&j| !pinned[j]).collect();
            let mut nb = DMatrix::zeros(n, free.len());
            free.iter().enumerate().for_each(|(c, &j)| nb[(j, c)] = 1.0);
            Some(nb)
        } else {
            let svd = lh.svd(false, true);
            let vt = svd.v_t.expect("requested");
            let top = svd.singular_values.max();
            let tol = (hard.len().max(n) as f64) * f64::EPSILON * top;
            let null: Vec<_> = (0..n)
                .filter(|&j| svd.singular_values[j] <= tol)
                .map(|j| vt.row(j).transpose())
                .collect();
            Some(if null.is_empty() {
                DMatrix::zeros(n, 0)
            } else {
                DMatrix::from_columns(&null)
            })
        };
        let (k, lm) = match &basis {
            Some(nb) => (nb.tr_mul(&k) * nb, &lm * nb),
            None => (k, lm),
        };
        let d = k.nrows();
        let size = d + medium.len();
        let mut m = k.resize(size, size, 0.0);
        for (a, &i) in medium.iter().enumerate() {
            for j in 0..d {
                m[(d + a, j)] = lm[(a, j)];
                m[(j, d + a)] = lm[(a, j)];
            }
            m[(d + a, d + a)] = -1.0 / w[i];
        }
        let factor = if size == 0 {
            None
        } else {
            match DenseFactor::new(m.clone()) {
                Ok(f) => Some(f),
                Err(e) => return Some(Err(e)),
            }
        };
        Some(Ok(Prepared::Saddle(Saddle { factor, m, basis })))
    }

    fn apply(&self, prep: &Prepared, p: &CompositeProblem, rhs: &[f64]) -> Vec<f64> {
        match prep {
            Prepared::Assembled(f) => f.solve(rhs),
            Prepared::Saddle(..) => unreachable!("the saddle form is solved in its own variables"),
            Prepared::PenaltyUpdate { active, cap } => {
                let Kernel::PenaltyUpdate { kfac, kinv_lt, .. } = &self.kernel else {
                    unreachable!("prepared state matches the kernel")
                };
                let mut x = kfac.solve(rhs);
                let Some(cap) = cap else { return x };
                let lx = p.lambda_op().mul_vec(&x);
                let g = DVector::from_iterator(active.len(), active.iter().map(|&i| lx[i]));
                let z = cap.solve(&g);
                for (a, &i) in active.iter().enumerate() {
                    let zi = z[a];
                    for (xv, cv) in x.iter_mut().zip(&kinv_lt[i]) {
                        *xv -= zi * cv;
                    }
                }
                x
            }
            Prepared::DataUpdate { dinv, cap } => {
                let dr: Vec<f64> = rhs.iter().zip(dinv).map(|(r, d)| r * d).collect();
                let g = DVector::from_vec(p.a().mul_vec(&dr));
                let z = cap.solve(&g);
                let atz = p.a_t().mul_vec(z.as_slice());
                rhs.iter().zip(&atz).zip(dinv).map(|((r, a), d)| (r - a) * d).collect()
            }
        }
    }

    /// Residual `rhs − Mx` and its componentwise backward error
    /// `maxᵢ |rᵢ| / (|M||x| + |rhs|)ᵢ`.
    fn backward_error(&self, p: &CompositeProblem, w: &[f64], rhs: &[f64], x: &[f64]) -> (Vec<f64>, f64) {
        let ax = p.a().mul_vec(x);
        let lx = p.lambda_op().mul_vec(x);
        let wlx: Vec<f64> = lx.iter().zip(w).map(|(a, b)| a * b).collect();
        let ata_x = p.a_t().mul_vec(&ax);
        let lwl_x = p.lambda_t().mul_vec(&wlx);
        let abs_x: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let ata_abs = p.a_t().mul_abs_vec(&p.a().mul_abs_vec(&abs_x));
        let lam_abs: Vec<f64> = p
            .lambda_op()
            .mul_abs_vec(&abs_x)
            .iter()
            .zip(w)
            .map(|(a, b)| a * b)
            .collect();
        let lwl_abs = p.lambda_t().mul_abs_vec(&lam_abs);
        let shift = self.opts.shift;
        let mut omega = 0.0f64;
        let r: Vec<f64> = (0..x.len())
            .map(|i| {
                let ri = rhs[i] - (self.two_q * ata_x[i] + lwl_x[i] + shift * x[i]);
                let bound = self.two_q * ata_abs[i] + lwl_abs[i] + shift * abs_x[i] + rhs[i].abs();
                if ri != 0.0 {
                    omega = omega.max(if bound > 0.0 { ri.abs() / bound } else { f64::INFINITY });
                }
                ri
            })
            .collect();
        (r, omega)
    }

    fn cg(&self, p: &CompositeProblem, w: &[f64], rhs: &[f64], guess: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let op = NormalOperatorForm {
            a: p.a(),
            at: p.a_t(),
            lambda_op: p.lambda_op(),
            lambda_t: p.lambda_t(),
            w,
            qscale: self.two_q,
            shift: self.opts.shift,
        };
        let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let out = pcg(
            &op,
            rhs,
            Some(guess),
            self.opts.cg_tolerance * scale,
            self.opts.cg_max_iterations,
        )?;
        Ok(out.x)
    }
}

enum Prepared {
    Assembled(EnvelopeCholesky),
    Saddle(Saddle),
    PenaltyUpdate {
        active: Vec<usize>,
        cap: Option<DenseFactor>,
    },
    DataUpdate {
        dinv: Vec<f64>,
        cap: DenseFactor,
    },
}

struct Saddle {
    /// `None` when the hard rows leave nothing free.
    factor: Option<DenseFactor>,
    m: DMatrix<f64>,
    /// Null-space basis of the hard rows.
    basis: Option<DMatrix<f64>>,
}

/// Dense SPD factor, with pivoted LU when rounding has cost definiteness.
enum DenseFactor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl DenseFactor {
    fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        let n = m.nrows();
        if let Some(c) = Cholesky::new(m.clone()) {
            return Ok(DenseFactor::Cholesky(c));
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Ok(DenseFactor::Lu(lu))
        } else {
            Err(LinalgError::FactorizationBreakdown { pivot: n, value: 0.0 })
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            DenseFactor::Cholesky(c) => c.solve(rhs),
            DenseFactor::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
        }
    }
}
