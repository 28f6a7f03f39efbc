//! Compressed sparse row matrices, structured builders and SPD solvers.

mod cg;
mod cholesky;
mod solve;

pub use cg::{pcg, CgOutcome, LinearOperator, NormalOperatorForm};
pub use cholesky::EnvelopeCholesky;
pub use solve::{solve_spd, LinearSolveOptions, SolveMethod, DIRECT_MAX_ENVELOPE, DIRECT_MAX_UNKNOWNS};

use crate::error::LinalgError;
use crate::par;

/// Rows below this count are multiplied on the calling thread.
const PAR_MIN_ROWS: usize = 2048;

/// Real matrix in compressed sparse row form.
///
/// Column indices are strictly increasing within each row and explicit zeros
/// are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let triplets = d.iter().enumerate().map(|(i, &v)| (i, i, v));
        Self::from_triplets(d.len(), d.len(), triplets).expect("diagonal indices are in bounds")
    }

    /// Assemble from `(row, col, value)` triplets; duplicates are summed and
    /// zero results dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
            per_row[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    /// Dense row-major input; zeros are skipped.
    pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        let triplets = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j, data[i * cols + j])));
        Self::from_triplets(rows, cols, triplets).expect("dense indices are in bounds")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, vals) = self.row(i);
        match idx.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (idx, vals) = self.row(i);
            idx.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows * self.cols];
        for (i, j, v) in self.triplets() {
            d[i * self.cols + j] = v;
        }
        d
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, vals) = self.row(i);
        idx.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
    }

    /// `y = M x`, row-parallel when large. Each row is reduced sequentially,
    /// so the result is identical to [`Self::mul_vec_seq`].
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        assert_eq!(y.len(), self.rows, "matvec dimension mismatch");
        if self.rows >= PAR_MIN_ROWS {
            par::fill_indexed(y, |i| self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    /// `|M| |x|` entrywise, for componentwise error bounds.
    pub fn mul_abs_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let f = |i: usize| {
            let (idx, vals) = self.row(i);
            idx.iter().zip(vals).map(|(&j, v)| (v * x[j]).abs()).sum()
        };
        let mut y = vec![0.0; self.rows];
        if self.rows >= PAR_MIN_ROWS {
            par::fill_indexed(&mut y, f);
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = f(i));
        }
        y
    }

    pub fn mul_vec_seq(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| self.row_dot(i, x)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                let k = next[j];
                indices[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    /// Sparse product `self * other` (Gustavson's row-wise algorithm).
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = vec![0.0; other.cols];
        let mut mark = vec![usize::MAX; other.cols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.rows {
            pattern.clear();
            let (ai, av) = self.row(i);
            for (&k, &a) in ai.iter().zip(av) {
                let (bi, bv) = other.row(k);
                for (&j, &b) in bi.iter().zip(bv) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                if acc[j] != 0.0 {
                    indices.push(j);
                    values.push(acc[j]);
                }
            }
            indptr.push(indices.len());
        }
        Ok(SparseMatrix {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
            values,
        })
    }

    /// `a·self + b·other`.
    pub fn add_scaled(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let triplets = self
            .triplets()
            .map(|(i, j, v)| (i, j, a * v))
            .chain(other.triplets().map(|(i, j, v)| (i, j, b * v)));
        SparseMatrix::from_triplets(self.rows, self.cols, triplets)
    }

    pub fn scale(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.prune()
    }

    /// Multiply row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.rows);
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            for k in out.indptr[i]..out.indptr[i + 1] {
                out.values[k] *= di;
            }
        }
        out.prune()
    }

    /// Multiply column `j` by `d[j]`.
    pub fn scale_cols(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.cols);
        let mut out = self.clone();
        for (v, &j) in out.values.iter_mut().zip(&self.indices) {
            *v *= d[j];
        }
        out.prune()
    }

    /// Whether some row has more than one stored entry.
    pub fn has_coupling_rows(&self) -> bool {
        !self.is_row_selection()
    }

    fn prune(self) -> SparseMatrix {
        if self.values.iter().all(|&v| v != 0.0) {
            return self;
        }
        let (rows, cols) = (self.rows, self.cols);
        SparseMatrix::from_triplets(rows, cols, self.triplets().collect::<Vec<_>>())
            .expect("pruning keeps indices in bounds")
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&SparseMatrix]) -> Result<SparseMatrix, LinalgError> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(LinalgError::DimensionMismatch(
                "vstack requires equal column counts".into(),
            ));
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut rows = 0;
        for b in blocks {
            for i in 0..b.rows {
                let (idx, vals) = b.row(i);
                indices.extend_from_slice(idx);
                values.extend_from_slice(vals);
                indptr.push(indices.len());
            }
            rows += b.rows;
        }
        Ok(SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    /// Copy of the matrix without the rows listed in `drop` (any order).
    pub fn delete_rows(&self, drop: &[usize]) -> SparseMatrix {
        let mut keep = vec![true; self.rows];
        for &r in drop {
            keep[r] = false;
        }
        self.select_rows(&(0..self.rows).filter(|&i| keep[i]).collect::<Vec<_>>())
    }

    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &i in rows {
            let (idx, vals) = self.row(i);
            indices.extend_from_slice(idx);
            values.extend_from_slice(vals);
            indptr.push(indices.len());
        }
        SparseMatrix {
            rows: rows.len(),
            cols: self.cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// Squared Euclidean norm of every column.
    pub fn column_sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (_, j, v) in self.triplets() {
            out[j] += v * v;
        }
        out
    }

    /// Whether every row has at most one stored entry.
    pub fn is_row_selection(&self) -> bool {
        (0..self.rows).all(|i| self.indptr[i + 1] - self.indptr[i] <= 1)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && self.nnz() == self.rows
            && (0..self.rows).all(|i| {
                let (idx, vals) = self.row(i);
                idx == [i] && vals == [1.0]
            })
    }

    /// Largest `|M - Mᵀ|` entry.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.triplets()
            .map(|(i, j, v)| (v - t.get(i, j)).abs())
            .chain(t.triplets().map(|(i, j, v)| (v - self.get(i, j)).abs()))
            .fold(0.0, f64::max)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kronecker(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix, LinalgError> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let nnz = a.nnz().checked_mul(b.nnz());
    let (Some(rows), Some(cols), Some(_)) = (rows, cols, nnz) else {
        return Err(LinalgError::IndexOverflow {
            rows: a.rows.saturating_mul(b.rows),
            cols: a.cols.saturating_mul(b.cols),
        });
    };
    let mut indptr = vec![0];
    let mut indices = Vec::with_capacity(a.nnz() * b.nnz());
    let mut values = Vec::with_capacity(a.nnz() * b.nnz());
    for i in 0..a.rows {
        let (ai, av) = a.row(i);
        for k in 0..b.rows {
            let (bi, bv) = b.row(k);
            for (&j, &x) in ai.iter().zip(av) {
                for (&l, &y) in bi.iter().zip(bv) {
                    indices.push(j * b.cols + l);
                    values.push(x * y);
                }
            }
            indptr.push(indices.len());
        }
    }
    Ok(SparseMatrix {
        rows,
        cols,
        indptr,
        indices,
        values,
    }
    .prune())
}

/// Square backward-difference operator: first row `e₀`, then `x_i − x_{i−1}`,
/// all multiplied by `scale`.
pub fn backward_difference(n: usize, scale: f64) -> Result<SparseMatrix, LinalgError> {
    if n < 2 {
        return Err(LinalgError::DimensionMismatch(format!(
            "backward difference needs n >= 2, got {n}"
        )));
    }
    let mut t = vec![(0, 0, scale)];
    for i in 1..n {
        t.push((i, i - 1, -scale));
        t.push((i, i, scale));
    }
    SparseMatrix::from_triplets(n, n, t)
}

/// Rectangular `(n−1) × n` difference operator with rows `x_{i+1} − x_i`.
pub fn difference(n: usize) -> Result<SparseMatrix, LinalgError> {
    if n < 2 {
        return Err(LinalgError::DimensionMismatch(format!(
            "difference operator needs n >= 2, got {n}"
        )));
    }
    SparseMatrix::from_triplets(n - 1, n, (0..n - 1).flat_map(|i| [(i, i, -1.0), (i, i + 1, 1.0)]))
}

/// Assemble `qscale·AᵀA + Λᵀ diag(w) Λ`.
pub fn normal_operator(
    a: &SparseMatrix,
    lambda_op: &SparseMatrix,
    w: &[f64],
    qscale: f64,
) -> Result<SparseMatrix, LinalgError> {
    if a.cols != lambda_op.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "A has {} columns but Λ has {}",
            a.cols, lambda_op.cols
        )));
    }
    if w.len() != lambda_op.rows {
        return Err(LinalgError::DimensionMismatch(format!(
            "weight vector has length {} but Λ has {} rows",
            w.len(),
            lambda_op.rows
        )));
    }
    if w.iter().any(|&v| !(v >= 0.0)) {
        return Err(LinalgError::InvalidOption("weights must be nonnegative".into()));
    }
    let ata = a.transpose().matmul(a)?;
    // BᵀB with B = diag(√w)Λ keeps every product bitwise symmetric.
    let root: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let weighted = lambda_op.scale_rows(&root);
    let ltwl = weighted.transpose().matmul(&weighted)?;
    ata.add_scaled(qscale, &ltwl, 1.0)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(a: &[f64], ar: usize, ac: usize, b: &[f64], bc: usize) -> Vec<f64> {
        let mut c = vec![0.0; ar * bc];
        for i in 0..ar {
            for k in 0..ac {
                for j in 0..bc {
                    c[i * bc + j] += a[i * ac + k] * b[k * bc + j];
                }
            }
        }
        c
    }

    fn dense_kron(a: &[f64], ar: usize, ac: usize, b: &[f64], br: usize, bc: usize) -> Vec<f64> {
        let (rows, cols) = (ar * br, ac * bc);
        let mut out = vec![0.0; rows * cols];
        for i in 0..ar {
            for j in 0..ac {
                for k in 0..br {
                    for l in 0..bc {
                        out[(i * br + k) * cols + j * bc + l] = a[i * ac + j] * b[k * bc + l];
                    }
                }
            }
        }
        out
    }

    fn random_sparse(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.random::<f64>() < density {
                    t.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        SparseMatrix::from_triplets(rows, cols, t).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = SparseMatrix::from_triplets(
            2,
            3,
            vec![(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, 1.0), (1, 1, -1.0)],
        )
        .unwrap();
        assert_eq!(m.row(0), (&[0usize, 2][..], &[2.0, 1.5][..]));
        assert_eq!(m.row(1).0.len(), 0);
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn backward_difference_examples() {
        let d = backward_difference(3, 1.0).unwrap();
        assert_eq!(d.mul_vec(&[1.0, 2.0, 3.0]), vec![1.0, 1.0, 1.0]);
        let d = backward_difference(2, 2.0).unwrap();
        assert_eq!(d.mul_vec(&[0.0, 1.0]), vec![0.0, 2.0]);
        assert!(backward_difference(1, 1.0).is_err());
        // Fracture layout: 2N+1 unknowns, crack row N+1 (1-based) deleted.
        let n = 100;
        let dbar = backward_difference(2 * n + 1, 1.0).unwrap().delete_rows(&[n]);
        assert_eq!((dbar.rows(), dbar.cols()), (2 * n, 2 * n + 1));
    }

    #[test]
    fn kronecker_examples() {
        let k = kronecker(&SparseMatrix::identity(2), &SparseMatrix::identity(3)).unwrap();
        assert_eq!(k, SparseMatrix::identity(6));
        let b = difference(4).unwrap();
        let k = kronecker(&SparseMatrix::diagonal(&[2.0]), &b).unwrap();
        assert_eq!(k, b.scale(2.0));
        let k = kronecker(&SparseMatrix::identity(4), &b).unwrap();
        assert_eq!((k.rows(), k.cols()), (12, 16));
        let oracle = dense_kron(&SparseMatrix::identity(4).to_dense(), 4, 4, &b.to_dense(), 3, 4);
        assert_eq!(k.to_dense(), oracle);
    }

    #[test]
    fn kronecker_rejects_overflow() {
        let big = SparseMatrix::zeros(1, usize::MAX / 2);
        let two = SparseMatrix::zeros(1, 4);
        assert!(matches!(kronecker(&big, &two), Err(LinalgError::IndexOverflow { .. })));
    }

    #[test]
    fn kronecker_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_sparse(&mut rng, 3, 2, 0.7);
            let b = random_sparse(&mut rng, 2, 3, 0.7);
            let c = random_sparse(&mut rng, 2, 4, 0.7);
            let d = random_sparse(&mut rng, 3, 2, 0.7);
            let lhs = kronecker(&a, &b).unwrap().matmul(&kronecker(&c, &d).unwrap()).unwrap();
            let rhs = kronecker(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap()).unwrap();
            for (x, y) in lhs.to_dense().iter().zip(rhs.to_dense()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normal_operator_examples() {
        let i2 = SparseMatrix::identity(2);
        let m = normal_operator(&i2, &i2, &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(m, SparseMatrix::diagonal(&[2.0, 2.0]));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_sparse(&mut rng, 5, 4, 0.8);
        let l = random_sparse(&mut rng, 3, 4, 0.8);
        let zero = normal_operator(&a, &l, &[0.0; 3], 0.7).unwrap();
        assert_eq!(zero, a.transpose().matmul(&a).unwrap().scale(0.7));

        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
        let q = 0.5;
        let m = normal_operator(&a, &l, &w, q).unwrap();
        let (ad, ld) = (a.to_dense(), l.to_dense());
        let mut oracle = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..5 {
                    s += q * ad[k * 4 + i] * ad[k * 4 + j];
                }
                for k in 0..3 {
                    s += ld[k * 4 + i] * w[k] * ld[k * 4 + j];
                }
                oracle[i * 4 + j] = s;
            }
        }
        for (x, y) in m.to_dense().iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(m.asymmetry(), 0.0);
        assert!(normal_operator(&a, &l, &[1.0], 1.0).is_err());
        assert!(normal_operator(&a, &SparseMatrix::identity(3), &[1.0; 3], 1.0).is_err());
    }

    #[test]
    fn matmul_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_sparse(&mut rng, 6, 5, 0.5);
        let b = random_sparse(&mut rng, 5, 7, 0.5);
        let c = a.matmul(&b).unwrap().to_dense();
        let oracle = dense_mul(&a.to_dense(), 6, 5, &b.to_dense(), 7);
        for (x, y) in c.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn parallel_and_sequential_matvec_agree_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_sparse(&mut rng, 5000, 300, 0.02);
        let x: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert_eq!(a.mul_vec(&x), a.mul_vec_seq(&x));
    }

    proptest! {
        #[test]
        fn transpose_is_an_involution(seed in 0u64..1000, rows in 1usize..12, cols in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_sparse(&mut rng, rows, cols, 0.4);
            prop_assert_eq!(m.transpose().transpose(), m.clone());
            for i in 0..rows {
                let (idx, _) = m.row(i);
                prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(idx.iter().all(|&j| j < cols));
            }
        }
    }
}
