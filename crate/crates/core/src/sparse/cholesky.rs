//! Envelope (skyline) Cholesky with reverse Cuthill–McKee ordering.

use std::collections::VecDeque;

use super::SparseMatrix;
use crate::error::LinalgError;

/// Relative pivot size below which the factorization is declared broken.
const PIVOT_RTOL: f64 = 1e-14;

/// Lower-triangular factor `P M Pᵀ = L Lᵀ` stored row by row over the
/// envelope of the permuted matrix.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factor `M + shift·I` for symmetric `M`.
    pub fn factor(m: &SparseMatrix, shift: f64) -> Result<Self, LinalgError> {
        if m.rows() != m.cols() {
            return Err(LinalgError::DimensionMismatch(format!(
                "Cholesky needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let perm = rcm_order(m);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in m.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj < pi {
                first[pi] = first[pi].min(pj);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0usize);
        for i in 0..n {
            let len = i - first[i] + 1;
            let next = start[i]
                .checked_add(len)
                .ok_or(LinalgError::IndexOverflow { rows: n, cols: n })?;
            start.push(next);
        }
        let mut values = vec![0.0; start[n]];
        let mut orig_diag = vec![shift; n];
        for (i, j, v) in m.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj <= pi {
                values[start[pi] + pj - first[pi]] += v;
                if pi == pj {
                    orig_diag[pi] += v;
                }
            }
        }
        for i in 0..n {
            values[start[i] + i - first[i]] += shift;
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = start[j];
                let mut s = values[row_i + j - fi];
                for k in k0..j {
                    s -= values[row_i + k - fi] * values[row_j + k - fj];
                }
                values[row_i + j - fi] = s / values[row_j + j - fj];
            }
            let mut d = values[row_i + i - fi];
            for k in fi..i {
                let l = values[row_i + k - fi];
                d -= l * l;
            }
            let scale = orig_diag[i].abs().max(f64::MIN_POSITIVE);
            if !d.is_finite() || d <= PIVOT_RTOL * scale || orig_diag[i] <= 0.0 {
                return Err(LinalgError::FactorizationBreakdown {
                    pivot: perm[i],
                    value: d,
                });
            }
            values[row_i + i - fi] = d.sqrt();
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// Envelope size a factorization of `m` would need, without factoring.
    pub fn predicted_envelope(m: &SparseMatrix) -> usize {
        let perm = rcm_order(m);
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..perm.len()).collect();
        for (i, j, _) in m.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj < pi {
                first[pi] = first[pi].min(pj);
            }
        }
        first.iter().enumerate().map(|(i, &f)| i - f + 1).sum()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "rhs length mismatch");
        let mut y: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Reverse Cuthill–McKee ordering of the symmetrized pattern of `m`.
pub(crate) fn rcm_order(m: &SparseMatrix) -> Vec<usize> {
    let n = m.rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in m.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        if adj[seed].is_empty() {
            visited[seed] = true;
            order.push(seed);
            continue;
        }
        let root = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_by_key(|&u| (degree[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::from([root]);
    level[root] = 0;
    let mut visited = vec![root];
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        depth = depth.max(level[v]);
        for &u in &adj[v] {
            if level[u] == usize::MAX {
                level[u] = level[v] + 1;
                visited.push(u);
                queue.push_back(u);
            }
        }
    }
    let last: Vec<usize> = visited.into_iter().filter(|&v| level[v] == depth).collect();
    (last, depth)
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = seed;
    let (mut last, mut depth) = bfs_levels(root, adj);
    for _ in 0..8 {
        let Some(&cand) = last.iter().min_by_key(|&&v| (degree[v], v)) else {
            break;
        };
        let (next_last, next_depth) = bfs_levels(cand, adj);
        if next_depth <= depth {
            break;
        }
        root = cand;
        last = next_last;
        depth = next_depth;
    }
    root
}
