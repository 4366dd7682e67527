//! Direct solver for sparse Z-matrix systems (M-matrix candidates).
//!
//! A Z-matrix (nonpositive off-diagonal) is a nonsingular M-matrix exactly
//! when Gaussian elimination without pivoting runs to completion with every
//! pivot positive; the Schur complements stay Z-matrices along the way and
//! the factors are well conditioned. That makes a no-pivot factorization both
//! the solver and the inverse-positivity test. Symmetric permutations
//! preserve the M-matrix property, so the rows are first reordered by reverse
//! Cuthill-McKee to get a narrow band; factorization cost is
//! `O(n * lower_bw * upper_bw)`.

use std::collections::VecDeque;

use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum FactorError {
    /// A positive off-diagonal entry: not a Z-matrix.
    NotZMatrix { row: usize, col: usize },
    /// Elimination hit a nonpositive pivot: the matrix is not a nonsingular
    /// M-matrix.
    NonPositivePivot { index: usize, pivot: f64 },
}

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// `order[k]` is the original index placed at position `k`.
pub fn reverse_cuthill_mckee(m: &CsrMatrix) -> Vec<usize> {
    let n = m.n();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, v) in m.triplets() {
        if i != j && v != 0.0 {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            next.sort_by_key(|&v| (degree[v], v));
            for v in next {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

// George-Liu style search: repeatedly jump to a min-degree node of the last
// BFS level while the eccentricity grows.
fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut current = seed;
    let mut ecc = 0;
    loop {
        let (levels, last) = bfs_levels(current, adj);
        let candidate = last
            .into_iter()
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(current);
        if levels <= ecc || candidate == current {
            return current;
        }
        ecc = levels;
        current = candidate;
    }
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut seen = std::collections::HashSet::from([start]);
    let mut frontier = vec![start];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in &adj[u] {
                if seen.insert(v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// Banded LU factors of a permuted Z-matrix, computed without pivoting.
#[derive(Debug, Clone)]
pub struct MMatrixLu {
    n: usize,
    lower: usize,
    upper: usize,
    /// `band[i * width + (j + lower - i)]` holds entry `(i, j)` of the
    /// permuted matrix, overwritten by `L` (unit diagonal, below) and `U`.
    band: Vec<f64>,
    /// position of each original index in the permuted order
    position: Vec<usize>,
    order: Vec<usize>,
}

impl MMatrixLu {
    pub fn factor(m: &CsrMatrix) -> Result<Self, FactorError> {
        for (i, j, v) in m.triplets() {
            if i != j && v > 0.0 {
                return Err(FactorError::NotZMatrix { row: i, col: j });
            }
        }
        let n = m.n();
        let order = reverse_cuthill_mckee(m);
        let mut position = vec![0; n];
        for (k, &i) in order.iter().enumerate() {
            position[i] = k;
        }

        let (mut lower, mut upper) = (0usize, 0usize);
        for (i, j, v) in m.triplets() {
            if v == 0.0 {
                continue;
            }
            let (pi, pj) = (position[i], position[j]);
            if pj < pi {
                lower = lower.max(pi - pj);
            } else {
                upper = upper.max(pj - pi);
            }
        }
        let width = lower + upper + 1;
        let mut band = vec![0.0; n * width];
        let mut scale = vec![0.0f64; n];
        for (i, j, v) in m.triplets() {
            if v == 0.0 {
                continue;
            }
            let (pi, pj) = (position[i], position[j]);
            band[pi * width + (pj + lower - pi)] += v;
            if i == j {
                scale[pi] = v.abs();
            }
        }

        for k in 0..n {
            let pivot = band[k * width + lower];
            // Relative floor: a pivot that cancelled down to round-off level
            // marks a (numerically) singular M-matrix.
            if !(pivot > 1e-13 * scale[k].max(f64::MIN_POSITIVE)) {
                return Err(FactorError::NonPositivePivot {
                    index: order[k],
                    pivot,
                });
            }
            let row_end = (k + upper).min(n - 1);
            for i in k + 1..=(k + lower).min(n - 1) {
                let ik = i * width + (k + lower - i);
                let factor = band[ik] / pivot;
                if factor == 0.0 {
                    continue;
                }
                band[ik] = factor;
                for j in k + 1..=row_end {
                    let kj = band[k * width + (j + lower - k)];
                    if kj != 0.0 {
                        band[i * width + (j + lower - i)] -= factor * kj;
                    }
                }
            }
        }

        Ok(Self {
            n,
            lower,
            upper,
            band,
            position,
            order,
        })
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    /// Smallest pivot of the factorization (positive by construction).
    pub fn min_pivot(&self) -> f64 {
        let width = self.lower + self.upper + 1;
        (0..self.n)
            .map(|k| self.band[k * width + self.lower])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, lower, upper) = (self.n, self.lower, self.upper);
        let width = lower + upper + 1;
        let mut y: Vec<f64> = self.order.iter().map(|&i| rhs[i]).collect();
        for i in 0..n {
            let start = i.saturating_sub(lower);
            let mut acc = y[i];
            for j in start..i {
                acc -= self.band[i * width + (j + lower - i)] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let end = (i + upper).min(n - 1);
            let mut acc = y[i];
            for j in i + 1..=end {
                acc -= self.band[i * width + (j + lower - i)] * y[j];
            }
            y[i] = acc / self.band[i * width + lower];
        }
        let mut x = vec![0.0; n];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = y[self.position[i]];
        }
        x
    }
}

/// Solves `m x = rhs` with one step of iterative refinement.
pub fn solve_m_matrix(m: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>, FactorError> {
    let lu = MMatrixLu::factor(m)?;
    let mut x = lu.solve(rhs);
    let mx = m.mul_vec(&x);
    let residual: Vec<f64> = rhs.iter().zip(&mx).map(|(b, v)| b - v).collect();
    let correction = lu.solve(&residual);
    for (xi, ci) in x.iter_mut().zip(correction) {
        *xi += ci;
    }
    Ok(x)
}
