//! Profile (envelope) Cholesky factorization after reverse Cuthill-McKee
//! reordering. Fill is confined to each row's envelope, which RCM keeps small
//! for the banded kernel matrices produced by the Laplace builder.

use std::collections::VecDeque;

use super::CsrMatrix;
use crate::{CosegError, Result};

/// Reverse Cuthill-McKee ordering of a structurally symmetric matrix.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(m: &CsrMatrix) -> Vec<usize> {
    let n = m.n_rows();
    let degree: Vec<usize> = (0..n).map(|i| m.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(m, seed, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = m
                .row(v)
                .0
                .iter()
                .copied()
                .filter(|&u| !visited[u])
                .collect();
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

/// Approximate a peripheral vertex of `seed`'s component by repeated BFS to the
/// farthest level (George-Liu).
fn pseudo_peripheral(m: &CsrMatrix, seed: usize, degree: &[usize]) -> usize {
    let n = m.n_rows();
    let mut current = seed;
    let mut best_ecc = 0;
    for _ in 0..8 {
        let mut level = vec![usize::MAX; n];
        level[current] = 0;
        let mut queue = VecDeque::from([current]);
        let mut last = current;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &u in m.row(v).0 {
                if level[u] == usize::MAX {
                    level[u] = level[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        let ecc = level[last];
        if ecc <= best_ecc && current != seed {
            break;
        }
        best_ecc = ecc;
        // Among the deepest level pick the lowest degree.
        let next = (0..n)
            .filter(|&u| level[u] == ecc)
            .min_by_key(|&u| (degree[u], u))
            .unwrap_or(last);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// `L Lᵀ = P M Pᵀ` with `L` stored row-wise over each row's envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factor the symmetric positive definite `m + diag(shift)`.
    pub fn factor(m: &CsrMatrix, diag_shift: &[f64]) -> Result<Self> {
        let n = m.n_rows();
        let perm = reverse_cuthill_mckee(m);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first: Vec<usize> = (0..n)
            .map(|i| {
                m.row(perm[i])
                    .0
                    .iter()
                    .map(|&c| inv[c])
                    .min()
                    .unwrap_or(i)
                    .min(i)
            })
            .collect();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            let old = perm[i];
            let (cols, vals) = m.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= i {
                    data[offset[i] + j - first[i]] += v;
                }
            }
            data[offset[i] + i - first[i]] += diag_shift[old];
        }

        for i in 0..n {
            let (fi, oi) = (first[i], offset[i]);
            for j in fi..i {
                let (fj, oj) = (first[j], offset[j]);
                let k0 = fi.max(fj);
                let (head, row_i) = data.split_at_mut(oi);
                let row_j = &head[oj..oj + (j - fj + 1)];
                let s = super::dot(&row_i[k0 - fi..j - fi], &row_j[k0 - fj..j - fj]);
                row_i[j - fi] = (row_i[j - fi] - s) / row_j[j - fj];
            }
            let row_i = &mut data[oi..oi + (i - fi + 1)];
            let s = super::dot(&row_i[..i - fi], &row_i[..i - fi]);
            let pivot = row_i[i - fi] - s;
            if pivot.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(CosegError::NotPositiveDefinite { row: i, pivot });
            }
            row_i[i - fi] = pivot.sqrt();
        }
        Ok(EnvelopeCholesky {
            n,
            perm,
            first,
            offset,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L`.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.offset[i]..self.offset[i + 1]]
    }

    /// Solve `(M + diag(shift)) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = self.row(i);
            let s = super::dot(&row[..i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            y[i] /= row[i - fi];
            let yi = y[i];
            super::axpy(-yi, &row[..i - fi], &mut y[fi..i]);
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
