//! Symmetric sparse storage, reverse Cuthill–McKee ordering and an envelope
//! (skyline) Cholesky factorization.

use std::collections::VecDeque;

use crate::error::{Result, VemError};

/// Compressed sparse rows of a symmetric matrix (both triangles stored).
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets; duplicates are summed in the order given.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps per-entry summation order fixed
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// `max |A - Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

fn bfs_levels(a: &CsrMatrix, start: usize, blocked: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = blocked.to_vec();
    seen[start] = true;
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for (j, _) in a.row(v) {
                if !seen[j] {
                    seen[j] = true;
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

/// Reverse Cuthill–McKee permutation: `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| {
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            out.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    };
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start: min-degree node of the deepest BFS level
        let mut start = seed;
        let mut depth = 0;
        for _ in 0..4 {
            let levels = bfs_levels(a, start, &visited);
            let last = levels.last().unwrap();
            if levels.len() <= depth {
                break;
            }
            depth = levels.len();
            start = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        }
        bfs(start, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// Envelope Cholesky factor `L` of `P A Pᵀ` (row-wise skyline storage).
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    n: usize,
    perm: Vec<usize>,
    /// first stored column of each permuted row
    first: Vec<usize>,
    /// offset of row `i` in `data`; row `i` holds columns `first[i]..=i`
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n;
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (j_old, _) in a.row(old) {
                let j = inv[j_old];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for old in 0..n {
            let i = inv[old];
            for (j_old, v) in a.row(old) {
                let j = inv[j_old];
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (ri, rj) = (start[i], start[j]);
                let mut s = data[ri + j - fi];
                for k in lo..j {
                    s -= data[ri + k - fi] * data[rj + k - fj];
                }
                if j < i {
                    data[ri + j - fi] = s / data[rj + j - fj];
                } else {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(VemError::Solver(format!(
                            "Cholesky breakdown at pivot {i} of {n} (value {s:.3e}); \
                             the reduced system is not numerically positive definite, \
                             consider the orthonormalized polynomial basis"
                        )));
                    }
                    data[ri + j - fi] = s.sqrt();
                }
            }
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            data,
        })
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Solves `A x = b` in the original ordering.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let r = self.start[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.data[r + k - fi] * y[k];
            }
            y[i] = s / self.data[r + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let r = self.start[i];
            y[i] /= self.data[r + i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.data[r + k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Extreme eigenvalue estimates by power iteration on `A` and on `A⁻¹`.
pub fn extreme_eigenvalues(a: &CsrMatrix, chol: &SkylineCholesky, iterations: usize) -> (f64, f64) {
    let n = a.n;
    if n == 0 {
        return (0.0, 0.0);
    }
    // deterministic start vector
    let init: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut x: Vec<f64> = init.iter().map(|v| v / norm(&init)).collect();
    let mut lmax = 0.0;
    for _ in 0..iterations {
        let y = a.mul_vec(&x);
        lmax = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ny = norm(&y);
        if ny == 0.0 {
            break;
        }
        x = y.iter().map(|v| v / ny).collect();
    }
    let mut x: Vec<f64> = init.iter().map(|v| v / norm(&init)).collect();
    let mut mu = 0.0;
    for _ in 0..iterations {
        let y = chol.solve(&x);
        mu = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ny = norm(&y);
        x = y.iter().map(|v| v / ny).collect();
    }
    let lmin = if mu > 0.0 { 1.0 / mu } else { 0.0 };
    (lmin, lmax)
}
