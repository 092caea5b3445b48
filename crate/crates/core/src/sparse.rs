//! Sparse symmetric linear algebra: triplet assembly, LDL^T factorization and
//! reverse Cuthill-McKee ordering.
//!
//! The factorization is simplicial, unpivoted LDL^T over an elimination tree,
//! suitable for positive definite and quasi-definite systems. Refactorization
//! is cheap enough that callers refactor whenever values change.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("matrix is singular: pivot {pivot:.3e} at row {row}")]
    Singular { row: usize, pivot: f64 },
    #[error("dimension mismatch: matrix is {n}x{n}, rhs has length {rhs}")]
    Dimension { n: usize, rhs: usize },
}

/// Symmetric sparse matrix stored as the upper triangle in compressed columns.
#[derive(Debug, Clone)]
pub struct SymmetricSparse {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricSparse {
    /// Build from (row, col, value) triplets; duplicates are summed and only
    /// the upper triangle (row <= col) of the symmetric pattern is kept.
    /// Entries with row > col are mirrored.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        // store as (col, row) with row <= col, sorted column-major
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .iter()
            .map(|&(r, c, v)| if r <= c { (c, r, v) } else { (r, c, v) })
            .collect();
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(c, r, v) in &entries {
            if last == Some((c, r)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((c, r));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        SymmetricSparse {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// y = A x with the full symmetric matrix implied by the stored triangle.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                let v = self.values[p];
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
        y
    }

    /// Relative symmetry defect is zero by construction; this returns the
    /// largest stored magnitude, used for scaling tolerances.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn permuted(&self, perm: &[usize]) -> SymmetricSparse {
        // perm maps new index -> old index
        let n = self.n;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut triplets = Vec::with_capacity(self.values.len());
        for c in 0..n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                triplets.push((inv[r], inv[c], self.values[p]));
            }
        }
        SymmetricSparse::from_triplets(n, &triplets)
    }

    /// Adjacency lists of the matrix graph (off-diagonal pattern).
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for c in 0..self.n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                if r != c {
                    adj[r].push(c);
                    adj[c].push(r);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Reverse Cuthill-McKee ordering; returns perm with perm[new] = old.
pub fn reverse_cuthill_mckee(mat: &SymmetricSparse) -> Vec<usize> {
    let n = mat.n();
    let adj = mat.adjacency();
    let deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    // process components from minimum-degree seeds for a banded profile
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_unstable_by_key(|&v| (deg[v], v));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_unstable_by_key(|&u| (deg[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// LDL^T factorization of a symmetric matrix under a fill-reducing permutation.
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    // L is unit lower triangular, compressed columns
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Factor P A P^T = L D L^T. `pivot_tol` is the absolute threshold below
    /// which a pivot is declared singular (scaled by the matrix magnitude).
    pub fn new(mat: &SymmetricSparse, pivot_tol: f64) -> Result<Self, SparseError> {
        let perm = reverse_cuthill_mckee(mat);
        Self::with_permutation(mat, perm, pivot_tol)
    }

    pub fn with_permutation(
        mat: &SymmetricSparse,
        perm: Vec<usize>,
        pivot_tol: f64,
    ) -> Result<Self, SparseError> {
        let a = mat.permuted(&perm);
        let n = a.n;
        let scale = a.max_abs().max(1.0);
        let tol = pivot_tol * scale;

        // symbolic: elimination tree and column counts
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for p in a.col_ptr[k]..a.col_ptr[k + 1] {
                let mut i = a.row_idx[p];
                while i < k && flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz_l = lp[n];
        let mut li = vec![0usize; nnz_l];
        let mut lx = vec![0.0f64; nnz_l];
        let mut d = vec![0.0f64; n];

        // numeric (up-looking)
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut lfill = vec![0usize; n]; // entries filled so far per column
        for f in flag.iter_mut() {
            *f = usize::MAX;
        }
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in a.col_ptr[k]..a.col_ptr[k + 1] {
                let mut i = a.row_idx[p];
                y[i] += a.values[p];
                let mut len = 0usize;
                while i < k && flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for t in top..n {
                let i = pattern[t];
                let yi = y[i];
                y[i] = 0.0;
                for p in lp[i]..lp[i] + lfill[i] {
                    y[li[p]] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                let slot = lp[i] + lfill[i];
                li[slot] = k;
                lx[slot] = lki;
                lfill[i] += 1;
            }
            if d[k].abs() <= tol {
                return Err(SparseError::Singular {
                    row: perm[k],
                    pivot: d[k],
                });
            }
        }
        Ok(LdlFactor {
            n,
            perm,
            lp,
            li,
            lx,
            d,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        if b.len() != self.n {
            return Err(SparseError::Dimension {
                n: self.n,
                rhs: b.len(),
            });
        }
        let mut x = vec![0.0; self.n];
        for k in 0..self.n {
            x[k] = b[self.perm[k]];
        }
        // L y = b
        for k in 0..self.n {
            let xk = x[k];
            if xk != 0.0 {
                for p in self.lp[k]..self.lp[k + 1] {
                    x[self.li[p]] -= self.lx[p] * xk;
                }
            }
        }
        for k in 0..self.n {
            x[k] /= self.d[k];
        }
        // L^T z = y
        for k in (0..self.n).rev() {
            let mut acc = x[k];
            for p in self.lp[k]..self.lp[k + 1] {
                acc -= self.lx[p] * x[self.li[p]];
            }
            x[k] = acc;
        }
        let mut out = vec![0.0; self.n];
        for k in 0..self.n {
            out[self.perm[k]] = x[k];
        }
        Ok(out)
    }

    /// Solve with one step of iterative refinement against `mat`.
    pub fn solve_refined(&self, mat: &SymmetricSparse, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut x = self.solve(b)?;
        let ax = mat.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(ax.iter()).map(|(bi, ai)| bi - ai).collect();
        let dx = self.solve(&r)?;
        for i in 0..x.len() {
            x[i] += dx[i];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SymmetricSparse {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SymmetricSparse::from_triplets(n, &t)
    }

    #[test]
    fn solves_spd_system() {
        let a = laplacian_1d(50);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x_true);
        let f = LdlFactor::new(&a, 1e-14).unwrap();
        let x = f.solve(&b).unwrap();
        let err = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-10, "err = {err}");
    }

    #[test]
    fn quasi_definite_with_negative_block() {
        // [[ 2, 1], [1, -3]] is quasi-definite; LDL must handle the sign flip
        let a = SymmetricSparse::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, -3.0)]);
        let f = LdlFactor::new(&a, 1e-14).unwrap();
        let x = f.solve(&[1.0, 2.0]).unwrap();
        let ax = a.mul_vec(&x);
        assert!((ax[0] - 1.0).abs() < 1e-12 && (ax[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_reports_offending_row() {
        let a = SymmetricSparse::from_triplets(3, &[(0, 0, 1.0), (1, 1, 0.0), (2, 2, 1.0)]);
        match LdlFactor::new(&a, 1e-12) {
            Err(SparseError::Singular { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a = SymmetricSparse::from_triplets(2, &[(0, 0, 1.0), (0, 0, 1.0), (1, 0, 0.5)]);
        let y = a.mul_vec(&[1.0, 1.0]);
        assert_eq!(y, vec![2.5, 0.5]);
    }
}
