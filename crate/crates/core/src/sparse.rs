//! Sparse matrices, LU factorizations and regularized saddle-point solves.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};

use crate::EllipticError;

/// Triplet accumulator.
#[derive(Clone, Debug, Default)]
pub struct Builder {
    nrows: usize,
    ncols: usize,
    t: Vec<(usize, usize, f64)>,
}

impl Builder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Builder { nrows, ncols, t: Vec::new() }
    }

    /// Adds `v` at `(r, c)`; duplicates are summed.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.nrows && c < self.ncols);
        if v != 0.0 {
            self.t.push((r, c, v));
        }
    }

    /// Adds every entry of `m` shifted by `(r0, c0)`, scaled by `s`.
    pub fn add_block(&mut self, m: &Csr, r0: usize, c0: usize, s: f64) {
        for r in 0..m.nrows {
            for k in m.indptr[r]..m.indptr[r + 1] {
                self.add(r0 + r, c0 + m.indices[k], s * m.values[k]);
            }
        }
    }

    /// Adds the transpose of `m` shifted by `(r0, c0)`, scaled by `s`.
    pub fn add_block_transpose(&mut self, m: &Csr, r0: usize, c0: usize, s: f64) {
        for r in 0..m.nrows {
            for k in m.indptr[r]..m.indptr[r + 1] {
                self.add(r0 + m.indices[k], c0 + r, s * m.values[k]);
            }
        }
    }

    pub fn build(mut self) -> Csr {
        self.t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.t.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.t.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        Csr { nrows: self.nrows, ncols: self.ncols, indptr, indices, values }
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| (self.indptr[r]..self.indptr[r + 1]).map(|k| self.values[k] * x[self.indices[k]]).sum())
            .collect()
    }

    /// `y = A^T x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.values[k] * xr;
            }
        }
        y
    }

    /// Row `r` as `(column, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    /// Largest absolute entry of row `r`.
    pub fn row_max(&self, r: usize) -> f64 {
        self.row(r).fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `A^T diag(w) A`.
    pub fn gram(&self, w: &[f64]) -> Csr {
        let mut b = Builder::new(self.ncols, self.ncols);
        for r in 0..self.nrows {
            if w[r] == 0.0 {
                continue;
            }
            let row: Vec<(usize, f64)> = self.row(r).collect();
            for &(c1, v1) in &row {
                for &(c2, v2) in &row {
                    b.add(c1, c2, w[r] * v1 * v2);
                }
            }
        }
        b.build()
    }

    fn to_faer(&self) -> SparseColMat<usize, f64> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push(Triplet::new(r, c, v));
            }
        }
        SparseColMat::<usize, f64>::try_new_from_triplets(self.nrows, self.ncols, &t).expect("valid sparse structure")
    }
}

/// Sparse LU factorization of a square matrix.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SparseLu(n = {})", self.n)
    }
}

impl SparseLu {
    /// Factors `a`. Factorization and solves run single-threaded so results are reproducible.
    pub fn new(a: &Csr) -> Result<Self, EllipticError> {
        assert_eq!(a.nrows, a.ncols);
        faer::set_global_parallelism(Par::Seq);
        let lu = a.to_faer().sp_lu().map_err(|e| EllipticError::Singular(format!("{e:?}")))?;
        Ok(SparseLu { n: a.nrows, lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }
}

/// Solver for a possibly rank-deficient but consistent symmetric saddle-point system
/// `K = [A B^T; B 0]`: factors `K - δ [0 0; 0 I]` and refines against `K`.
#[derive(Debug)]
pub struct RegularizedSolver {
    k: Csr,
    lu: SparseLu,
    k_norm: f64,
    tol: f64,
    max_iter: usize,
}

impl RegularizedSolver {
    /// `primal` is the size of the leading block; `delta` multiplies the identity on the trailing block.
    pub fn new(k: Csr, primal: usize, delta: f64, tol: f64) -> Result<Self, EllipticError> {
        let mut b = Builder::new(k.nrows, k.ncols);
        b.add_block(&k, 0, 0, 1.0);
        for r in primal..k.nrows {
            b.add(r, r, -delta);
        }
        let lu = SparseLu::new(&b.build())?;
        let k_norm = (0..k.nrows).map(|r| k.row(r).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        Ok(RegularizedSolver { k, lu, k_norm, tol, max_iter: 30 })
    }

    /// Solves `K x = b` to normwise backward error `tol`, `|b - Kx| / (|K||x| + |b|)`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, EllipticError> {
        let bnorm = norm_inf(rhs);
        let mut x = self.lu.solve(rhs);
        let mut res = 0.0;
        for _ in 0..self.max_iter {
            let kx = self.k.matvec(&x);
            let r: Vec<f64> = rhs.iter().zip(&kx).map(|(a, b)| a - b).collect();
            let scale = (self.k_norm * norm_inf(&x) + bnorm).max(f64::MIN_POSITIVE);
            res = norm_inf(&r) / scale;
            if res <= self.tol {
                return Ok(x);
            }
            let dx = self.lu.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        if res <= self.tol * 1e3 {
            Ok(x)
        } else {
            Err(EllipticError::NonConvergence { residual: res })
        }
    }

    pub fn matrix(&self) -> &Csr {
        &self.k
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
