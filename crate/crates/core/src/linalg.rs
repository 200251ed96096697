//! Small sparse-matrix type and the saddle-point factorization used by the
//! solvers. Factorizations are delegated to faer's sparse LU.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> SparseMatrix {
        self.entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
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
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        let mut t = TripletBuilder::with_capacity(n, n, n);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        t.build()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut t = TripletBuilder::new(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        t.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates `(row, col, value)` over stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.indptr[row]..self.indptr[row + 1];
        match self.indices[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k] * x[self.indices[k]])
                    .sum()
            })
            .collect()
    }

    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[self.indices[k]] += self.values[k] * yr;
            }
        }
        out
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// `self + alpha * other`, both of the same shape.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for (r, c, v) in self.iter() {
            t.push(r, c, v);
        }
        for (r, c, v) in other.iter() {
            t.push(r, c, alpha * v);
        }
        t.build()
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (r, c, v) in self.iter() {
            t.push(c, r, v);
        }
        t.build()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.iter() {
            out[r][c] += v;
        }
        out
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }
}

/// LU factorization of the block system `[H Bᵀ; B 0]` (or of `H` alone when
/// there is no constraint block).
pub struct SaddleSolver {
    n: usize,
    m: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    symbolic: SymbolicLu<usize>,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SaddleSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleSolver")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish()
    }
}

fn block_matrix(h: &SparseMatrix, b: Option<&SparseMatrix>) -> Result<SparseColMat<usize, f64>> {
    let n = h.nrows();
    assert_eq!(h.ncols(), n);
    let m = b.map_or(0, |b| b.nrows());
    let mut trip = Vec::with_capacity(h.nnz() + 2 * b.map_or(0, |b| b.nnz()));
    for (r, c, v) in h.iter() {
        trip.push(Triplet::new(r, c, v));
    }
    if let Some(b) = b {
        assert_eq!(b.ncols(), n);
        for (r, c, v) in b.iter() {
            trip.push(Triplet::new(n + r, c, v));
            trip.push(Triplet::new(c, n + r, v));
        }
    }
    SparseColMat::<usize, f64>::try_new_from_triplets(n + m, n + m, &trip)
        .map_err(|e| Error::NumericalBreakdown(format!("sparse assembly: {e:?}")))
}

fn numeric(symbolic: &SymbolicLu<usize>, mat: &SparseColMat<usize, f64>) -> Result<Lu<usize, f64>> {
    Lu::try_new_with_symbolic(symbolic.clone(), mat.as_ref())
        .map_err(|e| Error::NumericalBreakdown(format!("sparse LU: {e:?}")))
}

impl SaddleSolver {
    pub fn new(h: &SparseMatrix, b: Option<&SparseMatrix>) -> Result<Self> {
        let mat = block_matrix(h, b)?;
        let symbolic = SymbolicLu::try_new(mat.symbolic())
            .map_err(|e| Error::NumericalBreakdown(format!("sparse LU analysis: {e:?}")))?;
        let lu = numeric(&symbolic, &mat)?;
        Ok(Self {
            n: h.nrows(),
            m: b.map_or(0, |b| b.nrows()),
            col_ptr: mat.symbolic().col_ptr().to_vec(),
            row_idx: mat.symbolic().row_idx().to_vec(),
            symbolic,
            lu,
        })
    }

    /// Factorizes a new matrix, reusing the symbolic analysis when the
    /// sparsity pattern is unchanged.
    pub fn refactor(self, h: &SparseMatrix, b: Option<&SparseMatrix>) -> Result<Self> {
        let mat = block_matrix(h, b)?;
        if mat.symbolic().col_ptr() != self.col_ptr.as_slice()
            || mat.symbolic().row_idx() != self.row_idx.as_slice()
        {
            return Self::new(h, b);
        }
        let lu = numeric(&self.symbolic, &mat)?;
        Ok(Self { lu, ..self })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves for `(x, p)` with `H x + Bᵀ p = f`, `B x = g`.
    pub fn solve(&self, f: &[f64], g: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
        assert_eq!(f.len(), self.n);
        let rhs = Col::<f64>::from_fn(self.n + self.m, |i| {
            if i < self.n {
                f[i]
            } else {
                g.map_or(0.0, |g| g[i - self.n])
            }
        });
        let sol = self.lu.solve(&rhs);
        let x: Vec<f64> = (0..self.n).map(|i| sol[i]).collect();
        let p: Vec<f64> = (0..self.m).map(|i| sol[self.n + i]).collect();
        if x.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown(
                "non-finite entries in linear solve".into(),
            ));
        }
        Ok((x, p))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}
