// SPDX-License-Identifier: Apache-2.0

//! Compressed sparse column storage, block assembly and a reusable sparse LU.

mod lu;
pub mod mm;

pub use lu::{factorize, ColumnOrdering, FactorOptions, Factorization, Singularity};

use rayon::prelude::*;

use crate::dense::DenseBlock;
use crate::error::{Error, Result};

/// Compressed sparse column matrix with sorted, duplicate-free row indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

/// Accumulates `(row, col, value)` stamps; duplicates are summed on build.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    /// Stamps `value` into a symmetric two-terminal pattern: `+v` on the
    /// diagonals, `-v` off-diagonal. `None` is the ground reference.
    pub fn stamp_pair(&mut self, a: Option<usize>, b: Option<usize>, value: f64) {
        if let Some(a) = a {
            self.push(a, a, value);
        }
        if let Some(b) = b {
            self.push(b, b, value);
        }
        if let (Some(a), Some(b)) = (a, b) {
            self.push(a, b, -value);
            self.push(b, a, -value);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(self) -> Result<SparseMatrix> {
        SparseMatrix::from_triplets(self.nrows, self.ncols, &self.entries)
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
            symmetric: nrows == ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        col_ptr.push(0);
        for (i, &v) in d.iter().enumerate() {
            if v != 0.0 {
                row_idx.push(i);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        SparseMatrix {
            nrows: n,
            ncols: n,
            col_ptr,
            row_idx,
            values,
            symmetric: true,
        }
    }

    /// Assembles from coordinate triplets, summing duplicates and dropping
    /// entries that cancel to exactly zero.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, v) in entries {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfBounds {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
        let mut counts = vec![0usize; ncols + 1];
        for &(_, c, _) in entries {
            counts[c + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; entries.len()];
        let mut vals = vec![0.0; entries.len()];
        for &(r, c, v) in entries {
            let slot = next[c];
            rows[slot] = r;
            vals[slot] = v;
            next[c] += 1;
        }

        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        col_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..ncols {
            scratch.clear();
            scratch.extend((counts[j]..counts[j + 1]).map(|p| (rows[p], vals[p])));
            scratch.sort_unstable_by_key(|&(r, _)| r);
            let mut k = 0;
            while k < scratch.len() {
                let r = scratch[k].0;
                let mut sum = 0.0;
                while k < scratch.len() && scratch[k].0 == r {
                    sum += scratch[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    row_idx.push(r);
                    values.push(sum);
                }
            }
            col_ptr.push(row_idx.len());
        }
        let mut m = SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
            symmetric: false,
        };
        m.symmetric = m.is_symmetric(0.0);
        Ok(m)
    }

    pub fn from_dense(d: &DenseBlock) -> Self {
        let mut t = Vec::new();
        for j in 0..d.ncols() {
            for i in 0..d.nrows() {
                let v = d[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), &t).expect("dense entries are in range")
    }

    /// Assembles a block matrix. `blocks[i][j]` is an optional `(matrix,
    /// scale)` pair; empty blocks are zero. Row heights and column widths
    /// are taken from `row_sizes` / `col_sizes`.
    pub fn from_blocks(
        row_sizes: &[usize],
        col_sizes: &[usize],
        blocks: &[Vec<Option<(&SparseMatrix, f64)>>],
    ) -> Result<Self> {
        let row_off: Vec<usize> = offsets(row_sizes);
        let col_off: Vec<usize> = offsets(col_sizes);
        let mut t = Vec::new();
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, blk) in row.iter().enumerate() {
                if let Some((m, s)) = blk {
                    if m.nrows != row_sizes[bi] || m.ncols != col_sizes[bj] {
                        return Err(Error::dims(
                            "SparseMatrix::from_blocks",
                            format!("{}x{}", row_sizes[bi], col_sizes[bj]),
                            format!("{}x{}", m.nrows, m.ncols),
                        ));
                    }
                    for (r, c, v) in m.iter() {
                        t.push((r + row_off[bi], c + col_off[bj], v * s));
                    }
                }
            }
        }
        Self::from_triplets(*row_off.last().unwrap(), *col_off.last().unwrap(), &t)
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

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Whether assembly found the matrix exactly symmetric.
    pub fn symmetry_hint(&self) -> bool {
        self.symmetric
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `j`.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.column(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.column(j);
        match rows.binary_search(&i) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("transpose stays in range")
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        if alpha == 0.0 {
            return SparseMatrix::zeros(self.nrows, self.ncols);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Exact symmetry test up to an absolute tolerance.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        self.iter()
            .all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol)
    }

    /// `max |A - Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(i, j, v)| (self.get(j, i) - v).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute value per row.
    pub fn row_max_abs(&self) -> Vec<f64> {
        let mut out = vec![0.0_f64; self.nrows];
        for (i, _, v) in self.iter() {
            out[i] = out[i].max(v.abs());
        }
        out
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Extracts `A[rows, cols]`; both index lists map new → old positions.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut row_map = vec![usize::MAX; self.nrows];
        for (new, &old) in rows.iter().enumerate() {
            row_map[old] = new;
        }
        let mut t = Vec::new();
        for (new_j, &old_j) in cols.iter().enumerate() {
            let (ri, vals) = self.column(old_j);
            for (&i, &v) in ri.iter().zip(vals) {
                let ni = row_map[i];
                if ni != usize::MAX {
                    t.push((ni, new_j, v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &t).expect("submatrix stays in range")
    }

    /// Sparse–dense product `A·X`.
    pub fn mul_dense(&self, x: &DenseBlock) -> Result<DenseBlock> {
        if self.ncols != x.nrows() {
            return Err(Error::dims(
                "SparseMatrix::mul_dense",
                self.ncols,
                x.nrows(),
            ));
        }
        let mut out = DenseBlock::zeros(self.nrows, x.ncols());
        let n = self.nrows;
        if n == 0 {
            return Ok(out);
        }
        let work = |(j, dst): (usize, &mut [f64])| {
            for (c, &xv) in x.col(j).iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let (rows, vals) = self.column(c);
                for (&i, &v) in rows.iter().zip(vals) {
                    dst[i] += v * xv;
                }
            }
        };
        if x.ncols() > 1 && self.nnz() > 50_000 {
            out.as_mut_slice()
                .par_chunks_mut(n)
                .enumerate()
                .for_each(work);
        } else {
            out.as_mut_slice().chunks_mut(n).enumerate().for_each(work);
        }
        Ok(out)
    }

    /// `Aᵀ·X` without forming the transpose.
    pub fn tr_mul_dense(&self, x: &DenseBlock) -> Result<DenseBlock> {
        if self.nrows != x.nrows() {
            return Err(Error::dims(
                "SparseMatrix::tr_mul_dense",
                self.nrows,
                x.nrows(),
            ));
        }
        let mut out = DenseBlock::zeros(self.ncols, x.ncols());
        for k in 0..x.ncols() {
            let xk = x.col(k);
            let dst = out.col_mut(k);
            for (j, slot) in dst.iter_mut().enumerate() {
                let (rows, vals) = self.column(j);
                *slot = rows.iter().zip(vals).map(|(&i, &v)| v * xk[i]).sum();
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseBlock {
        let mut d = DenseBlock::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len() + 1);
    out.push(0);
    for s in sizes {
        out.push(out.last().unwrap() + s);
    }
    out
}

/// `spmm` under its operation name.
pub fn spmm(a: &SparseMatrix, x: &DenseBlock) -> Result<DenseBlock> {
    a.mul_dense(x)
}
