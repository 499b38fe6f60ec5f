// SPDX-License-Identifier: Apache-2.0

//! Column-major dense blocks.
//!
//! Every tall-skinny quantity of the reduction (Krylov blocks, right-hand
//! sides, projection bases) and every small reduced matrix is a
//! [`DenseBlock`]. Columns are contiguous, so orthogonalization and sparse
//! solves operate on `&[f64]` column slices directly.

use std::fmt::Write as _;
use std::io::Write as _;
use std::ops::{Index, IndexMut, Range};
use std::path::Path;

use crate::error::{Error, Result};

pub type Complex = nalgebra::Complex<f64>;
pub type ComplexMatrix = nalgebra::DMatrix<Complex>;

#[derive(Clone, PartialEq)]
pub struct DenseBlock {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl std::fmt::Debug for DenseBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "DenseBlock {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows.min(12) {
            let row: Vec<String> = (0..self.ncols.min(8))
                .map(|j| format!("{:>12.5e}", self[(i, j)]))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl DenseBlock {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseBlock {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = 1.0;
        }
        out
    }

    /// Builds a block from column-major storage.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::dims(
                "DenseBlock::from_col_major",
                nrows * ncols,
                data.len(),
            ));
        }
        Ok(DenseBlock { nrows, ncols, data })
    }

    /// Builds a block from row slices. Rows must have equal length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut out = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn from_columns(nrows: usize, columns: &[Vec<f64>]) -> Self {
        let mut data = Vec::with_capacity(nrows * columns.len());
        for c in columns {
            assert_eq!(c.len(), nrows);
            data.extend_from_slice(c);
        }
        DenseBlock {
            nrows,
            ncols: columns.len(),
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.nrows;
        &mut self.data[j * n..(j + 1) * n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.ncols).map(move |j| self.col(j))
    }

    /// Copies out the columns in `range`.
    pub fn col_range(&self, range: Range<usize>) -> DenseBlock {
        assert!(range.end <= self.ncols);
        let data = self.data[range.start * self.nrows..range.end * self.nrows].to_vec();
        DenseBlock {
            nrows: self.nrows,
            ncols: range.len(),
            data,
        }
    }

    /// Copies out rows `range` of every column.
    pub fn row_range(&self, range: Range<usize>) -> DenseBlock {
        assert!(range.end <= self.nrows);
        let mut out = DenseBlock::zeros(range.len(), self.ncols);
        for j in 0..self.ncols {
            out.col_mut(j).copy_from_slice(&self.col(j)[range.clone()]);
        }
        out
    }

    /// Copies out selected columns in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DenseBlock {
        let mut data = Vec::with_capacity(self.nrows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        DenseBlock {
            nrows: self.nrows,
            ncols: cols.len(),
            data,
        }
    }

    pub fn push_column(&mut self, col: &[f64]) {
        if self.ncols == 0 && self.data.is_empty() {
            self.nrows = col.len();
        }
        assert_eq!(col.len(), self.nrows);
        self.data.extend_from_slice(col);
        self.ncols += 1;
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hcat(&self, other: &DenseBlock) -> Result<DenseBlock> {
        if self.ncols > 0 && other.ncols > 0 && self.nrows != other.nrows {
            return Err(Error::dims("DenseBlock::hcat", self.nrows, other.nrows));
        }
        let nrows = if self.ncols > 0 {
            self.nrows
        } else {
            other.nrows
        };
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(DenseBlock {
            nrows,
            ncols: self.ncols + other.ncols,
            data,
        })
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vcat(&self, other: &DenseBlock) -> Result<DenseBlock> {
        if self.ncols != other.ncols {
            return Err(Error::dims("DenseBlock::vcat", self.ncols, other.ncols));
        }
        let nrows = self.nrows + other.nrows;
        let mut data = Vec::with_capacity(nrows * self.ncols);
        for j in 0..self.ncols {
            data.extend_from_slice(self.col(j));
            data.extend_from_slice(other.col(j));
        }
        Ok(DenseBlock {
            nrows,
            ncols: self.ncols,
            data,
        })
    }

    pub fn transpose(&self) -> DenseBlock {
        let mut out = DenseBlock::zeros(self.ncols, self.nrows);
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &DenseBlock) -> Result<DenseBlock> {
        if self.ncols != rhs.nrows {
            return Err(Error::dims("DenseBlock::matmul", self.ncols, rhs.nrows));
        }
        let mut out = DenseBlock::zeros(self.nrows, rhs.ncols);
        for j in 0..rhs.ncols {
            let dst = &mut out.data[j * self.nrows..(j + 1) * self.nrows];
            for (l, &b) in rhs.col(j).iter().enumerate() {
                if b != 0.0 {
                    axpy(b, self.col(l), dst);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * rhs`, without forming the transpose.
    pub fn t_matmul(&self, rhs: &DenseBlock) -> Result<DenseBlock> {
        if self.nrows != rhs.nrows {
            return Err(Error::dims("DenseBlock::t_matmul", self.nrows, rhs.nrows));
        }
        let mut out = DenseBlock::zeros(self.ncols, rhs.ncols);
        for j in 0..rhs.ncols {
            let b = rhs.col(j);
            for i in 0..self.ncols {
                out[(i, j)] = dot(self.col(i), b);
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, alpha: f64) -> DenseBlock {
        DenseBlock {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: f64, other: &DenseBlock, beta: f64) -> Result<DenseBlock> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                "DenseBlock::lin_comb",
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(DenseBlock {
            nrows: self.nrows,
            ncols: self.ncols,
            data,
        })
    }

    pub fn sub(&self, other: &DenseBlock) -> Result<DenseBlock> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &DenseBlock) -> Result<DenseBlock> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn norm_fro(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `max |selfᵀ self − I|`, the orthonormality defect of the columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.t_matmul(self).expect("square gram");
        let mut worst = 0.0_f64;
        for j in 0..gram.ncols {
            for i in 0..gram.nrows {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{:.17e}", self[(i, j)]);
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_column_slice(self.nrows, self.ncols, &self.data)
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.nrows, self.ncols, |i, j| {
            Complex::new(self[(i, j)], 0.0)
        })
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        DenseBlock {
            nrows: m.nrows(),
            ncols: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }
}

impl Index<(usize, usize)> for DenseBlock {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseBlock {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    // scaled to avoid overflow on large moment vectors
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ss: f64 = a.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * ss.sqrt()
}
