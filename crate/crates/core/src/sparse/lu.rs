// SPDX-License-Identifier: Apache-2.0

//! Left-looking sparse LU with threshold partial pivoting.
//!
//! Columns are visited in a fill-reducing order (approximate minimum degree
//! on the pattern of `A + Aᵀ`). Each column is obtained by a sparse
//! triangular solve whose nonzero pattern comes from a depth-first reach in
//! the graph of `L`, so the work is proportional to the floating-point
//! operations performed. The pivot prefers the diagonal entry of the
//! symmetrically permuted matrix when it is within `pivot_threshold` of the
//! largest candidate, which keeps the fill predicted by the ordering on the
//! quasi-definite MNA matrices.

use rayon::prelude::*;

use super::SparseMatrix;
use crate::dense::DenseBlock;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnOrdering {
    Natural,
    Amd,
}

#[derive(Clone, Copy, Debug)]
pub struct FactorOptions {
    /// Diagonal pivot accepted if `|a_kk| >= pivot_threshold * max |a_ik|`.
    pub pivot_threshold: f64,
    /// Pivots at or below `singular_tol * max |A(:, j)|` flag the matrix singular.
    pub singular_tol: f64,
    pub ordering: ColumnOrdering,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            pivot_threshold: 0.1,
            singular_tol: 1e-13,
            ordering: ColumnOrdering::Amd,
        }
    }
}

/// Where elimination met a negligible pivot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Singularity {
    /// Original column index of the failed pivot.
    pub column: usize,
    /// Magnitude of the best available pivot.
    pub pivot: f64,
}

/// Reusable `P·A·Q = L·U` factorization of a square sparse matrix.
#[derive(Clone, Debug)]
pub struct Factorization {
    n: usize,
    col_perm: Vec<usize>,
    row_perm_inv: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    singularity: Option<Singularity>,
}

impl Factorization {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        Self::with_options(a, FactorOptions::default())
    }

    /// Factorizes `a`. Numerical singularity does not fail the call; it is
    /// recorded in [`Factorization::singularity`] and later solves refuse.
    pub fn with_options(a: &SparseMatrix, opts: FactorOptions) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims(
                "factorize",
                "square matrix",
                format!("{}x{}", a.nrows(), a.ncols()),
            ));
        }
        let n = a.nrows();
        let col_perm = match opts.ordering {
            ColumnOrdering::Natural => (0..n).collect(),
            ColumnOrdering::Amd => amd_order(a),
        };

        let mut pinv = vec![NONE; n];
        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut u_ptr = Vec::with_capacity(n + 1);
        let guess = 4 * a.nnz() + n;
        let mut l_idx = Vec::with_capacity(guess);
        let mut l_val = Vec::with_capacity(guess);
        let mut u_idx = Vec::with_capacity(guess);
        let mut u_val = Vec::with_capacity(guess);
        l_ptr.push(0);
        u_ptr.push(0);

        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut mark = vec![NONE; n];
        let mut stack: Vec<usize> = Vec::with_capacity(n);
        let mut pstack = vec![0usize; n];
        let mut singularity = None;

        for (k, &col) in col_perm.iter().enumerate() {
            let (a_rows, a_vals) = a.column(col);

            // Pattern of L \ A(:, col), in topological order in xi[top..].
            let mut top = n;
            for &start in a_rows {
                if mark[start] == k {
                    continue;
                }
                stack.clear();
                stack.push(start);
                while let Some(&j) = stack.last() {
                    let jnew = pinv[j];
                    let head = stack.len() - 1;
                    if mark[j] != k {
                        mark[j] = k;
                        pstack[head] = if jnew == NONE { 0 } else { l_ptr[jnew] };
                    }
                    let end = if jnew == NONE { 0 } else { l_ptr[jnew + 1] };
                    let mut descended = false;
                    let mut p = pstack[head];
                    while p < end {
                        let i = l_idx[p];
                        p += 1;
                        if mark[i] != k {
                            pstack[head] = p;
                            stack.push(i);
                            descended = true;
                            break;
                        }
                    }
                    if !descended {
                        stack.pop();
                        top -= 1;
                        xi[top] = j;
                    }
                }
            }

            let mut col_max = 0.0_f64;
            for (&i, &v) in a_rows.iter().zip(a_vals) {
                x[i] = v;
                col_max = col_max.max(v.abs());
            }
            for &j in &xi[top..n] {
                let jnew = pinv[j];
                if jnew == NONE {
                    continue;
                }
                let xj = x[j];
                if xj == 0.0 {
                    continue;
                }
                for p in l_ptr[jnew] + 1..l_ptr[jnew + 1] {
                    x[l_idx[p]] -= l_val[p] * xj;
                }
            }

            let mut ipiv = NONE;
            let mut amax = -1.0_f64;
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    u_idx.push(pinv[i]);
                    u_val.push(x[i]);
                }
            }
            if ipiv == NONE || amax <= opts.singular_tol * col_max || amax == 0.0 {
                singularity = Some(Singularity {
                    column: col,
                    pivot: amax.max(0.0),
                });
                for &i in &xi[top..n] {
                    x[i] = 0.0;
                }
                break;
            }
            if pinv[col] == NONE && x[col].abs() >= opts.pivot_threshold * amax {
                ipiv = col;
            }
            let pivot = x[ipiv];
            u_idx.push(k);
            u_val.push(pivot);
            u_ptr.push(u_idx.len());
            pinv[ipiv] = k;
            l_idx.push(ipiv);
            l_val.push(1.0);
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    l_idx.push(i);
                    l_val.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
            l_ptr.push(l_idx.len());
        }

        if singularity.is_none() {
            for r in l_idx.iter_mut() {
                *r = pinv[*r];
            }
        }

        Ok(Factorization {
            n,
            col_perm,
            row_perm_inv: pinv,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
            singularity,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_singular(&self) -> bool {
        self.singularity.is_some()
    }

    pub fn singularity(&self) -> Option<Singularity> {
        self.singularity
    }

    /// Nonzeros stored in `L` and `U` together.
    pub fn factor_nnz(&self) -> usize {
        self.l_val.len() + self.u_val.len()
    }

    fn check_usable(&self, rows: usize) -> Result<()> {
        if let Some(s) = self.singularity {
            return Err(Error::Singular {
                column: s.column,
                pivot: s.pivot,
            });
        }
        if rows != self.n {
            return Err(Error::dims("solve", self.n, rows));
        }
        Ok(())
    }

    /// Solves `A·y = b` in place.
    pub fn solve_vec(&self, b: &mut [f64]) -> Result<()> {
        self.check_usable(b.len())?;
        let mut y = vec![0.0; self.n];
        self.solve_into(b, &mut y);
        Ok(())
    }

    fn solve_into(&self, b: &mut [f64], y: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            y[self.row_perm_inv[i]] = b[i];
        }
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                    y[self.l_idx[p]] -= self.l_val[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let last = self.u_ptr[j + 1] - 1;
            y[j] /= self.u_val[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.u_ptr[j]..last {
                    y[self.u_idx[p]] -= self.u_val[p] * yj;
                }
            }
        }
        for k in 0..n {
            b[self.col_perm[k]] = y[k];
        }
    }

    /// Solves `A·Y = R` column by column.
    pub fn solve(&self, rhs: &DenseBlock) -> Result<DenseBlock> {
        self.check_usable(rhs.nrows())?;
        let mut out = rhs.clone();
        if self.n == 0 {
            return Ok(out);
        }
        let n = self.n;
        if rhs.ncols() > 1 && self.factor_nnz() > 100_000 {
            out.as_mut_slice()
                .par_chunks_mut(n)
                .for_each_init(|| vec![0.0; n], |y, col| self.solve_into(col, y));
        } else {
            let mut y = vec![0.0; n];
            for col in out.as_mut_slice().chunks_mut(n) {
                self.solve_into(col, &mut y);
            }
        }
        Ok(out)
    }
}

/// Fill-reducing column order from AMD on the pattern of `A + Aᵀ`.
fn amd_order(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    // AMD ignores the diagonal, but its bookkeeping assumes nnz >= n
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut rows = Vec::with_capacity(a.nnz() + n);
    col_ptr.push(0);
    for j in 0..n {
        let (ri, _) = a.column(j);
        let mut placed = false;
        for &i in ri {
            if !placed && i >= j {
                if i != j {
                    rows.push(j);
                }
                placed = true;
            }
            rows.push(i);
        }
        if !placed {
            rows.push(j);
        }
        col_ptr.push(rows.len());
    }
    match amd::order::<usize>(n, &col_ptr, &rows, &amd::Control::default()) {
        Ok((perm, _, _)) => perm,
        Err(_) => (0..n).collect(),
    }
}

/// `factorize` under its operation name.
pub fn factorize(a: &SparseMatrix) -> Result<Factorization> {
    Factorization::new(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &SparseMatrix, y: &DenseBlock, r: &DenseBlock) -> f64 {
        a.mul_dense(y).unwrap().sub(r).unwrap().norm_fro() / r.norm_fro()
    }

    #[test]
    fn identity_solves_to_rhs() {
        let f = factorize(&SparseMatrix::identity(3)).unwrap();
        assert!(!f.is_singular());
        let b = DenseBlock::from_rows(&[&[1.0, 4.0], &[2.0, 5.0], &[3.0, 6.0]]);
        assert_eq!(f.solve(&b).unwrap(), b);
    }

    #[test]
    fn diagonal_solve() {
        let f = factorize(&SparseMatrix::diagonal(&[2.0, 4.0])).unwrap();
        let y = f.solve(&DenseBlock::from_rows(&[&[2.0], &[4.0]])).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn zero_pivot_sets_flag_at_column() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0)]).unwrap();
        let f = factorize(&a).unwrap();
        let s = f.singularity().expect("flag");
        assert_eq!(s.column, 1);
        assert_eq!(s.pivot, 0.0);
        assert!(matches!(
            f.solve(&DenseBlock::zeros(2, 1)),
            Err(Error::Singular { column: 1, .. })
        ));
    }

    #[test]
    fn floating_laplacian_is_flagged() {
        // ungrounded resistor pair: rank one
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, -1.0), (1, 0, -1.0)],
        )
        .unwrap();
        assert!(factorize(&a).unwrap().is_singular());
    }

    #[test]
    fn zero_diagonal_needs_off_diagonal_pivot() {
        // saddle point: [[1, 1], [1, 0]]
        let a =
            SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        for ordering in [ColumnOrdering::Natural, ColumnOrdering::Amd] {
            let f = Factorization::with_options(
                &a,
                FactorOptions {
                    ordering,
                    ..Default::default()
                },
            )
            .unwrap();
            let b = DenseBlock::from_rows(&[&[3.0], &[1.0]]);
            let y = f.solve(&b).unwrap();
            assert!(residual(&a, &y, &b) < 1e-15);
        }
    }

    #[test]
    fn rejects_rectangular_and_mismatched() {
        assert!(factorize(&SparseMatrix::zeros(2, 3)).is_err());
        let f = factorize(&SparseMatrix::identity(2)).unwrap();
        assert!(f.solve(&DenseBlock::zeros(3, 1)).is_err());
    }
}
