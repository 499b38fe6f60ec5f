// SPDX-License-Identifier: Apache-2.0

//! Block orthogonalization with rank-revealing deflation.

use std::ops::Range;

use crate::dense::{axpy, dot, norm2, DenseBlock};
use crate::error::{Error, Result};

/// Relative norm below which a column is treated as dependent.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Result of orthonormalizing a block: the basis and which input columns
/// survived deflation, in order.
#[derive(Clone, Debug)]
pub struct Orthonormalized {
    pub basis: DenseBlock,
    pub kept: Vec<usize>,
}

/// Orthonormal basis of `range(x)` by modified Gram-Schmidt with one
/// reorthogonalization pass. A column is dropped when its remaining norm
/// falls below `tol` times its original norm; an all-zero input gives an
/// empty basis.
pub fn qr_orth(x: &DenseBlock, tol: f64) -> DenseBlock {
    qr_orth_tracked(x, None, tol).basis
}

/// As [`qr_orth`], but deflation is judged against `reference_norms` when
/// given. Arnoldi passes the norms the candidates had before they were
/// orthogonalized against the existing basis, so that a vector already in
/// the span is dropped instead of being normalized roundoff.
pub fn qr_orth_tracked(
    x: &DenseBlock,
    reference_norms: Option<&[f64]>,
    tol: f64,
) -> Orthonormalized {
    let n = x.nrows();
    let mut basis = DenseBlock::zeros(n, 0);
    let mut kept = Vec::new();
    let mut v = vec![0.0; n];
    for c in 0..x.ncols() {
        v.copy_from_slice(x.col(c));
        let reference = reference_norms.map_or_else(|| norm2(&v), |r| r[c]);
        if reference == 0.0 || !reference.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for q in basis.columns() {
                let h = dot(q, &v);
                axpy(-h, q, &mut v);
            }
        }
        let nv = norm2(&v);
        if nv <= tol * reference {
            continue;
        }
        v.iter_mut().for_each(|e| *e /= nv);
        basis.push_column(&v);
        kept.push(c);
    }
    Orthonormalized { basis, kept }
}

/// Removes from `x1` its components along the orthonormal columns of `xj`,
/// sweeping `xj` in consecutive blocks of `2p` columns. The whole sweep is
/// performed twice.
pub fn orth_wrt(x1: &DenseBlock, xj: &DenseBlock, p: usize) -> Result<DenseBlock> {
    let width = 2 * p;
    if p == 0 || !xj.ncols().is_multiple_of(width) {
        return Err(Error::InvalidArgument(format!(
            "orth_wrt: basis has {} columns, not a multiple of block width 2p = {width}",
            xj.ncols()
        )));
    }
    let blocks: Vec<Range<usize>> = (0..xj.ncols() / width)
        .map(|b| b * width..(b + 1) * width)
        .collect();
    orth_wrt_blocks(x1, xj, &blocks)
}

/// Blocked sweep against arbitrary column ranges of `xj`; used with the
/// Arnoldi block ledger once deflation has made block widths uneven.
pub fn orth_wrt_blocks(
    x1: &DenseBlock,
    xj: &DenseBlock,
    blocks: &[Range<usize>],
) -> Result<DenseBlock> {
    if x1.ncols() > 0 && xj.ncols() > 0 && x1.nrows() != xj.nrows() {
        return Err(Error::dims("orth_wrt", xj.nrows(), x1.nrows()));
    }
    let mut out = x1.clone();
    let mut coeff = Vec::new();
    for _ in 0..2 {
        for blk in blocks {
            for c in 0..out.ncols() {
                let col = out.col(c);
                coeff.clear();
                coeff.extend(blk.clone().map(|b| dot(xj.col(b), col)));
                let col = out.col_mut(c);
                for (b, &h) in blk.clone().zip(&coeff) {
                    axpy(-h, xj.col(b), col);
                }
            }
        }
    }
    Ok(out)
}
