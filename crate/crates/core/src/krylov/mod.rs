// SPDX-License-Identifier: Apache-2.0

//! Krylov projection bases for descriptor models.
//!
//! All bases are built from two block maps, `A_E = A⁻¹E` and its inverse
//! `A_E⁻¹ = E⁻¹A`, with the expansion point fixed at `s = 0`. The standard
//! space grows by powers of `A_E` only; the extended space alternates a
//! forward block (`A_E`) with a backward block (`A_E⁻¹`) and so also
//! captures the behaviour around `s = ∞`.

mod operators;
mod rom;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use operators::{make_operators, make_operators_with, OperatorPair, Realization};
pub use rom::{moments, moments_original, project, Provenance, ReducedModel, DEFAULT_MOMENT_CAP};

use crate::dense::{norm2, DenseBlock};
use crate::error::{Error, Result};
use crate::orth::{orth_wrt_blocks, qr_orth_tracked, DEFAULT_RANK_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Standard Krylov moment matching.
    Mm,
    /// Extended Krylov moment matching.
    Eks,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mm => "mm",
            Method::Eks => "eks",
        }
    }

    /// Basis columns per port produced by `k` moments.
    pub fn columns_per_port(self, k: usize) -> usize {
        match self {
            Method::Mm => k,
            Method::Eks => 2 * k,
        }
    }

    /// Moment count giving ROM order `r` with `p` ports. Rounds up when `r`
    /// does not split evenly; the flag reports whether it did.
    pub fn moments_for_order(self, r: usize, p: usize) -> Result<(usize, bool)> {
        let per = self.columns_per_port(1) * p;
        if r == 0 || p == 0 {
            return Err(Error::InvalidArgument(
                "ROM order and port count must be positive".into(),
            ));
        }
        Ok((r.div_ceil(per), r.is_multiple_of(per)))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mm" => Ok(Method::Mm),
            "eks" | "eks-mm" => Ok(Method::Eks),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Produced by `A_E`.
    Forward,
    /// Produced by `A_E⁻¹`.
    Backward,
}

/// One contiguous group of basis columns and where it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockEntry {
    /// Arnoldi iteration, 0 for the starting block.
    pub iteration: usize,
    pub direction: Direction,
    pub columns: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum BasisStatus {
    Complete,
    /// Every candidate column deflated; construction stopped early.
    Breakdown {
        iteration: usize,
    },
}

#[derive(Clone, Debug)]
pub struct ProjectionBasis {
    pub x: DenseBlock,
    pub ledger: Vec<BlockEntry>,
    pub method: Method,
    /// Requested moment count.
    pub k: usize,
    /// Moment count actually reached before any breakdown.
    pub k_effective: usize,
    pub p: usize,
    pub status: BasisStatus,
}

impl ProjectionBasis {
    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        self.x.orthonormality_defect()
    }

    pub fn warning(&self) -> Option<String> {
        match self.status {
            BasisStatus::Complete => None,
            BasisStatus::Breakdown { iteration } => Some(format!(
                "{} basis broke down at iteration {iteration}: {} of {} moments, {} columns",
                self.method,
                self.k_effective,
                self.k,
                self.x.ncols()
            )),
        }
    }

    fn ranges(&self) -> Vec<Range<usize>> {
        self.ledger.iter().map(|b| b.columns.clone()).collect()
    }

    fn newest(&self, direction: Direction) -> Option<&BlockEntry> {
        self.ledger.iter().rev().find(|b| b.direction == direction)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BasisOptions {
    /// Relative deflation tolerance, see [`qr_orth_tracked`].
    pub rank_tol: f64,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions {
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

fn column_norms(x: &DenseBlock) -> Vec<f64> {
    x.columns().map(norm2).collect()
}

/// Orthogonalizes `cand` against `basis`, deflates, and appends what is
/// left. Returns the surviving candidate indices.
fn extend(basis: &mut ProjectionBasis, cand: &DenseBlock, tol: f64) -> Result<Vec<usize>> {
    let reference = column_norms(cand);
    let projected = orth_wrt_blocks(cand, &basis.x, &basis.ranges())?;
    let out = qr_orth_tracked(&projected, Some(&reference), tol);
    basis.x = basis.x.hcat(&out.basis)?;
    Ok(out.kept)
}

fn check_start(ops: &OperatorPair, b_e: &DenseBlock, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "moment count k must be at least 1".into(),
        ));
    }
    if b_e.nrows() != ops.dim() {
        return Err(Error::dims("krylov start block", ops.dim(), b_e.nrows()));
    }
    if b_e.ncols() == 0 {
        return Err(Error::InvalidArgument("start block has no columns".into()));
    }
    Ok(())
}

/// Orthonormal basis of `span{B_E, A_E B_E, …, A_E^{k-1} B_E}`.
pub fn standard_basis(ops: &OperatorPair, b_e: &DenseBlock, k: usize) -> Result<ProjectionBasis> {
    standard_basis_with(ops, b_e, k, BasisOptions::default())
}

pub fn standard_basis_with(
    ops: &OperatorPair,
    b_e: &DenseBlock,
    k: usize,
    opts: BasisOptions,
) -> Result<ProjectionBasis> {
    check_start(ops, b_e, k)?;
    let mut basis = ProjectionBasis {
        x: DenseBlock::zeros(ops.dim(), 0),
        ledger: Vec::new(),
        method: Method::Mm,
        k,
        k_effective: 0,
        p: b_e.ncols(),
        status: BasisStatus::Complete,
    };
    let mut cand = b_e.clone();
    for iteration in 0..k {
        let start = basis.x.ncols();
        let kept = extend(&mut basis, &cand, opts.rank_tol)?;
        if kept.is_empty() {
            basis.status = BasisStatus::Breakdown { iteration };
            break;
        }
        let cols = start..basis.x.ncols();
        basis.ledger.push(BlockEntry {
            iteration,
            direction: Direction::Forward,
            columns: cols.clone(),
        });
        basis.k_effective = iteration + 1;
        if iteration + 1 < k {
            cand = ops.apply_ae(&basis.x.col_range(cols))?;
        }
    }
    Ok(basis)
}

/// Extended Krylov basis with `k` moments per direction:
/// `span{A_E^{-k} B_E, …, A_E⁻¹ B_E, B_E, A_E B_E, …, A_E^{k-1} B_E}`,
/// at most `2 k p` columns.
///
/// The forward and backward blocks are tracked in the ledger, so the next
/// iteration always expands the newest block of each kind even after
/// deflation has shrunk it.
pub fn extended_basis(ops: &OperatorPair, b_e: &DenseBlock, k: usize) -> Result<ProjectionBasis> {
    extended_basis_with(ops, b_e, k, BasisOptions::default())
}

pub fn extended_basis_with(
    ops: &OperatorPair,
    b_e: &DenseBlock,
    k: usize,
    opts: BasisOptions,
) -> Result<ProjectionBasis> {
    check_start(ops, b_e, k)?;
    ops.require_e_inverse()?;
    let p = b_e.ncols();
    let mut basis = ProjectionBasis {
        x: DenseBlock::zeros(ops.dim(), 0),
        ledger: Vec::new(),
        method: Method::Eks,
        k,
        k_effective: 0,
        p,
        status: BasisStatus::Complete,
    };
    let mut forward = b_e.clone();
    let mut backward = ops.apply_ae_inv(b_e)?;
    for iteration in 0..k {
        let nf = forward.ncols();
        let start = basis.x.ncols();
        let kept = extend(&mut basis, &forward.hcat(&backward)?, opts.rank_tol)?;
        if kept.is_empty() {
            basis.status = BasisStatus::Breakdown { iteration };
            break;
        }
        let split = start + kept.iter().filter(|&&c| c < nf).count();
        for (direction, columns) in [
            (Direction::Forward, start..split),
            (Direction::Backward, split..basis.x.ncols()),
        ] {
            if !columns.is_empty() {
                basis.ledger.push(BlockEntry {
                    iteration,
                    direction,
                    columns,
                });
            }
        }
        basis.k_effective = iteration + 1;
        if iteration + 1 == k {
            break;
        }
        let newest = |d: Direction| {
            basis
                .newest(d)
                .filter(|b| b.iteration == iteration)
                .map(|b| basis.x.col_range(b.columns.clone()))
        };
        forward = match newest(Direction::Forward) {
            Some(f) => ops.apply_ae(&f)?,
            None => DenseBlock::zeros(ops.dim(), 0),
        };
        backward = match newest(Direction::Backward) {
            Some(b) => ops.apply_ae_inv(&b)?,
            None => DenseBlock::zeros(ops.dim(), 0),
        };
    }
    let cap = 2 * k * p;
    if basis.x.ncols() > cap {
        basis.x = basis.x.col_range(0..cap);
    }
    Ok(basis)
}

/// Builds the basis for `method` from the start block `A⁻¹ B`.
pub fn build_basis(
    ops: &OperatorPair,
    method: Method,
    b: &DenseBlock,
    k: usize,
    opts: BasisOptions,
) -> Result<ProjectionBasis> {
    let b_e = ops.solve_a(b)?;
    match method {
        Method::Mm => standard_basis_with(ops, &b_e, k, opts),
        Method::Eks => extended_basis_with(ops, &b_e, k, opts),
    }
}

/// Largest relative residual `‖(I - XXᵀ)v‖ / ‖v‖` over the columns of `v`.
pub fn containment_residual(x: &DenseBlock, v: &DenseBlock) -> Result<f64> {
    let coeff = x.t_matmul(v)?;
    let resid = v.sub(&x.matmul(&coeff)?)?;
    let mut worst = 0.0f64;
    for (r, c) in resid.columns().zip(v.columns()) {
        let nv = norm2(c);
        if nv > 0.0 {
            worst = worst.max(norm2(r) / nv);
        }
    }
    Ok(worst)
}
