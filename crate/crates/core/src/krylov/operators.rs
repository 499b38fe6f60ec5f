// SPDX-License-Identifier: Apache-2.0

use crate::dense::DenseBlock;
use crate::error::{Error, Result};
use crate::netlist::DescriptorModel;
use crate::regularize::{
    detect_and_partition_with, Partition, PartitionedModel, DEFAULT_ZERO_CAPACITANCE,
};
use crate::sparse::{Factorization, SparseMatrix};

#[derive(Debug)]
enum AOperator {
    Direct {
        a: SparseMatrix,
        lu: Box<Factorization>,
    },
    Regularized(Box<PartitionedModel>),
}

/// Which state-space realization the operators act on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Realization {
    /// The assembled `(E, A, B, L, D)`.
    Original,
    /// Capacitance-free nodes eliminated; state is `(v1, i)`.
    Regularized {
        n1: usize,
        n2: usize,
        removed: Vec<String>,
    },
}

/// The block maps `v ↦ A⁻¹Ev` and `v ↦ E⁻¹Av` together with the input,
/// output and feedthrough matrices of the same realization. Immutable once
/// built, so ports can share it across threads.
#[derive(Debug)]
pub struct OperatorPair {
    dim: usize,
    e: SparseMatrix,
    e_lu: Option<Factorization>,
    e_singular: Vec<String>,
    a: AOperator,
    b: DenseBlock,
    lt: DenseBlock,
    d: DenseBlock,
    realization: Realization,
}

pub fn make_operators(model: &DescriptorModel) -> Result<OperatorPair> {
    make_operators_with(model, DEFAULT_ZERO_CAPACITANCE)
}

/// Routes solves with `A` through a direct factorization for regular
/// models and through the bordered matrix for regularized ones.
pub fn make_operators_with(model: &DescriptorModel, zero_cap: f64) -> Result<OperatorPair> {
    model.validate()?;
    match detect_and_partition_with(model, zero_cap)? {
        Partition::Regular => {
            let labels: Vec<String> = (0..model.order())
                .map(|i| {
                    if i < model.n {
                        model.node_label(i)
                    } else {
                        format!("branch {}", i - model.n)
                    }
                })
                .collect();
            OperatorPair::build(
                model.e_matrix(),
                model.a_matrix(),
                model.b_dense(),
                model.lt_dense(),
                model.d.to_dense(),
                &labels,
            )
        }
        Partition::Singular(pm) => {
            let io = pm.build_rhs()?;
            let e = pm.e_reg();
            let e_lu = Factorization::new(&e)?;
            let e_singular = match e_lu.singularity() {
                Some(s) => vec![format!("regularized state {}", s.column)],
                None => Vec::new(),
            };
            let realization = Realization::Regularized {
                n1: pm.n1,
                n2: pm.n2,
                removed: pm.removed_node_names(),
            };
            Ok(OperatorPair {
                dim: pm.order(),
                e,
                e_lu: Some(e_lu).filter(|f| !f.is_singular()),
                e_singular,
                a: AOperator::Regularized(pm),
                b: io.b,
                lt: io.lt,
                d: io.d,
                realization,
            })
        }
    }
}

impl OperatorPair {
    /// Operators of an arbitrary descriptor system `(E, A, B, Lᵀ, D)`.
    pub fn from_matrices(
        e: SparseMatrix,
        a: SparseMatrix,
        b: DenseBlock,
        lt: DenseBlock,
        d: DenseBlock,
    ) -> Result<Self> {
        let labels: Vec<String> = (0..e.nrows()).map(|i| format!("state {i}")).collect();
        Self::build(e, a, b, lt, d, &labels)
    }

    fn build(
        e: SparseMatrix,
        a: SparseMatrix,
        b: DenseBlock,
        lt: DenseBlock,
        d: DenseBlock,
        labels: &[String],
    ) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || e.nrows() != n || e.ncols() != n {
            return Err(Error::dims(
                "operator pair",
                format!("{n}x{n} E and A"),
                format!("{}x{}", e.nrows(), e.ncols()),
            ));
        }
        if b.nrows() != n || lt.nrows() != n {
            return Err(Error::dims(
                "operator pair B/Lᵀ rows",
                n,
                format!("{} and {}", b.nrows(), lt.nrows()),
            ));
        }
        if d.nrows() != lt.ncols() || d.ncols() != b.ncols() {
            return Err(Error::dims(
                "operator pair D",
                format!("{}x{}", lt.ncols(), b.ncols()),
                format!("{}x{}", d.nrows(), d.ncols()),
            ));
        }
        let lu = Factorization::new(&a)?;
        if let Some(s) = lu.singularity() {
            return Err(Error::Singular {
                column: s.column,
                pivot: s.pivot,
            });
        }
        let zero_rows: Vec<String> = e
            .row_max_abs()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 0.0)
            .map(|(i, _)| labels[i].clone())
            .collect();
        let (e_lu, e_singular) = if zero_rows.is_empty() {
            let f = Factorization::new(&e)?;
            match f.singularity() {
                Some(s) => (None, vec![labels[s.column].clone()]),
                None => (Some(f), Vec::new()),
            }
        } else {
            (None, zero_rows)
        };
        Ok(OperatorPair {
            dim: n,
            e,
            e_lu,
            e_singular,
            a: AOperator::Direct {
                a,
                lu: Box::new(lu),
            },
            b,
            lt,
            d,
            realization: Realization::Original,
        })
    }

    /// State dimension `N_r` of the realization.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> usize {
        self.b.ncols()
    }

    pub fn q(&self) -> usize {
        self.lt.ncols()
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    pub fn has_e_inverse(&self) -> bool {
        self.e_lu.is_some()
    }

    pub(crate) fn require_e_inverse(&self) -> Result<&Factorization> {
        self.e_lu.as_ref().ok_or_else(|| Error::SingularE {
            nodes: self.e_singular.clone(),
        })
    }

    pub fn e(&self) -> &SparseMatrix {
        &self.e
    }

    /// Input matrix of the realization, `N_r x p`.
    pub fn b(&self) -> &DenseBlock {
        &self.b
    }

    /// Transposed output matrix, `N_r x q`.
    pub fn lt(&self) -> &DenseBlock {
        &self.lt
    }

    /// Feedthrough, `q x p`.
    pub fn d(&self) -> &DenseBlock {
        &self.d
    }

    pub fn apply_e(&self, v: &DenseBlock) -> Result<DenseBlock> {
        self.e.mul_dense(v)
    }

    pub fn apply_a(&self, v: &DenseBlock) -> Result<DenseBlock> {
        match &self.a {
            AOperator::Direct { a, .. } => a.mul_dense(v),
            AOperator::Regularized(pm) => pm.apply_a(v),
        }
    }

    pub fn solve_a(&self, r: &DenseBlock) -> Result<DenseBlock> {
        match &self.a {
            AOperator::Direct { lu, .. } => lu.solve(r),
            AOperator::Regularized(pm) => pm.solve_a(r),
        }
    }

    pub fn solve_e(&self, r: &DenseBlock) -> Result<DenseBlock> {
        self.require_e_inverse()?.solve(r)
    }

    /// `A⁻¹ E v`.
    pub fn apply_ae(&self, v: &DenseBlock) -> Result<DenseBlock> {
        self.solve_a(&self.apply_e(v)?)
    }

    /// `E⁻¹ A v`; refused when `E` is singular.
    pub fn apply_ae_inv(&self, v: &DenseBlock) -> Result<DenseBlock> {
        self.require_e_inverse()?;
        self.solve_e(&self.apply_a(v)?)
    }

    /// `A` as a dense matrix, through `build_dense_a` for regularized models.
    pub fn dense_a(&self, cap: usize) -> Result<DenseBlock> {
        if self.dim > cap {
            return Err(Error::CapExceeded {
                size: self.dim,
                cap,
            });
        }
        match &self.a {
            AOperator::Direct { a, .. } => Ok(a.to_dense()),
            AOperator::Regularized(pm) => pm.build_dense_a(cap),
        }
    }

    pub fn partitioned(&self) -> Option<&PartitionedModel> {
        match &self.a {
            AOperator::Regularized(pm) => Some(pm),
            AOperator::Direct { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_e_gives_inverse_and_forward_a() {
        let a = SparseMatrix::diagonal(&[4.0, -2.0]);
        let b = DenseBlock::identity(2);
        let ops = OperatorPair::from_matrices(
            SparseMatrix::identity(2),
            a,
            b.clone(),
            b,
            DenseBlock::zeros(2, 2),
        )
        .unwrap();
        let v = DenseBlock::from_rows(&[&[1.0], &[1.0]]);
        assert_eq!(ops.apply_ae(&v).unwrap().as_slice(), &[0.25, -0.5]);
        assert_eq!(ops.apply_ae_inv(&v).unwrap().as_slice(), &[4.0, -2.0]);
    }

    #[test]
    fn scalar_pencil() {
        let b = DenseBlock::identity(1);
        let ops = OperatorPair::from_matrices(
            SparseMatrix::diagonal(&[2.0]),
            SparseMatrix::diagonal(&[4.0]),
            b.clone(),
            b,
            DenseBlock::zeros(1, 1),
        )
        .unwrap();
        let v = DenseBlock::identity(1);
        assert_eq!(ops.apply_ae(&v).unwrap().as_slice(), &[0.5]);
        assert_eq!(ops.apply_ae_inv(&v).unwrap().as_slice(), &[2.0]);
    }

    #[test]
    fn singular_a_is_rejected() {
        let b = DenseBlock::identity(2);
        let r = OperatorPair::from_matrices(
            SparseMatrix::identity(2),
            SparseMatrix::diagonal(&[1.0, 0.0]),
            b.clone(),
            b,
            DenseBlock::zeros(2, 2),
        );
        assert!(matches!(r, Err(Error::Singular { column: 1, .. })));
    }

    #[test]
    fn singular_e_names_states() {
        let b = DenseBlock::identity(2);
        let ops = OperatorPair::from_matrices(
            SparseMatrix::diagonal(&[1.0, 0.0]),
            SparseMatrix::identity(2),
            b.clone(),
            b,
            DenseBlock::zeros(2, 2),
        )
        .unwrap();
        match ops.apply_ae_inv(&DenseBlock::identity(2)) {
            Err(Error::SingularE { nodes }) => assert_eq!(nodes, vec!["state 1".to_string()]),
            other => panic!("expected SingularE, got {other:?}"),
        }
    }
}
