// SPDX-License-Identifier: Apache-2.0

//! Regularization of singular descriptor models.
//!
//! Nodes without any capacitance make `E = diag(C, M)` singular. Ordering
//! the capacitive nodes first splits the MNA system as
//!
//! ```text
//! [ G11   G12  W1 ] [v1]   [C1 0 0] d [v1]   [B1]
//! [ G12ᵀ  G22  W2 ] [v2] + [ 0 0 0] dt[v2] = [B2] u
//! [-W1ᵀ  -W2ᵀ  0  ] [ i]   [ 0 0 M]   [ i]   [ 0]
//! ```
//!
//! and eliminating `v2 = G22⁻¹(B2 u - G12ᵀ v1 - W2 i)` leaves a model in
//! `(v1, i)` with nonsingular `E_reg = diag(C1, M)` but a dense Schur
//! complement `A_reg`. Everything here works with `A_reg` implicitly: solves
//! go through the sparse bordered matrix, products through one `G22` solve.

use std::fmt::Write as _;

use crate::dense::DenseBlock;
use crate::error::{Error, Result};
use crate::netlist::DescriptorModel;
use crate::sparse::{Factorization, SparseMatrix};

/// Capacitance magnitude at or below which a node counts as capacitance-free.
pub const DEFAULT_ZERO_CAPACITANCE: f64 = 1e-30;

/// Default cap on `n1 + m` for [`PartitionedModel::build_dense_a`].
pub const DEFAULT_DENSE_CAP: usize = 20_000;

#[derive(Debug)]
pub enum Partition {
    Regular,
    Singular(Box<PartitionedModel>),
}

#[derive(Debug, Clone)]
pub struct PartitionedModel {
    /// Node order after partitioning: `perm[new] = old`.
    pub perm: Vec<usize>,
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub g11: SparseMatrix,
    pub g12: SparseMatrix,
    pub g22: SparseMatrix,
    pub w1: SparseMatrix,
    pub w2: SparseMatrix,
    pub c1: SparseMatrix,
    pub inductance: SparseMatrix,
    pub b1: SparseMatrix,
    pub b2: SparseMatrix,
    pub l1: SparseMatrix,
    pub l2: SparseMatrix,
    pub d: SparseMatrix,
    g12t: SparseMatrix,
    w1t: SparseMatrix,
    w2t: SparseMatrix,
    f22: Factorization,
    bordered: Factorization,
    node_names: Vec<String>,
}

/// Splits off capacitance-free nodes. Returns [`Partition::Regular`] when
/// every node has capacitance.
pub fn detect_and_partition(model: &DescriptorModel) -> Result<Partition> {
    detect_and_partition_with(model, DEFAULT_ZERO_CAPACITANCE)
}

pub fn detect_and_partition_with(model: &DescriptorModel, zero_cap: f64) -> Result<Partition> {
    let free = model.capacitance_free_nodes(zero_cap);
    if free.is_empty() {
        return Ok(Partition::Regular);
    }
    let mut is_free = vec![false; model.n];
    for &i in &free {
        is_free[i] = true;
    }
    let cap_nodes: Vec<usize> = (0..model.n).filter(|&i| !is_free[i]).collect();
    let n1 = cap_nodes.len();
    let n2 = free.len();
    let m = model.m;
    let branches: Vec<usize> = (0..m).collect();
    let ports: Vec<usize> = (0..model.p).collect();
    let outs: Vec<usize> = (0..model.q).collect();

    let g11 = model.g.submatrix(&cap_nodes, &cap_nodes);
    let g12 = model.g.submatrix(&cap_nodes, &free);
    let g22 = model.g.submatrix(&free, &free);
    let w1 = model.w.submatrix(&cap_nodes, &branches);
    let w2 = model.w.submatrix(&free, &branches);
    let c1 = model.c.submatrix(&cap_nodes, &cap_nodes);
    let b1 = model.b1.submatrix(&cap_nodes, &ports);
    let b2 = model.b1.submatrix(&free, &ports);
    let l1 = model.l1.submatrix(&outs, &cap_nodes);
    let l2 = model.l1.submatrix(&outs, &free);

    let f22 = Factorization::new(&g22)?;
    if let Some(s) = f22.singularity() {
        return Err(Error::SingularG22 {
            nodes: vec![model.node_label(free[s.column])],
            pivot: s.pivot,
        });
    }

    let g12t = g12.transpose();
    let w1t = w1.transpose();
    let w2t = w2.transpose();
    let bordered_matrix = SparseMatrix::from_blocks(
        &[n1, m, n2],
        &[n1, m, n2],
        &[
            vec![Some((&g11, -1.0)), Some((&w1, -1.0)), Some((&g12, -1.0))],
            vec![Some((&w1t, 1.0)), None, Some((&w2t, 1.0))],
            vec![Some((&g12t, -1.0)), Some((&w2, -1.0)), Some((&g22, -1.0))],
        ],
    )?;
    let bordered = Factorization::new(&bordered_matrix)?;

    let mut perm = cap_nodes;
    perm.extend_from_slice(&free);
    Ok(Partition::Singular(Box::new(PartitionedModel {
        perm,
        n1,
        n2,
        m,
        p: model.p,
        q: model.q,
        g11,
        g12,
        g22,
        w1,
        w2,
        c1,
        inductance: model.inductance.clone(),
        b1,
        b2,
        l1,
        l2,
        d: model.d.clone(),
        g12t,
        w1t,
        w2t,
        f22,
        bordered,
        node_names: model.node_names.clone(),
    })))
}

/// Input, output and feedthrough matrices of the regularized model.
#[derive(Clone, Debug)]
pub struct RegularizedIo {
    /// `(n1 + m) x p`.
    pub b: DenseBlock,
    /// `Lᵀ`, `(n1 + m) x q`.
    pub lt: DenseBlock,
    /// `q x p`, including the `L2 G22⁻¹ B2` term.
    pub d: DenseBlock,
}

impl PartitionedModel {
    /// Regularized state dimension `n1 + m`.
    pub fn order(&self) -> usize {
        self.n1 + self.m
    }

    pub fn f22(&self) -> &Factorization {
        &self.f22
    }

    /// `E_reg = diag(C1, M)`.
    pub fn e_reg(&self) -> SparseMatrix {
        SparseMatrix::from_blocks(
            &[self.n1, self.m],
            &[self.n1, self.m],
            &[
                vec![Some((&self.c1, 1.0)), None],
                vec![None, Some((&self.inductance, 1.0))],
            ],
        )
        .expect("conforming blocks")
    }

    pub fn removed_node_names(&self) -> Vec<String> {
        self.perm[self.n1..]
            .iter()
            .map(|&i| {
                self.node_names
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| format!("#{i}"))
            })
            .collect()
    }

    /// `new,old` node permutation as CSV.
    pub fn permutation_csv(&self) -> String {
        let mut s = String::from("new,old\n");
        for (new, old) in self.perm.iter().enumerate() {
            let _ = writeln!(s, "{new},{old}");
        }
        s
    }

    /// Regularized `B`, `Lᵀ` and `D` via `p + q` sparse solves with `G22`.
    pub fn build_rhs(&self) -> Result<RegularizedIo> {
        let y = self.f22.solve(&self.b2.to_dense())?;
        let b_top = self.b1.to_dense().sub(&self.g12.mul_dense(&y)?)?;
        let b_bot = self.w2t.mul_dense(&y)?;
        let z = self.f22.solve(&self.l2.transpose().to_dense())?;
        let l_top = self
            .l1
            .transpose()
            .to_dense()
            .sub(&self.g12.mul_dense(&z)?)?;
        let l_bot = self.w2t.mul_dense(&z)?.scaled(-1.0);
        let d = self.d.to_dense().add(&self.l2.mul_dense(&y)?)?;
        Ok(RegularizedIo {
            b: b_top.vcat(&b_bot)?,
            lt: l_top.vcat(&l_bot)?,
            d,
        })
    }

    fn split(&self, k: &DenseBlock, context: &'static str) -> Result<(DenseBlock, DenseBlock)> {
        if k.nrows() != self.order() {
            return Err(Error::dims(context, self.order(), k.nrows()));
        }
        Ok((k.row_range(0..self.n1), k.row_range(self.n1..self.order())))
    }

    /// Solves `A_reg [X1; X2] = [R1; R2]` through the sparse bordered system
    ///
    /// ```text
    /// [-G11  -W1  -G12] [X1]   [R1]
    /// [ W1ᵀ   0    W2ᵀ] [X2] = [R2]
    /// [-G12ᵀ -W2  -G22] [T ]   [ 0]
    /// ```
    pub fn bordered_solve(
        &self,
        r1: &DenseBlock,
        r2: &DenseBlock,
    ) -> Result<(DenseBlock, DenseBlock)> {
        if r1.nrows() != self.n1 || r2.nrows() != self.m || r1.ncols() != r2.ncols() {
            return Err(Error::dims(
                "bordered_solve",
                format!("{}xk and {}xk", self.n1, self.m),
                format!(
                    "{}x{} and {}x{}",
                    r1.nrows(),
                    r1.ncols(),
                    r2.nrows(),
                    r2.ncols()
                ),
            ));
        }
        let rhs = r1.vcat(r2)?.vcat(&DenseBlock::zeros(self.n2, r1.ncols()))?;
        let sol = self.bordered.solve(&rhs)?;
        Ok((
            sol.row_range(0..self.n1),
            sol.row_range(self.n1..self.n1 + self.m),
        ))
    }

    /// `A_reg⁻¹ R` for a stacked `(n1 + m) x k` block.
    pub fn solve_a(&self, r: &DenseBlock) -> Result<DenseBlock> {
        let (r1, r2) = self.split(r, "solve_a")?;
        let (x1, x2) = self.bordered_solve(&r1, &r2)?;
        x1.vcat(&x2)
    }

    /// `A_reg K` without forming `A_reg`: one `G22` solve for
    /// `X = G22⁻¹ (-G12ᵀ K1 - W2 K2)`, then
    /// `[[-G11, -W1], [W1ᵀ, 0]] K + [-G12; W2ᵀ] X`.
    pub fn apply_a(&self, k: &DenseBlock) -> Result<DenseBlock> {
        let (k1, k2) = self.split(k, "apply_a")?;
        let t = self
            .g12t
            .mul_dense(&k1)?
            .add(&self.w2.mul_dense(&k2)?)?
            .scaled(-1.0);
        let x = self.f22.solve(&t)?;
        let top = self
            .g11
            .mul_dense(&k1)?
            .add(&self.w1.mul_dense(&k2)?)?
            .add(&self.g12.mul_dense(&x)?)?
            .scaled(-1.0);
        let bottom = self.w1t.mul_dense(&k1)?.add(&self.w2t.mul_dense(&x)?)?;
        top.vcat(&bottom)
    }

    /// `E_reg K`.
    pub fn apply_e(&self, k: &DenseBlock) -> Result<DenseBlock> {
        let (k1, k2) = self.split(k, "apply_e")?;
        self.c1
            .mul_dense(&k1)?
            .vcat(&self.inductance.mul_dense(&k2)?)
    }

    /// Explicit `A_reg` from the left-solves `G22⁻¹ G12ᵀ` and `G22⁻¹ W2`.
    pub fn build_dense_a(&self, cap: usize) -> Result<DenseBlock> {
        let size = self.order();
        if size > cap {
            return Err(Error::CapExceeded { size, cap });
        }
        let p = self.f22.solve(&self.g12t.to_dense())?;
        let q = self.f22.solve(&self.w2.to_dense())?;
        let s11 = self.g11.to_dense().sub(&self.g12.mul_dense(&p)?)?;
        let s12 = self.w1.to_dense().sub(&self.g12.mul_dense(&q)?)?;
        let s21 = self.w2t.mul_dense(&p)?.sub(&self.w1t.to_dense())?;
        let s22 = self.w2t.mul_dense(&q)?;
        let top = s11.hcat(&s12)?;
        let bottom = s21.hcat(&s22)?;
        Ok(top.vcat(&bottom)?.scaled(-1.0))
    }

    /// Eliminated voltages `v2 = G22⁻¹ (B2 u - G12ᵀ v1 - W2 i)`.
    pub fn recover_v2(
        &self,
        v1: &DenseBlock,
        i: &DenseBlock,
        u: &DenseBlock,
    ) -> Result<DenseBlock> {
        if v1.nrows() != self.n1 || i.nrows() != self.m || u.nrows() != self.p {
            return Err(Error::dims(
                "recover_v2",
                format!("({}, {}, {}) rows", self.n1, self.m, self.p),
                format!("({}, {}, {}) rows", v1.nrows(), i.nrows(), u.nrows()),
            ));
        }
        let rhs = self
            .b2
            .mul_dense(u)?
            .sub(&self.g12t.mul_dense(v1)?)?
            .sub(&self.w2.mul_dense(i)?)?;
        self.f22.solve(&rhs)
    }

    /// Scatters partitioned node quantities `[v1; v2]` back to the original
    /// node numbering.
    pub fn unpermute_nodes(&self, v1: &DenseBlock, v2: &DenseBlock) -> Result<DenseBlock> {
        let stacked = v1.vcat(v2)?;
        let mut out = DenseBlock::zeros(stacked.nrows(), stacked.ncols());
        for j in 0..stacked.ncols() {
            for (new, &old) in self.perm.iter().enumerate() {
                out[(old, j)] = stacked[(new, j)];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{assemble_mna, parse_netlist, AssembleOptions};

    fn model(text: &str) -> DescriptorModel {
        assemble_mna(&parse_netlist(text).unwrap(), &AssembleOptions::default()).unwrap()
    }

    fn three_node() -> PartitionedModel {
        // node c is capacitance-free and grounded through R3
        let m = model("I1 a 0 1\nR1 a b 1\nR2 b c 2\nR3 c 0 4\nC1 a 0 1\nC2 b 0 2\n");
        match detect_and_partition(&m).unwrap() {
            Partition::Singular(pm) => *pm,
            Partition::Regular => panic!("expected singular"),
        }
    }

    #[test]
    fn fully_capacitive_is_regular() {
        let m = model("R1 a 0 1\nR2 b 0 1\nC1 a 0 1\nC2 b 0 1\n");
        assert!(matches!(
            detect_and_partition(&m).unwrap(),
            Partition::Regular
        ));
    }

    #[test]
    fn three_node_partition_sizes() {
        let pm = three_node();
        assert_eq!((pm.n1, pm.n2, pm.m), (2, 1, 0));
        assert_eq!(pm.perm, vec![0, 1, 2]);
        assert_eq!(pm.removed_node_names(), vec!["c".to_string()]);
        assert!(pm.permutation_csv().starts_with("new,old\n0,0\n"));
    }

    #[test]
    fn three_node_dense_a_matches_hand_schur() {
        // G = [[1,-1,0],[-1,1.5,-0.5],[0,-0.5,0.75]]; G22 = 0.75, G12 = [0; -0.5]
        // S = G11 - G12 G12ᵀ / 0.75 = [[1,-1],[-1,1.5 - 1/3]]
        let pm = three_node();
        let a = pm.build_dense_a(DEFAULT_DENSE_CAP).unwrap();
        let expect = DenseBlock::from_rows(&[&[-1.0, 1.0], &[1.0, -(1.5 - 0.25 / 0.75)]]);
        assert!(a.sub(&expect).unwrap().max_abs() < 1e-15);
        assert!(matches!(
            pm.build_dense_a(1),
            Err(Error::CapExceeded { size: 2, cap: 1 })
        ));
    }

    #[test]
    fn uncoupled_rhs_is_unchanged() {
        let pm = three_node();
        let io = pm.build_rhs().unwrap();
        // port at a, B2 = 0
        assert_eq!(io.b, DenseBlock::from_rows(&[&[1.0], &[0.0]]));
        assert_eq!(io.d.max_abs(), 0.0);
    }

    #[test]
    fn zero_inputs_recover_zero_v2() {
        let pm = three_node();
        let v2 = pm
            .recover_v2(
                &DenseBlock::zeros(2, 1),
                &DenseBlock::zeros(0, 1),
                &DenseBlock::zeros(1, 1),
            )
            .unwrap();
        assert_eq!(v2.max_abs(), 0.0);
        assert!(pm
            .recover_v2(
                &DenseBlock::zeros(3, 1),
                &DenseBlock::zeros(0, 1),
                &DenseBlock::zeros(1, 1)
            )
            .is_err());
    }

    #[test]
    fn apply_a_of_zero_is_zero() {
        let pm = three_node();
        assert_eq!(pm.apply_a(&DenseBlock::zeros(2, 3)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn floating_capacitance_free_node_is_reported() {
        // node c only touches a capacitance-free neighbour d: G22 singular
        let m = model("R1 a 0 1\nC1 a 0 1\nR2 c d 1\n");
        match detect_and_partition(&m) {
            Err(Error::SingularG22 { nodes, .. }) => {
                assert!(nodes.iter().all(|n| n == "c" || n == "d"));
            }
            other => panic!("expected SingularG22, got {other:?}"),
        }
    }
}
