// SPDX-License-Identifier: Apache-2.0

use super::{Circuit, ElementKind};
use crate::dense::DenseBlock;
use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// MNA descriptor model
///
/// ```text
/// [ G   W ] [v]   [ C  0 ] d [v]   [B1]
/// [-Wᵀ  0 ] [i] + [ 0  M ] dt[i] = [ 0] u,     y = [L1 0] x + D u
/// ```
///
/// with `E = diag(C, M)`, `A = -[[G, W], [-Wᵀ, 0]]`, `B = [B1; 0]`,
/// `L = [L1, 0]` and order `N = n + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorModel {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub g: SparseMatrix,
    pub c: SparseMatrix,
    pub inductance: SparseMatrix,
    pub w: SparseMatrix,
    pub b1: SparseMatrix,
    pub l1: SparseMatrix,
    pub d: SparseMatrix,
    pub node_names: Vec<String>,
    pub port_names: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct AssembleOptions {
    /// Series resistance inserted in front of every ideal voltage source
    /// before its Norton conversion.
    pub vsource_resistance: f64,
    /// Also treat Norton-converted voltage sources as input ports.
    pub vsource_ports: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            vsource_resistance: 1e-6,
            vsource_ports: false,
        }
    }
}

/// Stamps a circuit into its MNA matrices.
pub fn assemble_mna(circuit: &Circuit, opts: &AssembleOptions) -> Result<DescriptorModel> {
    let n = circuit.node_count();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "circuit has no non-ground nodes".into(),
        ));
    }
    if opts.vsource_resistance <= 0.0 {
        return Err(Error::InvalidArgument(
            "voltage-source series resistance must be positive".into(),
        ));
    }
    let m = circuit.count(ElementKind::Inductor);
    let mut g = TripletBuilder::new(n, n);
    let mut c = TripletBuilder::new(n, n);
    let mut w = TripletBuilder::new(n, m);
    let mut inductance = Vec::with_capacity(m);

    let mut ports = circuit.ports();
    for e in circuit.elements() {
        match e.kind {
            ElementKind::Resistor => g.stamp_pair(e.a, e.b, 1.0 / e.value),
            ElementKind::Capacitor => c.stamp_pair(e.a, e.b, e.value),
            ElementKind::Inductor => {
                if e.a == e.b {
                    return Err(Error::InvalidElement {
                        name: e.name.clone(),
                        message: "inductor terminals coincide; its branch row would be empty"
                            .into(),
                    });
                }
                let j = inductance.len();
                if let Some(a) = e.a {
                    w.push(a, j, 1.0);
                }
                if let Some(b) = e.b {
                    w.push(b, j, -1.0);
                }
                inductance.push(e.value);
            }
            ElementKind::VoltageSource => {
                g.stamp_pair(e.a, e.b, 1.0 / opts.vsource_resistance);
                if opts.vsource_ports
                    && e.a != e.b
                    && !ports.iter().any(|p| p.a == e.a && p.b == e.b)
                {
                    ports.push(super::Port {
                        name: e.name.clone(),
                        a: e.a,
                        b: e.b,
                    });
                }
            }
            ElementKind::CurrentSource => {}
        }
    }

    let p = ports.len();
    let mut b1 = TripletBuilder::new(n, p);
    for (k, port) in ports.iter().enumerate() {
        if let Some(a) = port.a {
            b1.push(a, k, 1.0);
        }
        if let Some(b) = port.b {
            b1.push(b, k, -1.0);
        }
    }
    let b1 = b1.build()?;
    let l1 = b1.transpose();
    Ok(DescriptorModel {
        n,
        m,
        p,
        q: p,
        g: g.build()?,
        c: c.build()?,
        inductance: SparseMatrix::diagonal(&inductance),
        w: w.build()?,
        b1,
        l1,
        d: SparseMatrix::zeros(p, p),
        node_names: circuit.node_names().to_vec(),
        port_names: ports.into_iter().map(|p| p.name).collect(),
    })
}

/// Per-port input matrices `B_i` (each `N x 1`), one for every column of `B`.
pub fn split_ports(model: &DescriptorModel) -> Vec<SparseMatrix> {
    let b = model.b_matrix();
    (0..model.p)
        .map(|i| b.submatrix(&(0..model.order()).collect::<Vec<_>>(), &[i]))
        .collect()
}

impl DescriptorModel {
    pub fn order(&self) -> usize {
        self.n + self.m
    }

    /// `E = diag(C, M)`.
    pub fn e_matrix(&self) -> SparseMatrix {
        SparseMatrix::from_blocks(
            &[self.n, self.m],
            &[self.n, self.m],
            &[
                vec![Some((&self.c, 1.0)), None],
                vec![None, Some((&self.inductance, 1.0))],
            ],
        )
        .expect("conforming blocks")
    }

    /// `A = -[[G, W], [-Wᵀ, 0]]`.
    pub fn a_matrix(&self) -> SparseMatrix {
        let wt = self.w.transpose();
        SparseMatrix::from_blocks(
            &[self.n, self.m],
            &[self.n, self.m],
            &[
                vec![Some((&self.g, -1.0)), Some((&self.w, -1.0))],
                vec![Some((&wt, 1.0)), None],
            ],
        )
        .expect("conforming blocks")
    }

    /// `B = [B1; 0]`.
    pub fn b_matrix(&self) -> SparseMatrix {
        SparseMatrix::from_blocks(
            &[self.n, self.m],
            &[self.p],
            &[vec![Some((&self.b1, 1.0))], vec![None]],
        )
        .expect("conforming blocks")
    }

    /// `L = [L1, 0]`.
    pub fn l_matrix(&self) -> SparseMatrix {
        SparseMatrix::from_blocks(
            &[self.q],
            &[self.n, self.m],
            &[vec![Some((&self.l1, 1.0)), None]],
        )
        .expect("conforming blocks")
    }

    pub fn b_dense(&self) -> DenseBlock {
        self.b_matrix().to_dense()
    }

    /// `Lᵀ` as a dense `N x q` block.
    pub fn lt_dense(&self) -> DenseBlock {
        self.l_matrix().transpose().to_dense()
    }

    /// Nodes with an all-zero row in `C` (entries at or below `threshold`).
    pub fn capacitance_free_nodes(&self, threshold: f64) -> Vec<usize> {
        let rows = self.c.row_max_abs();
        rows.iter()
            .enumerate()
            .filter(|(_, &v)| v <= threshold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn node_label(&self, i: usize) -> String {
        self.node_names
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("#{i}"))
    }

    /// Extracts the model restricted to the input columns `cols`.
    pub fn with_inputs(&self, cols: &[usize]) -> DescriptorModel {
        let rows: Vec<usize> = (0..self.n).collect();
        let b1 = self.b1.submatrix(&rows, cols);
        let out_rows: Vec<usize> = (0..self.q).collect();
        DescriptorModel {
            p: cols.len(),
            b1,
            d: self.d.submatrix(&out_rows, cols),
            port_names: cols.iter().map(|&c| self.port_names[c].clone()).collect(),
            ..self.clone()
        }
    }

    /// Checks the structural and value invariants of an assembled model.
    pub fn validate(&self) -> Result<()> {
        let shape = |name: &'static str, m: &SparseMatrix, r: usize, c: usize| {
            if m.nrows() == r && m.ncols() == c {
                Ok(())
            } else {
                Err(Error::dims(
                    name,
                    format!("{r}x{c}"),
                    format!("{}x{}", m.nrows(), m.ncols()),
                ))
            }
        };
        shape("G", &self.g, self.n, self.n)?;
        shape("C", &self.c, self.n, self.n)?;
        shape("M", &self.inductance, self.m, self.m)?;
        shape("W", &self.w, self.n, self.m)?;
        shape("B1", &self.b1, self.n, self.p)?;
        shape("L1", &self.l1, self.q, self.n)?;
        shape("D", &self.d, self.q, self.p)?;
        if self.c.diagonal_values().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "C has a negative diagonal entry".into(),
            ));
        }
        if let Some((j, _)) = self
            .inductance
            .diagonal_values()
            .iter()
            .enumerate()
            .find(|(_, &v)| v <= 0.0)
        {
            return Err(Error::InvalidArgument(format!(
                "inductance matrix has a nonpositive diagonal at branch {j}"
            )));
        }
        Ok(())
    }
}
