// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BasisStatus, Method, OperatorPair, ProjectionBasis};
use crate::dense::{Complex, ComplexMatrix, DenseBlock};
use crate::error::{Error, Result};
use crate::netlist::DescriptorModel;
use crate::sparse::mm;

/// Largest state dimension accepted by the moment oracles.
pub const DEFAULT_MOMENT_CAP: usize = 2000;

/// Where a reduced model came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `None` for an unprojected (densified) model.
    pub method: Option<Method>,
    pub k: usize,
    pub k_effective: usize,
    /// Input column this model was reduced for, if single-input.
    pub port: Option<usize>,
    pub original_order: usize,
    #[serde(flatten)]
    pub status: BasisStatus,
}

/// Dense reduced descriptor model `(Ẽ, Ã, B̃, L̃, D)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedModel {
    pub e: DenseBlock,
    pub a: DenseBlock,
    pub b: DenseBlock,
    pub l: DenseBlock,
    pub d: DenseBlock,
    pub provenance: Provenance,
}

/// One-sided projection `Ẽ = XᵀEX`, `Ã = XᵀAX`, `B̃ = XᵀB`, `L̃ = LX` onto
/// the inputs `inputs` of the realization.
pub fn project(
    ops: &OperatorPair,
    basis: &ProjectionBasis,
    inputs: &[usize],
) -> Result<ReducedModel> {
    let x = &basis.x;
    if x.nrows() != ops.dim() {
        return Err(Error::dims("project", ops.dim(), x.nrows()));
    }
    if let Some(&bad) = inputs.iter().find(|&&i| i >= ops.p()) {
        return Err(Error::InvalidArgument(format!(
            "input {bad} out of range for {} ports",
            ops.p()
        )));
    }
    let e = x.t_matmul(&ops.apply_e(x)?)?;
    let a = x.t_matmul(&ops.apply_a(x)?)?;
    let b = x.t_matmul(&ops.b().select_columns(inputs))?;
    let l = ops.lt().t_matmul(x)?;
    let d = ops.d().select_columns(inputs);
    Ok(ReducedModel {
        e,
        a,
        b,
        l,
        d,
        provenance: Provenance {
            method: Some(basis.method),
            k: basis.k,
            k_effective: basis.k_effective,
            port: (inputs.len() == 1).then(|| inputs[0]),
            original_order: ops.dim(),
            status: basis.status.clone(),
        },
    })
}

/// `M_i = L (A⁻¹E)^i A⁻¹ B` for `i = 0..=i_max`, by repeated sparse solves.
pub fn moments(ops: &OperatorPair, i_max: usize, cap: usize) -> Result<Vec<DenseBlock>> {
    if ops.dim() > cap {
        return Err(Error::CapExceeded {
            size: ops.dim(),
            cap,
        });
    }
    let mut v = ops.solve_a(ops.b())?;
    let mut out = Vec::with_capacity(i_max + 1);
    for i in 0..=i_max {
        out.push(ops.lt().t_matmul(&v)?);
        if i < i_max {
            v = ops.apply_ae(&v)?;
        }
    }
    Ok(out)
}

/// Moments of the assembled model itself, without regularization.
pub fn moments_original(
    model: &DescriptorModel,
    i_max: usize,
    cap: usize,
) -> Result<Vec<DenseBlock>> {
    if model.order() > cap {
        return Err(Error::CapExceeded {
            size: model.order(),
            cap,
        });
    }
    let ops = OperatorPair::from_matrices(
        model.e_matrix(),
        model.a_matrix(),
        model.b_dense(),
        model.lt_dense(),
        model.d.to_dense(),
    )?;
    moments(&ops, i_max, cap)
}

#[derive(Serialize, Deserialize)]
struct RomManifest {
    schema: u32,
    order: usize,
    inputs: usize,
    outputs: usize,
    #[serde(flatten)]
    provenance: Provenance,
}

impl ReducedModel {
    /// The realization itself, unprojected (`X = I`).
    pub fn densify(ops: &OperatorPair, cap: usize) -> Result<Self> {
        let a = ops.dense_a(cap)?;
        Ok(ReducedModel {
            e: ops.e().to_dense(),
            a,
            b: ops.b().clone(),
            l: ops.lt().transpose(),
            d: ops.d().clone(),
            provenance: Provenance {
                method: None,
                k: 0,
                k_effective: 0,
                port: None,
                original_order: ops.dim(),
                status: BasisStatus::Complete,
            },
        })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.l.nrows()
    }

    /// `L̃ (sẼ - Ã)⁻¹ B̃ + D` by a dense complex LU.
    pub fn transfer(&self, s: Complex) -> Result<ComplexMatrix> {
        if self.order() == 0 {
            return Ok(self.d.to_complex());
        }
        let e = self.e.to_complex();
        let a = self.a.to_complex();
        let pencil = e * s - a;
        let rhs = self.b.to_complex();
        let x = pencil.lu().solve(&rhs).ok_or(Error::Singular {
            column: 0,
            pivot: 0.0,
        })?;
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Singular {
                column: 0,
                pivot: 0.0,
            });
        }
        Ok(self.l.to_complex() * x + self.d.to_complex())
    }

    /// Moments of the reduced model, same convention as [`moments`].
    pub fn moments(&self, i_max: usize) -> Result<Vec<DenseBlock>> {
        if self.order() == 0 {
            return Ok(vec![
                DenseBlock::zeros(self.outputs(), self.inputs());
                i_max + 1
            ]);
        }
        let lu = self.a.to_nalgebra().lu();
        let solve = |m: &nalgebra::DMatrix<f64>| {
            lu.solve(m).ok_or(Error::Singular {
                column: 0,
                pivot: 0.0,
            })
        };
        let e = self.e.to_nalgebra();
        let l = self.l.to_nalgebra();
        let mut v = solve(&self.b.to_nalgebra())?;
        let mut out = Vec::with_capacity(i_max + 1);
        for i in 0..=i_max {
            out.push(DenseBlock::from_nalgebra(&(&l * &v)));
            if i < i_max {
                v = solve(&(&e * &v))?;
            }
        }
        Ok(out)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, m) in [
            ("E", &self.e),
            ("A", &self.a),
            ("B", &self.b),
            ("L", &self.l),
            ("D", &self.d),
        ] {
            mm::write_dense(&dir.join(format!("{name}.mtx")), m)?;
        }
        let man = RomManifest {
            schema: 1,
            order: self.order(),
            inputs: self.inputs(),
            outputs: self.outputs(),
            provenance: self.provenance.clone(),
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&man).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let man: RomManifest =
            serde_json::from_str(&text).map_err(|e| Error::Json { path, source: e })?;
        let load = |name: &str| mm::read_dense(&dir.join(format!("{name}.mtx")));
        let rom = ReducedModel {
            e: load("E")?,
            a: load("A")?,
            b: load("B")?,
            l: load("L")?,
            d: load("D")?,
            provenance: man.provenance,
        };
        let r = rom.order();
        if rom.e.shape() != (r, r)
            || rom.b.nrows() != r
            || rom.l.ncols() != r
            || rom.d.shape() != (rom.outputs(), rom.inputs())
        {
            return Err(Error::dims(
                "reduced model files",
                format!("order {r}"),
                dir.display(),
            ));
        }
        Ok(rom)
    }
}
