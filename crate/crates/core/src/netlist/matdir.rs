// SPDX-License-Identifier: Apache-2.0

//! Pre-assembled models stored as Matrix Market files plus a JSON manifest.
//!
//! ```text
//! model/
//!   manifest.json   {"n": .., "m": .., "p": .., "q": ..}
//!   G.mtx C.mtx M.mtx W.mtx B.mtx L.mtx [D.mtx]
//! ```
//! `B` holds `B1` (n x p) and `L` holds `L1` (q x n).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DescriptorModel;
use crate::error::{Error, Result};
use crate::sparse::{mm, SparseMatrix};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelManifest {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub node_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub port_names: Vec<String>,
}

pub fn read_model_dir(dir: &Path) -> Result<DescriptorModel> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let man: ModelManifest = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: manifest_path.clone(),
        source: e,
    })?;
    let load = |name: &str| mm::read_sparse(&dir.join(name));
    let m_file = dir.join("M.mtx");
    let inductance = if m_file.exists() {
        load("M.mtx")?
    } else {
        SparseMatrix::zeros(man.m, man.m)
    };
    let w = if dir.join("W.mtx").exists() {
        load("W.mtx")?
    } else {
        SparseMatrix::zeros(man.n, man.m)
    };
    let d = if dir.join("D.mtx").exists() {
        load("D.mtx")?
    } else {
        SparseMatrix::zeros(man.q, man.p)
    };
    let model = DescriptorModel {
        n: man.n,
        m: man.m,
        p: man.p,
        q: man.q,
        g: load("G.mtx")?,
        c: load("C.mtx")?,
        inductance,
        w,
        b1: load("B.mtx")?,
        l1: load("L.mtx")?,
        d,
        node_names: if man.node_names.is_empty() {
            (0..man.n).map(|i| format!("n{i}")).collect()
        } else {
            man.node_names
        },
        port_names: if man.port_names.is_empty() {
            (0..man.p).map(|i| format!("port{i}")).collect()
        } else {
            man.port_names
        },
    };
    model.validate()?;
    Ok(model)
}

pub fn write_model_dir(dir: &Path, model: &DescriptorModel) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let man = ModelManifest {
        n: model.n,
        m: model.m,
        p: model.p,
        q: model.q,
        node_names: model.node_names.clone(),
        port_names: model.port_names.clone(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&man).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    for (name, m) in [
        ("G.mtx", &model.g),
        ("C.mtx", &model.c),
        ("M.mtx", &model.inductance),
        ("W.mtx", &model.w),
        ("B.mtx", &model.b1),
        ("L.mtx", &model.l1),
        ("D.mtx", &model.d),
    ] {
        mm::write_sparse(&dir.join(name), m)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{assemble_mna, parse_netlist, AssembleOptions};

    #[test]
    fn model_dir_round_trip() {
        let c = parse_netlist("I1 a 0 1\nR1 a b 2\nC1 a 0 1e-12\nL1 b 0 1e-9\nR2 b 0 1\n").unwrap();
        let model = assemble_mna(&c, &AssembleOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_model_dir(dir.path(), &model).unwrap();
        let back = read_model_dir(dir.path()).unwrap();
        assert_eq!(back, model);
    }
}
