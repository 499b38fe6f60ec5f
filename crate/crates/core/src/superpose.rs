// SPDX-License-Identifier: Apache-2.0

//! Per-port reduction by superposition.
//!
//! The response of the MIMO model is the sum of its single-input responses,
//! so every input column `B_i` gets its own basis and reduced model and
//! the reduced transfer matrix is assembled column by column:
//! `H̃(s) = [H̃_1(s), …, H̃_p(s)]` with `H̃_i(s) = L̃_i(sẼ_i - Ã_i)⁻¹B̃_i + D_i`.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::Response;
use crate::dense::{Complex, ComplexMatrix};
use crate::error::{Error, Result};
use crate::krylov::{
    build_basis, project, BasisOptions, Method, OperatorPair, ProjectionBasis, ReducedModel,
};

#[derive(Clone, Debug)]
pub struct PortReduction {
    pub port: usize,
    pub basis: ProjectionBasis,
    pub rom: ReducedModel,
    /// Wall time to build this port's basis and reduced model.
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortFailure {
    pub port: usize,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct PortDecomposition {
    pub method: Method,
    pub k: usize,
    pub p: usize,
    pub q: usize,
    /// Successful ports in port order.
    pub ports: Vec<PortReduction>,
    pub failures: Vec<PortFailure>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReduceOptions {
    /// Caps concurrent port reductions; `None` uses the global pool.
    pub workers: Option<usize>,
    pub basis: BasisOptions,
}

pub fn reduce_all_ports(ops: &OperatorPair, method: Method, k: usize) -> Result<PortDecomposition> {
    reduce_all_ports_with(ops, method, k, &ReduceOptions::default())
}

/// Reduces every input column independently. Per-port failures are
/// collected in [`PortDecomposition::failures`]; only invalid arguments
/// fail the whole call.
pub fn reduce_all_ports_with(
    ops: &OperatorPair,
    method: Method,
    k: usize,
    opts: &ReduceOptions,
) -> Result<PortDecomposition> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "moment count k must be at least 1".into(),
        ));
    }
    let run = || -> Vec<(usize, Result<PortReduction>)> {
        (0..ops.p())
            .into_par_iter()
            .map(|port| (port, reduce_port(ops, method, k, port, opts.basis)))
            .collect()
    };
    let results = match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut ports = Vec::new();
    let mut failures = Vec::new();
    for (port, r) in results {
        match r {
            Ok(pr) => ports.push(pr),
            Err(e) => failures.push(PortFailure {
                port,
                error: e.to_string(),
            }),
        }
    }
    Ok(PortDecomposition {
        method,
        k,
        p: ops.p(),
        q: ops.q(),
        ports,
        failures,
    })
}

/// Basis and reduced model for input column `port` alone.
pub fn reduce_port(
    ops: &OperatorPair,
    method: Method,
    k: usize,
    port: usize,
    opts: BasisOptions,
) -> Result<PortReduction> {
    let start = Instant::now();
    let b = ops.b().select_columns(&[port]);
    let basis = build_basis(ops, method, &b, k, opts)?;
    let rom = project(ops, &basis, &[port])?;
    Ok(PortReduction {
        port,
        basis,
        rom,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Evaluates `H̃(s)` at every sample. A sample where any port's shifted
/// matrix is singular is flagged rather than failing the call.
pub fn assemble_h(pd: &PortDecomposition, samples: &[Complex]) -> Result<Response> {
    pd.require_complete()?;
    let points: Vec<std::result::Result<ComplexMatrix, String>> = samples
        .par_iter()
        .map(|&s| {
            let mut h = ComplexMatrix::zeros(pd.q, pd.p);
            for pr in &pd.ports {
                let col = pr
                    .rom
                    .transfer(s)
                    .map_err(|e| format!("port {}: {e}", pr.port))?;
                h.set_column(pr.port, &col.column(0));
            }
            Ok(h)
        })
        .collect();
    Ok(Response::from_results(points))
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    port: usize,
    dir: String,
    order: usize,
    k_effective: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    warning: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct IndexManifest {
    schema: u32,
    method: Method,
    k: usize,
    p: usize,
    q: usize,
    ports: Vec<IndexEntry>,
    failures: Vec<PortFailure>,
}

impl PortDecomposition {
    pub fn require_complete(&self) -> Result<()> {
        if self.ports.len() != self.p {
            let missing: Vec<String> = self
                .failures
                .iter()
                .map(|f| format!("{}: {}", f.port, f.error))
                .collect();
            return Err(Error::InvalidArgument(format!(
                "{} of {} port models missing ({})",
                self.p - self.ports.len(),
                self.p,
                missing.join("; ")
            )));
        }
        Ok(())
    }

    /// Largest per-port reduced order.
    pub fn rom_order(&self) -> usize {
        self.ports.iter().map(|p| p.rom.order()).max().unwrap_or(0)
    }

    pub fn total_seconds(&self) -> f64 {
        self.ports.iter().map(|p| p.seconds).sum()
    }

    pub fn mean_seconds(&self) -> f64 {
        if self.ports.is_empty() {
            0.0
        } else {
            self.total_seconds() / self.ports.len() as f64
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        self.ports
            .iter()
            .filter_map(|p| p.basis.warning().map(|w| format!("port {}: {w}", p.port)))
            .collect()
    }

    /// Worst `‖XᵀX - I‖_max` over all port bases.
    pub fn worst_orthonormality(&self) -> f64 {
        self.ports
            .iter()
            .map(|p| p.basis.orthonormality_defect())
            .fold(0.0, f64::max)
    }

    /// Writes `port_XXXX/` per reduced port plus `index.json`. The output
    /// depends only on the reduced models, never on timing.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.ports.len());
        for pr in &self.ports {
            let name = format!("port_{:04}", pr.port);
            pr.rom.write_dir(&dir.join(&name))?;
            entries.push(IndexEntry {
                port: pr.port,
                dir: name,
                order: pr.rom.order(),
                k_effective: pr.basis.k_effective,
                warning: pr.basis.warning(),
            });
        }
        let index = IndexManifest {
            schema: 1,
            method: self.method,
            k: self.k,
            p: self.p,
            q: self.q,
            ports: entries,
            failures: self.failures.clone(),
        };
        let path = dir.join("index.json");
        let text = serde_json::to_string_pretty(&index).expect("index serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Reads reduced models back. Bases and timings are not stored, so the
    /// returned entries carry empty bases and zero seconds.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let path = dir.join("index.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let index: IndexManifest =
            serde_json::from_str(&text).map_err(|e| Error::Json { path, source: e })?;
        let mut ports = Vec::with_capacity(index.ports.len());
        for entry in &index.ports {
            let rom = ReducedModel::read_dir(&dir.join(&entry.dir))?;
            ports.push(PortReduction {
                port: entry.port,
                basis: ProjectionBasis {
                    x: crate::dense::DenseBlock::zeros(rom.provenance.original_order, 0),
                    ledger: Vec::new(),
                    method: index.method,
                    k: index.k,
                    k_effective: entry.k_effective,
                    p: 1,
                    status: rom.provenance.status.clone(),
                },
                rom,
                seconds: 0.0,
            });
        }
        Ok(PortDecomposition {
            method: index.method,
            k: index.k,
            p: index.p,
            q: index.q,
            ports,
            failures: index.failures,
        })
    }
}
