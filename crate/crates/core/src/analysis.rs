// SPDX-License-Identifier: Apache-2.0

//! Frequency-domain comparison of original and reduced models.
//!
//! The original model is evaluated at `s = jω` without any complex sparse
//! arithmetic: `(jωE - A)(Xr + jXi) = B` is solved as the real system
//!
//! ```text
//! [ -A   -ωE ] [Xr]   [B]
//! [ ωE   -A  ] [Xi] = [0]
//! ```

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{Complex, ComplexMatrix, DenseBlock};
use crate::error::{Error, Result};
use crate::krylov::{Method, ReducedModel};
use crate::netlist::DescriptorModel;
use crate::sparse::{Factorization, SparseMatrix};
use crate::superpose::{assemble_h, PortDecomposition};

pub const DEFAULT_OMEGA_MIN: f64 = 1.0;
pub const DEFAULT_OMEGA_MAX: f64 = 1e12;
pub const DEFAULT_POINTS: usize = 200;

/// Angular frequencies `ω` (rad/s); samples are `s = jω`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    omega: Vec<f64>,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid::log_spaced(DEFAULT_OMEGA_MIN, DEFAULT_OMEGA_MAX, DEFAULT_POINTS)
            .expect("valid default grid")
    }
}

impl FrequencyGrid {
    pub fn log_spaced(omega_min: f64, omega_max: f64, count: usize) -> Result<Self> {
        if !(omega_min > 0.0 && omega_max > omega_min && omega_max.is_finite()) || count < 2 {
            return Err(Error::InvalidArgument(format!(
                "frequency grid needs 0 < min < max and at least 2 points, got [{omega_min}, {omega_max}] x {count}"
            )));
        }
        let (lo, hi) = (omega_min.log10(), omega_max.log10());
        let step = (hi - lo) / (count - 1) as f64;
        let mut omega: Vec<f64> = (0..count)
            .map(|i| 10f64.powf(lo + step * i as f64))
            .collect();
        omega[0] = omega_min;
        omega[count - 1] = omega_max;
        Self::from_omega(omega)
    }

    pub fn from_omega(omega: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 {
            return Err(Error::InvalidArgument(
                "frequency grid needs at least 2 points".into(),
            ));
        }
        if omega.iter().any(|w| !w.is_finite()) || omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "frequencies must be finite and strictly increasing".into(),
            ));
        }
        Ok(FrequencyGrid { omega })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn samples(&self) -> Vec<Complex> {
        self.omega.iter().map(|&w| Complex::new(0.0, w)).collect()
    }
}

/// Transfer matrices over a grid. A point that could not be evaluated has
/// `None` and a reason in `flags`.
#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub values: Vec<Option<ComplexMatrix>>,
    pub flags: Vec<Option<String>>,
}

impl Response {
    pub fn from_results(points: Vec<std::result::Result<ComplexMatrix, String>>) -> Self {
        let mut values = Vec::with_capacity(points.len());
        let mut flags = Vec::with_capacity(points.len());
        for p in points {
            match p {
                Ok(h) => {
                    values.push(Some(h));
                    flags.push(None);
                }
                Err(e) => {
                    values.push(None);
                    flags.push(Some(e));
                }
            }
        }
        Response { values, flags }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flagged(&self) -> usize {
        self.flags.iter().filter(|f| f.is_some()).count()
    }
}

/// `H(s) = L(sE - A)⁻¹B + D` on the assembled matrices, one real `2N`
/// factorization per grid point.
pub fn eval_original(model: &DescriptorModel, grid: &FrequencyGrid) -> Result<Response> {
    eval_descriptor(
        &model.e_matrix(),
        &model.a_matrix(),
        &model.b_dense(),
        &model.l_matrix(),
        &model.d.to_dense(),
        grid.omega(),
    )
}

/// Real-embedding evaluation of a sparse descriptor system at `s = jω`.
pub fn eval_descriptor(
    e: &SparseMatrix,
    a: &SparseMatrix,
    b: &DenseBlock,
    l: &SparseMatrix,
    d: &DenseBlock,
    omega: &[f64],
) -> Result<Response> {
    let n = a.nrows();
    if e.nrows() != n || b.nrows() != n || l.ncols() != n || d.shape() != (l.nrows(), b.ncols()) {
        return Err(Error::dims(
            "eval_descriptor",
            format!("order {n}"),
            "inconsistent E, B, L or D",
        ));
    }
    let rhs = b.vcat(&DenseBlock::zeros(n, b.ncols()))?;
    let points = omega
        .par_iter()
        .map(|&w| -> std::result::Result<ComplexMatrix, String> {
            let big = SparseMatrix::from_blocks(
                &[n, n],
                &[n, n],
                &[
                    vec![Some((a, -1.0)), Some((e, -w))],
                    vec![Some((e, w)), Some((a, -1.0))],
                ],
            )
            .map_err(|e| e.to_string())?;
            let lu = Factorization::new(&big).map_err(|e| e.to_string())?;
            if let Some(s) = lu.singularity() {
                return Err(format!("ω = {w:e}: pencil singular at column {}", s.column));
            }
            let x = lu.solve(&rhs).map_err(|e| e.to_string())?;
            let xr = x.row_range(0..n);
            let xi = x.row_range(n..2 * n);
            let hr = l
                .mul_dense(&xr)
                .map_err(|e| e.to_string())?
                .add(d)
                .map_err(|e| e.to_string())?;
            let hi = l.mul_dense(&xi).map_err(|e| e.to_string())?;
            if !hr.is_finite() || !hi.is_finite() {
                return Err(format!("ω = {w:e}: non-finite response"));
            }
            Ok(ComplexMatrix::from_fn(hr.nrows(), hr.ncols(), |i, j| {
                Complex::new(hr[(i, j)], hi[(i, j)])
            }))
        })
        .collect();
    Ok(Response::from_results(points))
}

/// Superposed reduced response, see [`assemble_h`].
pub fn eval_reduced(pd: &PortDecomposition, grid: &FrequencyGrid) -> Result<Response> {
    assemble_h(pd, &grid.samples())
}

/// Response of a single (possibly multi-input) dense model.
pub fn eval_rom(rom: &ReducedModel, grid: &FrequencyGrid) -> Response {
    let points = grid
        .samples()
        .par_iter()
        .map(|&s| rom.transfer(s).map_err(|e| format!("s = {s}: {e}")))
        .collect();
    Response::from_results(points)
}

/// Error of an approximation against a reference over the common
/// unflagged points.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorCurve {
    /// `σ_max(H̃ - H)` per grid point; `None` where either side is flagged.
    pub sigma: Vec<Option<f64>>,
    /// Grid maximum of `sigma`.
    pub max_sigma: f64,
    /// Index of the grid point attaining `max_sigma`.
    pub argmax: usize,
    /// Grid maximum of `|H̃_ij - H_ij|` for every port pair, `q x p`.
    pub entrywise: DenseBlock,
    pub skipped: usize,
}

impl ErrorCurve {
    pub fn max_entrywise(&self) -> f64 {
        self.entrywise.max_abs()
    }
}

pub fn sigma_max(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn max_error(reference: &Response, approx: &Response) -> Result<ErrorCurve> {
    if reference.len() != approx.len() {
        return Err(Error::dims("max_error", reference.len(), approx.len()));
    }
    let mut sigma = Vec::with_capacity(reference.len());
    let mut entrywise: Option<DenseBlock> = None;
    let (mut best, mut argmax, mut skipped) = (f64::NEG_INFINITY, 0, 0);
    for (i, (h, g)) in reference.values.iter().zip(&approx.values).enumerate() {
        match (h, g) {
            (Some(h), Some(g)) => {
                if h.shape() != g.shape() {
                    return Err(Error::dims(
                        "max_error point",
                        format!("{:?}", h.shape()),
                        format!("{:?}", g.shape()),
                    ));
                }
                let diff = g - h;
                let s = sigma_max(&diff);
                let ent = entrywise.get_or_insert_with(|| DenseBlock::zeros(h.nrows(), h.ncols()));
                for c in 0..diff.ncols() {
                    for r in 0..diff.nrows() {
                        ent[(r, c)] = ent[(r, c)].max(diff[(r, c)].norm());
                    }
                }
                if s > best {
                    best = s;
                    argmax = i;
                }
                sigma.push(Some(s));
            }
            _ => {
                skipped += 1;
                sigma.push(None);
            }
        }
    }
    let entrywise = entrywise
        .ok_or_else(|| Error::InvalidArgument("no grid point is evaluated on both sides".into()))?;
    Ok(ErrorCurve {
        sigma,
        max_sigma: best,
        argmax,
        entrywise,
        skipped,
    })
}

/// `100 (err_mm - err_eks) / err_mm`, undefined when `err_mm` is zero.
pub fn error_reduction(err_mm: f64, err_eks: f64) -> Option<f64> {
    (err_mm > 0.0 && err_mm.is_finite() && err_eks.is_finite())
        .then(|| 100.0 * (err_mm - err_eks) / err_mm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub moments: usize,
    /// Largest per-port ROM order.
    pub rom_order: usize,
    /// Sum of per-port ROM orders.
    pub total_order: usize,
    pub max_error: Option<f64>,
    pub max_entrywise_error: Option<f64>,
    pub omega_at_max: Option<f64>,
    pub flagged_points: usize,
    pub runtime_total_s: f64,
    pub runtime_per_port_mean_s: f64,
}

/// Summary of one comparison run, one row of a results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub schema: u32,
    pub dimension: usize,
    pub ports: usize,
    pub outputs: usize,
    pub regularized: bool,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub methods: Vec<MethodSummary>,
    pub error_reduction_percent: Option<f64>,
    pub warnings: Vec<String>,
}

impl ErrorReport {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }

    /// Fills `error_reduction_percent` from the MM and EKS rows.
    pub fn update_reduction(&mut self) {
        self.error_reduction_percent = match (
            self.method(Method::Mm).and_then(|s| s.max_error),
            self.method(Method::Eks).and_then(|s| s.max_error),
        ) {
            (Some(mm), Some(eks)) => error_reduction(mm, eks),
            _ => None,
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Bode data for port pair `(out, inp)`:
/// `omega,H,H_mm,H_eks,abs_err_mm,abs_err_eks` with magnitudes. Missing
/// methods or flagged points leave empty fields.
pub fn bode_csv(
    grid: &FrequencyGrid,
    original: &Response,
    mm: Option<&Response>,
    eks: Option<&Response>,
    out: usize,
    inp: usize,
) -> String {
    let mut s = String::from("omega,H,H_mm,H_eks,abs_err_mm,abs_err_eks\n");
    let entry = |r: Option<&Response>, i: usize| {
        r.and_then(|r| r.values[i].as_ref()).map(|m| m[(out, inp)])
    };
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
    for (i, &w) in grid.omega().iter().enumerate() {
        let h = entry(Some(original), i);
        let hm = entry(mm, i);
        let he = entry(eks, i);
        let err = |g: Option<Complex>| h.zip(g).map(|(h, g)| (g - h).norm());
        let _ = writeln!(
            s,
            "{w:.10e},{},{},{},{},{}",
            fmt(h.map(|c| c.norm())),
            fmt(hm.map(|c| c.norm())),
            fmt(he.map(|c| c.norm())),
            fmt(err(hm)),
            fmt(err(he)),
        );
    }
    s
}
