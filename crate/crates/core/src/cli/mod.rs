// SPDX-License-Identifier: Apache-2.0

//! Batch pipelines behind the `eksmor` binary.
//!
//! Each `cmd_*` function takes a [`RunConfig`], runs
//! parse → assemble → regularize → reduce → analyse as far as it needs,
//! and writes its results under `config.out` when set.
//!
//! ```text
//! out/
//!   manifest.json            run record, embeds the RunConfig
//!   regularization/permutation.csv
//!   mm/index.json  mm/port_0000/{E,A,B,L,D}.mtx + manifest.json  ...
//!   eks/...
//!   report.json  bode_<out>_<in>.csv      (compare)
//!   moments.json                          (moments)
//! ```

mod args;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use args::{main_entry, run, Cli, Command};

use crate::analysis::{
    bode_csv, eval_original, eval_reduced, max_error, ErrorReport, FrequencyGrid, MethodSummary,
    Response,
};
use crate::dense::DenseBlock;
use crate::error::{Error, Result};
use crate::krylov::{
    make_operators_with, moments_original, Method, OperatorPair, Realization, DEFAULT_MOMENT_CAP,
};
use crate::netlist::{
    assemble_mna, parse_netlist, parse_port_list, read_model_dir, AssembleOptions, DescriptorModel,
};
use crate::regularize::{DEFAULT_DENSE_CAP, DEFAULT_ZERO_CAPACITANCE};
use crate::superpose::{reduce_all_ports_with, PortDecomposition, ReduceOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    #[default]
    Spice,
    MmDir,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodSet {
    Mm,
    Eks,
    #[default]
    Both,
}

impl MethodSet {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodSet::Mm => vec![Method::Mm],
            MethodSet::Eks => vec![Method::Eks],
            MethodSet::Both => vec![Method::Mm, Method::Eks],
        }
    }
}

/// Everything a run depends on. Serialized into every manifest so a run
/// can be replayed with `--config manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub method: MethodSet,
    /// Moments per method, used literally for every method.
    pub k: Option<usize>,
    /// Total ROM order `r`; each method gets the `k` reaching it.
    pub order: Option<usize>,
    /// Grid bounds in rad/s.
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub ports: Option<PathBuf>,
    pub add_cap: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub dense_cap: usize,
    pub zero_cap: f64,
    pub vsource_resistance: f64,
    pub vsource_ports: bool,
    /// Port pairs `(output, input)` written as Bode CSVs by `compare`.
    pub pairs: Vec<(usize, usize)>,
    /// `compare`: reuse ROMs from an earlier `reduce` output directory.
    pub roms: Option<PathBuf>,
    /// `moments`: highest moment index.
    pub imax: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            format: InputFormat::Spice,
            method: MethodSet::Both,
            k: None,
            order: None,
            omega_min: crate::analysis::DEFAULT_OMEGA_MIN,
            omega_max: crate::analysis::DEFAULT_OMEGA_MAX,
            points: crate::analysis::DEFAULT_POINTS,
            ports: None,
            add_cap: None,
            seed: None,
            workers: None,
            out: None,
            dense_cap: DEFAULT_DENSE_CAP,
            zero_cap: DEFAULT_ZERO_CAPACITANCE,
            vsource_resistance: AssembleOptions::default().vsource_resistance,
            vsource_ports: false,
            pairs: Vec::new(),
            roms: None,
            imax: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file. A run manifest is accepted too; its embedded
    /// `config` is used.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        let value = match value.get("config") {
            Some(c) if value.get("schema").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::log_spaced(self.omega_min, self.omega_max, self.points)
    }

    pub fn validate(&self) -> Result<()> {
        if self.add_cap.is_some() && self.seed.is_none() {
            return Err(Error::InvalidArgument(
                "capacitance augmentation needs a seed".into(),
            ));
        }
        if let Some(c) = self.add_cap {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "augmentation capacitance must be positive, got {c}"
                )));
            }
        }
        if self.k == Some(0) || self.order == Some(0) {
            return Err(Error::InvalidArgument(
                "k and order must be positive".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument(
                "worker count must be positive".into(),
            ));
        }
        Ok(())
    }

    fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("no input given".into()))
    }

    /// Moment count per method for a model with `p` ports, plus warnings.
    /// Without `k` or `order` both methods default to ROM order `2p`.
    pub fn plan(&self, p: usize) -> Result<(Vec<MethodPlan>, Vec<String>)> {
        let mut warnings = Vec::new();
        if self.k.is_some() && self.order.is_some() {
            warnings.push("both k and order given; k is used".into());
        }
        let mut plans = Vec::new();
        for method in self.method.methods() {
            let plan = match (self.k, self.order) {
                (Some(k), _) => MethodPlan {
                    method,
                    k,
                    order_requested: None,
                    rounded: false,
                },
                (None, order) => {
                    let r = order.unwrap_or(2 * p.max(1));
                    let (k, exact) = method.moments_for_order(r, p.max(1))?;
                    if !exact {
                        warnings.push(format!(
                            "{method}: order {r} is not a multiple of {} for {p} ports; k rounded up to {k}",
                            method.columns_per_port(1) * p.max(1)
                        ));
                    }
                    MethodPlan {
                        method,
                        k,
                        order_requested: Some(r),
                        rounded: !exact,
                    }
                }
            };
            plans.push(plan);
        }
        Ok((plans, warnings))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodPlan {
    pub method: Method,
    pub k: usize,
    pub order_requested: Option<usize>,
    pub rounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub order: usize,
    pub nnz_g: usize,
    pub nnz_c: usize,
    pub capacitance_free_nodes: usize,
    pub symmetric_g: bool,
}

impl ModelInfo {
    pub fn of(model: &DescriptorModel, zero_cap: f64) -> Self {
        ModelInfo {
            n: model.n,
            m: model.m,
            p: model.p,
            q: model.q,
            order: model.order(),
            nnz_g: model.g.nnz(),
            nnz_c: model.c.nnz(),
            capacitance_free_nodes: model.capacitance_free_nodes(zero_cap).len(),
            symmetric_g: model.g.is_symmetric(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub n1: usize,
    pub n2: usize,
    pub reduced_order: usize,
    pub removed_nodes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    #[serde(flatten)]
    pub plan: MethodPlan,
    pub rom_dir: Option<String>,
    /// Largest per-port ROM order.
    pub rom_order: usize,
    /// Sum of per-port ROM orders.
    pub total_order: usize,
    pub ports_reduced: usize,
    pub failures: usize,
    pub runtime_total_s: f64,
    pub runtime_per_port_mean_s: f64,
    pub worst_orthonormality: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool: String,
    pub command: String,
    pub config: RunConfig,
    pub model: ModelInfo,
    pub regularization: Option<Regularization>,
    pub methods: Vec<MethodRecord>,
    pub stages: Vec<StageTime>,
    pub warnings: Vec<String>,
}

/// A loaded model together with the operators it is reduced through.
pub struct Pipeline {
    pub config: RunConfig,
    pub model: DescriptorModel,
    pub ops: OperatorPair,
    pub stages: Vec<StageTime>,
    pub warnings: Vec<String>,
}

struct Stopwatch<'a> {
    stages: &'a mut Vec<StageTime>,
    start: Instant,
}

impl<'a> Stopwatch<'a> {
    fn new(stages: &'a mut Vec<StageTime>) -> Self {
        Stopwatch {
            stages,
            start: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages.push(StageTime {
            stage: stage.into(),
            seconds: (now - self.start).as_secs_f64(),
        });
        self.start = now;
    }
}

/// Reads the input named by `cfg` and assembles its descriptor model.
pub fn load_model(cfg: &RunConfig) -> Result<(DescriptorModel, Vec<String>)> {
    cfg.validate()?;
    let input = cfg.input()?;
    let mut warnings = Vec::new();
    let port_names = match &cfg.ports {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e).in_stage("read"))?;
            Some(parse_port_list(&text))
        }
        None => None,
    };
    let model = match cfg.format {
        InputFormat::Spice => {
            let text =
                std::fs::read_to_string(input).map_err(|e| Error::io(input, e).in_stage("read"))?;
            let mut circuit = parse_netlist(&text).map_err(|e| e.in_stage("parse"))?;
            if let Some(names) = &port_names {
                circuit.set_ports(names).map_err(|e| e.in_stage("ports"))?;
            }
            if let (Some(c), Some(seed)) = (cfg.add_cap, cfg.seed) {
                circuit
                    .augment_capacitance(c, seed)
                    .map_err(|e| e.in_stage("augment"))?;
            }
            let opts = AssembleOptions {
                vsource_resistance: cfg.vsource_resistance,
                vsource_ports: cfg.vsource_ports,
            };
            assemble_mna(&circuit, &opts).map_err(|e| e.in_stage("assemble"))?
        }
        InputFormat::MmDir => {
            if cfg.add_cap.is_some() {
                warnings.push("capacitance augmentation applies to netlists only; ignored".into());
            }
            let model = read_model_dir(input).map_err(|e| e.in_stage("read"))?;
            match &port_names {
                Some(names) => {
                    let mut cols = Vec::with_capacity(names.len());
                    for n in names {
                        let c = model
                            .port_names
                            .iter()
                            .position(|p| p == n)
                            .ok_or_else(|| {
                                Error::InvalidArgument(format!("unknown port `{n}`"))
                                    .in_stage("ports")
                            })?;
                        cols.push(c);
                    }
                    model.with_inputs(&cols)
                }
                None => model,
            }
        }
    };
    if model.p == 0 {
        return Err(Error::InvalidArgument("model has no input ports".into()).in_stage("assemble"));
    }
    Ok((model, warnings))
}

impl Pipeline {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let mut stages = Vec::new();
        let mut sw = Stopwatch::new(&mut stages);
        let (model, warnings) = load_model(cfg)?;
        sw.lap("load");
        let ops =
            make_operators_with(&model, cfg.zero_cap).map_err(|e| e.in_stage("regularize"))?;
        sw.lap("operators");
        Ok(Pipeline {
            config: cfg.clone(),
            model,
            ops,
            stages,
            warnings,
        })
    }

    pub fn regularization(&self) -> Option<Regularization> {
        match self.ops.realization() {
            Realization::Original => None,
            Realization::Regularized { n1, n2, removed } => Some(Regularization {
                n1: *n1,
                n2: *n2,
                reduced_order: self.ops.dim(),
                removed_nodes: removed.clone(),
            }),
        }
    }

    /// Reduces with every planned method.
    pub fn reduce(&mut self) -> Result<Vec<(MethodPlan, PortDecomposition)>> {
        let (plans, warnings) = self.config.plan(self.model.p)?;
        self.warnings.extend(warnings);
        let opts = ReduceOptions {
            workers: self.config.workers,
            ..Default::default()
        };
        let mut out = Vec::new();
        for plan in plans {
            let start = Instant::now();
            let pd = reduce_all_ports_with(&self.ops, plan.method, plan.k, &opts)
                .map_err(|e| e.in_stage("reduce"))?;
            self.stages.push(StageTime {
                stage: format!("reduce-{}", plan.method),
                seconds: start.elapsed().as_secs_f64(),
            });
            self.warnings.extend(pd.warnings());
            for f in &pd.failures {
                self.warnings.push(format!(
                    "{} port {} failed: {}",
                    plan.method, f.port, f.error
                ));
            }
            out.push((plan, pd));
        }
        Ok(out)
    }

    fn record(plan: &MethodPlan, pd: &PortDecomposition, rom_dir: Option<String>) -> MethodRecord {
        MethodRecord {
            plan: plan.clone(),
            rom_dir,
            rom_order: pd.rom_order(),
            total_order: pd.ports.iter().map(|p| p.rom.order()).sum(),
            ports_reduced: pd.ports.len(),
            failures: pd.failures.len(),
            runtime_total_s: pd.total_seconds(),
            runtime_per_port_mean_s: pd.mean_seconds(),
            worst_orthonormality: pd.worst_orthonormality(),
            warnings: pd.warnings(),
        }
    }

    fn manifest(&self, command: &str, methods: Vec<MethodRecord>) -> RunManifest {
        RunManifest {
            schema: SCHEMA_VERSION,
            tool: format!("eksmor {}", env!("CARGO_PKG_VERSION")),
            command: command.into(),
            config: self.config.clone(),
            model: ModelInfo::of(&self.model, self.config.zero_cap),
            regularization: self.regularization(),
            methods,
            stages: self.stages.clone(),
            warnings: self.warnings.clone(),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Result of [`cmd_reduce`].
pub struct ReduceRun {
    pub pipeline: Pipeline,
    pub decompositions: Vec<(MethodPlan, PortDecomposition)>,
    pub manifest: RunManifest,
}

/// Reduces the input with the configured methods and writes one ROM
/// directory per method.
pub fn cmd_reduce(cfg: &RunConfig) -> Result<ReduceRun> {
    let mut pl = Pipeline::load(cfg)?;
    let decompositions = pl.reduce()?;
    let mut records = Vec::new();
    let start = Instant::now();
    for (plan, pd) in &decompositions {
        let dir = match &cfg.out {
            Some(out) => {
                pd.write_dir(&out.join(plan.method.as_str()))
                    .map_err(|e| e.in_stage("write"))?;
                Some(plan.method.as_str().to_string())
            }
            None => None,
        };
        records.push(Pipeline::record(plan, pd, dir));
    }
    if let Some(out) = &cfg.out {
        if let Some(pm) = pl.ops.partitioned() {
            write_text(
                &out.join("regularization").join("permutation.csv"),
                &pm.permutation_csv(),
            )?;
        }
        pl.stages.push(StageTime {
            stage: "write".into(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let manifest = pl.manifest("reduce", records);
    if let Some(out) = &cfg.out {
        write_json(&out.join("manifest.json"), &manifest)?;
    }
    Ok(ReduceRun {
        pipeline: pl,
        decompositions,
        manifest,
    })
}

/// Result of [`cmd_compare`].
pub struct CompareRun {
    pub report: ErrorReport,
    pub grid: FrequencyGrid,
    pub original: Response,
    pub responses: Vec<(Method, Response)>,
    pub manifest: RunManifest,
}

/// Evaluates the original model and every available ROM over the grid and
/// reports Max Error per method and the error reduction. ROMs come from
/// `cfg.roms` when given (a method without a directory there is reported
/// as missing), otherwise they are built on the fly.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareRun> {
    let grid = cfg.grid()?;
    let mut pl = Pipeline::load(cfg)?;
    let decompositions: Vec<(MethodPlan, Option<PortDecomposition>)> = match &cfg.roms {
        Some(dir) => {
            let (plans, _) = cfg.plan(pl.model.p)?;
            plans
                .into_iter()
                .map(|plan| {
                    let d = dir.join(plan.method.as_str());
                    let pd = if d.join("index.json").exists() {
                        match PortDecomposition::read_dir(&d) {
                            Ok(pd) => Some(pd),
                            Err(e) => {
                                pl.warnings.push(format!("{}: {e}", d.display()));
                                None
                            }
                        }
                    } else {
                        pl.warnings
                            .push(format!("{}: no {} ROMs", dir.display(), plan.method));
                        None
                    };
                    let plan = match &pd {
                        Some(pd) => MethodPlan { k: pd.k, ..plan },
                        None => plan,
                    };
                    (plan, pd)
                })
                .collect()
        }
        None => pl
            .reduce()?
            .into_iter()
            .map(|(p, d)| (p, Some(d)))
            .collect(),
    };

    let start = Instant::now();
    let original = eval_original(&pl.model, &grid).map_err(|e| e.in_stage("evaluate"))?;
    pl.stages.push(StageTime {
        stage: "evaluate-original".into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    if original.flagged() > 0 {
        pl.warnings.push(format!(
            "{} grid points of the original model were not evaluated",
            original.flagged()
        ));
    }

    let mut summaries = Vec::new();
    let mut responses = Vec::new();
    let mut records = Vec::new();
    for (plan, pd) in &decompositions {
        let mut summary = MethodSummary {
            method: plan.method,
            moments: plan.k,
            rom_order: 0,
            total_order: 0,
            max_error: None,
            max_entrywise_error: None,
            omega_at_max: None,
            flagged_points: 0,
            runtime_total_s: 0.0,
            runtime_per_port_mean_s: 0.0,
        };
        if let Some(pd) = pd {
            summary.rom_order = pd.rom_order();
            summary.total_order = pd.ports.iter().map(|p| p.rom.order()).sum();
            summary.runtime_total_s = pd.total_seconds();
            summary.runtime_per_port_mean_s = pd.mean_seconds();
            records.push(Pipeline::record(plan, pd, None));
            match eval_reduced(pd, &grid) {
                Ok(resp) => {
                    summary.flagged_points = resp.flagged();
                    match max_error(&original, &resp) {
                        Ok(curve) => {
                            summary.max_error = Some(curve.max_sigma);
                            summary.max_entrywise_error = Some(curve.max_entrywise());
                            summary.omega_at_max = Some(grid.omega()[curve.argmax]);
                        }
                        Err(e) => pl.warnings.push(format!("{}: {e}", plan.method)),
                    }
                    responses.push((plan.method, resp));
                }
                Err(e) => pl.warnings.push(format!("{}: {e}", plan.method)),
            }
        }
        summaries.push(summary);
    }
    pl.stages.push(StageTime {
        stage: "evaluate-reduced".into(),
        seconds: start.elapsed().as_secs_f64(),
    });

    let mut report = ErrorReport {
        schema: SCHEMA_VERSION,
        dimension: pl.model.order(),
        ports: pl.model.p,
        outputs: pl.model.q,
        regularized: pl.regularization().is_some(),
        omega_min: cfg.omega_min,
        omega_max: cfg.omega_max,
        points: grid.len(),
        methods: summaries,
        error_reduction_percent: None,
        warnings: pl.warnings.clone(),
    };
    report.update_reduction();

    if let Some(out) = &cfg.out {
        write_json(&out.join("report.json"), &report)?;
        let resp = |m: Method| responses.iter().find(|(x, _)| *x == m).map(|(_, r)| r);
        for &(o, i) in &default_pairs(cfg, pl.model.q, pl.model.p) {
            let csv = bode_csv(&grid, &original, resp(Method::Mm), resp(Method::Eks), o, i);
            write_text(&out.join(format!("bode_{o}_{i}.csv")), &csv)?;
        }
    }
    let manifest = pl.manifest("compare", records);
    if let Some(out) = &cfg.out {
        write_json(&out.join("manifest.json"), &manifest)?;
    }
    Ok(CompareRun {
        report,
        grid,
        original,
        responses,
        manifest,
    })
}

fn default_pairs(cfg: &RunConfig, q: usize, p: usize) -> Vec<(usize, usize)> {
    if cfg.pairs.is_empty() {
        (0..q.min(p).min(4)).map(|i| (i, i)).collect()
    } else {
        cfg.pairs
            .iter()
            .copied()
            .filter(|&(o, i)| o < q && i < p)
            .collect()
    }
}

/// Moments of the original model and of every ROM. ROM moment `i` has
/// column `j` from port `j`'s model. For a regularized model `M̃_0` is
/// shifted by the feedthrough the elimination moved into `D`, so both
/// sides describe the same `H(0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub original: Vec<Vec<Vec<f64>>>,
    pub methods: Vec<MethodMoments>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodMoments {
    pub method: Method,
    pub k: usize,
    pub moments: Vec<Vec<Vec<f64>>>,
    /// `max|M̃_i - M_i| / max|M_i|` per moment.
    pub relative_deviation: Vec<f64>,
}

fn rows(m: &DenseBlock) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl MomentTable {
    pub fn to_text(&self) -> String {
        let mut s = String::from("moment  max|M_i|");
        for m in &self.methods {
            let _ = write!(s, "  {:>12}", format!("dev_{}(k={})", m.method, m.k));
        }
        s.push('\n');
        for (i, orig) in self.original.iter().enumerate() {
            let mag = orig.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            let _ = write!(s, "M{i:<6} {mag:>9.3e}");
            for m in &self.methods {
                let _ = write!(s, "  {:>12.3e}", m.relative_deviation[i]);
            }
            s.push('\n');
        }
        s
    }
}

pub fn cmd_moments(cfg: &RunConfig) -> Result<MomentTable> {
    let mut pl = Pipeline::load(cfg)?;
    let cap = cfg.dense_cap.max(DEFAULT_MOMENT_CAP);
    let decompositions = pl.reduce()?;
    let kmax = decompositions.iter().map(|(p, _)| p.k).max().unwrap_or(1);
    let imax = cfg.imax.unwrap_or(2 * kmax - 1);
    let original = moments_original(&pl.model, imax, cap).map_err(|e| e.in_stage("moments"))?;
    let d_model = pl.model.d.to_dense();
    let mut methods = Vec::new();
    for (plan, pd) in &decompositions {
        pd.require_complete().map_err(|e| e.in_stage("moments"))?;
        let mut table = vec![DenseBlock::zeros(pl.model.q, pl.model.p); imax + 1];
        for pr in &pd.ports {
            let ms = pr.rom.moments(imax).map_err(|e| e.in_stage("moments"))?;
            for (i, m) in ms.iter().enumerate() {
                for r in 0..pl.model.q {
                    let mut v = m[(r, 0)];
                    if i == 0 {
                        v += d_model[(r, pr.port)] - pr.rom.d[(r, 0)];
                    }
                    table[i][(r, pr.port)] = v;
                }
            }
        }
        let relative_deviation = table
            .iter()
            .zip(&original)
            .map(|(t, o)| {
                let scale = o.max_abs();
                let dev = t.sub(o).expect("same shape").max_abs();
                if scale > 0.0 {
                    dev / scale
                } else {
                    dev
                }
            })
            .collect();
        methods.push(MethodMoments {
            method: plan.method,
            k: plan.k,
            moments: table.iter().map(rows).collect(),
            relative_deviation,
        });
    }
    let table = MomentTable {
        original: original.iter().map(rows).collect(),
        methods,
    };
    if let Some(out) = &cfg.out {
        write_json(&out.join("moments.json"), &table)?;
        let records: Vec<MethodRecord> = decompositions
            .iter()
            .map(|(p, d)| Pipeline::record(p, d, None))
            .collect();
        pl.stages.push(StageTime {
            stage: "moments".into(),
            seconds: 0.0,
        });
        write_json(&out.join("manifest.json"), &pl.manifest("moments", records))?;
    }
    Ok(table)
}

/// Structural summary of the input, without any reduction.
pub fn cmd_info(cfg: &RunConfig) -> Result<(ModelInfo, Option<Regularization>)> {
    let (model, _) = load_model(cfg)?;
    let info = ModelInfo::of(&model, cfg.zero_cap);
    let reg = if info.capacitance_free_nodes > 0 {
        let ops =
            make_operators_with(&model, cfg.zero_cap).map_err(|e| e.in_stage("regularize"))?;
        match ops.realization() {
            Realization::Regularized { n1, n2, removed } => Some(Regularization {
                n1: *n1,
                n2: *n2,
                reduced_order: ops.dim(),
                removed_nodes: removed.clone(),
            }),
            Realization::Original => None,
        }
    } else {
        None
    };
    Ok((info, reg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_plan_rounds_with_warning() {
        let cfg = RunConfig {
            order: Some(6),
            ..Default::default()
        };
        let (plans, warnings) = cfg.plan(2).unwrap();
        assert_eq!(plans[0].k, 3);
        assert!(!plans[0].rounded);
        assert_eq!(plans[1].k, 2);
        assert!(plans[1].rounded);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn default_plan_is_equal_order() {
        let (plans, _) = RunConfig::default().plan(3).unwrap();
        assert_eq!((plans[0].method, plans[0].k), (Method::Mm, 2));
        assert_eq!((plans[1].method, plans[1].k), (Method::Eks, 1));
    }

    #[test]
    fn literal_k() {
        let cfg = RunConfig {
            k: Some(2),
            ..Default::default()
        };
        let (plans, _) = cfg.plan(5).unwrap();
        assert!(plans.iter().all(|p| p.k == 2));
    }

    #[test]
    fn augmentation_requires_seed() {
        let cfg = RunConfig {
            add_cap: Some(1e-12),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn manifest_config_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            k: Some(3),
            points: 17,
            ..Default::default()
        };
        let path = dir.path().join("m.json");
        write_json(&path, &serde_json::json!({"schema": 1, "config": cfg})).unwrap();
        assert_eq!(RunConfig::from_file(&path).unwrap(), cfg);
        write_json(&path, &cfg).unwrap();
        assert_eq!(RunConfig::from_file(&path).unwrap(), cfg);
    }
}
