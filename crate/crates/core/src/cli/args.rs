// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use super::{cmd_compare, cmd_info, cmd_moments, cmd_reduce, InputFormat, MethodSet, RunConfig};
use crate::error::{Error, Result};
use crate::netlist::{assemble_mna, write_model_dir, AssembleOptions};
use crate::synth::{SynthKind, SynthSpec};

#[derive(Debug, Parser)]
#[command(
    name = "eksmor",
    version,
    about = "Krylov moment-matching reduction of RLC interconnect models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build per-port reduced models and write them to --out.
    Reduce(RunArgs),
    /// Compare reduced models against the original over a frequency grid.
    Compare(CompareArgs),
    /// Print original and reduced moments side by side.
    Moments(MomentsArgs),
    /// Print model dimensions and regularization summary.
    Info(InputArgs),
    /// Write a seeded synthetic benchmark circuit.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// SPICE-subset netlist, or a matrix directory with --format mm-dir.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// File listing port names, one per line.
    #[arg(long)]
    pub ports: Option<PathBuf>,
    /// Add a seeded random capacitance to ground at every node.
    #[arg(long, requires = "seed")]
    pub add_cap: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Treat Norton-converted voltage sources as input ports too.
    #[arg(long)]
    pub vsource_ports: bool,
    /// JSON run configuration or an earlier run manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub method: Option<MethodSet>,
    /// Moments per method, applied to every method as given.
    #[arg(long, short)]
    pub k: Option<usize>,
    /// Target order of the superposed ROM over all ports; k is derived per method.
    #[arg(long)]
    pub order: Option<usize>,
    /// Lowest grid frequency in rad/s.
    #[arg(long)]
    pub fmin: Option<f64>,
    /// Highest grid frequency in rad/s.
    #[arg(long)]
    pub fmax: Option<f64>,
    #[arg(long)]
    pub npoints: Option<usize>,
    #[arg(long, env = "EKSMOR_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Largest matrix the tool will densify.
    #[arg(long)]
    pub dense_cap: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Output:input pairs for Bode CSVs, e.g. `0:0,1:0`.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pub pairs: Vec<(usize, usize)>,
    /// Output directory of an earlier `reduce` run to compare.
    #[arg(long)]
    pub roms: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Highest moment index; defaults to 2k - 1.
    #[arg(long)]
    pub imax: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// rc-ladder, rc-mesh, rlc-mesh or power-grid.
    #[arg(long)]
    pub kind: SynthKind,
    /// Ladder length or mesh side.
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub ports: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub pads: Option<usize>,
    #[arg(long)]
    pub rl_branches: Option<usize>,
    #[arg(long)]
    pub pad_resistance: Option<f64>,
    /// Netlist output path.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the assembled matrices to this directory.
    #[arg(long)]
    pub mm_dir: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (o, i) = s
        .split_once(':')
        .ok_or_else(|| format!("expected OUT:IN, got {s:?}"))?;
    let o = o
        .trim()
        .parse()
        .map_err(|_| format!("bad output index {o:?}"))?;
    let i = i
        .trim()
        .parse()
        .map_err(|_| format!("bad input index {i:?}"))?;
    Ok((o, i))
}

impl InputArgs {
    /// Config file (if any) overlaid with the flags given.
    pub fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        set(&mut cfg.input, self.input.clone());
        if let Some(f) = self.format {
            cfg.format = f;
        }
        set(&mut cfg.ports, self.ports.clone());
        set(&mut cfg.add_cap, self.add_cap);
        set(&mut cfg.seed, self.seed);
        cfg.vsource_ports |= self.vsource_ports;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = self.input.to_config()?;
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if self.k.is_some() {
            cfg.k = self.k;
            cfg.order = None;
        }
        if self.order.is_some() {
            cfg.order = self.order;
            if self.k.is_none() {
                cfg.k = None;
            }
        }
        if let Some(v) = self.fmin {
            cfg.omega_min = v;
        }
        if let Some(v) = self.fmax {
            cfg.omega_max = v;
        }
        if let Some(v) = self.npoints {
            cfg.points = v;
        }
        set(&mut cfg.workers, self.workers);
        set(&mut cfg.out, self.out.clone());
        if let Some(v) = self.dense_cap {
            cfg.dense_cap = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Reduce(a) => {
            let cfg = a.to_config()?;
            if cfg.out.is_none() {
                return Err(Error::InvalidArgument("reduce needs --out".into()));
            }
            let run = cmd_reduce(&cfg)?;
            let m = &run.manifest;
            println!(
                "model order {} ({} ports, {} outputs)",
                m.model.order, m.model.p, m.model.q
            );
            if let Some(r) = &m.regularization {
                println!(
                    "regularized: {} capacitance-free nodes eliminated, order {}",
                    r.n2, r.reduced_order
                );
            }
            for r in &m.methods {
                println!(
                    "{:>3}  k={}  rom order {} per port, {} total  {} ports  {:.3}s total  {:.3e}s per port",
                    r.plan.method,
                    r.plan.k,
                    r.rom_order,
                    r.total_order,
                    r.ports_reduced,
                    r.runtime_total_s,
                    r.runtime_per_port_mean_s
                );
            }
            warn(&m.warnings);
        }
        Command::Compare(a) => {
            let mut cfg = a.run.to_config()?;
            if !a.pairs.is_empty() {
                cfg.pairs = a.pairs.clone();
            }
            if a.roms.is_some() {
                cfg.roms = a.roms.clone();
            }
            let run = cmd_compare(&cfg)?;
            let rep = &run.report;
            for m in &rep.methods {
                match m.max_error {
                    Some(e) => println!(
                        "{:>3}  k={}  rom order {} per port, {} total  max error {e:.6e}",
                        m.method, m.moments, m.rom_order, m.total_order
                    ),
                    None => println!("{:>3}  k={}  unavailable", m.method, m.moments),
                }
            }
            if let Some(r) = rep.error_reduction_percent {
                println!("error reduction {r:.2}%");
            }
            warn(&rep.warnings);
        }
        Command::Moments(a) => {
            let mut cfg = a.run.to_config()?;
            set(&mut cfg.imax, a.imax);
            print!("{}", cmd_moments(&cfg)?.to_text());
        }
        Command::Info(a) => {
            let cfg = a.to_config()?;
            let (info, reg) = cmd_info(&cfg)?;
            let v = serde_json::json!({ "model": info, "regularization": reg });
            println!(
                "{}",
                serde_json::to_string_pretty(&v).expect("serializable")
            );
        }
        Command::Synth(a) => {
            let mut spec = SynthSpec::new(a.kind, a.size, a.ports, a.seed);
            if let Some(v) = a.pads {
                spec.pads = v;
            }
            if let Some(v) = a.rl_branches {
                spec.rl_branches = v;
            }
            if let Some(v) = a.pad_resistance {
                spec.pad_resistance = v;
            }
            let circuit = spec.build()?;
            if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(&a.out, circuit.to_netlist()).map_err(|e| Error::io(&a.out, e))?;
            if let Some(dir) = &a.mm_dir {
                let model = assemble_mna(&circuit, &AssembleOptions::default())?;
                write_model_dir(dir, &model)?;
            }
            println!(
                "{} nodes, {} elements",
                circuit.node_count(),
                circuit.elements().len()
            );
        }
    }
    Ok(())
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Entry point for the binary: parses `std::env::args`, runs, and maps
/// errors to a nonzero exit status.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                let t = s.to_string();
                if !msg.contains(&t) {
                    msg.push_str(": ");
                    msg.push_str(&t);
                }
                src = s.source();
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
