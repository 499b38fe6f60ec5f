// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic circuits: RC ladders, single-layer RC and RLC meshes,
//! and two-layer power grids fed through voltage-source pads.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{Circuit, ElementKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    RcLadder,
    RcMesh,
    RlcMesh,
    /// Fine lower mesh, coarse low-resistance upper mesh joined by vias,
    /// voltage-source pads on the upper mesh, loads on the lower mesh.
    PowerGrid,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rc-ladder" => Ok(SynthKind::RcLadder),
            "rc-mesh" => Ok(SynthKind::RcMesh),
            "rlc-mesh" => Ok(SynthKind::RlcMesh),
            "power-grid" => Ok(SynthKind::PowerGrid),
            _ => Err(Error::InvalidArgument(format!(
                "unknown circuit kind {s:?} (rc-ladder, rc-mesh, rlc-mesh, power-grid)"
            ))),
        }
    }
}

/// Element scales. Every drawn value is `nominal * U(0.5, 1.5)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    /// Ladder length, or the side of a square mesh.
    pub size: usize,
    pub ports: usize,
    pub seed: u64,
    pub resistance: f64,
    pub capacitance: f64,
    pub inductance: f64,
    /// Resistance from a pad node to ground.
    pub pad_resistance: f64,
    /// Mesh nodes tied to ground through a pad.
    pub pads: usize,
    /// RLC meshes: number of mesh edges replaced by an R-L series branch,
    /// each adding one capacitance-free node. Power grids: pads fed
    /// through an R-L package branch instead of directly.
    pub rl_branches: usize,
    /// Power grids: upper-mesh pitch in lower-mesh nodes.
    pub stride: usize,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, size: usize, ports: usize, seed: u64) -> Self {
        SynthSpec {
            kind,
            size,
            ports,
            seed,
            resistance: 1.0,
            capacitance: 1e-12,
            inductance: 1e-9,
            pad_resistance: 0.1,
            pads: 4,
            rl_branches: 8,
            stride: 4,
        }
    }

    pub fn build(&self) -> Result<Circuit> {
        match self.kind {
            SynthKind::RcLadder => rc_ladder(self),
            SynthKind::RcMesh | SynthKind::RlcMesh => mesh(self),
            SynthKind::PowerGrid => power_grid(self),
        }
    }

    fn check(&self, nodes: usize) -> Result<()> {
        if self.size < 2 {
            return Err(Error::InvalidArgument(
                "synthetic circuit size must be at least 2".into(),
            ));
        }
        if self.ports == 0 || self.ports > nodes {
            return Err(Error::InvalidArgument(format!(
                "need between 1 and {nodes} ports, got {}",
                self.ports
            )));
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, nominal: f64) -> f64 {
    nominal * rng.random_range(0.5..1.5)
}

fn add_ports(c: &mut Circuit, rng: &mut ChaCha8Rng, nodes: &[String], p: usize) -> Result<()> {
    let mut picks = sample(rng, nodes.len(), p).into_vec();
    picks.sort_unstable();
    for (k, i) in picks.into_iter().enumerate() {
        c.add(
            ElementKind::CurrentSource,
            &format!("I{k}"),
            &nodes[i],
            "0",
            1.0,
        )?;
    }
    Ok(())
}

/// `n`-node chain of series resistors with a grounded capacitor at every
/// node and resistive ties to ground at both ends.
fn rc_ladder(spec: &SynthSpec) -> Result<Circuit> {
    let n = spec.size;
    spec.check(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut c = Circuit::new();
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    for i in 0..n {
        if i + 1 < n {
            let r = draw(&mut rng, spec.resistance);
            c.add(
                ElementKind::Resistor,
                &format!("R{i}"),
                &nodes[i],
                &nodes[i + 1],
                r,
            )?;
        }
        let cap = draw(&mut rng, spec.capacitance);
        c.add(
            ElementKind::Capacitor,
            &format!("C{i}"),
            &nodes[i],
            "0",
            cap,
        )?;
    }
    for (k, end) in [0, n - 1].into_iter().enumerate() {
        let r = draw(&mut rng, spec.pad_resistance);
        c.add(
            ElementKind::Resistor,
            &format!("Rg{k}"),
            &nodes[end],
            "0",
            r,
        )?;
    }
    add_ports(&mut c, &mut rng, &nodes, spec.ports)?;
    Ok(c)
}

/// Square resistive mesh with grounded capacitors and a few pads. For
/// `RlcMesh`, `rl_branches` horizontal edges become `R` then `L` in series
/// through a new node that carries no capacitance.
fn mesh(spec: &SynthSpec) -> Result<Circuit> {
    let side = spec.size;
    let n = side * side;
    spec.check(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut c = Circuit::new();
    let nodes: Vec<String> = (0..n)
        .map(|i| format!("n{}_{}", i / side, i % side))
        .collect();

    let horizontal = side * (side - 1);
    let rl_count = if spec.kind == SynthKind::RlcMesh {
        spec.rl_branches.min(horizontal)
    } else {
        0
    };
    let mut rl = vec![false; horizontal];
    for e in sample(&mut rng, horizontal, rl_count).into_iter() {
        rl[e] = true;
    }

    let mut h = 0;
    for row in 0..side {
        for col in 0..side {
            let i = row * side + col;
            if col + 1 < side {
                let r = draw(&mut rng, spec.resistance);
                if rl[h] {
                    let mid = format!("m{h}");
                    c.add(ElementKind::Resistor, &format!("Rh{h}"), &nodes[i], &mid, r)?;
                    let l = draw(&mut rng, spec.inductance);
                    c.add(
                        ElementKind::Inductor,
                        &format!("L{h}"),
                        &mid,
                        &nodes[i + 1],
                        l,
                    )?;
                } else {
                    c.add(
                        ElementKind::Resistor,
                        &format!("Rh{h}"),
                        &nodes[i],
                        &nodes[i + 1],
                        r,
                    )?;
                }
                h += 1;
            }
            if row + 1 < side {
                let r = draw(&mut rng, spec.resistance);
                c.add(
                    ElementKind::Resistor,
                    &format!("Rv{i}"),
                    &nodes[i],
                    &nodes[i + side],
                    r,
                )?;
            }
            let cap = draw(&mut rng, spec.capacitance);
            c.add(
                ElementKind::Capacitor,
                &format!("C{i}"),
                &nodes[i],
                "0",
                cap,
            )?;
        }
    }
    let pads = spec.pads.clamp(1, n);
    for (k, i) in sample(&mut rng, n, pads).into_iter().enumerate() {
        let r = draw(&mut rng, spec.pad_resistance);
        c.add(
            ElementKind::Resistor,
            &format!("Rpad{k}"),
            &nodes[i],
            "0",
            r,
        )?;
    }
    add_ports(&mut c, &mut rng, &nodes, spec.ports)?;
    Ok(c)
}

fn power_grid(spec: &SynthSpec) -> Result<Circuit> {
    let side = spec.size;
    let n = side * side;
    spec.check(n)?;
    let stride = spec.stride.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut c = Circuit::new();
    let lower: Vec<String> = (0..n)
        .map(|i| format!("a{}_{}", i / side, i % side))
        .collect();
    for row in 0..side {
        for col in 0..side {
            let i = row * side + col;
            if col + 1 < side {
                let r = draw(&mut rng, spec.resistance);
                c.add(
                    ElementKind::Resistor,
                    &format!("Ra{i}h"),
                    &lower[i],
                    &lower[i + 1],
                    r,
                )?;
            }
            if row + 1 < side {
                let r = draw(&mut rng, spec.resistance);
                c.add(
                    ElementKind::Resistor,
                    &format!("Ra{i}v"),
                    &lower[i],
                    &lower[i + side],
                    r,
                )?;
            }
            let cap = draw(&mut rng, spec.capacitance);
            c.add(
                ElementKind::Capacitor,
                &format!("Ca{i}"),
                &lower[i],
                "0",
                cap,
            )?;
        }
    }

    let tside = (side - 1) / stride + 1;
    let upper: Vec<String> = (0..tside * tside)
        .map(|i| format!("b{}_{}", i / tside, i % tside))
        .collect();
    let r_upper = spec.resistance * 0.05 * stride as f64;
    for row in 0..tside {
        for col in 0..tside {
            let t = row * tside + col;
            if col + 1 < tside {
                let r = draw(&mut rng, r_upper);
                c.add(
                    ElementKind::Resistor,
                    &format!("Rb{t}h"),
                    &upper[t],
                    &upper[t + 1],
                    r,
                )?;
            }
            if row + 1 < tside {
                let r = draw(&mut rng, r_upper);
                c.add(
                    ElementKind::Resistor,
                    &format!("Rb{t}v"),
                    &upper[t],
                    &upper[t + tside],
                    r,
                )?;
            }
            let via = draw(&mut rng, spec.resistance * 0.1);
            let below = &lower[row * stride * side + col * stride];
            c.add(
                ElementKind::Resistor,
                &format!("Rvia{t}"),
                &upper[t],
                below,
                via,
            )?;
            let cap = draw(&mut rng, spec.capacitance);
            c.add(
                ElementKind::Capacitor,
                &format!("Cb{t}"),
                &upper[t],
                "0",
                cap,
            )?;
        }
    }

    let pads = spec.pads.clamp(1, upper.len());
    let packaged = spec.rl_branches.min(pads);
    for (k, t) in sample(&mut rng, upper.len(), pads).into_iter().enumerate() {
        if k < packaged {
            let mid = format!("pkg{k}");
            let r = draw(&mut rng, spec.pad_resistance);
            c.add(
                ElementKind::Resistor,
                &format!("Rpkg{k}"),
                &upper[t],
                &mid,
                r,
            )?;
            let l = draw(&mut rng, spec.inductance);
            c.add(ElementKind::Inductor, &format!("Lpkg{k}"), &mid, "0", l)?;
        } else {
            c.add(
                ElementKind::VoltageSource,
                &format!("Vpad{k}"),
                &upper[t],
                "0",
                1.8,
            )?;
        }
    }
    add_ports(&mut c, &mut rng, &lower, spec.ports)?;
    Ok(c)
}
