// SPDX-License-Identifier: Apache-2.0

//! Power-grid netlists and their MNA descriptor models.
//!
//! The accepted input is the SPICE subset used by the IBM power grid
//! benchmarks: `R`, `L`, `C`, `I` and `V` cards, `*` comments, `+`
//! continuation lines and ignored dot-directives. Node names are opaque
//! tokens; `0` and `gnd` (any case) are ground.

mod matdir;
mod model;

pub use matdir::{read_model_dir, write_model_dir, ModelManifest};
pub use model::{assemble_mna, split_ports, AssembleOptions, DescriptorModel};

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Resistor,
    Inductor,
    Capacitor,
    CurrentSource,
    VoltageSource,
}

impl ElementKind {
    fn from_card(c: char) -> Option<Self> {
        match c.to_ascii_lowercase() {
            'r' => Some(ElementKind::Resistor),
            'l' => Some(ElementKind::Inductor),
            'c' => Some(ElementKind::Capacitor),
            'i' => Some(ElementKind::CurrentSource),
            'v' => Some(ElementKind::VoltageSource),
            _ => None,
        }
    }

    fn is_source(self) -> bool {
        matches!(
            self,
            ElementKind::CurrentSource | ElementKind::VoltageSource
        )
    }
}

/// A two-terminal element. `None` terminals are ground.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub value: f64,
}

/// An input/output pair: unit current injected at `a` (returned at `b`),
/// voltage difference `v_a - v_b` observed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub a: Option<usize>,
    pub b: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    node_names: Vec<String>,
    node_index: HashMap<String, usize>,
    elements: Vec<Element>,
    explicit_ports: Option<Vec<Port>>,
}

pub fn is_ground(name: &str) -> bool {
    name == "0" || name.eq_ignore_ascii_case("gnd")
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of `name`, creating the node on first use. Ground maps to `None`.
    pub fn node(&mut self, name: &str) -> Option<usize> {
        if is_ground(name) {
            return None;
        }
        if let Some(&i) = self.node_index.get(name) {
            return Some(i);
        }
        let i = self.node_names.len();
        self.node_names.push(name.to_string());
        self.node_index.insert(name.to_string(), i);
        Some(i)
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.node_index.get(name).copied()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// Adds an element between two named nodes, validating its value.
    pub fn add(
        &mut self,
        kind: ElementKind,
        name: &str,
        a: &str,
        b: &str,
        value: f64,
    ) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidElement {
                name: name.into(),
                message: format!("non-finite value {value}"),
            });
        }
        if !kind.is_source() && value <= 0.0 {
            return Err(Error::InvalidElement {
                name: name.into(),
                message: format!("value must be positive, got {value}"),
            });
        }
        let a = self.node(a);
        let b = self.node(b);
        self.elements.push(Element {
            name: name.into(),
            kind,
            a,
            b,
            value,
        });
        Ok(())
    }

    pub fn count(&self, kind: ElementKind) -> usize {
        self.elements.iter().filter(|e| e.kind == kind).count()
    }

    /// Ports in input-column order. Unless overridden, one port per distinct
    /// terminal pair carrying current sources, in order of first appearance.
    pub fn ports(&self) -> Vec<Port> {
        if let Some(p) = &self.explicit_ports {
            return p.clone();
        }
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for e in self
            .elements
            .iter()
            .filter(|e| e.kind == ElementKind::CurrentSource)
        {
            if e.a == e.b {
                continue;
            }
            seen.entry((e.a, e.b)).or_insert_with(|| {
                out.push(Port {
                    name: self.port_label(e.a, e.b),
                    a: e.a,
                    b: e.b,
                });
            });
        }
        out
    }

    fn port_label(&self, a: Option<usize>, b: Option<usize>) -> String {
        let name = |n: Option<usize>| n.map_or("0", |i| self.node_names[i].as_str()).to_string();
        match b {
            None => name(a),
            Some(_) => format!("{}-{}", name(a), name(b)),
        }
    }

    /// Replaces the port list with grounded ports at the named nodes.
    pub fn set_ports<S: AsRef<str>>(&mut self, names: &[S]) -> Result<()> {
        let mut ports = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            let i = self
                .lookup(n)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown port node `{n}`")))?;
            ports.push(Port {
                name: n.to_string(),
                a: Some(i),
                b: None,
            });
        }
        self.explicit_ports = Some(ports);
        Ok(())
    }

    /// Adds a grounded capacitor at every node, with values drawn uniformly
    /// from `[0.5, 1.5] * value` by a seeded generator.
    pub fn augment_capacitance(&mut self, value: f64, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..self.node_names.len() {
            let c = value * rng.random_range(0.5..1.5);
            let name = self.node_names[i].clone();
            self.add(ElementKind::Capacitor, &format!("Caug{i}"), &name, "0", c)?;
        }
        Ok(())
    }

    /// Serializes back to the accepted SPICE subset.
    pub fn to_netlist(&self) -> String {
        let mut s = String::new();
        let name = |n: Option<usize>| n.map_or("0", |i| self.node_names[i].as_str());
        for e in &self.elements {
            let _ = writeln!(s, "{} {} {} {:.17e}", e.name, name(e.a), name(e.b), e.value);
        }
        s.push_str(".end\n");
        s
    }
}

/// Parses a number with an optional SPICE scale suffix (`1.5k`, `10pF`).
pub fn parse_value(tok: &str) -> Option<f64> {
    let lower = tok.to_ascii_lowercase();
    let split = lower
        .char_indices()
        .find(|&(i, c)| {
            c.is_ascii_alphabetic()
                && !(c == 'e'
                    && lower[i + 1..]
                        .starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+'))
        })
        .map_or(lower.len(), |(i, _)| i);
    let (num, suffix) = lower.split_at(split);
    let base: f64 = num.parse().ok()?;
    let scale = if suffix.starts_with("meg") {
        1e6
    } else if suffix.starts_with("mil") {
        25.4e-6
    } else {
        match suffix.chars().next() {
            None => 1.0,
            Some('t') => 1e12,
            Some('g') => 1e9,
            Some('k') => 1e3,
            Some('m') => 1e-3,
            Some('u') => 1e-6,
            Some('n') => 1e-9,
            Some('p') => 1e-12,
            Some('f') => 1e-15,
            Some(_) => 1.0,
        }
    };
    Some(base * scale)
}

/// Source value: the first numeric token after an optional `DC` keyword.
/// Waveform-only sources (`PWL(...)`) have zero bias, which is irrelevant
/// to the transfer function.
fn source_value(tokens: &[&str]) -> f64 {
    let mut it = tokens.iter().peekable();
    if it.peek().is_some_and(|t| t.eq_ignore_ascii_case("dc")) {
        it.next();
    }
    it.next().and_then(|t| parse_value(t)).unwrap_or(0.0)
}

/// Reads a netlist into a [`Circuit`].
pub fn parse_netlist(text: &str) -> Result<Circuit> {
    let mut logical: Vec<(usize, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('+') {
            match logical.last_mut() {
                Some((_, prev)) => {
                    prev.push(' ');
                    prev.push_str(rest.trim());
                }
                None => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "continuation without a preceding card".into(),
                    })
                }
            }
            continue;
        }
        logical.push((i + 1, line.to_string()));
    }

    let mut circuit = Circuit::new();
    for (line, card) in logical {
        if card.starts_with('.') {
            continue;
        }
        let toks: Vec<&str> = card.split_whitespace().collect();
        let first = toks[0].chars().next().unwrap();
        let kind = ElementKind::from_card(first).ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown card kind `{first}` in `{}`", toks[0]),
        })?;
        if toks.len() < 3 || (!kind.is_source() && toks.len() < 4) {
            return Err(Error::Parse {
                line,
                message: format!("malformed card `{card}`"),
            });
        }
        let value = if kind.is_source() {
            source_value(&toks[3..])
        } else {
            parse_value(toks[3]).ok_or_else(|| Error::Parse {
                line,
                message: format!("malformed value `{}`", toks[3]),
            })?
        };
        circuit
            .add(kind, toks[0], toks[1], toks[2], value)
            .map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
    }
    Ok(circuit)
}

/// Reads a port file: one node name per line, `#` or `*` comments.
pub fn parse_port_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with('*'))
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect()
}
