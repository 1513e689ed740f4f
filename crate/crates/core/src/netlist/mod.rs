//! Circuit data model, the line-oriented netlist grammar, and validation.

mod emit;
mod parse;
mod validate;

use std::collections::{BTreeMap, HashMap};

pub use emit::emit_netlist;
pub use parse::{parse_netlist, parse_netlist_with_models, ParseError, ParseErrorKind};
pub use validate::{validate, Diagnostic};

use crate::model::Role;
use crate::SFedParams;

/// Node reference; ground is the literal `0` and carries no index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Ground,
    Index(usize),
}

impl Node {
    pub fn index(self) -> Option<usize> {
        match self {
            Node::Ground => None,
            Node::Index(i) => Some(i),
        }
    }
}

/// Trapezoidal current pulse train. `pulse_width` spans from the start of the
/// rising edge to the end of the falling edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTrain {
    pub amplitude: f64,
    pub pulse_width: f64,
    pub period: f64,
    pub rise: f64,
    pub fall: f64,
    pub n_pulses: u32,
    pub delay: f64,
}

impl PulseTrain {
    pub fn start_of(&self, k: u32) -> f64 {
        self.delay + f64::from(k) * self.period
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.n_pulses == 0 || t < self.delay {
            return 0.0;
        }
        let k = ((t - self.delay) / self.period).floor();
        if k < 0.0 || k >= f64::from(self.n_pulses) {
            return 0.0;
        }
        let local = t - self.start_of(k as u32);
        let a = self.amplitude;
        if local < self.rise {
            a * local / self.rise
        } else if local <= self.pulse_width - self.fall {
            a
        } else if local < self.pulse_width {
            a * (self.pulse_width - local) / self.fall
        } else {
            0.0
        }
    }

    /// Corner times of the waveform, in order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.n_pulses as usize);
        for k in 0..self.n_pulses {
            let s = self.start_of(k);
            out.extend_from_slice(&[
                s,
                s + self.rise,
                s + self.pulse_width - self.fall,
                s + self.pulse_width,
            ]);
        }
        out
    }

    /// Charge delivered by one pulse.
    pub fn charge_per_pulse(&self) -> f64 {
        self.amplitude * (self.pulse_width - 0.5 * (self.rise + self.fall))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceKind {
    /// Terminals: drain, gate_d, gate_s, source.
    SFed {
        role: Role,
        model: String,
        length_nm: f64,
        /// Parallel-device multiplicity applied to the current.
        multiplier: f64,
    },
    Capacitor(f64),
    Resistor(f64),
    VSourceDC(f64),
    /// Current flows from the first terminal through the source into the second.
    ISourcePulseTrain(PulseTrain),
}

#[derive(Debug, Clone)]
pub struct Device {
    pub name: String,
    pub kind: DeviceKind,
    pub terminals: Vec<Node>,
    /// Source line, when the device came from a netlist.
    pub line: Option<usize>,
}

impl PartialEq for Device {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind && self.terminals == other.terminals
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Analysis {
    OperatingPoint,
    Transient { t_stop: f64, output_interval: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Globals {
    pub v_dd: f64,
    pub v_bg: f64,
    pub temp_celsius: f64,
}

impl Default for Globals {
    fn default() -> Self {
        Self {
            v_dd: 1.2,
            v_bg: 0.6,
            temp_celsius: 27.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    nodes: Vec<String>,
    lookup: HashMap<String, usize>,
    pub devices: Vec<Device>,
    pub analyses: Vec<Analysis>,
    pub globals: Globals,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the node for `name`, creating it on first use.
    pub fn node(&mut self, name: &str) -> Node {
        if name == "0" {
            return Node::Ground;
        }
        if let Some(&i) = self.lookup.get(name) {
            return Node::Index(i);
        }
        let i = self.nodes.len();
        self.nodes.push(name.to_string());
        self.lookup.insert(name.to_string(), i);
        Node::Index(i)
    }

    pub fn find_node(&self, name: &str) -> Option<Node> {
        if name == "0" {
            return Some(Node::Ground);
        }
        self.lookup.get(name).map(|&i| Node::Index(i))
    }

    pub fn node_name(&self, node: Node) -> &str {
        match node {
            Node::Ground => "0",
            Node::Index(i) => &self.nodes[i],
        }
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn device(&self, name: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.name.eq_ignore_ascii_case(name))
    }

    pub fn device_index(&self, name: &str) -> Option<usize> {
        self.devices.iter().position(|d| d.name.eq_ignore_ascii_case(name))
    }

    pub fn add_device(&mut self, name: &str, kind: DeviceKind, terminals: &[&str]) -> usize {
        let terminals = terminals.iter().map(|t| self.node(t)).collect();
        self.devices.push(Device {
            name: name.to_string(),
            kind,
            terminals,
            line: None,
        });
        self.devices.len() - 1
    }

    pub fn transient(&self) -> Option<(f64, f64)> {
        self.analyses.iter().find_map(|a| match *a {
            Analysis::Transient {
                t_stop,
                output_interval,
            } => Some((t_stop, output_interval)),
            Analysis::OperatingPoint => None,
        })
    }
}

/// Named S-FED parameter sets a netlist may reference with `model=`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelLibrary {
    sets: BTreeMap<String, SFedParams>,
}

pub const DEFAULT_MODEL: &str = "default";

impl Default for ModelLibrary {
    fn default() -> Self {
        Self::with_default(SFedParams::default())
    }
}

impl ModelLibrary {
    pub fn with_default(params: SFedParams) -> Self {
        let mut sets = BTreeMap::new();
        sets.insert(DEFAULT_MODEL.to_string(), params);
        Self { sets }
    }

    pub fn insert(&mut self, name: &str, params: SFedParams) {
        self.sets.insert(name.to_ascii_lowercase(), params);
    }

    pub fn get(&self, name: &str) -> Option<&SFedParams> {
        self.sets.get(&name.to_ascii_lowercase())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train(n: u32) -> PulseTrain {
        PulseTrain {
            amplitude: 250e-9,
            pulse_width: 1e-9,
            period: 10e-9,
            rise: 1e-12,
            fall: 1e-12,
            n_pulses: n,
            delay: 1e-9,
        }
    }

    #[test]
    fn pulse_shape() {
        let p = train(2);
        assert_eq!(p.value(0.5e-9), 0.0);
        assert!((p.value(1e-9 + 0.5e-12) - 125e-9).abs() < 1e-18);
        assert_eq!(p.value(1.5e-9), 250e-9);
        assert_eq!(p.value(5e-9), 0.0);
        assert_eq!(p.value(11.5e-9), 250e-9);
        assert_eq!(p.value(21.5e-9), 0.0);
        assert_eq!(train(0).value(1.5e-9), 0.0);
        assert_eq!(p.breakpoints().len(), 8);
    }

    #[test]
    fn ground_has_no_index() {
        let mut c = Circuit::new();
        assert_eq!(c.node("0"), Node::Ground);
        assert_eq!(c.node("a"), Node::Index(0));
        assert_eq!(c.node("b"), Node::Index(1));
        assert_eq!(c.node("a"), Node::Index(0));
        assert_eq!(c.node_count(), 2);
    }
}
