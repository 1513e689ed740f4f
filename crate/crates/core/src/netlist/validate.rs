use std::collections::VecDeque;
use std::fmt;

use crate::model::DeviceTemperature;
use crate::netlist::{Circuit, DeviceKind, Node};

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// Node without a DC path (resistive, source or S-FED channel) to ground.
    FloatingNode(String),
    /// Node touched by a single terminal of a non-source device.
    DanglingTerminal { device: String, node: String },
    ZeroValuedComponent(String),
    InvalidValue { device: String, message: String },
    NoGroundReference,
    InvalidGlobal(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::FloatingNode(n) => write!(f, "FloatingNode({n})"),
            Diagnostic::DanglingTerminal { device, node } => {
                write!(f, "DanglingTerminal({device} at {node})")
            }
            Diagnostic::ZeroValuedComponent(d) => write!(f, "ZeroValuedComponent({d})"),
            Diagnostic::InvalidValue { device, message } => write!(f, "InvalidValue({device}: {message})"),
            Diagnostic::NoGroundReference => write!(f, "NoGroundReference"),
            Diagnostic::InvalidGlobal(m) => write!(f, "InvalidGlobal({m})"),
        }
    }
}

/// Checks every circuit invariant; an empty list means the circuit is valid.
pub fn validate(circuit: &Circuit) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let g = &circuit.globals;
    if !(g.v_dd.is_finite() && g.v_dd > 0.0) {
        diags.push(Diagnostic::InvalidGlobal(format!("vdd={}", g.v_dd)));
    }
    if !g.v_bg.is_finite() {
        diags.push(Diagnostic::InvalidGlobal(format!("vbg={}", g.v_bg)));
    }
    if DeviceTemperature::<f64>::from_celsius(g.temp_celsius).is_err() {
        diags.push(Diagnostic::InvalidGlobal(format!("temp={} C", g.temp_celsius)));
    }

    for dev in &circuit.devices {
        let bad = |message: String| Diagnostic::InvalidValue {
            device: dev.name.clone(),
            message,
        };
        match &dev.kind {
            DeviceKind::Capacitor(v) | DeviceKind::Resistor(v) => {
                if *v == 0.0 {
                    diags.push(Diagnostic::ZeroValuedComponent(dev.name.clone()));
                } else if !(v.is_finite() && *v > 0.0) {
                    diags.push(bad(format!("value must be positive, got {v}")));
                }
            }
            DeviceKind::VSourceDC(v) => {
                if !v.is_finite() {
                    diags.push(bad(format!("non-finite voltage {v}")));
                }
            }
            DeviceKind::SFed {
                length_nm,
                multiplier,
                ..
            } => {
                if !(length_nm.is_finite() && *length_nm > 0.0) {
                    diags.push(bad(format!("channel length must be positive, got {length_nm}")));
                }
                if *multiplier == 0.0 {
                    diags.push(Diagnostic::ZeroValuedComponent(dev.name.clone()));
                } else if !(multiplier.is_finite() && *multiplier > 0.0) {
                    diags.push(bad(format!("multiplier must be positive, got {multiplier}")));
                }
            }
            DeviceKind::ISourcePulseTrain(p) => {
                let all_finite = [p.amplitude, p.pulse_width, p.period, p.rise, p.fall, p.delay]
                    .iter()
                    .all(|v| v.is_finite());
                if !all_finite {
                    diags.push(bad("non-finite pulse field".into()));
                } else if p.rise <= 0.0 || p.fall <= 0.0 {
                    diags.push(bad("rise and fall must be positive".into()));
                } else if p.pulse_width < p.rise + p.fall {
                    diags.push(bad(format!(
                        "pulse width {} shorter than rise + fall",
                        p.pulse_width
                    )));
                } else if p.n_pulses > 1 && p.period < p.pulse_width {
                    diags.push(bad("period shorter than pulse width".into()));
                } else if p.delay < 0.0 {
                    diags.push(bad("negative delay".into()));
                }
            }
        }
    }

    let n = circuit.node_count();
    if n == 0 {
        return diags;
    }
    let touches_ground = circuit
        .devices
        .iter()
        .any(|d| d.terminals.contains(&Node::Ground));
    if !touches_ground {
        diags.push(Diagnostic::NoGroundReference);
    }

    // DC connectivity: resistors, voltage sources and S-FED channels.
    let mut adj: Vec<Vec<Option<usize>>> = vec![Vec::new(); n];
    let mut ground_adj: Vec<usize> = Vec::new();
    for dev in &circuit.devices {
        let (a, b) = match dev.kind {
            DeviceKind::Resistor(_) | DeviceKind::VSourceDC(_) => (dev.terminals[0], dev.terminals[1]),
            DeviceKind::SFed { .. } => (dev.terminals[0], dev.terminals[3]),
            _ => continue,
        };
        match (a.index(), b.index()) {
            (Some(i), Some(j)) => {
                adj[i].push(Some(j));
                adj[j].push(Some(i));
            }
            (Some(i), None) | (None, Some(i)) => ground_adj.push(i),
            (None, None) => {}
        }
    }
    let mut reached = vec![false; n];
    let mut queue: VecDeque<usize> = ground_adj.into_iter().collect();
    while let Some(i) = queue.pop_front() {
        if reached[i] {
            continue;
        }
        reached[i] = true;
        queue.extend(adj[i].iter().flatten().copied().filter(|&j| !reached[j]));
    }

    let mut uses: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, dev) in circuit.devices.iter().enumerate() {
        for t in &dev.terminals {
            if let Some(i) = t.index() {
                uses[i].push(k);
            }
        }
    }
    for i in 0..n {
        let name = circuit.node_names()[i].clone();
        if !reached[i] {
            diags.push(Diagnostic::FloatingNode(name));
            continue;
        }
        if let [k] = uses[i][..] {
            let dev = &circuit.devices[k];
            if !matches!(dev.kind, DeviceKind::VSourceDC(_)) {
                diags.push(Diagnostic::DanglingTerminal {
                    device: dev.name.clone(),
                    node: name,
                });
            }
        }
    }
    diags
}
