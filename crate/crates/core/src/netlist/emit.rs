use std::fmt::Write;

use crate::netlist::{Analysis, Circuit, DeviceKind};
use crate::units::format_exact as num;

/// Canonical netlist text; `parse_netlist` of the result reproduces the circuit.
pub fn emit_netlist(circuit: &Circuit) -> String {
    let mut out = String::new();
    for dev in &circuit.devices {
        let nodes: Vec<&str> = dev.terminals.iter().map(|&n| circuit.node_name(n)).collect();
        let nodes = nodes.join(" ");
        let _ = match &dev.kind {
            DeviceKind::SFed {
                role,
                model,
                length_nm,
                multiplier,
            } => writeln!(
                out,
                "{} {nodes} role={role} model={model} l={} m={}",
                dev.name,
                num(*length_nm),
                num(*multiplier)
            ),
            DeviceKind::Capacitor(v) | DeviceKind::Resistor(v) | DeviceKind::VSourceDC(v) => {
                writeln!(out, "{} {nodes} {}", dev.name, num(*v))
            }
            DeviceKind::ISourcePulseTrain(p) => writeln!(
                out,
                "{} {nodes} pulse({} {} {} {} {} {} {})",
                dev.name,
                num(p.amplitude),
                num(p.pulse_width),
                num(p.period),
                num(p.rise),
                num(p.fall),
                p.n_pulses,
                num(p.delay)
            ),
        };
    }
    let g = &circuit.globals;
    let _ = writeln!(
        out,
        ".global vdd={} vbg={} temp={}",
        num(g.v_dd),
        num(g.v_bg),
        num(g.temp_celsius)
    );
    for a in &circuit.analyses {
        let _ = match a {
            Analysis::OperatingPoint => writeln!(out, ".op"),
            Analysis::Transient {
                t_stop,
                output_interval,
            } => writeln!(out, ".tran {} {}", num(*t_stop), num(*output_interval)),
        };
    }
    out
}
