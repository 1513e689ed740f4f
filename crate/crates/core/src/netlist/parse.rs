use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::model::Role;
use crate::netlist::{
    Analysis, Circuit, Device, DeviceKind, ModelLibrary, PulseTrain, DEFAULT_MODEL,
};
use crate::units::parse_si;

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownModel(String),
    DuplicateDevice(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(m) => write!(f, "line {}: SyntaxError: {m}", self.line),
            ParseErrorKind::UnknownModel(n) => {
                write!(f, "line {}: UnknownModel: '{n}'", self.line)
            }
            ParseErrorKind::DuplicateDevice(n) => {
                write!(f, "line {}: DuplicateDevice: '{n}'", self.line)
            }
        }
    }
}

/// Parses against the built-in model library (only `default`).
pub fn parse_netlist(text: &str) -> Result<Circuit, ParseError> {
    parse_netlist_with_models(text, &ModelLibrary::default())
}

pub fn parse_netlist_with_models(text: &str, models: &ModelLibrary) -> Result<Circuit, ParseError> {
    let mut circuit = Circuit::new();
    let mut seen = HashSet::new();
    for (line_no, line) in logical_lines(text)? {
        let p = LineParser { line: line_no };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let head = tokens[0];
        if head.starts_with('.') {
            p.directive(&mut circuit, &tokens)?;
            continue;
        }
        let (kind, nodes) = match head.chars().next().map(|c| c.to_ascii_uppercase()) {
            Some('X') => p.sfed(&tokens, models)?,
            Some('C') => p.two_terminal(&tokens, DeviceKind::Capacitor)?,
            Some('R') => p.two_terminal(&tokens, DeviceKind::Resistor)?,
            Some('V') => p.two_terminal(&tokens, DeviceKind::VSourceDC)?,
            Some('I') => p.pulse_source(&line)?,
            _ => return Err(p.syntax(format!("unknown device type '{head}'"))),
        };
        if !seen.insert(head.to_ascii_lowercase()) {
            return Err(ParseError {
                line: line_no,
                kind: ParseErrorKind::DuplicateDevice(head.to_string()),
            });
        }
        for n in &nodes {
            p.check_node_name(n)?;
        }
        let terminals = nodes.iter().map(|n| circuit.node(n)).collect();
        circuit.devices.push(Device {
            name: head.to_string(),
            kind,
            terminals,
            line: Some(line_no),
        });
    }
    Ok(circuit)
}

/// Strips comments and joins `+` continuations; yields (first line number, text).
fn logical_lines(text: &str) -> Result<Vec<(usize, String)>, ParseError> {
    let mut out: Vec<(usize, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('+') {
            match out.last_mut() {
                Some((_, prev)) => {
                    prev.push(' ');
                    prev.push_str(rest.trim());
                }
                None => {
                    return Err(ParseError {
                        line: line_no,
                        kind: ParseErrorKind::Syntax("continuation line with nothing to continue".into()),
                    })
                }
            }
            continue;
        }
        out.push((line_no, trimmed.to_string()));
    }
    Ok(out)
}

struct LineParser {
    line: usize,
}

impl LineParser {
    fn syntax(&self, message: String) -> ParseError {
        ParseError {
            line: self.line,
            kind: ParseErrorKind::Syntax(message),
        }
    }

    fn number(&self, what: &str, text: &str) -> Result<f64, ParseError> {
        parse_si(text).map_err(|_| self.syntax(format!("invalid {what} '{text}'")))
    }

    fn check_node_name(&self, name: &str) -> Result<(), ParseError> {
        if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            Ok(())
        } else {
            Err(self.syntax(format!("invalid node name '{name}'")))
        }
    }

    fn two_terminal(
        &self,
        tokens: &[&str],
        make: fn(f64) -> DeviceKind,
    ) -> Result<(DeviceKind, Vec<String>), ParseError> {
        if tokens.len() != 4 {
            return Err(self.syntax(format!(
                "'{}' expects `<n+> <n-> <value>`, got {} fields",
                tokens[0],
                tokens.len() - 1
            )));
        }
        let value = self.number("value", tokens[3])?;
        Ok((make(value), vec![tokens[1].to_string(), tokens[2].to_string()]))
    }

    fn sfed(
        &self,
        tokens: &[&str],
        models: &ModelLibrary,
    ) -> Result<(DeviceKind, Vec<String>), ParseError> {
        if tokens.len() < 6 {
            return Err(self.syntax(format!(
                "'{}' expects `<drain> <gate_d> <gate_s> <source> role=<role>`",
                tokens[0]
            )));
        }
        let nodes: Vec<String> = tokens[1..5].iter().map(|s| s.to_string()).collect();
        let mut role = None;
        let mut model = DEFAULT_MODEL.to_string();
        let mut length_nm = 10.0;
        let mut multiplier = 1.0;
        for tok in &tokens[5..] {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| self.syntax(format!("expected key=value, got '{tok}'")))?;
            match key.to_ascii_lowercase().as_str() {
                "role" => {
                    role = Some(
                        value
                            .parse::<Role>()
                            .map_err(|e| self.syntax(e.to_string()))?,
                    )
                }
                "model" => {
                    if !models.contains(value) {
                        return Err(ParseError {
                            line: self.line,
                            kind: ParseErrorKind::UnknownModel(value.to_string()),
                        });
                    }
                    model = value.to_ascii_lowercase();
                }
                "l" => length_nm = self.number("length", value)?,
                "m" => multiplier = self.number("multiplier", value)?,
                other => return Err(self.syntax(format!("unknown S-FED parameter '{other}'"))),
            }
        }
        let role = role.ok_or_else(|| self.syntax("missing role=<role>".into()))?;
        Ok((
            DeviceKind::SFed {
                role,
                model,
                length_nm,
                multiplier,
            },
            nodes,
        ))
    }

    fn pulse_source(&self, line: &str) -> Result<(DeviceKind, Vec<String>), ParseError> {
        let lower = line.to_ascii_lowercase();
        let open = lower
            .find("pulse(")
            .ok_or_else(|| self.syntax("current source expects pulse(...)".into()))?;
        let close = lower[open..]
            .find(')')
            .map(|i| open + i)
            .ok_or_else(|| self.syntax("unterminated pulse(".into()))?;
        if !line[close + 1..].trim().is_empty() {
            return Err(self.syntax("trailing text after pulse(...)".into()));
        }
        let head: Vec<&str> = line[..open].split_whitespace().collect();
        if head.len() != 3 {
            return Err(self.syntax("current source expects `<n+> <n-> pulse(...)`".into()));
        }
        let args: Vec<&str> = line[open + 6..close].split_whitespace().collect();
        if args.len() != 7 {
            return Err(self.syntax(format!(
                "pulse expects 7 values (amp pw period rise fall n delay), got {}",
                args.len()
            )));
        }
        let n = self.number("pulse count", args[5])?;
        if n < 0.0 || n.fract() != 0.0 || n > f64::from(u32::MAX) {
            return Err(self.syntax(format!("pulse count must be a non-negative integer, got '{}'", args[5])));
        }
        let train = PulseTrain {
            amplitude: self.number("amplitude", args[0])?,
            pulse_width: self.number("pulse width", args[1])?,
            period: self.number("period", args[2])?,
            rise: self.number("rise", args[3])?,
            fall: self.number("fall", args[4])?,
            n_pulses: n as u32,
            delay: self.number("delay", args[6])?,
        };
        Ok((
            DeviceKind::ISourcePulseTrain(train),
            vec![head[1].to_string(), head[2].to_string()],
        ))
    }

    fn directive(&self, circuit: &mut Circuit, tokens: &[&str]) -> Result<(), ParseError> {
        match tokens[0].to_ascii_lowercase().as_str() {
            ".op" => {
                if tokens.len() != 1 {
                    return Err(self.syntax(".op takes no arguments".into()));
                }
                circuit.analyses.push(Analysis::OperatingPoint);
            }
            ".tran" => {
                if tokens.len() != 3 {
                    return Err(self.syntax(".tran expects `<t_stop> <output_interval>`".into()));
                }
                let t_stop = self.number("t_stop", tokens[1])?;
                let output_interval = self.number("output interval", tokens[2])?;
                if t_stop <= 0.0 || output_interval <= 0.0 {
                    return Err(self.syntax(".tran times must be positive".into()));
                }
                circuit.analyses.push(Analysis::Transient {
                    t_stop,
                    output_interval,
                });
            }
            ".global" => {
                for tok in &tokens[1..] {
                    let (key, value) = tok
                        .split_once('=')
                        .ok_or_else(|| self.syntax(format!("expected key=value, got '{tok}'")))?;
                    let v = self.number(key, value)?;
                    match key.to_ascii_lowercase().as_str() {
                        "vdd" => circuit.globals.v_dd = v,
                        "vbg" => circuit.globals.v_bg = v,
                        "temp" => circuit.globals.temp_celsius = v,
                        other => return Err(self.syntax(format!("unknown global '{other}'"))),
                    }
                }
            }
            other => return Err(self.syntax(format!("unknown directive '{other}'"))),
        }
        Ok(())
    }
}
