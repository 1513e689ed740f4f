//! Key-value spec files for sweeps and calibration.
//!
//! One `key = value` per line; `#` starts a comment. Keys that are not
//! spec keys are neuron configuration keys (see [`NeuronConfig::KEYS`]).

use crate::neuron::NeuronConfig;
use crate::sweeps::{
    CalibrationTarget, CalibrationTargets, MetricName, SweepError, SweepParameter, SweepPoint, SweepSpec,
};
use crate::units::parse_si;

fn lines(text: &str) -> impl Iterator<Item = (usize, &str, &str)> {
    text.lines().enumerate().filter_map(|(idx, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let (k, v) = line.split_once('=').unwrap_or((line, ""));
        Some((idx + 1, k.trim(), v.trim()))
    })
}

fn syntax(line: usize, message: impl Into<String>) -> SweepError {
    SweepError::Syntax {
        line,
        message: message.into(),
    }
}

fn number(line: usize, text: &str) -> Result<f64, SweepError> {
    parse_si(text.trim()).map_err(|e| syntax(line, e.to_string()))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn set_config(config: &mut NeuronConfig, line: usize, key: &str, value: &str) -> Result<(), SweepError> {
    if !NeuronConfig::KEYS.contains(&key) {
        return Err(syntax(line, format!("unknown key '{key}'")));
    }
    let v = number(line, value)?;
    config.set(key, v).map_err(|e| syntax(line, e.to_string()))
}

/// Parses a sweep spec and validates it.
///
/// ```text
/// parameter = channel_length
/// points = 7.5, 10, 12.5, 15
/// metrics = threshold_v, freq_hz
/// npulses = 30
/// ```
///
/// `vref_pair` points are written `v_ref1:v_ref2`. Without `metrics` every
/// metric is tracked.
pub fn parse_sweep_file(text: &str) -> Result<SweepSpec, SweepError> {
    let mut parameter = None;
    let mut raw_points: Option<(usize, String)> = None;
    let mut metrics = None;
    let mut config = NeuronConfig::default();
    for (line, key, value) in lines(text) {
        match key {
            "parameter" => {
                parameter = Some(value.parse::<SweepParameter>().map_err(|e| syntax(line, e.to_string()))?)
            }
            "points" => raw_points = Some((line, value.to_string())),
            "metrics" => {
                metrics = Some(
                    list(value)
                        .map(|m| m.parse::<MetricName>().map_err(|e| syntax(line, e.to_string())))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            _ => set_config(&mut config, line, key, value)?,
        }
    }
    let parameter = parameter.ok_or_else(|| SweepError::InvalidSpec("missing 'parameter'".into()))?;
    let (line, raw) = raw_points.ok_or_else(|| SweepError::InvalidSpec("missing 'points'".into()))?;
    let points = list(&raw)
        .map(|p| match p.split_once(':') {
            Some((a, b)) => Ok(SweepPoint::Pair(number(line, a)?, number(line, b)?)),
            None => Ok(SweepPoint::Scalar(number(line, p)?)),
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    let mut spec = SweepSpec::new(parameter, points, config);
    if let Some(m) = metrics {
        spec.tracked_metrics = m;
    }
    spec.validate()?;
    Ok(spec)
}

/// Parsed calibration targets file.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFile {
    pub targets: CalibrationTargets,
    pub budget: Option<usize>,
    /// Free parameter names; `None` means the default set.
    pub free: Option<Vec<String>>,
    pub base_config: NeuronConfig,
}

/// Parses a calibration file.
///
/// ```text
/// budget = 500
/// target = energy_j 0.96425f 0.2
/// target = spikes_to_fire@pw=0.5n 10 0.05 2
/// ```
///
/// A target line is `id value tolerance [weight]`; the weight defaults to 1.
pub fn parse_calibration_file(text: &str) -> Result<CalibrationFile, SweepError> {
    let mut targets = Vec::new();
    let mut budget = None;
    let mut free = None;
    let mut config = NeuronConfig::default();
    for (line, key, value) in lines(text) {
        match key {
            "budget" => {
                budget = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| syntax(line, format!("budget must be a count, got '{value}'")))?,
                )
            }
            "free" => free = Some(list(value).map(str::to_string).collect()),
            "target" => {
                let fields: Vec<&str> = value.split_whitespace().collect();
                if !(3..=4).contains(&fields.len()) {
                    return Err(syntax(line, "expected `target = id value tolerance [weight]`"));
                }
                let weight = match fields.get(3) {
                    Some(w) => number(line, w)?,
                    None => 1.0,
                };
                targets.push(CalibrationTarget {
                    id: fields[0].to_string(),
                    target: number(line, fields[1])?,
                    tolerance: number(line, fields[2])?,
                    weight,
                });
            }
            _ => set_config(&mut config, line, key, value)?,
        }
    }
    let targets = CalibrationTargets::new(targets)?;
    Ok(CalibrationFile {
        targets,
        budget,
        free,
        base_config: config,
    })
}
