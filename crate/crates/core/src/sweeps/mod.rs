//! Parameter sweeps over the neuron experiment and the Nelder–Mead
//! calibration of the compact-model parameters.

mod calibrate;
mod spec_file;

pub use calibrate::{
    calibrate, calibrate_neuron, CalibrationReport, CalibrationTarget, CalibrationTargets, TargetOutcome,
    CALIBRATION_FREE_PARAMS,
};
pub use spec_file::{parse_calibration_file, parse_sweep_file, CalibrationFile};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::SolverOptions;
use crate::neuron::{simulate_neuron, NeuronConfig, NeuronError, SpikeMetrics};
use crate::{DeviceTemperature, SFedParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("spec file line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("calibration budget exhausted with residual {best_residual:.4}")]
    BudgetExhausted {
        best_residual: f64,
        report: Box<CalibrationReport>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParameter {
    VRefPair,
    PulseWidth,
    ChannelLength,
    SupplyVoltage,
    Temperature,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 5] = [
        Self::VRefPair,
        Self::PulseWidth,
        Self::ChannelLength,
        Self::SupplyVoltage,
        Self::Temperature,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::VRefPair => "vref_pair",
            Self::PulseWidth => "pulse_width",
            Self::ChannelLength => "channel_length",
            Self::SupplyVoltage => "supply_voltage",
            Self::Temperature => "temperature",
        }
    }

    /// CSV columns naming the swept value.
    fn columns(self) -> &'static str {
        match self {
            Self::VRefPair => "vref1,vref2",
            Self::PulseWidth => "pw_s",
            Self::ChannelLength => "L_nm",
            Self::SupplyVoltage => "vdd",
            Self::Temperature => "T_C",
        }
    }

    /// Inclusive supported range of a scalar point.
    fn range(self) -> Option<(f64, f64)> {
        match self {
            Self::VRefPair => None,
            Self::PulseWidth => Some((0.5e-9, 2e-9)),
            Self::ChannelLength => Some((7.5, 15.0)),
            Self::SupplyVoltage => Some((0.8, 1.2)),
            Self::Temperature => Some((-40.0, 120.0)),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParameter {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| SweepError::InvalidSpec(format!("unknown sweep parameter '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepPoint {
    Scalar(f64),
    /// `(v_ref1, v_ref2)`.
    Pair(f64, f64),
}

impl SweepPoint {
    fn csv(self) -> String {
        match self {
            Self::Scalar(v) => format!("{v:e}"),
            Self::Pair(a, b) => format!("{a:e},{b:e}"),
        }
    }
}

impl fmt::Display for SweepPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scalar(v) => f.write_str(&short(*v)),
            Self::Pair(a, b) => write!(f, "({}, {})", short(*a), short(*b)),
        }
    }
}

/// Four significant digits, trailing zeros dropped.
fn short(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        let t = format!("{v:.4}");
        t.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        let t = format!("{v:.3e}");
        let (m, e) = t.split_once('e').expect("exponent form");
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        format!("{m}e{e}")
    }
}

/// Named metric of a neuron run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricName {
    SpikesToFire,
    Threshold,
    Amplitude,
    Energy,
    Power,
    Frequency,
}

impl MetricName {
    pub const ALL: [MetricName; 6] = [
        Self::SpikesToFire,
        Self::Threshold,
        Self::Amplitude,
        Self::Energy,
        Self::Power,
        Self::Frequency,
    ];

    /// Column name, shared with the metrics CSV.
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SpikesToFire => "spikes_to_fire",
            Self::Threshold => "threshold_v",
            Self::Amplitude => "amplitude_v",
            Self::Energy => "energy_j",
            Self::Power => "power_w",
            Self::Frequency => "freq_hz",
        }
    }

    /// `None` when the run produced no value (e.g. no spike).
    pub fn value(self, m: &SpikeMetrics) -> Option<f64> {
        match self {
            Self::SpikesToFire => (m.spikes_to_fire > 0).then_some(f64::from(m.spikes_to_fire)),
            Self::Threshold => m.firing_threshold_measured,
            Self::Amplitude => m.mean_amplitude(),
            Self::Energy => m.energy_per_spike,
            Self::Power => Some(m.static_power),
            Self::Frequency => (m.spike_times.len() >= 2).then_some(m.spiking_frequency),
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| SweepError::InvalidSpec(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
    pub base_config: NeuronConfig,
    pub tracked_metrics: Vec<MetricName>,
}

impl SweepSpec {
    pub fn new(parameter: SweepParameter, points: Vec<SweepPoint>, base_config: NeuronConfig) -> Self {
        Self {
            parameter,
            points,
            base_config,
            tracked_metrics: MetricName::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::InvalidSpec(m));
        if self.points.is_empty() {
            return bad("no sweep points".into());
        }
        if self.tracked_metrics.is_empty() {
            return bad("no tracked metrics".into());
        }
        for (i, &p) in self.points.iter().enumerate() {
            match (self.parameter, p) {
                (SweepParameter::VRefPair, SweepPoint::Pair(a, b)) => {
                    check_pair(a, b, self.base_config.v_dd)?;
                }
                (SweepParameter::VRefPair, SweepPoint::Scalar(_)) => {
                    return bad(format!("point {i}: vref_pair needs two values"));
                }
                (param, SweepPoint::Scalar(v)) => {
                    let (lo, hi) = param.range().expect("scalar parameter");
                    let slack = 1e-9 * lo.abs().max(hi.abs());
                    if !(v >= lo - slack && v <= hi + slack) {
                        return bad(format!("point {i}: {param} = {v} outside {lo}..{hi}"));
                    }
                }
                (param, SweepPoint::Pair(..)) => {
                    return bad(format!("point {i}: {param} takes a single value"));
                }
            }
        }
        Ok(())
    }

    /// Neuron configuration at one sweep point.
    pub fn config_at(&self, point: SweepPoint) -> Result<NeuronConfig, SweepError> {
        let mut c = self.base_config;
        match (self.parameter, point) {
            (SweepParameter::VRefPair, SweepPoint::Pair(a, b)) => {
                c.v_ref1 = a;
                c.v_ref2 = b;
            }
            (SweepParameter::PulseWidth, SweepPoint::Scalar(v)) => c.pulse_width = v,
            (SweepParameter::ChannelLength, SweepPoint::Scalar(v)) => c.channel_length = v,
            (SweepParameter::SupplyVoltage, SweepPoint::Scalar(v)) => c.v_dd = v,
            (SweepParameter::Temperature, SweepPoint::Scalar(v)) => {
                c.temperature =
                    DeviceTemperature::from_celsius(v).map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
            }
            (param, p) => return Err(SweepError::InvalidSpec(format!("point {p} does not fit {param}"))),
        }
        Ok(c)
    }
}

fn check_pair(v_ref1: f64, v_ref2: f64, v_dd: f64) -> Result<(), SweepError> {
    for v in [v_ref1, v_ref2] {
        if !(0.0..=v_dd).contains(&v) {
            return Err(SweepError::InvalidSpec(format!(
                "reference voltage {v} outside 0..{v_dd}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub config: NeuronConfig,
    /// Failed points keep their error.
    pub result: Result<SpikeMetrics, NeuronError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub tracked_metrics: Vec<MetricName>,
    /// In point order.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Values of one metric in point order; `None` for failed or missing.
    pub fn column(&self, metric: MetricName) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|r| r.result.as_ref().ok().and_then(|m| metric.value(m)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("index,{}", self.parameter.columns());
        for m in &self.tracked_metrics {
            out.push(',');
            out.push_str(m.as_str());
        }
        out.push_str(",error\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&format!("{i},{}", row.point.csv()));
            for m in &self.tracked_metrics {
                out.push(',');
                if let Some(v) = row.result.as_ref().ok().and_then(|r| m.value(r)) {
                    out.push_str(&format!("{v:e}"));
                }
            }
            out.push(',');
            if let Err(e) = &row.result {
                out.push('"');
                out.push_str(&e.to_string().replace('"', "'"));
                out.push('"');
            }
            out.push('\n');
        }
        out
    }

    /// Plain-text table plus the end-to-end change of every tracked metric.
    pub fn summary(&self) -> String {
        let mut out = format!("sweep over {} ({} points)\n", self.parameter, self.rows.len());
        for row in &self.rows {
            out.push_str(&format!("  {:>14}", row.point.to_string()));
            match &row.result {
                Ok(m) => {
                    for metric in &self.tracked_metrics {
                        let v = metric.value(m).map_or("-".to_string(), |v| format!("{v:.4e}"));
                        out.push_str(&format!("  {metric}={v}"));
                    }
                }
                Err(e) => out.push_str(&format!("  error: {e}")),
            }
            out.push('\n');
        }
        for &metric in &self.tracked_metrics {
            let col = self.column(metric);
            if let (Some(Some(first)), Some(Some(last))) = (col.first(), col.last()) {
                out.push_str(&format!("  {metric}: {first:.4e} -> {last:.4e} (change {:.4e})\n", last - first));
            }
        }
        out
    }
}

/// Runs one transient per point. `jobs == 1` runs serially, `jobs == 0`
/// uses the global worker pool, larger values a dedicated pool of that
/// size. The table is identical for every `jobs`.
pub fn run_sweep(
    spec: &SweepSpec,
    params: &SFedParams,
    opts: &SolverOptions,
    jobs: usize,
) -> Result<SweepTable, SweepError> {
    spec.validate()?;
    let configs = spec
        .points
        .iter()
        .map(|&p| spec.config_at(p))
        .collect::<Result<Vec<_>, _>>()?;
    let results = run_configs(&configs, jobs, |c| simulate_neuron(c, params, opts).map(|r| r.metrics))?;
    let rows = spec
        .points
        .iter()
        .zip(configs)
        .zip(results)
        .map(|((&point, config), result)| SweepRow { point, config, result })
        .collect();
    Ok(SweepTable {
        parameter: spec.parameter,
        tracked_metrics: spec.tracked_metrics.clone(),
        rows,
    })
}

/// Maps `f` over `items` keeping input order.
fn run_configs<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>, SweepError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match jobs {
        1 => Ok(items.iter().map(f).collect()),
        0 => Ok(items.par_iter().map(f).collect()),
        n => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SweepError::InvalidSpec(format!("worker pool: {e}")))?;
            Ok(pool.install(|| items.par_iter().map(f).collect()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub v_ref1: f64,
    pub v_ref2: f64,
    /// `Err(NoSpike)` when the membrane never reaches the threshold.
    pub threshold: Result<f64, NeuronError>,
}

/// Measured firing threshold for each `(v_ref1, v_ref2)` pair on top of `base`.
pub fn threshold_sweep(
    pairs: &[(f64, f64)],
    base: &NeuronConfig,
    params: &SFedParams,
    opts: &SolverOptions,
    jobs: usize,
) -> Result<Vec<ThresholdRow>, SweepError> {
    for &(a, b) in pairs {
        check_pair(a, b, base.v_dd)?;
    }
    let results = run_configs(pairs, jobs, |&(a, b)| {
        let mut c = *base;
        c.v_ref1 = a;
        c.v_ref2 = b;
        simulate_neuron(&c, params, opts)
            .and_then(|r| r.metrics.firing_threshold_measured.ok_or(NeuronError::NoSpike))
    })?;
    Ok(pairs
        .iter()
        .zip(results)
        .map(|(&(v_ref1, v_ref2), threshold)| ThresholdRow {
            v_ref1,
            v_ref2,
            threshold,
        })
        .collect())
}
