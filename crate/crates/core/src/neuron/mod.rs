//! Integrate-and-fire neuron built from eight S-FED devices, its synaptic
//! stimulus, spike detection and the energy and power metrics.

mod metrics;

pub use metrics::{
    detect_spikes, energy_per_spike, frequency, measure_firing_threshold, spikes_to_fire, static_power,
    SpikeMetrics, METRICS_CSV_HEADER,
};

use thiserror::Error;

use crate::engine::{transient_with_stats, DcSolution, NewtonStats, SolverError, SolverOptions, Waveform};
use crate::model::Role;
use crate::netlist::{Analysis, Circuit, DeviceKind, ModelLibrary, PulseTrain, DEFAULT_MODEL};
use crate::{DeviceTemperature, SFedParams};

/// Edge time of every synaptic pulse.
pub const PULSE_EDGE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuronError {
    #[error("invalid neuron configuration: {0}")]
    Config(String),
    #[error("the neuron never fired")]
    NoSpike,
    #[error("energy per spike needs at least one spike")]
    ZeroSpikes,
    #[error("no branch current recorded for {0}")]
    MissingBranch(String),
    #[error("node '{0}' not in waveform")]
    MissingNode(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Device multipliers of the neuron. Each device is `m` parallel unit
/// channels sharing one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronSizing {
    /// D1, threshold diode.
    pub threshold: f64,
    /// D2, membrane reset.
    pub mem_reset: f64,
    /// D3, current-to-voltage resistor.
    pub resistor: f64,
    /// D4, spike-node reset.
    pub spike_reset: f64,
    /// D5..D8, both inverters.
    pub inverter: f64,
}

impl Default for NeuronSizing {
    fn default() -> Self {
        Self {
            threshold: 1.0,
            mem_reset: 5.2,
            resistor: 0.1,
            spike_reset: 0.047,
            inverter: 2000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronConfig {
    pub v_dd: f64,
    /// Back-gate bias; `None` tracks `v_dd/2`.
    pub v_bg: Option<f64>,
    pub v_ref1: f64,
    pub v_ref2: f64,
    pub v_ref3: f64,
    pub c_mem: f64,
    pub i_syn_amplitude: f64,
    pub pulse_width: f64,
    pub pulse_period: f64,
    pub n_pulses: u32,
    pub pulse_delay: f64,
    pub channel_length: f64,
    pub temperature: DeviceTemperature,
    pub sizing: NeuronSizing,
    /// Uniform output grid of the transient run.
    pub output_interval: f64,
}

impl Default for NeuronConfig {
    fn default() -> Self {
        Self {
            v_dd: 1.2,
            v_bg: None,
            v_ref1: 0.8,
            v_ref2: 0.1,
            v_ref3: 0.4,
            c_mem: 1e-15,
            i_syn_amplitude: 250e-9,
            pulse_width: 1e-9,
            pulse_period: 10e-9,
            n_pulses: 50,
            pulse_delay: 1e-9,
            channel_length: 10.0,
            temperature: DeviceTemperature::room(),
            sizing: NeuronSizing::default(),
            output_interval: 5e-12,
        }
    }
}

impl NeuronConfig {
    pub fn v_bg(&self) -> f64 {
        self.v_bg.unwrap_or(self.v_dd / 2.0)
    }

    /// End of the window that holds every input period.
    pub fn t_stop(&self) -> f64 {
        self.pulse_delay + f64::from(self.n_pulses.max(1)) * self.pulse_period
    }

    pub fn validate(&self) -> Result<(), NeuronError> {
        let bad = |msg: String| Err(NeuronError::Config(msg));
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.v_dd) {
            return bad(format!("v_dd must be > 0, got {}", self.v_dd));
        }
        if !finite_pos(self.c_mem) {
            return bad(format!("c_mem must be > 0, got {}", self.c_mem));
        }
        if !(0.5e-9 * (1.0 - 1e-9)..=2e-9 * (1.0 + 1e-9)).contains(&self.pulse_width) {
            return bad(format!("pulse width {} s outside 0.5..2 ns", self.pulse_width));
        }
        if !(self.pulse_period >= self.pulse_width && self.pulse_period.is_finite()) {
            return bad(format!("pulse period {} s shorter than the pulse", self.pulse_period));
        }
        if !(self.i_syn_amplitude.is_finite() && self.i_syn_amplitude >= 0.0) {
            return bad(format!("synaptic amplitude {}", self.i_syn_amplitude));
        }
        if !(self.pulse_delay.is_finite() && self.pulse_delay >= 0.0) {
            return bad(format!("pulse delay {}", self.pulse_delay));
        }
        if !finite_pos(self.channel_length) {
            return bad(format!("channel length {}", self.channel_length));
        }
        if !finite_pos(self.output_interval) || self.output_interval > self.t_stop() {
            return bad(format!("output interval {}", self.output_interval));
        }
        for (name, v) in [
            ("v_bg", self.v_bg()),
            ("v_ref1", self.v_ref1),
            ("v_ref2", self.v_ref2),
            ("v_ref3", self.v_ref3),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} = {v}"));
            }
        }
        let s = self.sizing;
        for (name, m) in [
            ("threshold", s.threshold),
            ("mem_reset", s.mem_reset),
            ("resistor", s.resistor),
            ("spike_reset", s.spike_reset),
            ("inverter", s.inverter),
        ] {
            if !finite_pos(m) {
                return bad(format!("{name} multiplier {m}"));
            }
        }
        Ok(())
    }
}

/// Trapezoidal synaptic pulses with 1 ps edges.
pub fn synaptic_pulse_train(config: &NeuronConfig) -> Result<PulseTrain, NeuronError> {
    if !(config.pulse_width >= 2.0 * PULSE_EDGE) {
        return Err(NeuronError::Config(format!(
            "pulse width {} s shorter than its two 1 ps edges",
            config.pulse_width
        )));
    }
    Ok(PulseTrain {
        amplitude: config.i_syn_amplitude,
        pulse_width: config.pulse_width,
        period: config.pulse_period,
        rise: PULSE_EDGE,
        fall: PULSE_EDGE,
        n_pulses: config.n_pulses,
        delay: config.pulse_delay,
    })
}

/// Builds the neuron netlist. Every S-FED uses the library's default model.
///
/// Nodes: `mem` (membrane), `spike` (threshold-diode output and first
/// inverter input), `buf`, `out`, plus the bias nodes `vdd`, `vbg`,
/// `vref1..3`.
pub fn build_if_neuron(config: &NeuronConfig) -> Result<Circuit, NeuronError> {
    config.validate()?;
    let train = synaptic_pulse_train(config)?;
    let mut c = Circuit::new();
    c.globals.v_dd = config.v_dd;
    c.globals.v_bg = config.v_bg();
    c.globals.temp_celsius = config.temperature.celsius();
    let s = config.sizing;
    let sfed = |role, m| DeviceKind::SFed {
        role,
        model: DEFAULT_MODEL.to_string(),
        length_nm: config.channel_length,
        multiplier: m,
    };
    // terminals: drain, gate_d, gate_s, source
    c.add_device("XD1", sfed(Role::ThresholdDiode, s.threshold), &["spike", "vref1", "vref2", "mem"]);
    c.add_device("XD2", sfed(Role::DiodeConnectedReset, s.mem_reset), &["mem", "out", "out", "0"]);
    c.add_device("XD3", sfed(Role::ResistorLike, s.resistor), &["spike", "vref3", "vref3", "0"]);
    c.add_device("XD4", sfed(Role::DiodeConnectedReset, s.spike_reset), &["spike", "spike", "spike", "0"]);
    c.add_device("XD5", sfed(Role::InverterPullUp, s.inverter), &["vdd", "spike", "spike", "buf"]);
    c.add_device("XD6", sfed(Role::InverterPullDown, s.inverter), &["buf", "spike", "spike", "0"]);
    c.add_device("XD7", sfed(Role::InverterPullUp, s.inverter), &["vdd", "buf", "buf", "out"]);
    c.add_device("XD8", sfed(Role::InverterPullDown, s.inverter), &["out", "buf", "buf", "0"]);
    c.add_device("CMEM", DeviceKind::Capacitor(config.c_mem), &["mem", "0"]);
    c.add_device("ISYN", DeviceKind::ISourcePulseTrain(train), &["0", "mem"]);
    c.add_device("VDD", DeviceKind::VSourceDC(config.v_dd), &["vdd", "0"]);
    c.add_device("VBG", DeviceKind::VSourceDC(config.v_bg()), &["vbg", "0"]);
    c.add_device("VREF1", DeviceKind::VSourceDC(config.v_ref1), &["vref1", "0"]);
    c.add_device("VREF2", DeviceKind::VSourceDC(config.v_ref2), &["vref2", "0"]);
    c.add_device("VREF3", DeviceKind::VSourceDC(config.v_ref3), &["vref3", "0"]);
    c.analyses.push(Analysis::OperatingPoint);
    c.analyses.push(Analysis::Transient {
        t_stop: config.t_stop(),
        output_interval: config.output_interval,
    });
    Ok(c)
}

/// Library holding `params` under the default model name.
pub fn neuron_models(params: &SFedParams) -> ModelLibrary {
    ModelLibrary::with_default(*params)
}

/// Everything produced by one neuron simulation.
#[derive(Debug, Clone)]
pub struct NeuronRun {
    pub waveform: Waveform,
    pub dc: DcSolution,
    pub stats: NewtonStats,
    pub metrics: SpikeMetrics,
}

/// Builds, simulates and measures the neuron.
pub fn simulate_neuron(
    config: &NeuronConfig,
    params: &SFedParams,
    opts: &SolverOptions,
) -> Result<NeuronRun, NeuronError> {
    params
        .validate()
        .map_err(|e| NeuronError::Config(e.to_string()))?;
    let circuit = build_if_neuron(config)?;
    let models = neuron_models(params);
    let (waveform, stats, dc) =
        transient_with_stats(&circuit, &models, opts, config.t_stop(), config.output_interval)?;
    let metrics = SpikeMetrics::measure(config, &waveform, &dc)?;
    Ok(NeuronRun {
        waveform,
        dc,
        stats,
        metrics,
    })
}

impl NeuronConfig {
    /// Config keys accepted by [`NeuronConfig::set`].
    pub const KEYS: [&'static str; 15] = [
        "vdd", "vbg", "vref1", "vref2", "vref3", "cmem", "isyn", "pw", "period", "npulses", "delay", "L",
        "temp", "dt", "m_inv",
    ];

    /// Value of a config key; `vbg` is `None` while it tracks `v_dd/2`.
    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "vdd" => self.v_dd,
            "vbg" => return self.v_bg,
            "vref1" => self.v_ref1,
            "vref2" => self.v_ref2,
            "vref3" => self.v_ref3,
            "cmem" => self.c_mem,
            "isyn" => self.i_syn_amplitude,
            "pw" => self.pulse_width,
            "period" => self.pulse_period,
            "npulses" => f64::from(self.n_pulses),
            "delay" => self.pulse_delay,
            "L" => self.channel_length,
            "temp" => self.temperature.celsius(),
            "dt" => self.output_interval,
            "m_inv" => self.sizing.inverter,
            _ => return None,
        })
    }

    /// Sets one field by its short key; `temp` is in degrees Celsius.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), NeuronError> {
        match key {
            "vdd" => self.v_dd = value,
            "vbg" => self.v_bg = Some(value),
            "vref1" => self.v_ref1 = value,
            "vref2" => self.v_ref2 = value,
            "vref3" => self.v_ref3 = value,
            "cmem" => self.c_mem = value,
            "isyn" => self.i_syn_amplitude = value,
            "pw" => self.pulse_width = value,
            "period" => self.pulse_period = value,
            "npulses" => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= f64::from(u32::MAX)) {
                    return Err(NeuronError::Config(format!("npulses must be a count, got {value}")));
                }
                self.n_pulses = value as u32;
            }
            "delay" => self.pulse_delay = value,
            "L" => self.channel_length = value,
            "temp" => {
                self.temperature = DeviceTemperature::from_celsius(value)
                    .map_err(|e| NeuronError::Config(e.to_string()))?;
            }
            "dt" => self.output_interval = value,
            "m_inv" => self.sizing.inverter = value,
            _ => return Err(NeuronError::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }
}
