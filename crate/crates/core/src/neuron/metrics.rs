use crate::engine::{DcSolution, Waveform};
use crate::neuron::{synaptic_pulse_train, NeuronConfig, NeuronError};
use crate::netlist::PulseTrain;

/// Hysteresis of output-spike detection, volts.
pub const SPIKE_HYSTERESIS: f64 = 0.05;

pub const METRICS_CSV_HEADER: &str =
    "config_id,vdd,vref1,vref2,pw_s,period_s,L_nm,T_C,spikes_to_fire,threshold_v,amplitude_v,energy_j,power_w,freq_hz";

/// Output spikes on `node`: an upward crossing of `level` followed by a
/// downward crossing of `level − hysteresis`. Times are interpolated upward
/// crossings; amplitudes are the maxima between the two crossings.
pub fn detect_spikes(
    wave: &Waveform,
    node: &str,
    level: f64,
    hysteresis: f64,
) -> Result<(Vec<f64>, Vec<f64>), NeuronError> {
    let v = wave
        .node_trace(node)
        .ok_or_else(|| NeuronError::MissingNode(node.to_string()))?;
    Ok(crossings(&wave.times, &v, level, hysteresis))
}

fn crossings(t: &[f64], v: &[f64], level: f64, hysteresis: f64) -> (Vec<f64>, Vec<f64>) {
    let mut times = Vec::new();
    let mut amps = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for k in 1..v.len() {
        match open {
            None => {
                if v[k - 1] < level && v[k] >= level {
                    let f = (level - v[k - 1]) / (v[k] - v[k - 1]);
                    open = Some((t[k - 1] + f * (t[k] - t[k - 1]), v[k]));
                }
            }
            Some((tc, peak)) => {
                if v[k] < level - hysteresis {
                    times.push(tc);
                    amps.push(peak);
                    open = None;
                } else {
                    open = Some((tc, peak.max(v[k])));
                }
            }
        }
    }
    (times, amps)
}

/// Trapezoidal integral of `i_syn·v_mem` divided by the number of output spikes.
pub fn energy_per_spike(
    times: &[f64],
    i_syn: &[f64],
    v_mem: &[f64],
    n_spikes: usize,
) -> Result<f64, NeuronError> {
    if n_spikes == 0 {
        return Err(NeuronError::ZeroSpikes);
    }
    let p: Vec<f64> = i_syn.iter().zip(v_mem).map(|(i, v)| i * v).collect();
    let integral: f64 = times
        .windows(2)
        .zip(p.windows(2))
        .map(|(t, p)| 0.5 * (p[0] + p[1]) * (t[1] - t[0]))
        .sum();
    Ok(integral / n_spikes as f64)
}

/// `v_dd·(|I_D5| + |I_D7|)` from the operating point.
pub fn static_power(dc: &DcSolution, v_dd: f64) -> Result<f64, NeuronError> {
    let branch = |name: &str| {
        dc.current(name)
            .ok_or_else(|| NeuronError::MissingBranch(name.to_string()))
    };
    Ok(v_dd * (branch("XD5")?.abs() + branch("XD7")?.abs()))
}

/// Peak membrane voltage up to the first output spike on `out`.
pub fn measure_firing_threshold(wave: &Waveform) -> Result<f64, NeuronError> {
    let v_dd = wave
        .node_trace("vdd")
        .and_then(|v| v.first().copied())
        .ok_or_else(|| NeuronError::MissingNode("vdd".into()))?;
    let (spikes, _) = detect_spikes(wave, "out", v_dd / 2.0, SPIKE_HYSTERESIS)?;
    let first = *spikes.first().ok_or(NeuronError::NoSpike)?;
    let mem = wave
        .node_trace("mem")
        .ok_or_else(|| NeuronError::MissingNode("mem".into()))?;
    Ok(wave
        .times
        .iter()
        .zip(&mem)
        .take_while(|(t, _)| **t <= first)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Number of input pulses that had started by `t_first_spike`.
pub fn spikes_to_fire(train: &PulseTrain, t_first_spike: f64) -> u32 {
    (0..train.n_pulses)
        .take_while(|&k| train.start_of(k) <= t_first_spike)
        .count() as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeMetrics {
    pub spike_times: Vec<f64>,
    pub spike_amplitudes: Vec<f64>,
    /// 0 when the neuron never fired.
    pub spikes_to_fire: u32,
    pub energy_per_spike: Option<f64>,
    pub static_power: f64,
    pub spiking_frequency: f64,
    pub firing_threshold_measured: Option<f64>,
}

impl SpikeMetrics {
    pub fn measure(config: &NeuronConfig, wave: &Waveform, dc: &DcSolution) -> Result<Self, NeuronError> {
        let (spike_times, spike_amplitudes) =
            detect_spikes(wave, "out", config.v_dd / 2.0, SPIKE_HYSTERESIS)?;
        let train = synaptic_pulse_train(config)?;
        let n = spike_times.len();
        let spikes_to_fire = spike_times.first().map_or(0, |&t| spikes_to_fire(&train, t));
        let energy = if n == 0 {
            None
        } else {
            let i_syn = wave
                .current_trace("ISYN")
                .ok_or_else(|| NeuronError::MissingBranch("ISYN".into()))?;
            let v_mem = wave
                .node_trace("mem")
                .ok_or_else(|| NeuronError::MissingNode("mem".into()))?;
            Some(energy_per_spike(&wave.times, &i_syn, &v_mem, n)?)
        };
        let threshold = match measure_firing_threshold(wave) {
            Ok(v) => Some(v),
            Err(NeuronError::NoSpike) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            spiking_frequency: frequency(&spike_times),
            spike_times,
            spike_amplitudes,
            spikes_to_fire,
            energy_per_spike: energy,
            static_power: static_power(dc, config.v_dd)?,
            firing_threshold_measured: threshold,
        })
    }

    pub fn mean_amplitude(&self) -> Option<f64> {
        if self.spike_amplitudes.is_empty() {
            None
        } else {
            Some(self.spike_amplitudes.iter().sum::<f64>() / self.spike_amplitudes.len() as f64)
        }
    }

    /// One metrics row matching [`METRICS_CSV_HEADER`]; missing values are empty.
    pub fn csv_row(&self, config_id: &str, config: &NeuronConfig) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{config_id},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{},{},{:e},{:e}",
            config.v_dd,
            config.v_ref1,
            config.v_ref2,
            config.pulse_width,
            config.pulse_period,
            config.channel_length,
            config.temperature.celsius(),
            self.spikes_to_fire,
            opt(self.firing_threshold_measured),
            opt(self.mean_amplitude()),
            opt(self.energy_per_spike),
            self.static_power,
            self.spiking_frequency,
        )
    }
}

/// `(n − 1)/(last − first)` for two or more spikes, else 0.
pub fn frequency(spike_times: &[f64]) -> f64 {
    match spike_times {
        [first, .., last] if last > first => (spike_times.len() - 1) as f64 / (last - first),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_pulse_is_one_spike() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 1e-12).collect();
        let v: Vec<f64> = (0..100).map(|k| if (20..40).contains(&k) { 1.2 } else { 0.0 }).collect();
        let (times, amps) = crossings(&t, &v, 0.6, 0.05);
        assert_eq!(amps, vec![1.2]);
        assert!((times[0] - 19.5e-12).abs() < 1e-18);
    }

    #[test]
    fn flat_trace_has_no_spikes() {
        let t = [0.0, 1.0, 2.0];
        assert_eq!(crossings(&t, &[0.0; 3], 0.6, 0.05), (vec![], vec![]));
    }

    #[test]
    fn frequency_of_regular_train() {
        assert!((frequency(&[0.0, 50e-9, 100e-9]) - 20e6).abs() < 1e-3);
        assert_eq!(frequency(&[1e-9]), 0.0);
    }
}
