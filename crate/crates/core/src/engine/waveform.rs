use std::fmt::Write;

/// Per-run Newton and step-control statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NewtonStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest single node update applied by any Newton iteration, volts.
    pub max_update: f64,
    /// Most iterations any accepted solve needed.
    pub max_iterations: usize,
    /// Largest KCL residual at any accepted solution, amperes.
    pub max_residual: f64,
    pub min_accepted_step: f64,
}

/// Node voltages and device currents on a uniform output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub times: Vec<f64>,
    pub node_names: Vec<String>,
    /// `voltages[k][i]`: node `i` at `times[k]`.
    pub voltages: Vec<Vec<f64>>,
    pub device_names: Vec<String>,
    /// `currents[k][j]`: device `j` at `times[k]`.
    pub currents: Vec<Vec<f64>>,
    pub output_interval: f64,
}

impl Waveform {
    /// Linear interpolation of raw accepted points onto `k·dt`, k = 0..=floor(t_stop/dt).
    pub(crate) fn resample(
        raw_t: &[f64],
        raw_v: &[Vec<f64>],
        raw_i: &[Vec<f64>],
        dt: f64,
        t_stop: f64,
        node_names: Vec<String>,
        device_names: Vec<String>,
    ) -> Self {
        let n_out = (t_stop / dt * (1.0 + 1e-12)).floor() as usize + 1;
        let mut times = Vec::with_capacity(n_out);
        let mut voltages = Vec::with_capacity(n_out);
        let mut currents = Vec::with_capacity(n_out);
        let mut seg = 0;
        for k in 0..n_out {
            let t = k as f64 * dt;
            while seg + 2 < raw_t.len() && raw_t[seg + 1] < t {
                seg += 1;
            }
            let (t0, t1) = (raw_t[seg], raw_t[(seg + 1).min(raw_t.len() - 1)]);
            let w = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
            let j = (seg + 1).min(raw_t.len() - 1);
            let lerp = |a: &[f64], b: &[f64]| -> Vec<f64> {
                a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
            };
            times.push(t);
            voltages.push(lerp(&raw_v[seg], &raw_v[j]));
            currents.push(lerp(&raw_i[seg], &raw_i[j]));
        }
        Self {
            times,
            node_names,
            voltages,
            device_names,
            currents,
            output_interval: dt,
        }
    }

    pub fn node_index(&self, node: &str) -> Option<usize> {
        self.node_names.iter().position(|n| n == node)
    }

    pub fn node_trace(&self, node: &str) -> Option<Vec<f64>> {
        if node == "0" {
            return Some(vec![0.0; self.times.len()]);
        }
        let i = self.node_index(node)?;
        Some(self.voltages.iter().map(|row| row[i]).collect())
    }

    pub fn current_trace(&self, device: &str) -> Option<Vec<f64>> {
        let j = self
            .device_names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(device))?;
        Some(self.currents.iter().map(|row| row[j]).collect())
    }

    /// CSV with header `time_s,v:<node>,...,i:<device>,...` at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.times.len() * 24 * (1 + self.node_names.len() + self.device_names.len()));
        out.push_str("time_s");
        for n in &self.node_names {
            let _ = write!(out, ",v:{n}");
        }
        for d in &self.device_names {
            let _ = write!(out, ",i:{d}");
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:.16e}");
            for v in self.voltages[k].iter().chain(&self.currents[k]) {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }
}
