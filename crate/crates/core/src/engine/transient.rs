use crate::engine::dc::{dc_solution, failure_to_error, newton, solve_dc_prepared, NewtonFailure, NewtonSetup};
use crate::engine::mna::CapHistory;
use crate::engine::{
    DcSolution, Integration, NewtonStats, Prepared, SolverError, SolverOptions, StampState, System,
    Waveform,
};
use crate::netlist::{Circuit, ModelLibrary};

/// Voltage floor of the relative LTE normalization.
const LTE_VOLTAGE_FLOOR: f64 = 1e-3;

pub fn transient(
    circuit: &Circuit,
    models: &ModelLibrary,
    opts: &SolverOptions,
    t_stop: f64,
    output_interval: f64,
) -> Result<Waveform, SolverError> {
    transient_with_stats(circuit, models, opts, t_stop, output_interval).map(|(w, _, _)| w)
}

/// Transient run that also returns step statistics and the initial operating point.
pub fn transient_with_stats(
    circuit: &Circuit,
    models: &ModelLibrary,
    opts: &SolverOptions,
    t_stop: f64,
    output_interval: f64,
) -> Result<(Waveform, NewtonStats, DcSolution), SolverError> {
    opts.validate()?;
    if !(t_stop > 0.0 && output_interval > 0.0 && output_interval <= t_stop) {
        return Err(SolverError::InvalidOptions(format!(
            "t_stop = {t_stop}, output interval = {output_interval}"
        )));
    }
    let prep = Prepared::new(circuit, models, opts.gmin)?;
    let (op, dc_iters) = solve_dc_prepared(&prep, opts, 0.0)?;
    let dc = dc_solution(&prep, &op, dc_iters);

    let mut stats = NewtonStats {
        max_update: op.max_update,
        max_iterations: dc_iters,
        max_residual: op.residual,
        min_accepted_step: f64::INFINITY,
        ..NewtonStats::default()
    };

    let mut x = op.x;
    let mut hist: Vec<CapHistory> = prep
        .caps
        .iter()
        .map(|c| CapHistory {
            v_prev: prep.cap_voltage(c, &x),
            i_prev: 0.0,
        })
        .collect();

    let tiny = opts.min_step * 0.5;
    let mut stops: Vec<f64> = prep
        .breakpoints
        .iter()
        .copied()
        .filter(|&b| b > tiny && b < t_stop - tiny)
        .collect();
    stops.push(t_stop);
    let mut next_stop = 0;

    let mut raw_t = vec![0.0];
    let mut raw_v = vec![x[..prep.n_nodes].to_vec()];
    let mut raw_i = vec![dc.branch_currents.clone()];
    // accepted (t, node voltages) since the last breakpoint, newest last
    let mut recent: Vec<(f64, Vec<f64>)> = vec![(0.0, x[..prep.n_nodes].to_vec())];

    let mut latch = vec![0i8; prep.device_count()];
    let max_step = output_interval;
    let mut sys = System::new(prep.size());
    let mut t = 0.0;
    let mut h = opts.initial_step.min(max_step);
    let mut use_be = true;

    while t < t_stop - tiny {
        while stops[next_stop] <= t + tiny {
            next_stop += 1;
        }
        let target = stops[next_stop];
        h = h.min(max_step);
        if t + h > target - opts.min_step {
            h = target - t;
        }
        let integration = if use_be {
            Integration::BackwardEuler { h }
        } else {
            Integration::Trapezoidal { h }
        };
        let guess = predict(&x, &recent, t, h, prep.n_nodes);
        let setup = NewtonSetup {
            time: t + h,
            source_scale: 1.0,
            integration,
            cap_hist: &hist,
            latch: &latch,
            reltol: opts.reltol_tran,
        };
        let outcome = newton(&prep, opts, &setup, &guess, &mut sys);
        let (out, err_ratio) = match outcome {
            Ok(out) => {
                let ratio = lte_ratio(&recent, t + h, &out.x[..prep.n_nodes], use_be, opts.lte_limit);
                if ratio.is_some_and(|r| r > 1.0) {
                    stats.rejected_steps += 1;
                    h *= 0.5;
                    use_be = true;
                    if h < opts.min_step {
                        return Err(SolverError::StepUnderflow { time: t });
                    }
                    continue;
                }
                (out, ratio)
            }
            Err(NewtonFailure::Singular { row }) => {
                return Err(failure_to_error(&prep, NewtonFailure::Singular { row }, Some(t + h)))
            }
            Err(fail) => {
                stats.rejected_steps += 1;
                h *= 0.5;
                use_be = true;
                if h < opts.min_step {
                    return Err(failure_to_error(&prep, fail, Some(t + h * 2.0)));
                }
                continue;
            }
        };

        // accept
        t += h;
        stats.accepted_steps += 1;
        stats.max_update = stats.max_update.max(out.max_update);
        stats.max_iterations = stats.max_iterations.max(out.iterations);
        stats.max_residual = stats.max_residual.max(out.residual);
        stats.min_accepted_step = stats.min_accepted_step.min(h);
        x = out.x;
        let state = StampState {
            x: &x,
            time: t,
            source_scale: 1.0,
            integration,
            cap_hist: &hist,
            latch: &latch,
        };
        let currents: Vec<f64> = (0..prep.device_count())
            .map(|k| prep.device_current(k, &state))
            .collect();
        let new_hist: Vec<CapHistory> = prep
            .caps
            .iter()
            .zip(&hist)
            .map(|(cap, old)| {
                let v = prep.cap_voltage(cap, &x);
                let i = Prepared::companion(cap, old, integration)
                    .map_or(0.0, |(g, ieq)| g * v + ieq);
                CapHistory { v_prev: v, i_prev: i }
            })
            .collect();
        hist = new_hist;
        raw_t.push(t);
        raw_v.push(x[..prep.n_nodes].to_vec());
        raw_i.push(currents.clone());

        let mut latch_changed = false;
        for (k, dir) in latch.iter_mut().enumerate() {
            let next = prep.next_latch(k, currents[k], *dir);
            latch_changed |= next != *dir;
            *dir = next;
        }
        let at_breakpoint = (t - target).abs() <= tiny;
        if at_breakpoint || latch_changed {
            if at_breakpoint {
                t = target;
            }
            recent.clear();
            recent.push((t, x[..prep.n_nodes].to_vec()));
            use_be = true;
            h = opts.initial_step;
        } else {
            recent.push((t, x[..prep.n_nodes].to_vec()));
            if recent.len() > 4 {
                recent.remove(0);
            }
            let order = if use_be { 1.0 } else { 2.0 };
            let grow = match err_ratio {
                Some(r) if r > 0.0 => (0.9 * r.powf(-1.0 / (order + 1.0))).clamp(0.5, 2.0),
                _ => 2.0,
            };
            use_be = false;
            h *= grow;
            h = h.max(opts.min_step);
        }
    }

    let wave = Waveform::resample(
        &raw_t,
        &raw_v,
        &raw_i,
        output_interval,
        t_stop,
        prep.node_names.clone(),
        prep.device_names.clone(),
    );
    Ok((wave, stats, dc))
}

/// Linear extrapolation from the two newest accepted points.
fn predict(x: &[f64], recent: &[(f64, Vec<f64>)], t: f64, h: f64, n: usize) -> Vec<f64> {
    let mut guess = x.to_vec();
    if let [.., (t0, v0), (t1, v1)] = recent {
        if *t1 == t && t1 > t0 {
            let s = h / (t1 - t0);
            for i in 0..n {
                guess[i] = v1[i] + s * (v1[i] - v0[i]);
            }
        }
    }
    guess
}

/// Largest per-node LTE relative to `lte_limit·max(|v|, 1 mV)`; `None` when
/// there is not yet enough history since the last breakpoint.
fn lte_ratio(recent: &[(f64, Vec<f64>)], t_new: f64, v_new: &[f64], backward_euler: bool, limit: f64) -> Option<f64> {
    let need = if backward_euler { 2 } else { 3 };
    if recent.len() < need {
        return None;
    }
    let pts = &recent[recent.len() - need..];
    let mut ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    ts.push(t_new);
    let h = t_new - ts[ts.len() - 2];
    let mut worst: f64 = 0.0;
    for i in 0..v_new.len() {
        let mut dd: Vec<f64> = pts.iter().map(|p| p.1[i]).collect();
        dd.push(v_new[i]);
        // in-place divided differences
        for level in 1..dd.len() {
            for k in (level..dd.len()).rev() {
                dd[k] = (dd[k] - dd[k - 1]) / (ts[k] - ts[k - level]);
            }
        }
        let top = dd[dd.len() - 1];
        let lte = if backward_euler {
            // h²/2 · x'' with x'' ≈ 2·f[t0,t1,t2]
            h * h * top
        } else {
            // h³/12 · x''' with x''' ≈ 6·f[t0..t3]
            h * h * h * top / 2.0
        };
        let scale = limit * v_new[i].abs().max(LTE_VOLTAGE_FLOOR);
        worst = worst.max(lte.abs() / scale);
    }
    Some(worst)
}
