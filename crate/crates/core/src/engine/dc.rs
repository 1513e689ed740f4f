use crate::engine::mna::CapHistory;
use crate::engine::{
    solve_linear, DcSolution, Integration, Prepared, SolverError, SolverOptions, StampState, System,
};
use crate::netlist::{Circuit, ModelLibrary};

/// Result of one Newton solve.
#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Largest applied node update, volts.
    pub max_update: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum NewtonFailure {
    NoConvergence { worst: usize, residual: f64, iterations: usize },
    Singular { row: usize },
}

pub(crate) struct NewtonSetup<'a> {
    pub time: f64,
    pub source_scale: f64,
    pub integration: Integration,
    pub cap_hist: &'a [CapHistory],
    pub latch: &'a [i8],
    pub reltol: f64,
}

/// Damped Newton: each node update is clamped to ±dv_max. Converged when
/// the last update was within tolerance and the KCL residual at the updated
/// point is at most `abstol_current` on every node.
pub(crate) fn newton(
    prep: &Prepared,
    opts: &SolverOptions,
    setup: &NewtonSetup<'_>,
    x0: &[f64],
    sys: &mut System,
) -> Result<NewtonOutcome, NewtonFailure> {
    let n = prep.n_nodes;
    let mut x = x0.to_vec();
    let mut small_update = false;
    let mut max_update: f64 = 0.0;
    let mut iterations = 0;
    loop {
        let state = StampState {
            x: &x,
            time: setup.time,
            source_scale: setup.source_scale,
            integration: setup.integration,
            cap_hist: setup.cap_hist,
            latch: setup.latch,
        };
        prep.assemble(&state, sys);
        let (worst, residual) = sys.residual[..n]
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, r)| if r.abs() > acc.1 { (i, r.abs()) } else { acc });
        let branch_err = sys.residual[n..].iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if small_update && residual <= opts.abstol_current && branch_err <= opts.vntol {
            return Ok(NewtonOutcome {
                x,
                iterations,
                max_update,
                residual,
            });
        }
        if iterations >= opts.max_iterations {
            return Err(NewtonFailure::NoConvergence {
                worst,
                residual,
                iterations,
            });
        }
        let rhs: Vec<f64> = sys.residual.iter().map(|r| -r).collect();
        let delta = solve_linear(&sys.jac, &rhs).map_err(|e| NewtonFailure::Singular { row: e.row })?;
        iterations += 1;
        small_update = true;
        for (i, d) in delta.iter().enumerate() {
            if i < n {
                let clamped = d.clamp(-opts.dv_max, opts.dv_max);
                debug_assert!(clamped.abs() <= opts.dv_max);
                let new = x[i] + clamped;
                if clamped != *d || clamped.abs() > setup.reltol * new.abs() + opts.vntol {
                    small_update = false;
                }
                max_update = max_update.max(clamped.abs());
                x[i] = new;
            } else {
                x[i] += d;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NewtonFailure::NoConvergence {
                worst,
                residual: f64::INFINITY,
                iterations,
            });
        }
    }
}

pub(crate) fn node_label(prep: &Prepared, row: usize) -> String {
    if row < prep.n_nodes {
        prep.node_names[row].clone()
    } else {
        let k = row - prep.n_nodes;
        let src = (0..prep.device_count())
            .filter(|&d| prep.is_voltage_source(d))
            .nth(k)
            .map(|d| prep.device_names[d].clone())
            .unwrap_or_default();
        format!("branch current of {src}")
    }
}

pub(crate) fn failure_to_error(prep: &Prepared, f: NewtonFailure, time: Option<f64>) -> SolverError {
    match f {
        NewtonFailure::NoConvergence {
            worst,
            residual,
            iterations,
        } => SolverError::NoConvergence {
            time,
            iterations,
            worst_node: node_label(prep, worst),
            residual,
        },
        NewtonFailure::Singular { row } => SolverError::SingularMatrix {
            node: node_label(prep, row),
            time,
        },
    }
}

/// Operating point by Newton from zero, with source stepping as fallback.
pub fn dc_operating_point(
    circuit: &Circuit,
    models: &ModelLibrary,
    opts: &SolverOptions,
) -> Result<DcSolution, SolverError> {
    opts.validate()?;
    let prep = Prepared::new(circuit, models, opts.gmin)?;
    let (out, iterations) = solve_dc_prepared(&prep, opts, 0.0)?;
    Ok(dc_solution(&prep, &out, iterations))
}

pub(crate) fn solve_dc_prepared(
    prep: &Prepared,
    opts: &SolverOptions,
    time: f64,
) -> Result<(NewtonOutcome, usize), SolverError> {
    let mut sys = System::new(prep.size());
    let hist = vec![CapHistory::default(); prep.caps.len()];
    let setup = |scale: f64| NewtonSetup {
        time,
        source_scale: scale,
        integration: Integration::Dc,
        cap_hist: &hist,
        latch: &[],
        reltol: opts.reltol_dc,
    };
    let x0 = vec![0.0; prep.size()];
    match newton(prep, opts, &setup(1.0), &x0, &mut sys) {
        Ok(out) => {
            let iters = out.iterations;
            Ok((out, iters))
        }
        Err(NewtonFailure::Singular { row }) => Err(failure_to_error(prep, NewtonFailure::Singular { row }, None)),
        Err(first) => {
            // source stepping: ramp every source from 0 in ten increments
            let mut x = x0;
            let mut total = opts.max_iterations;
            let mut max_update: f64 = 0.0;
            let mut last = None;
            for step in 1..=10 {
                match newton(prep, opts, &setup(f64::from(step) / 10.0), &x, &mut sys) {
                    Ok(out) => {
                        total += out.iterations;
                        max_update = max_update.max(out.max_update);
                        x = out.x.clone();
                        last = Some(out);
                    }
                    Err(NewtonFailure::NoConvergence { worst, residual, iterations }) => {
                        return Err(failure_to_error(
                            prep,
                            NewtonFailure::NoConvergence {
                                worst,
                                residual,
                                iterations: total + iterations,
                            },
                            None,
                        ))
                    }
                    Err(e) => return Err(failure_to_error(prep, e, None)),
                }
            }
            let mut out = last.ok_or_else(|| failure_to_error(prep, first, None))?;
            out.max_update = max_update;
            Ok((out, total))
        }
    }
}

pub(crate) fn dc_solution(prep: &Prepared, out: &NewtonOutcome, iterations: usize) -> DcSolution {
    let state = StampState {
        x: &out.x,
        time: 0.0,
        source_scale: 1.0,
        integration: Integration::Dc,
        cap_hist: &[],
        latch: &[],
    };
    DcSolution {
        node_names: prep.node_names.clone(),
        node_voltages: out.x[..prep.n_nodes].to_vec(),
        device_names: prep.device_names.clone(),
        branch_currents: (0..prep.device_count())
            .map(|k| prep.device_current(k, &state))
            .collect(),
        iterations_used: iterations,
        max_residual: out.residual,
        max_update: out.max_update,
    }
}
