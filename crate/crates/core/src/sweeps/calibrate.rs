use std::cell::Cell;
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::engine::{dc_operating_point, SolverOptions};
use crate::neuron::{build_if_neuron, neuron_models, simulate_neuron, static_power, NeuronConfig};
use crate::sweeps::{MetricName, SweepError};
use crate::units::parse_si;
use crate::SFedParams;

/// Parameters the neuron calibration adjusts by default. The threshold-law
/// coefficients are never among them.
pub const CALIBRATION_FREE_PARAMS: [&str; 8] =
    ["i_sat", "v_slope", "i_off", "g_res", "lambda_leak", "k_vth_l", "alpha_t", "c_par"];

/// Parameters searched in log space; all others are searched linearly.
const LOG_PARAMS: [&str; 7] = ["i_sat", "v_slope", "i_off", "g_res", "lambda_leak", "c_par", "i_latch"];

const MIN_BUDGET: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTarget {
    /// Metric identifier. For the neuron objective this is a metric name
    /// optionally followed by config overrides, e.g. `power_w@L=15`.
    pub id: String,
    pub target: f64,
    /// Relative tolerance.
    pub tolerance: f64,
    pub weight: f64,
}

/// Non-empty list of targets with positive tolerances and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTargets(Vec<CalibrationTarget>);

impl CalibrationTargets {
    pub fn new(targets: Vec<CalibrationTarget>) -> Result<Self, SweepError> {
        if targets.is_empty() {
            return Err(SweepError::InvalidSpec("no calibration targets".into()));
        }
        for t in &targets {
            if !(t.tolerance > 0.0 && t.tolerance.is_finite()) {
                return Err(SweepError::InvalidSpec(format!("{}: tolerance must be > 0", t.id)));
            }
            if !(t.weight > 0.0 && t.weight.is_finite()) {
                return Err(SweepError::InvalidSpec(format!("{}: weight must be > 0", t.id)));
            }
            if !(t.target != 0.0 && t.target.is_finite()) {
                return Err(SweepError::InvalidSpec(format!("{}: target must be finite and nonzero", t.id)));
            }
        }
        Ok(Self(targets))
    }

    pub fn targets(&self) -> &[CalibrationTarget] {
        &self.0
    }

    /// Per-target outcomes and the residual `max_i w_i·|v_i − t_i|/(|t_i|·tol_i)`.
    /// Every target is met when the residual is at most 1 and all weights are 1.
    /// A missing value (NaN) scores infinity.
    pub fn score(&self, values: &[f64]) -> (f64, Vec<TargetOutcome>) {
        let outcomes: Vec<TargetOutcome> = self
            .0
            .iter()
            .zip(values)
            .map(|(t, &v)| {
                let rel_error = if v.is_finite() {
                    (v - t.target).abs() / t.target.abs()
                } else {
                    f64::INFINITY
                };
                TargetOutcome {
                    id: t.id.clone(),
                    value: v,
                    target: t.target,
                    tolerance: t.tolerance,
                    rel_error,
                    met: rel_error <= t.tolerance,
                }
            })
            .collect();
        let residual = self
            .0
            .iter()
            .zip(&outcomes)
            .map(|(t, o)| t.weight * o.rel_error / t.tolerance)
            .fold(0.0, f64::max);
        (residual, outcomes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetOutcome {
    pub id: String,
    /// NaN when the metric could not be measured.
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub rel_error: f64,
    pub met: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub params: SFedParams,
    pub residual: f64,
    pub outcomes: Vec<TargetOutcome>,
    pub evaluations: usize,
    /// Best residual after each simplex iteration; never increases.
    pub history: Vec<f64>,
}

impl CalibrationReport {
    pub fn summary(&self) -> String {
        let mut out = format!(
            "residual {:.4} after {} evaluations\n",
            self.residual, self.evaluations
        );
        for o in &self.outcomes {
            out.push_str(&format!(
                "  {:<28} value {:>12.5e}  target {:>12.5e}  rel.err {:>8.4}  tol {:.3}  {}\n",
                o.id,
                o.value,
                o.target,
                o.rel_error,
                o.tolerance,
                if o.met { "met" } else { "MISSED" }
            ));
        }
        out
    }
}

struct Space<'a> {
    base: SFedParams,
    free: &'a [&'a str],
    log: Vec<bool>,
}

impl Space<'_> {
    fn encode(&self, p: &SFedParams) -> Vec<f64> {
        self.free
            .iter()
            .zip(&self.log)
            .map(|(n, &log)| {
                let v = p.get(n).expect("checked name");
                if log {
                    v.ln()
                } else {
                    v
                }
            })
            .collect()
    }

    fn decode(&self, x: &[f64]) -> SFedParams {
        let mut p = self.base;
        for ((n, &log), &xi) in self.free.iter().zip(&self.log).zip(x) {
            p.set(n, if log { xi.exp() } else { xi }).expect("checked name");
        }
        p
    }

    fn initial_step(&self, x: f64, log: bool) -> f64 {
        if log {
            0.2
        } else {
            (0.2 * x.abs()).max(1e-3)
        }
    }
}

/// Nelder–Mead minimisation of the target residual over the `free`
/// parameters of `initial`. `evaluate` returns one value per target, NaN
/// where a value could not be measured.
///
/// Returns `initial` unchanged when it already has residual ≤ 1, and
/// [`SweepError::BudgetExhausted`] when the best residual is still above 1
/// after `budget` evaluations. Deterministic for a deterministic `evaluate`.
pub fn calibrate<F>(
    initial: &SFedParams,
    targets: &CalibrationTargets,
    budget: usize,
    free: &[&str],
    evaluate: F,
) -> Result<CalibrationReport, SweepError>
where
    F: Fn(&SFedParams) -> Vec<f64>,
{
    initial
        .validate()
        .map_err(|e| SweepError::InvalidSpec(format!("initial parameters: {e}")))?;
    if budget < MIN_BUDGET {
        return Err(SweepError::InvalidSpec(format!("budget {budget} below {MIN_BUDGET}")));
    }
    if free.is_empty() {
        return Err(SweepError::InvalidSpec("no free parameters".into()));
    }
    for n in free {
        if initial.get(n).is_none() {
            return Err(SweepError::InvalidSpec(format!("unknown parameter '{n}'")));
        }
    }
    let space = Space {
        base: *initial,
        free,
        log: free.iter().map(|n| LOG_PARAMS.contains(n)).collect(),
    };
    let evaluations = Cell::new(0);
    let mut objective = |x: &[f64]| -> f64 {
        evaluations.set(evaluations.get() + 1);
        let p = space.decode(x);
        if x.iter().any(|v| !v.is_finite()) || p.validate().is_err() {
            return f64::INFINITY;
        }
        let (r, _) = targets.score(&evaluate(&p));
        if r.is_nan() {
            f64::INFINITY
        } else {
            r
        }
    };

    // The start is scored directly: exp(ln x) need not round-trip.
    evaluations.set(1);
    let (f0, initial_outcomes) = targets.score(&evaluate(initial));
    let f0 = if f0.is_nan() { f64::INFINITY } else { f0 };
    if f0 <= 1.0 {
        return Ok(CalibrationReport {
            params: *initial,
            residual: f0,
            outcomes: initial_outcomes,
            evaluations: 1,
            history: vec![f0],
        });
    }
    let x0 = space.encode(initial);
    let mut history = vec![f0];
    let mut simplex = vec![(x0.clone(), f0)];
    for i in 0..x0.len() {
        if evaluations.get() >= budget {
            break;
        }
        let mut x = x0.clone();
        x[i] += space.initial_step(x0[i], space.log[i]);
        let f = objective(&x);
        simplex.push((x, f));
    }
    nelder_mead(&mut simplex, &mut objective, &evaluations, budget, &mut history);
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = if simplex[0].1 < f0 { space.decode(&simplex[0].0) } else { *initial };
    let (residual, outcomes) = targets.score(&evaluate(&best));
    let report = CalibrationReport {
        params: best,
        residual,
        outcomes,
        evaluations: evaluations.get(),
        history,
    };
    if residual > 1.0 {
        Err(SweepError::BudgetExhausted {
            best_residual: residual,
            report: Box::new(report),
        })
    } else {
        Ok(report)
    }
}

/// Runs the simplex until the best vertex reaches 1 or the budget is spent.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    simplex: &mut [(Vec<f64>, f64)],
    objective: &mut F,
    evaluations: &Cell<usize>,
    budget: usize,
    history: &mut Vec<f64>,
) {
    let n = simplex.len() - 1;
    if n == 0 {
        return;
    }
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect() };
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        assert!(best <= *history.last().expect("seeded"), "simplex best residual increased");
        history.push(best);
        if best <= 1.0 || evaluations.get() >= budget {
            return;
        }
        let mut centroid = vec![0.0; simplex[0].0.len()];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let (worst_x, worst_f) = simplex[n].clone();
        let second = simplex[n - 1].1;
        let xr = lerp(&centroid, &worst_x, -1.0);
        let fr = objective(&xr);
        if fr < best {
            let xe = lerp(&centroid, &worst_x, -2.0);
            let fe = if evaluations.get() < budget { objective(&xe) } else { f64::INFINITY };
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < second {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst_f {
                let xc = lerp(&centroid, &xr, 0.5);
                let fc = objective(&xc);
                (xc, fc)
            } else {
                let xc = lerp(&centroid, &worst_x, 0.5);
                let fc = objective(&xc);
                (xc, fc)
            };
            if fc < fr.min(worst_f) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, f) in simplex[1..].iter_mut() {
                    if evaluations.get() >= budget {
                        break;
                    }
                    *x = lerp(&x_best, x, 0.5);
                    *f = objective(x);
                }
            }
        }
    }
}

/// Splits `metric@key=value,key=value` into the metric and its config.
fn target_config(id: &str, base: &NeuronConfig) -> Result<(MetricName, NeuronConfig), SweepError> {
    let (metric, overrides) = id.split_once('@').unwrap_or((id, ""));
    let metric: MetricName = metric.parse()?;
    let mut config = *base;
    for item in overrides.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| SweepError::InvalidSpec(format!("{id}: override '{item}' needs key=value")))?;
        let v = parse_si(v).map_err(|e| SweepError::InvalidSpec(format!("{id}: {e}")))?;
        config
            .set(k.trim(), v)
            .map_err(|e| SweepError::InvalidSpec(format!("{id}: {e}")))?;
    }
    config.validate().map_err(|e| SweepError::InvalidSpec(format!("{id}: {e}")))?;
    Ok((metric, config))
}

/// Calibrates against neuron metrics. Each target id names a metric plus
/// optional config overrides on `base`. Targets sharing a config share one
/// run; configs needing only static power run the operating point alone.
/// Distinct configs are evaluated in parallel.
pub fn calibrate_neuron(
    initial: &SFedParams,
    targets: &CalibrationTargets,
    budget: usize,
    free: &[&str],
    base: &NeuronConfig,
    opts: &SolverOptions,
) -> Result<CalibrationReport, SweepError> {
    let parsed = targets
        .targets()
        .iter()
        .map(|t| target_config(&t.id, base))
        .collect::<Result<Vec<_>, _>>()?;
    // one group per distinct override string, in first-seen order
    let mut groups: BTreeMap<usize, (NeuronConfig, bool)> = BTreeMap::new();
    let mut group_of = Vec::with_capacity(parsed.len());
    for (i, (metric, config)) in parsed.iter().enumerate() {
        let key = parsed[..=i]
            .iter()
            .position(|(_, c)| c == config)
            .expect("self matches");
        let entry = groups.entry(key).or_insert((*config, false));
        entry.1 |= *metric != MetricName::Power;
        group_of.push(key);
    }
    let groups: Vec<(usize, NeuronConfig, bool)> = groups.into_iter().map(|(k, (c, t))| (k, c, t)).collect();
    let evaluate = |p: &SFedParams| -> Vec<f64> {
        let results: Vec<(usize, Option<crate::neuron::SpikeMetrics>, Option<f64>)> = groups
            .par_iter()
            .map(|&(key, config, transient)| {
                if transient {
                    let m = simulate_neuron(&config, p, opts).ok().map(|r| r.metrics);
                    (key, m, None)
                } else {
                    let power = build_if_neuron(&config)
                        .ok()
                        .and_then(|c| dc_operating_point(&c, &neuron_models(p), opts).ok())
                        .and_then(|dc| static_power(&dc, config.v_dd).ok());
                    (key, None, power)
                }
            })
            .collect();
        parsed
            .iter()
            .zip(&group_of)
            .map(|((metric, _), key)| {
                let (_, m, power) = results.iter().find(|r| r.0 == *key).expect("group ran");
                match (m, power) {
                    (Some(m), _) => metric.value(m),
                    (None, Some(pw)) => Some(*pw),
                    _ => None,
                }
                .unwrap_or(f64::NAN)
            })
            .collect()
    };
    calibrate(initial, targets, budget, free, evaluate)
}
