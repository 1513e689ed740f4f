//! Runs every acceptance criterion at its stated tolerance and prints one
//! PASS/FAIL line per criterion. Exits non-zero when a criterion outside
//! `KNOWN_INFEASIBLE` fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use sfedsim::engine::{dc_operating_point, transient, transient_with_stats, SolverOptions};
use sfedsim::model::{classify_mode, device_conductances, device_current, DeviceState, ModeLabel, Role};
use sfedsim::netlist::{
    emit_netlist, parse_netlist, validate, Diagnostic, ModelLibrary, ParseErrorKind,
};
use sfedsim::neuron::{build_if_neuron, neuron_models, NeuronConfig, SpikeMetrics};
use sfedsim::sweeps::{run_sweep, threshold_sweep, MetricName, SweepParameter, SweepPoint, SweepSpec, SweepTable};
use sfedsim::{BiasPoint, DeviceTemperature, SFedParams};

/// The supply-voltage threshold shift cannot coexist with frequency
/// invariance across the same supply range; see the README.
const KNOWN_INFEASIBLE: &[u32] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

struct Runs {
    params: SFedParams,
    opts: SolverOptions,
    base: NeuronConfig,
    nominal: SpikeMetrics,
    length: SweepTable,
    vdd: SweepTable,
}

fn sweep(runs_base: &NeuronConfig, parameter: SweepParameter, points: &[f64]) -> SweepTable {
    let spec = SweepSpec::new(parameter, points.iter().map(|&p| SweepPoint::Scalar(p)).collect(), *runs_base);
    run_sweep(&spec, &SFedParams::default(), &SolverOptions::default(), 0).expect("sweep")
}

fn metrics(table: &SweepTable, metric: MetricName) -> Vec<f64> {
    table.column(metric).into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ")
}

fn threshold_tunability(r: &Runs) -> Outcome {
    let pairs = [(0.4, 0.2), (0.8, 0.1), (1.0, 0.0)];
    let want = [0.8, 1.1, 1.4];
    let rows = threshold_sweep(&pairs, &r.base, &r.params, &r.opts, 0).expect("threshold sweep");
    let got: Vec<f64> = rows.iter().map(|row| *row.threshold.as_ref().unwrap_or(&f64::NAN)).collect();
    let pass = got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 0.05);
    outcome(pass, format!("thresholds {got:.4?} V vs {want:?} +/- 0.05"))
}

fn pulse_width_response(r: &Runs) -> Outcome {
    let table = sweep(&r.base, SweepParameter::PulseWidth, &[0.5e-9, 1e-9, 1.5e-9, 2e-9]);
    let stf = metrics(&table, MetricName::SpikesToFire);
    let monotone = stf.windows(2).all(|w| w[1] <= w[0]);
    let pass = stf[0] == 10.0 && stf[1] == 5.0 && monotone;
    outcome(pass, format!("spikes_to_fire at 0.5/1/1.5/2 ns = {stf:?}"))
}

fn energy(r: &Runs) -> Outcome {
    let e = r.nominal.energy_per_spike.unwrap_or(f64::NAN);
    outcome(within(e, 0.96425e-15, 0.2), format!("{e:.4e} J vs 9.6425e-16 +/- 20%"))
}

fn static_power(r: &Runs) -> Outcome {
    let p = metrics(&r.length, MetricName::Power);
    let (p75, p10, p15) = (p[0], p[1], p[3]);
    let pass = within(p10, 44e-9, 0.2) && within(p15, 14e-9, 0.25) && within(p75, 60e-9, 0.25);
    outcome(pass, format!("P(10 nm) {p10:.4e}, P(15 nm) {p15:.4e}, P(7.5 nm) {p75:.4e} W"))
}

fn frequency(r: &Runs) -> Outcome {
    let f = r.nominal.spiking_frequency;
    let fl = metrics(&r.length, MetricName::Frequency);
    let fv = metrics(&r.vdd, MetricName::Frequency);
    let (sl, sv) = (spread(&fl) / f, spread(&fv) / f);
    let pass = within(f, 20e6, 0.1) && sl <= 0.01 && sv <= 0.01;
    outcome(pass, format!("{f:.4e} Hz; relative spread over L {sl:.2e}, over Vdd {sv:.2e}"))
}

fn amplitude(r: &Runs) -> Outcome {
    let al = metrics(&r.length, MetricName::Amplitude);
    let av = metrics(&r.vdd, MetricName::Amplitude);
    let vdd = [0.8, 1.0, 1.2];
    let worst = av.iter().zip(vdd).map(|(a, v)| (a / v - 1.0).abs()).fold(0.0, f64::max);
    let pass = spread(&al) <= 0.010 && worst <= 0.05;
    outcome(pass, format!("L spread {:.3e} V; worst |A/Vdd - 1| {worst:.3e}", spread(&al)))
}

fn supply_shift(r: &Runs) -> Outcome {
    let th = metrics(&r.vdd, MetricName::Threshold);
    let p = metrics(&r.vdd, MetricName::Power);
    let shift = (th[2] - th[0]).abs();
    let increasing = p.windows(2).all(|w| w[1] > w[0]);
    let pass = (shift - 0.2).abs() <= 0.05 && increasing;
    outcome(
        pass,
        format!("threshold shift {shift:.4} V vs 0.2 +/- 0.05; power {} strictly increasing: {increasing}", fmt(&p)),
    )
}

fn temperature(r: &Runs) -> Outcome {
    let table = sweep(&r.base, SweepParameter::Temperature, &[-40.0, 27.0, 120.0]);
    let mut worst = (0.0, "");
    for m in MetricName::ALL {
        let v = metrics(&table, m);
        for x in [v[0], v[2]] {
            let d = ((x - v[1]) / v[1]).abs();
            if !(d <= worst.0) {
                worst = (d, m.as_str());
            }
        }
    }
    outcome(worst.0 <= 0.05, format!("largest drift {:.3e} ({})", worst.0, worst.1))
}

fn solver_correctness() -> Outcome {
    let lib = ModelLibrary::with_default(SFedParams::default());
    let opts = SolverOptions::default();
    // 1 uA step with a 1 ps ramp into 1 kOhm || 1 pF
    let (i, res, tau, tr) = (1e-6, 1e3, 1e-9, 1e-12);
    let c = parse_netlist("I1 0 b pulse(1u 100n 200n 1p 1p 1 0)\nR1 b 0 1k\nC1 b 0 1p\n").unwrap();
    let w = transient(&c, &lib, &opts, 5e-9, 1e-12).expect("rc transient");
    let v = w.node_trace("b").unwrap();
    let exact = |t: f64| {
        if t <= tr {
            i * res / tr * (t - tau * (1.0 - (-t / tau).exp()))
        } else {
            i * res * (1.0 - tau / tr * ((-(t - tr) / tau).exp() - (-t / tau).exp()))
        }
    };
    let worst = w
        .times
        .iter()
        .zip(&v)
        .filter(|(t, _)| **t > 0.0)
        .map(|(&t, &x)| ((x - exact(t)) / exact(t)).abs())
        .fold(0.0, f64::max);

    let c = parse_netlist("I1 0 m pulse(250n 1n 10n 1p 1p 1 0)\nC1 m 0 1f\n").unwrap();
    let w = transient(&c, &lib, &opts, 2e-9, 1e-12).expect("charge transient");
    let last = *w.node_trace("m").unwrap().last().unwrap();
    let pass = worst <= 1e-3 && within(last, 0.25, 0.01);
    outcome(pass, format!("RC worst relative error {worst:.2e}; charge step {last:.5} V"))
}

fn newton_discipline(r: &Runs) -> Outcome {
    let circuit = build_if_neuron(&r.base).unwrap();
    let models = neuron_models(&r.params);
    let dc = dc_operating_point(&circuit, &models, &r.opts).expect("dc");
    let (_, stats, _) =
        transient_with_stats(&circuit, &models, &r.opts, r.base.t_stop(), r.base.output_interval).expect("transient");
    let pass = stats.max_update <= r.opts.dv_max * (1.0 + 1e-12)
        && dc.iterations_used <= 40
        && dc.max_residual <= 1e-12
        && stats.max_residual <= 1e-12;
    outcome(
        pass,
        format!(
            "max update {:.3e} V, DC iterations {}, max KCL residual {:.2e} A (DC {:.2e})",
            stats.max_update, dc.iterations_used, stats.max_residual, dc.max_residual
        ),
    )
}

fn gradients() -> Outcome {
    let p = SFedParams::default();
    let t = DeviceTemperature::room();
    let axis: Vec<f64> = (0..10).map(|k| -1.2 + 2.4 * k as f64 / 9.0).collect();
    let h = 1e-5;
    let mut checked = 0;
    let mut bad = 0;
    for role in Role::ALL {
        let f = |ds: f64, gs: f64, gd: f64| device_current(&BiasPoint::new(ds, gs, gd), role, &p, &t, 10.0);
        for &ds in &axis {
            for &gs in &axis {
                for &gd in &axis {
                    let g = device_conductances(&BiasPoint::new(ds, gs, gd), role, &p, &t, 10.0);
                    let fd = [
                        (f(ds + h, gs, gd) - f(ds - h, gs, gd)) / (2.0 * h),
                        (f(ds, gs + h, gd) - f(ds, gs - h, gd)) / (2.0 * h),
                        (f(ds, gs, gd + h) - f(ds, gs, gd - h)) / (2.0 * h),
                    ];
                    for (a, n) in [g.0, g.1, g.2].into_iter().zip(fd) {
                        let err = (a - n).abs();
                        checked += 1;
                        if !(err <= 1e-15 || err <= 1e-4 * a.abs().max(n.abs())) {
                            bad += 1;
                        }
                    }
                }
            }
        }
    }
    outcome(bad == 0, format!("{bad} of {checked} partials outside tolerance"))
}

fn mode_table() -> Outcome {
    let mut off = Vec::new();
    for ds in [1.0, -1.0] {
        for gs in [1.0, -1.0] {
            for gd in [1.0, -1.0] {
                let m = classify_mode(&BiasPoint::new(ds, gs, gd));
                if m.state == DeviceState::Off {
                    off.push(m.label);
                }
            }
        }
    }
    outcome(off == [ModeLabel::D], format!("OFF modes {off:?}"))
}

fn netlist_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/netlists")
}

fn parser() -> Outcome {
    let mut texts: Vec<String> = fs::read_dir(netlist_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "sp"))
        .map(|p| fs::read_to_string(p).unwrap())
        .collect();
    texts.push(emit_netlist(&build_if_neuron(&NeuronConfig::default()).unwrap()));
    let round_trips = texts
        .iter()
        .filter(|t| {
            let a = parse_netlist(t).unwrap();
            parse_netlist(&emit_netlist(&a)).map(|b| b == a).unwrap_or(false)
        })
        .count();

    let parse_case = |text: &str, line: usize, kind: fn(&ParseErrorKind) -> bool| {
        parse_netlist(text).err().is_some_and(|e| e.line == line && kind(&e.kind))
    };
    let diag_case = |text: &str, line: usize, want: fn(&Diagnostic) -> bool| {
        let c = parse_netlist(text).unwrap();
        validate(&c).iter().any(|d| {
            want(d)
                && match d {
                    Diagnostic::ZeroValuedComponent(n) => c.device(n).and_then(|d| d.line) == Some(line),
                    Diagnostic::FloatingNode(n) => c.devices.iter().any(|d| {
                        d.line == Some(line) && d.terminals.iter().any(|&t| c.node_name(t) == n)
                    }),
                    _ => false,
                }
        })
    };
    let cases: [(&str, bool); 6] = [
        ("SyntaxError", parse_case("V1 a 0 1\nQ1 a 0 1", 2, |k| matches!(k, ParseErrorKind::Syntax(_)))),
        ("UnknownModel", parse_case("X1 a b c 0 role=ResistorLike model=x", 1, |k| matches!(k, ParseErrorKind::UnknownModel(_)))),
        ("DuplicateDevice", parse_case("C1 mem 0 1f\nC1 mem 0 2f", 2, |k| matches!(k, ParseErrorKind::DuplicateDevice(_)))),
        ("SyntaxError(value)", parse_case("* r\nR1 a 0 1x", 2, |k| matches!(k, ParseErrorKind::Syntax(_)))),
        ("FloatingNode", diag_case("V1 a 0 1\nR1 a 0 1k\nC1 a x 1f", 3, |d| matches!(d, Diagnostic::FloatingNode(_)))),
        ("ZeroValuedComponent", diag_case("V1 a 0 1\nR1 a 0 1k\nC1 a 0 0", 3, |d| matches!(d, Diagnostic::ZeroValuedComponent(_)))),
    ];
    let failed: Vec<&str> = cases.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let pass = texts.len() >= 10 && round_trips == texts.len() && failed.is_empty();
    outcome(
        pass,
        format!("{round_trips}/{} netlists round-trip; diagnostics failing: {failed:?}", texts.len()),
    )
}

fn sfedsim(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_sfedsim"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| tmp.path().join(name).display().to_string();
    let spec = tmp.path().join("pw.sweep");
    fs::write(&spec, "parameter = pulse_width\npoints = 0.5n, 1n\nnpulses = 12\n").unwrap();
    let rc = netlist_dir().join("rc_lowpass.sp").display().to_string();
    let runs: [(&str, Vec<String>); 3] = [
        ("neuron", vec!["neuron".into(), "--npulses".into(), "12".into()]),
        ("sweep", vec!["sweep".into(), spec.display().to_string(), "--jobs".into(), "2".into()]),
        ("run", vec!["run".into(), rc]),
    ];
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for (name, args) in runs {
        let (a, b) = (dir(&format!("{name}-a")), dir(&format!("{name}-b")));
        let mut first: Vec<&str> = args.iter().map(String::as_str).collect();
        first.extend(["--out", &a]);
        let manifest = format!("{a}/manifest.json");
        let ok = sfedsim(&first) && sfedsim(&["replay", &manifest, "--out", &b]);
        let (fa, fb) = (csv_files(Path::new(&a)), csv_files(Path::new(&b)));
        if !ok || fa.is_empty() || fa != fb {
            mismatched.push(name);
        }
        compared += fa.len();
    }
    outcome(mismatched.is_empty(), format!("{compared} CSV files replayed; mismatched commands {mismatched:?}"))
}

fn main() -> ExitCode {
    let base = NeuronConfig::default();
    let params = SFedParams::default();
    let opts = SolverOptions::default();
    let nominal = sfedsim::neuron::simulate_neuron(&base, &params, &opts).expect("nominal run").metrics;
    let runs = Runs {
        params,
        opts,
        base,
        nominal,
        length: sweep(&base, SweepParameter::ChannelLength, &[7.5, 10.0, 12.5, 15.0]),
        vdd: sweep(&base, SweepParameter::SupplyVoltage, &[0.8, 1.0, 1.2]),
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("threshold tunability", Box::new(|| threshold_tunability(&runs))),
        ("pulse-width response", Box::new(|| pulse_width_response(&runs))),
        ("energy per spike", Box::new(|| energy(&runs))),
        ("static power", Box::new(|| static_power(&runs))),
        ("spiking frequency", Box::new(|| frequency(&runs))),
        ("spike-amplitude stability", Box::new(|| amplitude(&runs))),
        ("supply-voltage threshold shift", Box::new(|| supply_shift(&runs))),
        ("temperature flatness", Box::new(|| temperature(&runs))),
        ("solver correctness", Box::new(solver_correctness)),
        ("Newton discipline", Box::new(|| newton_discipline(&runs))),
        ("model-gradient consistency", Box::new(gradients)),
        ("mode table", Box::new(mode_table)),
        ("parser", Box::new(parser)),
        ("determinism", Box::new(determinism)),
    ];
    let mut unexpected = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k as u32 + 1;
        let o = check();
        let known = KNOWN_INFEASIBLE.contains(&id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known infeasible)",
            (false, false) => "FAIL",
        };
        if !o.pass && !known {
            unexpected += 1;
        }
        println!("criterion {id:>2} {tag}: {name}: {}", o.detail);
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    }
}
