//! `sfedsim` command-line driver.
//!
//! Exit codes: 0 success, 1 input, parse or validation error, 2 solver
//! failure, 3 calibration budget exhausted.

mod manifest;
mod plot;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use sfedsim::engine::{dc_operating_point, transient, DcSolution, SolverOptions, Waveform};
use sfedsim::netlist::{parse_netlist_with_models, validate, Analysis, ModelLibrary};
use sfedsim::neuron::{simulate_neuron, NeuronConfig, NeuronError, METRICS_CSV_HEADER};
use sfedsim::sweeps::{
    calibrate_neuron, parse_calibration_file, parse_sweep_file, run_sweep, SweepError, CALIBRATION_FREE_PARAMS,
};
use sfedsim::units::{format_exact, parse_si};
use sfedsim::SFedParams;

use manifest::{ModelRecord, Provenance, RunManifest, MANIFEST_FILE};

/// First line of every parameter file written by `calibrate`.
const CALIBRATED_MARKER: &str = "# sfedsim calibrated parameters";
const DEFAULT_OUT: &str = "sfedsim-out";
const DEFAULT_BUDGET: usize = 500;

#[derive(Parser)]
#[command(name = "sfedsim", version, about = "S-FED circuit simulator and integrate-and-fire neuron experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate and run every analysis of a netlist.
    Run {
        netlist: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// S-FED parameter file for the default model.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Simulate the integrate-and-fire neuron.
    Neuron(NeuronArgs),
    /// Run a parameter sweep spec.
    Sweep {
        spec: PathBuf,
        /// Worker threads; 0 uses all cores, 1 runs serially.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Fit model parameters to a targets file.
    Calibrate {
        targets: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Parse and validate a netlist without simulating.
    Check { netlist: PathBuf },
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn si(text: &str) -> Result<f64, String> {
    parse_si(text).map_err(|e| e.to_string())
}

#[derive(Args)]
struct NeuronArgs {
    /// Input pulse width (s).
    #[arg(long, value_parser = si)]
    pw: Option<f64>,
    /// Input pulse period (s).
    #[arg(long, value_parser = si)]
    period: Option<f64>,
    #[arg(long, value_parser = si)]
    vdd: Option<f64>,
    #[arg(long, value_parser = si)]
    vref1: Option<f64>,
    #[arg(long, value_parser = si)]
    vref2: Option<f64>,
    #[arg(long, value_parser = si)]
    vref3: Option<f64>,
    /// Membrane capacitance (F).
    #[arg(long, value_parser = si)]
    cmem: Option<f64>,
    /// Synaptic pulse amplitude (A).
    #[arg(long, value_parser = si)]
    isyn: Option<f64>,
    /// Channel length (nm).
    #[arg(long, value_parser = si)]
    length: Option<f64>,
    /// Temperature (°C).
    #[arg(long, value_parser = si, allow_hyphen_values = true)]
    temp: Option<f64>,
    #[arg(long, value_parser = si)]
    npulses: Option<f64>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl NeuronArgs {
    fn overrides(&self) -> [(&'static str, Option<f64>); 11] {
        [
            ("pw", self.pw),
            ("period", self.period),
            ("vdd", self.vdd),
            ("vref1", self.vref1),
            ("vref2", self.vref2),
            ("vref3", self.vref3),
            ("cmem", self.cmem),
            ("isyn", self.isyn),
            ("L", self.length),
            ("temp", self.temp),
            ("npulses", self.npulses),
        ]
    }
}

enum Failure {
    Input(anyhow::Error),
    Solver(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Budget(_) => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn neuron_failure(e: NeuronError) -> Failure {
    match e {
        NeuronError::Config(m) => Failure::Input(anyhow!("{m}")),
        other => Failure::Solver(other.to_string()),
    }
}

fn sweep_failure(e: SweepError) -> Failure {
    match e {
        SweepError::BudgetExhausted { best_residual, .. } => {
            Failure::Budget(format!("budget exhausted, best residual {best_residual:.4}"))
        }
        other => Failure::Input(other.into()),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(e) => eprintln!("error: {e:#}"),
                Failure::Solver(m) => eprintln!("solver failure: {m}"),
                Failure::Budget(m) => eprintln!("calibration: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Run { netlist, out, model } => {
            let text = read_input(&netlist)?;
            let model = load_model(model.as_deref())?;
            exec_run(&file_name(&netlist), &text, model, &out_dir(out)?)
        }
        Command::Neuron(args) => {
            let model = load_model(args.model.as_deref())?;
            let mut config = resolved_config(&NeuronConfig::default());
            for (key, value) in args.overrides() {
                if let Some(v) = value {
                    config.insert(key.to_string(), format_exact(v));
                }
            }
            exec_neuron(&config, model, &out_dir(args.out)?)
        }
        Command::Sweep { spec, jobs, out, model } => {
            let text = read_input(&spec)?;
            let model = load_model(model.as_deref())?;
            exec_sweep(&file_name(&spec), &text, jobs, model, &out_dir(out)?)
        }
        Command::Calibrate {
            targets,
            budget,
            out,
            model,
        } => {
            let text = read_input(&targets)?;
            let model = load_model(model.as_deref())?;
            exec_calibrate(&file_name(&targets), &text, budget, model, &out_dir(out)?)
        }
        Command::Check { netlist } => {
            let text = read_input(&netlist)?;
            let models = ModelLibrary::default();
            let circuit = parse_netlist_with_models(&text, &models).map_err(|e| anyhow!("{e}"))?;
            let diags = validate(&circuit);
            if diags.is_empty() {
                println!(
                    "{}: ok ({} devices, {} nodes)",
                    netlist.display(),
                    circuit.devices.len(),
                    circuit.node_count()
                );
                Ok(())
            } else {
                Err(anyhow!("{}", diagnostics_text(&circuit, &diags)).into())
            }
        }
        Command::Replay { manifest, out } => replay(&RunManifest::read(&manifest)?, &out_dir(out)?),
    }
}

fn replay(m: &RunManifest, out: &Path) -> CmdResult {
    let params = SFedParams::from_kv_text(&m.model.params).map_err(|e| anyhow!("manifest model: {e}"))?;
    let model = (params, m.model.clone());
    let input = || -> Result<(&String, &String), Failure> {
        m.inputs
            .iter()
            .next()
            .ok_or_else(|| Failure::Input(anyhow!("manifest has no input file")))
    };
    let number = |key: &str| -> Result<Option<usize>, Failure> {
        m.config
            .get(key)
            .map(|v| v.parse::<usize>().map_err(|_| Failure::Input(anyhow!("bad {key} '{v}'"))))
            .transpose()
    };
    match m.command.as_str() {
        "run" => {
            let (name, text) = input()?;
            exec_run(name, text, model, out)
        }
        "neuron" => exec_neuron(&m.config, model, out),
        "sweep" => {
            let (name, text) = input()?;
            exec_sweep(name, text, number("jobs")?.unwrap_or(0), model, out)
        }
        "calibrate" => {
            let (name, text) = input()?;
            exec_calibrate(name, text, number("budget")?, model, out)
        }
        other => Err(anyhow!("unknown command '{other}' in manifest").into()),
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("{}: no such file or unreadable", path.display()))
        .map_err(Failure::Input)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn out_dir(flag: Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = flag
        .or_else(|| std::env::var_os("SFEDSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn load_model(path: Option<&Path>) -> Result<(SFedParams, ModelRecord), Failure> {
    let Some(path) = path else {
        let params = SFedParams::default();
        return Ok((
            params,
            ModelRecord {
                provenance: Provenance::Default,
                path: None,
                params: params.to_kv_text(),
            },
        ));
    };
    let text = read_input(path)?;
    let params = SFedParams::from_kv_text(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let provenance = if text.starts_with(CALIBRATED_MARKER) {
        Provenance::Calibrated
    } else {
        Provenance::File
    };
    Ok((
        params,
        ModelRecord {
            provenance,
            path: Some(path.display().to_string()),
            params: text,
        },
    ))
}

fn resolved_config(config: &NeuronConfig) -> BTreeMap<String, String> {
    NeuronConfig::KEYS
        .iter()
        .filter_map(|k| config.get(k).map(|v| (k.to_string(), format_exact(v))))
        .collect()
}

fn write_output(dir: &Path, name: &str, text: &str, manifest: &mut RunManifest) -> Result<(), Failure> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    manifest.outputs.push(name.to_string());
    Ok(())
}

fn finish(mut manifest: RunManifest, started: Instant, dir: &Path) -> CmdResult {
    manifest.wall_clock_s = started.elapsed().as_secs_f64();
    manifest.write(dir)?;
    println!("outputs in {} ({})", dir.display(), MANIFEST_FILE);
    Ok(())
}

fn diagnostics_text(circuit: &sfedsim::netlist::Circuit, diags: &[sfedsim::netlist::Diagnostic]) -> String {
    let mut s = String::from("netlist failed validation:");
    for d in diags {
        let line = match d {
            sfedsim::netlist::Diagnostic::DanglingTerminal { device, .. }
            | sfedsim::netlist::Diagnostic::InvalidValue { device, .. }
            | sfedsim::netlist::Diagnostic::ZeroValuedComponent(device) => {
                circuit.device(device).and_then(|dev| dev.line)
            }
            _ => None,
        };
        match line {
            Some(l) => {
                let _ = write!(s, "\n  line {l}: {d}");
            }
            None => {
                let _ = write!(s, "\n  {d}");
            }
        }
    }
    s
}

fn op_csv(dc: &DcSolution) -> String {
    let mut s = String::from("quantity,value\n");
    for (n, v) in dc.node_names.iter().zip(&dc.node_voltages) {
        let _ = writeln!(s, "v:{n},{v:.16e}");
    }
    for (d, i) in dc.device_names.iter().zip(&dc.branch_currents) {
        let _ = writeln!(s, "i:{d},{i:.16e}");
    }
    s
}

fn exec_run(name: &str, text: &str, model: (SFedParams, ModelRecord), out: &Path) -> CmdResult {
    let started = Instant::now();
    let (params, record) = model;
    let models = ModelLibrary::with_default(params);
    let circuit = parse_netlist_with_models(text, &models).map_err(|e| anyhow!("{name}: {e}"))?;
    let diags = validate(&circuit);
    if !diags.is_empty() {
        return Err(anyhow!("{name}: {}", diagnostics_text(&circuit, &diags)).into());
    }
    let mut manifest = RunManifest::new("run", record);
    manifest.inputs.insert(name.to_string(), text.to_string());
    let opts = SolverOptions::default();
    let mut analyses = circuit.analyses.clone();
    if analyses.is_empty() {
        analyses.push(Analysis::OperatingPoint);
    }
    for analysis in analyses {
        match analysis {
            Analysis::OperatingPoint => {
                let dc = dc_operating_point(&circuit, &models, &opts).map_err(|e| Failure::Solver(e.to_string()))?;
                println!("operating point: {} Newton iterations", dc.iterations_used);
                write_output(out, "op.csv", &op_csv(&dc), &mut manifest)?;
            }
            Analysis::Transient { t_stop, output_interval } => {
                let wave = transient(&circuit, &models, &opts, t_stop, output_interval)
                    .map_err(|e| Failure::Solver(e.to_string()))?;
                println!("transient: {} samples to {t_stop:e} s", wave.times.len());
                write_output(out, "waveform.csv", &wave.to_csv(), &mut manifest)?;
            }
        }
    }
    finish(manifest, started, out)
}

/// Waveform CSV restricted to the neuron's signal nodes and input current.
fn neuron_csv(wave: &Waveform) -> Result<String, Failure> {
    let nodes = ["mem", "spike", "buf", "out"];
    let cols: Vec<Vec<f64>> = nodes
        .iter()
        .map(|n| wave.node_trace(n).ok_or_else(|| anyhow!("missing node {n}")))
        .chain(std::iter::once(
            wave.current_trace("ISYN").ok_or_else(|| anyhow!("missing ISYN current")),
        ))
        .collect::<Result<_, _>>()?;
    let mut s = String::from("time_s,v:mem,v:spike,v:buf,v:out,i:ISYN\n");
    for (k, t) in wave.times.iter().enumerate() {
        let _ = write!(s, "{t:.16e}");
        for c in &cols {
            let _ = write!(s, ",{:.16e}", c[k]);
        }
        s.push('\n');
    }
    Ok(s)
}

fn exec_neuron(config_map: &BTreeMap<String, String>, model: (SFedParams, ModelRecord), out: &Path) -> CmdResult {
    let started = Instant::now();
    let (params, record) = model;
    let mut config = NeuronConfig::default();
    for (k, v) in config_map {
        let value = parse_si(v).map_err(|e| anyhow!("{k}: {e}"))?;
        config.set(k, value).map_err(neuron_failure)?;
    }
    let run = simulate_neuron(&config, &params, &SolverOptions::default()).map_err(neuron_failure)?;
    let m = &run.metrics;
    let mut manifest = RunManifest::new("neuron", record);
    manifest.config = config_map.clone();
    let csv_name = "neuron_waveform.csv";
    write_output(out, csv_name, &neuron_csv(&run.waveform)?, &mut manifest)?;
    let row = format!("{METRICS_CSV_HEADER}\n{}\n", m.csv_row("neuron", &config));
    write_output(out, "metrics.csv", &row, &mut manifest)?;
    write_output(out, "plot_neuron.py", &plot::neuron_plot_script(csv_name), &mut manifest)?;
    let w = &run.waveform;
    let trace = |n: &str| w.node_trace(n).ok_or_else(|| Failure::Input(anyhow!("missing node {n}")));
    let isyn = w
        .current_trace("ISYN")
        .ok_or_else(|| Failure::Input(anyhow!("missing ISYN current")))?;
    let panels = [
        ("neuron_isyn.svg", "Input current", "I_syn (A)", isyn),
        ("neuron_spike.svg", "Spike node", "V_spike (V)", trace("spike")?),
        ("neuron_mem.svg", "Membrane voltage", "V_mem (V)", trace("mem")?),
    ];
    for (file, title, label, y) in panels {
        write_output(out, file, &plot::svg_line_chart(title, label, &w.times, &y), &mut manifest)?;
    }
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4e}"));
    println!(
        "spikes {}  spikes_to_fire {}  threshold {} V  amplitude {} V  energy {} J  power {:.4e} W  freq {:.4e} Hz",
        m.spike_times.len(),
        m.spikes_to_fire,
        opt(m.firing_threshold_measured),
        opt(m.mean_amplitude()),
        opt(m.energy_per_spike),
        m.static_power,
        m.spiking_frequency
    );
    finish(manifest, started, out)
}

fn exec_sweep(name: &str, text: &str, jobs: usize, model: (SFedParams, ModelRecord), out: &Path) -> CmdResult {
    let started = Instant::now();
    let (params, record) = model;
    let spec = parse_sweep_file(text).map_err(|e| anyhow!("{name}: {e}"))?;
    let table = run_sweep(&spec, &params, &SolverOptions::default(), jobs).map_err(sweep_failure)?;
    let mut manifest = RunManifest::new("sweep", record);
    manifest.inputs.insert(name.to_string(), text.to_string());
    manifest.config.insert("jobs".into(), jobs.to_string());
    write_output(out, "sweep.csv", &table.to_csv(), &mut manifest)?;
    let summary = table.summary();
    write_output(out, "sweep_summary.txt", &summary, &mut manifest)?;
    print!("{summary}");
    finish(manifest, started, out)
}

fn exec_calibrate(
    name: &str,
    text: &str,
    budget: Option<usize>,
    model: (SFedParams, ModelRecord),
    out: &Path,
) -> CmdResult {
    let started = Instant::now();
    let (params, record) = model;
    let file = parse_calibration_file(text).map_err(|e| anyhow!("{name}: {e}"))?;
    let budget = budget.or(file.budget).unwrap_or(DEFAULT_BUDGET);
    let free: Vec<&str> = match &file.free {
        Some(names) => names.iter().map(String::as_str).collect(),
        None => CALIBRATION_FREE_PARAMS.to_vec(),
    };
    let result = calibrate_neuron(
        &params,
        &file.targets,
        budget,
        &free,
        &file.base_config,
        &SolverOptions::default(),
    );
    let (report, failure) = match result {
        Ok(r) => (r, None),
        Err(SweepError::BudgetExhausted { best_residual, report }) => {
            let f = sweep_failure(SweepError::BudgetExhausted {
                best_residual,
                report: report.clone(),
            });
            (*report, Some(f))
        }
        Err(e) => return Err(sweep_failure(e)),
    };
    let mut manifest = RunManifest::new("calibrate", record);
    manifest.inputs.insert(name.to_string(), text.to_string());
    manifest.config.insert("budget".into(), budget.to_string());
    let summary = report.summary();
    write_output(out, "calibration_summary.txt", &summary, &mut manifest)?;
    let params_text = format!("{CALIBRATED_MARKER}\n{}", report.params.to_kv_text());
    write_output(out, "calibrated.params", &params_text, &mut manifest)?;
    print!("{summary}");
    finish(manifest, started, out)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}
