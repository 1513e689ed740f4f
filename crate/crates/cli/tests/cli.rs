use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sfedsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfedsim")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn out(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

/// Value of `column` in the first data row of a CSV file.
fn csv_value(path: &Path, column: &str) -> String {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == column).unwrap_or_else(|| panic!("no column {column}"));
    row[k].to_string()
}

#[test]
fn rc_run_writes_uniform_grid() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "rc.sp", "V1 in 0 1\nR1 in out 1k\nC1 out 0 1f\n.op\n.tran 1p 0.01p\n");
    let o = sfedsim(&["run", &net, "--out", &out(&dir, "o")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("o/waveform.csv")).unwrap();
    let times: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(times.len(), 101);
    for (k, t) in times.iter().enumerate() {
        assert!((t - k as f64 * 0.01e-12).abs() < 1e-20, "sample {k} at {t:e}");
    }
    assert!(dir.path().join("o/op.csv").exists());
    assert!(dir.path().join("o/manifest.json").exists());
}

#[test]
fn missing_file_exits_1() {
    let o = sfedsim(&["run", "/nonexistent/x.sp"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).to_lowercase().contains("no such file"), "{}", stderr(&o));
}

#[test]
fn unknown_device_letter_exits_1_with_line() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "bad.sp", "V1 a 0 1\nQ1 a 0 1\n");
    let o = sfedsim(&["check", &net]);
    assert_eq!(code(&o), 1);
    let e = stderr(&o);
    assert!(e.contains("SyntaxError") && e.contains("line 2"), "{e}");
}

#[test]
fn check_accepts_valid_netlist() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "ok.sp", "V1 a 0 1\nR1 a 0 1k\n.op\n");
    assert_eq!(code(&sfedsim(&["check", &net])), 0);
    let zero = write(&dir, "zero.sp", "V1 a 0 1\nR1 a 0 1k\nC1 a 0 0\n");
    let o = sfedsim(&["check", &zero]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("ZeroValuedComponent"), "{}", stderr(&o));
}

#[test]
fn singular_circuit_exits_2() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "short.sp", "V1 a 0 1\nV2 a 0 2\n.op\n");
    assert_eq!(code(&sfedsim(&["run", &net, "--out", &out(&dir, "o")])), 2);
}

#[test]
fn neuron_pulse_widths() {
    let dir = TempDir::new().unwrap();
    for (pw, want) in [("1n", "5"), ("0.5n", "10")] {
        let o_dir = out(&dir, pw);
        let o = sfedsim(&["neuron", "--pw", pw, "--npulses", "12", "--out", &o_dir]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(csv_value(&Path::new(&o_dir).join("metrics.csv"), "spikes_to_fire"), want, "pw {pw}");
    }
}

#[test]
fn neuron_threshold_pair_and_outputs() {
    let dir = TempDir::new().unwrap();
    let o_dir = out(&dir, "o");
    let o = sfedsim(&["neuron", "--vref1", "1.0", "--vref2", "0.0", "--npulses", "12", "--out", &o_dir]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let th: f64 = csv_value(&Path::new(&o_dir).join("metrics.csv"), "threshold_v").parse().unwrap();
    assert!((th - 1.4).abs() <= 0.05, "{th}");
    for f in ["neuron_waveform.csv", "plot_neuron.py", "neuron_mem.svg", "neuron_spike.svg", "neuron_isyn.svg"] {
        assert!(Path::new(&o_dir).join(f).exists(), "{f}");
    }
}

#[test]
fn neuron_rejects_zero_capacitance() {
    let o = sfedsim(&["neuron", "--cmem", "0", "--out", "/tmp/sfedsim-never-written"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn length_sweep_has_four_rows() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "l.sweep", "parameter = channel_length\npoints = 7.5, 10, 12.5, 15\nnpulses = 12\n");
    let o = sfedsim(&["sweep", &spec, "--jobs", "1", "--out", &out(&dir, "o")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.path().join("o/sweep_summary.txt").exists());
}

#[test]
fn empty_points_exit_1() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "e.sweep", "parameter = channel_length\npoints =\n");
    assert_eq!(code(&sfedsim(&["sweep", &spec, "--out", &out(&dir, "o")])), 1);
}

#[test]
fn calibration_output_reproduces_its_residual() {
    let dir = TempDir::new().unwrap();
    let cal = write(&dir, "t.cal", "budget = 200\ntarget = power_w 44n 0.02\ntarget = power_w@L=15 14n 0.05\n");
    let o = sfedsim(&["calibrate", &cal, "--out", &out(&dir, "a")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let params = dir.path().join("a/calibrated.params").display().to_string();
    let again = sfedsim(&["calibrate", &cal, "--model", &params, "--out", &out(&dir, "b")]);
    assert_eq!(code(&again), 0, "{}", stderr(&again));
    let summary = |d: &str| fs::read_to_string(dir.path().join(d).join("calibration_summary.txt")).unwrap();
    let (first, second) = (summary("a"), summary("b"));
    // The defaults miss the 2% power target, so the first run had to move.
    assert!(!first.contains("after 1 evaluations"), "{first}");
    assert!(second.contains("after 1 evaluations"), "{second}");
    let residual = |s: &str| s.split_whitespace().nth(1).unwrap().to_string();
    assert_eq!(residual(&first), residual(&second));
    let manifest = fs::read_to_string(dir.path().join("b/manifest.json")).unwrap();
    assert!(manifest.contains("\"calibrated\""), "{manifest}");
}

#[test]
fn unreachable_calibration_exits_3() {
    let dir = TempDir::new().unwrap();
    let cal = write(&dir, "t.cal", "budget = 100\nfree = c_par\ntarget = power_w 1 0.01\n");
    let o = sfedsim(&["calibrate", &cal, "--out", &out(&dir, "o")]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(dir.path().join("o/calibration_summary.txt").exists());
}

#[test]
fn replay_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = out(&dir, "a");
    let o = sfedsim(&["neuron", "--pw", "0.5n", "--npulses", "12", "--out", &a]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let b = out(&dir, "b");
    let o = sfedsim(&["replay", &format!("{a}/manifest.json"), "--out", &b]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["neuron_waveform.csv", "metrics.csv"] {
        assert_eq!(fs::read(Path::new(&a).join(f)).unwrap(), fs::read(Path::new(&b).join(f)).unwrap(), "{f}");
    }
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(code(&sfedsim(&["frobnicate"])), 1);
    assert_eq!(code(&sfedsim(&["--help"])), 0);
    assert_eq!(code(&sfedsim(&["neuron", "--pw", "abc"])), 1);
}
