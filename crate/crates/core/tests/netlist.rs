use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use sfedsim::netlist::{
    emit_netlist, parse_netlist, validate, Analysis, Circuit, DeviceKind, Diagnostic, Node,
    ParseErrorKind,
};
use sfedsim::neuron::{build_if_neuron, NeuronConfig, NeuronError};

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/netlists");
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "sp"))
        .collect();
    files.sort();
    let mut out: Vec<_> = files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(p).unwrap())
        })
        .collect();
    let neuron = build_if_neuron(&NeuronConfig::default()).unwrap();
    out.push(("neuron".into(), emit_netlist(&neuron)));
    out
}

fn syntax_line(text: &str) -> usize {
    let err = parse_netlist(text).unwrap_err();
    assert!(matches!(err.kind, ParseErrorKind::Syntax(_)), "{err}");
    err.line
}

#[test]
fn corpus_has_at_least_ten_valid_netlists() {
    let c = corpus();
    assert!(c.len() >= 10);
    for (name, text) in &c {
        let circuit = parse_netlist(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(validate(&circuit), vec![], "{name}");
    }
}

#[test]
fn corpus_round_trips() {
    for (name, text) in corpus() {
        let first = parse_netlist(&text).unwrap();
        let emitted = emit_netlist(&first);
        let second = parse_netlist(&emitted).unwrap_or_else(|e| panic!("{name}: {e}\n{emitted}"));
        assert_eq!(first, second, "{name}");
        assert_eq!(emit_netlist(&second), emitted, "{name}: emit not idempotent");
    }
}

#[test]
fn capacitor_and_tran() {
    let c = parse_netlist("C1 mem 0 1f\n.tran 500n 10p").unwrap();
    assert_eq!(c.devices.len(), 1);
    assert_eq!(c.devices[0].kind, DeviceKind::Capacitor(1e-15));
    assert_eq!(c.devices[0].terminals, vec![Node::Index(0), Node::Ground]);
    assert_eq!(c.node_name(Node::Index(0)), "mem");
    assert_eq!(
        c.analyses,
        vec![Analysis::Transient { t_stop: 500e-9, output_interval: 10e-12 }]
    );
}

#[test]
fn empty_text_is_empty_circuit() {
    let c = parse_netlist("").unwrap();
    assert!(c.devices.is_empty());
    assert!(c.analyses.is_empty());
}

#[test]
fn duplicate_device_names_line() {
    let err = parse_netlist("C1 mem 0 1f\nC1 mem 0 2f").unwrap_err();
    assert_eq!(err.kind, ParseErrorKind::DuplicateDevice("C1".into()));
    assert_eq!(err.line, 2);
}

#[test]
fn unknown_model_names_line() {
    let err = parse_netlist("V1 a 0 1\nX1 a 0 0 0 role=ResistorLike model=nope").unwrap_err();
    assert_eq!(err.kind, ParseErrorKind::UnknownModel("nope".into()));
    assert_eq!(err.line, 2);
}

#[test]
fn malformed_lines_report_their_line() {
    assert_eq!(syntax_line("* c\nQ1 a 0 1"), 2);
    assert_eq!(syntax_line("C1 a 0"), 1);
    assert_eq!(syntax_line("V1 a 0 1\nC1 a 0 xyz"), 2);
    assert_eq!(syntax_line("X1 a b c 0 role=Bogus"), 1);
    assert_eq!(syntax_line("X1 a b c 0"), 1);
    assert_eq!(syntax_line("I1 0 a pulse(1n 1n 10n 1p 1p)"), 1);
    assert_eq!(syntax_line("\n\n.tran 10n"), 3);
    assert_eq!(syntax_line(".frobnicate"), 1);
    assert_eq!(syntax_line("+ 1 2"), 1);
    assert_eq!(syntax_line(".global vdd=abc"), 1);
}

#[test]
fn keywords_are_case_insensitive() {
    let a = parse_netlist("V1 a 0 1\nR1 a 0 1k\n.OP\n.Tran 1n 1p").unwrap();
    let b = parse_netlist("v1 a 0 1\nr1 a 0 1k\n.op\n.tran 1n 1p").unwrap();
    assert_eq!(a.analyses, b.analyses);
    assert_eq!(a.devices.len(), b.devices.len());
}

#[test]
fn floating_node_is_reported() {
    let c = parse_netlist("V1 a 0 1\nR1 a 0 1k\nC1 a x 1f").unwrap();
    let d = validate(&c);
    assert!(d.contains(&Diagnostic::FloatingNode("x".into())), "{d:?}");
}

#[test]
fn zero_capacitor_is_reported() {
    let c = parse_netlist("V1 a 0 1\nR1 a 0 1k\nC1 a 0 0").unwrap();
    assert_eq!(validate(&c), vec![Diagnostic::ZeroValuedComponent("C1".into())]);
}

#[test]
fn pulse_wider_than_edges_is_required() {
    let c = parse_netlist("I1 0 a pulse(1n 1p 10n 1p 1p 1 0)\nR1 a 0 1k").unwrap();
    assert!(validate(&c).iter().any(|d| matches!(d, Diagnostic::InvalidValue { .. })));
}

#[test]
fn single_resistor_emits_one_r_line() {
    let c = parse_netlist("R1 a 0 1k\n.op").unwrap();
    let text = emit_netlist(&c);
    let devices: Vec<_> = text
        .lines()
        .filter(|l| !l.starts_with('.') && !l.starts_with('*') && !l.trim().is_empty())
        .collect();
    assert_eq!(devices.len(), 1);
    assert!(devices[0].starts_with("R1 "));
    assert!(text.lines().any(|l| l.trim() == ".op"));
}

#[test]
fn neuron_device_census() {
    let c = build_if_neuron(&NeuronConfig::default()).unwrap();
    assert_eq!(validate(&c), vec![]);
    let count = |f: fn(&DeviceKind) -> bool| c.devices.iter().filter(|d| f(&d.kind)).count();
    assert_eq!(count(|k| matches!(k, DeviceKind::SFed { .. })), 8);
    assert_eq!(count(|k| matches!(k, DeviceKind::Capacitor(_))), 1);
    assert_eq!(count(|k| matches!(k, DeviceKind::ISourcePulseTrain(_))), 1);
    assert_eq!(count(|k| matches!(k, DeviceKind::VSourceDC(_))), 5);
}

#[test]
fn neuron_rejects_zero_membrane_capacitance() {
    let config = NeuronConfig { c_mem: 0.0, ..NeuronConfig::default() };
    assert!(matches!(build_if_neuron(&config), Err(NeuronError::Config(_))));
}

#[test]
fn node_indexing_is_a_bijection() {
    let c = build_if_neuron(&NeuronConfig::default()).unwrap();
    for (i, name) in c.node_names().iter().enumerate() {
        assert_eq!(c.find_node(name), Some(Node::Index(i)));
        assert_eq!(c.node_name(Node::Index(i)), name);
    }
    assert_eq!(c.find_node("0"), Some(Node::Ground));
}

fn resistor_ladder(values: &[f64]) -> Circuit {
    let mut text = String::from("V1 n0 0 1\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("R{i} n{i} n{} {v:e}\nC{i} n{} 0 1f\n", i + 1, i + 1));
    }
    text.push_str(".op\n.tran 1n 1p\n");
    parse_netlist(&text).unwrap()
}

proptest! {
    #[test]
    fn round_trip_on_generated_ladders(values in prop::collection::vec(1.0f64..1e9, 1..8)) {
        let c = resistor_ladder(&values);
        let back = parse_netlist(&emit_netlist(&c)).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "[ -~\n]{0,200}") {
        if let Err(e) = parse_netlist(&text) {
            prop_assert!(e.line >= 1);
        }
    }
}
