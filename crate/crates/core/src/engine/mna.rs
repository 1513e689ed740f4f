//! Circuit compilation and residual-form MNA stamping.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! per voltage source. `System::residual` holds the sum of currents leaving
//! each node (KCL) and the constraint error of each source row; `System::jac`
//! is its Jacobian.

use crate::engine::{DenseMatrix, SolverError};
use crate::model::{self, Role};
use crate::{BiasPoint, DeviceTemperature};
use crate::netlist::{Circuit, DeviceKind, ModelLibrary, PulseTrain};
use crate::SFedParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integration {
    /// Capacitors open.
    Dc,
    BackwardEuler { h: f64 },
    Trapezoidal { h: f64 },
}

#[derive(Debug, Clone)]
enum ElemKind {
    Resistor { g: f64 },
    VSource { volts: f64, branch: usize },
    ISource(PulseTrain),
    SFed {
        role: Role,
        params: SFedParams,
        temp: DeviceTemperature,
        length_nm: f64,
        multiplier: f64,
    },
    Capacitor,
}

#[derive(Debug, Clone)]
struct Elem {
    kind: ElemKind,
    nodes: Vec<Option<usize>>,
}

/// A two-terminal capacitance: explicit capacitors and S-FED parasitics.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CapElem {
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub c: f64,
}

/// Companion-model history of one capacitance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CapHistory {
    pub v_prev: f64,
    pub i_prev: f64,
}

/// Circuit resolved against a model library, ready for stamping.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub n_nodes: usize,
    pub n_branches: usize,
    pub node_names: Vec<String>,
    pub device_names: Vec<String>,
    pub gmin: f64,
    elems: Vec<Elem>,
    pub(crate) caps: Vec<CapElem>,
    /// device index -> indices into `caps`
    cap_index: Vec<Vec<usize>>,
    pub breakpoints: Vec<f64>,
}

pub struct StampState<'a> {
    pub x: &'a [f64],
    pub time: f64,
    /// Multiplies every independent source (DC source stepping).
    pub source_scale: f64,
    pub integration: Integration,
    pub cap_hist: &'a [CapHistory],
    /// Per-device latch direction of threshold diodes (0 = released); may be empty.
    pub latch: &'a [i8],
}

/// Newton system: Jacobian and residual.
#[derive(Debug, Clone)]
pub struct System {
    pub jac: DenseMatrix<f64>,
    pub residual: Vec<f64>,
}

impl System {
    pub fn new(size: usize) -> Self {
        Self {
            jac: DenseMatrix::zeros(size),
            residual: vec![0.0; size],
        }
    }

    pub fn clear(&mut self) {
        self.jac.clear();
        self.residual.iter_mut().for_each(|v| *v = 0.0);
    }

    fn add_j(&mut self, i: Option<usize>, j: Option<usize>, v: f64) {
        if let (Some(i), Some(j)) = (i, j) {
            self.jac.add(i, j, v);
        }
    }

    fn add_f(&mut self, i: Option<usize>, v: f64) {
        if let Some(i) = i {
            self.residual[i] += v;
        }
    }

    /// Current `i` leaving node `a` and entering node `b`, with `di/dv` for
    /// each (node, derivative) pair.
    fn branch(&mut self, a: Option<usize>, b: Option<usize>, i: f64, grads: &[(Option<usize>, f64)]) {
        self.add_f(a, i);
        self.add_f(b, -i);
        for &(k, g) in grads {
            self.add_j(a, k, g);
            self.add_j(b, k, -g);
        }
    }
}

fn volt(x: &[f64], n: Option<usize>) -> f64 {
    n.map_or(0.0, |i| x[i])
}

impl Prepared {
    pub fn new(circuit: &Circuit, models: &ModelLibrary, gmin: f64) -> Result<Self, SolverError> {
        let temp = DeviceTemperature::from_celsius(circuit.globals.temp_celsius)
            .map_err(|e| SolverError::InvalidCircuit(e.to_string()))?;
        let n_nodes = circuit.node_count();
        let mut n_branches = 0;
        let mut elems = Vec::with_capacity(circuit.devices.len());
        let mut caps = Vec::new();
        let mut cap_index = vec![Vec::new(); circuit.devices.len()];
        let mut breakpoints = Vec::new();
        for (k, dev) in circuit.devices.iter().enumerate() {
            let nodes: Vec<Option<usize>> = dev.terminals.iter().map(|t| t.index()).collect();
            let kind = match &dev.kind {
                DeviceKind::Resistor(r) => ElemKind::Resistor { g: 1.0 / r },
                DeviceKind::VSourceDC(v) => {
                    n_branches += 1;
                    ElemKind::VSource {
                        volts: *v,
                        branch: n_nodes + n_branches - 1,
                    }
                }
                DeviceKind::ISourcePulseTrain(p) => {
                    breakpoints.extend(p.breakpoints());
                    ElemKind::ISource(*p)
                }
                DeviceKind::Capacitor(c) => {
                    cap_index[k].push(caps.len());
                    caps.push(CapElem {
                        a: nodes[0],
                        b: nodes[1],
                        c: *c,
                    });
                    ElemKind::Capacitor
                }
                DeviceKind::SFed {
                    role,
                    model,
                    length_nm,
                    multiplier,
                } => {
                    let params = *models.get(model).ok_or_else(|| {
                        SolverError::InvalidCircuit(format!("unknown model '{model}' on {}", dev.name))
                    })?;
                    if params.c_par > 0.0 {
                        // drain-source, gate_d-drain, gate_s-source
                        for (a, b) in [(0, 3), (1, 0), (2, 3)] {
                            if nodes[a] != nodes[b] {
                                cap_index[k].push(caps.len());
                                caps.push(CapElem {
                                    a: nodes[a],
                                    b: nodes[b],
                                    c: params.c_par,
                                });
                            }
                        }
                    }
                    ElemKind::SFed {
                        role: *role,
                        params,
                        temp,
                        length_nm: *length_nm,
                        multiplier: *multiplier,
                    }
                }
            };
            elems.push(Elem { kind, nodes });
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Ok(Self {
            n_nodes,
            n_branches,
            node_names: circuit.node_names().to_vec(),
            device_names: circuit.devices.iter().map(|d| d.name.clone()).collect(),
            gmin,
            elems,
            caps,
            cap_index,
            breakpoints,
        })
    }

    pub fn size(&self) -> usize {
        self.n_nodes + self.n_branches
    }

    pub fn device_count(&self) -> usize {
        self.elems.len()
    }

    /// Assembles the full system at `state`.
    pub fn assemble(&self, state: &StampState<'_>, sys: &mut System) {
        sys.clear();
        for k in 0..self.elems.len() {
            stamp_device(self, k, state, sys);
        }
        for i in 0..self.n_nodes {
            sys.residual[i] += self.gmin * state.x[i];
            sys.jac.add(i, i, self.gmin);
        }
    }

    /// Companion conductance and equivalent current: i = g·v + ieq.
    pub(crate) fn companion(cap: &CapElem, hist: &CapHistory, integ: Integration) -> Option<(f64, f64)> {
        match integ {
            Integration::Dc => None,
            Integration::BackwardEuler { h } => {
                let g = cap.c / h;
                Some((g, -g * hist.v_prev))
            }
            Integration::Trapezoidal { h } => {
                let g = 2.0 * cap.c / h;
                Some((g, -g * hist.v_prev - hist.i_prev))
            }
        }
    }

    pub(crate) fn cap_voltage(&self, cap: &CapElem, x: &[f64]) -> f64 {
        volt(x, cap.a) - volt(x, cap.b)
    }

    /// Device current at a solved point: channel current for S-FEDs, branch
    /// current for sources, companion current for capacitors.
    pub fn device_current(&self, k: usize, state: &StampState<'_>) -> f64 {
        let e = &self.elems[k];
        let x = state.x;
        match &e.kind {
            ElemKind::Resistor { g } => g * (volt(x, e.nodes[0]) - volt(x, e.nodes[1])),
            ElemKind::VSource { branch, .. } => x[*branch],
            ElemKind::ISource(p) => state.source_scale * p.value(state.time),
            ElemKind::Capacitor if state.integration == Integration::Dc => 0.0,
            ElemKind::Capacitor => self.cap_index[k]
                .iter()
                .map(|&c| {
                    let cap = &self.caps[c];
                    Self::companion(cap, &state.cap_hist[c], state.integration)
                        .map_or(0.0, |(g, ieq)| g * self.cap_voltage(cap, x) + ieq)
                })
                .sum(),
            ElemKind::SFed {
                role,
                params,
                temp,
                length_nm,
                multiplier,
            } => {
                let bias = sfed_bias(x, &e.nodes);
                let dir = state.latch.get(k).copied().unwrap_or(0);
                multiplier * sfed_eval(&bias, *role, params, temp, *length_nm, dir).current
            }
        }
    }

    /// Latch direction of device `k` after an accepted point with the given
    /// current; 0 for every device that is not a threshold diode.
    pub(crate) fn next_latch(&self, k: usize, current: f64, dir: i8) -> i8 {
        let ElemKind::SFed {
            role: Role::ThresholdDiode,
            params,
            multiplier,
            ..
        } = &self.elems[k].kind
        else {
            return 0;
        };
        let unit = current / multiplier;
        if dir == 0 {
            if unit.abs() >= params.i_latch {
                if unit > 0.0 {
                    1
                } else {
                    -1
                }
            } else {
                0
            }
        } else if f64::from(dir) * unit < params.i_hold {
            0
        } else {
            dir
        }
    }

    pub fn is_voltage_source(&self, k: usize) -> bool {
        matches!(self.elems[k].kind, ElemKind::VSource { .. })
    }
}

fn sfed_eval(
    bias: &BiasPoint,
    role: Role,
    params: &SFedParams,
    temp: &DeviceTemperature,
    length_nm: f64,
    dir: i8,
) -> model::DeviceEval<f64> {
    let forward = if bias.v_ds >= 0.0 { 1 } else { -1 };
    if role == Role::ThresholdDiode && dir == forward {
        model::evaluate_latched(bias, params, temp)
    } else {
        model::evaluate(bias, role, params, temp, length_nm)
    }
}

fn sfed_bias(x: &[f64], nodes: &[Option<usize>]) -> BiasPoint {
    BiasPoint::from_terminals(
        volt(x, nodes[0]),
        volt(x, nodes[1]),
        volt(x, nodes[2]),
        volt(x, nodes[3]),
    )
}

/// Adds device `k`'s linearized contribution to the Newton system.
pub fn stamp_device(prep: &Prepared, k: usize, state: &StampState<'_>, sys: &mut System) {
    let e = &prep.elems[k];
    let x = state.x;
    match &e.kind {
        ElemKind::Resistor { g } => {
            let (a, b) = (e.nodes[0], e.nodes[1]);
            let i = g * (volt(x, a) - volt(x, b));
            sys.branch(a, b, i, &[(a, *g), (b, -*g)]);
        }
        ElemKind::VSource { volts, branch } => {
            let (a, b) = (e.nodes[0], e.nodes[1]);
            let j = x[*branch];
            sys.add_f(a, j);
            sys.add_f(b, -j);
            sys.add_j(a, Some(*branch), 1.0);
            sys.add_j(b, Some(*branch), -1.0);
            sys.residual[*branch] += volt(x, a) - volt(x, b) - state.source_scale * volts;
            sys.add_j(Some(*branch), a, 1.0);
            sys.add_j(Some(*branch), b, -1.0);
        }
        ElemKind::ISource(p) => {
            let i = state.source_scale * p.value(state.time);
            sys.branch(e.nodes[0], e.nodes[1], i, &[]);
        }
        ElemKind::Capacitor => {}
        ElemKind::SFed {
            role,
            params,
            temp,
            length_nm,
            multiplier,
        } => {
            let (d, gd, gs, s) = (e.nodes[0], e.nodes[1], e.nodes[2], e.nodes[3]);
            let bias = sfed_bias(x, &e.nodes);
            let dir = state.latch.get(k).copied().unwrap_or(0);
            let ev = sfed_eval(&bias, *role, params, temp, *length_nm, dir);
            let m = *multiplier;
            // V_DS = vd - vs, V_GS = vgs - vs, V_GD = vgd - vd
            let grads = [
                (d, m * (ev.g_ds - ev.g_gd)),
                (s, -m * (ev.g_ds + ev.g_gs)),
                (gs, m * ev.g_gs),
                (gd, m * ev.g_gd),
            ];
            sys.branch(d, s, m * ev.current, &grads);
        }
    }
    if state.integration == Integration::Dc {
        return;
    }
    for &c in &prep.cap_index[k] {
        let cap = &prep.caps[c];
        if let Some((g, ieq)) = Prepared::companion(cap, &state.cap_hist[c], state.integration) {
            let i = g * prep.cap_voltage(cap, x) + ieq;
            sys.branch(cap.a, cap.b, i, &[(cap.a, g), (cap.b, -g)]);
        }
    }
}
