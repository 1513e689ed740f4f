use std::fmt;

use crate::scalar::Scalar;

/// Terminal voltage differences that select the S-FED operating mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasPoint<T> {
    pub v_ds: T,
    pub v_gs: T,
    pub v_gd: T,
}

impl<T: Scalar> BiasPoint<T> {
    pub fn new(v_ds: T, v_gs: T, v_gd: T) -> Self {
        Self { v_ds, v_gs, v_gd }
    }

    /// Builds the bias from absolute terminal potentials.
    pub fn from_terminals(drain: T, gate_d: T, gate_s: T, source: T) -> Self {
        Self {
            v_ds: drain - source,
            v_gs: gate_s - source,
            v_gd: gate_d - drain,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v_ds.is_finite() && self.v_gs.is_finite() && self.v_gd.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl ModeLabel {
    pub const ALL: [ModeLabel; 8] = [
        ModeLabel::A,
        ModeLabel::B,
        ModeLabel::C,
        ModeLabel::D,
        ModeLabel::E,
        ModeLabel::F,
        ModeLabel::G,
        ModeLabel::H,
    ];
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceState {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SFedMode {
    pub label: ModeLabel,
    pub state: DeviceState,
    /// Band structure from drain to source.
    pub structure: &'static str,
}

impl SFedMode {
    pub fn of(label: ModeLabel) -> Self {
        use ModeLabel::*;
        let (state, structure) = match label {
            A => (DeviceState::On, "P+PNN+"),
            B => (DeviceState::On, "P+NNN+"),
            C => (DeviceState::On, "P+PPN+"),
            D => (DeviceState::Off, "P+IIN+"),
            E => (DeviceState::On, "P+PNN+"),
            F => (DeviceState::On, "P+NNN+"),
            G => (DeviceState::On, "P+PPN+"),
            // The source table prints "G" twice; the last row is the mode H
            // the neuron biases D1 into.
            H => (DeviceState::On, "P+NPN+"),
        };
        Self {
            label,
            state,
            structure,
        }
    }

    pub fn is_off(&self) -> bool {
        self.state == DeviceState::Off
    }
}

/// Maps the sign pattern of (V_DS, V_GS, V_GD) to its operating mode.
/// Exact zeros take the non-negative branch.
pub fn classify_mode<T: Scalar>(bias: &BiasPoint<T>) -> SFedMode {
    use ModeLabel::*;
    let ds = bias.v_ds >= T::zero();
    let gs = bias.v_gs >= T::zero();
    let gd = bias.v_gd >= T::zero();
    let label = match (ds, gs, gd) {
        (true, true, false) => A,
        (true, true, true) => B,
        (true, false, false) => C,
        (true, false, true) => D,
        (false, true, false) => E,
        (false, true, true) => F,
        (false, false, false) => G,
        (false, false, true) => H,
    };
    SFedMode::of(label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(ds: f64, gs: f64, gd: f64) -> SFedMode {
        classify_mode(&BiasPoint::new(ds, gs, gd))
    }

    #[test]
    fn table_rows() {
        let m = mode(0.5, 0.2, -0.3);
        assert_eq!((m.label, m.state, m.structure), (ModeLabel::A, DeviceState::On, "P+PNN+"));
        let m = mode(0.5, -0.2, 0.3);
        assert_eq!((m.label, m.state, m.structure), (ModeLabel::D, DeviceState::Off, "P+IIN+"));
        let m = mode(-0.5, -0.2, 0.3);
        assert_eq!((m.label, m.state, m.structure), (ModeLabel::H, DeviceState::On, "P+NPN+"));
    }

    #[test]
    fn zero_bias_ties_to_mode_b() {
        assert_eq!(mode(0.0, 0.0, 0.0).label, ModeLabel::B);
        assert_eq!(classify_mode(&BiasPoint::new(0.0f32, 0.0, 0.0)).label, ModeLabel::B);
    }

    #[test]
    fn terminal_constructor() {
        let b = BiasPoint::from_terminals(0.0, 0.8, 0.1, 1.0);
        assert_eq!(b.v_ds, -1.0);
        assert!((b.v_gs - -0.9f64).abs() < 1e-15);
        assert_eq!(b.v_gd, 0.8);
        assert_eq!(classify_mode(&b).label, ModeLabel::H);
    }
}
