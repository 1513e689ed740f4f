use std::fmt;
use std::str::FromStr;

use crate::model::ModelError;
use crate::scalar::Scalar;

/// Functional role an S-FED instance plays in a circuit. The role picks the
/// current law; the bias still decides whether the device sits in the OFF mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    ThresholdDiode,
    DiodeConnectedReset,
    ResistorLike,
    InverterPullUp,
    InverterPullDown,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::ThresholdDiode,
        Role::DiodeConnectedReset,
        Role::ResistorLike,
        Role::InverterPullUp,
        Role::InverterPullDown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::ThresholdDiode => "ThresholdDiode",
            Role::DiodeConnectedReset => "DiodeConnectedReset",
            Role::ResistorLike => "ResistorLike",
            Role::InverterPullUp => "InverterPullUp",
            Role::InverterPullDown => "InverterPullDown",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .iter()
            .copied()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::UnknownRole(s.to_string()))
    }
}

/// Device temperature in kelvin, restricted to the characterized -40..120 °C window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceTemperature<T> {
    t_kelvin: T,
}

pub const T_MIN_KELVIN: f64 = 233.15;
pub const T_MAX_KELVIN: f64 = 393.15;
pub const T_REF_KELVIN: f64 = 300.0;

impl<T: Scalar> DeviceTemperature<T> {
    pub fn from_kelvin(t_kelvin: T) -> Result<Self, ModelError> {
        // small slack so -40 °C / 120 °C survive a round trip through f32
        let slack = T::lit(1e-3);
        if !t_kelvin.is_finite()
            || t_kelvin < T::lit(T_MIN_KELVIN) - slack
            || t_kelvin > T::lit(T_MAX_KELVIN) + slack
        {
            return Err(ModelError::TemperatureOutOfRange(
                t_kelvin.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(Self { t_kelvin })
    }

    pub fn from_celsius(t_celsius: T) -> Result<Self, ModelError> {
        Self::from_kelvin(t_celsius + T::lit(273.15))
    }

    /// 27 °C.
    pub fn room() -> Self {
        Self {
            t_kelvin: T::lit(300.15),
        }
    }

    pub fn kelvin(&self) -> T {
        self.t_kelvin
    }

    pub fn celsius(&self) -> T {
        self.t_kelvin - T::lit(273.15)
    }
}

/// Compact-model coefficients.
///
/// The threshold law is `vth_a0 + vth_ags·V_GS + vth_agd·V_GD + k_vth_l·(L − l_ref)`
/// with the gate voltages referenced to the lower of the two channel terminals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SFedParams<T> {
    /// ON-state current scale, amperes.
    pub i_sat: T,
    /// Exponential turn-on steepness of the threshold knee, volts.
    pub v_slope: T,
    /// OFF-state leakage at the reference channel length, amperes.
    pub i_off: T,
    pub vth_a0: T,
    pub vth_ags: T,
    pub vth_agd: T,
    /// Conductance of the resistor-like configuration, siemens.
    pub g_res: T,
    /// Reference channel length, nm.
    pub l_ref: T,
    /// Threshold sensitivity to channel length, V/nm.
    pub k_vth_l: T,
    /// Leakage decay length, nm.
    pub lambda_leak: T,
    /// Temperature exponent of `i_sat`.
    pub alpha_t: T,
    /// Parasitic capacitance per terminal pair, farads.
    pub c_par: T,
    /// Gate drive at which switch-like roles (reset, inverter) turn on, volts.
    pub v_gate_on: T,
    /// Sigmoid width of the gate turn-on of switch-like roles, volts.
    pub v_gate_slope: T,
    /// Drain saturation voltage of inverter roles, volts.
    pub v_sat: T,
    /// Drain turn-on of the diode-connected reset role, volts.
    pub v_reset: T,
    /// Width of the smooth blend into the OFF mode, volts.
    pub v_mode: T,
    /// Drain-voltage scale over which OFF leakage reaches its plateau, volts.
    pub v_leak: T,
    /// Threshold-diode current at which the channel latches, amperes.
    pub i_latch: T,
    /// Latched current below which the channel releases, amperes.
    pub i_hold: T,
    /// Knee voltage of the latched threshold diode, volts.
    pub v_hold: T,
}

impl<T: Scalar> Default for SFedParams<T> {
    fn default() -> Self {
        let l = T::lit;
        Self {
            i_sat: l(100e-9),
            v_slope: l(0.0138),
            i_off: l(8.0e-12),
            vth_a0: l(1.4),
            vth_ags: l(-3.0),
            vth_agd: l(0.0),
            g_res: l(250e-9),
            l_ref: l(10.0),
            k_vth_l: l(0.00577),
            lambda_leak: l(5.154),
            alpha_t: l(0.1),
            c_par: l(0.0155e-15),
            v_gate_on: l(0.3),
            v_gate_slope: l(0.02),
            v_sat: l(0.05),
            v_reset: l(0.149),
            v_mode: l(0.005),
            v_leak: l(0.01),
            i_latch: l(0.8e-9),
            i_hold: l(71e-9),
            v_hold: l(0.069),
        }
    }
}

impl<T: Scalar> SFedParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        let pos = |name: &'static str, v: T| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(ModelError::InvalidParam(name, v.to_f64().unwrap_or(f64::NAN)))
            }
        };
        pos("i_sat", self.i_sat)?;
        pos("i_off", self.i_off)?;
        pos("v_slope", self.v_slope)?;
        pos("lambda_leak", self.lambda_leak)?;
        pos("l_ref", self.l_ref)?;
        pos("v_gate_slope", self.v_gate_slope)?;
        pos("v_sat", self.v_sat)?;
        pos("v_mode", self.v_mode)?;
        pos("v_leak", self.v_leak)?;
        pos("i_latch", self.i_latch)?;
        pos("i_hold", self.i_hold)?;
        if !(self.v_hold.is_finite() && self.v_hold >= T::zero()) {
            return Err(ModelError::InvalidParam("v_hold", self.v_hold.to_f64().unwrap_or(f64::NAN)));
        }
        for (name, v) in [
            ("vth_a0", self.vth_a0),
            ("vth_ags", self.vth_ags),
            ("vth_agd", self.vth_agd),
            ("k_vth_l", self.k_vth_l),
            ("alpha_t", self.alpha_t),
            ("v_gate_on", self.v_gate_on),
            ("v_reset", self.v_reset),
        ] {
            if !v.is_finite() {
                return Err(ModelError::InvalidParam(name, f64::NAN));
            }
        }
        if !(self.g_res.is_finite() && self.g_res >= T::zero()) {
            return Err(ModelError::InvalidParam("g_res", self.g_res.to_f64().unwrap_or(f64::NAN)));
        }
        if !(self.c_par.is_finite() && self.c_par >= T::zero()) {
            return Err(ModelError::InvalidParam("c_par", self.c_par.to_f64().unwrap_or(f64::NAN)));
        }
        if self.i_sat / self.i_off < T::lit(1e4) {
            return Err(ModelError::OnOffRatio(
                (self.i_sat / self.i_off).to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(())
    }

    /// `i_sat·(T/300 K)^(−alpha_T)`.
    pub fn i_sat_at(&self, temp: &DeviceTemperature<T>) -> T {
        self.i_sat * (temp.kelvin() / T::lit(T_REF_KELVIN)).powf(-self.alpha_t)
    }

    /// `i_off·exp((l_ref − L)/lambda_leak)`.
    pub fn i_off_at(&self, length_nm: T) -> T {
        self.i_off * ((self.l_ref - length_nm) / self.lambda_leak).exp()
    }

    pub fn cast<U: Scalar>(&self) -> SFedParams<U> {
        let c = |v: T| U::lit(v.to_f64().unwrap_or(f64::NAN));
        SFedParams {
            i_sat: c(self.i_sat),
            v_slope: c(self.v_slope),
            i_off: c(self.i_off),
            vth_a0: c(self.vth_a0),
            vth_ags: c(self.vth_ags),
            vth_agd: c(self.vth_agd),
            g_res: c(self.g_res),
            l_ref: c(self.l_ref),
            k_vth_l: c(self.k_vth_l),
            lambda_leak: c(self.lambda_leak),
            alpha_t: c(self.alpha_t),
            c_par: c(self.c_par),
            v_gate_on: c(self.v_gate_on),
            v_gate_slope: c(self.v_gate_slope),
            v_sat: c(self.v_sat),
            v_reset: c(self.v_reset),
            v_mode: c(self.v_mode),
            v_leak: c(self.v_leak),
            i_latch: c(self.i_latch),
            i_hold: c(self.i_hold),
            v_hold: c(self.v_hold),
        }
    }
}
