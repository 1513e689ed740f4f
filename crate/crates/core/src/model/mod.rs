//! Behavioral compact model of the side-contacted field-effect diode.

mod device;
mod mode;
mod params;
mod params_file;

pub use device::{
    device_conductances, device_current, evaluate, evaluate_latched, threshold_voltage, DeviceEval,
};
pub use mode::{classify_mode, BiasPoint, DeviceState, ModeLabel, SFedMode};
pub use params::{DeviceTemperature, Role, SFedParams, T_MAX_KELVIN, T_MIN_KELVIN, T_REF_KELVIN};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown device role '{0}'")]
    UnknownRole(String),
    #[error("unknown model parameter '{0}'")]
    UnknownParam(String),
    #[error("invalid value {1} for model parameter {0}")]
    InvalidParam(&'static str, f64),
    #[error("i_sat/i_off = {0:.3e} is below the required 1e4 on/off ratio")]
    OnOffRatio(f64),
    #[error("temperature {0} K outside the supported 233.15..393.15 K range")]
    TemperatureOutOfRange(f64),
    #[error("line {line}: {message}")]
    ParamSyntax { line: usize, message: String },
}
