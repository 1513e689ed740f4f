//! Circuit simulator built around a behavioral S-FED compact model.
//!
//! The device model ([`model`]) and the dense linear solver
//! ([`engine::linalg`]) are generic over [`Scalar`]; the circuit engine and the
//! experiment layers run in `f64`, exported through the aliases below.

pub mod model;
pub mod scalar;
pub mod units;

pub use scalar::Scalar;

pub type BiasPoint = model::BiasPoint<f64>;
pub type SFedParams = model::SFedParams<f64>;
pub type DeviceTemperature = model::DeviceTemperature<f64>;
pub type DeviceEval = model::DeviceEval<f64>;

pub mod netlist;
pub mod engine;
pub mod neuron;
pub mod sweeps;
