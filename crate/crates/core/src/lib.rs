//! Quasi-static phasor simulation and small-signal analysis of
//! series-cascaded inverters under power-factor-angle droop control.
//!
//! Every model is generic over the floating point type through [`Scalar`];
//! the `*64` aliases below fix it to `f64`, which is what the tolerances in
//! the test suites assume.

pub mod droop;
pub mod error;
pub mod linalg;
pub mod phasor;
pub mod roots;
pub mod scalar;
pub mod sim;
pub mod small_signal;

pub use droop::{droop_frequency, power_factor_angle, voltage_reference, DroopParams, FreqClamp};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use phasor::{
    complex_power_oracle, generalized_load, grid_power_flow, islanded_power_flow, Impedance,
    Phasor, PowerPair,
};
pub use scalar::{wrap_angle, Scalar};
pub use sim::{
    grid_equilibrium, grid_residual, initial_states, islanded_equilibrium, run_scenario, step,
    Event, GridEquilibrium, GridRoot, InverterState, IslandedEquilibrium, Mode, Scenario,
    SystemConfig, TimedEvent, Trace,
};
pub use small_signal::{
    grid_ab, grid_jacobian, islanded_jacobian, numeric_eigenvalues, stability_condition,
    structured_eigenvalues, GridLinearization, LinearModel, Stability,
};

pub type Phasor64 = Phasor<f64>;
pub type Impedance64 = Impedance<f64>;
pub type PowerPair64 = PowerPair<f64>;
pub type DroopParams64 = DroopParams<f64>;
pub type SystemConfig64 = SystemConfig<f64>;
pub type Scenario64 = Scenario<f64>;
pub type Trace64 = Trace<f64>;
pub type LinearModel64 = LinearModel<f64>;
pub type Matrix64 = Matrix<f64>;

pub type Phasor32 = Phasor<f32>;
pub type Impedance32 = Impedance<f32>;
pub type SystemConfig32 = SystemConfig<f32>;
pub type Scenario32 = Scenario<f32>;
