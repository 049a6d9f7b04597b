//! Desk-scale flight experiment: a scripted quadrotor attitude maneuver whose
//! IMU and magnetometer samples reach the flight software only through the
//! driver stack, with periodic device stalls on the SPI bus.

pub mod config;
pub mod control;
pub mod dynamics;
pub mod experiment;
pub mod faults;
pub mod fusion;
pub mod maneuver;
pub mod sensors;
pub mod trace;

pub use config::{ConfigError, Noise, SensorConfig, SimConfig};
pub use experiment::{run_experiment, run_trials, schedule_for, TrialResult, Variant};
pub use faults::FaultSchedule;
pub use maneuver::Maneuver;
pub use trace::{compute_metrics, AttitudeTrace, Summary};

use crate::driver_stack::ExecError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("non-finite torque")]
    NonFiniteTorque,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("driver error: {0}")]
    Driver(#[from] ExecError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
