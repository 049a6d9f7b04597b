//! Executable bus models, a layered SPI/I2C driver stack with per-layer
//! specifications, a bounded refinement checker over that stack, and a
//! fault-injection attitude-control simulation that exercises it.

pub mod bus_model;
pub mod cli;
pub mod driver_stack;
pub mod flight_sim;
pub mod harness;
pub mod par;

pub use bus_model::{BusError, CpuOp, RegAddr, Word};
pub use par::ExecMode;
