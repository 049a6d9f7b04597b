//! The layered driver stack.
//!
//! SPI: register access, channel enable, channel select, bounded transfer,
//! IMU sample read. I2C: register access, magnetometer addressing,
//! magnetometer sample read. Each layer calls only modules below it.

pub mod call;
pub mod i2c_layers;
pub mod machine;
pub mod registry;
pub mod spi_layers;
pub mod state;
pub mod unverified;

pub use call::{Call, ImuSample, Module, Ret};
pub use machine::{DriverConfig, ExecError, Lower, Machine, Resolve};
pub use registry::{LayerSpec, Platform, Registry, RegistryError, Stack};
pub use state::{relate, stack_invariant, AbstractState, ImuCache, MagCache, MemoryState};

#[cfg(test)]
mod tests;
