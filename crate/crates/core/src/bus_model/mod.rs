//! Register-level state machines for the I2C and SPI buses.
//!
//! Each bus is a pure value (its register file) plus two transition
//! functions: one driven by CPU operations and one driven by external sensor
//! events. A read or write first consumes the next pending event from the
//! environment's event list, applies it, and only then performs the CPU side.

pub mod events;
pub mod i2c;
pub mod regmap;
pub mod spi;

use serde::{Deserialize, Serialize};
use std::fmt;

pub use events::{next_event, BusEvent, EventList, EventLog, I2cEvent, SpiEvent};
pub use i2c::{delta_cpu_i2c, delta_env_i2c, i2c_read, i2c_write, kappa_i2c, I2cState};
pub use regmap::{RegInfo, I2C_MAP, SPI_MAP};
pub use spi::{
    delta_cpu_spi, delta_env_spi, kappa_spi, spi_read, spi_write, ChannelEnable, SpiMode, SpiState,
};

/// Register contents. Real bus registers are at most 32 bits wide.
pub type Word = u32;

/// Index into a bus's abstract register file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegAddr(pub u32);

impl fmt::Display for RegAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CpuOp {
    Input(RegAddr),
    Output(RegAddr, Word),
}

impl CpuOp {
    pub fn addr(&self) -> RegAddr {
        match *self {
            CpuOp::Input(a) | CpuOp::Output(a, _) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bus {
    I2c,
    Spi,
}

impl fmt::Display for Bus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bus::I2c => "i2c",
            Bus::Spi => "spi",
        })
    }
}

impl std::str::FromStr for Bus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "i2c" => Ok(Bus::I2c),
            "spi" => Ok(Bus::Spi),
            other => Err(format!("unknown bus `{other}` (expected i2c or spi)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum BusError {
    #[error("unknown {bus} register {addr}")]
    UnknownRegister { bus: Bus, addr: RegAddr },
    /// The event log is not a prefix of the event list. Only reachable
    /// through harness misuse.
    #[error("event log is not a prefix of the event list (diverges at position {position})")]
    PrefixViolation { position: usize },
}
