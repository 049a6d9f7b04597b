//! Interface calls exposed by the layers, and their results.

use crate::bus_model::{RegAddr, Word};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A module: the unit of code a layer adds on top of the one below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Module {
    SpiBus,
    I2cBus,
    Timer,
    RegRw,
    Ch0En,
    Ch0Select,
    Xfer,
    ImuRead,
    I2cRw,
    MagAddr,
    MagRead,
}

impl Module {
    pub const ALL: [Module; 11] = [
        Module::SpiBus,
        Module::I2cBus,
        Module::Timer,
        Module::RegRw,
        Module::Ch0En,
        Module::Ch0Select,
        Module::Xfer,
        Module::ImuRead,
        Module::I2cRw,
        Module::MagAddr,
        Module::MagRead,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Module::SpiBus => "SPI_BUS",
            Module::I2cBus => "I2C_BUS",
            Module::Timer => "TIMER",
            Module::RegRw => "RegRW",
            Module::Ch0En => "CH0EN",
            Module::Ch0Select => "CH0SELECT",
            Module::Xfer => "XFER",
            Module::ImuRead => "IMUREAD",
            Module::I2cRw => "I2CRW",
            Module::MagAddr => "MAGADDR",
            Module::MagRead => "MAGREAD",
        }
    }

    pub fn from_name(s: &str) -> Option<Module> {
        Module::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Hardware-level modules that sit below every layer.
    pub fn is_base(self) -> bool {
        matches!(self, Module::SpiBus | Module::I2cBus | Module::Timer)
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Call {
    SpiBusRead(RegAddr),
    SpiBusWrite(RegAddr, Word),
    I2cBusRead(RegAddr),
    I2cBusWrite(RegAddr, Word),
    Udelay(u32),
    RegRead(RegAddr),
    /// Value first, address second, as in `write_register(v, addr)`.
    RegWrite(Word, RegAddr),
    EnableChannel,
    SelectChannel(bool),
    Transfer(Word),
    ImuRead,
    I2cRegRead(RegAddr),
    I2cRegWrite(Word, RegAddr),
    MagAddress(Word),
    MagRead,
}

impl Call {
    pub fn module(&self) -> Module {
        match self {
            Call::SpiBusRead(_) | Call::SpiBusWrite(..) => Module::SpiBus,
            Call::I2cBusRead(_) | Call::I2cBusWrite(..) => Module::I2cBus,
            Call::Udelay(_) => Module::Timer,
            Call::RegRead(_) | Call::RegWrite(..) => Module::RegRw,
            Call::EnableChannel => Module::Ch0En,
            Call::SelectChannel(_) => Module::Ch0Select,
            Call::Transfer(_) => Module::Xfer,
            Call::ImuRead => Module::ImuRead,
            Call::I2cRegRead(_) | Call::I2cRegWrite(..) => Module::I2cRw,
            Call::MagAddress(_) => Module::MagAddr,
            Call::MagRead => Module::MagRead,
        }
    }
}

/// Raw IMU counts as read from the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ImuSample {
    pub accel: [i16; 3],
    pub gyro: [i16; 3],
    /// Set when the read timed out and this is the previous sample.
    pub stale: bool,
}

impl ImuSample {
    pub fn from_words(words: &[Word; 6], stale: bool) -> Self {
        let c = |w: Word| w as u16 as i16;
        ImuSample {
            accel: [c(words[0]), c(words[1]), c(words[2])],
            gyro: [c(words[3]), c(words[4]), c(words[5])],
            stale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ret {
    Unit,
    Word(Word),
    Xfer(Option<Word>),
    Imu(ImuSample),
    Mag([i16; 3]),
}

impl Ret {
    pub fn word(&self) -> Option<Word> {
        match *self {
            Ret::Word(w) => Some(w),
            _ => None,
        }
    }
}
