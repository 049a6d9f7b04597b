//! The unverified read path: the same register choreography as the
//! bounded transfer, but the status poll has no iteration limit.
//!
//! It is kept out of the registry because no finite specification describes
//! it. A real device that stops answering would hang it forever; here the
//! device recovers once the list is exhausted and `stall_us` of simulated
//! time has passed, and the path reports how long it spun.

use super::call::{Call, ImuSample, Module};
use super::machine::{ExecError, Machine};
use super::spi_layers::{IMU_REGS, READ_FLAG};
use crate::bus_model::regmap::spi_reg::*;
use crate::bus_model::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PollOutcome {
    Data(Word),
    /// The device stalled; the driver spun for `elapsed_us`.
    Stalled { elapsed_us: u64, polls: u64 },
}

pub fn unverified_transfer(
    machine: &mut Machine,
    tx: Word,
    stall_us: u64,
) -> Result<PollOutcome, ExecError> {
    let poll_us = machine.config().poll_us;
    let mut low = machine.lower(Module::Xfer)?;
    low.call_unit(Call::RegWrite(tx, SPI_TX))?;
    let (mut elapsed_us, mut polls) = (0u64, 0u64);
    loop {
        polls += 1;
        if low.call_word(Call::RegRead(RX_FULL))? & 1 == 1 {
            let v = low.call_word(Call::RegRead(SPI_RX))?;
            low.call_unit(Call::RegWrite(0, RX_FULL))?;
            return Ok(PollOutcome::Data(v));
        }
        low.call_unit(Call::Udelay(poll_us))?;
        elapsed_us += poll_us as u64;
        if low.spi_pending() == 0 && elapsed_us >= stall_us {
            return Ok(PollOutcome::Stalled { elapsed_us, polls });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnverifiedImu {
    Sample(ImuSample),
    Stalled { elapsed_us: u64 },
}

pub fn unverified_imu_read(machine: &mut Machine, stall_us: u64) -> Result<UnverifiedImu, ExecError> {
    let mut words = [0; 6];
    for (i, reg) in IMU_REGS.iter().enumerate() {
        match unverified_transfer(machine, READ_FLAG | reg, stall_us)? {
            PollOutcome::Data(v) => words[i] = v & 0xFFFF,
            PollOutcome::Stalled { elapsed_us, .. } => return Ok(UnverifiedImu::Stalled { elapsed_us }),
        }
    }
    Ok(UnverifiedImu::Sample(ImuSample::from_words(&words, false)))
}
