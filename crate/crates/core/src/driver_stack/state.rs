//! Abstract and concrete state of the driver stack and the relation between
//! them.

use crate::bus_model::{
    EventList, EventLog, I2cEvent, I2cState, RegAddr, SpiEvent, SpiState, Word,
};
use serde::{Deserialize, Serialize};

/// Last good IMU sample: accel x/y/z then gyro x/y/z, 16 bits each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ImuCache {
    pub words: [Word; 6],
    pub stale: bool,
}

/// Last magnetometer sample, x/y/z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MagCache {
    pub words: [Word; 3],
}

/// Whole-system abstract state threaded through every layer specification.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct AbstractState {
    pub spi: SpiState,
    pub i2c: I2cState,
    pub spi_log: EventLog<SpiEvent>,
    pub i2c_log: EventLog<I2cEvent>,
    pub spi_env: EventList<SpiEvent>,
    pub i2c_env: EventList<I2cEvent>,
    /// Simulated time in microseconds.
    pub clock: u64,
    pub imu: ImuCache,
    pub mag: MagCache,
}

impl AbstractState {
    /// Equality on everything below the driver's own variables: bus
    /// registers, logs, lists and the clock.
    pub fn underlay_eq(&self, other: &AbstractState) -> bool {
        self.spi == other.spi
            && self.i2c == other.i2c
            && self.clock == other.clock
            && self.spi_log == other.spi_log
            && self.i2c_log == other.i2c_log
            && self.spi_env == other.spi_env
            && self.i2c_env == other.i2c_env
    }

    /// The memory image this abstract state stands for.
    pub fn mirror(&self) -> MemoryState {
        let mut m = MemoryState::blank();
        self.sync_regs(&mut m);
        self.sync_caches(&mut m);
        m
    }

    pub fn sync_regs(&self, m: &mut MemoryState) {
        m.cells[..SPI_CELLS].copy_from_slice(&self.spi.words());
        m.cells[SPI_CELLS..SPI_CELLS + I2C_CELLS].copy_from_slice(&self.i2c.words());
    }

    pub fn sync_caches(&self, m: &mut MemoryState) {
        let s = SPI_CELLS + I2C_CELLS;
        m.cells[s..s + 6].copy_from_slice(&self.imu.words);
        m.cells[s + 6] = self.imu.stale as Word;
        m.cells[s + 7..s + 10].copy_from_slice(&self.mag.words);
    }

    pub fn caches_eq(&self, other: &AbstractState) -> bool {
        self.imu == other.imu && self.mag == other.mag
    }
}

pub const SPI_BASE: u32 = 0x1000;
pub const I2C_BASE: u32 = 0x2000;
pub const SCRATCH_BASE: u32 = 0x3000;

/// Scratch variables owned by the upper drivers.
pub mod scratch {
    use super::SCRATCH_BASE;
    pub const IMU_LAST: u32 = SCRATCH_BASE;
    pub const IMU_STALE: u32 = SCRATCH_BASE + 6;
    pub const MAG_LAST: u32 = SCRATCH_BASE + 7;
    pub const SLOTS: usize = 10;
}

const SPI_CELLS: usize = SpiState::REGS;
const I2C_CELLS: usize = I2cState::REGS;
const CELLS: usize = SPI_CELLS + I2C_CELLS + scratch::SLOTS;

/// Driver-visible memory: the memory-mapped registers of both controllers
/// plus the drivers' scratch variables. Addresses outside that domain are
/// not mapped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemoryState {
    cells: Vec<Word>,
}

impl Default for MemoryState {
    fn default() -> Self {
        MemoryState::blank()
    }
}

fn slot(addr: u32) -> Option<usize> {
    let off = |base: u32, n: usize| addr.checked_sub(base).filter(|&o| (o as usize) < n);
    if let Some(o) = off(SPI_BASE, SPI_CELLS) {
        Some(o as usize)
    } else if let Some(o) = off(I2C_BASE, I2C_CELLS) {
        Some(SPI_CELLS + o as usize)
    } else {
        off(SCRATCH_BASE, scratch::SLOTS).map(|o| SPI_CELLS + I2C_CELLS + o as usize)
    }
}

fn addr_of(i: usize) -> u32 {
    if i < SPI_CELLS {
        SPI_BASE + i as u32
    } else if i < SPI_CELLS + I2C_CELLS {
        I2C_BASE + (i - SPI_CELLS) as u32
    } else {
        SCRATCH_BASE + (i - SPI_CELLS - I2C_CELLS) as u32
    }
}

impl MemoryState {
    pub fn blank() -> Self {
        MemoryState { cells: vec![0; CELLS] }
    }

    pub fn get(&self, addr: u32) -> Option<Word> {
        slot(addr).map(|i| self.cells[i])
    }

    pub fn set(&mut self, addr: u32, v: Word) -> Option<()> {
        slot(addr).map(|i| self.cells[i] = v)
    }

    pub fn spi_reg(&self, r: RegAddr) -> Option<Word> {
        self.get(SPI_BASE + r.0)
    }

    pub fn i2c_reg(&self, r: RegAddr) -> Option<Word> {
        self.get(I2C_BASE + r.0)
    }

    /// `(address, value)` pairs in address order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, Word)> + '_ {
        self.cells.iter().enumerate().map(|(i, &v)| (addr_of(i), v))
    }

    pub fn is_well_formed(&self) -> bool {
        self.cells.len() == CELLS
    }

    /// Addresses whose contents differ, for diagnostics.
    pub fn diff(&self, other: &MemoryState) -> Vec<(u32, Word, Word)> {
        self.iter()
            .zip(other.iter())
            .filter(|((_, a), (_, b))| a != b)
            .map(|((addr, a), (_, b))| (addr, a, b))
            .collect()
    }
}

/// `a ∼ m`: memory holds exactly the image of the abstract state.
pub fn relate(a: &AbstractState, m: &MemoryState) -> bool {
    m.is_well_formed() && *m == a.mirror()
}

/// Shared layer invariant: both event logs are prefixes of their lists and
/// cached samples fit in 16 bits.
pub fn stack_invariant(a: &AbstractState) -> bool {
    a.spi_log.is_prefix_of(&a.spi_env)
        && a.i2c_log.is_prefix_of(&a.i2c_env)
        && a.imu.words.iter().chain(a.mag.words.iter()).all(|&w| w <= 0xFFFF)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus_model::regmap::spi_reg;

    #[test]
    fn mirror_layout() {
        let mut a = AbstractState::default();
        a.spi.ch0conf = 0x7C0;
        a.i2c.sa = 0x1E;
        a.imu.words[2] = 4096;
        a.imu.stale = true;
        a.mag.words[0] = 7;
        let m = a.mirror();
        assert_eq!(m.spi_reg(spi_reg::CH0CONF), Some(0x7C0));
        assert_eq!(m.get(I2C_BASE + 1), Some(0x1E));
        assert_eq!(m.get(scratch::IMU_LAST + 2), Some(4096));
        assert_eq!(m.get(scratch::IMU_STALE), Some(1));
        assert_eq!(m.get(scratch::MAG_LAST), Some(7));
        assert_eq!(m.get(SCRATCH_BASE + 10), None);
        assert_eq!(m.get(SPI_BASE + 25), None);
        assert_eq!(m.iter().count(), 45);
        assert!(relate(&a, &m));
    }

    #[test]
    fn relation_detects_any_cell() {
        let a = AbstractState::default();
        for (addr, _) in a.mirror().iter() {
            let mut m = a.mirror();
            m.set(addr, 1).unwrap();
            assert!(!relate(&a, &m), "{addr:#x}");
            assert_eq!(m.diff(&a.mirror()), vec![(addr, 1, 0)]);
        }
    }

    #[test]
    fn invariant() {
        let mut a = AbstractState::default();
        assert!(stack_invariant(&a));
        a.spi_log = EventLog::from_vec(vec![SpiEvent::Null]);
        assert!(!stack_invariant(&a));
        a.spi_env = EventList::new(vec![SpiEvent::Null, SpiEvent::XferDone]);
        assert!(stack_invariant(&a));
        a.mag.words[1] = 0x10000;
        assert!(!stack_invariant(&a));
    }
}
