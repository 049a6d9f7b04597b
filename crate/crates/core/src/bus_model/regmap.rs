//! Published register maps of the two buses.

use super::{Bus, BusError, RegAddr, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegInfo {
    pub name: &'static str,
    pub index: u32,
    /// Significant bits; wider values written by the CPU are masked.
    pub width: u32,
    pub reset: Word,
}

const fn reg(name: &'static str, index: u32, width: u32) -> RegInfo {
    RegInfo { name, index, width, reset: 0 }
}

pub mod i2c_reg {
    use crate::bus_model::RegAddr;
    pub const OA: RegAddr = RegAddr(0);
    pub const SA: RegAddr = RegAddr(1);
    pub const RX_DATA: RegAddr = RegAddr(2);
    pub const TX_DATA: RegAddr = RegAddr(3);
    pub const CON: RegAddr = RegAddr(4);
    pub const STAT: RegAddr = RegAddr(5);
    pub const CNT: RegAddr = RegAddr(6);
    pub const BUF: RegAddr = RegAddr(7);
    pub const IRQ_EN: RegAddr = RegAddr(8);
    pub const SYSC: RegAddr = RegAddr(9);
}

pub static I2C_MAP: [RegInfo; 10] = [
    reg("I2C_OA", 0, 32),
    reg("I2C_SA", 1, 32),
    reg("I2C_RX_DATA", 2, 32),
    reg("I2C_TX_DATA", 3, 32),
    reg("I2C_CON", 4, 32),
    reg("I2C_STAT", 5, 32),
    reg("I2C_CNT", 6, 32),
    reg("I2C_BUF", 7, 32),
    reg("I2C_IRQ_EN", 8, 32),
    reg("I2C_SYSC", 9, 32),
];

pub mod spi_reg {
    use crate::bus_model::RegAddr;
    pub const SPI_RX: RegAddr = RegAddr(0);
    pub const SPI_TX: RegAddr = RegAddr(1);
    /// Channel-0 enable; holds the `SpiEn` flag.
    pub const CH0CTRL: RegAddr = RegAddr(2);
    pub const SPI_MS: RegAddr = RegAddr(3);
    pub const CH0CONF: RegAddr = RegAddr(4);
    pub const CH0STAT: RegAddr = RegAddr(5);
    pub const TX_EMPTY: RegAddr = RegAddr(6);
    pub const RX_FULL: RegAddr = RegAddr(7);
    pub const REVISION: RegAddr = RegAddr(8);
    pub const SYSCONFIG: RegAddr = RegAddr(9);
    pub const SYSSTATUS: RegAddr = RegAddr(10);
    pub const IRQSTATUS: RegAddr = RegAddr(11);
    pub const IRQENABLE: RegAddr = RegAddr(12);
    pub const WAKEUPENABLE: RegAddr = RegAddr(13);
    pub const SYST: RegAddr = RegAddr(14);
    pub const MODULCTRL: RegAddr = RegAddr(15);
    pub const XFERLEVEL: RegAddr = RegAddr(16);
    pub const DAFTX: RegAddr = RegAddr(17);
    pub const DAFRX: RegAddr = RegAddr(18);
    pub const CH0_CLKD: RegAddr = RegAddr(19);
    pub const CH0_WL: RegAddr = RegAddr(20);
    pub const CH0_EPOL: RegAddr = RegAddr(21);
    pub const CH0_TRM: RegAddr = RegAddr(22);
    pub const CH0_FORCE: RegAddr = RegAddr(23);
    pub const CH0_TURBO: RegAddr = RegAddr(24);

    /// Value written to CH0CTRL to enable the channel.
    pub const ENABLE_CHANNEL: u32 = 1;
    /// CH0CONF bits set when the channel is selected as the active
    /// chip-select target (word length 8, CS active low, force).
    pub const CONF_SELECT: u32 = 0x7C0;
}

pub static SPI_MAP: [RegInfo; 25] = [
    reg("SPI_RX", 0, 32),
    reg("SPI_TX", 1, 32),
    reg("CH0CTRL", 2, 1),
    reg("SPI_MS", 3, 1),
    reg("CH0CONF", 4, 32),
    reg("CH0STAT", 5, 32),
    reg("TX_EMPTY", 6, 1),
    reg("RX_FULL", 7, 1),
    reg("REVISION", 8, 32),
    reg("SYSCONFIG", 9, 32),
    reg("SYSSTATUS", 10, 32),
    reg("IRQSTATUS", 11, 32),
    reg("IRQENABLE", 12, 32),
    reg("WAKEUPENABLE", 13, 32),
    reg("SYST", 14, 32),
    reg("MODULCTRL", 15, 32),
    reg("XFERLEVEL", 16, 32),
    reg("DAFTX", 17, 32),
    reg("DAFRX", 18, 32),
    reg("CH0_CLKD", 19, 32),
    reg("CH0_WL", 20, 32),
    reg("CH0_EPOL", 21, 32),
    reg("CH0_TRM", 22, 32),
    reg("CH0_FORCE", 23, 32),
    reg("CH0_TURBO", 24, 32),
];

pub fn map(bus: Bus) -> &'static [RegInfo] {
    match bus {
        Bus::I2c => &I2C_MAP,
        Bus::Spi => &SPI_MAP,
    }
}

pub fn lookup(bus: Bus, addr: RegAddr) -> Result<&'static RegInfo, BusError> {
    map(bus)
        .get(addr.0 as usize)
        .ok_or(BusError::UnknownRegister { bus, addr })
}

pub fn by_name(bus: Bus, name: &str) -> Option<RegAddr> {
    map(bus).iter().find(|r| r.name == name).map(|r| RegAddr(r.index))
}

pub fn name_of(bus: Bus, addr: RegAddr) -> &'static str {
    lookup(bus, addr).map(|r| r.name).unwrap_or("?")
}

/// `NAME<TAB>INDEX<TAB>RESET`, one line per register.
pub fn dump(bus: Bus) -> String {
    map(bus)
        .iter()
        .map(|r| format!("{}\t{}\t{}\n", r.name, r.index, r.reset))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_indices() {
        assert_eq!(I2C_MAP.len(), 10);
        assert_eq!(SPI_MAP.len(), 25);
        for (i, r) in I2C_MAP.iter().chain(SPI_MAP.iter()).enumerate() {
            let i = if i >= 10 { i - 10 } else { i };
            assert_eq!(r.index as usize, i, "{}", r.name);
            assert_eq!(r.reset, 0);
        }
    }

    #[test]
    fn names_unique_and_resolvable() {
        for bus in [Bus::I2c, Bus::Spi] {
            for r in map(bus) {
                assert_eq!(by_name(bus, r.name), Some(RegAddr(r.index)));
            }
        }
        assert_eq!(by_name(Bus::Spi, "CH0CTRL"), Some(spi_reg::CH0CTRL));
        assert!(lookup(Bus::I2c, RegAddr(10)).is_err());
    }

    #[test]
    fn dump_format() {
        let text = dump(Bus::I2c);
        assert_eq!(text.lines().count(), 10);
        assert_eq!(text.lines().next(), Some("I2C_OA\t0\t0"));
        assert_eq!(dump(Bus::Spi).lines().count(), 25);
    }
}
