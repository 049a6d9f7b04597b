//! SPI bus model (single channel, channel 0).
//!
//! Event effects: `XferDone` sets `TX_EMPTY`, `Recv(v)` latches `v` into
//! `SPI_RX` and raises `RX_FULL`, `Null` changes nothing.

use super::events::{next_event, EventList, EventLog, SpiEvent};
use super::{Bus, BusError, CpuOp, RegAddr, Word};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ChannelEnable {
    #[default]
    Disabled,
    Enabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SpiMode {
    #[default]
    Master,
    Slave,
}

/// The SPI controller's register file. `en` is the channel-0 enable bit
/// (register `CH0CTRL`); one-bit registers take the low bit of a write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SpiState {
    pub rx: Word,
    pub tx: Word,
    pub en: ChannelEnable,
    pub ms: SpiMode,
    pub ch0conf: Word,
    pub ch0stat: Word,
    pub tx_empty: bool,
    pub rx_full: bool,
    pub revision: Word,
    pub sysconfig: Word,
    pub sysstatus: Word,
    pub irqstatus: Word,
    pub irqenable: Word,
    pub wakeupenable: Word,
    pub syst: Word,
    pub modulctrl: Word,
    pub xferlevel: Word,
    pub daftx: Word,
    pub dafrx: Word,
    pub ch0_clkd: Word,
    pub ch0_wl: Word,
    pub ch0_epol: Word,
    pub ch0_trm: Word,
    pub ch0_force: Word,
    pub ch0_turbo: Word,
}

fn bit(b: bool) -> Word {
    b as Word
}

impl SpiState {
    pub const REGS: usize = 25;

    fn word_mut(&mut self, idx: u32) -> Option<&mut Word> {
        Some(match idx {
            0 => &mut self.rx,
            1 => &mut self.tx,
            4 => &mut self.ch0conf,
            5 => &mut self.ch0stat,
            8 => &mut self.revision,
            9 => &mut self.sysconfig,
            10 => &mut self.sysstatus,
            11 => &mut self.irqstatus,
            12 => &mut self.irqenable,
            13 => &mut self.wakeupenable,
            14 => &mut self.syst,
            15 => &mut self.modulctrl,
            16 => &mut self.xferlevel,
            17 => &mut self.daftx,
            18 => &mut self.dafrx,
            19 => &mut self.ch0_clkd,
            20 => &mut self.ch0_wl,
            21 => &mut self.ch0_epol,
            22 => &mut self.ch0_trm,
            23 => &mut self.ch0_force,
            24 => &mut self.ch0_turbo,
            _ => return None,
        })
    }

    pub fn get(&self, addr: RegAddr) -> Result<Word, BusError> {
        Ok(match addr.0 {
            2 => bit(self.en == ChannelEnable::Enabled),
            3 => bit(self.ms == SpiMode::Slave),
            6 => bit(self.tx_empty),
            7 => bit(self.rx_full),
            i => *self
                .clone()
                .word_mut(i)
                .ok_or(BusError::UnknownRegister { bus: Bus::Spi, addr })?,
        })
    }

    pub fn set(&mut self, addr: RegAddr, v: Word) -> Result<(), BusError> {
        let b = v & 1 == 1;
        match addr.0 {
            2 => self.en = if b { ChannelEnable::Enabled } else { ChannelEnable::Disabled },
            3 => self.ms = if b { SpiMode::Slave } else { SpiMode::Master },
            6 => self.tx_empty = b,
            7 => self.rx_full = b,
            i => {
                *self
                    .word_mut(i)
                    .ok_or(BusError::UnknownRegister { bus: Bus::Spi, addr })? = v
            }
        }
        Ok(())
    }

    pub fn words(&self) -> [Word; Self::REGS] {
        std::array::from_fn(|i| self.get(RegAddr(i as u32)).expect("index in map"))
    }

    pub fn enabled(&self) -> bool {
        self.en == ChannelEnable::Enabled
    }
}

pub fn delta_cpu_spi(op: CpuOp, s: &SpiState) -> Result<SpiState, BusError> {
    let mut next = *s;
    match op {
        CpuOp::Input(addr) => {
            next.get(addr)?;
        }
        CpuOp::Output(addr, v) => next.set(addr, v)?,
    }
    Ok(next)
}

pub fn delta_env_spi(e: SpiEvent, s: &SpiState) -> SpiState {
    match e {
        SpiEvent::Null => *s,
        SpiEvent::XferDone => SpiState { tx_empty: true, ..*s },
        SpiEvent::Recv(val) => SpiState { rx: val, rx_full: true, ..*s },
    }
}

pub fn kappa_spi(addr: RegAddr, s: &SpiState) -> Result<Word, BusError> {
    s.get(addr)
}

pub fn spi_read(
    addr: RegAddr,
    s: &SpiState,
    log: EventLog<SpiEvent>,
    env: &EventList<SpiEvent>,
) -> Result<(Word, SpiState, EventLog<SpiEvent>), BusError> {
    s.get(addr)?;
    let (e, log) = next_event(env, log)?;
    let s1 = delta_env_spi(e, s);
    Ok((s1.get(addr)?, s1, log))
}

pub fn spi_write(
    addr: RegAddr,
    v: Word,
    s: &SpiState,
    log: EventLog<SpiEvent>,
    env: &EventList<SpiEvent>,
) -> Result<(SpiState, EventLog<SpiEvent>), BusError> {
    s.get(addr)?;
    let (e, log) = next_event(env, log)?;
    let mut s1 = delta_env_spi(e, s);
    s1.set(addr, v)?;
    Ok((s1, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus_model::regmap::spi_reg::*;

    #[test]
    fn reset_state() {
        let s = SpiState::default();
        assert_eq!(s.en, ChannelEnable::Disabled);
        assert_eq!(s.ms, SpiMode::Master);
        assert_eq!(s.words(), [0; 25]);
    }

    #[test]
    fn input_is_identity_and_output_touches_one_field() {
        let s = SpiState { rx: 1, ..Default::default() };
        assert_eq!(delta_cpu_spi(CpuOp::Input(SPI_RX), &s).unwrap(), s);
        let s2 = delta_cpu_spi(CpuOp::Output(CH0CTRL, ENABLE_CHANNEL), &s).unwrap();
        assert_eq!(s2, SpiState { en: ChannelEnable::Enabled, ..s });
        let s3 = delta_cpu_spi(CpuOp::Output(RX_FULL, 3), &s).unwrap();
        assert!(s3.rx_full);
        assert!(delta_cpu_spi(CpuOp::Input(RegAddr(25)), &s).is_err());
    }

    #[test]
    fn env_transitions() {
        let s = SpiState::default();
        assert_eq!(delta_env_spi(SpiEvent::Null, &s), s);
        assert_eq!(delta_env_spi(SpiEvent::XferDone, &s), SpiState { tx_empty: true, ..s });
        assert_eq!(
            delta_env_spi(SpiEvent::Recv(99), &s),
            SpiState { rx: 99, rx_full: true, ..s }
        );
    }

    #[test]
    fn read_on_exhausted_list() {
        let s = SpiState { rx: 1, ..Default::default() };
        let (v, s2, log) = spi_read(SPI_RX, &s, EventLog::new(), &EventList::default()).unwrap();
        assert_eq!((v, s2, log.len()), (1, s, 0));
    }

    #[test]
    fn read_sees_event_before_projection() {
        let env = EventList::new(vec![SpiEvent::Recv(7)]);
        let (v, s2, _) = spi_read(RX_FULL, &SpiState::default(), EventLog::new(), &env).unwrap();
        assert_eq!(v, 1);
        assert_eq!(s2.rx, 7);
    }
}
