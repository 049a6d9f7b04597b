//! SPI driver layers: register access, channel enable, channel select,
//! bounded transfer and IMU sample read.
//!
//! Each module has three descriptions. The implementation calls only the
//! modules it depends on. The low specification works on the memory image,
//! reading controller registers from their memory-mapped cells. The high
//! specification works on the abstract state alone.

use super::call::{Call, ImuSample, Ret};
use super::machine::{DriverConfig, ExecError, Lower};
use super::state::{scratch, AbstractState, MemoryState};
use crate::bus_model::regmap::spi_reg::*;
use crate::bus_model::{
    delta_env_spi, kappa_spi, next_event, EventLog, spi_read, spi_write, RegAddr, SpiEvent, SpiMode,
    SpiState, Word,
};

/// MPU-9250 data registers, high byte address: accel x/y/z, gyro x/y/z.
pub const IMU_REGS: [Word; 6] = [0x3B, 0x3D, 0x3F, 0x43, 0x45, 0x47];
pub const READ_FLAG: Word = 0x80;

// Helpers over the abstract state.

pub(crate) fn hs_read(a: &AbstractState, addr: RegAddr) -> Option<(Word, AbstractState)> {
    let (v, spi, spi_log) = spi_read(addr, &a.spi, a.spi_log.clone(), &a.spi_env).ok()?;
    Some((v, AbstractState { spi, spi_log, ..a.clone() }))
}

pub(crate) fn hs_write(a: &AbstractState, addr: RegAddr, v: Word) -> Option<AbstractState> {
    let (spi, spi_log) = spi_write(addr, v, &a.spi, a.spi_log.clone(), &a.spi_env).ok()?;
    Some(AbstractState { spi, spi_log, ..a.clone() })
}

// Helpers over the memory image.

pub(crate) fn spi_from_cells(m: &MemoryState) -> Option<SpiState> {
    let mut s = SpiState::default();
    for i in 0..SpiState::REGS as u32 {
        s.set(RegAddr(i), m.spi_reg(RegAddr(i))?).ok()?;
    }
    Some(s)
}

/// One CPU access at cell level: pop an event, apply it to the registers
/// held in `m`, then read or write `addr`. Returns the read value.
fn cell_step(
    m: &mut MemoryState,
    a: &mut AbstractState,
    addr: RegAddr,
    write: Option<Word>,
) -> Option<Word> {
    let regs = spi_from_cells(m)?;
    regs.get(addr).ok()?;
    let (e, log) = next_event(&a.spi_env, std::mem::take(&mut a.spi_log)).ok()?;
    let mut s1 = delta_env_spi(e, &regs);
    let v = kappa_spi(addr, &s1).ok()?;
    if let Some(w) = write {
        s1.set(addr, w).ok()?;
    }
    a.spi = s1;
    a.spi_log = log;
    a.sync_regs(m);
    Some(v)
}

fn cells_master(m: &MemoryState) -> Option<bool> {
    Some(m.spi_reg(SPI_MS)? & 1 == 0)
}

// RegRW

pub fn regrw_high(_: &DriverConfig, call: &Call, a: &AbstractState) -> Option<(AbstractState, Ret)> {
    match *call {
        Call::RegRead(addr) => hs_read(a, addr).map(|(v, a)| (a, Ret::Word(v))),
        Call::RegWrite(v, addr) => hs_write(a, addr, v).map(|a| (a, Ret::Unit)),
        _ => None,
    }
}

pub fn regrw_low(
    _: &DriverConfig,
    call: &Call,
    m: &MemoryState,
    a: &AbstractState,
) -> Option<(MemoryState, AbstractState, Ret)> {
    let (mut m, mut a) = (m.clone(), a.clone());
    let ret = match *call {
        Call::RegRead(addr) => Ret::Word(cell_step(&mut m, &mut a, addr, None)?),
        Call::RegWrite(v, addr) => {
            cell_step(&mut m, &mut a, addr, Some(v))?;
            Ret::Unit
        }
        _ => return None,
    };
    Some((m, a, ret))
}

pub fn regrw_impl(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    match *call {
        Call::RegRead(addr) => low.call(Call::SpiBusRead(addr)),
        Call::RegWrite(v, addr) => low.call(Call::SpiBusWrite(addr, v)),
        other => Err(ExecError::BadCall { module: low.caller(), call: other }),
    }
}

// CH0EN: mcspi_enable_channel

pub fn ch0en_high(_: &DriverConfig, call: &Call, a: &AbstractState) -> Option<(AbstractState, Ret)> {
    if *call != Call::EnableChannel || a.spi.ms != SpiMode::Master {
        return None;
    }
    hs_write(a, CH0CTRL, ENABLE_CHANNEL).map(|a| (a, Ret::Unit))
}

pub fn ch0en_low(
    _: &DriverConfig,
    call: &Call,
    m: &MemoryState,
    a: &AbstractState,
) -> Option<(MemoryState, AbstractState, Ret)> {
    if *call != Call::EnableChannel || !cells_master(m)? {
        return None;
    }
    let (mut m, mut a) = (m.clone(), a.clone());
    cell_step(&mut m, &mut a, CH0CTRL, Some(ENABLE_CHANNEL))?;
    Some((m, a, Ret::Unit))
}

pub fn ch0en_impl(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    match call {
        Call::EnableChannel => low.call(Call::RegWrite(ENABLE_CHANNEL, CH0CTRL)),
        other => Err(ExecError::BadCall { module: low.caller(), call: *other }),
    }
}

// CH0SELECT

pub fn ch0select_high(
    cfg: &DriverConfig,
    call: &Call,
    a: &AbstractState,
) -> Option<(AbstractState, Ret)> {
    match *call {
        Call::SelectChannel(true) => {
            let a = hs_write(a, CH0CONF, CONF_SELECT)?;
            ch0en_high(cfg, &Call::EnableChannel, &a)
        }
        Call::SelectChannel(false) => hs_write(a, CH0CTRL, 0).map(|a| (a, Ret::Unit)),
        _ => None,
    }
}

pub fn ch0select_low(
    _: &DriverConfig,
    call: &Call,
    m: &MemoryState,
    a: &AbstractState,
) -> Option<(MemoryState, AbstractState, Ret)> {
    let (mut m, mut a) = (m.clone(), a.clone());
    match *call {
        Call::SelectChannel(true) => {
            if !cells_master(&m)? {
                return None;
            }
            cell_step(&mut m, &mut a, CH0CONF, Some(CONF_SELECT))?;
            cell_step(&mut m, &mut a, CH0CTRL, Some(ENABLE_CHANNEL))?;
        }
        Call::SelectChannel(false) => {
            cell_step(&mut m, &mut a, CH0CTRL, Some(0))?;
        }
        _ => return None,
    }
    Some((m, a, Ret::Unit))
}

pub fn ch0select_impl(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    match *call {
        Call::SelectChannel(true) => {
            low.call_unit(Call::RegWrite(CONF_SELECT, CH0CONF))?;
            low.call(Call::EnableChannel)
        }
        Call::SelectChannel(false) => low.call(Call::RegWrite(0, CH0CTRL)),
        other => Err(ExecError::BadCall { module: low.caller(), call: other }),
    }
}

// XFER: bounded-poll transfer

/// Closed form of the bounded poll loop. The loop writes `tx`, then polls
/// `RX_FULL` up to `k_poll` times with a delay after each miss. Poll `p`
/// sees the flag set iff it was already set or a `Recv` arrived among the
/// events consumed by the write and polls `0..=p`. On a hit the driver reads
/// `SPI_RX` and clears the flag: `p + 4` events in all. On a miss it has
/// consumed `k_poll + 1` events.
pub fn xfer_high(cfg: &DriverConfig, call: &Call, a: &AbstractState) -> Option<(AbstractState, Ret)> {
    let Call::Transfer(tx) = *call else { return None };
    if !a.spi.enabled() || !a.spi_log.is_prefix_of(&a.spi_env) {
        return None;
    }
    let k = cfg.k_poll as usize;
    let pending = a.spi_log.remaining(&a.spi_env);
    let ev = |i: usize| pending.get(i).copied().unwrap_or(SpiEvent::Null);
    let is_recv = |i: usize| matches!(ev(i), SpiEvent::Recv(_));

    let hit = (0..k).find(|&p| a.spi.rx_full || (0..=p + 1).any(is_recv));
    let used = match hit {
        Some(p) => p + 4,
        None => k + 1,
    };
    let consumed = &pending[..used.min(pending.len())];

    let mut spi = consumed.iter().fold(a.spi, |s, &e| delta_env_spi(e, &s));
    spi.tx = tx;
    let mut log = a.spi_log.as_slice().to_vec();
    log.extend_from_slice(consumed);
    let spi_log = EventLog::from_vec(log);

    let (ret, misses) = match hit {
        Some(p) => {
            let rx_at_read = (0..p + 3)
                .rev()
                .find_map(|i| match ev(i) {
                    SpiEvent::Recv(v) => Some(v),
                    _ => None,
                })
                .unwrap_or(a.spi.rx);
            spi.rx_full = false;
            (Some(rx_at_read), p)
        }
        None => (None, k),
    };
    let out = AbstractState {
        spi,
        spi_log,
        clock: a.clock + misses as u64 * cfg.poll_us as u64,
        ..a.clone()
    };
    Some((out, Ret::Xfer(ret)))
}

pub fn xfer_low(
    cfg: &DriverConfig,
    call: &Call,
    m: &MemoryState,
    a: &AbstractState,
) -> Option<(MemoryState, AbstractState, Ret)> {
    let Call::Transfer(tx) = *call else { return None };
    if m.spi_reg(CH0CTRL)? & 1 == 0 {
        return None;
    }
    let (mut m, mut a) = (m.clone(), a.clone());
    cell_step(&mut m, &mut a, SPI_TX, Some(tx))?;
    for _ in 0..cfg.k_poll {
        if cell_step(&mut m, &mut a, RX_FULL, None)? & 1 == 1 {
            let v = cell_step(&mut m, &mut a, SPI_RX, None)?;
            cell_step(&mut m, &mut a, RX_FULL, Some(0))?;
            return Some((m, a, Ret::Xfer(Some(v))));
        }
        a.clock += cfg.poll_us as u64;
    }
    Some((m, a, Ret::Xfer(None)))
}

pub fn xfer_impl(cfg: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    let Call::Transfer(tx) = *call else {
        return Err(ExecError::BadCall { module: low.caller(), call: *call });
    };
    low.call_unit(Call::RegWrite(tx, SPI_TX))?;
    for _ in 0..cfg.k_poll {
        if low.call_word(Call::RegRead(RX_FULL))? & 1 == 1 {
            let v = low.call_word(Call::RegRead(SPI_RX))?;
            low.call_unit(Call::RegWrite(0, RX_FULL))?;
            return Ok(Ret::Xfer(Some(v)));
        }
        low.call_unit(Call::Udelay(cfg.poll_us))?;
    }
    Ok(Ret::Xfer(None))
}

// IMUREAD

fn imu_defined(spi: &SpiState) -> bool {
    spi.enabled() && spi.ms == SpiMode::Master
}

pub fn imuread_high(
    cfg: &DriverConfig,
    call: &Call,
    a: &AbstractState,
) -> Option<(AbstractState, Ret)> {
    if *call != Call::ImuRead || !imu_defined(&a.spi) {
        return None;
    }
    let mut a = a.clone();
    let mut words = [0; 6];
    for (i, reg) in IMU_REGS.iter().enumerate() {
        let (a2, ret) = xfer_high(cfg, &Call::Transfer(READ_FLAG | reg), &a)?;
        a = a2;
        match ret {
            Ret::Xfer(Some(v)) => words[i] = v & 0xFFFF,
            _ => {
                let (a2, _) = ch0select_high(cfg, &Call::SelectChannel(false), &a)?;
                let (mut a2, _) = ch0select_high(cfg, &Call::SelectChannel(true), &a2)?;
                a2.imu.stale = true;
                let sample = ImuSample::from_words(&a2.imu.words, true);
                return Some((a2, Ret::Imu(sample)));
            }
        }
    }
    a.imu = super::state::ImuCache { words, stale: false };
    Some((a, Ret::Imu(ImuSample::from_words(&words, false))))
}

pub fn imuread_low(
    cfg: &DriverConfig,
    call: &Call,
    m: &MemoryState,
    a: &AbstractState,
) -> Option<(MemoryState, AbstractState, Ret)> {
    if *call != Call::ImuRead || !imu_defined(&spi_from_cells(m)?) {
        return None;
    }
    let mut m = m.clone();
    let mut a = a.clone();
    let mut fresh = [0; 6];
    for (i, reg) in IMU_REGS.iter().enumerate() {
        let (a2, ret) = xfer_high(cfg, &Call::Transfer(READ_FLAG | reg), &a)?;
        a = a2;
        match ret {
            Ret::Xfer(Some(v)) => fresh[i] = v & 0xFFFF,
            _ => {
                let (a2, _) = ch0select_high(cfg, &Call::SelectChannel(false), &a)?;
                let (a2, _) = ch0select_high(cfg, &Call::SelectChannel(true), &a2)?;
                a = a2;
                a.sync_regs(&mut m);
                m.set(scratch::IMU_STALE, 1)?;
                let words = std::array::from_fn(|j| m.get(scratch::IMU_LAST + j as u32).unwrap_or(0));
                return Some((m, a, Ret::Imu(ImuSample::from_words(&words, true))));
            }
        }
    }
    a.sync_regs(&mut m);
    for (i, w) in fresh.iter().enumerate() {
        m.set(scratch::IMU_LAST + i as u32, *w)?;
    }
    m.set(scratch::IMU_STALE, 0)?;
    Some((m, a, Ret::Imu(ImuSample::from_words(&fresh, false))))
}

pub fn imuread_impl(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    if *call != Call::ImuRead {
        return Err(ExecError::BadCall { module: low.caller(), call: *call });
    }
    let mut fresh = [0; 6];
    for (i, reg) in IMU_REGS.iter().enumerate() {
        match low.call(Call::Transfer(READ_FLAG | reg))? {
            Ret::Xfer(Some(v)) => fresh[i] = v & 0xFFFF,
            Ret::Xfer(None) => {
                // Re-selecting the channel resets the controller's transfer
                // state; the caller gets the previous sample, flagged.
                low.call_unit(Call::SelectChannel(false))?;
                low.call_unit(Call::SelectChannel(true))?;
                low.store(scratch::IMU_STALE, 1)?;
                return Ok(Ret::Imu(ImuSample::from_words(&load_imu(low)?, true)));
            }
            other => return Err(ExecError::BadReturn(other)),
        }
    }
    for (i, w) in fresh.iter().enumerate() {
        low.store(scratch::IMU_LAST + i as u32, *w)?;
    }
    low.store(scratch::IMU_STALE, 0)?;
    Ok(Ret::Imu(ImuSample::from_words(&fresh, false)))
}

fn load_imu(low: &Lower) -> Result<[Word; 6], ExecError> {
    let mut w = [0; 6];
    for (i, slot) in w.iter_mut().enumerate() {
        *slot = low.load(scratch::IMU_LAST + i as u32)?;
    }
    Ok(w)
}
