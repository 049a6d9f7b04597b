//! I2C driver layers for the magnetometer: register access, device
//! addressing and sample read.

use super::call::{Call, Ret};
use super::machine::{DriverConfig, ExecError, Lower};
use super::state::{scratch, AbstractState, MagCache, MemoryState};
use crate::bus_model::regmap::i2c_reg::*;
use crate::bus_model::{delta_env_i2c, i2c_read, i2c_write, kappa_i2c, next_event, I2cState, RegAddr, Word};

/// HMC5883L 7-bit slave address.
pub const MAG_ADDR: Word = 0x1E;
/// First data output register (X MSB).
pub const MAG_DATA_REG: Word = 0x03;
pub const MAG_BYTES: Word = 6;

fn hs_read(a: &AbstractState, addr: RegAddr) -> Option<(Word, AbstractState)> {
    let (v, i2c, i2c_log) = i2c_read(addr, &a.i2c, a.i2c_log.clone(), &a.i2c_env).ok()?;
    Some((v, AbstractState { i2c, i2c_log, ..a.clone() }))
}

fn hs_write(a: &AbstractState, addr: RegAddr, v: Word) -> Option<AbstractState> {
    let (i2c, i2c_log) = i2c_write(addr, v, &a.i2c, a.i2c_log.clone(), &a.i2c_env).ok()?;
    Some(AbstractState { i2c, i2c_log, ..a.clone() })
}

fn i2c_from_cells(m: &MemoryState) -> Option<I2cState> {
    let mut s = I2cState::default();
    for i in 0..I2cState::REGS as u32 {
        s.set(RegAddr(i), m.i2c_reg(RegAddr(i))?).ok()?;
    }
    Some(s)
}

fn cell_step(
    m: &mut MemoryState,
    a: &mut AbstractState,
    addr: RegAddr,
    write: Option<Word>,
) -> Option<Word> {
    let regs = i2c_from_cells(m)?;
    regs.get(addr).ok()?;
    let (e, log) = next_event(&a.i2c_env, std::mem::take(&mut a.i2c_log)).ok()?;
    let mut s1 = delta_env_i2c(e, &regs);
    let v = kappa_i2c(addr, &s1).ok()?;
    if let Some(w) = write {
        s1.set(addr, w).ok()?;
    }
    a.i2c = s1;
    a.i2c_log = log;
    a.sync_regs(m);
    Some(v)
}

/// Data registers arrive X, Z, Y, each MSB first.
fn assemble(bytes: &[Word; 6]) -> [Word; 3] {
    let w = |hi: Word, lo: Word| ((hi & 0xFF) << 8) | (lo & 0xFF);
    [w(bytes[0], bytes[1]), w(bytes[4], bytes[5]), w(bytes[2], bytes[3])]
}

fn as_counts(words: &[Word; 3]) -> [i16; 3] {
    words.map(|w| w as u16 as i16)
}

// I2CRW

pub fn i2crw_high(_: &DriverConfig, call: &Call, a: &AbstractState) -> Option<(AbstractState, Ret)> {
    match *call {
        Call::I2cRegRead(addr) => hs_read(a, addr).map(|(v, a)| (a, Ret::Word(v))),
        Call::I2cRegWrite(v, addr) => hs_write(a, addr, v).map(|a| (a, Ret::Unit)),
        _ => None,
    }
}

pub fn i2crw_low(
    _: &DriverConfig,
    call: &Call,
    m: &MemoryState,
    a: &AbstractState,
) -> Option<(MemoryState, AbstractState, Ret)> {
    let (mut m, mut a) = (m.clone(), a.clone());
    let ret = match *call {
        Call::I2cRegRead(addr) => Ret::Word(cell_step(&mut m, &mut a, addr, None)?),
        Call::I2cRegWrite(v, addr) => {
            cell_step(&mut m, &mut a, addr, Some(v))?;
            Ret::Unit
        }
        _ => return None,
    };
    Some((m, a, ret))
}

pub fn i2crw_impl(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    match *call {
        Call::I2cRegRead(addr) => low.call(Call::I2cBusRead(addr)),
        Call::I2cRegWrite(v, addr) => low.call(Call::I2cBusWrite(addr, v)),
        other => Err(ExecError::BadCall { module: low.caller(), call: other }),
    }
}

// MAGADDR: point the controller at the magnetometer and a register

pub fn magaddr_high(_: &DriverConfig, call: &Call, a: &AbstractState) -> Option<(AbstractState, Ret)> {
    let Call::MagAddress(reg) = *call else { return None };
    let a = hs_write(a, SA, MAG_ADDR)?;
    let a = hs_write(&a, CNT, MAG_BYTES)?;
    hs_write(&a, TX_DATA, reg).map(|a| (a, Ret::Unit))
}

pub fn magaddr_low(
    _: &DriverConfig,
    call: &Call,
    m: &MemoryState,
    a: &AbstractState,
) -> Option<(MemoryState, AbstractState, Ret)> {
    let Call::MagAddress(reg) = *call else { return None };
    let (mut m, mut a) = (m.clone(), a.clone());
    for (addr, v) in [(SA, MAG_ADDR), (CNT, MAG_BYTES), (TX_DATA, reg)] {
        cell_step(&mut m, &mut a, addr, Some(v))?;
    }
    Some((m, a, Ret::Unit))
}

pub fn magaddr_impl(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    let Call::MagAddress(reg) = *call else {
        return Err(ExecError::BadCall { module: low.caller(), call: *call });
    };
    low.call_unit(Call::I2cRegWrite(MAG_ADDR, SA))?;
    low.call_unit(Call::I2cRegWrite(MAG_BYTES, CNT))?;
    low.call(Call::I2cRegWrite(reg, TX_DATA))
}

// MAGREAD

pub fn magread_high(cfg: &DriverConfig, call: &Call, a: &AbstractState) -> Option<(AbstractState, Ret)> {
    if *call != Call::MagRead {
        return None;
    }
    let (mut a, _) = magaddr_high(cfg, &Call::MagAddress(MAG_DATA_REG), a)?;
    let mut bytes = [0; 6];
    for b in bytes.iter_mut() {
        let (v, a2) = hs_read(&a, RX_DATA)?;
        *b = v;
        a = a2;
    }
    let words = assemble(&bytes);
    a.mag = MagCache { words };
    Some((a, Ret::Mag(as_counts(&words))))
}

pub fn magread_low(
    cfg: &DriverConfig,
    call: &Call,
    m: &MemoryState,
    a: &AbstractState,
) -> Option<(MemoryState, AbstractState, Ret)> {
    if *call != Call::MagRead {
        return None;
    }
    let (mut a, _) = magaddr_high(cfg, &Call::MagAddress(MAG_DATA_REG), a)?;
    let mut m = m.clone();
    a.sync_regs(&mut m);
    let mut bytes = [0; 6];
    for b in bytes.iter_mut() {
        *b = cell_step(&mut m, &mut a, RX_DATA, None)?;
    }
    let words = assemble(&bytes);
    for (i, w) in words.iter().enumerate() {
        m.set(scratch::MAG_LAST + i as u32, *w)?;
    }
    Some((m, a, Ret::Mag(as_counts(&words))))
}

pub fn magread_impl(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    if *call != Call::MagRead {
        return Err(ExecError::BadCall { module: low.caller(), call: *call });
    }
    low.call_unit(Call::MagAddress(MAG_DATA_REG))?;
    let mut bytes = [0; 6];
    for b in bytes.iter_mut() {
        *b = low.call_word(Call::I2cRegRead(RX_DATA))?;
    }
    let words = assemble(&bytes);
    for (i, w) in words.iter().enumerate() {
        low.store(scratch::MAG_LAST + i as u32, *w)?;
    }
    Ok(Ret::Mag(as_counts(&words)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_order() {
        let bytes = [0x01, 0x02, 0x03, 0x04, 0x05, 0x06];
        assert_eq!(assemble(&bytes), [0x0102, 0x0506, 0x0304]);
        assert_eq!(as_counts(&[0xFFFF, 1417, 0x8000]), [-1, 1417, i16::MIN]);
    }
}
