//! I2C bus model (7-bit addressing only).

use super::events::{next_event, EventList, EventLog, I2cEvent};
use super::{Bus, BusError, CpuOp, RegAddr, Word};
use serde::{Deserialize, Serialize};

/// The I2C controller's register file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct I2cState {
    pub oa: Word,
    pub sa: Word,
    pub rx_data: Word,
    pub tx_data: Word,
    pub con: Word,
    pub stat: Word,
    pub cnt: Word,
    pub buf: Word,
    pub irq_en: Word,
    pub sysc: Word,
}

impl I2cState {
    pub const REGS: usize = 10;

    fn field_mut(&mut self, addr: RegAddr) -> Result<&mut Word, BusError> {
        Ok(match addr.0 {
            0 => &mut self.oa,
            1 => &mut self.sa,
            2 => &mut self.rx_data,
            3 => &mut self.tx_data,
            4 => &mut self.con,
            5 => &mut self.stat,
            6 => &mut self.cnt,
            7 => &mut self.buf,
            8 => &mut self.irq_en,
            9 => &mut self.sysc,
            _ => return Err(BusError::UnknownRegister { bus: Bus::I2c, addr }),
        })
    }

    pub fn get(&self, addr: RegAddr) -> Result<Word, BusError> {
        let mut copy = *self;
        copy.field_mut(addr).map(|w| *w)
    }

    pub fn set(&mut self, addr: RegAddr, v: Word) -> Result<(), BusError> {
        *self.field_mut(addr)? = v;
        Ok(())
    }

    /// Register contents in index order.
    pub fn words(&self) -> [Word; Self::REGS] {
        [
            self.oa, self.sa, self.rx_data, self.tx_data, self.con, self.stat, self.cnt, self.buf,
            self.irq_en, self.sysc,
        ]
    }
}

pub fn delta_cpu_i2c(op: CpuOp, s: &I2cState) -> Result<I2cState, BusError> {
    let mut next = *s;
    match op {
        CpuOp::Input(addr) => {
            next.get(addr)?;
        }
        CpuOp::Output(addr, v) => next.set(addr, v)?,
    }
    Ok(next)
}

pub fn delta_env_i2c(e: I2cEvent, s: &I2cState) -> I2cState {
    match e {
        I2cEvent::Null | I2cEvent::Ack => *s,
        I2cEvent::Recv(val) => I2cState { rx_data: val, ..*s },
    }
}

pub fn kappa_i2c(addr: RegAddr, s: &I2cState) -> Result<Word, BusError> {
    s.get(addr)
}

pub fn i2c_read(
    addr: RegAddr,
    s: &I2cState,
    log: EventLog<I2cEvent>,
    env: &EventList<I2cEvent>,
) -> Result<(Word, I2cState, EventLog<I2cEvent>), BusError> {
    s.get(addr)?;
    let (e, log) = next_event(env, log)?;
    let s1 = delta_env_i2c(e, s);
    Ok((s1.get(addr)?, s1, log))
}

pub fn i2c_write(
    addr: RegAddr,
    v: Word,
    s: &I2cState,
    log: EventLog<I2cEvent>,
    env: &EventList<I2cEvent>,
) -> Result<(I2cState, EventLog<I2cEvent>), BusError> {
    s.get(addr)?;
    let (e, log) = next_event(env, log)?;
    let mut s1 = delta_env_i2c(e, s);
    s1.set(addr, v)?;
    Ok((s1, log))
}
