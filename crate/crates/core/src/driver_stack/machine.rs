//! Executes interface calls against a registry, resolving each call either
//! through a layer's implementation or through its high specification.

use super::call::{Call, Module, Ret};
use super::registry::{LayerSpec, Registry};
use super::state::{AbstractState, MemoryState, SCRATCH_BASE};
use super::state::scratch;
use crate::bus_model::{BusError, Word};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DriverConfig {
    /// Maximum number of status polls per transfer.
    pub k_poll: u32,
    /// Delay between polls, microseconds.
    pub poll_us: u32,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig { k_poll: 16, poll_us: 5 }
    }
}

pub type HighFn = fn(&DriverConfig, &Call, &AbstractState) -> Option<(AbstractState, Ret)>;
pub type LowFn =
    fn(&DriverConfig, &Call, &MemoryState, &AbstractState) -> Option<(MemoryState, AbstractState, Ret)>;
pub type ImplFn = fn(&DriverConfig, &Call, &mut Lower<'_, '_>) -> Result<Ret, ExecError>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum ExecError {
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error("{module} specification is undefined on this state")]
    Undefined { module: Module },
    #[error("{caller} may not call {callee}")]
    LayerViolation { caller: Module, callee: Module },
    #[error("no layer provides {0}")]
    NoSuchModule(Module),
    #[error("{module} cannot handle {call:?}")]
    BadCall { module: Module, call: Call },
    #[error("unexpected return value {0:?}")]
    BadReturn(Ret),
    #[error("address {addr:#x} is not driver scratch memory")]
    Memory { addr: u32 },
}

/// How calls to non-base modules are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolve {
    /// Every call runs its layer's high specification.
    Spec,
    /// Every call runs its layer's implementation, down to the buses.
    Impl,
    /// Only this module runs its implementation; everything else, including
    /// the calls it makes, runs high specifications.
    Linked(Module),
}

pub struct Machine<'r> {
    reg: &'r Registry,
    pub a: AbstractState,
    pub m: MemoryState,
    resolve: Resolve,
    trace: Option<Vec<Call>>,
}

impl<'r> Machine<'r> {
    pub fn new(reg: &'r Registry, a: AbstractState, m: MemoryState, resolve: Resolve) -> Self {
        Machine { reg, a, m, resolve, trace: None }
    }

    /// Start from `a` with memory equal to its image.
    pub fn from_abstract(reg: &'r Registry, a: AbstractState, resolve: Resolve) -> Self {
        let m = a.mirror();
        Machine::new(reg, a, m, resolve)
    }

    /// Record every dispatched call, nested ones included.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn trace(&self) -> &[Call] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn take_trace(&mut self) -> Vec<Call> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn registry(&self) -> &'r Registry {
        self.reg
    }

    pub fn config(&self) -> &'r DriverConfig {
        &self.reg.config
    }

    /// Run a top-level call (no caller, so no dependency check).
    pub fn exec(&mut self, call: Call) -> Result<Ret, ExecError> {
        self.dispatch(call)
    }

    /// Run `call` through `module`'s implementation as if that module were
    /// the caller, e.g. for driver paths kept outside the registry.
    pub fn lower(&mut self, module: Module) -> Result<Lower<'_, 'r>, ExecError> {
        let caller = self.reg.layer(module).ok_or(ExecError::NoSuchModule(module))?;
        Ok(Lower { machine: self, caller })
    }

    fn uses_impl(&self, module: Module) -> bool {
        match self.resolve {
            Resolve::Spec => false,
            Resolve::Impl => true,
            Resolve::Linked(m) => m == module,
        }
    }

    fn dispatch(&mut self, call: Call) -> Result<Ret, ExecError> {
        if let Some(t) = self.trace.as_mut() {
            t.push(call);
        }
        let module = call.module();
        if module.is_base() {
            return self.base(call);
        }
        let reg: &'r Registry = self.reg;
        let layer = reg.layer(module).ok_or(ExecError::NoSuchModule(module))?;
        if self.uses_impl(module) {
            let mut lower = Lower { machine: self, caller: layer };
            (layer.imp)(&reg.config, &call, &mut lower)
        } else {
            let (a2, ret) =
                (layer.high)(&self.reg.config, &call, &self.a).ok_or(ExecError::Undefined { module })?;
            let caches_changed = !a2.caches_eq(&self.a);
            self.a = a2;
            self.a.sync_regs(&mut self.m);
            if caches_changed {
                self.a.sync_caches(&mut self.m);
            }
            Ok(ret)
        }
    }

    fn base(&mut self, call: Call) -> Result<Ret, ExecError> {
        let p = &self.reg.platform;
        let a = &mut self.a;
        let ret = match call {
            Call::SpiBusRead(addr) => {
                let log = std::mem::take(&mut a.spi_log);
                let (v, s, log) = (p.spi_read)(addr, &a.spi, log, &a.spi_env)?;
                a.spi = s;
                a.spi_log = log;
                Ret::Word(v)
            }
            Call::SpiBusWrite(addr, v) => {
                let log = std::mem::take(&mut a.spi_log);
                let (s, log) = (p.spi_write)(addr, v, &a.spi, log, &a.spi_env)?;
                a.spi = s;
                a.spi_log = log;
                Ret::Unit
            }
            Call::I2cBusRead(addr) => {
                let log = std::mem::take(&mut a.i2c_log);
                let (v, s, log) = (p.i2c_read)(addr, &a.i2c, log, &a.i2c_env)?;
                a.i2c = s;
                a.i2c_log = log;
                Ret::Word(v)
            }
            Call::I2cBusWrite(addr, v) => {
                let log = std::mem::take(&mut a.i2c_log);
                let (s, log) = (p.i2c_write)(addr, v, &a.i2c, log, &a.i2c_env)?;
                a.i2c = s;
                a.i2c_log = log;
                Ret::Unit
            }
            Call::Udelay(us) => {
                a.clock += us as u64;
                Ret::Unit
            }
            other => return Err(ExecError::BadCall { module: other.module(), call: other }),
        };
        self.a.sync_regs(&mut self.m);
        Ok(ret)
    }
}

/// What an implementation sees: calls into the modules it depends on, and
/// its own scratch memory.
pub struct Lower<'m, 'r> {
    machine: &'m mut Machine<'r>,
    caller: &'r LayerSpec,
}

impl Lower<'_, '_> {
    pub fn caller(&self) -> Module {
        self.caller.module
    }

    pub fn call(&mut self, call: Call) -> Result<Ret, ExecError> {
        let callee = call.module();
        if !self.caller.depends.contains(&callee) {
            return Err(ExecError::LayerViolation { caller: self.caller.module, callee });
        }
        self.machine.dispatch(call)
    }

    pub fn call_word(&mut self, call: Call) -> Result<Word, ExecError> {
        match self.call(call)? {
            Ret::Word(w) => Ok(w),
            other => Err(ExecError::BadReturn(other)),
        }
    }

    pub fn call_unit(&mut self, call: Call) -> Result<(), ExecError> {
        match self.call(call)? {
            Ret::Unit => Ok(()),
            other => Err(ExecError::BadReturn(other)),
        }
    }

    pub fn load(&self, addr: u32) -> Result<Word, ExecError> {
        check_scratch(addr)?;
        self.machine.m.get(addr).ok_or(ExecError::Memory { addr })
    }

    pub fn store(&mut self, addr: u32, v: Word) -> Result<(), ExecError> {
        check_scratch(addr)?;
        self.machine.m.set(addr, v).ok_or(ExecError::Memory { addr })
    }

    /// Pending events on the SPI list. Used only by the unbounded polling
    /// path, which models a device that eventually recovers.
    pub fn spi_pending(&self) -> usize {
        let a = &self.machine.a;
        a.spi_log.remaining(&a.spi_env).len()
    }
}

fn check_scratch(addr: u32) -> Result<(), ExecError> {
    if (SCRATCH_BASE..SCRATCH_BASE + scratch::SLOTS as u32).contains(&addr) {
        Ok(())
    } else {
        Err(ExecError::Memory { addr })
    }
}
