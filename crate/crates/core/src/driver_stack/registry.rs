//! The layer registry: which modules exist, at which level, and what each
//! one may call.

use super::call::Module;
use super::i2c_layers::*;
use super::machine::{DriverConfig, HighFn, ImplFn, LowFn};
use super::spi_layers::*;
use super::state::{relate, stack_invariant, AbstractState, MemoryState};
use crate::bus_model::{
    i2c_read, i2c_write, spi_read, spi_write, BusError, EventList, EventLog, I2cEvent, I2cState,
    RegAddr, SpiEvent, SpiState, Word,
};
use serde::{Deserialize, Serialize};
use std::fmt;

pub type SpiReadFn = fn(
    RegAddr,
    &SpiState,
    EventLog<SpiEvent>,
    &EventList<SpiEvent>,
) -> Result<(Word, SpiState, EventLog<SpiEvent>), BusError>;
pub type SpiWriteFn = fn(
    RegAddr,
    Word,
    &SpiState,
    EventLog<SpiEvent>,
    &EventList<SpiEvent>,
) -> Result<(SpiState, EventLog<SpiEvent>), BusError>;
pub type I2cReadFn = fn(
    RegAddr,
    &I2cState,
    EventLog<I2cEvent>,
    &EventList<I2cEvent>,
) -> Result<(Word, I2cState, EventLog<I2cEvent>), BusError>;
pub type I2cWriteFn = fn(
    RegAddr,
    Word,
    &I2cState,
    EventLog<I2cEvent>,
    &EventList<I2cEvent>,
) -> Result<(I2cState, EventLog<I2cEvent>), BusError>;
pub type RelFn = fn(&AbstractState, &MemoryState) -> bool;
pub type InvFn = fn(&AbstractState) -> bool;

/// The bus hardware the bottom layers talk to.
#[derive(Clone, Copy)]
pub struct Platform {
    pub spi_read: SpiReadFn,
    pub spi_write: SpiWriteFn,
    pub i2c_read: I2cReadFn,
    pub i2c_write: I2cWriteFn,
}

impl Platform {
    pub fn canonical() -> Self {
        Platform { spi_read, spi_write, i2c_read, i2c_write }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stack {
    Spi,
    I2c,
}

impl Stack {
    pub fn bus_module(self) -> Module {
        match self {
            Stack::Spi => Module::SpiBus,
            Stack::I2c => Module::I2cBus,
        }
    }
}

#[derive(Clone)]
pub struct LayerSpec {
    pub name: &'static str,
    pub level: u32,
    pub stack: Stack,
    /// The module this layer adds.
    pub module: Module,
    /// Modules the implementation may call.
    pub depends: Vec<Module>,
    pub high: HighFn,
    pub low: LowFn,
    pub imp: ImplFn,
    pub relation: RelFn,
    pub invariant: InvFn,
}

impl fmt::Debug for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LayerSpec")
            .field("name", &self.name)
            .field("level", &self.level)
            .field("module", &self.module)
            .field("depends", &self.depends)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("module {0} is provided by more than one layer")]
    DuplicateModule(Module),
    #[error("layer {layer} depends on {dep}, which no layer provides")]
    MissingDependency { layer: &'static str, dep: Module },
    #[error("layer {layer} (level {level}) depends on {dep} at level {dep_level}")]
    NotDownward { layer: &'static str, level: u32, dep: Module, dep_level: u32 },
    #[error("layer {0} sits at level 0, which is reserved for the hardware")]
    LevelZero(&'static str),
}

#[derive(Clone)]
pub struct Registry {
    pub name: String,
    pub platform: Platform,
    pub layers: Vec<LayerSpec>,
    pub config: DriverConfig,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("name", &self.name)
            .field("layers", &self.layers)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

fn layer(
    name: &'static str,
    level: u32,
    stack: Stack,
    module: Module,
    depends: &[Module],
    (high, low, imp): (HighFn, LowFn, ImplFn),
) -> LayerSpec {
    LayerSpec {
        name,
        level,
        stack,
        module,
        depends: depends.to_vec(),
        high,
        low,
        imp,
        relation: relate,
        invariant: stack_invariant,
    }
}

impl Registry {
    /// The shipped driver stack.
    pub fn shipped(config: DriverConfig) -> Self {
        use Module::*;
        let layers = vec![
            layer("DSpiInOut", 1, Stack::Spi, RegRw, &[SpiBus], (regrw_high, regrw_low, regrw_impl)),
            layer("DSpiEnChannel", 2, Stack::Spi, Ch0En, &[RegRw], (ch0en_high, ch0en_low, ch0en_impl)),
            layer(
                "DSpiSelChannel",
                3,
                Stack::Spi,
                Ch0Select,
                &[Ch0En, RegRw],
                (ch0select_high, ch0select_low, ch0select_impl),
            ),
            layer("DSpiXfer", 4, Stack::Spi, Xfer, &[RegRw, Timer], (xfer_high, xfer_low, xfer_impl)),
            layer(
                "DSpiImu",
                5,
                Stack::Spi,
                ImuRead,
                &[Xfer, Ch0Select],
                (imuread_high, imuread_low, imuread_impl),
            ),
            layer("DI2cInOut", 1, Stack::I2c, I2cRw, &[I2cBus], (i2crw_high, i2crw_low, i2crw_impl)),
            layer("DI2cAddr", 2, Stack::I2c, MagAddr, &[I2cRw], (magaddr_high, magaddr_low, magaddr_impl)),
            layer(
                "DI2cMag",
                3,
                Stack::I2c,
                MagRead,
                &[MagAddr, I2cRw],
                (magread_high, magread_low, magread_impl),
            ),
        ];
        Registry { name: "shipped".into(), platform: Platform::canonical(), layers, config }
    }

    pub fn empty(name: &str) -> Self {
        Registry {
            name: name.into(),
            platform: Platform::canonical(),
            layers: Vec::new(),
            config: DriverConfig::default(),
        }
    }

    pub fn layer(&self, module: Module) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.module == module)
    }

    pub fn layer_by_name(&self, name: &str) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn layer_mut(&mut self, module: Module) -> Option<&mut LayerSpec> {
        self.layers.iter_mut().find(|l| l.module == module)
    }

    /// Hardware modules are level 0.
    pub fn level_of(&self, module: Module) -> Option<u32> {
        if module.is_base() {
            Some(0)
        } else {
            self.layer(module).map(|l| l.level)
        }
    }

    /// Every dependency must exist and sit strictly lower, which also makes
    /// the call graph acyclic.
    pub fn validate(&self) -> Result<(), RegistryError> {
        for (i, l) in self.layers.iter().enumerate() {
            if l.level == 0 {
                return Err(RegistryError::LevelZero(l.name));
            }
            if self.layers[..i].iter().any(|o| o.module == l.module) {
                return Err(RegistryError::DuplicateModule(l.module));
            }
            for &dep in &l.depends {
                let dep_level = self
                    .level_of(dep)
                    .ok_or(RegistryError::MissingDependency { layer: l.name, dep })?;
                if dep_level >= l.level {
                    return Err(RegistryError::NotDownward {
                        layer: l.name,
                        level: l.level,
                        dep,
                        dep_level,
                    });
                }
            }
        }
        Ok(())
    }

    /// Layers of one stack, bottom first.
    pub fn stack(&self, stack: Stack) -> Vec<&LayerSpec> {
        let mut v: Vec<_> = self.layers.iter().filter(|l| l.stack == stack).collect();
        v.sort_by_key(|l| l.level);
        v
    }

    /// Modules callable by a program running on top of `upper`: its own
    /// module and everything below it in the same stack.
    pub fn interface(&self, upper: &LayerSpec) -> Vec<Module> {
        self.stack(upper.stack)
            .into_iter()
            .filter(|l| l.level <= upper.level)
            .map(|l| l.module)
            .collect()
    }

    /// `LEVEL<TAB>LAYER<TAB>MODULE<TAB>DEPENDS`, grouped by stack, bottom
    /// first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for stack in [Stack::Spi, Stack::I2c] {
            for l in self.stack(stack) {
                let deps: Vec<_> = l.depends.iter().map(|d| d.name()).collect();
                out.push_str(&format!("{}\t{}\t{}\t{}\n", l.level, l.name, l.module, deps.join(",")));
            }
        }
        out
    }
}
