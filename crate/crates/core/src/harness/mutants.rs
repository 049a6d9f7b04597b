//! Seeded bugs. Each one is a small edit to the shipped registry that the
//! checker must reject.

use super::report::{run_all_reusing, Report, RunOptions};
use super::replay::{replay, ReplayStatus};
use super::verdict::HarnessError;
use crate::bus_model::regmap::spi_reg::*;
use crate::bus_model::{delta_env_spi, next_event, EventList, EventLog, RegAddr, SpiEvent, SpiState, Word};
use crate::bus_model::BusError;
use crate::driver_stack::machine::{DriverConfig, ExecError, Lower};
use crate::driver_stack::state::{AbstractState, MemoryState};
use crate::driver_stack::{spi_layers, Call, LayerSpec, Module, Registry, Ret, Stack};

/// The part of the stack a mutant edits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Touch {
    Layer(Module),
    SpiBus,
}

pub struct Mutant {
    pub name: &'static str,
    pub description: &'static str,
    pub touches: Touch,
    apply: fn(&mut Registry),
}

impl Mutant {
    pub fn registry(&self, config: DriverConfig) -> Registry {
        let mut r = Registry::shipped(config);
        (self.apply)(&mut r);
        r.name = self.name.to_string();
        r
    }

    /// Layers whose checks cannot be affected by this mutant: other stacks,
    /// and layers strictly below the edited one.
    pub fn unaffected(&self, shipped: &Registry, layer: &LayerSpec) -> bool {
        match self.touches {
            Touch::SpiBus => layer.stack != Stack::Spi,
            Touch::Layer(m) => match shipped.layer(m) {
                Some(t) => layer.stack != t.stack || layer.level < t.level,
                None => false,
            },
        }
    }
}

fn set_impl(r: &mut Registry, m: Module, f: crate::driver_stack::machine::ImplFn) {
    r.layer_mut(m).expect("shipped layer").imp = f;
}

fn wrong_register(_: &DriverConfig, _: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    low.call(Call::RegWrite(ENABLE_CHANNEL, CH0CONF))
}

fn dropped_write(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    match call {
        Call::SelectChannel(true) => low.call(Call::EnableChannel),
        _ => low.call(Call::RegWrite(0, CH0CTRL)),
    }
}

fn swapped_args(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    match *call {
        Call::RegRead(addr) => low.call(Call::SpiBusRead(addr)),
        Call::RegWrite(v, addr) => low.call(Call::SpiBusWrite(RegAddr(v), addr.0)),
        other => Err(ExecError::BadCall { module: low.caller(), call: other }),
    }
}

fn skipped_layer(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    match call {
        Call::SelectChannel(true) => {
            low.call_unit(Call::SpiBusWrite(CH0CONF, CONF_SELECT))?;
            low.call(Call::EnableChannel)
        }
        _ => low.call(Call::RegWrite(0, CH0CTRL)),
    }
}

fn truncating_high(cfg: &DriverConfig, call: &Call, a: &AbstractState) -> Option<(AbstractState, Ret)> {
    let (mut a, r) = spi_layers::ch0en_high(cfg, call, a)?;
    a.spi_log.truncate_front();
    Some((a, r))
}

fn read_without_env(
    addr: RegAddr,
    s: &SpiState,
    log: EventLog<SpiEvent>,
    env: &EventList<SpiEvent>,
) -> Result<(Word, SpiState, EventLog<SpiEvent>), BusError> {
    let v = s.get(addr)?;
    let (_, log) = next_event(env, log)?;
    Ok((v, *s, log))
}

fn read_kappa_first(
    addr: RegAddr,
    s: &SpiState,
    log: EventLog<SpiEvent>,
    env: &EventList<SpiEvent>,
) -> Result<(Word, SpiState, EventLog<SpiEvent>), BusError> {
    let v = s.get(addr)?;
    let (e, log) = next_event(env, log)?;
    Ok((v, delta_env_spi(e, s), log))
}

/// Polls until the flag is set. The cap only keeps the harness from
/// hanging on a device that never answers; it is far above `k_poll`.
fn unbounded_poll(cfg: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    const CUTOFF: u32 = 1000;
    let Call::Transfer(tx) = *call else {
        return Err(ExecError::BadCall { module: low.caller(), call: *call });
    };
    low.call_unit(Call::RegWrite(tx, SPI_TX))?;
    for _ in 0..CUTOFF {
        if low.call_word(Call::RegRead(RX_FULL))? & 1 == 1 {
            let v = low.call_word(Call::RegRead(SPI_RX))?;
            low.call_unit(Call::RegWrite(0, RX_FULL))?;
            return Ok(Ret::Xfer(Some(v)));
        }
        low.call_unit(Call::Udelay(cfg.poll_us))?;
    }
    Ok(Ret::Xfer(None))
}

fn low_writes_tx(
    cfg: &DriverConfig,
    call: &Call,
    m: &MemoryState,
    a: &AbstractState,
) -> Option<(MemoryState, AbstractState, Ret)> {
    if *call != Call::EnableChannel {
        return None;
    }
    spi_layers::regrw_low(cfg, &Call::RegWrite(ENABLE_CHANNEL, SPI_TX), m, a)
}

fn select_wrong_register(_: &DriverConfig, call: &Call, low: &mut Lower) -> Result<Ret, ExecError> {
    match call {
        Call::SelectChannel(true) => {
            low.call_unit(Call::RegWrite(CONF_SELECT, CH0_FORCE))?;
            low.call(Call::EnableChannel)
        }
        _ => low.call(Call::RegWrite(0, CH0CTRL)),
    }
}

pub static MUTANTS: &[Mutant] = &[
    Mutant {
        name: "wrong_register",
        description: "CH0EN writes the enable value to CH0CONF",
        touches: Touch::Layer(Module::Ch0En),
        apply: |r| set_impl(r, Module::Ch0En, wrong_register),
    },
    Mutant {
        name: "dropped_write",
        description: "CH0SELECT omits the CH0CONF write",
        touches: Touch::Layer(Module::Ch0Select),
        apply: |r| set_impl(r, Module::Ch0Select, dropped_write),
    },
    Mutant {
        name: "swapped_args",
        description: "RegRW passes value and address to the bus in the wrong order",
        touches: Touch::Layer(Module::RegRw),
        apply: |r| set_impl(r, Module::RegRw, swapped_args),
    },
    Mutant {
        name: "skipped_layer",
        description: "CH0SELECT writes the bus directly instead of going through RegRW",
        touches: Touch::Layer(Module::Ch0Select),
        apply: |r| set_impl(r, Module::Ch0Select, skipped_layer),
    },
    Mutant {
        name: "log_truncation",
        description: "CH0EN high spec drops the oldest event-log entry",
        touches: Touch::Layer(Module::Ch0En),
        apply: |r| r.layer_mut(Module::Ch0En).expect("shipped layer").high = truncating_high,
    },
    Mutant {
        name: "missing_env_transition",
        description: "SPI bus read consumes an event without applying it",
        touches: Touch::SpiBus,
        apply: |r| r.platform.spi_read = read_without_env,
    },
    Mutant {
        name: "reordered_read",
        description: "SPI bus read projects the register before the environment step",
        touches: Touch::SpiBus,
        apply: |r| r.platform.spi_read = read_kappa_first,
    },
    Mutant {
        name: "unbounded_poll",
        description: "XFER polls without the k_poll limit while claiming the bounded spec",
        touches: Touch::Layer(Module::Xfer),
        apply: |r| set_impl(r, Module::Xfer, unbounded_poll),
    },
    Mutant {
        name: "low_writes_tx",
        description: "CH0EN low spec writes SPI_TX instead of the enable bit",
        touches: Touch::Layer(Module::Ch0En),
        apply: |r| r.layer_mut(Module::Ch0En).expect("shipped layer").low = low_writes_tx,
    },
    Mutant {
        name: "select_wrong_register",
        description: "CH0SELECT writes its configuration to CH0_FORCE",
        touches: Touch::Layer(Module::Ch0Select),
        apply: |r| set_impl(r, Module::Ch0Select, select_wrong_register),
    },
];

pub fn by_name(name: &str) -> Option<&'static Mutant> {
    MUTANTS.iter().find(|m| m.name == name)
}

/// Rebuild the registry a report or counterexample was produced from.
pub fn registry_by_name(name: &str, config: DriverConfig) -> Option<Registry> {
    if name == "shipped" {
        Some(Registry::shipped(config))
    } else {
        by_name(name).map(|m| m.registry(config))
    }
}

#[derive(Debug, Clone)]
pub struct MutantResult {
    pub name: &'static str,
    pub description: &'static str,
    pub report: Report,
    /// At least one check failed.
    pub killed: bool,
    /// Every counterexample replays to the same violation.
    pub replayed: bool,
}

/// Run every mutant. `baseline` is the shipped stack's report under the
/// same options; layers a mutant cannot affect reuse its records.
pub fn run_mutants(
    config: DriverConfig,
    opts: &RunOptions,
    baseline: &Report,
) -> Result<Vec<MutantResult>, HarnessError> {
    let shipped = Registry::shipped(config);
    MUTANTS
        .iter()
        .map(|mu| {
            let reuse = |l: &LayerSpec| mu.unaffected(&shipped, l);
            let report = run_all_reusing(&mu.registry(config), opts, Some((baseline, &reuse)))?;
            let killed = report.any_fail();
            let replayed = report
                .counterexamples()
                .all(|c| matches!(replay(c), Ok(ReplayStatus::Confirmed { .. })));
            Ok(MutantResult { name: mu.name, description: mu.description, report, killed, replayed })
        })
        .collect()
}
